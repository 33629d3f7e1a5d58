//! Gnuplot scripts for an output directory.

use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("no plottable output in {dir}; expected one of: {}", expected.join(", "))]
pub struct MissingOutputs {
    pub dir: String,
    pub expected: Vec<&'static str>,
}

const KNOWN: [&str; 5] = [
    "stability.csv",
    "diagnostics.csv",
    "sweep.csv",
    "convergence.csv",
    "poisson.csv",
];

/// Builds a script plotting every known CSV present in `dir`. Output is a
/// pure function of which files exist.
pub fn emit_plots(dir: &Path) -> Result<String, MissingOutputs> {
    let present: Vec<&str> = KNOWN.into_iter().filter(|f| dir.join(f).is_file()).collect();
    if present.is_empty() {
        return Err(MissingOutputs {
            dir: dir.display().to_string(),
            expected: KNOWN.to_vec(),
        });
    }
    let mut s = String::from("set datafile separator ','\nset key autotitle columnhead\nset grid\n");
    let page = |s: &mut String, title: &str| {
        write!(s, "\nset title '{title}'\n").unwrap();
    };
    for f in present {
        match f {
            "stability.csv" => {
                page(&mut s, "stability functional");
                s.push_str("set logscale y\nset xlabel 't'\n");
                s.push_str("plot 'stability.csv' using 1:2 with lines, '' using 1:3 with lines, '' using 1:4 with lines, '' using 1:5 with lines\n");
                s.push_str("unset logscale y\n");
                page(&mut s, "dissipation");
                s.push_str("plot 'stability.csv' using 1:6 with lines\n");
                page(&mut s, "cumulative dissipation");
                s.push_str("plot 'stability.csv' using 1:7 with lines\n");
            }
            "diagnostics.csv" => {
                page(&mut s, "diagnostics");
                s.push_str("set xlabel 't'\n");
                s.push_str("plot 'diagnostics.csv' using 1:2 with lines, '' using 1:3 with lines, '' using 1:4 with lines, '' using 1:6 with lines, '' using 1:8 with lines\n");
            }
            "sweep.csv" => {
                page(&mut s, "perturbation sweep");
                s.push_str("set logscale xy\nset xlabel 'eps'\n");
                s.push_str("plot 'sweep.csv' using 1:4 with linespoints, '' using 1:3 with linespoints\n");
                s.push_str("unset logscale xy\n");
            }
            "convergence.csv" => {
                page(&mut s, "manufactured solution errors");
                s.push_str("set logscale xy\nset xlabel 'h'\n");
                s.push_str("plot 'convergence.csv' using 2:4 with linespoints, '' using 2:5 with linespoints\n");
                s.push_str("unset logscale xy\n");
            }
            _ => {
                page(&mut s, "Poisson eigenfunction error");
                s.push_str("set logscale xy\nset xlabel 'h'\n");
                s.push_str("plot 'poisson.csv' using 2:3 with linespoints\n");
                s.push_str("unset logscale xy\n");
            }
        }
    }
    Ok(s)
}
