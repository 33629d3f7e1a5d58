//! Sampling probe for finite `(gamma, 1)`-Lipschitz continuity:
//!
//! ```text
//! |f(y1,z1) - f(y2,z2)| <= C(a1,a2) (|y1^gamma - y2^gamma| + |z1 - z2|)
//! ```
//!
//! on `[0,a1] x [0,a2]`. The first argument binds to `u` (alias `y`), the
//! second to `v`. A probe can only falsify or build confidence; the verdict
//! type reflects that.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::exprs::{power, Bindings, Expr, ExprError, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Plausible,
    Diverging,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplePoint {
    pub y: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzVerdict {
    pub gamma: f64,
    pub a1: f64,
    pub a2: f64,
    pub estimated_constant: f64,
    /// `(pair separation scale, max ratio at that scale)`, coarse to fine.
    pub max_ratio_trace: Vec<(f64, f64)>,
    pub verdict: Verdict,
    pub witness_pair: (SamplePoint, SamplePoint),
    /// Set when evaluation failed or overflowed at the witness.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzOptions {
    /// Total number of sampled pairs.
    pub budget: usize,
    pub seed: u64,
    /// Number of decades of pair separation probed, starting at 1e-1.
    pub scales: usize,
}

impl Default for LipschitzOptions {
    fn default() -> Self {
        LipschitzOptions {
            budget: 20_000,
            seed: 0x5eed,
            scales: 8,
        }
    }
}

/// Growth factor per decade that counts as divergence, with room for
/// rounding in the scale arithmetic.
const DIVERGENCE_FACTOR: f64 = 10.0 * (1.0 - 1e-9);
const DIVERGENCE_RUN: usize = 3;

struct Probe<'a> {
    f: &'a Expr,
    gamma: f64,
    best: f64,
    witness: (SamplePoint, SamplePoint),
    failure: Option<String>,
}

impl Probe<'_> {
    fn eval(&self, p: SamplePoint) -> Result<f64, ExprError> {
        let b = Bindings::new().with(Var::U, p.y).with(Var::Y, p.y).with(Var::V, p.z);
        self.f.eval(&b)
    }

    /// Ratio for one pair; `None` when the denominator vanishes.
    fn ratio(&mut self, p: SamplePoint, q: SamplePoint) -> Option<f64> {
        let denom = (power(p.y, self.gamma) - power(q.y, self.gamma)).abs() + (p.z - q.z).abs();
        if denom == 0.0 {
            return None;
        }
        let r = match (self.eval(p), self.eval(q)) {
            (Ok(fp), Ok(fq)) => {
                let r = (fp - fq).abs() / denom;
                if r.is_finite() {
                    r
                } else {
                    self.fail(p, q, format!("non-finite ratio {r}"));
                    return Some(f64::INFINITY);
                }
            }
            (Err(e), _) | (_, Err(e)) => {
                self.fail(p, q, e.to_string());
                return Some(f64::INFINITY);
            }
        };
        if r > self.best {
            self.best = r;
            self.witness = (p, q);
        }
        Some(r)
    }

    fn fail(&mut self, p: SamplePoint, q: SamplePoint, why: String) {
        if self.failure.is_none() {
            self.failure = Some(why);
            self.best = f64::INFINITY;
            self.witness = (p, q);
        }
    }
}

/// Deterministic for fixed `options.seed`.
///
/// Pairs are drawn uniformly on the box, near the diagonal `y1 = y2` and
/// near the degenerate corner `y = 0`, one family per separation scale
/// `10^-k`. The verdict is `Diverging` when the per-scale maximum grows by at
/// least 10x per decade over three consecutive decades, or when evaluation
/// fails.
pub fn check_finite_gamma_lipschitz(
    f: &Expr,
    gamma: f64,
    a1: f64,
    a2: f64,
    options: &LipschitzOptions,
) -> Result<LipschitzVerdict, ExprError> {
    if let Some(v) = f
        .variables()
        .into_iter()
        .find(|v| !matches!(v, Var::U | Var::Y | Var::V))
    {
        return Err(ExprError::Unbound(v));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let origin = SamplePoint { y: 0.0, z: 0.0 };
    let mut probe = Probe {
        f,
        gamma,
        best: 0.0,
        witness: (origin, origin),
        failure: None,
    };
    let scales = options.scales.max(DIVERGENCE_RUN + 1);
    let global = (options.budget / 3).max(1);
    let per_scale = ((options.budget - global.min(options.budget)) / scales).max(8);
    let corner_grid = (per_scale / 4).max(2);

    for _ in 0..global {
        let p = SamplePoint {
            y: rng.gen_range(0.0..=a1),
            z: rng.gen_range(0.0..=a2),
        };
        let q = SamplePoint {
            y: rng.gen_range(0.0..=a1),
            z: rng.gen_range(0.0..=a2),
        };
        probe.ratio(p, q);
    }

    let mut trace = Vec::with_capacity(scales);
    for k in 1..=scales {
        let s = 10f64.powi(-(k as i32));
        let mut scale_max: f64 = 0.0;
        let mut record = |r: Option<f64>| {
            if let Some(r) = r {
                scale_max = scale_max.max(r);
            }
        };
        // corner pairs: y1 on a fixed sub-grid of [0, s a1], y2 = 0, same z
        for j in 0..corner_grid {
            let theta = (j + 1) as f64 / corner_grid as f64;
            let z = rng.gen_range(0.0..=a2);
            let p = SamplePoint { y: a1 * s * theta, z };
            record(probe.ratio(p, SamplePoint { y: 0.0, z }));
        }
        // corner pairs with both points near y = 0 and a small z offset
        for _ in 0..corner_grid {
            let z = rng.gen_range(0.0..=a2);
            let p = SamplePoint {
                y: a1 * s * rng.gen::<f64>(),
                z,
            };
            let q = SamplePoint {
                y: a1 * s * rng.gen::<f64>(),
                z: (z + a2 * s * rng.gen_range(-1.0..=1.0)).clamp(0.0, a2),
            };
            record(probe.ratio(p, q));
        }
        // near-diagonal pairs anywhere in the box
        let diag = per_scale.saturating_sub(2 * corner_grid).max(2);
        for i in 0..diag {
            let y = rng.gen_range(0.0..=a1);
            let z = rng.gen_range(0.0..=a2);
            let p = SamplePoint { y, z };
            let dz = if i % 2 == 0 {
                0.0
            } else {
                a2 * s * rng.gen_range(-1.0..=1.0)
            };
            let q = SamplePoint {
                y: (y + a1 * s * rng.gen_range(-1.0..=1.0)).clamp(0.0, a1),
                z: (z + dz).clamp(0.0, a2),
            };
            record(probe.ratio(p, q));
        }
        trace.push((s, scale_max));
    }

    let mut run = 0;
    let mut diverging = probe.failure.is_some();
    for w in trace.windows(2) {
        if w[1].1 >= DIVERGENCE_FACTOR * w[0].1 && w[0].1 > 0.0 {
            run += 1;
            if run >= DIVERGENCE_RUN {
                diverging = true;
            }
        } else {
            run = 0;
        }
    }

    Ok(LipschitzVerdict {
        gamma,
        a1,
        a2,
        estimated_constant: probe.best,
        max_ratio_trace: trace,
        verdict: if diverging {
            Verdict::Diverging
        } else {
            Verdict::Plausible
        },
        witness_pair: probe.witness,
        failure: probe.failure,
    })
}
