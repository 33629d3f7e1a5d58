//! Parse a coefficient, differentiate it and compare with a central difference.

use crossdiff::exprs::Bindings;
use crossdiff::{parse, Var};

fn main() {
    let e = parse("-u^2*v*exp(-v) + ln(1 + u)").expect("valid expression");
    let du = e.differentiate(Var::U);
    let dv = e.differentiate(Var::V);
    println!("f      = {e}");
    println!("df/du  = {du}");
    println!("df/dv  = {dv}");

    let (u, v, h) = (1.3, 0.7, 1e-6);
    let at = |u: f64, v: f64| e.eval(&Bindings::uv(u, v)).unwrap();
    let fd = (at(u + h, v) - at(u - h, v)) / (2.0 * h);
    let exact = du.eval(&Bindings::uv(u, v)).unwrap();
    println!("at (u, v) = ({u}, {v}): symbolic {exact:.10}, central difference {fd:.10}");

    let reparsed = parse(&du.to_string()).unwrap();
    assert_eq!(reparsed.eval(&Bindings::uv(u, v)).unwrap(), exact);
}
