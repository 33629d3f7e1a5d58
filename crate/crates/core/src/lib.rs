//! Finite-volume laboratory for triangular degenerate reaction-cross-diffusion
//! systems
//!
//! ```text
//! u_t = div(p(v) u^alpha grad u) + div(A12(u,v) grad v) + R1(u,v)
//! v_t = div(A22(u,v) grad v) + R2(u,v)
//! ```
//!
//! on box domains with no-flux boundaries, together with a harness that
//! measures the `H^-1` stability functional
//! `E(t) = (int du)^2 + ||grad dpsi||^2 + ||dv||^2` between pairs of
//! discrete solutions.

pub mod cli;
pub mod coeffs;
pub mod exprs;
pub mod grid;
pub mod linalg;
pub mod poisson;
pub mod solver;
pub mod stability;

mod stencil;

pub use coeffs::CoefficientModel;
pub use exprs::{parse, Expr, Var};
pub use grid::{Field, Grid};
