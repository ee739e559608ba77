//! Numeric summation of Fatou coordinates and Abel-equation checks.
//!
//! Values are generic over [`Real`], implemented for `f64` and for the
//! multiprecision [`Mp`].

mod germ;
mod ode;
mod orbit;
mod quad;
mod real;
mod sums;
mod verify;

use thiserror::Error;

use crate::formal::FormalError;

pub use germ::{eval_ell, eval_expr, eval_transseries, GermEvaluator, GermSource};
pub use ode::integrate_flow;
pub use orbit::{infinitesimal_value, orbit_bound_check, scan_n0, tail_bound, OrbitSum, TailFit, TailModel};
pub use quad::{geometric_breaks, GaussLegendre, DEFAULT_POINTS};
pub use real::{coeff, with_digits, Mp, Real, DEFAULT_DIGITS};
pub use sums::{
    delta_residual, ell_partial_sum, integral_sum, principal_part_value, PreparedBlock, SumContext,
};
pub use verify::{
    fatou_value, log_log_fit, verify_abel, FatouEvaluator, FatouValue, Grid, LineFit, NumericOptions,
    ResidualReport, ResidualRow,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("generator has a pole at u = {u} (x = {x:e}) inside the integration range")]
    GeneratorPole { u: f64, x: f64 },
    #[error("tolerance not reached: {0}")]
    Tolerance(String),
    #[error("ODE step size underflow at t = {t}, x = {x:e}")]
    StepUnderflow { t: f64, x: f64 },
    #[error("orbit tail bound not reached: {0}")]
    TailBound(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Formal(#[from] FormalError),
}
