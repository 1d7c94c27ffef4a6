//! Adaptive driver: initial fit, residual evaluation, function-based
//! marking, dyadic refinement and level management.

mod driver;
mod radii;

pub use driver::{
    compute_errors, fit_adaptive, mark, refine, FitConfig, FitOutcome, FitStatus, FnKey, IterationReport, Residuals,
};
pub use radii::{auxiliary_breaks, kj_schedule, max_radius, support_radius, LevelRadii};
