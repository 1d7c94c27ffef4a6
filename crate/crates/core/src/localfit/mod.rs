//! Local variable-degree polynomial least-squares fits producing one
//! quasi-interpolation coefficient per B-spline.

mod dataset;
mod fit;

pub use dataset::{find_duplicate, ScatteredDataset, SpatialIndex};
pub use fit::{
    collocation, fit_lambda, gather, local_ball, select_degree, DegreeChoice, FitData, LocalFitResult,
    OscillationGuard,
};
