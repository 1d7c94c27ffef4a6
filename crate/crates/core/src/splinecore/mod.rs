//! Univariate and tensor-product B-spline spaces.
//!
//! Knot vectors are always clamped. Evaluation is right-continuous at
//! interior knots and takes the left limit at the right end of the domain.

mod knots;
mod poly;
mod tensor;

pub use knots::{KnotVector, LocalConversion, Refinement};
pub use poly::{monomials, poly_dim, powers, to_reference, LocalPoly};
pub use tensor::{index_product, Aabb, CellIndex, IndexProduct, MultiIndex, SplineCoeffs, TensorSpace};

pub(crate) use tensor::apply_refinement;
