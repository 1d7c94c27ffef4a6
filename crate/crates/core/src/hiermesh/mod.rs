//! Domain hierarchies, hierarchical and truncated hierarchical B-spline
//! bases, and hierarchical quasi-interpolants.

mod hierarchy;
mod thb;

pub use hierarchy::{ActiveSet, DomainHierarchy, HierarchicalMesh};
pub use thb::{build_truncated, represent_in_thb, truncate_once, QuasiInterpolant, TruncatedFunction};
