pub mod adaptive;
pub mod densela;
pub mod domain;
pub mod error;
pub mod hiermesh;
pub mod localfit;
pub mod splinecore;

pub use error::{Error, Result};
