pub mod catalog;
pub mod chart;
pub mod cone;
pub mod cproj;
pub mod error;
pub mod jet;
pub mod kahler;
pub mod holonomy;
pub mod jplanar;
pub mod linalg;
pub mod mobility;
pub mod parallel;
pub mod quadrature;
pub mod suite;

pub use error::{LabError, Result};
pub use jet::Jet;
