//! Structure-preserving mixed finite elements for the steady MHD kinematics
//! equations in current density / electric potential / vector potential /
//! multiplier variables, with the block preconditioned FGMRES solver.
//!
//! The discrete current density lives in the H(div) face element space and
//! the vector potential in the H(curl) edge element space, so that both
//! `div J_h = 0` and `div B_h = 0` hold exactly at the discrete level.

pub mod analysis;
pub mod assembly;
pub mod driver;
pub mod error;
pub mod fe;
pub mod linalg;
pub mod mesh;
pub mod precon;
pub mod quadrature;

pub use error::{Error, Result};

pub type Point = nalgebra::Vector3<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
