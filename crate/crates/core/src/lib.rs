//! Fixed-budget best-arm identification for non-stationary linear bandits.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix it to `f64`.

pub mod algorithms;
pub mod complexity;
pub mod design;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod instances;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type ArmSet = geometry::ArmSet<f64>;
pub type AdjacencyStructure = geometry::AdjacencyStructure<f64>;
pub type Design = design::Design<f64>;
pub type Allocation = design::Allocation<f64>;
pub type NonStationaryInstance = instances::NonStationaryInstance<f64>;
pub type HardInstancePair = instances::HardInstancePair<f64>;
pub type BaiRun = algorithms::BaiRun<f64>;
pub type Plan = algorithms::Plan<f64>;
