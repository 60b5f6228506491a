pub mod configurations;
pub mod definiteness;
pub mod discrete_geodesics;
pub mod error;
pub mod sampler;
pub mod spaces;

pub use error::{Error, Result};
pub use spaces::{Point, SpaceDescriptor, TangentVector, WarpFunction};
