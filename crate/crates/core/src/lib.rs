//! Safe multi-goal path planning on planar terrain maps.

pub mod bench;
pub mod envgen;
pub mod error;
pub mod geometry;
pub mod gridmap;
pub mod mission;
pub mod render;
pub mod roadmap;
pub mod scenario;
pub mod selection;
pub mod sequencing;
pub mod validity;

pub use error::{Error, ErrorKind, Result};
pub use geometry::{CostExponent, CostWeights, Path, SE2State};
