//! Recovery planning for storm-damaged distribution grids: road ingestion,
//! fallen-pole blockage detection, travel-cost matrices and crew scheduling.

pub mod blockage;
pub mod cost;
pub mod error;
pub mod geo;
pub mod osm;
pub mod scheduler;

pub use error::{Error, Result};
