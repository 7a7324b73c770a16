pub mod analysis;
pub mod builder;
pub mod error;
pub mod graph;
pub mod io;
pub mod local;
pub mod marks;
pub mod model;
pub mod point_process;
pub mod rng;
pub mod stats;

pub use error::{Result, SpamError};
