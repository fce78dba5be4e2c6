pub mod cli;
pub mod config;
pub mod error;
pub mod hermite;
pub mod isometry;
pub mod kernels;
pub mod model;
pub mod noise;
pub mod quad;

pub use error::{Error, Result};
