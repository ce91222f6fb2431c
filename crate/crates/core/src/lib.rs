pub mod autodiff;
pub mod cli;
pub mod data;
pub mod error;
pub mod losses;
pub mod pose;
pub mod scalar;
pub mod seed;
pub mod sim;
pub mod stats;
pub mod train;

pub use error::{Error, Result};
