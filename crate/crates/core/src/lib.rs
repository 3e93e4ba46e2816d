pub mod audit;
pub mod bias;
pub mod dataset;
pub mod error;
pub mod neighbourhood;
mod parallel;
pub mod props;
pub mod qbaf;
pub mod synthetic;

#[cfg(feature = "parallel")]
pub use parallel::set_threads;

pub use error::{Error, Result};
