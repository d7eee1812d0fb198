pub mod error;
pub mod means;
pub mod moebius;
pub mod multiplicative;
pub mod precision;
pub mod scan;
pub mod theta;

pub use error::{Error, Result};
