pub mod data;
pub mod error;
pub mod experiment;
pub mod fed;
pub mod hetero;
pub mod linalg;
pub mod nn;
pub mod seeds;
pub mod simclients;

pub use error::{Error, Result};
