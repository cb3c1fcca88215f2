pub mod algorithm;
pub mod cli;
pub mod data;
pub mod error;
pub mod objective;
pub mod optimizer;
pub mod simulation;
pub mod verification;

pub use error::{PedError, Result};
