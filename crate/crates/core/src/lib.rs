pub mod autodiff;
pub mod data;
pub mod error;
pub mod eval;
pub mod objectives;
pub mod reader;
pub mod trainer;

pub use error::{Error, Result};
