pub mod calculus;
pub mod error;
pub mod evolution;
pub mod expr;
pub mod extension;
pub mod operators;
pub mod quadrature;
pub mod stability;
pub mod transport;

pub use error::{Error, Result};
