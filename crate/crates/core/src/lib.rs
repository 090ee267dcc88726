pub mod bodies;
pub mod error;
pub mod family;
pub mod functionals;
pub mod gw;
pub mod hull;
pub mod kernel;
pub mod quad1d;
pub mod sphere;
pub mod synthesis;

pub use error::{Error, Result};
