pub mod cocycle;
pub mod error;
pub mod ergodic;
pub mod model;
pub mod ode;
pub mod sl2;
pub mod spectral;
pub mod surface;
pub mod suspension;
pub mod timechange;

pub use error::{Error, Result};
