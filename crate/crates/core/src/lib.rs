//! White-noise chaos algebra.

pub mod chaos;
pub mod colombeau;
pub mod error;
pub mod experiments;
pub mod hermite;
pub mod lang;
pub mod noise;
pub mod products;
pub mod spde;

pub use chaos::{BasisLayout, ChaosVector, MultiIndex, Norm};
pub use error::{Error, Result};
