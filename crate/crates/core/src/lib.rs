//! Modeling and parameter estimation for a kinetic-inductance parametric
//! converter: ring resonances, four-port three-wave-mixing scattering, and
//! least-squares fits of the model to gain, tuning, fringe and noise data.

pub mod error;
pub mod estimation;
pub mod model;
pub mod resonance;
pub mod scattering;

pub use error::{Error, Result};
