//! Desk-scale reproduction of a network test of real quantum theory.
//!
//! * [`quantum`]: dense complex linear algebra, states, and observables
//! * [`jones`]: wave-plate Jones calculus and the measurement tables
//! * [`protocol`]: the entanglement-swapping protocol and the functional W
//! * [`photon`]: Monte Carlo of the photon-counting experiment and its estimators
//! * [`bound`]: moment-matrix relaxation bounding W over real quantum models
//! * [`cli`]: reproducible command-line runs

pub mod bound;
pub mod cli;
pub mod error;
pub mod jones;
pub mod photon;
pub mod protocol;
pub mod quantum;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
