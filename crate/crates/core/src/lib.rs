//! Positive Takagi–Sugeno fuzzy control of a tumor–immune model.
//!
//! The crate covers the nonlinear model and its equilibria ([`model`]), the
//! exact sector-nonlinearity fuzzy representation ([`fuzzy`]), a dense
//! simplex solver ([`lp`]), LP-based stability analysis and controller
//! synthesis ([`synthesis`]), and closed-loop treatment simulation ([`sim`]).

pub mod error;
pub mod fuzzy;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod sim;
pub mod spectral;
pub mod synthesis;

pub use error::{Error, Result};
