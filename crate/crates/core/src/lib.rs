//! Prediction with expert advice through the lens of continuous time.
//!
//! The crate provides the hypergeometric potential (`specfun`), the shared
//! game types (`game`), the player strategies (`learners`), gain generators
//! for the discrete and Brownian games (`environments`), the game loops and
//! Monte Carlo harness (`engine`), and numerical sweeps over the inequalities
//! the regret bounds rest on (`verifier`).

pub mod engine;
pub mod environments;
pub mod error;
pub mod game;
pub mod learners;
pub mod specfun;
pub mod verifier;

pub use error::{Error, Result};
