//! Regional innovation econometrics and a Stackelberg royalty-licensing model.
//!
//! * [`panel`]: balanced region x year panels, lags, imputation, summaries and
//!   a seeded synthetic generator.
//! * [`diversity`]: Theil entropy, related/unrelated variety, Hoover index.
//! * [`econometrics`]: pooled OLS with robust errors, VIF, variance
//!   decomposition, orthogonalised interactions, elasticities.
//! * [`game`]: closed-form subgame-perfect equilibrium of the licensing
//!   duopoly and numeric oracles for it.

pub mod diversity;
pub mod econometrics;
pub mod error;
pub mod game;
mod linalg;
pub mod panel;

pub use error::{Error, Result};
pub use panel::RegionalPanel;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 42;
