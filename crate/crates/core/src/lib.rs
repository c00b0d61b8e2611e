//! Numerics for three coupled quantum Rabi cavities on a ring with a complex
//! hopping phase.
//!
//! Most routines are generic over [`Real`] so that near-critical sweeps can
//! run in double-double precision ([`Extended`]); the aliases below fix the
//! scalar to `f64` for ordinary use.

pub mod bogoliubov;
pub mod dd;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod meanfield;
pub mod model;
pub mod np_analytics;
pub mod scalar;
pub mod scaling;
pub mod sparse;

pub use error::{Error, Result};
pub use scalar::{Real, C};

pub type Extended = dd::Dd;
pub type ModelParams = model::Params<f64>;
pub type MeanFieldSolution = meanfield::MeanFieldSolution<f64>;
pub type ParaunitarySolution = bogoliubov::ParaunitarySolution<f64>;
