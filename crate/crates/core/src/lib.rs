//! Multi-objective Bayesian optimization with random scalarizations.
//!
//! Each objective gets its own squared-exponential GP. Every iteration draws a
//! preference weight vector, scalarizes a Thompson-sampling draw or an upper
//! confidence bound of the objectives, and evaluates the maximizer. The regret
//! module scores runs against the user's preference distribution.

pub mod acquisition;
pub mod bench;
pub mod direct;
pub mod engine;
pub mod error;
pub mod gp;
pub mod objectives;
pub mod regret;
pub mod rng;
pub mod scalarize;
pub mod weights;

pub use error::{Error, Result};
