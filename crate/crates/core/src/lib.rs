//! Desk-scale workbench for disentangled representation learning.
//!
//! Trains small Gaussian-encoder/Bernoulli-decoder VAEs under six
//! regularized objectives on procedural ground-truth data, scores the
//! learned representations with six disentanglement metrics plus
//! unsupervised diagnostics, constructs measure-preserving entanglers
//! that defeat all of them, and runs seeded sweeps with rank-correlation,
//! variance-decomposition, and transfer-selection analyses on the records.

pub mod autodiff;
pub mod learners;
pub mod objectives;
pub mod error;
pub mod rng;

pub use error::{Error, Result};
pub mod factors;
pub mod impossibility;
