//! Margin-based α-loss: the loss family, AdaBoost.α, α-loss linear models
//! under symmetric label noise, and numerical checks of their robustness
//! properties on the Long-Servedio construction.

pub mod boost;
pub mod data;
pub mod error;
pub mod experiment;
pub mod linear;
pub mod losses;
pub mod theory;

pub use boost::{adaboost_alpha, BoostConfig, BoostTrace, Ensemble, LearnerWeighting, Tree};
pub use data::{Dataset, GmmSpec};
pub use error::{Error, Result};
pub use experiment::{ExperimentConfig, RunOutcome};
pub use linear::{LinearParams, TrainConfig};
pub use losses::{Alpha, AlphaLoss};
pub use theory::LsProblem;
