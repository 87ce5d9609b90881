//! Monte-Carlo harness comparing the noodle, sandwich and PFA estimates of
//! FDP(t) against the realized FDP on the simulation models.
//!
//! Correlations are drawn once per experiment from stream 0 of the seed;
//! round `r` (0-based) draws its data from stream `r + 1`, so results do
//! not depend on scheduling.

mod experiment;
mod model;

pub use experiment::{
    run_experiment, run_experiment_with, run_round, ExperimentConfig, ExperimentResult, Method,
    MethodSummary, RoundFailure, RoundRecord,
};
pub use model::{
    gen_correlations, power_decay, preset_names, Design, LoadingDist, Model, ModelSpec, Signal,
    WDist,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Core(#[from] matfdp_core::Error),
}
