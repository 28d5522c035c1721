//! Planning and validation toolkit for pooled testing.
//!
//! - [`cost`]: expected tests per patient for single, double and k-round pooling;
//! - [`optimizer`]: continuous and integer optimal pool sizes, and prevalence thresholds;
//! - [`simulator`]: seeded Monte-Carlo runs of the protocol on finite populations;
//! - [`sweep`] and [`output`]: grid sweeps and the CSV/JSON formats behind the CLI.

pub mod cli;
pub mod cost;
pub mod error;
pub mod lambert;
pub mod optimizer;
pub mod output;
pub mod simulator;
pub mod sweep;

pub use cost::{
    double_pool_cost, double_pool_cost_derivative, k_pool_cost, k_pool_cost_derivative,
    single_pool_cost, single_pool_cost_derivative, Multiplicity, Prevalence,
};
pub use error::{PoolError, Result};
pub use lambert::lambert_w0;
pub use optimizer::{
    continuous_optimum_s1, continuous_optimum_sk, find_p_for_continuous_s1, find_savings_crossover,
    integer_optimum, pooling_breakeven, savings_percent, PoolPlan, SearchBounds,
};
pub use simulator::{
    estimate_correlation_penalty, run_simulation, run_trial, sensitivity_report, InfectionModel,
    SimConfig, SimReport, TrialOutcome,
};
