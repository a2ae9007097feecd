//! Simulation harness: laws on `T^2`, the named scenarios H0 to H4,
//! replicated test runs, CLT deviation experiments and the mean-rate check.
//!
//! Replicate `r` of a run seeded with `s` draws its samples from the stream
//! `(s, REPLICATE, r)` and seeds its tests from `derive_seed(s, METHOD, r)`,
//! so output is independent of thread count and execution order.

mod experiment;
mod law;
mod rate;
mod scenario;

pub use experiment::{
    run_scenario, ExperimentResult, ExperimentSummary, MethodConfig, MethodSummary, ReplicateRecord,
    DEFAULT_ALPHAS, ECDF_POINTS, SUMMARY_SCHEMA_VERSION,
};
pub use law::{sample_uniform_torus, sample_wrapped_gaussian, Law, WrappedGaussianSpec};
pub use rate::{clt_deviation_experiment, mean_rate_check, predicted_mean_rate, RateRow, RateTable};
pub use scenario::{ScenarioName, ScenarioSpec};
