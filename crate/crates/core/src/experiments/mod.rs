//! Scenarios and Monte Carlo experiments.

pub mod fit;
pub mod harness;
pub mod scenario;

pub use fit::{fit_loglog, RateFit};
pub use harness::{
    atom_consistency_experiment, noisy_rate_experiment, qi_experiment, regression_experiment,
    wasserstein_rate_experiment, AtomConfig, AtomOutcome, KRule, NoisyRateConfig,
    NoisyRateOutcome, QiConfig, QiOutcome, RateConfig, RateOutcome, RegressionConfig,
    RegressionOutcome, RunRecord, StatisticKind, SummaryRow, CERTIFY_EVERY,
};
pub use scenario::{builtin_scenario, Overrides, Scenario, ScenarioKind, ScenarioParams};
