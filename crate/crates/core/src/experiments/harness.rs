//! Monte Carlo drivers.
//!
//! Replication `r` of every experiment draws from stream `r` of the base
//! seed, in the order: evaluation sample, training inputs, training
//! parameters. Grid points share streams (common random numbers), which
//! keeps curves smooth across `m` and `s_corr`. Replications run in parallel
//! and are collected in index order, so no emitted number depends on the
//! thread count.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;

use super::fit::{fit_loglog, RateFit};
use super::scenario::Scenario;
use crate::error::{Error, Result};
use crate::estimators::{generalization_error_samples, qi_hat, GeneralizationConfig};
use crate::knn::neighbor_table;
use crate::ot::{cost_pow, exact_wq, table_cost};
use crate::random::stream_rng;
use crate::sample::{DiscreteMeasure, NormSpec};
use crate::stats::MeanEstimate;
use crate::weights::{knn_weights, weighted_measure};

/// Replications checked against the exact LP when certification is on: one
/// in every `CERTIFY_EVERY`.
pub const CERTIFY_EVERY: usize = 100;

/// How the neighbor count depends on the training size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KRule {
    Const(usize),
    /// `ceil(m^alpha)`, clamped to `[1, m]`.
    PowerCeil(f64),
}

impl KRule {
    pub fn k_for(&self, m: usize) -> Result<usize> {
        match *self {
            KRule::Const(k) => {
                if k == 0 || k > m {
                    Err(Error::invalid(format!("k = {k} out of range for m = {m}")))
                } else {
                    Ok(k)
                }
            }
            KRule::PowerCeil(alpha) => {
                let x = (m as f64).powf(alpha);
                // m^alpha that is an integer up to rounding must not round up
                let r = x.round();
                let k = if (x - r).abs() < 1e-9 { r } else { x.ceil() };
                Ok((k as usize).clamp(1, m))
            }
        }
    }
}

impl fmt::Display for KRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KRule::Const(k) => write!(f, "const:{k}"),
            KRule::PowerCeil(a) => write!(f, "ceil(m^{a})"),
        }
    }
}

/// One replication of one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub scenario: String,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub q: f64,
    pub s_corr: Option<f64>,
    pub rep: usize,
    pub seed: u64,
    pub statistic: f64,
    /// Wall time of the replication, or 0 when timing is off.
    pub seconds: f64,
}

/// Mean of the statistic at one grid point (`x` is `m` or `s_corr`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub x: f64,
    pub estimate: MeanEstimate,
}

fn summarize(x: f64, records: &[RunRecord]) -> SummaryRow {
    let values: Vec<f64> = records.iter().map(|r| r.statistic).collect();
    SummaryRow {
        x,
        estimate: MeanEstimate::from_values(&values),
    }
}

/// Which number the `statistic` column of a rate experiment holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatisticKind {
    /// Exact `W_q^q` via the 1-NN closed form.
    ClosedForm1nn,
    /// k-NN upper bound on `W_q^q`.
    KnnBound,
    /// Squared error of the quantity-of-interest estimate.
    SquaredQiError,
    /// Absolute error of the quantity-of-interest estimate.
    AbsQiError,
    /// Mean squared generalization error of the k-NN regressor.
    RegressionMse,
}

impl StatisticKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StatisticKind::ClosedForm1nn => "wq_q_power_closed_form_1nn",
            StatisticKind::KnnBound => "wq_q_power_knn_upper_bound",
            StatisticKind::SquaredQiError => "squared_qi_error",
            StatisticKind::AbsQiError => "abs_qi_error",
            StatisticKind::RegressionMse => "regression_mse",
        }
    }
}

fn fit_summary(summary: &[SummaryRow], transform: impl Fn(f64) -> f64) -> Result<Option<RateFit>> {
    if summary.len() < 2 {
        return Ok(None);
    }
    let points: Vec<(f64, f64)> = summary.iter().map(|s| (s.x, transform(s.estimate.mean))).collect();
    fit_loglog(&points).map(Some)
}

fn timed<T>(timing: bool, f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    if timing {
        let start = Instant::now();
        let out = f()?;
        Ok((out, start.elapsed().as_secs_f64()))
    } else {
        Ok((f()?, 0.0))
    }
}

fn check_grid(grid: &[usize]) -> Result<()> {
    if grid.is_empty() || grid[0] == 0 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("m grid must be nonempty, positive and strictly increasing"));
    }
    Ok(())
}

fn check_reps(reps: usize, n: usize) -> Result<()> {
    if reps == 0 || n == 0 {
        return Err(Error::invalid("replications and n must be positive"));
    }
    Ok(())
}

fn require_qi(scenario: &Scenario) -> Result<f64> {
    scenario.qi.ok_or_else(|| {
        Error::invalid(format!("scenario {} has no analytic quantity of interest", scenario.name()))
    })
}

/// Configuration of [`wasserstein_rate_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct RateConfig {
    pub m_grid: Vec<usize>,
    pub n: usize,
    pub k_rule: KRule,
    pub q: f64,
    pub replications: usize,
    pub base_seed: u64,
    pub norm: NormSpec,
    /// Cross-check one replication in [`CERTIFY_EVERY`] against the exact LP.
    pub certify: bool,
    pub timing: bool,
}

impl RateConfig {
    /// Desk-scale defaults: `n = 100`, 200 replications, `k = 1`, `q = 2`.
    pub fn new(m_grid: Vec<usize>) -> Self {
        RateConfig {
            m_grid,
            n: 100,
            k_rule: KRule::Const(1),
            q: 2.0,
            replications: 200,
            base_seed: 0,
            norm: NormSpec::L2,
            certify: false,
            timing: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RateOutcome {
    pub records: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
    /// Log-log fit of the mean against `m`; `None` for a one-point grid.
    pub fit: Option<RateFit>,
    pub statistic: StatisticKind,
    /// Number of replications verified against the exact LP.
    pub certified: usize,
}

/// Mean `W_q^q` between the evaluation empirical measure and the k-NN
/// reweighted training measure, as a function of `m`, with its log-log fit.
pub fn wasserstein_rate_experiment(scenario: &Scenario, cfg: &RateConfig) -> Result<RateOutcome> {
    check_grid(&cfg.m_grid)?;
    check_reps(cfg.replications, cfg.n)?;
    crate::ot::check_order(cfg.q)?;
    let all_k1 = matches!(cfg.k_rule, KRule::Const(1));
    let mut records = Vec::with_capacity(cfg.m_grid.len() * cfg.replications);
    let mut summary = Vec::with_capacity(cfg.m_grid.len());
    let mut certified = 0;
    for &m in &cfg.m_grid {
        let k = cfg.k_rule.k_for(m)?;
        let rows = (0..cfg.replications)
            .into_par_iter()
            .map(|rep| {
                let ((stat, cert), secs) = timed(cfg.timing, || {
                    let mut rng = stream_rng(cfg.base_seed, rep as u64);
                    let eval = scenario.x_law.sample(&mut rng, cfg.n)?;
                    let train = scenario.train_law.sample(&mut rng, m)?;
                    let table = neighbor_table(&eval, &train, k, cfg.norm)?;
                    let stat = table_cost(&table, cfg.q)?;
                    if !(cfg.certify && rep % CERTIFY_EVERY == 0) {
                        return Ok((stat, false));
                    }
                    let target = weighted_measure(&train, &knn_weights(&table, m)?)?;
                    let (exact, _) =
                        exact_wq(&DiscreteMeasure::uniform(eval), &target, cfg.q, cfg.norm)?;
                    let consistent = if k == 1 {
                        (stat - exact).abs() <= 1e-9 * stat.max(1.0)
                    } else {
                        stat >= exact - 1e-12 * stat.max(1.0)
                    };
                    if !consistent {
                        return Err(Error::numerical(format!(
                            "certification failed at m = {m}, rep = {rep}: closed form {stat} vs LP {exact}"
                        )));
                    }
                    Ok((stat, true))
                })?;
                Ok((
                    RunRecord {
                        scenario: scenario.name().to_string(),
                        m,
                        n: cfg.n,
                        k,
                        q: cfg.q,
                        s_corr: scenario.params.s_corr,
                        rep,
                        seed: cfg.base_seed,
                        statistic: stat,
                        seconds: secs,
                    },
                    cert,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        certified += rows.iter().filter(|r| r.1).count();
        let recs: Vec<RunRecord> = rows.into_iter().map(|r| r.0).collect();
        summary.push(summarize(m as f64, &recs));
        records.extend(recs);
    }
    let fit = fit_summary(&summary, |v| v)?;
    Ok(RateOutcome {
        records,
        summary,
        fit,
        statistic: if all_k1 {
            StatisticKind::ClosedForm1nn
        } else {
            StatisticKind::KnnBound
        },
        certified,
    })
}

/// Configuration of [`qi_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct QiConfig {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub s_corr_grid: Vec<f64>,
    pub replications: usize,
    pub base_seed: u64,
    pub norm: NormSpec,
    pub timing: bool,
}

impl QiConfig {
    /// `n = m = 900`, `k = 4`, 500 replications.
    pub fn new(s_corr_grid: Vec<f64>) -> Self {
        QiConfig {
            m: 900,
            n: 900,
            k: 4,
            s_corr_grid,
            replications: 500,
            base_seed: 0,
            norm: NormSpec::L2,
            timing: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QiOutcome {
    pub records: Vec<RunRecord>,
    /// One row per `s_corr`, holding the mean squared error.
    pub summary: Vec<SummaryRow>,
}

/// Squared error of the k-NN weighted estimate of the quantity of interest,
/// per training correlation.
pub fn qi_experiment(scenario: &Scenario, cfg: &QiConfig) -> Result<QiOutcome> {
    check_reps(cfg.replications, cfg.n)?;
    if cfg.s_corr_grid.is_empty() {
        return Err(Error::invalid("s_corr grid is empty"));
    }
    let qi = require_qi(scenario)?;
    KRule::Const(cfg.k).k_for(cfg.m)?;
    let mut records = Vec::new();
    let mut summary = Vec::new();
    for &s in &cfg.s_corr_grid {
        let sc = scenario.with_s_corr(s)?;
        let recs = (0..cfg.replications)
            .into_par_iter()
            .map(|rep| {
                let (err, secs) = timed(cfg.timing, || {
                    let mut rng = stream_rng(cfg.base_seed, rep as u64);
                    let (eval, train) = sc.draw(&mut rng, cfg.n, cfg.m)?;
                    let table = neighbor_table(&eval, train.inputs(), cfg.k, cfg.norm)?;
                    let est = qi_hat(&knn_weights(&table, cfg.m)?, train.outputs(), &sc.phi)?;
                    Ok((est - qi) * (est - qi))
                })?;
                Ok(RunRecord {
                    scenario: sc.name().to_string(),
                    m: cfg.m,
                    n: cfg.n,
                    k: cfg.k,
                    q: 2.0,
                    s_corr: Some(s),
                    rep,
                    seed: cfg.base_seed,
                    statistic: err,
                    seconds: secs,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        summary.push(summarize(s, &recs));
        records.extend(recs);
    }
    Ok(QiOutcome { records, summary })
}

/// Configuration of [`atom_consistency_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct AtomConfig {
    pub m_grid: Vec<usize>,
    pub n: usize,
    pub replications: usize,
    pub base_seed: u64,
    pub norm: NormSpec,
    pub timing: bool,
}

#[derive(Debug, Clone)]
pub struct AtomOutcome {
    pub records: Vec<RunRecord>,
    /// Mean absolute error with `k = 1`, per `m`.
    pub single_neighbor: Vec<SummaryRow>,
    /// Mean absolute error with `k = ceil(sqrt(m))`, per `m`.
    pub growing_neighbors: Vec<SummaryRow>,
}

/// Absolute error of the 1-NN and `ceil(sqrt(m))`-NN estimates of the
/// quantity of interest, computed on the same draws.
///
/// With an atom in the evaluation law and a noisy model, the 1-NN error does
/// not vanish while the growing-k error does.
pub fn atom_consistency_experiment(scenario: &Scenario, cfg: &AtomConfig) -> Result<AtomOutcome> {
    check_grid(&cfg.m_grid)?;
    check_reps(cfg.replications, cfg.n)?;
    let qi = require_qi(scenario)?;
    let growing = KRule::PowerCeil(0.5);
    let mut records = Vec::new();
    let mut single_neighbor = Vec::new();
    let mut growing_neighbors = Vec::new();
    for &m in &cfg.m_grid {
        let k_big = growing.k_for(m)?;
        let pairs = (0..cfg.replications)
            .into_par_iter()
            .map(|rep| {
                let start = cfg.timing.then(Instant::now);
                let mut rng = stream_rng(cfg.base_seed, rep as u64);
                let (eval, train) = scenario.draw(&mut rng, cfg.n, m)?;
                let mut errs = [0.0; 2];
                for (slot, k) in [1, k_big].into_iter().enumerate() {
                    let table = neighbor_table(&eval, train.inputs(), k, cfg.norm)?;
                    let est = qi_hat(&knn_weights(&table, m)?, train.outputs(), &scenario.phi)?;
                    errs[slot] = (est - qi).abs();
                }
                let secs = start.map_or(0.0, |s| s.elapsed().as_secs_f64());
                let rec = |k: usize, statistic: f64| RunRecord {
                    scenario: scenario.name().to_string(),
                    m,
                    n: cfg.n,
                    k,
                    q: 2.0,
                    s_corr: scenario.params.s_corr,
                    rep,
                    seed: cfg.base_seed,
                    statistic,
                    seconds: secs,
                };
                Ok((rec(1, errs[0]), rec(k_big, errs[1])))
            })
            .collect::<Result<Vec<_>>>()?;
        let (ones, bigs): (Vec<RunRecord>, Vec<RunRecord>) = pairs.into_iter().unzip();
        single_neighbor.push(summarize(m as f64, &ones));
        growing_neighbors.push(summarize(m as f64, &bigs));
        records.extend(ones);
        records.extend(bigs);
    }
    Ok(AtomOutcome {
        records,
        single_neighbor,
        growing_neighbors,
    })
}

/// Configuration of [`noisy_rate_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyRateConfig {
    pub m_grid: Vec<usize>,
    pub n: usize,
    pub k_rule: KRule,
    pub replications: usize,
    pub base_seed: u64,
    pub norm: NormSpec,
    pub timing: bool,
}

impl NoisyRateConfig {
    /// `k = ceil(m^{2/(d+2)})`, `n = 10^4`, 200 replications.
    pub fn new(m_grid: Vec<usize>, d: usize) -> Self {
        NoisyRateConfig {
            m_grid,
            n: 10_000,
            k_rule: KRule::PowerCeil(2.0 / (d as f64 + 2.0)),
            replications: 200,
            base_seed: 0,
            norm: NormSpec::L2,
            timing: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NoisyRateOutcome {
    /// Squared errors per replication.
    pub records: Vec<RunRecord>,
    /// Mean squared error per `m`.
    pub summary: Vec<SummaryRow>,
    /// Fit of the root mean squared error against `m`; `None` for a
    /// one-point grid.
    pub fit: Option<RateFit>,
}

/// L² error of the k-NN estimate of the quantity of interest as a function
/// of `m`; the fit is on `sqrt(mean squared error)`.
pub fn noisy_rate_experiment(scenario: &Scenario, cfg: &NoisyRateConfig) -> Result<NoisyRateOutcome> {
    check_grid(&cfg.m_grid)?;
    check_reps(cfg.replications, cfg.n)?;
    let qi = require_qi(scenario)?;
    let mut records = Vec::new();
    let mut summary = Vec::new();
    for &m in &cfg.m_grid {
        let k = cfg.k_rule.k_for(m)?;
        let recs = (0..cfg.replications)
            .into_par_iter()
            .map(|rep| {
                let (err, secs) = timed(cfg.timing, || {
                    let mut rng = stream_rng(cfg.base_seed, rep as u64);
                    let (eval, train) = scenario.draw(&mut rng, cfg.n, m)?;
                    let table = neighbor_table(&eval, train.inputs(), k, cfg.norm)?;
                    let est = qi_hat(&knn_weights(&table, m)?, train.outputs(), &scenario.phi)?;
                    Ok(cost_pow((est - qi).abs(), 2.0))
                })?;
                Ok(RunRecord {
                    scenario: scenario.name().to_string(),
                    m,
                    n: cfg.n,
                    k,
                    q: 2.0,
                    s_corr: scenario.params.s_corr,
                    rep,
                    seed: cfg.base_seed,
                    statistic: err,
                    seconds: secs,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        summary.push(summarize(m as f64, &recs));
        records.extend(recs);
    }
    let fit = fit_summary(&summary, f64::sqrt)?;
    Ok(NoisyRateOutcome {
        records,
        summary,
        fit,
    })
}

/// Configuration of [`regression_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionConfig {
    pub m_grid: Vec<usize>,
    pub k_rule: KRule,
    pub n_test: usize,
    pub replications: usize,
    pub base_seed: u64,
    pub norm: NormSpec,
}

#[derive(Debug, Clone)]
pub struct RegressionOutcome {
    pub records: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
    /// Fit of the root mean squared generalization error against `m`;
    /// `None` for a one-point grid.
    pub fit: Option<RateFit>,
}

/// Generalization error of k-NN regression under the scenario's covariate
/// shift, per `m`. The regression function of the scenario is the ground
/// truth; the observable must be the identity on scalar outputs.
pub fn regression_experiment(scenario: &Scenario, cfg: &RegressionConfig) -> Result<RegressionOutcome> {
    check_grid(&cfg.m_grid)?;
    check_reps(cfg.replications, cfg.n_test)?;
    let psi = scenario.psi.clone().ok_or_else(|| {
        Error::invalid(format!("scenario {} has no regression function", scenario.name()))
    })?;
    if scenario.e != 1 || scenario.phi.name() != "identity" {
        return Err(Error::invalid("regression needs scalar outputs and the identity observable"));
    }
    let truth = move |x: &[f64]| vec![psi(x)];
    let mut records = Vec::new();
    let mut summary = Vec::new();
    for &m in &cfg.m_grid {
        let k = cfg.k_rule.k_for(m)?;
        let gcfg = GeneralizationConfig {
            m,
            k,
            n_test: cfg.n_test,
            replications: cfg.replications,
            norm: cfg.norm,
            seed: cfg.base_seed,
        };
        let values = generalization_error_samples(
            &scenario.model,
            &scenario.x_law,
            &scenario.train_law,
            &truth,
            &gcfg,
        )?;
        let recs: Vec<RunRecord> = values
            .into_iter()
            .enumerate()
            .map(|(rep, statistic)| RunRecord {
                scenario: scenario.name().to_string(),
                m,
                n: cfg.n_test,
                k,
                q: 2.0,
                s_corr: scenario.params.s_corr,
                rep,
                seed: cfg.base_seed,
                statistic,
                seconds: 0.0,
            })
            .collect();
        summary.push(summarize(m as f64, &recs));
        records.extend(recs);
    }
    let fit = fit_summary(&summary, f64::sqrt)?;
    Ok(RegressionOutcome {
        records,
        summary,
        fit,
    })
}
