//! Batch command-line front end.
//!
//! Every subcommand is a pure function of its inputs, flags and seed: output
//! files are byte-identical across reruns and thread counts. Floats are
//! written with 17 significant digits.
//!
//! A flat TOML file given with `--config FILE` supplies default flag values
//! (keys are long flag names, `-` or `_` separated); flags on the command
//! line override it and unknown keys are rejected.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::experiments::{
    atom_consistency_experiment, builtin_scenario, noisy_rate_experiment, qi_experiment,
    regression_experiment, wasserstein_rate_experiment, AtomConfig, KRule, NoisyRateConfig,
    Overrides, QiConfig, RateConfig, RateFit, RegressionConfig, RunRecord, Scenario, SummaryRow,
};
use crate::knn::neighbor_table;
use crate::ot::{exact_wq, table_cost};
use crate::sample::{DiscreteMeasure, LabeledSample, NormSpec, Sample};
use crate::theory::{cdq, rate_constant, zador_exponent, KLimit};
use crate::weights::{knn_weights, weighted_measure};

#[derive(Debug, Parser)]
#[command(
    name = "wknn",
    version,
    about = "Wasserstein-optimal k-NN reweighting under covariate shift",
    args_override_self = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// k-NN weights of training points toward an evaluation sample.
    Weights(WeightsArgs),
    /// W_q^q between an evaluation sample and the reweighted training sample.
    Distance(DistanceArgs),
    /// Mean W_q^q (or quantity-of-interest error) against m.
    RateExp(RateArgs),
    /// Squared quantity-of-interest error against the training correlation.
    QiExp(QiArgs),
    /// 1-NN versus sqrt(m)-NN error with an atom in the evaluation law.
    AtomDemo(AtomArgs),
    /// k-NN regression generalization error against m.
    RegressExp(RegressArgs),
    /// Asymptotic rate constants of a scenario.
    Constants(ConstantsArgs),
}

#[derive(Debug, Args)]
struct PairArgs {
    /// Evaluation sample CSV (header x1..xd).
    #[arg(long)]
    eval: PathBuf,
    /// Training sample CSV (header x1..xd, optional y columns ignored).
    #[arg(long)]
    train: PathBuf,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value = "l2")]
    norm: NormSpec,
}

#[derive(Debug, Args)]
struct WeightsArgs {
    #[command(flatten)]
    pair: PairArgs,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DistanceArgs {
    #[command(flatten)]
    pair: PairArgs,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    /// Solve the transport LP and check it against the closed form.
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    #[arg(long, default_value = "diag_uniform_gauss")]
    scenario: String,
    /// Correlation of the training Gaussian.
    #[arg(long, allow_negative_numbers = true)]
    scorr: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    sigma_prime: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    /// Drop the noise factor of the model.
    #[arg(long)]
    noiseless: bool,
    /// Atom location, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    atom: Option<Vec<f64>>,
}

impl ScenarioArgs {
    fn build(&self) -> Result<Scenario> {
        let ov = Overrides {
            mu: self.mu,
            sigma: self.sigma,
            s_corr: self.scorr,
            sigma_prime: self.sigma_prime,
            dim: self.dim,
            noiseless: self.noiseless.then_some(true),
            atom: self.atom.clone(),
        };
        builtin_scenario(&self.scenario, &ov)
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, env = "WKNN_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value = "l2")]
    norm: NormSpec,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; does not change any output.
    #[arg(long)]
    threads: Option<usize>,
    /// Record wall time per replication (outputs are then not reproducible).
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Metric {
    Wasserstein,
    QiError,
}

#[derive(Debug, Args)]
struct RateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_delimiter = ',', default_value = "100,200,400,800,1600,3200")]
    m_grid: Vec<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    /// Constant neighbor count.
    #[arg(long, conflicts_with = "k_exponent")]
    k: Option<usize>,
    /// Neighbor count ceil(m^ALPHA).
    #[arg(long)]
    k_exponent: Option<f64>,
    #[arg(long, value_enum, default_value = "wasserstein")]
    metric: Metric,
    /// Check 1% of replications against the exact transport LP.
    #[arg(long)]
    certify: bool,
}

#[derive(Debug, Args)]
struct QiArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-0.9,-0.6,-0.3,0,0.3,0.6,0.9")]
    scorr_grid: Vec<f64>,
    #[arg(long, default_value_t = 900)]
    m: usize,
    #[arg(long, default_value_t = 900)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    k: usize,
}

#[derive(Debug, Args)]
struct AtomArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
    m_grid: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, allow_negative_numbers = true)]
    scorr: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    noiseless: bool,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    atom: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct RegressArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_delimiter = ',', default_value = "100,200,400,800,1600,3200")]
    m_grid: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    n_test: usize,
    #[arg(long, conflicts_with = "k_exponent")]
    k: Option<usize>,
    #[arg(long)]
    k_exponent: Option<f64>,
}

#[derive(Debug, Args)]
struct ConstantsArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[arg(long, default_value_t = 1)]
    k: u64,
    #[arg(long, default_value = "l2")]
    norm: NormSpec,
    /// Monte Carlo draws for the inverse density moment.
    #[arg(long, default_value_t = 100_000)]
    draws: usize,
    #[arg(long, env = "WKNN_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Formats a float with 17 significant digits, `%.17g` style.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        trim_zeros(format!("{:.*}", (16 - exp) as usize, x))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn csv_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::invalid(format!("{}: {e}", path.display()))
}

/// Reads a sample CSV with header `x1..xd` optionally followed by `y1..ye`.
pub fn read_sample_csv(path: &Path) -> Result<LabeledSampleOrInputs> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let d = header.iter().take_while(|h| h.starts_with('x')).count();
    let e = header.len() - d;
    let expected: Vec<String> = (1..=d)
        .map(|i| format!("x{i}"))
        .chain((1..=e).map(|i| format!("y{i}")))
        .collect();
    if d == 0 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(csv_error(path, "header must be x1..xd followed by optional y1..ye"));
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| csv_error(path, format!("row {}: '{field}' is not a number", line + 1)))?;
            if c < d { xs.push(v) } else { ys.push(v) }
        }
    }
    if xs.is_empty() {
        return Err(csv_error(path, "no data rows"));
    }
    let inputs = Sample::new(d, xs)?;
    if e == 0 {
        Ok(LabeledSampleOrInputs::Inputs(inputs))
    } else {
        Ok(LabeledSampleOrInputs::Labeled(LabeledSample::new(inputs, Sample::new(e, ys)?)?))
    }
}

/// Content of a sample CSV.
#[derive(Debug, Clone, PartialEq)]
pub enum LabeledSampleOrInputs {
    Inputs(Sample),
    Labeled(LabeledSample),
}

impl LabeledSampleOrInputs {
    pub fn inputs(&self) -> &Sample {
        match self {
            LabeledSampleOrInputs::Inputs(s) => s,
            LabeledSampleOrInputs::Labeled(l) => l.inputs(),
        }
    }
}

/// Writes a sample CSV with header `x1..xd[,y1..ye]`.
pub fn write_sample_csv(path: &Path, inputs: &Sample, outputs: Option<&Sample>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header: Vec<String> = (1..=inputs.dim()).map(|i| format!("x{i}")).collect();
    if let Some(out) = outputs {
        if out.len() != inputs.len() {
            return Err(Error::SizeMismatch {
                what: "outputs vs inputs",
                left: out.len(),
                right: inputs.len(),
            });
        }
        header.extend((1..=out.dim()).map(|i| format!("y{i}")));
    }
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for i in 0..inputs.len() {
        let mut row: Vec<String> = inputs.point(i).iter().map(|&v| fmt_f64(v)).collect();
        if let Some(out) = outputs {
            row.extend(out.point(i).iter().map(|&v| fmt_f64(v)));
        }
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| csv_error(path, e))
}

fn io_error(path: &Path, e: io::Error) -> Error {
    Error::invalid(format!("{}: {e}", path.display()))
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, content).map_err(|e| io_error(&path, e))
}

fn runs_csv(records: &[RunRecord]) -> String {
    let mut s = String::from("scenario,m,n,k,q,s_corr,rep,seed,statistic,seconds\n");
    for r in records {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.scenario,
            r.m,
            r.n,
            r.k,
            fmt_f64(r.q),
            r.s_corr.map(fmt_f64).unwrap_or_default(),
            r.rep,
            r.seed,
            fmt_f64(r.statistic),
            fmt_f64(r.seconds)
        ));
    }
    s
}

fn summary_csv(x_name: &str, rows: &[SummaryRow]) -> String {
    let mut s = format!("{x_name},mean,stderr,count\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(r.x),
            fmt_f64(r.estimate.mean),
            fmt_f64(r.estimate.stderr),
            r.estimate.count
        ));
    }
    s
}

fn ratefit_csv(fit: &RateFit) -> String {
    format!(
        "slope,intercept,rms\n{},{},{}\n",
        fmt_f64(fit.slope),
        fmt_f64(fit.intercept),
        fmt_f64(fit.rms)
    )
}

/// `key = value` lines for every resolved flag except those that cannot
/// change results, followed by `extra` lines.
fn manifest(command: &str, matches: &ArgMatches, extra: &[(&str, String)]) -> String {
    let mut lines = vec![
        format!("wknn_version = {}", env!("CARGO_PKG_VERSION")),
        format!("command = {command}"),
    ];
    let mut ids: Vec<&str> = matches.ids().map(|id| id.as_str()).collect();
    ids.sort_unstable();
    for id in ids {
        // group ids of flattened argument structs are capitalized
        if matches!(id, "out" | "threads" | "config") || id.starts_with(char::is_uppercase) {
            continue;
        }
        if let Ok(Some(raw)) = matches.try_get_raw(id) {
            let vals: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
            lines.push(format!("{id} = {}", vals.join(",")));
        }
    }
    lines.extend(extra.iter().map(|(k, v)| format!("{k} = {v}")));
    lines.join("\n") + "\n"
}

fn prepare_out(run: &RunArgs) -> Result<()> {
    fs::create_dir_all(&run.out).map_err(|e| io_error(&run.out, e))
}

fn k_rule(k: Option<usize>, exponent: Option<f64>) -> Result<KRule> {
    match (k, exponent) {
        (_, Some(a)) if !(a > 0.0 && a <= 1.0) => {
            Err(Error::invalid(format!("k exponent must lie in (0, 1], got {a}")))
        }
        (_, Some(a)) => Ok(KRule::PowerCeil(a)),
        (k, None) => Ok(KRule::Const(k.unwrap_or(1))),
    }
}

fn cmd_weights(a: &WeightsArgs, stdout: &mut dyn Write) -> Result<()> {
    let eval = read_sample_csv(&a.pair.eval)?;
    let train = read_sample_csv(&a.pair.train)?;
    let m = train.inputs().len();
    let table = neighbor_table(eval.inputs(), train.inputs(), a.pair.k, a.pair.norm)?;
    let wv = knn_weights(&table, m)?;
    let mut s = String::from("index,weight\n");
    for (j, w) in wv.weights().iter().enumerate() {
        s.push_str(&format!("{j},{}\n", fmt_f64(*w)));
    }
    stdout.write_all(s.as_bytes()).map_err(|e| Error::invalid(e.to_string()))
}

fn cmd_distance(a: &DistanceArgs, stdout: &mut dyn Write) -> Result<()> {
    let eval = read_sample_csv(&a.pair.eval)?;
    let train = read_sample_csv(&a.pair.train)?;
    let (eval, train) = (eval.inputs(), train.inputs());
    let table = neighbor_table(eval, train, a.pair.k, a.pair.norm)?;
    let closed = table_cost(&table, a.q)?;
    let (value, method) = if a.exact {
        let target = weighted_measure(train, &knn_weights(&table, train.len())?)?;
        let (exact, _) = exact_wq(&DiscreteMeasure::uniform(eval.clone()), &target, a.q, a.pair.norm)?;
        let tol = 1e-9 * closed.max(1.0);
        let ok = if a.pair.k == 1 {
            (closed - exact).abs() <= tol
        } else {
            closed >= exact - tol
        };
        if !ok {
            return Err(Error::numerical(format!(
                "closed form {closed} inconsistent with exact transport cost {exact}"
            )));
        }
        (exact, "exact_lp")
    } else if a.pair.k == 1 {
        (closed, "closed_form_1nn")
    } else {
        (closed, "knn_upper_bound")
    };
    let s = format!("wq_q_power,method\n{},{method}\n", fmt_f64(value));
    stdout.write_all(s.as_bytes()).map_err(|e| Error::invalid(e.to_string()))
}

fn cmd_rate(a: &RateArgs, matches: &ArgMatches) -> Result<()> {
    let scenario = a.scenario.build()?;
    let rule = k_rule(a.k, a.k_exponent)?;
    prepare_out(&a.run)?;
    let (records, summary, fit, extra) = match a.metric {
        Metric::Wasserstein => {
            let cfg = RateConfig {
                m_grid: a.m_grid.clone(),
                n: a.n.unwrap_or(100),
                k_rule: rule,
                q: a.q,
                replications: a.run.reps.unwrap_or(200),
                base_seed: a.run.seed,
                norm: a.run.norm,
                certify: a.certify,
                timing: a.run.timing,
            };
            let out = wasserstein_rate_experiment(&scenario, &cfg)?;
            let extra = vec![
                ("statistic", out.statistic.as_str().to_string()),
                ("certified_replications", out.certified.to_string()),
            ];
            (out.records, out.summary, out.fit, extra)
        }
        Metric::QiError => {
            let mut cfg = NoisyRateConfig::new(a.m_grid.clone(), scenario.d);
            if a.k.is_some() || a.k_exponent.is_some() {
                cfg.k_rule = rule;
            }
            cfg.n = a.n.unwrap_or(cfg.n);
            cfg.replications = a.run.reps.unwrap_or(cfg.replications);
            cfg.base_seed = a.run.seed;
            cfg.norm = a.run.norm;
            cfg.timing = a.run.timing;
            let out = noisy_rate_experiment(&scenario, &cfg)?;
            let extra = vec![
                ("statistic", "squared_qi_error".to_string()),
                ("k_rule", cfg.k_rule.to_string()),
                ("fit_of", "sqrt(mean)".to_string()),
            ];
            (out.records, out.summary, out.fit, extra)
        }
    };
    write_file(&a.run.out, "runs.csv", &runs_csv(&records))?;
    write_file(&a.run.out, "summary.csv", &summary_csv("m", &summary))?;
    if let Some(fit) = &fit {
        write_file(&a.run.out, "ratefit.csv", &ratefit_csv(fit))?;
    }
    write_file(&a.run.out, "manifest.txt", &manifest("rate-exp", matches, &extra))
}

fn cmd_qi(a: &QiArgs, matches: &ArgMatches) -> Result<()> {
    let scenario = a.scenario.build()?;
    prepare_out(&a.run)?;
    let cfg = QiConfig {
        m: a.m,
        n: a.n,
        k: a.k,
        s_corr_grid: a.scorr_grid.clone(),
        replications: a.run.reps.unwrap_or(500),
        base_seed: a.run.seed,
        norm: a.run.norm,
        timing: a.run.timing,
    };
    let out = qi_experiment(&scenario, &cfg)?;
    write_file(&a.run.out, "runs.csv", &runs_csv(&out.records))?;
    write_file(&a.run.out, "summary.csv", &summary_csv("s_corr", &out.summary))?;
    let extra = [("statistic", "squared_qi_error".to_string())];
    write_file(&a.run.out, "manifest.txt", &manifest("qi-exp", matches, &extra))
}

fn cmd_atom(a: &AtomArgs, matches: &ArgMatches) -> Result<()> {
    let ov = Overrides {
        mu: a.mu,
        sigma: a.sigma,
        s_corr: a.scorr,
        noiseless: a.noiseless.then_some(true),
        atom: a.atom.clone(),
        ..Default::default()
    };
    let scenario = builtin_scenario("atom_demo", &ov)?;
    prepare_out(&a.run)?;
    let cfg = AtomConfig {
        m_grid: a.m_grid.clone(),
        n: a.n,
        replications: a.run.reps.unwrap_or(200),
        base_seed: a.run.seed,
        norm: a.run.norm,
        timing: a.run.timing,
    };
    let out = atom_consistency_experiment(&scenario, &cfg)?;
    write_file(&a.run.out, "runs.csv", &runs_csv(&out.records))?;
    write_file(&a.run.out, "summary_k1.csv", &summary_csv("m", &out.single_neighbor))?;
    write_file(&a.run.out, "summary_ksqrt.csv", &summary_csv("m", &out.growing_neighbors))?;
    let x0 = scenario.params.atom.clone().unwrap_or_default();
    let var = scenario.noise_variance.as_ref().map_or(f64::NAN, |v| v(&x0));
    let extra = [
        ("statistic", "abs_qi_error".to_string()),
        ("qi", scenario.qi.map(fmt_f64).unwrap_or_default()),
        ("noise_variance_at_atom", fmt_f64(var)),
    ];
    write_file(&a.run.out, "manifest.txt", &manifest("atom-demo", matches, &extra))
}

fn cmd_regress(a: &RegressArgs, matches: &ArgMatches) -> Result<()> {
    let scenario = a.scenario.build()?;
    prepare_out(&a.run)?;
    let cfg = RegressionConfig {
        m_grid: a.m_grid.clone(),
        k_rule: k_rule(a.k, a.k_exponent)?,
        n_test: a.n_test,
        replications: a.run.reps.unwrap_or(200),
        base_seed: a.run.seed,
        norm: a.run.norm,
    };
    let out = regression_experiment(&scenario, &cfg)?;
    write_file(&a.run.out, "runs.csv", &runs_csv(&out.records))?;
    write_file(&a.run.out, "summary.csv", &summary_csv("m", &out.summary))?;
    if let Some(fit) = &out.fit {
        write_file(&a.run.out, "ratefit.csv", &ratefit_csv(fit))?;
    }
    let extra = [
        ("statistic", "regression_mse".to_string()),
        ("k_rule", cfg.k_rule.to_string()),
        ("fit_of", "sqrt(mean)".to_string()),
    ];
    write_file(&a.run.out, "manifest.txt", &manifest("regress-exp", matches, &extra))
}

fn cmd_constants(a: &ConstantsArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let scenario = a.scenario.build()?;
    if a.k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    let moment = scenario.inv_density_moment(a.q, a.draws, a.seed)?;
    let rc = rate_constant(a.q, scenario.d, a.norm, moment.mean)?;
    let s = format!(
        "scenario,q,d,norm,v_d,inv_density_moment,moment_stderr,rate_constant,k,cdq_k,cdq_inf,zador_exponent\n\
         {},{},{},{},{},{},{},{},{},{},{},{}\n",
        scenario.name(),
        fmt_f64(a.q),
        scenario.d,
        a.norm,
        fmt_f64(rc.v_d),
        fmt_f64(moment.mean),
        fmt_f64(moment.stderr),
        fmt_f64(rc.value),
        a.k,
        fmt_f64(cdq(a.q, scenario.d, KLimit::Finite(a.k))),
        fmt_f64(cdq(a.q, scenario.d, KLimit::Infinite)),
        fmt_f64(zador_exponent(a.q, scenario.d)),
    );
    stdout.write_all(s.as_bytes()).map_err(|e| Error::invalid(e.to_string()))?;
    for d in scenario.diagnostics(a.q) {
        let holds = d.holds.map_or("n/a".to_string(), |h| h.to_string());
        let _ = writeln!(stderr, "diagnostic {}: {holds} ({})", d.name, d.detail);
    }
    Ok(())
}

fn config_value(v: &toml::Value) -> Result<String> {
    Ok(match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        toml::Value::Array(items) => items
            .iter()
            .map(|i| match i {
                toml::Value::Array(_) | toml::Value::Table(_) => {
                    Err(Error::invalid("config arrays must hold scalars"))
                }
                other => config_value(other),
            })
            .collect::<Result<Vec<_>>>()?
            .join(","),
        _ => return Err(Error::invalid("config must be a flat key-value file")),
    })
}

/// Splices flags from a `--config` file in front of the command-line flags
/// so that the latter override it.
fn apply_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let strs: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut i = 0;
    while i < args.len() {
        if strs[i] == "--config" && i + 1 < args.len() {
            path = Some(strs[i + 1].clone());
            i += 2;
            continue;
        }
        if let Some(p) = strs[i].strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(args[i].clone());
        }
        i += 1;
    }
    let Some(path) = path else { return Ok(args) };
    let sub_pos = 1;
    let sub_name = rest
        .get(sub_pos)
        .map(|s| s.to_string_lossy().into_owned())
        .ok_or_else(|| Error::invalid("--config needs a subcommand"))?;
    let cmd = Cli::command();
    let sub = cmd
        .find_subcommand(&sub_name)
        .ok_or_else(|| Error::invalid(format!("unknown subcommand '{sub_name}'")))?;
    let text = fs::read_to_string(&path).map_err(|e| io_error(Path::new(&path), e))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| Error::invalid(format!("{path}: {e}")))?;
    let mut injected = Vec::new();
    for (key, value) in &table {
        let flag = key.replace('_', "-");
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(flag.as_str()) && flag != "config")
            .ok_or_else(|| Error::invalid(format!("{path}: unknown key '{key}' for {sub_name}")))?;
        let is_switch = matches!(arg.get_action(), clap::ArgAction::SetTrue);
        match (is_switch, value) {
            (true, toml::Value::Boolean(true)) => injected.push(format!("--{flag}")),
            (true, toml::Value::Boolean(false)) => {}
            (true, _) => return Err(Error::invalid(format!("{path}: '{key}' must be a boolean"))),
            (false, v) => injected.push(format!("--{flag}={}", config_value(v)?)),
        }
    }
    let mut out: Vec<OsString> = rest[..=sub_pos].to_vec();
    out.extend(injected.into_iter().map(OsString::from));
    out.extend(rest[sub_pos + 1..].iter().cloned());
    Ok(out)
}

fn in_pool(threads: Option<usize>, body: impl FnOnce() -> Result<()> + Send) -> Result<()> {
    match threads {
        Some(0) => Err(Error::invalid("--threads must be positive")),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::invalid(e.to_string()))?
            .install(body),
        None => body(),
    }
}

fn dispatch(cli: &Cli, matches: &ArgMatches, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let sub = matches.subcommand().map(|(_, m)| m).expect("subcommand required");
    match &cli.command {
        Command::Weights(a) => cmd_weights(a, stdout),
        Command::Distance(a) => cmd_distance(a, stdout),
        Command::Constants(a) => cmd_constants(a, stdout, stderr),
        Command::RateExp(a) => in_pool(a.run.threads, || cmd_rate(a, sub)),
        Command::QiExp(a) => in_pool(a.run.threads, || cmd_qi(a, sub)),
        Command::AtomDemo(a) => in_pool(a.run.threads, || cmd_atom(a, sub)),
        Command::RegressExp(a) => in_pool(a.run.threads, || cmd_regress(a, sub)),
    }
}

/// Runs the command line `args` (program name first) and returns the exit
/// code: 0 on success, 2 on invalid input, 3 on numerical failure.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args = match apply_config(args.into_iter().map(Into::into).collect()) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return e.exit_code();
        }
    };
    let matches = match Cli::command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return 2;
        }
    };
    match dispatch(&cli, &matches, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

/// [`run_with`] on the process arguments and standard streams.
pub fn run() -> i32 {
    let code = run_with(std::env::args_os(), &mut io::stdout().lock(), &mut io::stderr().lock());
    let _ = io::stdout().flush();
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(4.0 / 3.0), "1.3333333333333333");
        assert_eq!(fmt_f64(2.0 / 3.0), "0.66666666666666663");
        assert_eq!(fmt_f64(0.5), "0.5");
        assert_eq!(fmt_f64(2.0), "2");
        assert_eq!(fmt_f64(0.1), "0.10000000000000001");
        assert_eq!(fmt_f64(1e-7), "9.9999999999999995e-08");
        assert_eq!(fmt_f64(1e20), "1e+20");
        assert_eq!(fmt_f64(-250.0), "-250");
        assert_eq!(fmt_f64(0.0), "0");
        for x in [1.0 / 7.0, 1e-300, 123456.789, -3.3e17, 5e-324] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn parses_every_subcommand() {
        Cli::command().debug_assert();
    }
}
