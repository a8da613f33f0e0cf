//! Experiment orchestration: JSON-configured Monte Carlo grids over
//! (algorithm, budget) cells, order-independent aggregation of
//! misidentification counts, decay-slope fits, and the CSV/JSON result
//! formats.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run, AlgorithmSpec, GnaParams};
use crate::model::{
    generate_instance, make_bernoulli_instance, make_gaussian_instance, BanditInstance,
    GeneratorSpec, MeanPattern, OutcomeKind, RngStream,
};
use crate::{Error, Result};

/// Config schema version this build reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Stream index reserved for generating a shared instance, outside the
/// per-trial index range any practical trial count reaches.
const SHARED_INSTANCE_STREAM: u64 = u64::MAX;

/// Algorithm identifiers as they appear in configs and in the results CSV.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AlgorithmKind {
    #[serde(rename = "GNA")]
    Gna,
    #[serde(rename = "GNAKnownVariance")]
    GnaKnownVariance,
    #[serde(rename = "Uniform")]
    Uniform,
    #[serde(rename = "SuccessiveRejects")]
    SuccessiveRejects,
    #[serde(rename = "GJOracle")]
    GjOracle,
}

impl AlgorithmKind {
    pub fn label(&self) -> &'static str {
        match self {
            AlgorithmKind::Gna => "GNA",
            AlgorithmKind::GnaKnownVariance => "GNAKnownVariance",
            AlgorithmKind::Uniform => "Uniform",
            AlgorithmKind::SuccessiveRejects => "SuccessiveRejects",
            AlgorithmKind::GjOracle => "GJOracle",
        }
    }

    fn accepts_estimator_params(&self) -> bool {
        matches!(self, AlgorithmKind::Gna | AlgorithmKind::GnaKnownVariance)
    }
}

/// One algorithm entry in a config. The tuning fields apply only to the
/// adaptive kinds; setting them on a baseline is rejected rather than
/// silently ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub kind: AlgorithmKind,
    /// Variance floor (GNA only; the known-variance kind never estimates).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Plug-in truncation bound (GNA, GNAKnownVariance).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_mu: Option<f64>,
    /// Per-arm weight floor (GNA, GNAKnownVariance).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_min: Option<f64>,
}

impl AlgorithmConfig {
    pub fn new(kind: AlgorithmKind) -> Self {
        AlgorithmConfig {
            kind,
            eta: None,
            c_mu: None,
            w_min: None,
        }
    }

    fn params(&self) -> GnaParams {
        let d = GnaParams::default();
        GnaParams {
            eta: self.eta.unwrap_or(d.eta),
            c_mu: self.c_mu.unwrap_or(d.c_mu),
            w_min: self.w_min.unwrap_or(d.w_min),
        }
    }
}

/// Instance family tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InstanceFamily {
    #[serde(rename = "gaussian")]
    Gaussian,
    #[serde(rename = "bernoulli")]
    Bernoulli,
    #[serde(rename = "paper_generator")]
    Generated,
}

/// Instance section of a config: a family tag plus the union of the
/// per-family fields, validated against the tag. `fresh_per_trial` redraws a
/// generated instance each trial; on explicit instances it has no effect
/// because their construction is deterministic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    #[serde(rename = "type")]
    pub family: InstanceFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub means: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sds: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_pattern: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_bar: Option<f64>,
    #[serde(default)]
    pub fresh_per_trial: bool,
}

impl InstanceConfig {
    pub fn gaussian(means: Vec<f64>, sds: Vec<f64>) -> Self {
        InstanceConfig {
            family: InstanceFamily::Gaussian,
            means: Some(means),
            sds: Some(sds),
            k: None,
            mu_pattern: None,
            sigma_bar: None,
            fresh_per_trial: false,
        }
    }

    pub fn bernoulli(means: Vec<f64>) -> Self {
        InstanceConfig {
            family: InstanceFamily::Bernoulli,
            means: Some(means),
            sds: None,
            k: None,
            mu_pattern: None,
            sigma_bar: None,
            fresh_per_trial: false,
        }
    }

    pub fn generated(k: usize, mu_pattern: &str, sigma_bar: f64, fresh_per_trial: bool) -> Self {
        InstanceConfig {
            family: InstanceFamily::Generated,
            means: None,
            sds: None,
            k: Some(k),
            mu_pattern: Some(mu_pattern.to_string()),
            sigma_bar: Some(sigma_bar),
            fresh_per_trial,
        }
    }
}

/// A full experiment description, read from and written to JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub master_seed: u64,
    pub trials: u64,
    pub algorithms: Vec<AlgorithmConfig>,
    pub instance: InstanceConfig,
    pub budgets: Vec<usize>,
    pub output: PathBuf,
}

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}

/// Aggregated result of one (algorithm, T) cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellSummary {
    pub algorithm: String,
    #[serde(rename = "T")]
    pub t: usize,
    pub trials: u64,
    pub errors: u64,
    /// errors/trials.
    pub p_hat: f64,
    /// √(p̂(1−p̂)/trials).
    pub se: f64,
    /// Mean share of spent pulls per arm; sums to one. Equals mean
    /// N_a(T)/T for every algorithm that spends the full budget.
    pub allocation: Vec<f64>,
}

/// All cells of an experiment, sorted by (algorithm, T).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub cells: Vec<CellSummary>,
}

/// Least-squares fit of log p̂ against T.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    /// Fitted d(log p̂)/dT; the empirical rate is its negation.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// How instances are produced across trials.
#[derive(Debug)]
enum InstancePlan {
    Shared(BanditInstance),
    FreshGenerated(GeneratorSpec),
}

fn parse_pattern(name: &str) -> Result<MeanPattern> {
    match name {
        "two-fixed" => Ok(MeanPattern::TwoFixed),
        "all-095" => Ok(MeanPattern::AllNinetyFive),
        other => Err(Error::Config(format!(
            "unsupported pattern name: {other:?} (expected \"two-fixed\" or \"all-095\")"
        ))),
    }
}

fn require<T>(field: Option<T>, name: &str, family: &str) -> Result<T> {
    field.ok_or_else(|| Error::Config(format!("{family} instance requires `{name}`")))
}

fn forbid<T>(field: &Option<T>, name: &str, family: &str) -> Result<()> {
    if field.is_some() {
        return Err(Error::Config(format!(
            "`{name}` is not a field of {family} instances"
        )));
    }
    Ok(())
}

fn build_instance_plan(cfg: &InstanceConfig, master_seed: u64) -> Result<InstancePlan> {
    match cfg.family {
        InstanceFamily::Gaussian => {
            forbid(&cfg.k, "k", "gaussian")?;
            forbid(&cfg.mu_pattern, "mu_pattern", "gaussian")?;
            forbid(&cfg.sigma_bar, "sigma_bar", "gaussian")?;
            let means = require(cfg.means.clone(), "means", "gaussian")?;
            let sds = require(cfg.sds.clone(), "sds", "gaussian")?;
            Ok(InstancePlan::Shared(make_gaussian_instance(&means, &sds)?))
        }
        InstanceFamily::Bernoulli => {
            forbid(&cfg.sds, "sds", "bernoulli")?;
            forbid(&cfg.k, "k", "bernoulli")?;
            forbid(&cfg.mu_pattern, "mu_pattern", "bernoulli")?;
            forbid(&cfg.sigma_bar, "sigma_bar", "bernoulli")?;
            let means = require(cfg.means.clone(), "means", "bernoulli")?;
            Ok(InstancePlan::Shared(make_bernoulli_instance(&means)?))
        }
        InstanceFamily::Generated => {
            forbid(&cfg.means, "means", "paper_generator")?;
            forbid(&cfg.sds, "sds", "paper_generator")?;
            let spec = GeneratorSpec {
                k: require(cfg.k, "k", "paper_generator")?,
                mu_pattern: parse_pattern(&require(
                    cfg.mu_pattern.clone(),
                    "mu_pattern",
                    "paper_generator",
                )?)?,
                sigma_bar: require(cfg.sigma_bar, "sigma_bar", "paper_generator")?,
                distribution_kind: OutcomeKind::Gaussian,
            };
            if cfg.fresh_per_trial {
                // Validate the spec once before the trials fan out.
                generate_instance(&spec, &mut RngStream::new(master_seed, SHARED_INSTANCE_STREAM))?;
                Ok(InstancePlan::FreshGenerated(spec))
            } else {
                let mut rng = RngStream::new(master_seed, SHARED_INSTANCE_STREAM);
                Ok(InstancePlan::Shared(generate_instance(&spec, &mut rng)?))
            }
        }
    }
}

fn validate_params(entry: &AlgorithmConfig, index: usize, k: usize) -> Result<GnaParams> {
    let label = entry.kind.label();
    if !entry.kind.accepts_estimator_params() {
        for (name, set) in [
            ("eta", entry.eta.is_some()),
            ("c_mu", entry.c_mu.is_some()),
            ("w_min", entry.w_min.is_some()),
        ] {
            if set {
                return Err(Error::Config(format!(
                    "algorithms[{index}]: `{name}` is not a parameter of {label}"
                )));
            }
        }
    }
    if entry.kind == AlgorithmKind::GnaKnownVariance && entry.eta.is_some() {
        return Err(Error::Config(format!(
            "algorithms[{index}]: `eta` is not a parameter of {label} \
             (it never estimates variances)"
        )));
    }
    let p = entry.params();
    if !p.eta.is_finite() || p.eta <= 0.0 {
        return Err(Error::Config(format!(
            "algorithms[{index}]: eta must be finite and positive (got {})",
            p.eta
        )));
    }
    if !p.c_mu.is_finite() || p.c_mu <= 0.0 {
        return Err(Error::Config(format!(
            "algorithms[{index}]: c_mu must be finite and positive (got {})",
            p.c_mu
        )));
    }
    if !p.w_min.is_finite() || p.w_min < 0.0 || p.w_min * k as f64 >= 1.0 {
        return Err(Error::Config(format!(
            "algorithms[{index}]: w_min must lie in [0, 1/K) (got {} with K={k})",
            p.w_min
        )));
    }
    Ok(p)
}

#[derive(Debug)]
struct ValidatedExperiment {
    algorithms: Vec<(AlgorithmKind, GnaParams)>,
    plan: InstancePlan,
}

fn validate_config(cfg: &ExperimentConfig) -> Result<ValidatedExperiment> {
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            cfg.schema_version
        )));
    }
    if cfg.trials < 1 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    if cfg.algorithms.is_empty() {
        return Err(Error::Config("algorithms must be non-empty".into()));
    }
    for (i, a) in cfg.algorithms.iter().enumerate() {
        if cfg.algorithms[..i].iter().any(|b| b.kind == a.kind) {
            return Err(Error::Config(format!(
                "algorithms[{i}]: duplicate kind {}",
                a.kind.label()
            )));
        }
    }
    if cfg.budgets.is_empty() {
        return Err(Error::Config("budgets must be non-empty".into()));
    }
    if cfg.budgets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!(
            "budgets must be strictly increasing (got {:?})",
            cfg.budgets
        )));
    }
    if cfg.output.as_os_str().is_empty() {
        return Err(Error::Config("output path must be non-empty".into()));
    }

    let plan = build_instance_plan(&cfg.instance, cfg.master_seed)?;
    let k = match &plan {
        InstancePlan::Shared(inst) => inst.k(),
        InstancePlan::FreshGenerated(spec) => spec.k,
    };
    if let Some(&t) = cfg.budgets.iter().find(|&&t| t < k) {
        return Err(Error::Config(format!(
            "budget T={t} is below the arm count K={k}"
        )));
    }
    let algorithms = cfg
        .algorithms
        .iter()
        .enumerate()
        .map(|(i, a)| Ok((a.kind, validate_params(a, i, k)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ValidatedExperiment { algorithms, plan })
}

fn engine_spec(kind: AlgorithmKind, params: GnaParams, instance: &BanditInstance) -> AlgorithmSpec {
    match kind {
        AlgorithmKind::Gna => AlgorithmSpec::Gna(params),
        AlgorithmKind::GnaKnownVariance => AlgorithmSpec::GnaKnownVariance {
            sigmas: instance.sds(),
            params,
        },
        AlgorithmKind::Uniform => AlgorithmSpec::Uniform,
        AlgorithmKind::SuccessiveRejects => AlgorithmSpec::SuccessiveRejects,
        AlgorithmKind::GjOracle => AlgorithmSpec::GjOracle {
            means: instance.means(),
            sigmas: instance.sds(),
        },
    }
}

/// Per-cell accumulator. Everything crossing trial boundaries is an integer,
/// so merging is exact and the totals cannot depend on scheduling order.
#[derive(Clone)]
struct CellAccumulator {
    errors: u64,
    pull_sums: Vec<u64>,
    spent: u64,
}

impl CellAccumulator {
    fn zero(k: usize) -> Self {
        CellAccumulator {
            errors: 0,
            pull_sums: vec![0; k],
            spent: 0,
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.errors += other.errors;
        for (a, b) in self.pull_sums.iter_mut().zip(&other.pull_sums) {
            *a += b;
        }
        self.spent += other.spent;
        self
    }
}

fn run_cell(
    kind: AlgorithmKind,
    params: GnaParams,
    plan: &InstancePlan,
    t_budget: usize,
    trials: u64,
    master_seed: u64,
    k: usize,
) -> Result<CellSummary> {
    let label = kind.label();
    let cell_err = |trial: u64, e: Error| {
        Error::Computation(format!("cell ({label}, T={t_budget}), trial {trial}: {e}"))
    };
    let acc = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<CellAccumulator> {
            let mut rng = RngStream::new(master_seed, trial);
            let (outcome, best) = match plan {
                InstancePlan::Shared(inst) => {
                    let spec = engine_spec(kind, params, inst);
                    (
                        run(&spec, inst, t_budget, &mut rng).map_err(|e| cell_err(trial, e))?,
                        inst.best_arm(),
                    )
                }
                InstancePlan::FreshGenerated(gen) => {
                    let inst =
                        generate_instance(gen, &mut rng).map_err(|e| cell_err(trial, e))?;
                    let spec = engine_spec(kind, params, &inst);
                    (
                        run(&spec, &inst, t_budget, &mut rng).map_err(|e| cell_err(trial, e))?,
                        inst.best_arm(),
                    )
                }
            };
            let mut acc = CellAccumulator::zero(k);
            acc.errors = u64::from(outcome.recommended != best);
            for (s, &n) in acc.pull_sums.iter_mut().zip(&outcome.counts) {
                *s = n;
                acc.spent += n;
            }
            Ok(acc)
        })
        .try_reduce(|| CellAccumulator::zero(k), |a, b| Ok(a.merge(b)));
    let acc = acc?;

    let p_hat = acc.errors as f64 / trials as f64;
    Ok(CellSummary {
        algorithm: label.to_string(),
        t: t_budget,
        trials,
        errors: acc.errors,
        p_hat,
        se: (p_hat * (1.0 - p_hat) / trials as f64).sqrt(),
        allocation: acc
            .pull_sums
            .iter()
            .map(|&n| n as f64 / acc.spent as f64)
            .collect(),
    })
}

/// Runs every (algorithm, T) cell of the config: `trials` independent runs
/// per cell, trial i always drawing from RngStream(master_seed, i), an error
/// counted when the recommendation misses that trial's true best arm. The
/// same trial streams are reused across cells, so algorithms are compared
/// under common random numbers.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentSummary> {
    let v = validate_config(config)?;
    let k = match &v.plan {
        InstancePlan::Shared(inst) => inst.k(),
        InstancePlan::FreshGenerated(spec) => spec.k,
    };
    let mut cells = Vec::new();
    for &(kind, params) in &v.algorithms {
        for &t_budget in &config.budgets {
            cells.push(run_cell(
                kind,
                params,
                &v.plan,
                t_budget,
                config.trials,
                config.master_seed,
                k,
            )?);
        }
    }
    cells.sort_by(|a, b| (a.algorithm.as_str(), a.t).cmp(&(b.algorithm.as_str(), b.t)));
    Ok(ExperimentSummary { cells })
}

/// [`run_experiment`] on a dedicated thread pool of `workers` threads.
/// Summaries are identical for every worker count.
pub fn run_experiment_with_workers(
    config: &ExperimentConfig,
    workers: usize,
) -> Result<ExperimentSummary> {
    if workers == 0 {
        return Err(Error::Validation("workers must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Computation(format!("cannot build worker pool: {e}")))?;
    pool.install(|| run_experiment(config))
}

/// Ordinary least squares of log p̂ on T over the points with p̂ ∈ (0,1);
/// needs at least three usable points. R² is reported as 1 when the
/// residuals vanish entirely.
pub fn fit_decay(points: &[(f64, f64)]) -> Result<DecayFit> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(_, p)| p > 0.0 && p < 1.0)
        .map(|&(t, p)| (t, p.ln()))
        .collect();
    if usable.len() < 3 {
        return Err(Error::Validation(format!(
            "need at least 3 points with p_hat in (0,1), got {}",
            usable.len()
        )));
    }
    let n = usable.len() as f64;
    let x_bar = usable.iter().map(|&(t, _)| t).sum::<f64>() / n;
    let y_bar = usable.iter().map(|&(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|&(t, _)| (t - x_bar) * (t - x_bar)).sum();
    if sxx == 0.0 {
        return Err(Error::Validation(
            "decay fit needs at least two distinct T values".into(),
        ));
    }
    let sxy: f64 = usable
        .iter()
        .map(|&(t, y)| (t - x_bar) * (y - y_bar))
        .sum();
    let slope = sxy / sxx;
    let intercept = y_bar - slope * x_bar;
    let ss_res: f64 = usable
        .iter()
        .map(|&(t, y)| {
            let r = y - (intercept + slope * t);
            r * r
        })
        .sum();
    let ss_tot: f64 = usable.iter().map(|&(_, y)| (y - y_bar) * (y - y_bar)).sum();
    let r_squared = if ss_res == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(DecayFit {
        slope,
        intercept,
        r_squared,
    })
}

/// The results CSV as a string: exact header
/// `algorithm,T,trials,errors,p_hat,se`, floats at six decimal places, rows
/// sorted by (algorithm, T).
pub fn results_csv(summary: &ExperimentSummary) -> String {
    let mut rows: Vec<&CellSummary> = summary.cells.iter().collect();
    rows.sort_by(|a, b| (a.algorithm.as_str(), a.t).cmp(&(b.algorithm.as_str(), b.t)));
    let mut out = String::from("algorithm,T,trials,errors,p_hat,se\n");
    for c in rows {
        out.push_str(&format!(
            "{},{},{},{},{:.6},{:.6}\n",
            c.algorithm, c.t, c.trials, c.errors, c.p_hat, c.se
        ));
    }
    out
}

/// Writes the results CSV to `path`.
pub fn write_results(summary: &ExperimentSummary, path: &Path) -> Result<()> {
    fs::write(path, results_csv(summary))
        .map_err(|e| Error::Config(format!("cannot write results to {}: {e}", path.display())))
}

/// One parsed row of a results CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub algorithm: String,
    pub t: usize,
    pub trials: u64,
    pub errors: u64,
    pub p_hat: f64,
    pub se: f64,
}

/// Reads a results CSV, insisting on the exact header.
pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let ctx = |e: String| Error::Config(format!("cannot read results {}: {e}", path.display()));
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| ctx(e.to_string()))?;
    let header = reader.headers().map_err(|e| ctx(e.to_string()))?.clone();
    let expected = ["algorithm", "T", "trials", "errors", "p_hat", "se"];
    if header.iter().ne(expected) {
        return Err(ctx(format!(
            "unexpected header {:?} (want {expected:?})",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| ctx(e.to_string()))?;
        let field = |j: usize| -> Result<&str> {
            record
                .get(j)
                .ok_or_else(|| ctx(format!("row {} is missing column {j}", i + 1)))
        };
        let parse_err =
            |col: &str, e: String| ctx(format!("row {}, column {col}: {e}", i + 1));
        rows.push(ResultRow {
            algorithm: field(0)?.to_string(),
            t: field(1)?
                .parse()
                .map_err(|e: std::num::ParseIntError| parse_err("T", e.to_string()))?,
            trials: field(2)?
                .parse()
                .map_err(|e: std::num::ParseIntError| parse_err("trials", e.to_string()))?,
            errors: field(3)?
                .parse()
                .map_err(|e: std::num::ParseIntError| parse_err("errors", e.to_string()))?,
            p_hat: field(4)?
                .parse()
                .map_err(|e: std::num::ParseFloatError| parse_err("p_hat", e.to_string()))?,
            se: field(5)?
                .parse()
                .map_err(|e: std::num::ParseFloatError| parse_err("se", e.to_string()))?,
        });
    }
    Ok(rows)
}

/// Decay-fit input points (T, p̂) per algorithm, in first-seen order.
pub fn group_decay_points(rows: &[ResultRow]) -> Vec<(String, Vec<(f64, f64)>)> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for row in rows {
        if !groups.contains_key(&row.algorithm) {
            order.push(row.algorithm.clone());
        }
        groups
            .entry(row.algorithm.clone())
            .or_default()
            .push((row.t as f64, row.p_hat));
    }
    order
        .into_iter()
        .map(|name| {
            let pts = groups.remove(&name).unwrap();
            (name, pts)
        })
        .collect()
}

/// Reads a config JSON; a missing file reports "config not found".
pub fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let raw = fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::Config(format!("config not found: {}", path.display()))
        } else {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        }
    })?;
    let cfg: ExperimentConfig = serde_json::from_str(&raw)
        .map_err(|e| Error::Config(format!("invalid config {}: {e}", path.display())))?;
    validate_config(&cfg)?;
    Ok(cfg)
}

/// Writes a config as pretty JSON; read_config ∘ write_config is identity.
pub fn write_config(config: &ExperimentConfig, path: &Path) -> Result<()> {
    let raw = serde_json::to_string_pretty(config)
        .map_err(|e| Error::Config(format!("cannot serialize config: {e}")))?;
    fs::write(path, raw + "\n")
        .map_err(|e| Error::Config(format!("cannot write config to {}: {e}", path.display())))
}

#[derive(Serialize)]
struct CellReport<'a> {
    cells: &'a [CellSummary],
    decay_fits: BTreeMap<String, DecayFit>,
}

/// Writes the per-cell JSON report: every cell with its allocation
/// fractions, plus a decay fit per algorithm that has at least three cells
/// with interior p̂.
pub fn write_cell_report(summary: &ExperimentSummary, path: &Path) -> Result<()> {
    let rows: Vec<ResultRow> = summary
        .cells
        .iter()
        .map(|c| ResultRow {
            algorithm: c.algorithm.clone(),
            t: c.t,
            trials: c.trials,
            errors: c.errors,
            p_hat: c.p_hat,
            se: c.se,
        })
        .collect();
    let mut decay_fits = BTreeMap::new();
    for (name, points) in group_decay_points(&rows) {
        if let Ok(fit) = fit_decay(&points) {
            decay_fits.insert(name, fit);
        }
    }
    let report = CellReport {
        cells: &summary.cells,
        decay_fits,
    };
    let raw = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Config(format!("cannot serialize report: {e}")))?;
    fs::write(path, raw + "\n")
        .map_err(|e| Error::Config(format!("cannot write report to {}: {e}", path.display())))
}
