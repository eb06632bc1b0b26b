//! `prefmgda` command line.
//!
//! Exit codes: 0 success, 1 usage/config/runtime error, 2 constraints not satisfied.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::baselines::{grid_search, static_scaling_posterior, static_scaling_prior};
use crate::datagen::{generate, DemandClass, DemandPanel, GenSpec};
use crate::error::{Error, Result};
use crate::forecast::{
    Activation, ForecastConfig, ForecastProblem, LossMetricBinding, ModelKind, ModelSpec,
    WindowConfig,
};
use crate::mgda::{optimize, MultiObjectiveProblem, TrainConfig, TrainTrace};
use crate::posterior::{
    achieved_granularity, coverage_span, explore_frontier, ExploreConfig, FrontierArchive,
};
use crate::prior::{solve_preferred, ConstraintSet, PriorConfig};
use crate::toys::{FonsecaFleming, QuadraticBowls};
use crate::types::{MetricBounds, PreferenceWeights};

/// Directory searched for relative `--data` paths that don't exist as given.
pub const DATA_DIR_ENV: &str = "PREFMGDA_DATA_DIR";

#[derive(Parser, Debug)]
#[command(name = "prefmgda", version, about = "Preference-guided multi-objective training")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a synthetic demand panel as CSV.
    GenData(GenDataArgs),
    /// Explore the metric frontier and write the archive.
    Frontier(FrontierArgs),
    /// Search for a solution satisfying metric constraints.
    Prefer(PreferArgs),
    /// Train once with fixed preference weights and write the trace.
    Train(TrainArgs),
}

#[derive(Args, Debug)]
pub struct GenDataArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub series: usize,
    #[arg(long, default_value_t = 120)]
    pub weeks: usize,
    #[arg(long, value_enum, default_value_t = DemandClass::NonIntermittent)]
    pub class: DemandClass,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Toy {
    /// Two quadratic bowls; convex frontier.
    Quadratic,
    /// Fonseca-Fleming; concave frontier.
    Nonconvex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelChoice {
    Linear,
    Feedforward,
}

/// Where the problem comes from and how it is trained.
#[derive(Args, Debug, Clone)]
pub struct ProblemArgs {
    /// Demand CSV; relative paths also resolve against $PREFMGDA_DATA_DIR.
    #[arg(long, conflicts_with = "toy")]
    pub data: Option<PathBuf>,
    /// Built-in test problem, used when --data is absent.
    #[arg(long, value_enum)]
    pub toy: Option<Toy>,
    #[arg(long, default_value_t = 8)]
    pub input_weeks: usize,
    #[arg(long, default_value_t = 8)]
    pub horizon: usize,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(long, value_enum, default_value_t = ModelChoice::Feedforward)]
    pub model: ModelChoice,
    #[arg(long, default_value_t = 0.9, value_parser = parse_quantile)]
    pub quantile: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = parse_positive)]
    pub lr: Option<f64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub steps: Option<u64>,
    /// Steps without a new best metric before a run stops.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub patience: Option<u64>,
    /// Start each run from the previous run's parameters.
    #[arg(long)]
    pub warm_start: bool,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FrontierMethod {
    Mgda,
    Static,
    Grid,
}

#[derive(Args, Debug)]
pub struct FrontierArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_enum, default_value_t = FrontierMethod::Mgda)]
    pub method: FrontierMethod,
    /// Granularity target per metric, comma separated; one value applies to all.
    #[arg(long, value_delimiter = ',', value_parser = parse_positive, default_value = "0.1")]
    pub phi: Vec<f64>,
    #[arg(long, default_value_t = 2.0, value_parser = parse_pace)]
    pub pace: f64,
    /// Knowledge bounds per metric as lo:hi, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_range)]
    pub bounds: Vec<(f64, f64)>,
    /// Round limit; for grid search, the grid resolution.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_rounds: Option<u64>,
    /// Also run grid search with the same number of runs and report span ratios.
    #[arg(long)]
    pub compare_grid: bool,
    /// Archive CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON summary; defaults to the archive path with a .json extension.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PreferMethod {
    Mgda,
    Static,
}

#[derive(Args, Debug)]
pub struct PreferArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Constraint tokens, e.g. "sl>=0.95 acc>=0.6" or "m1>=0.9|m1==0.5".
    #[arg(long)]
    pub constraints: String,
    #[arg(long, value_enum, default_value_t = PreferMethod::Mgda)]
    pub method: PreferMethod,
    #[arg(long, default_value_t = 1.25, value_parser = parse_pace)]
    pub pace: f64,
    /// Round limit per feasible subset.
    #[arg(long, default_value_t = 25, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_rounds: u64,
    #[arg(long, default_value_t = 1e-3, value_parser = parse_positive)]
    pub eq_tol: f64,
    /// Result record (JSON).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Preference weights, comma separated; defaults to uniform.
    #[arg(long, value_delimiter = ',', value_parser = parse_positive)]
    pub weights: Vec<f64>,
    #[arg(long)]
    pub trace_out: PathBuf,
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("`{s}`: {e}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_positive(s: &str) -> std::result::Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("`{s}` must be positive"))
    }
}

fn parse_pace(s: &str) -> std::result::Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 1.0 {
        Ok(v)
    } else {
        Err(format!("pace `{s}` must be greater than 1"))
    }
}

fn parse_quantile(s: &str) -> std::result::Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("quantile `{s}` must lie in (0, 1)"))
    }
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("`{s}` is not of the form lo:hi"))?;
    let (lo, hi) = (parse_f64(lo)?, parse_f64(hi)?);
    if lo < hi {
        Ok((lo, hi))
    } else {
        Err(format!("`{s}`: lo must be below hi"))
    }
}

/// Runs the command line with the process arguments and returns the exit code.
pub fn main() -> i32 {
    run(std::env::args_os())
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Frontier(a) => with_jobs(a.problem.jobs, || frontier(a)),
        Command::Prefer(a) => with_jobs(a.problem.jobs, || prefer(a)),
        Command::Train(a) => with_jobs(a.problem.jobs, || train(a)),
    }
}

fn with_jobs(jobs: usize, f: impl FnOnce() -> Result<i32> + Send) -> Result<i32> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::contract(format!("thread pool: {e}")))?;
    pool.install(f)
}

fn gen_data(a: GenDataArgs) -> Result<i32> {
    let spec = GenSpec {
        seed: a.seed,
        series: a.series,
        weeks: a.weeks,
        class: a.class,
        ..GenSpec::default()
    };
    let panel = generate(&spec)?;
    panel.save(&a.out)?;
    let zeros = panel
        .series
        .iter()
        .flat_map(|s| &s.demand)
        .filter(|&&d| d == 0.0)
        .count();
    println!(
        "wrote {} series x {} weeks ({} rows, {} zero-demand weeks) to {}",
        panel.len(),
        a.weeks,
        panel.rows(),
        zeros,
        a.out.display()
    );
    Ok(0)
}

/// A problem plus the defaults that depend on it.
struct Loaded {
    problem: Box<dyn MultiObjectiveProblem>,
    bounds: MetricBounds,
    learning_rate: f64,
    max_steps: usize,
    patience: usize,
    label: String,
}

fn resolve_data(path: &Path) -> PathBuf {
    if path.exists() || path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) => Path::new(&dir).join(path),
        None => path.to_path_buf(),
    }
}

fn load_problem(a: &ProblemArgs) -> Result<Loaded> {
    let (problem, bounds, lr, steps, patience, label): (Box<dyn MultiObjectiveProblem>, _, _, _, _, _) =
        match (&a.data, a.toy) {
            (Some(path), _) => {
                let path = resolve_data(path);
                let panel = DemandPanel::load(&path)?;
                let cfg = ForecastConfig {
                    window: WindowConfig {
                        input_weeks: a.input_weeks,
                        horizon: a.horizon,
                        stride: a.stride,
                    },
                    model: ModelSpec {
                        kind: match a.model {
                            ModelChoice::Linear => ModelKind::Linear,
                            ModelChoice::Feedforward => ModelKind::Feedforward {
                                hidden: 16,
                                activation: Activation::Tanh,
                            },
                        },
                        seed: a.seed,
                    },
                    binding: LossMetricBinding::standard(a.quantile)?,
                    normalize_losses: true,
                };
                let problem = ForecastProblem::new(&panel, &cfg)?;
                (
                    Box::new(problem),
                    MetricBounds::unit(2),
                    0.1,
                    1000,
                    100,
                    path.display().to_string(),
                )
            }
            (None, Some(Toy::Nonconvex)) => (
                Box::new(FonsecaFleming::new(2)?),
                MetricBounds::unit(2),
                0.1,
                2000,
                20,
                "toy:nonconvex".into(),
            ),
            (None, _) => {
                let toy = QuadraticBowls::pair(vec![0.0, 0.0], vec![1.0, 0.0])?;
                let bounds = toy.frontier_bounds();
                (Box::new(toy), bounds, 0.05, 2000, 20, "toy:quadratic".into())
            }
        };
    Ok(Loaded {
        problem,
        bounds,
        learning_rate: a.lr.unwrap_or(lr),
        max_steps: a.steps.map(|s| s as usize).unwrap_or(steps),
        patience: a.patience.map(|s| s as usize).unwrap_or(patience),
        label,
    })
}

fn train_config(a: &ProblemArgs, loaded: &Loaded) -> TrainConfig {
    TrainConfig {
        learning_rate: loaded.learning_rate,
        max_steps: loaded.max_steps,
        patience: loaded.patience,
        seed: a.seed,
        warm_start: a.warm_start,
        ..TrainConfig::default()
    }
}

fn per_metric(values: &[f64], t: usize, what: &str) -> Result<Vec<f64>> {
    match values.len() {
        1 => Ok(vec![values[0]; t]),
        n if n == t => Ok(values.to_vec()),
        n => Err(Error::contract(format!("{what} has {n} values for {t} metrics"))),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct GridComparison {
    resolution: usize,
    runs: usize,
    coverage_span: Vec<f64>,
    /// Explorer span divided by grid span, per metric.
    span_ratio: Vec<Option<f64>>,
}

#[derive(Serialize)]
struct FrontierSummary {
    problem: String,
    method: &'static str,
    runs: usize,
    max_rounds: usize,
    bounds_lo: Vec<f64>,
    bounds_hi: Vec<f64>,
    granularity_target: Vec<f64>,
    granularity: Vec<f64>,
    target_met: bool,
    coverage_span: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_comparison: Option<GridComparison>,
}

fn frontier(a: FrontierArgs) -> Result<i32> {
    let loaded = load_problem(&a.problem)?;
    let t = loaded.problem.num_objectives();
    let phi = per_metric(&a.phi, t, "--phi")?;
    let bounds = if a.bounds.is_empty() {
        loaded.bounds.clone()
    } else {
        let b = a.bounds.clone();
        let b = if b.len() == 1 { vec![b[0]; t] } else { b };
        if b.len() != t {
            return Err(Error::contract(format!("--bounds has {} ranges for {t} metrics", b.len())));
        }
        MetricBounds::new(b.iter().map(|r| r.0).collect(), b.iter().map(|r| r.1).collect())?
    };
    let max_rounds = a
        .max_rounds
        .map(|r| r as usize)
        .unwrap_or(if a.method == FrontierMethod::Grid { 11 } else { 50 });
    let explore = ExploreConfig {
        bounds: bounds.clone(),
        granularity_target: phi.clone(),
        pace: a.pace,
        max_rounds,
    };
    explore.validate()?;
    let train_cfg = train_config(&a.problem, &loaded);
    let problem = loaded.problem.as_ref();

    let (archive, method) = match a.method {
        FrontierMethod::Mgda => (explore_frontier(problem, &explore, &train_cfg)?, "mgda"),
        FrontierMethod::Static => (static_scaling_posterior(problem, &explore, &train_cfg)?, "static"),
        FrontierMethod::Grid => {
            if max_rounds < 2 {
                return Err(Error::contract("grid resolution must be at least 2"));
            }
            (grid_search(problem, max_rounds, &train_cfg)?, "grid")
        }
    };
    archive.save(&a.out)?;

    let granularity = achieved_granularity(&archive, &bounds);
    let span = coverage_span(&archive, &bounds);
    let grid_comparison = if a.compare_grid && a.method != FrontierMethod::Grid {
        Some(compare_with_grid(problem, &archive, &bounds, &span, &train_cfg)?)
    } else {
        None
    };
    let summary = FrontierSummary {
        problem: loaded.label,
        method,
        runs: archive.len(),
        max_rounds,
        bounds_lo: bounds.lo().to_vec(),
        bounds_hi: bounds.hi().to_vec(),
        target_met: granularity.iter().zip(&phi).all(|(g, p)| g <= p),
        granularity_target: phi,
        granularity,
        coverage_span: span,
        grid_comparison,
    };
    let summary_path = a.summary.clone().unwrap_or_else(|| a.out.with_extension("json"));
    write_json(&summary_path, &summary)?;
    println!(
        "{method}: {} runs, granularity {:?}, span {:?}",
        summary.runs, summary.granularity, summary.coverage_span
    );
    Ok(0)
}

/// Grid search whose number of runs matches the explorer's as closely as the
/// grid allows without exceeding it. Only meaningful for two objectives.
fn compare_with_grid(
    problem: &dyn MultiObjectiveProblem,
    archive: &FrontierArchive,
    bounds: &MetricBounds,
    span: &[f64],
    train_cfg: &TrainConfig,
) -> Result<GridComparison> {
    if problem.num_objectives() != 2 {
        return Err(Error::contract("--compare-grid needs exactly two objectives"));
    }
    let resolution = archive.len().max(2);
    let grid = grid_search(problem, resolution, train_cfg)?;
    let grid_span = coverage_span(&grid, bounds);
    let span_ratio = span
        .iter()
        .zip(&grid_span)
        .map(|(e, g)| if *g > 0.0 { Some(e / g) } else { None })
        .collect();
    Ok(GridComparison {
        resolution,
        runs: grid.len(),
        coverage_span: grid_span,
        span_ratio,
    })
}

#[derive(Serialize)]
struct PreferRecord {
    problem: String,
    method: &'static str,
    constraints: String,
    satisfied: bool,
    metrics: Vec<f64>,
    weights: Vec<f64>,
    subset: Option<usize>,
    rounds: usize,
}

fn prefer(a: PreferArgs) -> Result<i32> {
    let constraints = ConstraintSet::parse(&a.constraints)?;
    let loaded = load_problem(&a.problem)?;
    let cfg = PriorConfig {
        pace: a.pace,
        max_rounds_per_subset: a.max_rounds as usize,
        eq_tol: a.eq_tol,
        ..PriorConfig::default()
    };
    let train_cfg = train_config(&a.problem, &loaded);
    let problem = loaded.problem.as_ref();
    let (outcome, method) = match a.method {
        PreferMethod::Mgda => (solve_preferred(problem, &constraints, &cfg, &train_cfg)?, "mgda"),
        PreferMethod::Static => (
            static_scaling_prior(problem, &constraints, &cfg, &train_cfg)?,
            "static",
        ),
    };
    let record = PreferRecord {
        problem: loaded.label,
        method,
        constraints: a.constraints.clone(),
        satisfied: outcome.satisfied,
        metrics: outcome.metrics.to_vec(),
        weights: outcome.weights.to_vec(),
        subset: outcome.subset,
        rounds: outcome.rounds,
    };
    write_json(&a.out, &record)?;
    println!(
        "{}: metrics {:?} after {} runs",
        if record.satisfied { "satisfied" } else { "not satisfied" },
        record.metrics,
        record.rounds
    );
    Ok(if record.satisfied { 0 } else { 2 })
}

fn train(a: TrainArgs) -> Result<i32> {
    let loaded = load_problem(&a.problem)?;
    let t = loaded.problem.num_objectives();
    let w = if a.weights.is_empty() {
        PreferenceWeights::uniform(t)
    } else {
        PreferenceWeights::new(per_metric(&a.weights, t, "--weights")?)?
    };
    let train_cfg = train_config(&a.problem, &loaded);
    let (metrics, trace) = optimize(loaded.problem.as_ref(), &w, &train_cfg)?;
    write_trace(&a.trace_out, &trace, t)?;
    println!(
        "{} steps ({:?}), final metrics {:?}",
        trace.len(),
        trace.stop,
        metrics.to_vec()
    );
    Ok(0)
}

/// Trace CSV: `step, loss_t.., metric_t.., alpha_t.., sq_norm`.
pub fn write_trace(path: &Path, trace: &TrainTrace, t: usize) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let mut header = vec!["step".to_string()];
    for prefix in ["loss", "metric", "alpha"] {
        header.extend((1..=t).map(|i| format!("{prefix}_{i}")));
    }
    header.push("sq_norm".into());
    out.write_record(&header)?;
    for r in &trace.records {
        let mut row = vec![r.step.to_string()];
        row.extend(r.losses.iter().map(f64::to_string));
        row.extend(r.metrics.iter().map(f64::to_string));
        row.extend(r.alpha.iter().map(f64::to_string));
        row.push(r.sq_norm.to_string());
        out.write_record(&row)?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    let mut inner = out.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    inner.flush().map_err(|e| Error::io(path, e))
}
