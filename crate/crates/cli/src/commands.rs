//! Subcommands: simulations, verification and reports.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use bbmlab::batch::{derive_seed, run_indexed, BatchError, SampleRange};
use bbmlab::bbm::{sample_line, sample_n_x_composed, simulate_population, snapshot_functionals};
use bbmlab::bbm::{LineConfig, PopulationError, DEFAULT_POPULATION_CAP};
use bbmlab::brw::{CensoredCount, CountStatus, ExploreConfig, TreeExplorer, Window};
use bbmlab::sampler::make_params;
use bbmlab::spine::{default_battery, many_to_one_battery, spine_endpoints, SpineError, MAX_STEPS};
use bbmlab::stats::{
    laplace_expansion_check, log_laplace, loglog_slope, median, quantile_sorted, ratio_convergence, tail_ratio,
    truncated_mean_offset, EmpiricalTail, EstimateCI, MeanAccumulator, MIN_SLOPE_HITS,
};

use crate::cache::SampleCache;
use crate::config::{ConfigError, ExperimentConfig, Overrides};
use crate::output::{fmt_f64, CsvTable, OutputError, Summary};
use crate::report::{write_report, ReportError};
use crate::verify::{self, Lab, MAX_WORK_CAPPED};

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("invalid exploration config: {0}")]
    Explore(#[from] bbmlab::brw::ConfigError),
    #[error(transparent)]
    Batch(#[from] BatchError),
    #[error(transparent)]
    Spine(#[from] SpineError),
    #[error("population at t={t}: {source}; lower t")]
    Population { t: f64, source: PopulationError },
}

impl CommandError {
    /// 2 for bad input, 1 for a failed run.
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Population { .. } => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "bbmlab", version, about = "Monte Carlo experiments on boundary-case branching Brownian motion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Total number N of births at or below 0.
    SimN(SimArgs),
    /// Births N_x at or below level x, explored directly.
    SimNx(SimArgs),
    /// First-passage line at x: Z_x and the absorbed births.
    SimLine(SimArgs),
    /// N_x composed from the line at x and copies of N.
    SimComposed(SimArgs),
    /// Population functionals D_t, W_t, M_t at the times of the t grid.
    SimPop(SimArgs),
    /// Many-to-one identities and ballot probes on the spine walk.
    ProbeSpine(SimArgs),
    /// Run an acceptance suite.
    Verify(VerifyArgs),
    /// Markdown tables and plot series from summary files.
    Report(ReportArgs),
}

fn parse_window(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s.split(',').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    <[f64; 3]>::try_from(v).map_err(|_| "expected a,b,lambda".to_string())
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimArgs {
    /// TOML file with any of the options below; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<f64>,
    #[arg(long)]
    pub barrier: Option<f64>,
    #[arg(long)]
    pub count_cap: Option<u64>,
    #[arg(long)]
    pub node_cap: Option<u64>,
    #[arg(long)]
    pub samples: Option<u64>,
    /// Defaults to $BBMLAB_SEED, then 42.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Generation window `a,b,lambda`; repeatable.
    #[arg(long = "window", value_parser = parse_window)]
    pub windows: Vec<[f64; 3]>,
    #[arg(long, value_delimiter = ',')]
    pub lambda_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Vec<u64>,
    #[arg(long, value_delimiter = ',')]
    pub t_grid: Vec<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn nonempty<T>(v: Vec<T>) -> Option<Vec<T>> {
    (!v.is_empty()).then_some(v)
}

impl SimArgs {
    fn overrides(self) -> Result<Overrides, ConfigError> {
        let file = match &self.config {
            Some(p) => Overrides::from_file(p)?,
            None => Overrides::default(),
        };
        let flags = Overrides {
            mu: self.mu,
            x: self.x,
            barrier: self.barrier,
            count_cap: self.count_cap,
            node_cap: self.node_cap,
            samples: self.samples,
            seed: self.seed,
            workers: self.workers,
            windows: nonempty(self.windows),
            lambda_grid: nonempty(self.lambda_grid),
            n_grid: nonempty(self.n_grid),
            t_grid: nonempty(self.t_grid),
            out_dir: self.out,
        };
        Ok(flags.over(file))
    }

    pub fn resolve(self, command: &str) -> Result<ExperimentConfig, ConfigError> {
        let defaults = match command {
            "sim-line" => Overrides { x: Some(1.0), n_grid: Some(vec![100, 178, 316, 562, 1000]), ..Default::default() },
            "sim-nx" | "sim-composed" => Overrides { x: Some(1.0), ..Default::default() },
            "probe-spine" => Overrides { n_grid: Some(vec![1, 2, 3, 5, 8, 25, 100, 400]), samples: Some(100_000), ..Default::default() },
            "sim-pop" => Overrides { samples: Some(1000), ..Default::default() },
            _ => Overrides::default(),
        };
        let cfg = ExperimentConfig::resolve(command, self.overrides()?.over(defaults))?;
        if command == "sim-n" && cfg.x != 0.0 {
            return Err(ConfigError::Invalid { field: "x", reason: "sim-n counts at level 0; use sim-nx".into() });
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Quick,
    Full,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "quick")]
    pub suite: Suite,
    #[arg(long, default_value_t = verify::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Directory for reusable sample chunks.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Summary files or directories holding them.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Result of a command that ran to completion.
#[derive(Debug)]
pub struct Outcome {
    pub pass: bool,
    pub messages: Vec<String>,
}

impl Outcome {
    fn from_summary(summary: &Summary) -> Self {
        Self { pass: summary.warnings.iter().all(|w| !w.starts_with(FAIL_PREFIX)), messages: summary.warnings.clone() }
    }
}

const FAIL_PREFIX: &str = "threshold:";

pub fn run(cli: Cli) -> Result<Outcome, CommandError> {
    match cli.command {
        Command::SimN(a) => sim_counts(a.resolve("sim-n")?),
        Command::SimNx(a) => sim_counts(a.resolve("sim-nx")?),
        Command::SimLine(a) => sim_line(a.resolve("sim-line")?),
        Command::SimComposed(a) => sim_composed(a.resolve("sim-composed")?),
        Command::SimPop(a) => sim_pop(a.resolve("sim-pop")?),
        Command::ProbeSpine(a) => probe_spine(a.resolve("probe-spine")?),
        Command::Verify(a) => run_verify(a),
        Command::Report(a) => {
            let path = write_report(&a.inputs, &a.out)?;
            Ok(Outcome { pass: true, messages: vec![format!("wrote {}", path.display())] })
        }
    }
}

fn range(cfg: &ExperimentConfig) -> SampleRange {
    SampleRange::new(cfg.seed, cfg.samples)
}

fn explore_config(cfg: &ExperimentConfig) -> Result<ExploreConfig<f64>, CommandError> {
    let windows = cfg.windows.iter().map(|w| Window { a: w[0], b: w[1], lambda: w[2] }).collect();
    let c = ExploreConfig::new(cfg.x)
        .with_barrier(cfg.barrier)
        .with_count_cap(cfg.count_cap)
        .with_node_cap(cfg.node_cap)
        .with_windows(windows);
    c.validate()?;
    Ok(c)
}

fn line_config(cfg: &ExperimentConfig) -> LineConfig<f64> {
    LineConfig::new(cfg.x).with_barrier(cfg.barrier).with_count_cap(cfg.count_cap).with_node_cap(cfg.node_cap)
}

/// Exclusion diagnostics; too many work-capped samples fail the run.
fn status_diagnostics(summary: &mut Summary, statuses: impl Iterator<Item = CountStatus>) {
    let (mut total, mut count_capped, mut work_capped) = (0u64, 0u64, 0u64);
    for s in statuses {
        total += 1;
        match s {
            CountStatus::CountCapped => count_capped += 1,
            CountStatus::WorkCapped => work_capped += 1,
            CountStatus::Exact => {}
        }
    }
    let frac = work_capped as f64 / total.max(1) as f64;
    summary.diagnostic("samples", total as f64);
    summary.diagnostic("count_capped_fraction", count_capped as f64 / total.max(1) as f64);
    summary.diagnostic("work_capped_fraction", frac);
    if frac >= MAX_WORK_CAPPED {
        summary.warn(format!("{FAIL_PREFIX} work-capped fraction {frac:.2e} ≥ {MAX_WORK_CAPPED:e}; raise node_cap"));
    }
}

fn skip(summary: &mut Summary, what: String, e: impl std::fmt::Display) {
    summary.warn(format!("{what} skipped: {e}"));
}

/// Tail, offset and Laplace estimates of a censored count sample.
fn count_estimates(summary: &mut Summary, cfg: &ExperimentConfig, tail: &EmpiricalTail, with_offset: bool) {
    for &n in &cfg.n_grid {
        match tail_ratio(tail, n) {
            Ok(e) => summary.estimate("tail", n as f64, &e),
            Err(e) => skip(summary, format!("tail n={n}"), e),
        }
    }
    if !with_offset {
        return;
    }
    for &n in cfg.n_grid.iter().filter(|&&n| n >= 2 && n < cfg.count_cap) {
        match truncated_mean_offset(tail, n) {
            Ok(e) => summary.estimate("offset", n as f64, &e),
            Err(e) => skip(summary, format!("offset n={n}"), e),
        }
    }
    for &l in &cfg.lambda_grid {
        match (log_laplace(tail, l), laplace_expansion_check(tail, l)) {
            (Ok(phi), Ok(coef)) => {
                summary.estimate("phi", l, &phi);
                summary.estimate("laplace_coef", l, &coef);
            }
            (Err(e), _) | (_, Err(e)) => skip(summary, format!("laplace λ={l}"), e),
        }
    }
}

fn out_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out_dir.clone()
}

fn sim_counts(cfg: ExperimentConfig) -> Result<Outcome, CommandError> {
    let params = make_params(cfg.mu).map_err(|e| ConfigError::Invalid { field: "mu", reason: e.to_string() })?;
    let ecfg = explore_config(&cfg)?;
    let recs: Vec<CensoredCount> =
        run_indexed(range(&cfg), cfg.workers, || TreeExplorer::new(&params, &ecfg), |ex, _, rng| ex.sample(rng))?;

    let (file, name) = if cfg.command == "sim-n" { ("n_samples.csv", "n_samples") } else { ("nx_samples.csv", "nx_samples") };
    let mut cols = vec!["sample_id", "value", "status", "pruned_count", "work", "bias_bound"];
    let window_cols: Vec<String> = (0..cfg.windows.len()).map(|k| format!("window_{k}")).collect();
    cols.extend(window_cols.iter().map(String::as_str));
    let mut table = CsvTable::new(name, &cfg, &cols)?;
    for (i, r) in recs.iter().enumerate() {
        let mut row = vec![
            i.to_string(),
            r.value.to_string(),
            r.status.as_str().to_string(),
            r.pruned_count.to_string(),
            r.work.to_string(),
            fmt_f64(r.bias_bound),
        ];
        row.extend(r.window_counts.iter().map(u64::to_string));
        table.row(&row)?;
    }

    let mut summary = Summary::new(&cfg);
    status_diagnostics(&mut summary, recs.iter().map(|r| r.status));
    let tail = EmpiricalTail::from_counts(&recs, Some(cfg.count_cap));
    count_estimates(&mut summary, &cfg, &tail, cfg.command == "sim-n");
    let bias = MeanAccumulator::from_slice(&recs.iter().map(|r| r.bias_bound).collect::<Vec<_>>());
    summary.diagnostic("mean_bias_bound", bias.mean());
    summary.diagnostic("mean_work", recs.iter().map(|r| r.work as f64).sum::<f64>() / recs.len() as f64);
    for k in 0..cfg.windows.len() {
        let xs: Vec<f64> =
            recs.iter().filter(|r| r.status == CountStatus::Exact).map(|r| r.window_counts[k] as f64).collect();
        summary.estimate("window_mean", k as f64, &MeanAccumulator::from_slice(&xs).estimate());
    }
    let dir = out_dir(&cfg);
    summary.write_table(&dir, file, table)?;
    summary.write(&dir)?;
    Ok(Outcome::from_summary(&summary))
}

fn sim_line(cfg: ExperimentConfig) -> Result<Outcome, CommandError> {
    let params = make_params(cfg.mu).map_err(|e| ConfigError::Invalid { field: "mu", reason: e.to_string() })?;
    let lcfg = line_config(&cfg);
    let lines = run_indexed(range(&cfg), cfg.workers, || (), |_, _, rng| sample_line(&params, &lcfg, rng))?;

    let cols = ["sample_id", "x", "z_count", "births", "status", "pruned_count", "work"];
    let mut table = CsvTable::new("line_samples", &cfg, &cols)?;
    for (i, l) in lines.iter().enumerate() {
        table.row([
            i.to_string(),
            fmt_f64(l.level_x),
            l.z_count.to_string(),
            l.births.to_string(),
            l.status.as_str().to_string(),
            l.pruned_count.to_string(),
            l.work.to_string(),
        ])?;
    }

    let mut summary = Summary::new(&cfg);
    status_diagnostics(&mut summary, lines.iter().map(|l| l.status));
    let exact: Vec<f64> = lines.iter().filter(|l| l.status == CountStatus::Exact).map(|l| l.z_count as f64).collect();
    let z = MeanAccumulator::from_slice(&exact).estimate();
    summary.estimate("z_mean", cfg.x, &z);
    let s = cfg.x * (-cfg.x).exp();
    summary.estimate("x_exp_z", cfg.x, &EstimateCI::normal(z.value * s, z.stderr * s.abs(), z.n_samples));
    let tail = EmpiricalTail::new(lines.iter().map(|l| (l.births, l.status)), Some(cfg.count_cap));
    for &n in &cfg.n_grid {
        match tail_ratio(&tail, n) {
            Ok(e) => summary.estimate("births_tail", n as f64, &e),
            Err(e) => skip(&mut summary, format!("births tail n={n}"), e),
        }
    }
    let grid: Vec<u64> = cfg
        .n_grid
        .iter()
        .copied()
        .filter(|&n| tail.count_at_least(n).is_ok_and(|k| k >= MIN_SLOPE_HITS))
        .collect();
    match loglog_slope(&tail, &grid) {
        Ok(fit) => {
            summary.estimate("births_slope", cfg.x, &fit.slope);
            summary.diagnostic("births_slope_curvature", fit.curvature);
        }
        Err(e) => skip(&mut summary, "births slope".into(), e),
    }
    let dir = out_dir(&cfg);
    summary.write_table(&dir, "line_samples.csv", table)?;
    summary.write(&dir)?;
    Ok(Outcome::from_summary(&summary))
}

fn sim_composed(cfg: ExperimentConfig) -> Result<Outcome, CommandError> {
    let params = make_params(cfg.mu).map_err(|e| ConfigError::Invalid { field: "mu", reason: e.to_string() })?;
    let ecfg = explore_config(&cfg)?;
    let lcfg = line_config(&cfg);
    let samples = run_indexed(
        range(&cfg),
        cfg.workers,
        || TreeExplorer::new(&params, &ecfg),
        |ex, _, rng| sample_n_x_composed(&params, ex, &lcfg, rng),
    )?;

    let cols = ["sample_id", "x", "value", "status", "z_count", "pruned_count", "work"];
    let mut table = CsvTable::new("composed_samples", &cfg, &cols)?;
    for (i, s) in samples.iter().enumerate() {
        table.row([
            i.to_string(),
            fmt_f64(cfg.x),
            s.count.value.to_string(),
            s.count.status.as_str().to_string(),
            s.line.z_count.to_string(),
            s.count.pruned_count.to_string(),
            s.count.work.to_string(),
        ])?;
    }

    let mut summary = Summary::new(&cfg);
    status_diagnostics(&mut summary, samples.iter().map(|s| s.count.status));
    let counts: Vec<CensoredCount> = samples.iter().map(|s| s.count.clone()).collect();
    count_estimates(&mut summary, &cfg, &EmpiricalTail::from_counts(&counts, Some(cfg.count_cap)), false);
    let pairs: Vec<(u64, u64)> = samples
        .iter()
        .filter(|s| s.count.status == CountStatus::Exact)
        .map(|s| (s.count.value, s.line.z_count))
        .collect();
    match ratio_convergence(&pairs, cfg.x) {
        Ok(r) => {
            let e = EstimateCI { value: r.median, stderr: f64::NAN, lower: r.q1, upper: r.q3, level: 0.5, n_samples: r.n };
            summary.estimate("ratio_median", cfg.x, &e);
            summary.diagnostic("ratio_dropped", r.dropped as f64);
        }
        Err(e) => skip(&mut summary, "ratio".into(), e),
    }
    let dir = out_dir(&cfg);
    summary.write_table(&dir, "composed_samples.csv", table)?;
    summary.write(&dir)?;
    Ok(Outcome::from_summary(&summary))
}

fn sim_pop(cfg: ExperimentConfig) -> Result<Outcome, CommandError> {
    let params = make_params(cfg.mu).map_err(|e| ConfigError::Invalid { field: "mu", reason: e.to_string() })?;
    let cols = ["t", "sample_id", "D_t", "W_t", "M_t", "pop_size"];
    let mut table = CsvTable::new("snapshots", &cfg, &cols)?;
    let mut summary = Summary::new(&cfg);
    for &t in &cfg.t_grid {
        let r = SampleRange::new(derive_seed(cfg.seed, &format!("t={t}")), cfg.samples);
        let snaps = run_indexed(r, cfg.workers, || (), |_, _, rng| {
            simulate_population(&params, t, DEFAULT_POPULATION_CAP, rng).map(|s| snapshot_functionals(&s))
        })?;
        let f = snaps.into_iter().collect::<Result<Vec<_>, _>>().map_err(|source| CommandError::Population { t, source })?;
        for (i, s) in f.iter().enumerate() {
            table.row([fmt_f64(t), i.to_string(), fmt_f64(s.d), fmt_f64(s.w), fmt_f64(s.m), s.size.to_string()])?;
        }
        let col = |g: fn(&bbmlab::bbm::Functionals) -> f64| f.iter().map(g).collect::<Vec<f64>>();
        summary.estimate("w_mean", t, &MeanAccumulator::from_slice(&col(|s| s.w)).estimate());
        summary.estimate("d_mean", t, &MeanAccumulator::from_slice(&col(|s| s.d)).estimate());
        summary.estimate("size_mean", t, &MeanAccumulator::from_slice(&col(|s| s.size as f64)).estimate());
        let mut m = col(|s| s.m);
        m.sort_by(f64::total_cmp);
        let (q1, q3) = (quantile_sorted(&m, 0.25).unwrap_or(f64::NAN), quantile_sorted(&m, 0.75).unwrap_or(f64::NAN));
        let e = EstimateCI { value: median(&m).unwrap_or(f64::NAN), stderr: f64::NAN, lower: q1, upper: q3, level: 0.5, n_samples: m.len() as u64 };
        summary.estimate("m_median", t, &e);
    }
    let dir = out_dir(&cfg);
    summary.write_table(&dir, "snapshots.csv", table)?;
    summary.write(&dir)?;
    Ok(Outcome::from_summary(&summary))
}

fn probe_spine(cfg: ExperimentConfig) -> Result<Outcome, CommandError> {
    let mut summary = Summary::new(&cfg);
    let cols = ["n", "functional", "lhs", "lhs_stderr", "rhs", "rhs_stderr", "z"];
    let mut m2o = CsvTable::new("many_to_one", &cfg, &cols)?;
    let battery = default_battery();
    for &n in cfg.n_grid.iter().filter(|&&n| n >= 1 && n as usize <= MAX_STEPS) {
        let rows = many_to_one_battery(&battery, n as usize, cfg.samples, derive_seed(cfg.seed, &format!("m2o-{n}")), cfg.workers)?;
        for (k, r) in rows.iter().enumerate() {
            m2o.row([
                n.to_string(),
                r.functional.label(),
                fmt_f64(r.lhs.value),
                fmt_f64(r.lhs.stderr),
                fmt_f64(r.rhs.value),
                fmt_f64(r.rhs.stderr),
                fmt_f64(r.z()),
            ])?;
            summary.diagnostic(&format!("m2o_z n={n} f={k}"), r.z());
        }
    }
    let cols = ["kind", "n", "alpha", "h", "a", "estimate", "stderr", "hits"];
    let mut probes = CsvTable::new("probes", &cfg, &cols)?;
    for &n in cfg.n_grid.iter().filter(|&&n| n >= 1) {
        let ends = spine_endpoints(n as usize, cfg.samples, derive_seed(cfg.seed, &format!("spine-{n}")), cfg.workers)?;
        for p in verify::ballot_probes(n as usize, &ends) {
            probes.row([
                p.kind.as_str().to_string(),
                n.to_string(),
                fmt_f64(p.alpha),
                fmt_f64(p.h),
                fmt_f64(p.a),
                fmt_f64(p.estimate.value),
                fmt_f64(p.estimate.stderr),
                p.hits.to_string(),
            ])?;
            if !p.starved {
                let key = format!("ballot_constant {} n={n}", p.kind.as_str());
                let c = p.fitted_constant();
                let best = summary.diagnostics.get(&key).copied().unwrap_or(0.0);
                summary.diagnostic(&key, best.max(c));
            }
        }
    }
    let dir = out_dir(&cfg);
    summary.write_table(&dir, "many_to_one.csv", m2o)?;
    summary.write_table(&dir, "probes.csv", probes)?;
    summary.write(&dir)?;
    Ok(Outcome::from_summary(&summary))
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub schema: &'static str,
    pub suite: Suite,
    pub seed: u64,
    pub pass: bool,
    pub elapsed_seconds: f64,
    pub criteria: Vec<verify::Criterion>,
}

/// Soft runtime budget of the quick suite.
pub const QUICK_BUDGET_SECONDS: f64 = 120.0;

fn run_verify(a: VerifyArgs) -> Result<Outcome, CommandError> {
    let workers = a.workers.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    let lab = Lab::new(a.seed, workers, SampleCache::new(a.cache_dir.clone()));
    let start = Instant::now();
    let criteria = match a.suite {
        Suite::Quick => verify::quick_suite(&lab),
        Suite::Full => verify::full_suite(&lab),
    };
    let elapsed = start.elapsed().as_secs_f64();
    let mut messages: Vec<String> = criteria.iter().map(|c| c.line()).collect();
    if a.suite == Suite::Quick && elapsed > QUICK_BUDGET_SECONDS {
        messages.push(format!("warning: quick suite took {elapsed:.0} s (budget {QUICK_BUDGET_SECONDS} s)"));
    }
    let report = VerifyReport {
        schema: "bbmlab/verify/1",
        suite: a.suite,
        seed: a.seed,
        pass: criteria.iter().all(|c| c.pass),
        elapsed_seconds: elapsed,
        criteria,
    };
    let path = a.out.join("verify.json");
    std::fs::create_dir_all(&a.out).map_err(|source| OutputError::Io { path: a.out.clone(), source })?;
    let mut text = serde_json::to_string_pretty(&report).map_err(OutputError::from)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|source| OutputError::Io { path: path.clone(), source })?;
    Ok(Outcome { pass: report.pass, messages })
}
