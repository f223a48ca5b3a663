//! Batch front-end: scenario generation, filter runs, evaluation and Monte
//! Carlo sweeps.
//!
//! Exit codes: 0 success, 1 filter failure, 2 bad arguments or specification,
//! 3 I/O failure, 4 malformed input line, 5 truth/estimate step mismatch.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::ggiw::{GgiwMixture, GgiwParams, ReductionConfig};
use crate::glmb::{GlmbFilter, GlmbFilterConfig, StaticBirth};
use crate::io::{
    read_estimates, read_scenario_log, write_estimates, write_scenario_log, EstimateEntry,
    EstimateRecord, ReadError, RunSummary,
};
use crate::likelihood::{ClutterModel, SensorModel};
use crate::lmb::{AdaptiveBirth, LmbFilter, LmbFilterConfig};
use crate::metrics::{evaluate_run, MetricsTable, OspaConfig, RunMetrics};
use crate::partitioning::PartitionConfig;
use crate::rfs::Label;
use crate::simulation::{builtin_scenario, generate, MotionSpec, ScenarioLog, ScenarioSpec};

/// Environment variable overriding `--jobs`.
pub const THREADS_ENV: &str = "RFS_EXTENT_THREADS";

/// A failure carrying its process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self { code: 3, message: format!("{}: {e}", path.display()) }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    fn mismatch(message: impl Into<String>) -> Self {
        Self { code: 5, message: message.into() }
    }

    fn read(path: &Path, e: ReadError) -> Self {
        match e {
            ReadError::Io(e) => Self::io(path, e),
            ReadError::Malformed { line, message } => Self {
                code: 4,
                message: format!("{}: line {line}: {message}", path.display()),
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

type CliResult<T> = std::result::Result<T, CliError>;

/// Filter variants available from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    Glmb,
    Lmb,
    /// LMB with adaptive birth from unexplained measurement clusters.
    LmbAb,
}

impl FromStr for FilterKind {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "glmb" => Ok(Self::Glmb),
            "lmb" => Ok(Self::Lmb),
            "lmb-ab" => Ok(Self::LmbAb),
            other => Err(CliError::usage(format!(
                "unknown filter '{other}' (expected glmb, lmb or lmb-ab)"
            ))),
        }
    }
}

impl FilterKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Glmb => "glmb",
            Self::Lmb => "lmb",
            Self::LmbAb => "lmb-ab",
        }
    }

    pub fn is_lmb(self) -> bool {
        !matches!(self, Self::Glmb)
    }
}

/// Measurement partitioning settings of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionSettings {
    pub n_thresholds: usize,
    pub max_distance: f64,
    pub em_refine: bool,
    pub max_partitions: usize,
}

impl Default for PartitionSettings {
    fn default() -> Self {
        let p = PartitionConfig::default();
        Self {
            n_thresholds: p.n_thresholds,
            max_distance: p.max_distance,
            em_refine: p.em_refine,
            max_partitions: p.max_partitions,
        }
    }
}

/// Per-track mixture reduction settings of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixtureSettings {
    pub prune_threshold: f64,
    pub merge_gate: f64,
    pub max_components: usize,
}

impl Default for MixtureSettings {
    fn default() -> Self {
        let r = ReductionConfig::default();
        Self {
            prune_threshold: r.prune_threshold,
            merge_gate: r.merge_gate,
            max_components: r.max_components,
        }
    }
}

/// Filter configuration file. Missing keys take their defaults; unknown keys
/// are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    pub motion: MotionSpec,
    /// Gamma forgetting factor `μ`.
    pub forgetting: f64,
    /// Extent decay constant `τ` in seconds.
    pub extent_decay: f64,
    pub p_s: f64,
    pub p_d: f64,
    pub literal_misdetect: bool,
    /// Inferred from the measurements when absent.
    pub clutter: Option<ClutterModel>,
    /// Static birth locations; the first truth position of every target in
    /// the input log when absent.
    pub birth_positions: Option<Vec<Vec<f64>>>,
    pub birth_existence: f64,
    pub alpha0: f64,
    pub beta0: f64,
    pub dof0: f64,
    /// Diagonal of the birth extent scale `V₀`.
    pub scale0: f64,
    /// Square roots of the diagonal of `P₀`, one per motion-model block.
    pub p0_std: Vec<f64>,
    pub n_predict: usize,
    pub n_update: usize,
    pub max_components: usize,
    pub partition: PartitionSettings,
    pub gate_quantile: f64,
    pub delete_threshold: f64,
    pub report_threshold: f64,
    pub keep_threshold: f64,
    pub mixture: MixtureSettings,
    pub adaptive_birth_max_existence: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            motion: MotionSpec::Singer {
                period: 1.0,
                maneuver_time: 1.0,
                accel_std: 0.1,
            },
            forgetting: 1.25,
            extent_decay: 5.0,
            p_s: 0.99,
            p_d: 0.9,
            literal_misdetect: true,
            clutter: None,
            birth_positions: None,
            birth_existence: 0.03,
            alpha0: 10.0,
            beta0: 1.0,
            dof0: 10.0,
            scale0: 100.0,
            p0_std: vec![10.0, 2.5, 1.0],
            n_predict: 1000,
            n_update: 1000,
            max_components: 1000,
            partition: PartitionSettings::default(),
            gate_quantile: 0.99,
            delete_threshold: 1e-3,
            report_threshold: 0.5,
            keep_threshold: 0.4,
            mixture: MixtureSettings::default(),
            adaptive_birth_max_existence: 0.1,
        }
    }
}

/// Fraction of the measurement bounding box added on each side when the
/// surveillance region is inferred.
const REGION_MARGIN: f64 = 0.05;

impl TrackerConfig {
    /// Filter settings matching a scenario: its motion model, detection
    /// probability and clutter.
    pub fn from_scenario(spec: &ScenarioSpec) -> Self {
        Self {
            motion: spec.motion.clone(),
            p_d: spec.p_d,
            clutter: Some(spec.clutter.clone()),
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::usage(format!("invalid config: {e}")))
    }

    /// Fills clutter and birth settings left open from the input log.
    pub fn resolve(&self, log: &ScenarioLog) -> Self {
        let mut cfg = self.clone();
        if cfg.clutter.is_none() {
            cfg.clutter = Some(infer_clutter(log, cfg.partition.max_distance));
        }
        if cfg.birth_positions.is_none() {
            let mut positions: Vec<Vec<f64>> = Vec::new();
            for (_, p) in log.first_positions() {
                let v: Vec<f64> = p.iter().copied().collect();
                let near = positions.iter().any(|q| {
                    q.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>() < 1.0
                });
                if !near {
                    positions.push(v);
                }
            }
            cfg.birth_positions = Some(positions);
        }
        cfg
    }

    fn dim(&self) -> usize {
        self.clutter.as_ref().map_or(2, ClutterModel::dim)
    }

    fn birth_params(&self, position: &[f64]) -> crate::error::Result<GgiwParams> {
        let s = self.motion.order();
        let d = position.len();
        if self.p0_std.len() < s {
            return Err(Error::InvalidConfig(format!(
                "p0_std needs {s} entries for this motion model"
            )));
        }
        let mut mean = DVector::zeros(s * d);
        mean.rows_mut(0, d).copy_from_slice(position);
        let p0 = DMatrix::from_diagonal(&DVector::from_iterator(
            s,
            self.p0_std[..s].iter().map(|v| v * v),
        ));
        GgiwParams::new(
            self.alpha0,
            self.beta0,
            mean,
            p0,
            self.dof0,
            DMatrix::identity(d, d) * self.scale0,
        )
    }

    pub fn glmb_config(&self) -> crate::error::Result<GlmbFilterConfig> {
        let motion = self.motion.model(self.forgetting, self.extent_decay)?;
        let clutter = self
            .clutter
            .clone()
            .ok_or_else(|| Error::InvalidConfig("clutter model unresolved".into()))?;
        let sensor = SensorModel {
            p_d: self.p_d,
            literal_misdetect: self.literal_misdetect,
            clutter,
            observation: motion.observation_row(),
        };
        let mut births = Vec::new();
        for p in self.birth_positions.iter().flatten() {
            births.push((
                self.birth_existence,
                GgiwMixture::single(self.birth_params(p)?),
            ));
        }
        let mut cfg = GlmbFilterConfig::new(motion, sensor);
        cfg.p_s = self.p_s;
        cfg.n_predict = self.n_predict;
        cfg.n_update = self.n_update;
        cfg.max_components = self.max_components;
        cfg.partition = PartitionConfig {
            n_thresholds: self.partition.n_thresholds,
            max_distance: self.partition.max_distance,
            em_refine: self.partition.em_refine,
            max_partitions: self.partition.max_partitions,
            ..PartitionConfig::default()
        };
        cfg.gate_quantile = Some(self.gate_quantile);
        cfg.birth = StaticBirth { tracks: births };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn lmb_config(&self, adaptive: bool) -> crate::error::Result<LmbFilterConfig> {
        let mut glmb = self.glmb_config()?;
        let mut cfg = LmbFilterConfig::new(glmb.clone());
        if adaptive {
            glmb.birth = StaticBirth::default();
            cfg.glmb = glmb;
            let d = self.dim();
            let template = self.birth_params(&vec![0.0; d])?;
            let mut ab = AdaptiveBirth::new(
                self.alpha0,
                self.beta0,
                template.cov,
                self.dof0,
                &template.scale,
            );
            ab.clustering.max_existence = self.adaptive_birth_max_existence;
            cfg.adaptive_birth = Some(ab);
        }
        cfg.gate_quantile = self.gate_quantile;
        cfg.delete_threshold = self.delete_threshold;
        cfg.report_threshold = self.report_threshold;
        cfg.keep_threshold = self.keep_threshold;
        cfg.reduction = ReductionConfig {
            prune_threshold: self.mixture.prune_threshold,
            merge_gate: self.mixture.merge_gate,
            max_components: self.mixture.max_components,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Surveillance region from the measurement bounding box and clutter rate
/// from the mean number of isolated measurements per scan.
pub fn infer_clutter(log: &ScenarioLog, isolation: f64) -> ClutterModel {
    let points: Vec<&Vec<f64>> = log.steps.iter().flat_map(|s| &s.z).collect();
    let d = points.first().map_or(2, |p| p.len());
    let mut lower = vec![f64::INFINITY; d];
    let mut upper = vec![f64::NEG_INFINITY; d];
    for p in &points {
        for j in 0..d {
            lower[j] = lower[j].min(p[j]);
            upper[j] = upper[j].max(p[j]);
        }
    }
    for j in 0..d {
        if !(lower[j].is_finite() && upper[j] > lower[j]) {
            lower[j] = lower[j].min(0.0).max(-1.0e3);
            upper[j] = lower[j] + 2.0e3;
        }
        let pad = (upper[j] - lower[j]) * REGION_MARGIN;
        lower[j] -= pad;
        upper[j] += pad;
    }
    let mut isolated = 0usize;
    for s in &log.steps {
        for (i, p) in s.z.iter().enumerate() {
            let alone = s.z.iter().enumerate().all(|(j, q)| {
                i == j || p.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>() > isolation * isolation
            });
            isolated += alone as usize;
        }
    }
    let rate = (isolated as f64 / log.steps.len().max(1) as f64).max(0.1);
    ClutterModel { rate, lower, upper }
}

/// Output of one filter run over a log.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterRun {
    pub records: Vec<EstimateRecord>,
    pub step_seconds: Vec<f64>,
    /// `(k, label, r)` of every track held by an LMB filter after each step.
    pub existence: Vec<(u32, Label, f64)>,
}

/// Runs a filter over every scan of `log`.
pub fn run_filter(
    kind: FilterKind,
    cfg: &TrackerConfig,
    log: &ScenarioLog,
) -> crate::error::Result<FilterRun> {
    let cfg = cfg.resolve(log);
    let mut run = FilterRun {
        records: Vec::with_capacity(log.steps.len()),
        step_seconds: Vec::with_capacity(log.steps.len()),
        existence: Vec::new(),
    };
    enum Filter {
        Glmb(GlmbFilter),
        Lmb(LmbFilter),
    }
    let mut filter = match kind {
        FilterKind::Glmb => Filter::Glmb(GlmbFilter::new(cfg.glmb_config()?)?),
        FilterKind::Lmb => Filter::Lmb(LmbFilter::new(cfg.lmb_config(false)?)?),
        FilterKind::LmbAb => Filter::Lmb(LmbFilter::new(cfg.lmb_config(true)?)?),
    };
    for step in &log.steps {
        let z = step.measurements();
        let start = Instant::now();
        let est = match &mut filter {
            Filter::Glmb(f) => f.step(&z)?,
            Filter::Lmb(f) => f.step(&z)?,
        };
        run.step_seconds.push(start.elapsed().as_secs_f64());
        if let Filter::Lmb(f) = &filter {
            for t in f.density().tracks() {
                run.existence.push((step.k, t.label, t.existence));
            }
        }
        run.records.push(EstimateRecord {
            k: step.k,
            est: est.iter().map(EstimateEntry::from).collect(),
        });
    }
    Ok(run)
}

/// Scenario from a built-in id or a JSON specification file.
pub fn load_scenario(arg: &str) -> CliResult<ScenarioSpec> {
    if let Ok(id) = arg.parse::<u32>() {
        return builtin_scenario(id).map_err(|e| CliError::usage(e.to_string()));
    }
    let path = Path::new(arg);
    let text = std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::usage(format!("scenario '{arg}' is neither 1, 2, 3 nor a readable file"))
        } else {
            CliError::io(path, e)
        }
    })?;
    let spec: ScenarioSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("{}: invalid scenario: {e}", path.display())))?;
    spec.validate().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(spec)
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}

pub fn cmd_simulate(scenario: &str, seed: Option<u64>, out: &Path) -> CliResult<()> {
    let mut spec = load_scenario(scenario)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let log = generate(&spec).map_err(|e| CliError::usage(e.to_string()))?;
    write_scenario_log(create(out)?, &log).map_err(|e| CliError::io(out, e))
}

fn load_config(path: Option<&Path>) -> CliResult<TrackerConfig> {
    match path {
        None => Ok(TrackerConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            TrackerConfig::from_json(&text)
        }
    }
}

pub fn cmd_track(filter: &str, input: &Path, config: Option<&Path>, out: &Path) -> CliResult<()> {
    let kind: FilterKind = filter.parse()?;
    let cfg = load_config(config)?;
    let log = read_scenario_log(open(input)?).map_err(|e| CliError::read(input, e))?;
    let run = run_filter(kind, &cfg, &log).map_err(|e| CliError::runtime(e.to_string()))?;
    let summary = RunSummary::from_step_times(kind.name(), run.step_seconds);
    write_estimates(create(out)?, &run.records, Some(&summary)).map_err(|e| CliError::io(out, e))
}

fn eval_error(e: Error) -> CliError {
    match e {
        Error::LengthMismatch(m) => CliError::mismatch(m),
        other => CliError::runtime(other.to_string()),
    }
}

pub fn cmd_eval(truth: &Path, est: &Path, ospa: OspaConfig, out: Option<&Path>) -> CliResult<()> {
    if !(ospa.cutoff > 0.0 && ospa.order >= 1.0) {
        return Err(CliError::usage("require --ospa-c > 0 and --ospa-p >= 1"));
    }
    let log = read_scenario_log(open(truth)?).map_err(|e| CliError::read(truth, e))?;
    let (records, _) = read_estimates(open(est)?).map_err(|e| CliError::read(est, e))?;
    let metrics = evaluate_run(&log.steps, &records, &ospa).map_err(eval_error)?;
    let csv = MetricsTable::from_runs(&[metrics])
        .map_err(eval_error)?
        .to_csv();
    match out {
        Some(p) => {
            let mut w = create(p)?;
            w.write_all(csv.as_bytes())
                .and_then(|_| w.flush())
                .map_err(|e| CliError::io(p, e))
        }
        None => std::io::stdout()
            .write_all(csv.as_bytes())
            .map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

/// Result of a Monte Carlo sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct McOutput {
    pub table: MetricsTable,
    /// Long-format `run,k,label,r` table for LMB filters.
    pub existence_csv: Option<String>,
    pub runs: Vec<RunMetrics>,
    pub step_seconds: Vec<Vec<f64>>,
}

/// Parameters of a Monte Carlo sweep.
#[derive(Debug, Clone)]
pub struct McSettings {
    pub runs: usize,
    pub spec: ScenarioSpec,
    pub filter: FilterKind,
    pub seed_base: u64,
    pub jobs: usize,
    pub config: TrackerConfig,
    pub ospa: OspaConfig,
}

/// Runs `simulate → track → eval` for seeds `B..B+R-1` on `jobs` workers and
/// reduces by run index, so the result does not depend on `jobs`.
pub fn monte_carlo(s: &McSettings) -> CliResult<McOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(s.jobs.max(1))
        .build()
        .map_err(|e| CliError::runtime(e.to_string()))?;
    let results: Vec<CliResult<(RunMetrics, FilterRun)>> = pool.install(|| {
        (0..s.runs)
            .into_par_iter()
            .map(|i| {
                let mut spec = s.spec.clone();
                spec.seed = s.seed_base + i as u64;
                let fail = |e: Error| CliError::runtime(format!("run {i}: {e}"));
                let log = generate(&spec).map_err(fail)?;
                let run = run_filter(s.filter, &s.config, &log).map_err(fail)?;
                let m = evaluate_run(&log.steps, &run.records, &s.ospa).map_err(fail)?;
                Ok((m, run))
            })
            .collect()
    });
    let mut runs = Vec::with_capacity(s.runs);
    let mut filter_runs = Vec::with_capacity(s.runs);
    for r in results {
        let (m, f) = r?;
        runs.push(m);
        filter_runs.push(f);
    }
    let table = MetricsTable::from_runs(&runs).map_err(eval_error)?;
    let existence_csv = s.filter.is_lmb().then(|| {
        let mut csv = String::from("run,k,label,r\n");
        for (i, f) in filter_runs.iter().enumerate() {
            for (k, label, r) in &f.existence {
                writeln!(csv, "{i},{k},{label},{r}").unwrap();
            }
        }
        csv
    });
    Ok(McOutput {
        table,
        existence_csv,
        runs,
        step_seconds: filter_runs.into_iter().map(|f| f.step_seconds).collect(),
    })
}

/// Path of the existence sidecar written next to a Monte Carlo table.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("r.csv")
}

fn resolve_jobs(jobs: usize) -> CliResult<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|j| *j > 0)
            .ok_or_else(|| CliError::usage(format!("{THREADS_ENV} must be a positive integer"))),
        Err(_) => Ok(jobs.max(1)),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_mc(
    runs: usize,
    scenario: &str,
    filter: &str,
    seed_base: u64,
    jobs: usize,
    config: Option<&Path>,
    ospa: OspaConfig,
    out: &Path,
) -> CliResult<()> {
    let filter: FilterKind = filter.parse()?;
    if runs == 0 {
        return Err(CliError::usage("--runs must be at least 1"));
    }
    let spec = load_scenario(scenario)?;
    let config = match config {
        Some(_) => load_config(config)?,
        None => TrackerConfig::from_scenario(&spec),
    };
    let settings = McSettings {
        runs,
        spec,
        filter,
        seed_base,
        jobs: resolve_jobs(jobs)?,
        config,
        ospa,
    };
    let result = monte_carlo(&settings)?;
    let mut w = create(out)?;
    w.write_all(result.table.to_csv().as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(out, e))?;
    if let Some(csv) = result.existence_csv {
        let side = sidecar_path(out);
        let mut w = create(&side)?;
        w.write_all(csv.as_bytes())
            .and_then(|_| w.flush())
            .map_err(|e| CliError::io(&side, e))?;
    }
    Ok(())
}

/// Command-line interface.
#[derive(Debug, Parser)]
#[command(name = "rfs-extent", version, about = "Extended multi-target tracking with GGIW-GLMB and GGIW-LMB filters")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a scenario log (JSON Lines).
    Simulate {
        /// Built-in scenario 1, 2 or 3, or a path to a JSON scenario spec.
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a filter over a scenario log.
    Track {
        /// glmb, lmb or lmb-ab.
        #[arg(long)]
        filter: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-step cardinality error and OSPA of estimates against truth.
    Eval {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        est: PathBuf,
        #[arg(long = "ospa-c", default_value_t = 100.0)]
        ospa_c: f64,
        #[arg(long = "ospa-p", default_value_t = 1.0)]
        ospa_p: f64,
        /// Add OSPA under the centroid + extent + rate base distance.
        #[arg(long)]
        extended: bool,
        /// Output CSV; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo sweep of simulate, track and eval.
    Mc {
        #[arg(long)]
        runs: usize,
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        filter: String,
        #[arg(long = "seed-base", default_value_t = 0)]
        seed_base: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "ospa-c", default_value_t = 100.0)]
        ospa_c: f64,
        #[arg(long = "ospa-p", default_value_t = 1.0)]
        ospa_p: f64,
        #[arg(long)]
        extended: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

fn ospa_config(c: f64, p: f64, extended: bool) -> OspaConfig {
    OspaConfig {
        cutoff: c,
        order: p,
        extended,
        ..OspaConfig::default()
    }
}

pub fn execute(command: Command) -> CliResult<()> {
    match command {
        Command::Simulate { scenario, seed, out } => cmd_simulate(&scenario, seed, &out),
        Command::Track { filter, input, config, out } => {
            cmd_track(&filter, &input, config.as_deref(), &out)
        }
        Command::Eval { truth, est, ospa_c, ospa_p, extended, out } => {
            cmd_eval(&truth, &est, ospa_config(ospa_c, ospa_p, extended), out.as_deref())
        }
        Command::Mc {
            runs,
            scenario,
            filter,
            seed_base,
            jobs,
            config,
            ospa_c,
            ospa_p,
            extended,
            out,
        } => cmd_mc(
            runs,
            &scenario,
            &filter,
            seed_base,
            jobs,
            config.as_deref(),
            ospa_config(ospa_c, ospa_p, extended),
            &out,
        ),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
/// Diagnostics go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
