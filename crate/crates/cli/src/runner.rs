//! Runs a validated config: one thread per seed, a CSV trace per kernel,
//! a JSON summary and an echoed config per seed.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use augment_core::make_rng;
use augment_core::models::lattice::LatticeModel;
use augment_core::models::morris::MorrisModel;
use augment_core::models::treg::TRegressionModel;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ConfigError, Design, ExperimentConfig, ExperimentKind, KernelChoice, LatticeInit};
use crate::data::{read_morris, read_regression};
use crate::experiments::{
    compare_baselines, order_by_iact, run_lattice, run_morris, run_treg, ChainOutput, Comparison,
    Estimate, RunLength,
};

/// Stream of the data-generating draws for simulated designs; kernel
/// chains use their own streams.
pub const DATA_STREAM: u64 = 100;

#[derive(Debug, Clone)]
pub enum Model {
    Morris(MorrisModel),
    Treg(TRegressionModel),
    Lattice(LatticeModel),
}

fn domain_key(name: &str) -> &'static str {
    match name {
        "lambda" => "model.lambda",
        "q" => "model.q",
        "V" => "model.v",
        "y" => "model.y",
        "nu" => "model.nu",
        "beta" => "model.beta",
        "side" => "model.side",
        "states" => "model.states",
        _ => "model",
    }
}

/// Builds the model a config describes. Errors carry the config key they
/// concern.
pub fn build_model(cfg: &ExperimentConfig) -> Result<Model, (&'static str, String)> {
    let md = &cfg.model;
    let core_err = |e: augment_core::Error| match e {
        augment_core::Error::ParameterDomain { name, .. } => (domain_key(name), e.to_string()),
        other => ("model", other.to_string()),
    };
    match cfg.experiment {
        ExperimentKind::Morris | ExperimentKind::CompareBaselines => {
            let reference = MorrisModel::reference();
            let (y, v) = match &md.data {
                Some(path) => read_morris(path).map_err(|e| ("model.data", e))?,
                None => (
                    md.y.clone().unwrap_or_else(|| reference.y().to_vec()),
                    md.v.clone().unwrap_or_else(|| reference.v().to_vec()),
                ),
            };
            let lambda = md.lambda.unwrap_or(reference.lambda());
            let q = md.q.unwrap_or(reference.prior_dof());
            MorrisModel::new(y, v, lambda, q).map(Model::Morris).map_err(core_err)
        }
        ExperimentKind::Treg => {
            let nu = md.nu.expect("validated");
            let model = match md.design.expect("validated") {
                Design::Data => {
                    let path = md.data.as_ref().expect("validated");
                    let (rows, y) = read_regression(path).map_err(|e| ("model.data", e))?;
                    TRegressionModel::from_rows(&rows, y, nu)
                }
                Design::Collinear => {
                    let beta = match md.beta_true.as_deref() {
                        None => [1.0, 1.0],
                        Some(&[a, b]) => [a, b],
                        Some(_) => return Err(("model.beta_true", String::from("two coefficients required"))),
                    };
                    let mut rng = make_rng(md.data_seed.unwrap_or(0), DATA_STREAM);
                    TRegressionModel::collinear(
                        md.n.unwrap_or(50),
                        md.correlation.unwrap_or(0.999),
                        nu,
                        beta,
                        &mut rng,
                    )
                }
            };
            model.map(Model::Treg).map_err(core_err)
        }
        ExperimentKind::Ising => {
            LatticeModel::ising(md.side.expect("validated"), md.beta.expect("validated"))
                .map(Model::Lattice)
                .map_err(core_err)
        }
        ExperimentKind::Potts => LatticeModel::potts(
            md.side.expect("validated"),
            md.states.expect("validated"),
            md.beta.expect("validated"),
        )
        .map(Model::Lattice)
        .map_err(core_err),
    }
}

/// Model construction failures reported like parse errors.
pub fn build_checked(cfg: &ExperimentConfig, src: Option<(&str, &Path)>) -> Result<Model, ConfigError> {
    build_model(cfg).map_err(|(key, message)| ConfigError {
        file: src.map(|(_, p)| p.to_path_buf()),
        line: src.and_then(|(s, _)| crate::config::key_line(s, key)),
        message: format!("{key}: {message}"),
    })
}

fn dataset(model: &Model) -> Value {
    match model {
        Model::Morris(m) => json!({"y": m.y(), "v": m.v(), "lambda": m.lambda(), "q": m.prior_dof()}),
        Model::Treg(m) => {
            let rows: Vec<Vec<f64>> = (0..m.n())
                .map(|i| (0..m.p()).map(|j| m.design()[(i, j)]).collect())
                .collect();
            let corr = (m.p() == 2).then(|| m.column_correlation(0, 1));
            json!({"n": m.n(), "p": m.p(), "nu": m.nu(), "column_correlation": corr,
                   "y": m.responses(), "x": rows})
        }
        Model::Lattice(m) => json!({"side": m.side(), "values": m.n_values(), "beta": m.beta()}),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelSummary {
    pub kernel: &'static str,
    pub n_kept: usize,
    pub trace_file: String,
    pub estimates: Vec<Estimate>,
    pub acceptance_rate: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WallClock {
    pub total_seconds: f64,
    pub per_kernel_seconds: BTreeMap<String, f64>,
}

/// Per-seed summary. `wall_clock` is the only field that varies between
/// identical reruns.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub experiment: &'static str,
    pub seed: u64,
    pub status: &'static str,
    pub error: Option<String>,
    pub kernels: Vec<KernelSummary>,
    pub kernels_by_iact: Option<Vec<(&'static str, f64)>>,
    pub baselines: Option<Comparison>,
    pub dataset: Value,
    pub config: ExperimentConfig,
    pub wall_clock: WallClock,
}

/// Everything one seed produced, before anything is written.
#[derive(Debug, Clone)]
pub struct SeedResult {
    pub seed: u64,
    pub runs: Vec<ChainOutput>,
    pub seconds: Vec<f64>,
    pub baselines: Option<Comparison>,
    pub error: Option<String>,
    pub total_seconds: f64,
}

fn run_one(cfg: &ExperimentConfig, kernel: KernelChoice, model: &Model, seed: u64) -> augment_core::Result<ChainOutput> {
    let len = RunLength {
        n_burn: cfg.n_burn,
        n_keep: cfg.n_keep,
        thin: cfg.thin,
    };
    match model {
        Model::Morris(m) => run_morris(m, seed, len, cfg.m),
        Model::Treg(m) => run_treg(m, kernel, seed, len, cfg.model.step_scale.unwrap_or(1.0)),
        Model::Lattice(m) => run_lattice(m, kernel, seed, len, cfg.model.init == Some(LatticeInit::Hot)),
    }
}

/// Runs every kernel for one seed; stops at the first failure and keeps
/// what finished before it.
pub fn run_seed(cfg: &ExperimentConfig, model: &Model, seed: u64) -> SeedResult {
    let start = Instant::now();
    let mut out = SeedResult {
        seed,
        runs: Vec::new(),
        seconds: Vec::new(),
        baselines: None,
        error: None,
        total_seconds: 0.0,
    };
    if cfg.experiment == ExperimentKind::CompareBaselines {
        let Model::Morris(m) = model else { unreachable!("compare-baselines builds a Morris model") };
        let len = RunLength {
            n_burn: cfg.n_burn,
            n_keep: cfg.n_keep,
            thin: cfg.thin,
        };
        match compare_baselines(m, &cfg.baselines, seed, len) {
            Ok(c) => out.baselines = Some(c),
            Err(e) => out.error = Some(e.to_string()),
        }
    } else {
        for kernel in cfg.kernel_list() {
            let t = Instant::now();
            match run_one(cfg, kernel, model, seed) {
                Ok(run) => {
                    out.runs.push(run);
                    out.seconds.push(t.elapsed().as_secs_f64());
                }
                Err(e) => {
                    out.error = Some(format!("{}: {e}", kernel.name()));
                    break;
                }
            }
        }
    }
    out.total_seconds = start.elapsed().as_secs_f64();
    out
}

pub fn trace_name(cfg: &ExperimentConfig, seed: u64, kernel: KernelChoice) -> String {
    format!("{}_seed{seed}_{}.csv", cfg.experiment.name(), kernel.name())
}

pub fn summary_name(cfg: &ExperimentConfig, seed: u64) -> String {
    format!("{}_seed{seed}.json", cfg.experiment.name())
}

pub fn config_name(cfg: &ExperimentConfig, seed: u64) -> String {
    format!("{}_seed{seed}.config.toml", cfg.experiment.name())
}

pub fn table_name(cfg: &ExperimentConfig, seed: u64) -> String {
    format!("{}_seed{seed}_table.csv", cfg.experiment.name())
}

/// The config that reproduces one seed's run on its own.
pub fn seed_config(cfg: &ExperimentConfig, seed: u64) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.seeds = vec![seed];
    c.output = None;
    c.kernels = cfg.kernel_list();
    c
}

pub fn summarize(cfg: &ExperimentConfig, model: &Model, result: &SeedResult) -> RunSummary {
    let seed = result.seed;
    let kernels = result
        .runs
        .iter()
        .map(|r| KernelSummary {
            kernel: r.kernel.name(),
            n_kept: r.rows.len(),
            trace_file: trace_name(cfg, seed, r.kernel),
            estimates: r.estimates.clone(),
            acceptance_rate: r.acceptance_rate,
        })
        .collect();
    let lattice = matches!(cfg.experiment, ExperimentKind::Ising | ExperimentKind::Potts);
    let kernels_by_iact = (lattice && result.error.is_none()).then(|| {
        order_by_iact(&result.runs)
            .into_iter()
            .map(|(k, t)| (k.name(), t))
            .collect()
    });
    let per_kernel_seconds = result
        .runs
        .iter()
        .zip(&result.seconds)
        .map(|(r, s)| (r.kernel.name().to_string(), *s))
        .collect();
    RunSummary {
        experiment: cfg.experiment.name(),
        seed,
        status: if result.error.is_some() { "failed" } else { "ok" },
        error: result.error.clone(),
        kernels,
        kernels_by_iact,
        baselines: result.baselines.clone(),
        dataset: dataset(model),
        config: seed_config(cfg, seed),
        wall_clock: WallClock {
            total_seconds: result.total_seconds,
            per_kernel_seconds,
        },
    }
}

/// Summary JSON with `wall_clock` removed, for reproducibility checks.
pub fn without_wall_clock(json: &str) -> Result<Value, serde_json::Error> {
    let mut v: Value = serde_json::from_str(json)?;
    if let Some(obj) = v.as_object_mut() {
        obj.remove("wall_clock");
    }
    Ok(v)
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> String {
    format!("{}: {e}", path.display())
}

pub fn write_trace(path: &Path, run: &ChainOutput) -> Result<(), String> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(&run.header).map_err(|e| io_err(path, e))?;
    for row in &run.rows {
        w.write_record(row.iter().map(f64::to_string)).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_table(path: &Path, c: &Comparison) -> Result<(), String> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(["method", "estimate", "std_error", "oracle", "relative_error", "tolerance", "within_tolerance", "seconds"])
        .map_err(|e| io_err(path, e))?;
    for r in &c.rows {
        w.write_record([
            r.method.clone(),
            r.estimate.to_string(),
            r.std_error.map_or_else(String::new, |s| s.to_string()),
            c.oracle.to_string(),
            r.relative_error.to_string(),
            r.tolerance.clone(),
            r.within_tolerance.to_string(),
            format!("{:.3}", r.seconds),
        ])
        .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Human-readable comparison table.
pub fn format_table(c: &Comparison) -> String {
    let mut s = format!("oracle E[A|y] = {:.6}\n", c.oracle);
    s += &format!(
        "{:<20} {:>10} {:>10} {:>10} {:>20} {:>4} {:>8}\n",
        "method", "estimate", "se", "rel.err", "tolerance", "ok", "seconds"
    );
    for r in &c.rows {
        let se = r.std_error.map_or_else(|| "-".to_string(), |x| format!("{x:.5}"));
        s += &format!(
            "{:<20} {:>10.5} {:>10} {:>10.2e} {:>20} {:>4} {:>8.3}\n",
            r.method,
            r.estimate,
            se,
            r.relative_error,
            r.tolerance,
            if r.within_tolerance { "yes" } else { "no" },
            r.seconds
        );
    }
    s
}

/// Writes one seed's files and returns the paths written.
pub fn write_seed(dir: &Path, cfg: &ExperimentConfig, model: &Model, result: &SeedResult) -> Result<Vec<PathBuf>, String> {
    let mut written = Vec::new();
    for run in &result.runs {
        let p = dir.join(trace_name(cfg, result.seed, run.kernel));
        write_trace(&p, run)?;
        written.push(p);
    }
    if let Some(c) = &result.baselines {
        let p = dir.join(table_name(cfg, result.seed));
        write_table(&p, c)?;
        written.push(p);
    }
    let summary = summarize(cfg, model, result);
    let p = dir.join(summary_name(cfg, result.seed));
    let text = serde_json::to_string_pretty(&summary).map_err(|e| io_err(&p, e))?;
    fs::write(&p, text + "\n").map_err(|e| io_err(&p, e))?;
    written.push(p);
    let p = dir.join(config_name(cfg, result.seed));
    let text = toml::to_string(&seed_config(cfg, result.seed)).map_err(|e| io_err(&p, e))?;
    fs::write(&p, text).map_err(|e| io_err(&p, e))?;
    written.push(p);
    Ok(written)
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed_override: Option<u64>,
    pub quiet: bool,
}

#[derive(Debug)]
pub struct RunReport {
    pub written: Vec<PathBuf>,
    pub results: Vec<SeedResult>,
}

impl RunReport {
    pub fn failures(&self) -> usize {
        self.results.iter().filter(|r| r.error.is_some()).count()
    }
}

/// Runs all seeds concurrently and writes their outputs. Runtime
/// failures of single seeds are recorded in their summaries, not
/// returned as errors.
pub fn run_experiment(cfg: &ExperimentConfig, model: &Model, opts: &RunOptions) -> Result<RunReport, String> {
    let mut cfg = cfg.clone();
    if let Some(s) = opts.seed_override {
        cfg.seeds = vec![s];
    }
    let dir = opts
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let results: Vec<SeedResult> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .seeds
            .iter()
            .map(|&seed| {
                let cfg = &cfg;
                scope.spawn(move || run_seed(cfg, model, seed))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("seed worker panicked"))
            .collect()
    });
    let mut written = Vec::new();
    let stderr = std::io::stderr();
    for r in &results {
        written.extend(write_seed(&dir, &cfg, model, r)?);
        if opts.quiet {
            continue;
        }
        let mut e = stderr.lock();
        match &r.error {
            Some(err) => {
                let _ = writeln!(e, "seed {}: failed: {err}", r.seed);
            }
            None => {
                for run in &r.runs {
                    for est in &run.estimates {
                        let _ = writeln!(
                            e,
                            "seed {} {:<14} {:<18} {:>12.6} se {:.2e} iact {:>8.2}",
                            r.seed,
                            run.kernel.name(),
                            est.name,
                            est.value,
                            est.mc_se,
                            est.iact
                        );
                    }
                }
                if let Some(c) = &r.baselines {
                    let _ = write!(e, "seed {}\n{}", r.seed, format_table(c));
                }
            }
        }
    }
    Ok(RunReport { written, results })
}
