//! Config-driven experiment grids.
//!
//! A run expands its config into `(cell, seed)` jobs, executes them on a
//! rayon pool, and writes everything in job order, so output does not depend
//! on `--jobs`. Per-seed data streams are derived from the seed with
//! ChaCha8 stream ids (see [`stream_seed`]).

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::boost::{adaboost_alpha, BoostConfig};
use crate::data::{
    gmm_bayes_params, gmm_sample, inject_symmetric_noise, load_csv, long_servedio_experiment,
    seeded_rng, CsvOptions, Dataset, GmmSpec,
};
use crate::error::{Error, Result};
use crate::linear::{self, metrics, param_mse, LowerBoundSetup, TrainConfig};
use crate::losses::Alpha;
use crate::theory::{
    ls_classify_quality, ls_grid_search, theorem1_root, theta2_strip, write_contour_csv, Grid,
    LsProblem,
};

/// Data streams derived from one seed.
pub mod stream {
    pub const TRAIN: u64 = 0;
    pub const NOISE: u64 = 1;
    pub const TEST: u64 = 2;
    pub const SPLIT: u64 = 3;
}

/// First output of ChaCha8 seeded with `seed` on stream `stream`.
pub fn stream_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = seeded_rng(seed);
    rng.set_stream(stream);
    rng.next_u64()
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Output directory; overridden by `--out` or `ALPHALOSS_OUT`.
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub experiment: Experiment,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    BoostLs21(BoostLs21),
    BoostCsv(BoostCsv),
    LinearGmm(LinearGmm),
    TheoryLs(TheoryLs),
    Bounds(Bounds),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::BoostLs21(_) => "boost-ls21",
            Experiment::BoostCsv(_) => "boost-csv",
            Experiment::LinearGmm(_) => "linear-gmm",
            Experiment::TheoryLs(_) => "theory-ls",
            Experiment::Bounds(_) => "bounds",
        }
    }
}

fn default_m() -> usize {
    1000
}
fn default_depths() -> Vec<usize> {
    vec![1]
}
fn default_true() -> bool {
    true
}

/// AdaBoost.α on the 21-dimensional Long-Servedio generator.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BoostLs21 {
    #[serde(default = "default_m")]
    pub m_train: usize,
    #[serde(default = "default_m")]
    pub m_test: usize,
    pub alphas: Vec<Alpha>,
    pub noise: Vec<f64>,
    #[serde(default = "default_depths")]
    pub depths: Vec<usize>,
    /// Defaults to 800 for a single depth and 100 for a depth sweep.
    #[serde(default)]
    pub rounds: Option<usize>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_true")]
    pub traces: bool,
}

fn default_test_fraction() -> f64 {
    0.3
}

/// AdaBoost.α on a CSV dataset split into train and test.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BoostCsv {
    /// Relative paths are resolved against the config file's directory.
    pub path: PathBuf,
    pub label_column: String,
    pub positive_token: String,
    #[serde(default)]
    pub negative_token: Option<String>,
    #[serde(default)]
    pub ignore_columns: Vec<String>,
    #[serde(default)]
    pub min_max_scale: bool,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    pub alphas: Vec<Alpha>,
    pub noise: Vec<f64>,
    #[serde(default = "default_depths")]
    pub depths: Vec<usize>,
    #[serde(default)]
    pub rounds: Option<usize>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_true")]
    pub traces: bool,
}

fn default_gmm() -> GmmSpec {
    GmmSpec {
        mu_pos: vec![1.0, 1.0],
        mu_neg: vec![-1.0, -1.0],
        sigma: 1.0,
        prior_pos: 0.14,
    }
}
fn default_gmm_m() -> usize {
    5000
}
fn default_lr() -> f64 {
    1e-2
}
fn default_epochs() -> usize {
    100_000
}
fn default_tol() -> f64 {
    1e-6
}

/// α-loss logistic regression on a two-Gaussian mixture, scored against the
/// Bayes-optimal line.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LinearGmm {
    #[serde(default = "default_gmm")]
    pub gmm: GmmSpec,
    #[serde(default = "default_gmm_m")]
    pub m_train: usize,
    #[serde(default = "default_gmm_m")]
    pub m_test: usize,
    pub alphas: Vec<Alpha>,
    pub noise: Vec<f64>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_epochs")]
    pub max_epochs: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub traces: bool,
}

fn default_n() -> usize {
    2
}
fn default_gamma() -> f64 {
    0.05
}
fn default_step() -> f64 {
    0.01
}

/// Landscape, grid optimum and robust root on the 2D Long-Servedio sample.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryLs {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub alphas: Vec<Alpha>,
    #[serde(default = "default_step")]
    pub step: f64,
    /// Replaces the per-α default window.
    #[serde(default)]
    pub grid: Option<Grid>,
    /// Write `contour_alpha<α>.csv` at this resolution.
    #[serde(default)]
    pub contour_step: Option<f64>,
    /// θ₂ values for the strip diagnostic (α > 1 only).
    #[serde(default)]
    pub strip: Vec<f64>,
}

/// Mirrored Gaussian for the Monte-Carlo lower-bound check.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LowerBoundSpec {
    pub mean: Vec<f64>,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn one() -> f64 {
    1.0
}
fn default_samples() -> usize {
    20_000
}
fn default_points() -> usize {
    10
}

/// Gradient-bound constants, optionally with a Monte-Carlo lower-bound check.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub noise: Vec<f64>,
    pub r: f64,
    pub d: usize,
    pub alphas: Vec<Alpha>,
    #[serde(default)]
    pub lowerbound: Option<LowerBoundSpec>,
    #[serde(default)]
    pub seeds: Vec<u64>,
}

/// One line of `results.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub alpha: Option<Alpha>,
    pub p: Option<f64>,
    pub depth: Option<usize>,
    pub rounds: Option<usize>,
    pub seed: Option<u64>,
    pub metric: String,
    pub value: f64,
}

pub const RESULTS_HEADER: [&str; 8] = ["experiment", "alpha", "p", "depth", "T", "seed", "metric", "value"];

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

impl ResultRow {
    fn record(&self) -> [String; 8] {
        [
            self.experiment.clone(),
            opt(&self.alpha),
            opt(&self.p),
            opt(&self.depth),
            opt(&self.rounds),
            opt(&self.seed),
            self.metric.clone(),
            self.value.to_string(),
        ]
    }
}

/// The grid coordinates shared by every row of one job.
#[derive(Clone, Debug, Default)]
struct Cell {
    alpha: Option<Alpha>,
    p: Option<f64>,
    depth: Option<usize>,
    rounds: Option<usize>,
    seed: Option<u64>,
}

impl Cell {
    fn describe(&self) -> String {
        let mut parts = Vec::new();
        if let Some(a) = self.alpha {
            parts.push(format!("alpha={a}"));
        }
        if let Some(p) = self.p {
            parts.push(format!("p={p}"));
        }
        if let Some(d) = self.depth {
            parts.push(format!("depth={d}"));
        }
        if let Some(t) = self.rounds {
            parts.push(format!("T={t}"));
        }
        if let Some(s) = self.seed {
            parts.push(format!("seed={s}"));
        }
        parts.join(" ")
    }

    fn tag(&self) -> String {
        self.describe().replace(' ', "_").replace('=', "")
    }

    fn row(&self, experiment: &str, metric: &str, value: f64) -> ResultRow {
        ResultRow {
            experiment: experiment.to_string(),
            alpha: self.alpha,
            p: self.p,
            depth: self.depth,
            rounds: self.rounds,
            seed: self.seed,
            metric: metric.to_string(),
            value,
        }
    }
}

#[derive(Default)]
struct JobOutput {
    rows: Vec<ResultRow>,
    files: Vec<(String, Vec<u8>)>,
    detail: Option<Value>,
}

fn config_err(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

fn nonempty<T>(v: &[T], path: &str) -> Result<()> {
    if v.is_empty() {
        Err(config_err(path, "must not be empty"))
    } else {
        Ok(())
    }
}

fn distinct_seeds(seeds: &[u64], path: &str) -> Result<()> {
    nonempty(seeds, path)?;
    let mut s = seeds.to_vec();
    s.sort_unstable();
    if s.windows(2).any(|w| w[0] == w[1]) {
        return Err(config_err(path, "seeds must be distinct"));
    }
    Ok(())
}

fn noise_list(noise: &[f64], path: &str) -> Result<()> {
    nonempty(noise, path)?;
    if let Some(p) = noise.iter().find(|p| !(0.0..0.5).contains(*p)) {
        return Err(config_err(path, format!("noise rate {p} outside [0, 1/2)")));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Parse and validate; errors carry the offending field path.
    pub fn from_json(text: &str) -> Result<Self> {
        // Tagged enums buffer their content and lose field paths, so the
        // tag is dispatched by hand.
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            #[serde(default)]
            out: Option<PathBuf>,
            experiment: serde_json::Map<String, Value>,
        }
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: Raw = serde_path_to_error::deserialize(de)
            .map_err(|e| config_err(&e.path().to_string(), e.into_inner().to_string()))?;
        let mut body = raw.experiment;
        let kind = match body.remove("kind") {
            Some(Value::String(k)) => k,
            Some(_) => return Err(config_err("experiment.kind", "must be a string")),
            None => return Err(config_err("experiment.kind", "missing field")),
        };
        fn inner<T: serde::de::DeserializeOwned>(body: serde_json::Map<String, Value>) -> Result<T> {
            serde_path_to_error::deserialize(Value::Object(body)).map_err(|e| {
                let path = e.path().to_string();
                let path = if path == "." { "experiment".into() } else { format!("experiment.{path}") };
                config_err(&path, e.into_inner().to_string())
            })
        }
        let experiment = match kind.as_str() {
            "boost-ls21" => Experiment::BoostLs21(inner(body)?),
            "boost-csv" => Experiment::BoostCsv(inner(body)?),
            "linear-gmm" => Experiment::LinearGmm(inner(body)?),
            "theory-ls" => Experiment::TheoryLs(inner(body)?),
            "bounds" => Experiment::Bounds(inner(body)?),
            other => {
                return Err(config_err(
                    "experiment.kind",
                    format!("unknown kind `{other}` (expected boost-ls21, boost-csv, linear-gmm, theory-ls or bounds)"),
                ))
            }
        };
        let cfg = ExperimentConfig { out: raw.out, experiment };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        if let Experiment::BoostCsv(c) = &mut cfg.experiment {
            if c.path.is_relative() {
                if let Some(dir) = path.parent() {
                    c.path = dir.join(&c.path);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.experiment {
            Experiment::BoostLs21(c) => {
                nonempty(&c.alphas, "experiment.alphas")?;
                noise_list(&c.noise, "experiment.noise")?;
                nonempty(&c.depths, "experiment.depths")?;
                distinct_seeds(&c.seeds, "experiment.seeds")?;
                if c.m_train == 0 || c.m_test == 0 {
                    return Err(config_err("experiment.m_train", "sizes must be positive"));
                }
                if c.rounds == Some(0) {
                    return Err(config_err("experiment.rounds", "must be at least 1"));
                }
            }
            Experiment::BoostCsv(c) => {
                nonempty(&c.alphas, "experiment.alphas")?;
                noise_list(&c.noise, "experiment.noise")?;
                nonempty(&c.depths, "experiment.depths")?;
                distinct_seeds(&c.seeds, "experiment.seeds")?;
                if !(c.test_fraction > 0.0 && c.test_fraction < 1.0) {
                    return Err(config_err("experiment.test_fraction", "must lie in (0, 1)"));
                }
                if c.rounds == Some(0) {
                    return Err(config_err("experiment.rounds", "must be at least 1"));
                }
            }
            Experiment::LinearGmm(c) => {
                nonempty(&c.alphas, "experiment.alphas")?;
                noise_list(&c.noise, "experiment.noise")?;
                distinct_seeds(&c.seeds, "experiment.seeds")?;
                c.gmm
                    .validate()
                    .map_err(|e| config_err("experiment.gmm", e.to_string()))?;
            }
            Experiment::TheoryLs(c) => {
                nonempty(&c.alphas, "experiment.alphas")?;
                LsProblem::new(c.n, c.gamma, Alpha::ONE)
                    .map_err(|e| config_err("experiment", e.to_string()))?;
                if !(c.step > 0.0) {
                    return Err(config_err("experiment.step", "must be positive"));
                }
            }
            Experiment::Bounds(c) => {
                nonempty(&c.alphas, "experiment.alphas")?;
                nonempty(&c.noise, "experiment.noise")?;
                if let Some(a) = c.alphas.iter().find(|a| a.as_f64() < 1.0) {
                    return Err(config_err("experiment.alphas", format!("α = {a} is below 1")));
                }
                if c.lowerbound.is_some() {
                    distinct_seeds(&c.seeds, "experiment.seeds")?;
                }
            }
        }
        Ok(())
    }
}

/// Mean and normal-approximation 95% interval over seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub experiment: String,
    pub alpha: String,
    pub p: String,
    pub depth: String,
    #[serde(rename = "T")]
    pub rounds: String,
    pub metric: String,
    pub n: usize,
    pub mean: f64,
    /// Absent with fewer than two seeds.
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

pub const SUMMARY_HEADER: [&str; 10] = [
    "experiment", "alpha", "p", "depth", "T", "metric", "n", "mean", "ci_low", "ci_high",
];

impl Aggregate {
    fn record(&self) -> [String; 10] {
        [
            self.experiment.clone(),
            self.alpha.clone(),
            self.p.clone(),
            self.depth.clone(),
            self.rounds.clone(),
            self.metric.clone(),
            self.n.to_string(),
            self.mean.to_string(),
            opt(&self.ci_low),
            opt(&self.ci_high),
        ]
    }
}

/// `mean ± 1.96·s/√n`; the interval is omitted for `n < 2`.
pub fn mean_ci(values: &[f64]) -> (f64, Option<(f64, f64)>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let half = 1.96 * var.sqrt() / n.sqrt();
    (mean, Some((mean - half, mean + half)))
}

/// Group raw records (everything but `seed` and `value` is the key) in
/// order of first appearance.
fn aggregate(records: &[([String; 6], f64)]) -> Vec<Aggregate> {
    let mut order: Vec<[String; 6]> = Vec::new();
    let mut groups: HashMap<[String; 6], Vec<f64>> = HashMap::new();
    for (key, v) in records {
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key.clone());
                Vec::new()
            })
            .push(*v);
    }
    order
        .into_iter()
        .map(|key| {
            let values = &groups[&key];
            let (mean, ci) = mean_ci(values);
            let [experiment, alpha, p, depth, rounds, metric] = key;
            Aggregate {
                experiment,
                alpha,
                p,
                depth,
                rounds,
                metric,
                n: values.len(),
                mean,
                ci_low: ci.map(|c| c.0),
                ci_high: ci.map(|c| c.1),
            }
        })
        .collect()
}

fn row_key(r: &ResultRow) -> [String; 6] {
    let rec = r.record();
    [
        rec[0].clone(),
        rec[1].clone(),
        rec[2].clone(),
        rec[3].clone(),
        rec[4].clone(),
        rec[6].clone(),
    ]
}

/// Read a `results.csv` and aggregate it.
pub fn summarize(path: &Path) -> Result<Vec<Aggregate>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != RESULTS_HEADER {
        return Err(Error::Parse {
            path: path.into(),
            line: 1,
            message: format!("expected header `{}`", RESULTS_HEADER.join(",")),
        });
    }
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |message: String| Error::Parse {
            path: path.into(),
            line,
            message,
        };
        if rec.len() != RESULTS_HEADER.len() {
            return Err(bad(format!("expected 8 fields, found {}", rec.len())));
        }
        let value: f64 = rec[7]
            .parse()
            .map_err(|_| bad(format!("value `{}` is not a number", &rec[7])))?;
        if !rec[5].is_empty() && rec[5].parse::<u64>().is_err() {
            return Err(bad(format!("seed `{}` is not an integer", &rec[5])));
        }
        if rec[6].is_empty() {
            return Err(bad("empty metric name".into()));
        }
        let key = [
            rec[0].to_string(),
            rec[1].to_string(),
            rec[2].to_string(),
            rec[3].to_string(),
            rec[4].to_string(),
            rec[6].to_string(),
        ];
        records.push((key, value));
    }
    Ok(aggregate(&records))
}

pub fn write_summary_csv<W: std::io::Write>(aggs: &[Aggregate], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for a in aggs {
        w.write_record(a.record())?;
    }
    w.flush().map_err(|e| Error::io("<summary>", e))?;
    Ok(())
}

/// What a finished run produced.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub rows: usize,
    pub summary: Value,
}

/// Execute `cfg`, writing `results.csv`, `summary.json` and per-run files
/// under `out_dir`. With `jobs = None` the global rayon pool is used.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path, jobs: Option<usize>) -> Result<RunOutcome> {
    cfg.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let name = cfg.experiment.name();
    let cells = plan(&cfg.experiment)?;

    let exec = || -> Vec<Result<JobOutput>> {
        cells
            .par_iter()
            .map(|cell| {
                run_job(&cfg.experiment, cell).map_err(|e| e.context(format!("{name} [{}]", cell.describe())))
            })
            .collect()
    };
    let outputs = match jobs {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| config_err("--jobs", e.to_string()))?
            .install(exec),
        None => exec(),
    };

    // Everything that finished is written, in job order, before any error
    // is returned.
    let results_path = out_dir.join("results.csv");
    let file = fs::File::create(&results_path).map_err(|e| Error::io(&results_path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(RESULTS_HEADER)?;
    let mut rows = Vec::new();
    let mut details = Vec::new();
    let mut first_err = None;
    for out in outputs {
        match out {
            Ok(out) => {
                for r in &out.rows {
                    w.write_record(r.record())?;
                }
                for (file_name, bytes) in &out.files {
                    let path = out_dir.join(file_name);
                    if let Some(parent) = path.parent() {
                        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
                    }
                    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
                }
                details.extend(out.detail);
                rows.extend(out.rows);
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    w.flush().map_err(|e| Error::io(&results_path, e))?;
    drop(w);

    let records: Vec<([String; 6], f64)> = rows.iter().map(|r| (row_key(r), r.value)).collect();
    let aggs = aggregate(&records);
    let summary = json!({
        "experiment": name,
        "config": cfg.experiment,
        "rows": rows.len(),
        "complete": first_err.is_none(),
        "aggregates": aggs,
        "details": details,
    });
    let summary_path = out_dir.join("summary.json");
    fs::write(&summary_path, serde_json::to_string_pretty(&summary)? + "\n")
        .map_err(|e| Error::io(&summary_path, e))?;

    match first_err {
        Some(e) => Err(e),
        None => Ok(RunOutcome {
            out_dir: out_dir.to_path_buf(),
            rows: rows.len(),
            summary,
        }),
    }
}

fn boost_rounds(rounds: Option<usize>, depths: &[usize]) -> usize {
    rounds.unwrap_or(if depths.len() > 1 { 100 } else { 800 })
}

/// Expand the grid into jobs: α outermost, then p, depth, seed.
fn plan(exp: &Experiment) -> Result<Vec<Cell>> {
    let mut cells = Vec::new();
    match exp {
        Experiment::BoostLs21(BoostLs21 {
            alphas,
            noise,
            depths,
            rounds,
            seeds,
            ..
        })
        | Experiment::BoostCsv(BoostCsv {
            alphas,
            noise,
            depths,
            rounds,
            seeds,
            ..
        }) => {
            let t = boost_rounds(*rounds, depths);
            for &a in alphas {
                for &p in noise {
                    for &d in depths {
                        for &s in seeds {
                            cells.push(Cell {
                                alpha: Some(a),
                                p: Some(p),
                                depth: Some(d),
                                rounds: Some(t),
                                seed: Some(s),
                            });
                        }
                    }
                }
            }
        }
        Experiment::LinearGmm(c) => {
            for &a in &c.alphas {
                for &p in &c.noise {
                    for &s in &c.seeds {
                        cells.push(Cell {
                            alpha: Some(a),
                            p: Some(p),
                            seed: Some(s),
                            ..Cell::default()
                        });
                    }
                }
            }
        }
        Experiment::TheoryLs(c) => {
            let p = 1.0 / (c.n as f64 + 1.0);
            for &a in &c.alphas {
                cells.push(Cell {
                    alpha: Some(a),
                    p: Some(p),
                    ..Cell::default()
                });
            }
        }
        Experiment::Bounds(c) => {
            for &a in &c.alphas {
                for &p in &c.noise {
                    cells.push(Cell {
                        alpha: Some(a),
                        p: Some(p),
                        ..Cell::default()
                    });
                    if c.lowerbound.is_some() {
                        for &s in &c.seeds {
                            cells.push(Cell {
                                alpha: Some(a),
                                p: Some(p),
                                seed: Some(s),
                                ..Cell::default()
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(cells)
}

fn run_job(exp: &Experiment, cell: &Cell) -> Result<JobOutput> {
    match exp {
        Experiment::BoostLs21(c) => boost_ls21_job(c, cell),
        Experiment::BoostCsv(c) => boost_csv_job(c, cell),
        Experiment::LinearGmm(c) => linear_gmm_job(c, cell),
        Experiment::TheoryLs(c) => theory_job(c, cell),
        Experiment::Bounds(c) => bounds_job(c, cell),
    }
}

fn boost_job(
    name: &str,
    cell: &Cell,
    train: &Dataset,
    test: &Dataset,
    traces: bool,
) -> Result<JobOutput> {
    let alpha = cell.alpha.unwrap_or(Alpha::ONE);
    let cfg = BoostConfig::new(alpha, cell.rounds.unwrap_or(1), cell.depth.unwrap_or(1));
    let (ens, trace) = adaboost_alpha(train, &cfg, Some(test))?;
    let test_m = metrics(&ens, test)?;
    let train_m = metrics(&ens, train)?;
    let mut out = JobOutput::default();
    let mut push = |metric: &str, v: f64| out.rows.push(cell.row(name, metric, v));
    push("test_accuracy", test_m.accuracy);
    if let Some(s) = test_m.sensitivity {
        push("test_sensitivity", s);
    }
    if let Some(s) = test_m.specificity {
        push("test_specificity", s);
    }
    push("train_accuracy", train_m.accuracy);
    push("rounds_run", trace.rounds.len() as f64);
    if traces {
        let mut buf = Vec::new();
        trace.write_csv(&mut buf)?;
        out.files.push((format!("traces/{name}_{}.csv", cell.tag()), buf));
    }
    Ok(out)
}

fn boost_ls21_job(c: &BoostLs21, cell: &Cell) -> Result<JobOutput> {
    let seed = cell.seed.unwrap_or(0);
    let clean = long_servedio_experiment(c.m_train, stream_seed(seed, stream::TRAIN))?;
    let train = inject_symmetric_noise(&clean, cell.p.unwrap_or(0.0), stream_seed(seed, stream::NOISE))?;
    let test = long_servedio_experiment(c.m_test, stream_seed(seed, stream::TEST))?;
    boost_job("boost-ls21", cell, &train, &test, c.traces)
}

fn boost_csv_job(c: &BoostCsv, cell: &Cell) -> Result<JobOutput> {
    let seed = cell.seed.unwrap_or(0);
    let opts = CsvOptions {
        label_column: c.label_column.clone(),
        positive_token: c.positive_token.clone(),
        negative_token: c.negative_token.clone(),
        ignore_columns: c.ignore_columns.clone(),
        min_max_scale: c.min_max_scale,
    };
    let ds = load_csv(&c.path, &opts)?;
    let (train, test) = ds.split(c.test_fraction, stream_seed(seed, stream::SPLIT))?;
    let train = inject_symmetric_noise(&train, cell.p.unwrap_or(0.0), stream_seed(seed, stream::NOISE))?;
    boost_job("boost-csv", cell, &train, &test, c.traces)
}

fn linear_gmm_job(c: &LinearGmm, cell: &Cell) -> Result<JobOutput> {
    let seed = cell.seed.unwrap_or(0);
    let clean = gmm_sample(&c.gmm, c.m_train, stream_seed(seed, stream::TRAIN))?;
    let train = inject_symmetric_noise(&clean, cell.p.unwrap_or(0.0), stream_seed(seed, stream::NOISE))?;
    let test = gmm_sample(&c.gmm, c.m_test, stream_seed(seed, stream::TEST))?;
    let mut cfg = TrainConfig::new(cell.alpha.unwrap_or(Alpha::ONE));
    cfg.learning_rate = c.learning_rate;
    cfg.max_epochs = c.max_epochs;
    cfg.tol = c.tol;
    let (params, trace) = linear::train(&train, &cfg)?;
    let bayes = gmm_bayes_params(&c.gmm)?;
    let m = metrics(&params, &test)?;

    let name = "linear-gmm";
    let mut out = JobOutput::default();
    let mut push = |metric: &str, v: f64| out.rows.push(cell.row(name, metric, v));
    push("mse_to_bayes", param_mse(&params, &bayes)?);
    for (j, t) in params.theta.iter().enumerate() {
        push(&format!("theta_{}", j + 1), *t);
    }
    push("bias", params.bias.unwrap_or(0.0));
    push("test_accuracy", m.accuracy);
    if let Some(s) = m.sensitivity {
        push("test_sensitivity", s);
    }
    push("epochs", trace.epochs() as f64);
    push("converged", f64::from(u8::from(trace.converged)));
    if c.traces {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["epoch", "risk", "grad_norm"])?;
        for (k, (r, g)) in trace.risk.iter().zip(&trace.grad_norm).enumerate() {
            w.write_record([k.to_string(), r.to_string(), g.to_string()])?;
        }
        let buf = w.into_inner().map_err(|e| Error::io("<trace>", e.into_error()))?;
        out.files.push((format!("traces/{name}_{}.csv", cell.tag()), buf));
    }
    Ok(out)
}

fn theory_job(c: &TheoryLs, cell: &Cell) -> Result<JobOutput> {
    let alpha = cell.alpha.unwrap_or(Alpha::ONE);
    let prob = LsProblem::new(c.n, c.gamma, alpha)?;
    let grid = c.grid.unwrap_or_else(|| Grid::default_for(&prob, c.step));
    let best = ls_grid_search(&prob, &grid)?;
    let quality = ls_classify_quality(best.theta1, best.theta2, c.gamma)?;

    let name = "theory-ls";
    let mut out = JobOutput::default();
    let mut push = |metric: &str, v: f64| out.rows.push(cell.row(name, metric, v));
    push("grid_theta1", best.theta1);
    push("grid_theta2", best.theta2);
    push("grid_value", best.value);
    push("grid_clean_accuracy", quality.clean_accuracy);

    let root = match alpha.finite() {
        Some(a) if a > 1.0 => {
            let r = theorem1_root(&prob)?;
            let q = ls_classify_quality(r.theta1, 0.0, c.gamma)?;
            push("root_theta1", r.theta1);
            push("root_residual", r.residual);
            push("root_clean_accuracy", q.clean_accuracy);
            Some(json!({ "report": r, "quality": q }))
        }
        _ => None,
    };
    let strip = match (&root, c.strip.is_empty()) {
        (Some(_), false) => Some(theta2_strip(&prob, &c.strip)),
        _ => None,
    };
    if let Some(step) = c.contour_step {
        let contour = Grid { step, ..grid };
        let mut buf = Vec::new();
        write_contour_csv(&prob, &contour, &mut buf)?;
        out.files.push((format!("contour_alpha{alpha}.csv"), buf));
    }
    out.detail = Some(json!({
        "alpha": alpha,
        "n": c.n,
        "gamma": c.gamma,
        "grid": grid,
        "grid_optimum": best,
        "grid_quality": quality,
        "root": root,
        "strip": strip,
    }));
    Ok(out)
}

fn bounds_job(c: &Bounds, cell: &Cell) -> Result<JobOutput> {
    let alpha = cell.alpha.unwrap_or(Alpha::ONE);
    let p = cell.p.unwrap_or(0.0);
    let name = "bounds";
    let mut out = JobOutput::default();
    match (cell.seed, &c.lowerbound) {
        (None, _) => {
            let rep = linear::theorem23_bounds(p, c.r, c.d, alpha, None, None)?;
            out.rows.push(cell.row(name, "chi", rep.chi));
            out.rows.push(cell.row(name, "small_radius_ok", f64::from(u8::from(rep.small_radius_ok))));
            out.detail = Some(serde_json::to_value(rep)?);
        }
        (Some(seed), Some(lb)) => {
            let setup = LowerBoundSetup {
                mean: lb.mean.clone(),
                sigma: lb.sigma,
                p,
                r: c.r,
                alpha,
                samples: lb.samples,
                points: lb.points,
                seed,
            };
            if setup.mean.len() != c.d {
                return Err(config_err("experiment.lowerbound.mean", format!("needs {} entries", c.d)));
            }
            let rep = linear::lowerbound_verify(&setup)?;
            let checked = matches!(rep.outcome, linear::LowerBoundOutcome::Checked);
            let min = rep.probes.iter().map(|g| g.grad_norm).fold(f64::INFINITY, f64::min);
            let mut push = |metric: &str, v: f64| out.rows.push(cell.row(name, metric, v));
            push("assumptions_met", f64::from(u8::from(checked)));
            push("stated_bound", rep.stated_bound);
            push("corrected_bound", rep.corrected_bound);
            if checked {
                push("min_grad_norm", min);
                push("stated_holds", f64::from(u8::from(rep.stated_holds)));
                push("corrected_holds", f64::from(u8::from(rep.corrected_holds)));
            }
            out.detail = Some(serde_json::to_value(rep)?);
        }
        (Some(_), None) => {}
    }
    Ok(out)
}
