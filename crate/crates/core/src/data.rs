//! Datasets, synthetic generators, symmetric label noise and a CSV loader.
//!
//! Every generator takes an explicit `u64` seed and draws from
//! [`ChaCha8Rng`], whose output stream is fixed across platforms, so a
//! `(generator, parameters, seed)` triple always yields the same dataset.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear::LinearParams;

/// The seeded generator used throughout the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Where a dataset came from and what was done to it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub seed: Option<u64>,
    /// Symmetric noise rate applied to the labels, if any.
    pub noise_rate: Option<f64>,
    /// `flip_mask[i]` is true when label `i` differs from the clean label.
    pub flip_mask: Option<Vec<bool>>,
    /// Number of clean copies `N` in a replicated noisy Long-Servedio sample.
    pub replication: Option<usize>,
    /// Rows dropped by the CSV loader because of missing cells.
    pub dropped_rows: usize,
}

/// Feature matrix (row-major), ±1 labels and optional example weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    n_features: usize,
    features: Vec<f64>,
    labels: Vec<i8>,
    weights: Option<Vec<f64>>,
    pub meta: Provenance,
}

impl Dataset {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<i8>) -> Result<Self> {
        let n_features = rows.first().map_or(0, Vec::len);
        let mut features = Vec::with_capacity(rows.len() * n_features);
        for row in &rows {
            if row.len() != n_features {
                return Err(Error::DimensionMismatch {
                    expected: n_features,
                    got: row.len(),
                });
            }
            features.extend_from_slice(row);
        }
        Self::from_flat(n_features, features, labels)
    }

    pub fn from_flat(n_features: usize, features: Vec<f64>, labels: Vec<i8>) -> Result<Self> {
        if features.len() != n_features * labels.len() {
            return Err(Error::DimensionMismatch {
                expected: n_features * labels.len(),
                got: features.len(),
            });
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 1 && y != -1) {
            return Err(Error::param("labels", format!("labels must be ±1, found {bad}")));
        }
        Ok(Dataset {
            n_features,
            features,
            labels,
            weights: None,
            meta: Provenance::default(),
        })
    }

    /// Attach example weights, normalised to sum to one.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::param("weights", "weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::param("weights", "weights sum to zero"));
        }
        self.weights = Some(weights.into_iter().map(|w| w / total).collect());
        Ok(self)
    }

    pub fn with_generator(mut self, name: &str, seed: Option<u64>) -> Self {
        self.meta.generator = name.to_string();
        self.meta.seed = seed;
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.len()).map(move |i| self.row(i))
    }

    pub fn label(&self, i: usize) -> i8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn flip_mask(&self) -> Option<&[bool]> {
        self.meta.flip_mask.as_deref()
    }

    /// Fraction of labels marked flipped, 0 when no noise was applied.
    pub fn flipped_fraction(&self) -> f64 {
        match &self.meta.flip_mask {
            Some(mask) if !mask.is_empty() => {
                mask.iter().filter(|&&f| f).count() as f64 / mask.len() as f64
            }
            _ => 0.0,
        }
    }

    /// Rows selected by `indices`, in that order. Weights are renormalised.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        let mut out = Dataset::from_flat(self.n_features, features, labels)?;
        out.meta = Provenance {
            flip_mask: self
                .meta
                .flip_mask
                .as_ref()
                .map(|m| indices.iter().map(|&i| m[i]).collect()),
            ..self.meta.clone()
        };
        if let Some(w) = &self.weights {
            out = out.with_weights(indices.iter().map(|&i| w[i]).collect())?;
        }
        Ok(out)
    }

    /// Same features with the given labels; provenance is kept.
    pub fn relabel(&self, labels: Vec<i8>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: labels.len(),
            });
        }
        let mut out = Dataset::from_flat(self.n_features, self.features.clone(), labels)?;
        out.weights = self.weights.clone();
        out.meta = self.meta.clone();
        Ok(out)
    }

    /// Write `x1..xd,y,flipped` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=self.n_features).map(|j| format!("x{j}")).collect();
        header.push("y".into());
        header.push("flipped".into());
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            rec.push(self.labels[i].to_string());
            let flipped = self.meta.flip_mask.as_ref().is_some_and(|m| m[i]);
            rec.push(u8::from(flipped).to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<dataset dump>", e))?;
        Ok(())
    }

    /// Shuffle row order with `seed` and split off the first `test_fraction`
    /// of rows as the test set. Returns `(train, test)`.
    pub fn split(&self, test_fraction: f64, seed: u64) -> Result<(Self, Self)> {
        if !(0.0..1.0).contains(&test_fraction) {
            return Err(Error::param("test_fraction", "must lie in [0, 1)"));
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        let mut rng = seeded_rng(seed);
        for i in (1..idx.len()).rev() {
            let j = rng.random_range(0..=i);
            idx.swap(i, j);
        }
        let n_test = (test_fraction * self.len() as f64).round() as usize;
        let test = self.select(&idx[..n_test])?;
        let train = self.select(&idx[n_test..])?;
        Ok((train, test))
    }
}

/// The 2D Long-Servedio sample: one large-margin point `(1, 0)`, two
/// penalizers `(γ, −γ)` and one puller `(γ, 5γ)`, all labelled +1.
pub fn long_servedio_theory(gamma: f64) -> Result<Dataset> {
    if !(gamma > 0.0 && gamma < 1.0 / 6.0) {
        return Err(Error::param("gamma", format!("must lie in (0, 1/6), got {gamma}")));
    }
    let rows = vec![
        vec![1.0, 0.0],
        vec![gamma, -gamma],
        vec![gamma, -gamma],
        vec![gamma, 5.0 * gamma],
    ];
    Ok(Dataset::new(rows, vec![1; 4])?.with_generator("long-servedio-theory", None))
}

/// `N = 1/p − 1` clean copies of `clean` followed by one label-flipped copy.
///
/// `1/p` must be an integer of at least 3 so that `N ≥ 2`.
pub fn ls_noisy_replicate(clean: &Dataset, p: f64) -> Result<Dataset> {
    let inv = 1.0 / p;
    let n_inv = inv.round();
    if !(p > 0.0) || (inv - n_inv).abs() > 1e-9 * inv.max(1.0) {
        return Err(Error::param("p", format!("1/p must be an integer, got p = {p}")));
    }
    if n_inv < 3.0 {
        return Err(Error::param("p", format!("need 1/p >= 3 (N > 1), got p = {p}")));
    }
    let copies = n_inv as usize - 1;
    let m = clean.len();
    let mut features = Vec::with_capacity((copies + 1) * m * clean.n_features);
    let mut labels = Vec::with_capacity((copies + 1) * m);
    let mut mask = Vec::with_capacity((copies + 1) * m);
    for copy in 0..=copies {
        let flipped = copy == copies;
        for i in 0..m {
            features.extend_from_slice(clean.row(i));
            labels.push(if flipped { -clean.label(i) } else { clean.label(i) });
            mask.push(flipped);
        }
    }
    let mut out = Dataset::from_flat(clean.n_features, features, labels)?;
    out.meta = Provenance {
        generator: format!("{}+replicated", clean.meta.generator),
        seed: clean.meta.seed,
        noise_rate: Some(p),
        flip_mask: Some(mask),
        replication: Some(copies),
        dropped_rows: 0,
    };
    Ok(out)
}

/// Mixture component of a 21-dimensional Long-Servedio example.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LsKind {
    LargeMargin,
    Puller,
    Penalizer,
}

pub const LS21_DIM: usize = 21;

/// Classify a clean 21D Long-Servedio example by its agreement pattern.
pub fn ls21_kind(x: &[f64], y: i8) -> Option<LsKind> {
    if x.len() != LS21_DIM {
        return None;
    }
    let y = f64::from(y);
    let head = x[..11].iter().filter(|&&v| v == y).count();
    let tail = x[11..].iter().filter(|&&v| v == y).count();
    match (head, tail) {
        (11, 10) => Some(LsKind::LargeMargin),
        (11, 0) => Some(LsKind::Puller),
        (5, 6) => Some(LsKind::Penalizer),
        _ => None,
    }
}

/// The 21-dimensional experiment version of Long-Servedio.
///
/// `y` is uniform on ±1. With probability 1/4 every coordinate equals `y`;
/// with probability 1/4 coordinates 1–11 equal `y` and 12–21 equal `−y`;
/// otherwise a uniformly random 5-subset of the first 11 and 6-subset of the
/// last 10 equal `y` and the remaining 10 equal `−y`.
pub fn long_servedio_experiment(m: usize, seed: u64) -> Result<Dataset> {
    if m == 0 {
        return Err(Error::param("m", "must be at least 1"));
    }
    let mut rng = seeded_rng(seed);
    let mut features = Vec::with_capacity(m * LS21_DIM);
    let mut labels = Vec::with_capacity(m);
    let mut head: [usize; 11] = std::array::from_fn(|i| i);
    let mut tail: [usize; 10] = std::array::from_fn(|i| 11 + i);
    for _ in 0..m {
        let y: i8 = if rng.random_bool(0.5) { 1 } else { -1 };
        let yf = f64::from(y);
        let u: f64 = rng.random();
        let mut x = [-yf; LS21_DIM];
        if u < 0.25 {
            x = [yf; LS21_DIM];
        } else if u < 0.5 {
            x[..11].fill(yf);
        } else {
            partial_shuffle(&mut rng, &mut head, 5);
            partial_shuffle(&mut rng, &mut tail, 6);
            for &j in head[..5].iter().chain(&tail[..6]) {
                x[j] = yf;
            }
        }
        features.extend_from_slice(&x);
        labels.push(y);
    }
    Ok(Dataset::from_flat(LS21_DIM, features, labels)?
        .with_generator("long-servedio-21d", Some(seed)))
}

/// Fisher–Yates prefix: after the call `items[..k]` is a uniform k-subset.
fn partial_shuffle<R: Rng, T>(rng: &mut R, items: &mut [T], k: usize) {
    for i in 0..k {
        let j = rng.random_range(i..items.len());
        items.swap(i, j);
    }
}

/// Two spherical Gaussian class-conditionals with a shared standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmmSpec {
    /// Mean of the `Y = +1` component.
    pub mu_pos: Vec<f64>,
    /// Mean of the `Y = −1` component.
    pub mu_neg: Vec<f64>,
    pub sigma: f64,
    /// `P(Y = +1)`.
    pub prior_pos: f64,
}

impl GmmSpec {
    pub fn new(mu_pos: Vec<f64>, mu_neg: Vec<f64>, sigma: f64, prior_pos: f64) -> Result<Self> {
        let spec = GmmSpec {
            mu_pos,
            mu_neg,
            sigma,
            prior_pos,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu_pos.len() != self.mu_neg.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mu_pos.len(),
                got: self.mu_neg.len(),
            });
        }
        if self.mu_pos.is_empty() {
            return Err(Error::Empty("gmm mean"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::param("sigma", "must be positive"));
        }
        if !(self.prior_pos > 0.0 && self.prior_pos < 1.0) {
            return Err(Error::param("prior_pos", "must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.mu_pos.len()
    }
}

pub fn gmm_sample(spec: &GmmSpec, m: usize, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    if m == 0 {
        return Err(Error::param("m", "must be at least 1"));
    }
    let noise = Normal::new(0.0, spec.sigma).map_err(|e| Error::param("sigma", e.to_string()))?;
    let mut rng = seeded_rng(seed);
    let d = spec.dim();
    let mut features = Vec::with_capacity(m * d);
    let mut labels = Vec::with_capacity(m);
    for _ in 0..m {
        let positive = rng.random_bool(spec.prior_pos);
        let mu = if positive { &spec.mu_pos } else { &spec.mu_neg };
        features.extend(mu.iter().map(|c| c + noise.sample(&mut rng)));
        labels.push(if positive { 1 } else { -1 });
    }
    Ok(Dataset::from_flat(d, features, labels)?.with_generator("gmm", Some(seed)))
}

/// The likelihood-ratio separator, which is the Bayes classifier for
/// equal spherical covariances: `w = (μ₊ − μ₋)/σ²`,
/// `b = −(‖μ₊‖² − ‖μ₋‖²)/(2σ²) + ln(π/(1−π))`.
pub fn gmm_bayes_params(spec: &GmmSpec) -> Result<LinearParams> {
    spec.validate()?;
    let s2 = spec.sigma * spec.sigma;
    let w = spec
        .mu_pos
        .iter()
        .zip(&spec.mu_neg)
        .map(|(a, b)| (a - b) / s2)
        .collect();
    let sq = |v: &[f64]| v.iter().map(|c| c * c).sum::<f64>();
    let b = -(sq(&spec.mu_pos) - sq(&spec.mu_neg)) / (2.0 * s2)
        + (spec.prior_pos / (1.0 - spec.prior_pos)).ln();
    Ok(LinearParams::with_bias(w, b))
}

/// Flip each label independently with probability `p`.
///
/// The flip draws depend only on `(seed, len)`, not on the data. The stored
/// mask is XOR-ed with any mask already present, so it always marks labels
/// that differ from the clean sample.
pub fn inject_symmetric_noise(ds: &Dataset, p: f64, seed: u64) -> Result<Dataset> {
    if !(0.0..0.5).contains(&p) {
        return Err(Error::param("p", format!("noise rate must lie in [0, 1/2), got {p}")));
    }
    let draws = flip_draws(ds.len(), p, seed);
    let labels = ds
        .labels
        .iter()
        .zip(&draws)
        .map(|(&y, &f)| if f { -y } else { y })
        .collect();
    let mut out = ds.relabel(labels)?;
    let mask = match &ds.meta.flip_mask {
        Some(prev) => prev.iter().zip(&draws).map(|(a, b)| a ^ b).collect(),
        None => draws,
    };
    out.meta.flip_mask = Some(mask);
    out.meta.noise_rate = Some(p);
    Ok(out)
}

/// The Bernoulli(p) flip pattern used by [`inject_symmetric_noise`].
pub fn flip_draws(m: usize, p: f64, seed: u64) -> Vec<bool> {
    let mut rng = seeded_rng(seed);
    (0..m).map(|_| rng.random::<f64>() < p).collect()
}

/// Options for [`load_csv`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CsvOptions {
    pub label_column: String,
    pub positive_token: String,
    /// When set, any label other than the two tokens is an error. When unset,
    /// the first non-positive token seen is taken as the negative class.
    #[serde(default)]
    pub negative_token: Option<String>,
    /// Columns (by header name) to skip, e.g. an ID column.
    #[serde(default)]
    pub ignore_columns: Vec<String>,
    /// Min–max scale every feature to [0, 1].
    #[serde(default)]
    pub min_max_scale: bool,
}

impl CsvOptions {
    pub fn new(label_column: &str, positive_token: &str) -> Self {
        CsvOptions {
            label_column: label_column.into(),
            positive_token: positive_token.into(),
            negative_token: None,
            ignore_columns: Vec::new(),
            min_max_scale: false,
        }
    }
}

fn is_missing(cell: &str) -> bool {
    matches!(cell.trim(), "" | "?" | "NA" | "NaN" | "nan")
}

/// Load a headed CSV. Rows with a missing cell are dropped and counted in
/// `meta.dropped_rows`.
pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers()?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h.trim() == opts.label_column)
        .ok_or_else(|| Error::Parse {
            path: path.into(),
            line: 1,
            message: format!("label column `{}` not in header", opts.label_column),
        })?;
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&j| j != label_idx && !opts.ignore_columns.iter().any(|c| c == headers[j].trim()))
        .collect();

    let mut negative = opts.negative_token.clone();
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut dropped = 0;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            return Err(Error::Parse {
                path: path.into(),
                line,
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        if feature_cols.iter().chain([&label_idx]).any(|&j| is_missing(&record[j])) {
            dropped += 1;
            continue;
        }
        let token = record[label_idx].trim();
        let y = if token == opts.positive_token {
            1
        } else {
            match &negative {
                Some(neg) if neg == token => -1,
                Some(_) => {
                    return Err(Error::Parse {
                        path: path.into(),
                        line,
                        message: format!("unknown label token `{token}`"),
                    })
                }
                None => {
                    negative = Some(token.to_string());
                    -1
                }
            }
        };
        for &j in &feature_cols {
            let cell = record[j].trim();
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                path: path.into(),
                line,
                message: format!("column `{}`: cannot parse `{cell}` as a number", &headers[j]),
            })?;
            features.push(v);
        }
        labels.push(y);
    }
    let d = feature_cols.len();
    if opts.min_max_scale && !labels.is_empty() {
        min_max_scale(&mut features, d);
    }
    let mut ds = Dataset::from_flat(d, features, labels)?
        .with_generator(&format!("csv:{}", path.display()), None);
    ds.meta.dropped_rows = dropped;
    Ok(ds)
}

fn min_max_scale(features: &mut [f64], d: usize) {
    for j in 0..d {
        let col = features.iter().skip(j).step_by(d);
        let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
        let span = hi - lo;
        for v in features.iter_mut().skip(j).step_by(d) {
            *v = if span > 0.0 { (*v - lo) / span } else { 0.0 };
        }
    }
}
