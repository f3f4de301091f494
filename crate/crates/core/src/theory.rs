//! The two-parameter Long-Servedio landscape under replicated label noise.
//!
//! With `N` clean copies of the four-point sample and one flipped copy,
//! `4(N+1)` times the empirical risk at `(θ₁, θ₂)` is
//!
//! ```text
//! N l(θ₁) + l(−θ₁) + 2N l(u) + 2 l(−u) + N l(v) + l(−v),
//! u = γ(θ₁ − θ₂),  v = γ(θ₁ + 5θ₂).
//! ```
//!
//! Its stationarity conditions are expressed through
//! `B_N^α(x) = N l'(x) − l'(−x) = σ'(x)(σ(−x)^{−1/α} − Nσ(x)^{−1/α})`,
//! which is positive exactly when `x > α ln N`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{long_servedio_theory, ls_noisy_replicate, Dataset};
use crate::error::{Error, Result};
use crate::linear::{metrics, LinearParams};
use crate::losses::{loss, loss_d1, sigmoid_prime, weight, Alpha};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LsProblem {
    /// Number of clean copies; the noise rate is `1/(N+1)`.
    pub n: usize,
    pub gamma: f64,
    pub alpha: Alpha,
}

impl LsProblem {
    pub fn new(n: usize, gamma: f64, alpha: Alpha) -> Result<Self> {
        if n < 2 {
            return Err(Error::param("n", format!("need N > 1, got {n}")));
        }
        if !(gamma > 0.0 && gamma < 1.0 / 6.0) {
            return Err(Error::param("gamma", format!("must lie in (0, 1/6), got {gamma}")));
        }
        Ok(LsProblem { n, gamma, alpha })
    }

    pub fn noise_rate(&self) -> f64 {
        1.0 / (self.n as f64 + 1.0)
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }

    /// The replicated noisy sample this landscape describes.
    pub fn noisy_sample(&self) -> Result<Dataset> {
        ls_noisy_replicate(&long_servedio_theory(self.gamma)?, self.noise_rate())
    }

    /// `α ln N / γ`, where the right-hand side of the root equation changes sign.
    pub fn crossover_scale(&self) -> f64 {
        self.alpha.as_f64() * self.nf().ln() / self.gamma
    }
}

/// `4(N+1)` times the empirical noisy risk at `(θ₁, θ₂)`.
pub fn ls_landscape(prob: &LsProblem, theta1: f64, theta2: f64) -> f64 {
    let (n, g, a) = (prob.nf(), prob.gamma, prob.alpha);
    let u = g * (theta1 - theta2);
    let v = g * (theta1 + 5.0 * theta2);
    n * loss(a, theta1)
        + loss(a, -theta1)
        + 2.0 * n * loss(a, u)
        + 2.0 * loss(a, -u)
        + n * loss(a, v)
        + loss(a, -v)
}

/// Partial derivatives `(P₁, P₂)` of [`ls_landscape`].
pub fn ls_partials(prob: &LsProblem, theta1: f64, theta2: f64) -> (f64, f64) {
    let (n, g, a) = (prob.nf(), prob.gamma, prob.alpha);
    let u = g * (theta1 - theta2);
    let v = g * (theta1 + 5.0 * theta2);
    let bu = n * loss_d1(a, u) - loss_d1(a, -u);
    let bv = n * loss_d1(a, v) - loss_d1(a, -v);
    let p1 = n * loss_d1(a, theta1) - loss_d1(a, -theta1) + 2.0 * g * bu + g * bv;
    let p2 = -2.0 * g * bu + 5.0 * g * bv;
    (p1, p2)
}

/// `B_N^α(x)`. At α = ∞ this is `σ'(x)(1 − N)`.
pub fn bn_alpha(n: f64, alpha: Alpha, x: f64) -> f64 {
    if alpha.is_infinite() {
        return sigmoid_prime(x) * (1.0 - n);
    }
    // σ'(x)σ(±x)^{−1/α} = weight(α, ±x) since σ' is even; both are formed in
    // log space so large |x| does not overflow.
    weight(alpha, -x) - n * weight(alpha, x)
}

fn check_n(n: f64) -> Result<()> {
    if n > 1.0 && n.is_finite() {
        Ok(())
    } else {
        Err(Error::param("n", format!("need 1 < N < ∞, got {n}")))
    }
}

/// Bisect a sign change of `f` on `[lo, hi]` where `f(lo) < 0 < f(hi)` or
/// the reverse. Stops when the bracket stops shrinking.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let lo_neg = f(lo) < 0.0;
    for _ in 0..400 {
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) < 0.0) == lo_neg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo + (hi - lo) / 2.0
}

/// The point where `B_N^α` turns positive, found by bracketing and bisection.
/// `None` for α = ∞, where `B_N^α` is negative everywhere.
pub fn bn_crossover(n: f64, alpha: Alpha) -> Result<Option<f64>> {
    check_n(n)?;
    if alpha.is_infinite() {
        return Ok(None);
    }
    let f = |x| bn_alpha(n, alpha, x);
    let mut hi = 1.0;
    while f(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::BracketNotFound(format!(
                "B_N^α stayed nonpositive up to x = {hi} (N = {n}, α = {alpha})"
            )));
        }
    }
    let mut lo = 0.0;
    while f(lo) >= 0.0 {
        lo -= 1.0;
    }
    Ok(Some(bisect(f, lo, hi)))
}

/// Which side of `α ln N / γ` the root was bracketed on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BracketSide {
    Above,
    Below,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootReport {
    pub theta1: f64,
    /// `B(θ̃₁) + 6γB(γθ̃₁)` at the returned point.
    pub residual: f64,
    /// `α ln N / γ`.
    pub scale: f64,
    pub bracket: (f64, f64),
    pub side: BracketSide,
}

/// `B(θ) + 6γ B(γθ)`, whose zero gives the robust solution `(θ̃₁, 0)`.
pub fn root_equation(prob: &LsProblem, theta: f64) -> f64 {
    let n = prob.nf();
    bn_alpha(n, prob.alpha, theta) + 6.0 * prob.gamma * bn_alpha(n, prob.alpha, prob.gamma * theta)
}

/// Solve `B(θ) = −6γB(γθ)` for the robust first coordinate.
///
/// The search starts at `c = α ln N / γ`. It first expands upward to `10c`
/// looking for a sign change; when the equation is positive on that whole
/// range the root sits just below `c`, so it then steps downward by
/// geometrically growing offsets until the sign flips. Below `α ln N` both
/// terms are negative, which bounds the downward search.
pub fn theorem1_root(prob: &LsProblem) -> Result<RootReport> {
    let alpha = match prob.alpha.finite() {
        Some(a) if a > 1.0 => a,
        _ => {
            return Err(Error::param(
                "alpha",
                format!("need 1 < α < ∞, got {}", prob.alpha),
            ))
        }
    };
    let c = prob.crossover_scale();
    let f = |t| root_equation(prob, t);
    let fc = f(c);
    if fc == 0.0 {
        return Ok(RootReport {
            theta1: c,
            residual: 0.0,
            scale: c,
            bracket: (c, c),
            side: BracketSide::Above,
        });
    }

    let mut prev = c;
    let mut step = c * 1e-3;
    while prev < 10.0 * c {
        let next = (prev + step).min(10.0 * c);
        if (f(next) < 0.0) != (fc < 0.0) {
            let root = bisect(f, prev, next);
            return Ok(RootReport {
                theta1: root,
                residual: f(root),
                scale: c,
                bracket: (prev, next),
                side: BracketSide::Above,
            });
        }
        prev = next;
        step *= 2.0;
    }

    let floor = alpha * prob.nf().ln();
    let mut upper = c;
    let mut delta = c * 1e-15;
    loop {
        let lower = (c - delta).max(floor);
        if (f(lower) < 0.0) != (fc < 0.0) {
            let root = bisect(f, lower, upper);
            return Ok(RootReport {
                theta1: root,
                residual: f(root),
                scale: c,
                bracket: (lower, upper),
                side: BracketSide::Below,
            });
        }
        if lower <= floor {
            return Err(Error::BracketNotFound(format!(
                "no sign change of B(θ) + 6γB(γθ) on [{floor}, {}] (N = {}, γ = {}, α = {alpha}); \
                 value at α ln N/γ = {fc:e}",
                10.0 * c,
                prob.n,
                prob.gamma
            )));
        }
        upper = lower;
        delta *= 2.0;
    }
}

/// Rectangular grid over `(θ₁, θ₂)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub theta1: (f64, f64),
    pub theta2: (f64, f64),
    pub step: f64,
}

impl Grid {
    pub fn square(lo: f64, hi: f64, step: f64) -> Self {
        Grid {
            theta1: (lo, hi),
            theta2: (lo, hi),
            step,
        }
    }

    /// Default windows: `[0, 3]²` for α ≤ 1, otherwise
    /// `θ₁ ∈ [0, 2α ln N/γ]`, `θ₂ ∈ [−2, 2]`. For α = ∞ the infimum is only
    /// approached as `θ₁ → ∞`, so `θ₁` is capped at 100.
    pub fn default_for(prob: &LsProblem, step: f64) -> Self {
        if prob.alpha.as_f64() <= 1.0 {
            Grid::square(0.0, 3.0, step)
        } else {
            Grid {
                theta1: (0.0, (2.0 * prob.crossover_scale()).min(100.0)),
                theta2: (-2.0, 2.0),
                step,
            }
        }
    }

    fn axis(range: (f64, f64), step: f64) -> Vec<f64> {
        let n = ((range.1 - range.0) / step + 1e-9).floor() as usize;
        (0..=n).map(|k| range.0 + k as f64 * step).collect()
    }

    pub fn theta1_axis(&self) -> Vec<f64> {
        Self::axis(self.theta1, self.step)
    }

    pub fn theta2_axis(&self) -> Vec<f64> {
        Self::axis(self.theta2, self.step)
    }

    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::param("step", "must be positive"));
        }
        let ok = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.0 <= r.1;
        if !ok(self.theta1) || !ok(self.theta2) {
            return Err(Error::Empty("grid"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridMin {
    pub theta1: f64,
    pub theta2: f64,
    pub value: f64,
}

/// Exhaustive minimum of [`ls_landscape`] on `grid`. Ties go to the
/// smallest θ₁, then the smallest θ₂. Rows are evaluated in parallel.
pub fn ls_grid_search(prob: &LsProblem, grid: &Grid) -> Result<GridMin> {
    grid.validate()?;
    let t1 = grid.theta1_axis();
    let t2 = grid.theta2_axis();
    let row_mins: Vec<GridMin> = t1
        .par_iter()
        .map(|&a| {
            let mut best = GridMin {
                theta1: a,
                theta2: t2[0],
                value: ls_landscape(prob, a, t2[0]),
            };
            for &b in &t2[1..] {
                let v = ls_landscape(prob, a, b);
                if v < best.value {
                    best = GridMin {
                        theta1: a,
                        theta2: b,
                        value: v,
                    };
                }
            }
            best
        })
        .collect();
    row_mins
        .into_iter()
        .reduce(|best, m| if m.value < best.value { m } else { best })
        .ok_or(Error::Empty("grid"))
}

/// `theta1,theta2,value` rows over the grid.
pub fn write_contour_csv<W: Write>(prob: &LsProblem, grid: &Grid, out: W) -> Result<()> {
    grid.validate()?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta1", "theta2", "value"])?;
    for &a in &grid.theta1_axis() {
        for &b in &grid.theta2_axis() {
            w.write_record([a.to_string(), b.to_string(), ls_landscape(prob, a, b).to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io("<contour>", e))?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quality {
    /// `θ₁ > 0`, `θ₁ > θ₂` and `θ₁ > −5θ₂`: all of S correct.
    Good,
    /// Clean accuracy exactly one half.
    FairCoin,
    Other,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub quality: Quality,
    pub clean_accuracy: f64,
    /// Indices into the four-point sample that are misclassified.
    pub misclassified: Vec<usize>,
}

pub fn ls_classify_quality(theta1: f64, theta2: f64, gamma: f64) -> Result<QualityReport> {
    let clean = long_servedio_theory(gamma)?;
    let params = LinearParams::new(vec![theta1, theta2]);
    let misclassified = (0..clean.len())
        .filter(|&i| {
            use crate::linear::Classifier;
            params.classify(clean.row(i)).map(|y| y != clean.label(i)).unwrap_or(true)
        })
        .collect();
    let clean_accuracy = metrics(&params, &clean)?.accuracy;
    let quality = if theta1 > 0.0 && theta1 > theta2 && theta1 > -5.0 * theta2 {
        Quality::Good
    } else if clean_accuracy == 0.5 {
        Quality::FairCoin
    } else {
        Quality::Other
    };
    Ok(QualityReport {
        quality,
        clean_accuracy,
        misclassified,
    })
}

/// One row of the θ₂-strip diagnostic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripPoint {
    pub theta2: f64,
    /// Zero of `P₁(·, θ₂)` near `α ln N / γ`, when one was bracketed.
    pub theta1: Option<f64>,
    pub p1: f64,
    pub p2: f64,
}

/// For each fixed θ₂, re-solve `P₁(θ₁, θ₂) = 0` around the robust scale and
/// report both partials there. A diagnostic of nearby optima, not a proof.
pub fn theta2_strip(prob: &LsProblem, theta2s: &[f64]) -> Vec<StripPoint> {
    let c = prob.crossover_scale();
    theta2s
        .iter()
        .map(|&t2| {
            let f = |t1| ls_partials(prob, t1, t2).0;
            let (mut lo, mut hi) = (c, c);
            let mut d = c * 1e-15;
            let mut found = None;
            while d < c {
                lo = (c - d).max(0.0);
                hi = c + d;
                if f(lo) < 0.0 && f(hi) > 0.0 {
                    found = Some(bisect(f, lo, hi));
                    break;
                }
                d *= 2.0;
            }
            let at = found.unwrap_or(if f(lo).abs() < f(hi).abs() { lo } else { hi });
            let (p1, p2) = ls_partials(prob, at, t2);
            StripPoint {
                theta2: t2,
                theta1: found,
                p1,
                p2,
            }
        })
        .collect()
}
