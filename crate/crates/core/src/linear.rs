//! Linear (logistic-model) classifiers trained with α-loss.
//!
//! The margin of `(x, y)` under parameters `θ` (and optional bias `b`) is
//! `z = y(⟨x, θ⟩ + b)`. The noisy risk at rate `p` replaces each loss term
//! `l(z)` by `(1−p)l(z) + p·l(−z)`, its expectation under symmetric flips.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{seeded_rng, Dataset, GmmSpec};
use crate::error::{Error, Result};
use crate::losses::{loss_and_d1, loss_d1, loss_d2, loss_d3, sigmoid, sigmoid_prime, Alpha};

/// Parameters of a linear classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub theta: Vec<f64>,
    pub bias: Option<f64>,
    /// Radius of the constraint ball, when one applies.
    #[serde(default, rename = "r")]
    pub radius: Option<f64>,
}

impl LinearParams {
    pub fn new(theta: Vec<f64>) -> Self {
        LinearParams {
            theta,
            bias: None,
            radius: None,
        }
    }

    pub fn with_bias(theta: Vec<f64>, bias: f64) -> Self {
        LinearParams {
            theta,
            bias: Some(bias),
            radius: None,
        }
    }

    pub fn zeros(d: usize, bias: bool) -> Self {
        LinearParams {
            theta: vec![0.0; d],
            bias: bias.then_some(0.0),
            radius: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// Number of free parameters: `d`, plus one with a bias.
    pub fn n_params(&self) -> usize {
        self.theta.len() + usize::from(self.bias.is_some())
    }

    /// `θ` followed by the bias, if any.
    pub fn flat(&self) -> Vec<f64> {
        let mut v = self.theta.clone();
        v.extend(self.bias);
        v
    }

    /// Inverse of [`flat`](Self::flat).
    pub fn set_flat(&mut self, v: &[f64]) -> Result<()> {
        check_dim(self.n_params(), v.len())?;
        let d = self.theta.len();
        self.theta.copy_from_slice(&v[..d]);
        if let Some(b) = self.bias.as_mut() {
            *b = v[d];
        }
        Ok(())
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.theta.len(), x.len())?;
        Ok(dot(&self.theta, x) + self.bias.unwrap_or(0.0))
    }

    /// Scale `θ` back onto the ball of radius `r` if it lies outside.
    /// The bias is left alone.
    pub fn project(&mut self, r: f64) {
        let n = norm(&self.theta);
        if n > r {
            self.theta.iter_mut().for_each(|t| *t *= r / n);
        }
    }

    pub fn to_json(&self, alpha: Option<Alpha>) -> Result<String> {
        #[derive(Serialize)]
        struct Model<'a> {
            theta: &'a [f64],
            bias: Option<f64>,
            alpha: Option<Alpha>,
            r: Option<f64>,
        }
        Ok(serde_json::to_string_pretty(&Model {
            theta: &self.theta,
            bias: self.bias,
            alpha,
            r: self.radius,
        })?)
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn example_weights(ds: &Dataset) -> Result<Vec<f64>> {
    if ds.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    Ok(match ds.weights() {
        Some(w) => w.to_vec(),
        None => vec![1.0 / ds.len() as f64; ds.len()],
    })
}

/// Margins `y_i(⟨x_i, θ⟩ + b)` for every example.
pub fn margins(params: &LinearParams, ds: &Dataset) -> Result<Vec<f64>> {
    check_dim(params.dim(), ds.n_features())?;
    Ok((0..ds.len())
        .map(|i| f64::from(ds.label(i)) * (dot(&params.theta, ds.row(i)) + params.bias.unwrap_or(0.0)))
        .collect())
}

/// Risk and gradient in one pass. `p = 0` gives the clean risk.
fn risk_and_grad(params: &LinearParams, ds: &Dataset, alpha: Alpha, p: f64) -> Result<(f64, Vec<f64>)> {
    let w = example_weights(ds)?;
    let z = margins(params, ds)?;
    let d = params.dim();
    let mut grad = vec![0.0; params.n_params()];
    let mut risk = 0.0;
    for i in 0..ds.len() {
        let (zi, wi) = (z[i], w[i]);
        let (mut value, mut slope) = loss_and_d1(alpha, zi);
        if p > 0.0 {
            let (v, s) = loss_and_d1(alpha, -zi);
            value = (1.0 - p) * value + p * v;
            slope = (1.0 - p) * slope - p * s;
        }
        risk += wi * value;
        let c = wi * slope * f64::from(ds.label(i));
        for (g, x) in grad[..d].iter_mut().zip(ds.row(i)) {
            *g += c * x;
        }
        if params.bias.is_some() {
            grad[d] += c;
        }
    }
    Ok((risk, grad))
}

fn check_noise(p: f64) -> Result<()> {
    if (0.0..0.5).contains(&p) {
        Ok(())
    } else {
        Err(Error::param("p", format!("noise rate must lie in [0, 1/2), got {p}")))
    }
}

/// Empirical α-risk, the (weighted) mean of `l̃^α` over the margins.
pub fn alpha_risk(params: &LinearParams, ds: &Dataset, alpha: Alpha) -> Result<f64> {
    Ok(risk_and_grad(params, ds, alpha, 0.0)?.0)
}

/// Gradient of [`alpha_risk`] in `θ`, with the bias component last.
pub fn alpha_risk_grad(params: &LinearParams, ds: &Dataset, alpha: Alpha) -> Result<Vec<f64>> {
    Ok(risk_and_grad(params, ds, alpha, 0.0)?.1)
}

/// Empirical noisy α-risk: mean of `(1−p)l(z) + p·l(−z)`.
pub fn noisy_alpha_risk(params: &LinearParams, ds: &Dataset, alpha: Alpha, p: f64) -> Result<f64> {
    check_noise(p)?;
    Ok(risk_and_grad(params, ds, alpha, p)?.0)
}

pub fn noisy_alpha_risk_grad(
    params: &LinearParams,
    ds: &Dataset,
    alpha: Alpha,
    p: f64,
) -> Result<Vec<f64>> {
    check_noise(p)?;
    Ok(risk_and_grad(params, ds, alpha, p)?.1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub alpha: Alpha,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_epochs")]
    pub max_epochs: usize,
    /// Stop once the gradient norm drops below this.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Project `θ` onto the ball of this radius after every step.
    #[serde(default)]
    pub project_radius: Option<f64>,
    #[serde(default = "yes")]
    pub fit_bias: bool,
    /// Random `N(0, 0.01²)` start instead of the zero vector.
    #[serde(default)]
    pub init_seed: Option<u64>,
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
fn yes() -> bool {
    true
}

impl TrainConfig {
    pub fn new(alpha: Alpha) -> Self {
        TrainConfig {
            alpha,
            learning_rate: default_lr(),
            max_epochs: default_epochs(),
            tol: default_tol(),
            project_radius: None,
            fit_bias: true,
            init_seed: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param("learning_rate", "must be positive"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::param("tol", "must be positive"));
        }
        if let Some(r) = self.project_radius {
            if !(r > 0.0) {
                return Err(Error::param("project_radius", "must be positive"));
            }
        }
        Ok(())
    }
}

/// Per-epoch history of a training run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub risk: Vec<f64>,
    pub grad_norm: Vec<f64>,
    pub converged: bool,
}

impl TrainTrace {
    pub fn epochs(&self) -> usize {
        self.risk.len()
    }
}

const DIVERGENCE_STREAK: usize = 10;

/// Full-batch gradient descent on the empirical α-risk.
///
/// Each recorded epoch holds the risk and gradient norm at the current
/// iterate; a step is taken unless the norm is already below `tol`.
pub fn train(ds: &Dataset, cfg: &TrainConfig) -> Result<(LinearParams, TrainTrace)> {
    cfg.validate()?;
    let mut params = LinearParams::zeros(ds.n_features(), cfg.fit_bias);
    if let Some(seed) = cfg.init_seed {
        let mut rng = seeded_rng(seed);
        let mut v = params.flat();
        v.iter_mut().for_each(|t| *t = 0.01 * rng.sample::<f64, _>(StandardNormal));
        params.set_flat(&v)?;
    }
    params.radius = cfg.project_radius;

    let mut trace = TrainTrace::default();
    let mut streak = 0;
    for _ in 0..cfg.max_epochs {
        let (risk, grad) = risk_and_grad(&params, ds, cfg.alpha, 0.0)?;
        let gnorm = norm(&grad);
        if let Some(&prev) = trace.risk.last() {
            streak = if risk > prev { streak + 1 } else { 0 };
        }
        trace.risk.push(risk);
        trace.grad_norm.push(gnorm);
        if !risk.is_finite() || (streak >= DIVERGENCE_STREAK && cfg.alpha.as_f64() <= 1.0) {
            return Err(Error::Diverged(format!(
                "risk rose for {streak} consecutive epochs (now {risk}); try a learning rate below {}",
                cfg.learning_rate
            )));
        }
        if gnorm < cfg.tol {
            trace.converged = true;
            break;
        }
        let mut v = params.flat();
        v.iter_mut().zip(&grad).for_each(|(t, g)| *t -= cfg.learning_rate * g);
        params.set_flat(&v)?;
        if let Some(r) = cfg.project_radius {
            params.project(r);
        }
    }
    Ok((params, trace))
}

/// `(1/d) Σ (a_i − b_i)²` over θ and, when both have one, the bias.
pub fn param_mse(a: &LinearParams, b: &LinearParams) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    let (va, vb) = match (a.bias, b.bias) {
        (Some(_), Some(_)) => (a.flat(), b.flat()),
        _ => (a.theta.clone(), b.theta.clone()),
    };
    if va.is_empty() {
        return Err(Error::Empty("parameter vector"));
    }
    Ok(va.iter().zip(&vb).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / va.len() as f64)
}

/// Anything that assigns a ±1 label to a feature vector.
pub trait Classifier {
    fn classify(&self, x: &[f64]) -> Result<i8>;
}

impl Classifier for LinearParams {
    /// `sign(⟨x, θ⟩ + b)` with `sign(0) = +1`.
    fn classify(&self, x: &[f64]) -> Result<i8> {
        Ok(if self.score(x)? >= 0.0 { 1 } else { -1 })
    }
}

/// Confusion-matrix summary with `+1` as the positive class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// `TP/(TP+FN)`; `None` without positive examples.
    pub sensitivity: Option<f64>,
    /// `TN/(TN+FP)`; `None` without negative examples.
    pub specificity: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

pub fn metrics<C: Classifier + ?Sized>(clf: &C, ds: &Dataset) -> Result<Metrics> {
    if ds.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for i in 0..ds.len() {
        match (clf.classify(ds.row(i))?, ds.label(i)) {
            (1, 1) => tp += 1,
            (1, _) => fp += 1,
            (_, 1) => fn_ += 1,
            _ => tn += 1,
        }
    }
    let ratio = |a: usize, b: usize| (a + b > 0).then(|| a as f64 / (a + b) as f64);
    Ok(Metrics {
        accuracy: (tp + tn) as f64 / ds.len() as f64,
        sensitivity: ratio(tp, fn_),
        specificity: ratio(tn, fp),
        tp,
        fp,
        tn,
        fn_,
    })
}

fn check_bound_params(p: f64, r: f64, d: usize) -> Result<()> {
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::param("p", format!("must lie in (0, 1/2), got {p}")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::param("r", "must be positive"));
    }
    if d == 0 {
        return Err(Error::param("d", "must be at least 1"));
    }
    Ok(())
}

/// The lower-bound constant χ at `s = r√d`.
///
/// For every α ∈ [1, ∞] this is
/// `p(σ(−s)^{1−1/α}σ(s) − 1) − (1−p)(σ(s)^{1−1/α}σ(−s) − 1)`, which equals
/// `σ(s) − p` at α = 1 and `(1−2p)(1−σ'(s))` at α = ∞.
pub fn chi(p: f64, s: f64, alpha: Alpha) -> Result<f64> {
    if alpha.as_f64() < 1.0 {
        return Err(Error::param("alpha", "χ is defined for α ≥ 1"));
    }
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::param("p", format!("must lie in (0, 1/2), got {p}")));
    }
    let (sp, sn) = (sigmoid(s), sigmoid(-s));
    Ok(match alpha.finite() {
        Some(a) if (a - 1.0).abs() < crate::losses::NEAR_ONE => sp - p,
        None => (1.0 - 2.0 * p) * (1.0 - sigmoid_prime(s)),
        Some(a) => {
            let e = 1.0 - 1.0 / a;
            p * (sn.powf(e) * sp - 1.0) - (1.0 - p) * (sp.powf(e) * sn - 1.0)
        }
    })
}

/// `e^{s/α} ln(e^s + 1) < (1/p − 1) ln(e^{−s} + 1)` for every α ∈ [1, ∞].
/// The left side is largest at α = 1, so that case decides.
pub fn small_radius_condition(p: f64, s: f64) -> bool {
    s.exp() * s.exp().ln_1p() < (1.0 / p - 1.0) * (-s).exp().ln_1p()
}

/// `(1−2p)(1 − σ'(s)) < ρ` where `ρ = ‖E X⁺‖ / E‖X⁺‖`.
pub fn mean_ratio_condition(p: f64, s: f64, rho: f64) -> bool {
    (1.0 - 2.0 * p) * (1.0 - sigmoid_prime(s)) < rho
}

/// Upper-bound term `√d·r·|l''(z*)| + d·r²·|l'''(z*)|`.
pub fn taylor_bound(alpha: Alpha, r: f64, d: usize, z_star: f64) -> f64 {
    let d = d as f64;
    d.sqrt() * r * loss_d2(alpha, z_star).abs() + d * r * r * loss_d3(alpha, z_star).abs()
}

/// The margin maximising `|l''|` among `margins`.
pub fn z_star(alpha: Alpha, margins: &[f64]) -> Option<f64> {
    margins
        .iter()
        .copied()
        .max_by(|a, b| loss_d2(alpha, *a).abs().total_cmp(&loss_d2(alpha, *b).abs()))
}

/// Gradient-bound report for given `(p, r, d, α)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub p: f64,
    pub r: f64,
    pub d: usize,
    pub alpha: Alpha,
    /// `r√d`.
    pub s: f64,
    pub chi: f64,
    pub chi_alpha_one: f64,
    pub chi_alpha_inf: f64,
    /// Upper-bound terms for α = 1 and α = ∞ at the supplied `z*` values.
    pub upper_alpha_one: Option<f64>,
    pub upper_alpha_inf: Option<f64>,
    /// Whether `upper_alpha_one / upper_alpha_inf > 1 − 2p`.
    pub ratio_exceeds_one_minus_2p: Option<bool>,
    /// Mean-ratio assumption; `None` when `ρ` was not supplied.
    pub mean_ratio_ok: Option<bool>,
    pub small_radius_ok: bool,
}

pub fn theorem23_bounds(
    p: f64,
    r: f64,
    d: usize,
    alpha: Alpha,
    z_stars: Option<(f64, f64)>,
    rho: Option<f64>,
) -> Result<BoundReport> {
    check_bound_params(p, r, d)?;
    let s = r * (d as f64).sqrt();
    let uppers = z_stars.map(|(z1, zinf)| {
        (
            taylor_bound(Alpha::ONE, r, d, z1),
            taylor_bound(Alpha::INFINITY, r, d, zinf),
        )
    });
    Ok(BoundReport {
        p,
        r,
        d,
        alpha,
        s,
        chi: chi(p, s, alpha)?,
        chi_alpha_one: chi(p, s, Alpha::ONE)?,
        chi_alpha_inf: chi(p, s, Alpha::INFINITY)?,
        upper_alpha_one: uppers.map(|u| u.0),
        upper_alpha_inf: uppers.map(|u| u.1),
        ratio_exceeds_one_minus_2p: uppers.map(|(u1, ui)| u1 / ui > 1.0 - 2.0 * p),
        mean_ratio_ok: rho.map(|rho| mean_ratio_condition(p, s, rho)),
        small_radius_ok: small_radius_condition(p, s),
    })
}

/// Sample-level check of the upper-bound premises and conclusion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundCheck {
    /// `⟨yx, θ̂^∞⟩ ≥ ⟨yx, θ̂^1⟩ > ln(2+√3)` on every sample.
    pub ordering_holds: bool,
    /// `⟨yx, θ*⟩ ≥ ⟨yx, θ̂^∞⟩` on every sample.
    pub dominance_holds: bool,
    pub z_star_one: f64,
    pub z_star_inf: f64,
    /// `‖∇R^p_α(θ*)‖_∞ / C_α` for α = 1 and α = ∞.
    pub scaled_grad_one: f64,
    pub scaled_grad_inf: f64,
    pub bound_one: f64,
    pub bound_inf: f64,
}

pub fn upper_bound_check(
    ds: &Dataset,
    p: f64,
    r: f64,
    theta_star: &LinearParams,
    theta_one: &LinearParams,
    theta_inf: &LinearParams,
) -> Result<UpperBoundCheck> {
    check_bound_params(p, r, ds.n_features())?;
    let d = ds.n_features();
    let (zs, z1, zi) = (
        margins(theta_star, ds)?,
        margins(theta_one, ds)?,
        margins(theta_inf, ds)?,
    );
    let floor = (2.0 + 3f64.sqrt()).ln();
    let ordering_holds = z1.iter().zip(&zi).all(|(a, b)| b >= a && *a > floor);
    let dominance_holds = zs.iter().zip(&zi).all(|(a, b)| a >= b);
    let z_star_one = z_star(Alpha::ONE, &z1).ok_or(Error::Empty("dataset"))?;
    let z_star_inf = z_star(Alpha::INFINITY, &zi).ok_or(Error::Empty("dataset"))?;
    let sup = |g: Vec<f64>| g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let g1 = sup(noisy_alpha_risk_grad(theta_star, ds, Alpha::ONE, p)?);
    let gi = sup(noisy_alpha_risk_grad(theta_star, ds, Alpha::INFINITY, p)?);
    Ok(UpperBoundCheck {
        ordering_holds,
        dominance_holds,
        z_star_one,
        z_star_inf,
        scaled_grad_one: g1 / 2.0,
        scaled_grad_inf: gi / (2.0 - 4.0 * p),
        bound_one: taylor_bound(Alpha::ONE, r, d, z_star_one),
        bound_inf: taylor_bound(Alpha::INFINITY, r, d, z_star_inf),
    })
}

/// Settings for [`lowerbound_verify`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundSetup {
    /// Class-conditional of `Y = +1`; the `Y = −1` class is its mirror image.
    pub mean: Vec<f64>,
    pub sigma: f64,
    pub p: f64,
    pub r: f64,
    pub alpha: Alpha,
    /// Monte-Carlo sample size per gradient estimate.
    pub samples: usize,
    /// Number of random parameter vectors in the ball (θ = 0 is always added).
    pub points: usize,
    pub seed: u64,
}

impl LowerBoundSetup {
    pub fn gmm(&self) -> Result<GmmSpec> {
        GmmSpec::new(
            self.mean.clone(),
            self.mean.iter().map(|m| -m).collect(),
            self.sigma,
            0.5,
        )
    }
}

/// One gradient-norm estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientProbe {
    pub theta: Vec<f64>,
    pub grad_norm: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum LowerBoundOutcome {
    /// One of the radius assumptions fails; nothing was checked.
    AssumptionsUnmet { mean_ratio_ok: bool, small_radius_ok: bool },
    Checked,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub outcome: LowerBoundOutcome,
    /// Estimated `‖E X⁺‖ / E‖X⁺‖`.
    pub rho: f64,
    pub mean_norm: f64,
    pub expected_norm: f64,
    pub chi: f64,
    /// `‖E X⁺‖ − χ E‖X⁺‖`.
    pub stated_bound: f64,
    /// `(1−2p)‖E X⁺‖ − χ E‖X⁺‖`, the bound the algebra supports.
    pub corrected_bound: f64,
    /// Exact gradient norm at θ = 0, `(1−2p)2^{1/α}/4 · ‖E X⁺‖`.
    pub origin_exact: f64,
    pub probes: Vec<GradientProbe>,
    /// Every probe is at least `stated_bound − 3·SE`.
    pub stated_holds: bool,
    pub corrected_holds: bool,
}

impl LowerBoundReport {
    pub fn passed(&self) -> bool {
        matches!(self.outcome, LowerBoundOutcome::Checked) && self.stated_holds
    }
}

/// Monte-Carlo check of the uniform lower bound on the noisy-risk gradient
/// for a mirrored Gaussian pair.
///
/// By the mirror symmetry `YX` has the law of `X⁺`, so the gradient is
/// `E[((1−p)l'(⟨V,θ⟩) − p·l'(−⟨V,θ⟩)) V]` with `V ~ N(mean, σ²I)`. The
/// standard error of its norm uses the delta method.
pub fn lowerbound_verify(setup: &LowerBoundSetup) -> Result<LowerBoundReport> {
    let gmm = setup.gmm()?;
    let d = gmm.dim();
    check_bound_params(setup.p, setup.r, d)?;
    if setup.samples < 2 {
        return Err(Error::param("samples", "need at least 2"));
    }
    let (p, alpha) = (setup.p, setup.alpha);
    let s = setup.r * (d as f64).sqrt();
    let chi = chi(p, s, alpha)?;
    let mut rng = seeded_rng(setup.seed);

    let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        gmm.mu_pos
            .iter()
            .map(|m| {
                let e: f64 = StandardNormal.sample(rng);
                m + setup.sigma * e
            })
            .collect()
    };
    let expected_norm =
        (0..setup.samples).map(|_| norm(&draw(&mut rng))).sum::<f64>() / setup.samples as f64;
    let mean_norm = norm(&gmm.mu_pos);
    let rho = mean_norm / expected_norm;
    let stated_bound = mean_norm - chi * expected_norm;
    let corrected_bound = (1.0 - 2.0 * p) * mean_norm - chi * expected_norm;
    let origin_exact = (1.0 - 2.0 * p) * 2f64.powf(alpha.recip()) / 4.0 * mean_norm;

    let mean_ratio_ok = mean_ratio_condition(p, s, rho);
    let small_radius_ok = small_radius_condition(p, s);
    let mut report = LowerBoundReport {
        outcome: LowerBoundOutcome::Checked,
        rho,
        mean_norm,
        expected_norm,
        chi,
        stated_bound,
        corrected_bound,
        origin_exact,
        probes: Vec::new(),
        stated_holds: false,
        corrected_holds: false,
    };
    if !(mean_ratio_ok && small_radius_ok) {
        report.outcome = LowerBoundOutcome::AssumptionsUnmet {
            mean_ratio_ok,
            small_radius_ok,
        };
        return Ok(report);
    }

    let mut thetas = vec![vec![0.0; d]];
    for _ in 0..setup.points {
        let dir: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let radius = setup.r * rng.random::<f64>().powf(1.0 / d as f64);
        let n = norm(&dir);
        thetas.push(dir.iter().map(|v| v * radius / n).collect());
    }
    for theta in thetas {
        let n = setup.samples as f64;
        let mut sum = vec![0.0; d];
        let mut outer = vec![0.0; d * d];
        for _ in 0..setup.samples {
            let v = draw(&mut rng);
            let z = dot(&v, &theta);
            let c = (1.0 - p) * loss_d1(alpha, z) - p * loss_d1(alpha, -z);
            let g: Vec<f64> = v.iter().map(|x| c * x).collect();
            for j in 0..d {
                sum[j] += g[j];
                for k in 0..d {
                    outer[j * d + k] += g[j] * g[k];
                }
            }
        }
        let mean: Vec<f64> = sum.iter().map(|v| v / n).collect();
        let gnorm = norm(&mean);
        // Var(ĝ) = Σ/n; Var(‖ĝ‖) ≈ uᵀΣu/n with u = ĝ/‖ĝ‖.
        let mut quad = 0.0;
        for j in 0..d {
            for k in 0..d {
                let cov = (outer[j * d + k] - n * mean[j] * mean[k]) / (n - 1.0);
                quad += mean[j] * mean[k] * cov;
            }
        }
        let se = if gnorm > 0.0 {
            (quad.max(0.0) / n).sqrt() / gnorm
        } else {
            0.0
        };
        report.probes.push(GradientProbe {
            theta,
            grad_norm: gnorm,
            std_error: se,
        });
    }
    report.stated_holds = report
        .probes
        .iter()
        .all(|g| g.grad_norm >= stated_bound - 3.0 * g.std_error);
    report.corrected_holds = report
        .probes
        .iter()
        .all(|g| g.grad_norm >= corrected_bound - 3.0 * g.std_error);
    Ok(report)
}
