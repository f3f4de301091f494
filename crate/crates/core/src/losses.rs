//! The sigmoid and the margin-based α-loss family with its first three
//! derivatives.
//!
//! For α ∈ (0, 1) ∪ (1, ∞) the loss is `α/(α−1) · (1 − σ(z)^{1−1/α})`. The
//! special values α = 1/2, α = 1 and α = ∞ are dispatched to their closed
//! forms (exponential, logistic and sigmoid loss respectively) so they are
//! exact rather than a limit of the generic expression.
//!
//! All evaluators are pure, never panic, and propagate NaN inputs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Within this distance of 1 the generic formula is replaced by the α = 1
/// branch; the generic form is 0/0 there and the continuity error is O(|α−1|).
pub const NEAR_ONE: f64 = 1e-6;

/// Magnitude cap on `σ'(z)σ(z)^{−1/α}` (and therefore on `|loss_d1|`).
pub const WEIGHT_CAP: f64 = 1e300;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Repr {
    Finite(f64),
    Infinite,
}

/// The α hyperparameter, α ∈ (0, ∞].
///
/// Infinity is an explicit variant, never a large float, so the generic
/// formula can not be reached with it by accident.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Alpha(Repr);

/// Which closed form an [`Alpha`] evaluates with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// α = 1/2: exponential loss.
    Exponential,
    /// α = 1 (or within [`NEAR_ONE`] of it): logistic loss.
    Logistic,
    /// α = ∞: sigmoid loss.
    Sigmoid,
    /// Any other α.
    Generic,
}

impl Alpha {
    pub const HALF: Alpha = Alpha(Repr::Finite(0.5));
    pub const ONE: Alpha = Alpha(Repr::Finite(1.0));
    pub const INFINITY: Alpha = Alpha(Repr::Infinite);

    /// A finite α. `f64::INFINITY` is accepted and mapped to [`Alpha::INFINITY`].
    pub fn new(value: f64) -> Result<Self> {
        if value == f64::INFINITY {
            return Ok(Alpha::INFINITY);
        }
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::param("alpha", format!("must lie in (0, inf], got {value}")));
        }
        Ok(Alpha(Repr::Finite(value)))
    }

    pub fn is_infinite(self) -> bool {
        matches!(self.0, Repr::Infinite)
    }

    /// The finite value, or `None` for α = ∞.
    pub fn finite(self) -> Option<f64> {
        match self.0 {
            Repr::Finite(a) => Some(a),
            Repr::Infinite => None,
        }
    }

    /// α as an `f64`, with ∞ mapped to `f64::INFINITY`. For display and sorting.
    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    /// 1/α, which is 0 for α = ∞.
    pub fn recip(self) -> f64 {
        match self.0 {
            Repr::Finite(a) => 1.0 / a,
            Repr::Infinite => 0.0,
        }
    }

    pub fn regime(self) -> Regime {
        match self.0 {
            Repr::Infinite => Regime::Sigmoid,
            Repr::Finite(a) if a == 0.5 => Regime::Exponential,
            Repr::Finite(a) if (a - 1.0).abs() < NEAR_ONE => Regime::Logistic,
            Repr::Finite(_) => Regime::Generic,
        }
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Repr::Finite(a) => write!(f, "{a}"),
            Repr::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Alpha {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if matches!(t.to_ascii_lowercase().as_str(), "inf" | "infinity" | "+inf" | "∞") {
            return Ok(Alpha::INFINITY);
        }
        let v: f64 = t
            .parse()
            .map_err(|_| Error::param("alpha", format!("cannot parse `{s}`")))?;
        Alpha::new(v)
    }
}

impl Serialize for Alpha {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            Repr::Finite(a) => s.serialize_f64(a),
            Repr::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Alpha {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Num(v) => Alpha::new(v),
            Raw::Text(t) => t.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// σ(z) = 1/(1+e^{−z}), evaluated without overflow for any finite z.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log σ(z).
pub fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

/// σ'(z) = σ(z)σ(−z). Even, with maximum 1/4 at the origin.
pub fn sigmoid_prime(z: f64) -> f64 {
    sigmoid(z) * sigmoid(-z)
}

/// The margin-based α-loss evaluator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaLoss {
    pub alpha: Alpha,
}

impl AlphaLoss {
    pub fn new(alpha: Alpha) -> Self {
        AlphaLoss { alpha }
    }

    pub fn value(&self, z: f64) -> f64 {
        loss(self.alpha, z)
    }

    pub fn d1(&self, z: f64) -> f64 {
        loss_d1(self.alpha, z)
    }

    pub fn d2(&self, z: f64) -> f64 {
        loss_d2(self.alpha, z)
    }

    pub fn d3(&self, z: f64) -> f64 {
        loss_d3(self.alpha, z)
    }
}

/// l̃^α(z).
pub fn loss(alpha: Alpha, z: f64) -> f64 {
    match alpha.regime() {
        Regime::Exponential => (-z).exp(),
        Regime::Logistic => -log_sigmoid(z),
        Regime::Sigmoid => sigmoid(-z),
        Regime::Generic => {
            let a = alpha.finite().unwrap_or(f64::INFINITY);
            let expo = 1.0 - 1.0 / a;
            // 1 − σ^{expo} = −expm1(expo·log σ), which keeps precision as σ → 1.
            a / (a - 1.0) * -(expo * log_sigmoid(z)).exp_m1()
        }
    }
}

/// log of the boosting weight `σ'(z)σ(z)^{−1/α} = −l̃^α'(z)`.
pub fn log_weight(alpha: Alpha, z: f64) -> f64 {
    let ls = log_sigmoid(z);
    ls + log_sigmoid(-z) - alpha.recip() * ls
}

/// The boosting weight `σ'(z)σ(z)^{−1/α}`, capped at [`WEIGHT_CAP`].
pub fn weight(alpha: Alpha, z: f64) -> f64 {
    let w = match alpha.regime() {
        Regime::Exponential => (-z).exp(),
        Regime::Logistic => sigmoid(-z),
        Regime::Sigmoid => sigmoid_prime(z),
        Regime::Generic => log_weight(alpha, z).exp(),
    };
    // not `f64::min`, which would swallow NaN
    if w > WEIGHT_CAP {
        WEIGHT_CAP
    } else {
        w
    }
}

/// First derivative, `−σ'(z)σ(z)^{−1/α}`.
pub fn loss_d1(alpha: Alpha, z: f64) -> f64 {
    -weight(alpha, z)
}

/// `(l̃^α(z), l̃^α'(z))` from a single `e^{−|z|}` evaluation.
pub fn loss_and_d1(alpha: Alpha, z: f64) -> (f64, f64) {
    let t = (-z.abs()).exp();
    // log σ(z) and σ(−z), both from t
    let (ls, sn) = if z >= 0.0 {
        (-t.ln_1p(), t / (1.0 + t))
    } else {
        (z - t.ln_1p(), 1.0 / (1.0 + t))
    };
    match alpha.regime() {
        Regime::Logistic => (-ls, -sn),
        Regime::Generic => {
            let a = alpha.finite().unwrap_or(f64::INFINITY);
            // σ^{1−1/α} − 1
            let m = ((1.0 - 1.0 / a) * ls).exp_m1();
            // 1 + m cancels when σ^{1−1/α} is small
            let w = if m > -0.5 {
                sn * (1.0 + m)
            } else {
                sn * ((1.0 - 1.0 / a) * ls).exp()
            };
            let w = if w > WEIGHT_CAP { WEIGHT_CAP } else { w };
            (a / (a - 1.0) * -m, -w)
        }
        _ => (loss(alpha, z), loss_d1(alpha, z)),
    }
}

/// Second derivative.
///
/// Written as `σ(−z)σ(z)^{1−1/α}(σ(z) − (1−1/α)σ(−z))`, which changes sign at
/// `z = ln((α−1)/α)` for α > 1 and reduces to `e^z(e^z−1)/(e^z+1)^3` at α = ∞.
pub fn loss_d2(alpha: Alpha, z: f64) -> f64 {
    let (s, t) = (sigmoid(z), sigmoid(-z));
    match alpha.regime() {
        Regime::Exponential => (-z).exp(),
        Regime::Logistic => s * t,
        Regime::Sigmoid => s * t * (s - t),
        Regime::Generic => {
            let a = 1.0 - alpha.recip();
            t * (a * log_sigmoid(z)).exp() * (s - a * t)
        }
    }
}

/// Third derivative, `σ(−z)σ(z)^{a}((1+a)σ(z)σ(−z) − (σ(z) − aσ(−z))²)` with
/// `a = 1 − 1/α`.
pub fn loss_d3(alpha: Alpha, z: f64) -> f64 {
    let (s, t) = (sigmoid(z), sigmoid(-z));
    let a = 1.0 - alpha.recip();
    let core = (1.0 + a) * s * t - (s - a * t).powi(2);
    match alpha.regime() {
        Regime::Exponential => -(-z).exp(),
        Regime::Logistic => s * t * (t - s),
        Regime::Sigmoid => s * t * core,
        Regime::Generic => t * (a * log_sigmoid(z)).exp() * core,
    }
}
