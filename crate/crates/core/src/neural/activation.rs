use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActivationKind {
    Logistic,
    Tanh,
    ArcTan,
    Softplus,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 4] = [
        ActivationKind::Logistic,
        ActivationKind::Tanh,
        ActivationKind::ArcTan,
        ActivationKind::Softplus,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActivationKind::Logistic => "Logistic",
            ActivationKind::Tanh => "Tanh",
            ActivationKind::ArcTan => "ArcTan",
            ActivationKind::Softplus => "Softplus",
        }
    }

    /// Returns `(ψ(v), ψ'(v))`.
    #[inline]
    pub fn eval(self, v: f64) -> (f64, f64) {
        match self {
            ActivationKind::Logistic => {
                let y = logistic(v);
                (y, y * (1.0 - y))
            }
            ActivationKind::Tanh => {
                let y = v.tanh();
                (y, 1.0 - y * y)
            }
            ActivationKind::ArcTan => (v.atan(), 1.0 / (1.0 + v * v)),
            ActivationKind::Softplus => (softplus(v), logistic(v)),
        }
    }
}

#[inline]
fn logistic(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^v)`, equal to `v` to machine precision for large `v`.
#[inline]
fn softplus(v: f64) -> f64 {
    if v > 0.0 {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}

pub fn activation_eval(kind: ActivationKind, v: f64) -> (f64, f64) {
    kind.eval(v)
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        ActivationKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidInput(format!("unknown activation {s:?}")))
    }
}
