use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mass coefficient `c(s) ≥ 0` of the intrinsic form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MassCoefficient {
    One,
    Linear,
    Quadratic,
    /// `a1 s + a2 s² + a3 s³`.
    Cubic {
        a1: f64,
        a2: f64,
        a3: f64,
    },
    /// `e^{rate·s} Σ_k coeffs[k] s^k` with nonnegative coefficients.
    Custom {
        coeffs: Vec<f64>,
        rate: f64,
    },
}

impl MassCoefficient {
    pub fn cubic(a1: f64, a2: f64, a3: f64) -> Result<Self> {
        let a = [a1, a2, a3];
        if a.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) || a.iter().all(|v| *v == 0.0) {
            return Err(Error::Domain(format!(
                "cubic coefficients must be nonnegative and not all zero, got {a:?}"
            )));
        }
        Ok(MassCoefficient::Cubic { a1, a2, a3 })
    }

    pub fn custom(coeffs: Vec<f64>, rate: f64) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) || !rate.is_finite() {
            return Err(Error::Domain(
                "custom coefficient needs finite nonnegative polynomial coefficients".into(),
            ));
        }
        Ok(MassCoefficient::Custom { coeffs, rate })
    }

    /// The four named choices used throughout the verification grid.
    pub fn named() -> [MassCoefficient; 4] {
        [
            MassCoefficient::One,
            MassCoefficient::Linear,
            MassCoefficient::Quadratic,
            MassCoefficient::Cubic { a1: 1.0, a2: 0.0, a3: 1.0 },
        ]
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            MassCoefficient::One => 1.0,
            MassCoefficient::Linear => s,
            MassCoefficient::Quadratic => s * s,
            MassCoefficient::Cubic { a1, a2, a3 } => s * (a1 + s * (a2 + s * a3)),
            MassCoefficient::Custom { coeffs, rate } => coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c) * (rate * s).exp(),
        }
    }

    /// Power-basis coefficients when `c` is a polynomial.
    pub fn polynomial(&self) -> Option<Vec<f64>> {
        match self {
            MassCoefficient::One => Some(vec![1.0]),
            MassCoefficient::Linear => Some(vec![0.0, 1.0]),
            MassCoefficient::Quadratic => Some(vec![0.0, 0.0, 1.0]),
            MassCoefficient::Cubic { a1, a2, a3 } => Some(vec![0.0, *a1, *a2, *a3]),
            MassCoefficient::Custom { coeffs, rate } => (*rate == 0.0).then(|| coeffs.clone()),
        }
    }

    /// Whether `∫₀^∞ c(s) e^{-s} ds < ∞`.
    pub fn integrable_exp(&self) -> bool {
        match self {
            MassCoefficient::Custom { coeffs, rate } => *rate < 1.0 || coeffs.iter().all(|c| *c == 0.0),
            _ => true,
        }
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for MassCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MassCoefficient::One => write!(f, "1"),
            MassCoefficient::Linear => write!(f, "s"),
            MassCoefficient::Quadratic => write!(f, "s^2"),
            MassCoefficient::Cubic { a1, a2, a3 } => {
                let parts: Vec<String> = [(a1, "s"), (a2, "s^2"), (a3, "s^3")]
                    .iter()
                    .filter(|(a, _)| **a != 0.0)
                    .map(|(a, m)| if **a == 1.0 { m.to_string() } else { format!("{a}{m}") })
                    .collect();
                write!(f, "{}", parts.join("+"))
            }
            MassCoefficient::Custom { coeffs, rate } => write!(f, "custom:{coeffs:?}:exp({rate}s)"),
        }
    }
}

impl FromStr for MassCoefficient {
    type Err = Error;

    /// Accepts `one`, `s`, `s2`, `cubic:a1,a2,a3`.
    fn from_str(text: &str) -> Result<Self> {
        match text.trim() {
            "one" | "1" => Ok(MassCoefficient::One),
            "s" => Ok(MassCoefficient::Linear),
            "s2" | "s^2" => Ok(MassCoefficient::Quadratic),
            other => {
                let rest = other
                    .strip_prefix("cubic:")
                    .ok_or_else(|| Error::Parse(format!("unknown coefficient `{other}`")))?;
                let a = rest
                    .split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("`{v}`: {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                if a.len() != 3 {
                    return Err(Error::Parse(format!("cubic needs three coefficients, got {}", a.len())));
                }
                MassCoefficient::cubic(a[0], a[1], a[2])
            }
        }
    }
}
