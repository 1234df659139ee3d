use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::testfn::{FormKind, HatJet, HatTestFunction, MassCoefficient, SpatialTest};

/// `f(x)·p(s)` with `p` a polynomial without constant term.
///
/// The polynomial is kept as a coefficient list so the extrinsic generator
/// acts on it exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonomialFunction {
    pub space: SpatialTest,
    /// `coeffs[k]` multiplies `s^k`; `coeffs[0]` is always zero.
    coeffs: Vec<f64>,
}

impl MonomialFunction {
    /// `f(x)·s^k`, `k ≥ 1`.
    pub fn new(space: SpatialTest, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain("s^0 is not square integrable near s = 0; need k ≥ 1".into()));
        }
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = 1.0;
        Ok(Self { space, coeffs })
    }

    pub fn polynomial(space: SpatialTest, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.first().is_some_and(|c| *c != 0.0) {
            return Err(Error::Domain("constant term must vanish (E1 divergence at s = 0)".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("polynomial coefficients must be finite".into()));
        }
        Ok(Self { space, coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `s(p'' - p')` in coefficient form.
    pub fn ext_action(&self) -> Self {
        let a = &self.coeffs;
        let n = a.len();
        let coeffs = (0..n)
            .map(|j| {
                let up = a.get(j + 1).map_or(0.0, |c| c * ((j + 1) * j) as f64);
                up - a[j] * j as f64
            })
            .collect();
        Self {
            space: self.space.clone(),
            coeffs,
        }
    }

    /// `(p, p', p'')` at `s`.
    fn poly_jet(&self, s: f64) -> (f64, f64, f64) {
        let (mut p, mut p1, mut p2) = (0.0, 0.0, 0.0);
        for (k, &a) in self.coeffs.iter().enumerate() {
            let kf = k as f64;
            p += a * s.powi(k as i32);
            if k >= 1 {
                p1 += a * kf * s.powi(k as i32 - 1);
            }
            if k >= 2 {
                p2 += a * kf * (kf - 1.0) * s.powi(k as i32 - 2);
            }
        }
        (p, p1, p2)
    }

    pub fn jet(&self, x: &[f64], s: f64) -> HatJet {
        let sp = self.space.jet(x);
        let (p, p1, p2) = self.poly_jet(s);
        HatJet {
            value: sp.value * p,
            grad_x: sp.grad.map(|g| g * p),
            laplacian_x: sp.laplacian * p,
            ds: sp.value * p1,
            dss: sp.value * p2,
        }
    }
}

/// Element of the one-particle space `L²(X × (0, ∞), dx s⁻¹e⁻ˢds)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OneParticleFunction {
    Hat(HatTestFunction),
    Monomial(MonomialFunction),
}

impl OneParticleFunction {
    pub fn jet(&self, x: &[f64], s: f64) -> HatJet {
        match self {
            OneParticleFunction::Hat(h) => h.jet(x, s),
            OneParticleFunction::Monomial(m) => m.jet(x, s),
        }
    }
}

/// Generator action from a precomputed jet.
#[inline]
pub(crate) fn generator_from_jet(kind: FormKind, c: &MassCoefficient, s: f64, j: &HatJet) -> f64 {
    let mut v = 0.0;
    if kind.has_int() {
        v += c.eval(s) / s * j.laplacian_x;
    }
    if kind.has_ext() {
        v += s * (j.dss - j.ds);
    }
    v
}

/// `(𝔏 u)(x, s)` with `𝔏^int = (c(s)/s)Δₓ` and `𝔏^ext = s(∂²ₛ - ∂ₛ)`.
pub fn apply_generator_pointwise(kind: FormKind, c: &MassCoefficient, u: &OneParticleFunction, x: &[f64], s: f64) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("generator needs s > 0, got {s}")));
    }
    Ok(generator_from_jet(kind, c, s, &u.jet(x, s)))
}
