use serde::{Deserialize, Serialize};

use super::profile::{Profile, SpatialJet, SpatialTest};
use crate::error::{Error, Result};
use crate::measure::SpatialBox;

/// Derivatives of `φ(x, s)` needed by gradients and generators.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HatJet {
    pub value: f64,
    pub grad_x: [f64; 3],
    pub laplacian_x: f64,
    pub ds: f64,
    pub dss: f64,
}

impl HatJet {
    pub fn is_zero(&self) -> bool {
        self.value == 0.0 && self.grad_x == [0.0; 3] && self.laplacian_x == 0.0 && self.ds == 0.0 && self.dss == 0.0
    }
}

/// One separable term `f(x) · h(s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HatTerm {
    pub space: SpatialTest,
    pub mass: Profile,
}

impl HatTerm {
    #[inline]
    pub fn jet(&self, x: &[f64], s: f64) -> HatJet {
        let (h, h1, h2) = self.mass.jet(s);
        if h == 0.0 && h1 == 0.0 && h2 == 0.0 {
            return HatJet::default();
        }
        let SpatialJet { value, grad, laplacian } = self.space.jet(x);
        HatJet {
            value: value * h,
            grad_x: [grad[0] * h, grad[1] * h, grad[2] * h],
            laplacian_x: laplacian * h,
            ds: value * h1,
            dss: value * h2,
        }
    }
}

/// Smooth function on `X × (0, ∞)` given as a finite sum of separable terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HatTestFunction {
    pub terms: Vec<HatTerm>,
}

impl HatTestFunction {
    /// Admissible test function: every factor compactly supported, mass
    /// supports inside `(0, ∞)`.
    pub fn new(terms: Vec<HatTerm>) -> Result<Self> {
        let f = Self::local(terms)?;
        for t in &f.terms {
            if t.space.support().is_none() {
                return Err(Error::Domain("spatial factor is not compactly supported".into()));
            }
            match t.mass.support() {
                Some((a, _)) if a > 0.0 => {}
                Some((a, _)) => return Err(Error::Domain(format!("mass support must start above 0, got {a}"))),
                None => return Err(Error::Domain("mass factor is not compactly supported".into())),
            }
        }
        Ok(f)
    }

    /// Function without support checks, for local calculus only.
    pub fn local(terms: Vec<HatTerm>) -> Result<Self> {
        let d = terms.first().map(|t| t.space.dim()).unwrap_or(1);
        if terms.iter().any(|t| t.space.dim() != d) {
            return Err(Error::Domain("terms of different spatial dimension".into()));
        }
        Ok(Self { terms })
    }

    /// Single term: product of bumps of radius `rx` around `center` times a
    /// mass bump on `[a, b]`.
    pub fn bump(weight: f64, center: &[f64], rx: f64, a: f64, b: f64) -> Result<Self> {
        if !(0.0 < a && a < b) {
            return Err(Error::Domain(format!("mass support [{a}, {b}] must satisfy 0 < a < b")));
        }
        Self::new(vec![HatTerm {
            space: SpatialTest::bump(weight, center, rx)?,
            mass: Profile::bump(0.5 * (a + b), 0.5 * (b - a))?,
        }])
    }

    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn dim(&self) -> Option<usize> {
        self.terms.first().map(|t| t.space.dim())
    }

    #[inline]
    pub fn jet(&self, x: &[f64], s: f64) -> HatJet {
        let mut out = HatJet::default();
        for t in &self.terms {
            let j = t.jet(x, s);
            out.value += j.value;
            for k in 0..3 {
                out.grad_x[k] += j.grad_x[k];
            }
            out.laplacian_x += j.laplacian_x;
            out.ds += j.ds;
            out.dss += j.dss;
        }
        out
    }

    pub fn value(&self, x: &[f64], s: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let h = t.mass.value(s);
                if h == 0.0 {
                    0.0
                } else {
                    h * t.space.value(x)
                }
            })
            .sum()
    }

    /// Bounding box of the support in space and in mass, when compact.
    pub fn support(&self) -> Option<(SpatialBox, (f64, f64))> {
        let mut acc: Option<(SpatialBox, (f64, f64))> = None;
        for t in &self.terms {
            let sx = t.space.support()?;
            let sm = t.mass.support()?;
            acc = Some(match acc {
                None => (sx, sm),
                Some((bx, (a, b))) => (bx.union(&sx), (a.min(sm.0), b.max(sm.1))),
            });
        }
        acc
    }

    /// Every axis breakpoint of every factor, for composite quadrature.
    pub fn breakpoints(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let d = self.dim().unwrap_or(0);
        let mut xs = vec![Vec::new(); d];
        let mut ss = Vec::new();
        for t in &self.terms {
            for (k, p) in t.space.factors.iter().enumerate() {
                if let Some((a, b)) = p.support() {
                    xs[k].extend([a, b]);
                }
            }
            if let Some((a, b)) = t.mass.support() {
                ss.extend([a, b]);
            }
        }
        (xs, ss)
    }

    /// Lower bound `a` of the mass support.
    pub fn mass_floor(&self) -> Option<f64> {
        self.support().map(|(_, (a, _))| a)
    }
}
