use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::SpatialBox;

/// One-dimensional building block of test functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Profile {
    Bump(BumpFunction),
    /// Power-basis polynomial, lowest degree first. Not compactly supported;
    /// used for local calculus checks and monomial-type functions.
    Polynomial {
        coeffs: Vec<f64>,
    },
}

impl Profile {
    pub fn bump(center: f64, radius: f64) -> Result<Self> {
        Ok(Profile::Bump(BumpFunction::new(center, radius)?))
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        Profile::Polynomial { coeffs }
    }

    /// `(f, f', f'')` at `t`.
    #[inline]
    pub fn jet(&self, t: f64) -> (f64, f64, f64) {
        match self {
            Profile::Bump(b) => b.jet(t),
            Profile::Polynomial { coeffs } => {
                let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
                for &c in coeffs.iter().rev() {
                    d2 = d2 * t + 2.0 * d1;
                    d1 = d1 * t + v;
                    v = v * t + c;
                }
                (v, d1, d2)
            }
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.jet(t).0
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            Profile::Bump(b) => Some(b.support()),
            Profile::Polynomial { .. } => None,
        }
    }

    pub fn sup_abs(&self) -> Option<f64> {
        match self {
            Profile::Bump(_) => Some(BumpFunction::PEAK),
            Profile::Polynomial { coeffs } => coeffs.iter().all(|c| *c == 0.0).then_some(0.0),
        }
    }
}

/// `t ↦ exp(-1/(1-u²))` with `u = (t - center)/radius` on `|u| < 1`, zero outside.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpFunction {
    pub center: f64,
    pub radius: f64,
}

impl BumpFunction {
    /// Maximum value, attained at the center.
    pub const PEAK: f64 = 0.367_879_441_171_442_33;

    pub fn new(center: f64, radius: f64) -> Result<Self> {
        if !center.is_finite() || !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Domain(format!(
                "bump needs finite center and positive radius, got ({center}, {radius})"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.radius, self.center + self.radius)
    }

    #[inline]
    pub fn jet(&self, t: f64) -> (f64, f64, f64) {
        let u = (t - self.center) / self.radius;
        let q = 1.0 - u * u;
        if q <= 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let psi = (-1.0 / q).exp();
        if psi == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let q2 = q * q;
        let g1 = -2.0 * u / q2;
        let g2 = -2.0 / q2 - 8.0 * u * u / (q2 * q);
        let r = self.radius;
        (psi, psi * g1 / r, psi * (g1 * g1 + g2) / (r * r))
    }

    pub fn value(&self, t: f64) -> f64 {
        self.jet(t).0
    }
}

/// Value, gradient and Laplacian of a function on ℝᵈ.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SpatialJet {
    pub value: f64,
    pub grad: [f64; 3],
    pub laplacian: f64,
}

/// Weighted tensor product `w · Π_k p_k(x_k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialTest {
    pub weight: f64,
    pub factors: Vec<Profile>,
}

impl SpatialTest {
    pub fn new(weight: f64, factors: Vec<Profile>) -> Result<Self> {
        if factors.is_empty() || factors.len() > 3 {
            return Err(Error::Domain(format!("spatial test needs 1..=3 factors, got {}", factors.len())));
        }
        Ok(Self { weight, factors })
    }

    /// Product of bumps with common radius centered at `center`.
    pub fn bump(weight: f64, center: &[f64], radius: f64) -> Result<Self> {
        let factors = center.iter().map(|&c| Profile::bump(c, radius)).collect::<Result<Vec<_>>>()?;
        Self::new(weight, factors)
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    #[inline]
    pub fn jet(&self, x: &[f64]) -> SpatialJet {
        let d = self.factors.len();
        let mut v = [0.0; 3];
        let mut d1 = [0.0; 3];
        let mut d2 = [0.0; 3];
        for k in 0..d {
            let (a, b, c) = self.factors[k].jet(x[k]);
            v[k] = a;
            d1[k] = b;
            d2[k] = c;
        }
        let mut out = SpatialJet::default();
        let all: f64 = v[..d].iter().product();
        out.value = self.weight * all;
        for k in 0..d {
            let others: f64 = (0..d).filter(|&j| j != k).map(|j| v[j]).product();
            out.grad[k] = self.weight * d1[k] * others;
            out.laplacian += self.weight * d2[k] * others;
        }
        out
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.weight * self.factors.iter().zip(x).map(|(p, &t)| p.value(t)).product::<f64>()
    }

    pub fn support(&self) -> Option<SpatialBox> {
        let mut lo = Vec::with_capacity(self.dim());
        let mut hi = Vec::with_capacity(self.dim());
        for p in &self.factors {
            let (a, b) = p.support()?;
            lo.push(a);
            hi.push(b);
        }
        SpatialBox::new(lo, hi).ok()
    }

    pub fn sup_abs(&self) -> Option<f64> {
        let mut m = self.weight.abs();
        for p in &self.factors {
            m *= p.sup_abs()?;
        }
        Some(m)
    }
}

/// Smooth vector field on ℝᵈ, one tensor-product component per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorField {
    pub components: Vec<SpatialTest>,
}

impl VectorField {
    pub fn new(components: Vec<SpatialTest>) -> Result<Self> {
        let d = components.len();
        if d == 0 || d > 3 || components.iter().any(|c| c.dim() != d) {
            return Err(Error::Domain("vector field needs d components on ℝᵈ, 1 ≤ d ≤ 3".into()));
        }
        Ok(Self { components })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.value(x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd1(f: impl Fn(f64) -> f64, t: f64, h: f64) -> f64 {
        (f(t + h) - f(t - h)) / (2.0 * h)
    }

    #[test]
    fn bump_support_and_peak() {
        let b = BumpFunction::new(0.5, 0.25).unwrap();
        assert_eq!(b.value(0.25), 0.0);
        assert_eq!(b.value(0.75), 0.0);
        assert_eq!(b.value(0.0), 0.0);
        assert!((b.value(0.5) - BumpFunction::PEAK).abs() < 1e-16);
        assert!(BumpFunction::new(0.0, 0.0).is_err());
    }

    #[test]
    fn bump_derivatives_match_differences() {
        let b = BumpFunction::new(0.3, 0.7).unwrap();
        for i in 1..40 {
            let t = -0.4 + 1.4 * i as f64 / 40.0;
            let (_, d1, d2) = b.jet(t);
            let h = 1e-5;
            assert!((d1 - fd1(|s| b.value(s), t, h)).abs() < 1e-7, "t={t}");
            let e1 = fd1(|s| b.jet(s).1, t, h);
            assert!((d2 - e1).abs() < 1e-6 * (1.0 + d2.abs()), "t={t}");
            // second order convergence: halving h divides the error by ~4
            let err = |h: f64| ((b.value(t + h) - 2.0 * b.value(t) + b.value(t - h)) / (h * h) - d2).abs();
            let (a, c) = (err(2e-3), err(1e-3));
            if ((t - 0.3) / 0.7).abs() < 0.6 && a > 1e-8 {
                assert!(a / c > 3.0 && a / c < 5.0, "t={t}: {a} {c}");
            }
        }
    }

    #[test]
    fn polynomial_jet() {
        let p = Profile::polynomial(vec![1.0, -2.0, 0.0, 3.0]);
        let (v, d1, d2) = p.jet(2.0);
        assert_eq!(v, 1.0 - 4.0 + 24.0);
        assert_eq!(d1, -2.0 + 36.0);
        assert_eq!(d2, 36.0);
    }

    #[test]
    fn spatial_jet_matches_differences() {
        let f = SpatialTest::new(
            1.5,
            vec![Profile::bump(0.4, 0.5).unwrap(), Profile::polynomial(vec![0.5, 1.0, -1.0])],
        )
        .unwrap();
        let x = [0.55, 0.3];
        let j = f.jet(&x);
        let h = 1e-5;
        for k in 0..2 {
            let mut p = x;
            let mut m = x;
            p[k] += h;
            m[k] -= h;
            assert!((j.grad[k] - (f.value(&p) - f.value(&m)) / (2.0 * h)).abs() < 1e-8);
        }
        let h = 1e-3;
        let lap: f64 = (0..2)
            .map(|k| {
                let mut p = x;
                let mut m = x;
                p[k] += h;
                m[k] -= h;
                (f.value(&p) - 2.0 * f.value(&x) + f.value(&m)) / (h * h)
            })
            .sum();
        assert!((j.laplacian - lap).abs() < 1e-5);
        assert_eq!(f.support(), None);
    }

    #[test]
    fn json_round_trip() {
        let f = SpatialTest::bump(2.0, &[0.1, 0.2], 0.3).unwrap();
        let text = serde_json::to_string(&f).unwrap();
        assert!(text.contains("\"type\":\"bump\""));
        let back: SpatialTest = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
    }
}
