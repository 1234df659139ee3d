use std::fmt;

use serde::{Deserialize, Serialize};

use super::coefficient::MassCoefficient;
use super::hat::{HatJet, HatTestFunction};
use super::outer::{Jet2, OuterFunction, MAX_ARITY};
use super::profile::SpatialTest;
use crate::error::{Error, Result};
use crate::measure::WeightedConfiguration;

/// Which part of the form or generator: intrinsic, extrinsic, or their sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormKind {
    Int,
    Ext,
    Full,
}

impl FormKind {
    pub const ALL: [FormKind; 3] = [FormKind::Int, FormKind::Ext, FormKind::Full];

    pub fn has_int(self) -> bool {
        matches!(self, FormKind::Int | FormKind::Full)
    }

    pub fn has_ext(self) -> bool {
        matches!(self, FormKind::Ext | FormKind::Full)
    }
}

impl fmt::Display for FormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FormKind::Int => "int",
            FormKind::Ext => "ext",
            FormKind::Full => "full",
        })
    }
}

/// Functional `F(η) = g(ℓ₁(η), …, ℓ_N(η))` of linear statistics of η.
pub trait Cylinder {
    fn outer(&self) -> &OuterFunction;

    fn arity(&self) -> usize;

    /// Writes the N linear statistics into `out[..N]`.
    fn pairings_into(&self, eta: &WeightedConfiguration, out: &mut [f64]);

    fn pairings(&self, eta: &WeightedConfiguration) -> Vec<f64> {
        let mut p = vec![0.0; self.arity()];
        self.pairings_into(eta, &mut p);
        p
    }

    fn value(&self, eta: &WeightedConfiguration) -> f64 {
        let mut p = [0.0; MAX_ARITY];
        let n = self.arity();
        self.pairings_into(eta, &mut p[..n]);
        self.outer().eval(&p[..n])
    }

    /// Intrinsic gradient at atom `index`, a vector in ℝᵈ.
    fn intrinsic_gradient(&self, eta: &WeightedConfiguration, index: usize) -> Result<Vec<f64>>;

    /// Extrinsic gradient at atom `index`.
    fn extrinsic_gradient(&self, eta: &WeightedConfiguration, index: usize) -> Result<f64>;
}

/// Pointwise first and second order quantities of a hat cylinder at one atom.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AtomDerivatives {
    /// `Σ ∂ᵢg ∇ₓφᵢ`; the intrinsic gradient is this divided by the mass.
    pub grad_x: [f64; 3],
    /// `Σ ∂ᵢg ∂ₛφᵢ`, the extrinsic gradient.
    pub ds: f64,
    pub delta_x: f64,
    pub delta_mark: f64,
}

/// Cylinder function over pairings `⟨⟨φ, η⟩⟩ = Σ φ(x, s(x))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HatCylinder {
    pub outer: OuterFunction,
    pub tests: Vec<HatTestFunction>,
}

/// `⟨⟨φ, η⟩⟩`.
pub fn pairing_hat(phi: &HatTestFunction, eta: &WeightedConfiguration) -> f64 {
    eta.atoms().iter().map(|a| phi.value(a.position(), a.mass)).sum()
}

/// `⟨f, η⟩ = Σ s(x) f(x)`.
pub fn pairing_plain(f: &SpatialTest, eta: &WeightedConfiguration) -> f64 {
    eta.atoms().iter().map(|a| a.mass * f.value(a.position())).sum()
}

fn check_index(eta: &WeightedConfiguration, index: usize) -> Result<()> {
    eta.atom(index).map(|_| ())
}

impl HatCylinder {
    pub fn new(outer: OuterFunction, tests: Vec<HatTestFunction>) -> Result<Self> {
        outer.validate(tests.len())?;
        Ok(Self { outer, tests })
    }

    /// `F = ⟨⟨φ, ·⟩⟩`.
    pub fn linear(phi: HatTestFunction) -> Self {
        Self {
            outer: OuterFunction::arg(0),
            tests: vec![phi],
        }
    }

    /// Smallest mass where any test function can be nonzero.
    pub fn mass_floor(&self) -> Option<f64> {
        self.tests.iter().filter_map(HatTestFunction::mass_floor).reduce(f64::min)
    }

    /// Evaluation on a marked configuration `γ`, summing `φ(x, s)` directly.
    pub fn value_on_marked(&self, points: &[(Vec<f64>, f64)]) -> f64 {
        let p: Vec<f64> = self
            .tests
            .iter()
            .map(|phi| points.iter().map(|(x, s)| phi.value(x, *s)).sum())
            .collect();
        self.outer.eval(&p)
    }

    fn outer_jet(&self, eta: &WeightedConfiguration) -> Jet2 {
        let mut p = [0.0; MAX_ARITY];
        let n = self.tests.len();
        self.pairings_into(eta, &mut p[..n]);
        self.outer.jet2(&p[..n])
    }

    fn derivatives_with(&self, g: &Jet2, x: &[f64], s: f64, d: usize, jets: &mut [HatJet]) -> AtomDerivatives {
        let n = self.tests.len();
        for (j, phi) in jets.iter_mut().zip(&self.tests) {
            *j = phi.jet(x, s);
        }
        let mut out = AtomDerivatives::default();
        for i in 0..n {
            let gi = g.grad[i];
            let ji = &jets[i];
            for k in 0..d {
                out.grad_x[k] += gi * ji.grad_x[k];
            }
            out.ds += gi * ji.ds;
            out.delta_x += gi * ji.laplacian_x;
            out.delta_mark += gi * (ji.dss - ji.ds);
            for j in 0..n {
                let gij = g.hess[i][j];
                if gij == 0.0 {
                    continue;
                }
                let jj = &jets[j];
                let dot: f64 = (0..d).map(|k| ji.grad_x[k] * jj.grad_x[k]).sum();
                out.delta_x += gij * dot;
                out.delta_mark += gij * ji.ds * jj.ds;
            }
        }
        out
    }

    /// Derivatives at every atom, sharing one outer-function evaluation.
    pub fn atom_derivatives(&self, eta: &WeightedConfiguration) -> Vec<AtomDerivatives> {
        let g = self.outer_jet(eta);
        let d = eta.dim();
        let mut jets = vec![HatJet::default(); self.tests.len()];
        eta.atoms()
            .iter()
            .map(|a| self.derivatives_with(&g, a.position(), a.mass, d, &mut jets))
            .collect()
    }

    fn at_atom(&self, eta: &WeightedConfiguration, index: usize) -> Result<AtomDerivatives> {
        let a = eta.atom(index)?;
        let g = self.outer_jet(eta);
        let mut jets = vec![HatJet::default(); self.tests.len()];
        Ok(self.derivatives_with(&g, a.position(), a.mass, eta.dim(), &mut jets))
    }

    /// Laplacian in the position of atom `index`, mass held fixed.
    pub fn delta_x(&self, eta: &WeightedConfiguration, index: usize) -> Result<f64> {
        Ok(self.at_atom(eta, index)?.delta_x)
    }

    /// `(d²/du² - d/du) F(η - sδₓ + uδₓ)` at `u = s` for atom `index`.
    pub fn delta_mark(&self, eta: &WeightedConfiguration, index: usize) -> Result<f64> {
        Ok(self.at_atom(eta, index)?.delta_mark)
    }

    /// `L F(η) = Σ s·[(c(s)/s²) Δ^X F + Δ^{mark} F]`, restricted to the parts in `kind`.
    pub fn generator(&self, kind: FormKind, c: &MassCoefficient, eta: &WeightedConfiguration) -> f64 {
        let derivs = self.atom_derivatives(eta);
        eta.atoms()
            .iter()
            .zip(&derivs)
            .map(|(a, d)| {
                let s = a.mass;
                let mut v = 0.0;
                if kind.has_int() {
                    v += c.eval(s) / (s * s) * d.delta_x;
                }
                if kind.has_ext() {
                    v += d.delta_mark;
                }
                s * v
            })
            .sum()
    }

    /// The same operator written over marked points: `Σ (c(s)/s) Δ^X + s Δ^{mark}`.
    pub fn generator_gamma_side(&self, kind: FormKind, c: &MassCoefficient, eta: &WeightedConfiguration) -> f64 {
        let derivs = self.atom_derivatives(eta);
        eta.to_marked_points()
            .iter()
            .zip(&derivs)
            .map(|((_, s), d)| {
                let mut v = 0.0;
                if kind.has_int() {
                    v += c.eval(*s) / s * d.delta_x;
                }
                if kind.has_ext() {
                    v += s * d.delta_mark;
                }
                v
            })
            .sum()
    }
}

impl Cylinder for HatCylinder {
    fn outer(&self) -> &OuterFunction {
        &self.outer
    }

    fn arity(&self) -> usize {
        self.tests.len()
    }

    fn pairings_into(&self, eta: &WeightedConfiguration, out: &mut [f64]) {
        for (o, phi) in out.iter_mut().zip(&self.tests) {
            *o = pairing_hat(phi, eta);
        }
    }

    fn intrinsic_gradient(&self, eta: &WeightedConfiguration, index: usize) -> Result<Vec<f64>> {
        let s = eta.atom(index)?.mass;
        let d = self.at_atom(eta, index)?;
        Ok(d.grad_x[..eta.dim()].iter().map(|v| v / s).collect())
    }

    fn extrinsic_gradient(&self, eta: &WeightedConfiguration, index: usize) -> Result<f64> {
        Ok(self.at_atom(eta, index)?.ds)
    }
}

/// Cylinder function over plain pairings `⟨f, η⟩ = Σ s(x) f(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlainCylinder {
    pub outer: OuterFunction,
    pub tests: Vec<SpatialTest>,
}

impl PlainCylinder {
    pub fn new(outer: OuterFunction, tests: Vec<SpatialTest>) -> Result<Self> {
        outer.validate(tests.len())?;
        Ok(Self { outer, tests })
    }

    /// `(Σ ∂ᵢg ∇fᵢ(x), Σ ∂ᵢg fᵢ(x))` at every atom.
    pub fn atom_gradients(&self, eta: &WeightedConfiguration) -> Vec<([f64; 3], f64)> {
        let mut p = [0.0; MAX_ARITY];
        let n = self.tests.len();
        self.pairings_into(eta, &mut p[..n]);
        let g = self.outer.jet1(&p[..n]);
        let d = eta.dim();
        eta.atoms()
            .iter()
            .map(|a| {
                let mut grad = [0.0; 3];
                let mut ext = 0.0;
                for (i, f) in self.tests.iter().enumerate() {
                    let j = f.jet(a.position());
                    for k in 0..d {
                        grad[k] += g.grad[i] * j.grad[k];
                    }
                    ext += g.grad[i] * j.value;
                }
                (grad, ext)
            })
            .collect()
    }
}

impl Cylinder for PlainCylinder {
    fn outer(&self) -> &OuterFunction {
        &self.outer
    }

    fn arity(&self) -> usize {
        self.tests.len()
    }

    fn pairings_into(&self, eta: &WeightedConfiguration, out: &mut [f64]) {
        for (o, f) in out.iter_mut().zip(&self.tests) {
            *o = pairing_plain(f, eta);
        }
    }

    fn intrinsic_gradient(&self, eta: &WeightedConfiguration, index: usize) -> Result<Vec<f64>> {
        check_index(eta, index)?;
        Ok(self.atom_gradients(eta)[index].0[..eta.dim()].to_vec())
    }

    fn extrinsic_gradient(&self, eta: &WeightedConfiguration, index: usize) -> Result<f64> {
        check_index(eta, index)?;
        Ok(self.atom_gradients(eta)[index].1)
    }
}

/// Rejects plain-class form computations whose variance may be infinite.
pub fn require_integrable(c: &MassCoefficient) -> Result<()> {
    if c.integrable_exp() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "coefficient {c} has ∫c(s)e^(-s)ds = ∞; plain-class estimators are not defined for it"
        )))
    }
}
