use super::nodes::{intersect, support_region, NodeSet};
use crate::error::{Error, Result};
use crate::mc::McPlan;
use crate::measure::{GammaSampler, WeightedConfiguration, Window};
use crate::stats::CovAccumulator;
use crate::testfn::{Cylinder, FormKind, HatCylinder, HatJet, HatTestFunction, MassCoefficient, OuterFunction, MAX_ARITY};
use crate::verdict::{EstimateReport, IdentityVerdict};

pub const DEFAULT_QUAD_DEGREE: usize = 16;
pub const DEFAULT_QUAD_PANELS: usize = 4;

/// The four estimators computed in one pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimator {
    /// `Σ s·[c⟨∇^int F, ∇^int G⟩ + ∇^ext F ∇^ext G]` over atoms.
    Atoms,
    /// Inner integral after adding one atom at `(x, s)`.
    Mecke,
    /// `(-L F)·G`.
    GeneratorFG,
    /// `(-L G)·F`.
    GeneratorGF,
}

impl Estimator {
    fn offset(self) -> usize {
        match self {
            Estimator::Atoms => 0,
            Estimator::Mecke => 1,
            Estimator::GeneratorFG => 2,
            Estimator::GeneratorGF => 3,
        }
    }
}

/// Rejects windows whose mass floor cuts into a test-function support.
pub fn check_mass_floor(window: &Window, tests: &[&HatTestFunction]) -> Result<()> {
    let eps = window.mass_floor;
    for t in tests {
        if t.dim().is_some_and(|d| d != window.dim()) {
            return Err(Error::InvalidConfiguration(format!(
                "test function of dimension {:?} on a {}-dimensional window",
                t.dim(),
                window.dim()
            )));
        }
        if let Some(a) = t.mass_floor() {
            if eps > a {
                return Err(Error::MassFloorTooLarge { eps, lower: a });
            }
        }
    }
    Ok(())
}

struct MeckePart {
    nodes: NodeSet,
    jets_f: Vec<HatJet>,
    jets_g: Vec<HatJet>,
    /// `w e^{-s} c(s)/s²` per coefficient, per node.
    int_weights: Vec<Vec<f64>>,
    /// `w e^{-s}` per node.
    ext_weights: Vec<f64>,
}

/// Per node: `Σ ∂ᵢg(p + φ) ∇ₓφᵢ` and `Σ ∂ᵢg(p + φ) ∂ₛφᵢ`.
#[inline]
fn added_atom_gradient(outer: &OuterFunction, p: &[f64], jets: &[HatJet], d: usize) -> ([f64; 3], f64) {
    let n = p.len();
    let mut args = [0.0; MAX_ARITY];
    for i in 0..n {
        args[i] = p[i] + jets[i].value;
    }
    let g = outer.jet1(&args[..n]);
    let mut gx = [0.0; 3];
    let mut gs = 0.0;
    for i in 0..n {
        for k in 0..d {
            gx[k] += g.grad[i] * jets[i].grad_x[k];
        }
        gs += g.grad[i] * jets[i].ds;
    }
    (gx, gs)
}

impl MeckePart {
    fn build(f: &HatCylinder, g: &HatCylinder, coeffs: &[MassCoefficient], window: &Window, panels: usize, degree: usize) -> Self {
        let d = window.dim();
        let fr: Vec<&HatTestFunction> = f.tests.iter().collect();
        let gr: Vec<&HatTestFunction> = g.tests.iter().collect();
        let region = intersect(support_region(&fr, window), support_region(&gr, window));
        let mut nodes = match &region {
            Some((bx, m)) => {
                let all: Vec<&HatTestFunction> = fr.iter().chain(&gr).copied().collect();
                NodeSet::build(bx, *m, &all, panels, degree)
            }
            None => NodeSet::empty(d),
        };
        let moves = |j: &HatJet| j.ds != 0.0 || j.grad_x.iter().any(|v| *v != 0.0);
        let (nf, ng) = (f.tests.len(), g.tests.len());
        let jf = nodes.jets(&f.tests);
        let jg = nodes.jets(&g.tests);
        let keep: Vec<bool> = (0..nodes.len())
            .map(|i| jf[i * nf..(i + 1) * nf].iter().any(moves) && jg[i * ng..(i + 1) * ng].iter().any(moves))
            .collect();
        nodes.retain(&keep);
        let jets_f = nodes.jets(&f.tests);
        let jets_g = nodes.jets(&g.tests);
        let ext_weights: Vec<f64> = nodes.ws.iter().zip(&nodes.ss).map(|(w, s)| w * (-s).exp()).collect();
        let int_weights = coeffs
            .iter()
            .map(|c| ext_weights.iter().zip(&nodes.ss).map(|(w, s)| w * c.eval(*s) / (s * s)).collect())
            .collect();
        Self {
            nodes,
            jets_f,
            jets_g,
            int_weights,
            ext_weights,
        }
    }

    /// Writes the intrinsic integral per coefficient into `ints` and returns
    /// the extrinsic integral; `abs` receives the same sums of absolute values.
    fn integrate(&self, f: &HatCylinder, pf: &[f64], g: &HatCylinder, pg: &[f64], ints: &mut [f64], abs: Option<&mut [f64]>) -> f64 {
        let d = self.nodes.dim;
        let (nf, ng) = (pf.len(), pg.len());
        let mut ext = 0.0;
        ints.iter_mut().for_each(|v| *v = 0.0);
        let mut scale = vec![0.0; ints.len() + 1];
        for i in 0..self.nodes.len() {
            let (fx, fs) = added_atom_gradient(&f.outer, pf, &self.jets_f[i * nf..(i + 1) * nf], d);
            let (gx, gs) = added_atom_gradient(&g.outer, pg, &self.jets_g[i * ng..(i + 1) * ng], d);
            let dot: f64 = (0..d).map(|k| fx[k] * gx[k]).sum();
            for (ci, v) in ints.iter_mut().enumerate() {
                let t = self.int_weights[ci][i] * dot;
                *v += t;
                scale[ci] += t.abs();
            }
            let t = self.ext_weights[i] * fs * gs;
            ext += t;
            scale[ints.len()] += t.abs();
        }
        if let Some(a) = abs {
            a.copy_from_slice(&scale);
        }
        ext
    }
}

/// Joint estimation of the intrinsic and extrinsic forms of `(F, G)` for
/// several coefficients in one Monte Carlo pass.
///
/// Columns are grouped in blocks of four (atoms, Mecke, `(-LF)G`, `(-LG)F`):
/// one intrinsic block per coefficient, then one extrinsic block.
pub struct FormBatch {
    f: HatCylinder,
    g: HatCylinder,
    coeffs: Vec<MassCoefficient>,
    window: Window,
    mecke: Option<MeckePart>,
}

impl FormBatch {
    pub fn new(f: HatCylinder, g: HatCylinder, coeffs: Vec<MassCoefficient>, window: Window) -> Result<Self> {
        let tests: Vec<&HatTestFunction> = f.tests.iter().chain(&g.tests).collect();
        check_mass_floor(&window, &tests)?;
        Ok(Self {
            f,
            g,
            coeffs,
            window,
            mecke: None,
        })
    }

    /// Enables the Mecke estimator with `panels` Gauss panels of `degree`
    /// nodes across the narrowest test-function support.
    ///
    /// The rule is checked against one of degree `degree + 4` on the empty
    /// configuration and on a one-atom configuration. A relative gap above
    /// `1e-6` triggers a retry with more panels (up to three times as many);
    /// if that still fails the gap is reported as an error.
    pub fn with_mecke(mut self, panels: usize, degree: usize) -> Result<Self> {
        if degree < 8 {
            return Err(Error::Domain(format!("Mecke quadrature needs degree ≥ 8, got {degree}")));
        }
        let mut last = None;
        for p in [panels, panels + panels / 2, 2 * panels, 3 * panels] {
            match self.checked_part(p, degree) {
                Ok(part) => {
                    self.mecke = Some(part);
                    return Ok(self);
                }
                Err(e) => last = Some(e),
            }
        }
        Err(last.expect("at least one attempt"))
    }

    fn checked_part(&self, panels: usize, degree: usize) -> Result<MeckePart> {
        let part = MeckePart::build(&self.f, &self.g, &self.coeffs, &self.window, panels, degree);
        let finer = MeckePart::build(&self.f, &self.g, &self.coeffs, &self.window, panels, degree + 4);
        let region = &self.window.region;
        let mid: Vec<f64> = region.lo.iter().zip(&region.hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let floor = self.f.mass_floor().unwrap_or(1.0).max(self.g.mass_floor().unwrap_or(1.0));
        let probes = [
            WeightedConfiguration::empty(self.window.clone()),
            WeightedConfiguration::empty(self.window.clone()).with_atom(&mid, floor + 0.25),
        ];
        let nc = self.coeffs.len();
        for eta in &probes {
            let pf = self.f.pairings(eta);
            let pg = self.g.pairings(eta);
            let mut lo = vec![0.0; nc + 1];
            let mut hi = vec![0.0; nc + 1];
            let mut scale = vec![0.0; nc + 1];
            lo[nc] = part.integrate(&self.f, &pf, &self.g, &pg, &mut lo[..nc], Some(&mut scale));
            hi[nc] = finer.integrate(&self.f, &pf, &self.g, &pg, &mut hi[..nc], None);
            for k in 0..=nc {
                if (lo[k] - hi[k]).abs() > 1e-6 * scale[k].max(f64::MIN_POSITIVE) {
                    return Err(Error::Quadrature {
                        low: degree,
                        high: degree + 4,
                        low_value: lo[k],
                        high_value: hi[k],
                    });
                }
            }
        }
        Ok(part)
    }

    pub fn coefficients(&self) -> &[MassCoefficient] {
        &self.coeffs
    }

    pub fn quadrature_nodes(&self) -> usize {
        self.mecke.as_ref().map_or(0, |m| m.nodes.len())
    }

    pub fn width(&self) -> usize {
        4 * (self.coeffs.len() + 1)
    }

    /// One row of per-sample values for `eta`.
    pub fn row(&self, eta: &WeightedConfiguration, out: &mut [f64]) {
        let nc = self.coeffs.len();
        let ext = 4 * nc;
        let df = self.f.atom_derivatives(eta);
        let dg = self.g.atom_derivatives(eta);
        let fv = self.f.value(eta);
        let gv = self.g.value(eta);
        let d = eta.dim();
        for ((a, u), v) in eta.atoms().iter().zip(&df).zip(&dg) {
            let s = a.mass;
            let dot: f64 = (0..d).map(|k| u.grad_x[k] * v.grad_x[k]).sum();
            for (ci, c) in self.coeffs.iter().enumerate() {
                let w = c.eval(s) / s;
                out[4 * ci] += w * dot;
                out[4 * ci + 2] -= w * u.delta_x * gv;
                out[4 * ci + 3] -= w * v.delta_x * fv;
            }
            out[ext] += s * u.ds * v.ds;
            out[ext + 2] -= s * u.delta_mark * gv;
            out[ext + 3] -= s * v.delta_mark * fv;
        }
        if let Some(m) = &self.mecke {
            let pf = self.f.pairings(eta);
            let pg = self.g.pairings(eta);
            let mut ints = vec![0.0; nc];
            out[ext + 1] = m.integrate(&self.f, &pf, &self.g, &pg, &mut ints, None);
            for (ci, v) in ints.iter().enumerate() {
                out[4 * ci + 1] = *v;
            }
        }
    }

    /// Linear combination selecting `est` for `kind` and coefficient `ci`.
    pub fn selector(&self, est: Estimator, kind: FormKind, ci: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.width()];
        if kind.has_int() {
            v[4 * ci + est.offset()] += 1.0;
        }
        if kind.has_ext() {
            v[4 * self.coeffs.len() + est.offset()] += 1.0;
        }
        v
    }

    pub fn run(&self, plan: &McPlan) -> FormRun {
        let sampler = GammaSampler::new(self.window.clone()).expect("window validated");
        let acc = plan.run(self.width(), |rng, out| {
            let eta = sampler.sample(rng);
            self.row(&eta, out);
        });
        FormRun {
            acc,
            plan: plan.clone(),
            selectors: (0..self.coeffs.len())
                .flat_map(|ci| {
                    FormKind::ALL.into_iter().flat_map(move |k| {
                        [Estimator::Atoms, Estimator::Mecke, Estimator::GeneratorFG, Estimator::GeneratorGF].map(|e| (e, k, ci))
                    })
                })
                .map(|(e, k, ci)| ((e, k, ci), self.selector(e, k, ci)))
                .collect(),
        }
    }
}

/// Accumulated output of a [`FormBatch`] run.
pub struct FormRun {
    pub acc: CovAccumulator,
    pub plan: McPlan,
    selectors: Vec<((Estimator, FormKind, usize), Vec<f64>)>,
}

impl FormRun {
    fn selector(&self, est: Estimator, kind: FormKind, ci: usize) -> &[f64] {
        &self
            .selectors
            .iter()
            .find(|(k, _)| *k == (est, kind, ci))
            .expect("selector exists")
            .1
    }

    pub fn estimate(&self, est: Estimator, kind: FormKind, ci: usize) -> EstimateReport {
        self.plan.report(&self.acc, self.selector(est, kind, ci))
    }

    /// `(lhs, rhs, SE of lhs - rhs)` for two estimators on the same samples.
    pub fn paired(&self, a: Estimator, b: Estimator, kind: FormKind, ci: usize) -> (f64, f64, f64) {
        let sa = self.selector(a, kind, ci);
        let sb = self.selector(b, kind, ci);
        let d: Vec<f64> = sa.iter().zip(sb).map(|(x, y)| x - y).collect();
        let (_, se) = self.acc.linear(&d);
        (self.acc.linear(sa).0, self.acc.linear(sb).0, se)
    }

    pub fn verdict(&self, identity: &str, a: Estimator, b: Estimator, kind: FormKind, ci: usize, c: &MassCoefficient) -> IdentityVerdict {
        let (lhs, rhs, se) = self.paired(a, b, kind, ci);
        IdentityVerdict::statistical(identity, lhs, rhs, se, 0.0)
            .with_kind(kind.to_string())
            .with_c(c.label())
            .with_n(self.acc.count())
            .with_seed(self.plan.stream.seed())
    }
}

fn single(f: &HatCylinder, g: &HatCylinder, c: &MassCoefficient, window: &Window) -> Result<FormBatch> {
    FormBatch::new(f.clone(), g.clone(), vec![c.clone()], window.clone())
}

/// Atom-sum estimate of `ℰ(F, G)`.
pub fn estimate_form_atoms(
    kind: FormKind,
    c: &MassCoefficient,
    f: &HatCylinder,
    g: &HatCylinder,
    window: &Window,
    plan: &McPlan,
) -> Result<EstimateReport> {
    Ok(single(f, g, c, window)?.run(plan).estimate(Estimator::Atoms, kind, 0))
}

/// Mecke-representation estimate of `ℰ(F, G)`.
pub fn estimate_form_mecke(
    kind: FormKind,
    c: &MassCoefficient,
    f: &HatCylinder,
    g: &HatCylinder,
    window: &Window,
    degree: usize,
    plan: &McPlan,
) -> Result<EstimateReport> {
    let batch = single(f, g, c, window)?.with_mecke(DEFAULT_QUAD_PANELS, degree)?;
    Ok(batch.run(plan).estimate(Estimator::Mecke, kind, 0))
}

/// Estimate of `E[(-L F) G]`.
pub fn estimate_generator_pairing(
    kind: FormKind,
    c: &MassCoefficient,
    f: &HatCylinder,
    g: &HatCylinder,
    window: &Window,
    plan: &McPlan,
) -> Result<EstimateReport> {
    Ok(single(f, g, c, window)?.run(plan).estimate(Estimator::GeneratorFG, kind, 0))
}
