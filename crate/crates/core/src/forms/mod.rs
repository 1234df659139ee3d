//! Monte Carlo estimation of the Dirichlet forms and verification of the
//! measure-level identities of the gamma measure.

mod batch;
mod identities;
pub(crate) mod nodes;

pub use batch::{
    check_mass_floor, estimate_form_atoms, estimate_form_mecke, estimate_generator_pairing, Estimator, FormBatch, FormRun,
    DEFAULT_QUAD_DEGREE, DEFAULT_QUAD_PANELS,
};
pub use identities::{
    distribution_check_gamma, verify_hat_pairing, verify_laplace_transform, verify_mecke_gamma, verify_moments, verify_plain_pairing,
    LaplaceTest, KS_ALPHA, QUADRATURE_TOLERANCE,
};

use crate::error::Result;
use crate::mc::{diff, McPlan};
use crate::measure::{GammaSampler, WeightedConfiguration, Window};
use crate::testfn::{require_integrable, FormKind, HatCylinder, HatTestFunction, MassCoefficient, PlainCylinder};
use crate::verdict::{EstimateReport, IdentityVerdict};

/// Per-sample atom-sum contribution to `ℰ(F, F)`.
pub fn atom_energy(kind: FormKind, c: &MassCoefficient, f: &HatCylinder, eta: &WeightedConfiguration) -> f64 {
    let d = eta.dim();
    eta.atoms()
        .iter()
        .zip(f.atom_derivatives(eta))
        .map(|(a, u)| {
            let s = a.mass;
            let mut v = 0.0;
            if kind.has_int() {
                v += c.eval(s) / s * (0..d).map(|k| u.grad_x[k] * u.grad_x[k]).sum::<f64>();
            }
            if kind.has_ext() {
                v += s * u.ds * u.ds;
            }
            v
        })
        .sum()
}

/// Atom-sum estimate of the form on plain cylinder functions. Requires
/// `∫ c(s) e^{-s} ds < ∞`.
pub fn estimate_form_atoms_plain(
    kind: FormKind,
    c: &MassCoefficient,
    f: &PlainCylinder,
    g: &PlainCylinder,
    window: &Window,
    plan: &McPlan,
) -> Result<EstimateReport> {
    require_integrable(c)?;
    let sampler = GammaSampler::new(window.clone())?;
    let d = window.dim();
    let acc = plan.run(1, |rng, out| {
        let eta = sampler.sample(rng);
        let gf = f.atom_gradients(&eta);
        let gg = g.atom_gradients(&eta);
        for ((a, u), v) in eta.atoms().iter().zip(&gf).zip(&gg) {
            let s = a.mass;
            if kind.has_int() {
                out[0] += s * c.eval(s) * (0..d).map(|k| u.0[k] * v.0[k]).sum::<f64>();
            }
            if kind.has_ext() {
                out[0] += s * u.1 * v.1;
            }
        }
    });
    Ok(plan.report(&acc, &[1.0]))
}

/// `ℰ(T∘F, T∘F) ≤ ℰ(F, F)` for the smooth unit contraction `T`, one-sided at 4σ.
pub fn verify_contraction(kind: FormKind, c: &MassCoefficient, f: &HatCylinder, window: &Window, plan: &McPlan) -> Result<IdentityVerdict> {
    let tests: Vec<&HatTestFunction> = f.tests.iter().collect();
    check_mass_floor(window, &tests)?;
    let contracted = HatCylinder::new(f.outer.clone().unit_contraction(), f.tests.clone())?;
    let sampler = GammaSampler::new(window.clone())?;
    let acc = plan.run(2, |rng, out| {
        let eta = sampler.sample(rng);
        out[0] = atom_energy(kind, c, &contracted, &eta);
        out[1] = atom_energy(kind, c, f, &eta);
    });
    let (_, se) = acc.linear(&diff(2, 0, 1));
    let (lhs, rhs) = (acc.mean(0), acc.mean(1));
    let mut v = IdentityVerdict::statistical("markov-contraction", lhs, rhs, se, 0.0)
        .with_kind(kind.to_string())
        .with_c(c.label())
        .with_n(acc.count())
        .with_seed(plan.stream.seed())
        .with_note("one-sided: contracted energy must not exceed the original by more than 4σ");
    v.pass = lhs <= rhs + crate::verdict::SIGMA_LEVEL * se;
    Ok(v)
}

#[cfg(test)]
mod tests;
