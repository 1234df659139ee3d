use super::function::generator_from_jet;
use crate::error::{Error, Result};
use crate::forms::nodes::{intersect, NodeSet};
use crate::mc::McPlan;
use crate::measure::Window;
use crate::testfn::{FormKind, HatCylinder, HatJet, HatTestFunction, MassCoefficient};
use crate::verdict::IdentityVerdict;

pub const FORM_QUAD_DEGREE: usize = 16;
pub const FORM_QUAD_PANELS: usize = 2;
/// Relative gap allowed between degree `p` and `2p`.
pub const FORM_QUAD_TOLERANCE: f64 = 1e-8;
/// Relative tolerance of the one-particle duality check.
pub const DUALITY_TOLERANCE: f64 = 1e-6;
/// Largest tensor rule the self-check may build.
const NODE_BUDGET: usize = 2_000_000;

/// Integrand sums `(value, Σ|terms|)` over a node set.
fn integrate_on(nodes: &NodeSet, u: &HatTestFunction, v: &HatTestFunction, term: &dyn Fn(f64, &HatJet, &HatJet) -> f64) -> (f64, f64) {
    let d = nodes.dim;
    let mut sum = 0.0;
    let mut abs = 0.0;
    for i in 0..nodes.len() {
        let (x, s) = (&nodes.xs[i][..d], nodes.ss[i]);
        let ju = u.jet(x, s);
        let jv = v.jet(x, s);
        // ϰ(dx ds) = dx s⁻¹e⁻ˢ ds
        let t = nodes.ws[i] * (-s).exp() / s * term(s, &ju, &jv);
        sum += t;
        abs += t.abs();
    }
    (sum, abs)
}

/// Integral over `supp u ∩ supp v` with a degree-doubling self-check;
/// panels are doubled up to three times before giving up.
fn converged(u: &HatTestFunction, v: &HatTestFunction, term: &dyn Fn(f64, &HatJet, &HatJet) -> f64) -> Result<(f64, f64)> {
    let Some((region, mass)) = intersect(u.support(), v.support()) else {
        return Ok((0.0, 0.0));
    };
    let tests = [u, v];
    let mut last = None;
    for panels in [1, 2, 4, 8].map(|m| m * FORM_QUAD_PANELS) {
        if NodeSet::size(&region, mass, &tests, panels, 2 * FORM_QUAD_DEGREE) > NODE_BUDGET {
            break;
        }
        let lo = integrate_on(&NodeSet::build(&region, mass, &tests, panels, FORM_QUAD_DEGREE), u, v, term);
        let hi = integrate_on(&NodeSet::build(&region, mass, &tests, panels, 2 * FORM_QUAD_DEGREE), u, v, term);
        if (lo.0 - hi.0).abs() <= FORM_QUAD_TOLERANCE * hi.1.max(f64::MIN_POSITIVE) {
            return Ok(hi);
        }
        last = Some(Error::Quadrature {
            low: FORM_QUAD_DEGREE,
            high: 2 * FORM_QUAD_DEGREE,
            low_value: lo.0,
            high_value: hi.0,
        });
    }
    Err(last.unwrap_or_else(|| Error::Unsupported(format!("quadrature would need more than {NODE_BUDGET} nodes"))))
}

fn form_term(kind: FormKind, c: &MassCoefficient) -> impl Fn(f64, &HatJet, &HatJet) -> f64 + '_ {
    move |s, ju, jv| {
        let mut t = 0.0;
        if kind.has_int() {
            t += c.eval(s) / s * (0..3).map(|k| ju.grad_x[k] * jv.grad_x[k]).sum::<f64>();
        }
        if kind.has_ext() {
            t += s * ju.ds * jv.ds;
        }
        t
    }
}

fn check_dims(u: &HatTestFunction, v: &HatTestFunction) -> Result<()> {
    match (u.dim(), v.dim()) {
        (Some(a), Some(b)) if a != b => Err(Error::Domain(format!("test functions live in dimensions {a} and {b}"))),
        _ => Ok(()),
    }
}

/// `𝔈(u, v) = ∫ϰ(dx ds)[(c(s)/s)⟨∇ₓu, ∇ₓv⟩ + s ∂ₛu ∂ₛv]` (terms per kind).
pub fn form_quadrature(kind: FormKind, c: &MassCoefficient, u: &HatTestFunction, v: &HatTestFunction) -> Result<f64> {
    check_dims(u, v)?;
    if kind == FormKind::Full {
        return Ok(form_quadrature(FormKind::Int, c, u, v)? + form_quadrature(FormKind::Ext, c, u, v)?);
    }
    Ok(converged(u, v, &form_term(kind, c))?.0)
}

/// `(u, v)_ϰ`.
pub fn kappa_inner(u: &HatTestFunction, v: &HatTestFunction) -> Result<f64> {
    check_dims(u, v)?;
    Ok(converged(u, v, &|_, ju, jv| ju.value * jv.value)?.0)
}

/// `∫ u dϰ`.
pub fn kappa_integral(u: &HatTestFunction) -> Result<f64> {
    Ok(converged(u, u, &|_, ju, _| ju.value)?.0)
}

/// Compares `𝔈(u, v)` with `-(𝔏u, v)_ϰ`; passes iff the gap is at most
/// `1e-6` times the sum of absolute integrand values.
pub fn duality_check(kind: FormKind, c: &MassCoefficient, u: &HatTestFunction, v: &HatTestFunction) -> Result<IdentityVerdict> {
    check_dims(u, v)?;
    let started = std::time::Instant::now();
    let (form, form_abs) = converged(u, v, &form_term(kind, c))?;
    let (pairing, pairing_abs) = converged(u, v, &|s, ju, jv| -generator_from_jet(kind, c, s, ju) * jv.value)?;
    let tolerance = DUALITY_TOLERANCE * form_abs.max(pairing_abs);
    Ok(IdentityVerdict::deterministic("one-particle-duality", form, pairing, tolerance)
        .with_kind(kind.to_string())
        .with_c(c.label())
        .with_runtime(started))
}

/// Monte Carlo `ℰ(⟨⟨φ,·⟩⟩, ⟨⟨ψ,·⟩⟩)` from the atom sum against the
/// quadrature of `𝔈(φ, ψ)`.
pub fn verify_linear_reduction(
    kind: FormKind,
    c: &MassCoefficient,
    phi: &HatTestFunction,
    psi: &HatTestFunction,
    window: &Window,
    plan: &McPlan,
) -> Result<IdentityVerdict> {
    check_dims(phi, psi)?;
    let started = std::time::Instant::now();
    let exact = form_quadrature(kind, c, phi, psi)?;
    let f = HatCylinder::linear(phi.clone());
    let g = HatCylinder::linear(psi.clone());
    let est = crate::forms::estimate_form_atoms(kind, c, &f, &g, window, plan)?;
    Ok(IdentityVerdict::statistical(
        "linear-reduction",
        est.value,
        exact,
        est.std_error,
        FORM_QUAD_TOLERANCE * exact.abs(),
    )
    .with_kind(kind.to_string())
    .with_c(c.label())
    .with_n(est.n_samples)
    .with_seed(est.seed)
    .with_runtime(started))
}
