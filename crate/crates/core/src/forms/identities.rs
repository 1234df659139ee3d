use statrs::distribution::{ContinuousCDF, Gamma as GammaLaw};

use super::batch::check_mass_floor;
use super::nodes::{support_region, NodeSet};
use crate::error::{Error, Result};
use crate::mc::{diff, McPlan};
use crate::measure::{local_mass, GammaSampler, SpatialBox, Window};
use crate::quadrature::{breakpoints, Rule1d, TensorRule};
use crate::special::exp_integral_e1;
use crate::stats::ks_one_sample;
use crate::testfn::{pairing_plain, Cylinder, HatCylinder, HatTestFunction, OuterFunction, SpatialTest, MAX_ARITY};
use crate::verdict::IdentityVerdict;

/// Deterministic accuracy demanded of the closed-form sides.
pub const QUADRATURE_TOLERANCE: f64 = 1e-8;
/// Significance level of the distribution tests.
pub const KS_ALPHA: f64 = 0.01;

/// Bounded function `φ` on the window for the Laplace transform check.
#[derive(Clone, Debug, PartialEq)]
pub enum LaplaceTest {
    /// `level · χ_region`.
    Indicator {
        region: SpatialBox,
        level: f64,
    },
    Smooth(SpatialTest),
}

impl LaplaceTest {
    fn value(&self, x: &[f64]) -> f64 {
        match self {
            LaplaceTest::Indicator { region, level } => {
                if region.contains(x) {
                    *level
                } else {
                    0.0
                }
            }
            LaplaceTest::Smooth(f) => f.value(x),
        }
    }

    fn sup(&self) -> Result<f64> {
        match self {
            LaplaceTest::Indicator { level, .. } => Ok(level.max(0.0)),
            LaplaceTest::Smooth(f) => {
                let m = f
                    .sup_abs()
                    .ok_or_else(|| Error::Domain("smooth test must be compactly supported".into()))?;
                Ok(if f.weight > 0.0 { m } else { 0.0 })
            }
        }
    }

    fn region(&self) -> Option<SpatialBox> {
        match self {
            LaplaceTest::Indicator { region, .. } => Some(region.clone()),
            LaplaceTest::Smooth(f) => f.support(),
        }
    }

    fn name(&self) -> String {
        match self {
            LaplaceTest::Indicator { level, .. } => format!("indicator({level})"),
            LaplaceTest::Smooth(f) => format!("bump(weight={})", f.weight),
        }
    }

    /// `∫ h(φ(x)) dx` by composite tensor Gauss–Legendre on the support.
    fn integrate(&self, h: impl Fn(f64) -> f64, panels: usize, degree: usize) -> f64 {
        let Some(region) = self.region() else {
            return 0.0;
        };
        let axes: Vec<Rule1d> = (0..region.dim())
            .map(|k| Rule1d::composite(&breakpoints(region.lo[k], region.hi[k], []), panels, degree))
            .collect();
        TensorRule::new(&axes).integrate(|x| h(self.value(x)))
    }
}

/// `E exp⟨φ, η⟩ = exp(-∫ log(1 - φ(x)) dx)`.
///
/// The Monte Carlo side sees only masses above the floor, whose exact
/// transform is `exp(-∫ [E₁(ε(1 - φ)) - E₁(ε)] dx)`; the gap to the
/// untruncated value enters the verdict as deterministic tolerance.
pub fn verify_laplace_transform(phi: &LaplaceTest, window: &Window, plan: &McPlan) -> Result<IdentityVerdict> {
    let started = std::time::Instant::now();
    let sup = phi.sup()?;
    if sup >= 1.0 {
        return Err(Error::Domain(format!("Laplace test needs sup φ < 1, got {sup}")));
    }
    if let Some(r) = phi.region() {
        if !window.region.contains_box(&r) {
            return Err(Error::OutsideWindow("Laplace test support leaves the window".into()));
        }
    }
    let eps = window.mass_floor;
    let e1 = exp_integral_e1(eps)?;
    let log_term = |v: f64| (-v).ln_1p();
    let trunc_term = |v: f64| exp_integral_e1(eps * (1.0 - v)).map(|e| e - e1).unwrap_or(f64::NAN);
    let coarse = phi.integrate(log_term, 8, 16);
    let fine = phi.integrate(log_term, 8, 20);
    if (coarse - fine).abs() > QUADRATURE_TOLERANCE {
        return Err(Error::Quadrature {
            low: 16,
            high: 20,
            low_value: coarse,
            high_value: fine,
        });
    }
    let rhs = (-fine).exp();
    let truncated = phi.integrate(trunc_term, 8, 20).exp();
    let bias = (rhs - truncated).abs();

    let sampler = GammaSampler::new(window.clone())?;
    let acc = plan.run(1, |rng, out| {
        let eta = sampler.sample(rng);
        let s: f64 = eta.atoms().iter().map(|a| a.mass * phi.value(a.position())).sum();
        out[0] = s.exp();
    });
    let (lhs, se) = acc.linear(&[1.0]);
    Ok(
        IdentityVerdict::statistical("laplace-transform", lhs, rhs, se, bias + QUADRATURE_TOLERANCE)
            .with_n(acc.count())
            .with_seed(plan.stream.seed())
            .with_runtime(started)
            .with_note(format!("{}; truncation bias {bias:.3e}", phi.name())),
    )
}

/// `E Σ φ(x, s(x)) G(η) = E ∫dx ds s⁻¹e⁻ˢ φ(x, s) G(η + sδₓ)`, both sides on
/// the same samples. `g = None` means `G ≡ 1`.
pub fn verify_mecke_gamma(phi: &HatTestFunction, g: Option<&HatCylinder>, window: &Window, plan: &McPlan) -> Result<IdentityVerdict> {
    let started = std::time::Instant::now();
    let mut tests = vec![phi];
    if let Some(g) = g {
        tests.extend(&g.tests);
    }
    check_mass_floor(window, &tests)?;
    let one = HatCylinder::new(OuterFunction::constant(1.0), Vec::new())?;
    let g = g.unwrap_or(&one);
    let nodes = match support_region(&[phi], window) {
        Some((bx, m)) => {
            let mut all = vec![phi];
            all.extend(&g.tests);
            NodeSet::build(&bx, m, &all, 4, 12)
        }
        None => NodeSet::empty(window.dim()),
    };
    let phi_w: Vec<f64> = (0..nodes.len())
        .map(|i| {
            let s = nodes.ss[i];
            nodes.ws[i] * (-s).exp() / s * phi.value(&nodes.xs[i][..nodes.dim], s)
        })
        .collect();
    let jets = nodes.jets(&g.tests);
    let m = g.tests.len();
    let sampler = GammaSampler::new(window.clone())?;
    let acc = plan.run(2, |rng, out| {
        let eta = sampler.sample(rng);
        let gv = g.value(&eta);
        out[0] = eta.atoms().iter().map(|a| phi.value(a.position(), a.mass)).sum::<f64>() * gv;
        let p = g.pairings(&eta);
        let mut args = [0.0; MAX_ARITY];
        let mut rhs = 0.0;
        for (i, w) in phi_w.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            for k in 0..m {
                args[k] = p[k] + jets[i * m + k].value;
            }
            rhs += w * g.outer.eval(&args[..m]);
        }
        out[1] = rhs;
    });
    let (_, se) = acc.linear(&diff(2, 0, 1));
    Ok(
        IdentityVerdict::statistical("mecke-gamma", acc.mean(0), acc.mean(1), se, QUADRATURE_TOLERANCE)
            .with_n(acc.count())
            .with_seed(plan.stream.seed())
            .with_runtime(started),
    )
}

/// `E Σ χ_A(x) s(x)^l = vol(A)·(l-1)!`, with the truncation bias
/// `vol(A)·ε^l/l` as deterministic tolerance.
pub fn verify_moments(region: &SpatialBox, l: u32, window: &Window, plan: &McPlan) -> Result<IdentityVerdict> {
    let started = std::time::Instant::now();
    if !(1..=6).contains(&l) {
        return Err(Error::Domain(format!("moment order must be in 1..=6, got {l}")));
    }
    if !window.region.contains_box(region) {
        return Err(Error::OutsideWindow(format!("box {region:?} is not inside the window")));
    }
    let sampler = GammaSampler::new(window.clone())?;
    let acc = plan.run(1, |rng, out| {
        let eta = sampler.sample(rng);
        out[0] = eta
            .atoms()
            .iter()
            .filter(|a| region.contains(a.position()))
            .map(|a| a.mass.powi(l as i32))
            .sum();
    });
    let vol = region.volume();
    let rhs = vol * (1..l).map(f64::from).product::<f64>();
    let bias = vol * window.mass_floor.powi(l as i32) / f64::from(l);
    let (lhs, sample_se) = acc.linear(&[1.0]);
    // The per-sample variance is exactly vol·(2l-1)! (up to truncation);
    // for large l the sample estimate of it is badly biased low.
    let exact_se = (vol * (1..2 * l).map(f64::from).product::<f64>() / acc.count() as f64).sqrt();
    Ok(IdentityVerdict::statistical(format!("moment-l{l}"), lhs, rhs, exact_se, bias)
        .with_n(acc.count())
        .with_seed(plan.stream.seed())
        .with_runtime(started)
        .with_note(format!("exact standard error; sample estimate {sample_se:.4e}")))
}

/// KS test of `η(A)` against Gamma(shape `vol(A)`, rate 1).
pub fn distribution_check_gamma(region: &SpatialBox, window: &Window, plan: &McPlan) -> Result<IdentityVerdict> {
    let started = std::time::Instant::now();
    let vol = region.volume();
    if vol < 0.05 {
        return Err(Error::Skipped(format!(
            "box volume {vol} below 0.05: law dominated by the atom at 0"
        )));
    }
    let sampler = GammaSampler::new(window.clone())?;
    let draws = plan.collect(|rng| local_mass(&sampler.sample(rng), region));
    let xs = draws.into_iter().collect::<Result<Vec<f64>>>()?;
    let law = GammaLaw::new(vol, 1.0).map_err(|e| Error::Domain(e.to_string()))?;
    let out = ks_one_sample(&xs, |t| law.cdf(t));
    Ok(IdentityVerdict::p_value("gamma-marginal", out.statistic, out.p_value, KS_ALPHA)
        .with_n(xs.len() as u64)
        .with_seed(plan.stream.seed())
        .with_runtime(started)
        .with_note(format!("vol={vol}")))
}

/// Monte Carlo mean of `⟨f, η⟩` against `∫ f dx` up to truncation bias.
pub fn verify_plain_pairing(f: &SpatialTest, window: &Window, plan: &McPlan) -> Result<IdentityVerdict> {
    let region = f
        .support()
        .ok_or_else(|| Error::Domain("plain test must be compactly supported".into()))?;
    let axes: Vec<Rule1d> = (0..region.dim())
        .map(|k| Rule1d::interval(region.lo[k], region.hi[k], 8, 16))
        .collect();
    let rhs = TensorRule::new(&axes).integrate(|x| f.value(x));
    let sampler = GammaSampler::new(window.clone())?;
    let acc = plan.run(1, |rng, out| out[0] = pairing_plain(f, &sampler.sample(rng)));
    let (lhs, se) = acc.linear(&[1.0]);
    let bias = crate::measure::truncation_bias_bound(window, f.sup_abs().unwrap_or(0.0));
    Ok(
        IdentityVerdict::statistical("plain-pairing-mean", lhs, rhs, se, bias + QUADRATURE_TOLERANCE)
            .with_n(acc.count())
            .with_seed(plan.stream.seed()),
    )
}

/// Monte Carlo mean of `⟨⟨φ, η⟩⟩` against `∫ φ(x, s) s⁻¹e⁻ˢ dx ds`.
pub fn verify_hat_pairing(phi: &HatTestFunction, window: &Window, plan: &McPlan) -> Result<IdentityVerdict> {
    check_mass_floor(window, &[phi])?;
    let rhs = match support_region(&[phi], window) {
        Some((bx, m)) => {
            let nodes = NodeSet::build(&bx, m, &[phi], 4, 16);
            (0..nodes.len())
                .map(|i| {
                    let s = nodes.ss[i];
                    nodes.ws[i] * (-s).exp() / s * phi.value(&nodes.xs[i][..nodes.dim], s)
                })
                .sum()
        }
        None => 0.0,
    };
    let f = HatCylinder::linear(phi.clone());
    let sampler = GammaSampler::new(window.clone())?;
    let acc = plan.run(1, |rng, out| out[0] = f.value(&sampler.sample(rng)));
    let (lhs, se) = acc.linear(&[1.0]);
    Ok(IdentityVerdict::statistical("hat-pairing-mean", lhs, rhs, se, QUADRATURE_TOLERANCE)
        .with_n(acc.count())
        .with_seed(plan.stream.seed()))
}
