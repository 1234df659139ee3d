use super::*;
use crate::error::Error;
use crate::fixtures::{linear_pair, random_cylinder, standard_pair};
use crate::measure::{sample_gamma_configuration, SpatialBox};
use crate::rng::RandomStream;
use crate::testfn::{OuterFunction, SpatialTest};

fn window(d: usize) -> Window {
    Window::unit(d, 1e-6).unwrap()
}

fn plan(n: u64, seed: u64) -> McPlan {
    McPlan::new(n, 4, RandomStream::new(seed)).unwrap()
}

/// Trapezoid rule on a uniform grid; spectrally accurate for integrands
/// vanishing to all orders at the ends.
fn trapezoid2(f: impl Fn(f64, f64) -> f64, x: (f64, f64), s: (f64, f64), m: usize) -> f64 {
    let hx = (x.1 - x.0) / m as f64;
    let hs = (s.1 - s.0) / m as f64;
    let mut acc = 0.0;
    for i in 1..m {
        for j in 1..m {
            acc += f(x.0 + hx * i as f64, s.0 + hs * j as f64);
        }
    }
    acc * hx * hs
}

#[test]
fn constant_function_gives_exact_zero() {
    let (_, g) = standard_pair(1);
    let f = HatCylinder::new(OuterFunction::constant(3.0), g.tests.clone()).unwrap();
    let batch = FormBatch::new(f, g, MassCoefficient::named().to_vec(), window(1))
        .unwrap()
        .with_mecke(DEFAULT_QUAD_PANELS, DEFAULT_QUAD_DEGREE)
        .unwrap();
    let run = batch.run(&plan(500, 1));
    for ci in 0..4 {
        for kind in FormKind::ALL {
            for est in [Estimator::Atoms, Estimator::Mecke, Estimator::GeneratorFG] {
                assert_eq!(run.estimate(est, kind, ci).value, 0.0, "{est:?} {kind}");
            }
        }
    }
}

#[test]
fn null_function_gives_exact_zero_everywhere() {
    // F vanishes identically although its tests do not
    let (f0, g) = standard_pair(1);
    let f = HatCylinder::new(OuterFunction::scale(0.0, f0.outer.clone()), f0.tests.clone()).unwrap();
    let batch = FormBatch::new(f, g, vec![MassCoefficient::Linear], window(1))
        .unwrap()
        .with_mecke(DEFAULT_QUAD_PANELS, DEFAULT_QUAD_DEGREE)
        .unwrap();
    let run = batch.run(&plan(500, 2));
    for kind in FormKind::ALL {
        for est in [Estimator::Atoms, Estimator::Mecke, Estimator::GeneratorFG, Estimator::GeneratorGF] {
            assert_eq!(run.estimate(est, kind, 0).value, 0.0);
        }
    }
}

#[test]
fn energy_contributions_are_nonnegative() {
    let (f, _) = standard_pair(2);
    let mut rng = RandomStream::new(3).rng();
    for _ in 0..500 {
        let eta = sample_gamma_configuration(&window(2), &mut rng).unwrap();
        for c in MassCoefficient::named() {
            for kind in FormKind::ALL {
                assert!(atom_energy(kind, &c, &f, &eta) >= 0.0);
            }
        }
    }
}

#[test]
fn full_is_int_plus_ext_per_sample() {
    let (f, g) = standard_pair(1);
    let batch = FormBatch::new(f, g, vec![MassCoefficient::Quadratic], window(1))
        .unwrap()
        .with_mecke(DEFAULT_QUAD_PANELS, DEFAULT_QUAD_DEGREE)
        .unwrap();
    let mut rng = RandomStream::new(4).rng();
    let mut row = vec![0.0; batch.width()];
    for _ in 0..100 {
        row.iter_mut().for_each(|v| *v = 0.0);
        batch.row(&sample_gamma_configuration(&window(1), &mut rng).unwrap(), &mut row);
        for est in [Estimator::Atoms, Estimator::Mecke, Estimator::GeneratorFG] {
            let pick = |k| batch.selector(est, k, 0).iter().zip(&row).map(|(a, b)| a * b).sum::<f64>();
            assert_eq!(pick(FormKind::Full), pick(FormKind::Int) + pick(FormKind::Ext));
        }
    }
}

#[test]
fn linear_ext_form_reduces_to_one_particle_integral() {
    let (phi, psi) = linear_pair(1);
    let f = HatCylinder::linear(phi.clone());
    let g = HatCylinder::linear(psi.clone());
    let exact = trapezoid2(
        |x, s| (-s).exp() * phi.jet(&[x], s).ds * psi.jet(&[x], s).ds,
        (0.0, 1.0),
        (0.2, 3.6),
        800,
    );
    let est = estimate_form_atoms(FormKind::Ext, &MassCoefficient::One, &f, &g, &window(1), &plan(40_000, 5)).unwrap();
    assert!((est.value - exact).abs() < 4.0 * est.std_error, "{est:?} vs {exact}");
    let mecke = estimate_form_mecke(
        FormKind::Ext,
        &MassCoefficient::One,
        &f,
        &g,
        &window(1),
        DEFAULT_QUAD_DEGREE,
        &plan(50, 5),
    )
    .unwrap();
    // linear functions: the Mecke integrand does not depend on η
    assert!((mecke.value - exact).abs() < 1e-9 * exact.abs().max(1.0));
    assert!(mecke.std_error < 1e-12);
}

#[test]
fn representations_agree_on_random_cases() {
    let mut rng = RandomStream::new(6).rng();
    let coeffs = MassCoefficient::named();
    for case in 0..10 {
        let f = random_cylinder(&mut rng, 1, 0.2);
        let g = random_cylinder(&mut rng, 1, 0.2);
        let c = coeffs[case % 4].clone();
        let batch = FormBatch::new(f, g, vec![c.clone()], window(1))
            .unwrap()
            .with_mecke(DEFAULT_QUAD_PANELS, DEFAULT_QUAD_DEGREE)
            .unwrap();
        let run = batch.run(&plan(300, 100 + case as u64));
        for kind in FormKind::ALL {
            let v = run.verdict("representation", Estimator::Atoms, Estimator::Mecke, kind, 0, &c);
            assert!(v.pass, "case {case}: {v:?}");
        }
    }
}

#[test]
fn duality_and_symmetry() {
    let (f, g) = standard_pair(1);
    let coeffs = MassCoefficient::named().to_vec();
    let batch = FormBatch::new(f, g, coeffs.clone(), window(1)).unwrap();
    let run = batch.run(&plan(20_000, 7));
    for (ci, c) in coeffs.iter().enumerate() {
        for kind in FormKind::ALL {
            let v = run.verdict("duality", Estimator::Atoms, Estimator::GeneratorFG, kind, ci, c);
            assert!(v.pass, "{v:?}");
            let v = run.verdict("symmetry", Estimator::GeneratorFG, Estimator::GeneratorGF, kind, ci, c);
            assert!(v.pass, "{v:?}");
        }
    }
}

#[test]
fn mass_floor_above_support_is_rejected() {
    let (f, g) = standard_pair(1);
    let w = Window::unit(1, 0.4).unwrap();
    assert!(matches!(
        FormBatch::new(f, g, vec![MassCoefficient::One], w),
        Err(Error::MassFloorTooLarge { .. })
    ));
}

#[test]
fn quadrature_degree_below_eight_is_rejected() {
    let (f, g) = standard_pair(1);
    assert!(FormBatch::new(f, g, vec![MassCoefficient::One], window(1))
        .unwrap()
        .with_mecke(DEFAULT_QUAD_PANELS, 6)
        .is_err());
}

#[test]
fn reruns_are_bit_identical() {
    let (f, g) = standard_pair(1);
    let batch = FormBatch::new(f, g, vec![MassCoefficient::Linear], window(1))
        .unwrap()
        .with_mecke(DEFAULT_QUAD_PANELS, DEFAULT_QUAD_DEGREE)
        .unwrap();
    let a = batch.run(&plan(300, 8)).estimate(Estimator::Mecke, FormKind::Full, 0);
    let b = batch.run(&plan(300, 8)).estimate(Estimator::Mecke, FormKind::Full, 0);
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
}

#[test]
fn contraction_does_not_increase_energy() {
    let (f, _) = standard_pair(1);
    for kind in FormKind::ALL {
        let v = verify_contraction(kind, &MassCoefficient::Linear, &f, &window(1), &plan(5000, 9)).unwrap();
        assert!(v.pass, "{v:?}");
    }
}

#[test]
fn plain_class_needs_integrable_coefficient() {
    let f = PlainCylinder::new(
        OuterFunction::tanh(OuterFunction::arg(0)),
        vec![SpatialTest::bump(1.0, &[0.5], 0.3).unwrap()],
    )
    .unwrap();
    let bad = MassCoefficient::custom(vec![1.0], 1.5).unwrap();
    assert!(estimate_form_atoms_plain(FormKind::Int, &bad, &f, &f, &window(1), &plan(10, 1)).is_err());
    let ok = estimate_form_atoms_plain(FormKind::Full, &MassCoefficient::One, &f, &f, &window(1), &plan(1000, 1)).unwrap();
    assert!(ok.value > 0.0);
}

#[test]
fn laplace_indicator_has_closed_form_half() {
    let phi = LaplaceTest::Indicator {
        region: SpatialBox::unit(1).unwrap(),
        level: -1.0,
    };
    let v = verify_laplace_transform(&phi, &window(1), &plan(20_000, 10)).unwrap();
    assert!((v.rhs - 0.5).abs() < 1e-14);
    assert!(v.pass, "{v:?}");
    let zero = LaplaceTest::Indicator {
        region: SpatialBox::unit(1).unwrap(),
        level: 0.0,
    };
    let v = verify_laplace_transform(&zero, &window(1), &plan(100, 10)).unwrap();
    assert_eq!((v.lhs, v.rhs), (1.0, 1.0));
    let bad = LaplaceTest::Indicator {
        region: SpatialBox::unit(1).unwrap(),
        level: 1.0,
    };
    assert!(matches!(
        verify_laplace_transform(&bad, &window(1), &plan(10, 1)),
        Err(Error::Domain(_))
    ));
}

#[test]
fn laplace_smooth_bump() {
    let f = SpatialTest::bump(0.4 / crate::testfn::BumpFunction::PEAK, &[0.5, 0.5], 0.4).unwrap();
    let phi = LaplaceTest::Smooth(f);
    let v = verify_laplace_transform(&phi, &window(2), &plan(20_000, 11)).unwrap();
    assert!(v.pass, "{v:?}");
}

#[test]
fn mecke_families() {
    let (phi, psi) = linear_pair(1);
    let v = verify_mecke_gamma(&phi, None, &window(1), &plan(20_000, 12)).unwrap();
    assert!(v.pass, "{v:?}");
    let g = HatCylinder::linear(psi);
    let v = verify_mecke_gamma(&phi, Some(&g), &window(1), &plan(20_000, 13)).unwrap();
    assert!(v.pass, "{v:?}");
    let (_, g2) = standard_pair(1);
    let v = verify_mecke_gamma(&phi, Some(&g2), &window(1), &plan(20_000, 14)).unwrap();
    assert!(v.pass, "{v:?}");
    let zero = crate::testfn::HatTestFunction::zero();
    let v = verify_mecke_gamma(&zero, Some(&g2), &window(1), &plan(100, 15)).unwrap();
    assert_eq!((v.lhs, v.rhs), (0.0, 0.0));
}

#[test]
fn moments() {
    let a = SpatialBox::new(vec![0.0, 0.0], vec![0.5, 1.0]).unwrap();
    for l in [1, 3, 5] {
        let v = verify_moments(&a, l, &window(2), &plan(20_000, 20 + l as u64)).unwrap();
        assert!(v.pass, "{v:?}");
    }
    assert_eq!(verify_moments(&a, 3, &window(2), &plan(10, 1)).unwrap().rhs, 1.0);
    assert!(verify_moments(&a, 7, &window(2), &plan(10, 1)).is_err());
}

#[test]
fn gamma_marginal() {
    let w = Window::new(SpatialBox::new(vec![0.0], vec![2.0]).unwrap(), 1e-6).unwrap();
    for (hi, seed) in [(1.0, 30), (2.0, 31)] {
        let a = SpatialBox::new(vec![0.0], vec![hi]).unwrap();
        let v = distribution_check_gamma(&a, &w, &plan(10_000, seed)).unwrap();
        assert!(v.pass, "{v:?}");
    }
    let tiny = SpatialBox::new(vec![0.0], vec![0.01]).unwrap();
    assert!(matches!(distribution_check_gamma(&tiny, &w, &plan(10, 1)), Err(Error::Skipped(_))));
}

#[test]
fn pairing_means() {
    let (phi, _) = linear_pair(2);
    let v = verify_hat_pairing(&phi, &window(2), &plan(20_000, 40)).unwrap();
    assert!(v.pass, "{v:?}");
    let f = SpatialTest::bump(1.0, &[0.5, 0.5], 0.3).unwrap();
    let v = verify_plain_pairing(&f, &window(2), &plan(20_000, 41)).unwrap();
    assert!(v.pass, "{v:?}");
}
