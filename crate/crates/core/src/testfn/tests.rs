use rand::Rng;

use super::*;
use crate::measure::{sample_gamma_configuration, WeightedConfiguration, Window};
use crate::rng::{RandomStream, StreamRng};

fn random_hat(rng: &mut StreamRng, d: usize) -> HatTestFunction {
    let terms = (0..2)
        .map(|_| {
            let center: Vec<f64> = (0..d).map(|_| rng.random_range(0.3..0.7)).collect();
            let a = rng.random_range(0.2..1.0);
            let b = a + rng.random_range(0.5..2.0);
            HatTerm {
                space: SpatialTest::bump(rng.random_range(-1.5..1.5), &center, rng.random_range(0.25..0.45)).unwrap(),
                mass: Profile::bump(0.5 * (a + b), 0.5 * (b - a)).unwrap(),
            }
        })
        .collect();
    HatTestFunction::new(terms).unwrap()
}

fn random_outer(rng: &mut StreamRng) -> OuterFunction {
    use OuterFunction as O;
    let w: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
    O::sum(vec![
        O::scale(w[0], O::tanh(O::sum(vec![O::arg(0), O::scale(w[1], O::arg(1))]))),
        O::product(vec![O::tanh(O::arg(1)), O::tanh(O::scale(w[2], O::arg(0)))]),
        O::scale(w[3], O::pow(O::tanh(O::arg(0)), 2)),
    ])
}

fn random_cylinder(rng: &mut StreamRng, d: usize) -> HatCylinder {
    let tests = vec![random_hat(rng, d), random_hat(rng, d)];
    HatCylinder::new(random_outer(rng), tests).unwrap()
}

fn random_configuration(rng: &mut StreamRng, d: usize) -> WeightedConfiguration {
    let window = Window::unit(d, 0.05).unwrap();
    let mut eta = sample_gamma_configuration(&window, rng).unwrap();
    for _ in 0..3 {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(0.3..0.7)).collect();
        eta = eta.with_atom(&x, rng.random_range(0.4..2.0));
    }
    eta
}

fn random_field(rng: &mut StreamRng, d: usize) -> VectorField {
    VectorField::new(
        (0..d)
            .map(|_| {
                let c: Vec<f64> = (0..d).map(|_| rng.random_range(0.3..0.7)).collect();
                SpatialTest::bump(rng.random_range(-1.0..1.0), &c, 0.6).unwrap()
            })
            .collect(),
    )
    .unwrap()
}

/// Richardson-extrapolated second difference at 0.
fn second_difference(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    let d2 = |h: f64| (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
    (4.0 * d2(0.5 * h) - d2(h)) / 3.0
}

fn fd_delta_x(f: &HatCylinder, eta: &WeightedConfiguration, i: usize) -> f64 {
    let x0 = eta.atoms()[i].position().to_vec();
    (0..x0.len())
        .map(|k| {
            second_difference(
                |t| {
                    let mut x = x0.clone();
                    x[k] += t;
                    f.value(&eta.with_moved_atom(i, &x).unwrap())
                },
                1e-3,
            )
        })
        .sum()
}

fn fd_delta_mark(f: &HatCylinder, eta: &WeightedConfiguration, i: usize) -> f64 {
    let s = eta.atoms()[i].mass;
    let at = |t: f64| f.value(&eta.with_mass(i, s + t).unwrap());
    second_difference(at, 1e-3) - richardson_derivative(at, FD_STEP)
}

#[test]
fn pairing_examples() {
    let window = Window::unit(1, 1e-6).unwrap();
    let empty = WeightedConfiguration::empty(window.clone());
    let phi = HatTestFunction::bump(1.0, &[0.5], 0.3, 0.5, 2.0).unwrap();
    assert_eq!(pairing_hat(&phi, &empty), 0.0);
    let one = empty.with_atom(&[0.5], 1.25);
    assert_eq!(pairing_hat(&phi, &one), phi.value(&[0.5], 1.25));
    let f = SpatialTest::new(0.5, vec![Profile::polynomial(vec![1.0])]).unwrap();
    assert_eq!(pairing_plain(&f, &empty), 0.0);
    assert_eq!(pairing_plain(&f, &empty.with_atom(&[0.3], 2.0)), 1.0);
}

#[test]
fn eval_examples_and_gamma_side() {
    let window = Window::unit(2, 1e-3).unwrap();
    let mut rng = RandomStream::new(3).rng();
    let c = HatCylinder::new(OuterFunction::constant(0.7), vec![random_hat(&mut rng, 2)]).unwrap();
    let eta = random_configuration(&mut rng, 2);
    assert_eq!(c.value(&eta), 0.7);
    let t = HatCylinder::new(OuterFunction::tanh(OuterFunction::arg(0)), vec![random_hat(&mut rng, 2)]).unwrap();
    assert_eq!(t.value(&WeightedConfiguration::empty(window.clone())), 0.0);
    for _ in 0..10 {
        let eta = sample_gamma_configuration(&window, &mut rng).unwrap();
        let f = random_cylinder(&mut rng, 2);
        assert_eq!(f.value(&eta), f.value_on_marked(&eta.to_marked_points()));
    }
}

#[test]
fn constant_outer_has_no_derivatives() {
    let mut rng = RandomStream::new(4).rng();
    let f = HatCylinder::new(OuterFunction::constant(2.0), vec![random_hat(&mut rng, 1)]).unwrap();
    let eta = random_configuration(&mut rng, 1);
    for i in 0..eta.len() {
        assert_eq!(f.intrinsic_gradient(&eta, i).unwrap(), vec![0.0]);
        assert_eq!(f.extrinsic_gradient(&eta, i).unwrap(), 0.0);
        assert_eq!(f.delta_x(&eta, i).unwrap(), 0.0);
        assert_eq!(f.delta_mark(&eta, i).unwrap(), 0.0);
    }
    for kind in FormKind::ALL {
        assert_eq!(f.generator(kind, &MassCoefficient::One, &eta), 0.0);
    }
    assert!(f.intrinsic_gradient(&eta, eta.len()).is_err());
    assert!(f.extrinsic_gradient(&eta, eta.len()).is_err());
}

#[test]
fn mass_independent_test_has_no_extrinsic_gradient() {
    let phi = HatTestFunction::local(vec![HatTerm {
        space: SpatialTest::bump(1.0, &[0.5], 0.3).unwrap(),
        mass: Profile::polynomial(vec![1.0]),
    }])
    .unwrap();
    let f = HatCylinder::new(OuterFunction::tanh(OuterFunction::arg(0)), vec![phi]).unwrap();
    let eta = WeightedConfiguration::empty(Window::unit(1, 1e-6).unwrap()).with_atom(&[0.45], 1.3);
    assert_eq!(f.extrinsic_gradient(&eta, 0).unwrap(), 0.0);
}

#[test]
fn affine_mass_profile_leaves_only_drift() {
    // φ = f(x)(α + βs) and F = ⟨⟨φ,·⟩⟩: the second mark derivative vanishes
    let phi = HatTestFunction::local(vec![HatTerm {
        space: SpatialTest::bump(1.0, &[0.5], 0.3).unwrap(),
        mass: Profile::polynomial(vec![0.4, 1.5]),
    }])
    .unwrap();
    let f = HatCylinder::linear(phi.clone());
    let eta = WeightedConfiguration::empty(Window::unit(1, 1e-6).unwrap()).with_atom(&[0.45], 1.3);
    let drift = phi.jet(&[0.45], 1.3).ds;
    assert_eq!(f.delta_mark(&eta, 0).unwrap(), -drift);
}

#[test]
fn single_atom_intrinsic_gradient() {
    use OuterFunction as O;
    let phi = HatTestFunction::bump(0.8, &[0.5], 0.3, 0.5, 2.0).unwrap();
    let f = HatCylinder::new(O::scale(3.0, O::tanh(O::scale(1.0 / 3.0, O::arg(0)))), vec![phi.clone()]).unwrap();
    let eta = WeightedConfiguration::empty(Window::unit(1, 1e-6).unwrap()).with_atom(&[0.42], 1.1);
    let p = pairing_hat(&phi, &eta);
    let g1 = 1.0 - (p / 3.0).tanh().powi(2);
    let expected = g1 * phi.jet(&[0.42], 1.1).grad_x[0] / 1.1;
    assert!((f.intrinsic_gradient(&eta, 0).unwrap()[0] - expected).abs() < 1e-15);
    let v = VectorField::new(vec![SpatialTest::bump(1.0, &[0.5], 0.4).unwrap()]).unwrap();
    let fd = directional_derivative_int(&f, &v, &eta);
    assert!((fd - tangent_pairing_int(&f, &v, &eta)).abs() < 1e-6);
}

#[test]
fn tangent_pairing_matches_directional_derivative() {
    let mut rng = RandomStream::new(5).rng();
    for case in 0..20 {
        let d = 1 + case % 3;
        let f = random_cylinder(&mut rng, d);
        let eta = random_configuration(&mut rng, d);
        let v = random_field(&mut rng, d);
        let fd = directional_derivative_int(&f, &v, &eta);
        let an = tangent_pairing_int(&f, &v, &eta);
        assert!((fd - an).abs() < 1e-6, "int case {case}: {fd} vs {an}");
        let h = SpatialTest::bump(rng.random_range(-1.0..1.0), &vec![0.5; d], 0.6).unwrap();
        let fd = directional_derivative_ext(&f, &h, &eta);
        let an = tangent_pairing_ext(&f, &h, &eta);
        assert!((fd - an).abs() < 1e-6, "ext case {case}: {fd} vs {an}");
    }
}

#[test]
fn plain_gradients_match_directional_derivative() {
    use OuterFunction as O;
    let mut rng = RandomStream::new(6).rng();
    for case in 0..20 {
        let d = 1 + case % 3;
        let tests: Vec<SpatialTest> = (0..2)
            .map(|_| {
                let c: Vec<f64> = (0..d).map(|_| rng.random_range(0.3..0.7)).collect();
                SpatialTest::bump(rng.random_range(-1.0..1.0), &c, 0.4).unwrap()
            })
            .collect();
        let f = PlainCylinder::new(O::tanh(O::sum(vec![O::arg(0), O::product(vec![O::arg(0), O::arg(1)])])), tests).unwrap();
        let eta = random_configuration(&mut rng, d);
        let v = random_field(&mut rng, d);
        let fd = directional_derivative_int(&f, &v, &eta);
        assert!((fd - tangent_pairing_int(&f, &v, &eta)).abs() < 1e-6, "case {case}");
        let h = SpatialTest::bump(0.7, &vec![0.5; d], 0.6).unwrap();
        let fd = directional_derivative_ext(&f, &h, &eta);
        assert!((fd - tangent_pairing_ext(&f, &h, &eta)).abs() < 1e-6, "case {case}");
    }
}

#[test]
fn plain_gradient_of_linear_test_is_exact() {
    // f(x) = 2 + 3x, F = ⟨f, ·⟩: ∇^int F = f' = 3, ∇^ext F = f(x)
    let f = SpatialTest::new(1.0, vec![Profile::polynomial(vec![2.0, 3.0])]).unwrap();
    let c = PlainCylinder::new(OuterFunction::arg(0), vec![f]).unwrap();
    let eta = WeightedConfiguration::empty(Window::unit(1, 1e-6).unwrap()).with_atom(&[0.25], 0.5);
    assert_eq!(c.intrinsic_gradient(&eta, 0).unwrap(), vec![3.0]);
    assert_eq!(c.extrinsic_gradient(&eta, 0).unwrap(), 2.75);
}

#[test]
fn second_order_operators_match_differences() {
    let mut rng = RandomStream::new(7).rng();
    for case in 0..20 {
        let d = 1 + case % 3;
        let f = random_cylinder(&mut rng, d);
        let eta = random_configuration(&mut rng, d);
        for i in 0..eta.len() {
            let an = f.delta_x(&eta, i).unwrap();
            let fd = fd_delta_x(&f, &eta, i);
            assert!((an - fd).abs() < 1e-5, "case {case} atom {i}: {an} vs {fd}");
            let an = f.delta_mark(&eta, i).unwrap();
            let fd = fd_delta_mark(&f, &eta, i);
            assert!((an - fd).abs() < 1e-5, "case {case} atom {i}: {an} vs {fd}");
        }
    }
}

#[test]
fn gradients_vanish_off_support() {
    let mut rng = RandomStream::new(8).rng();
    let f = random_cylinder(&mut rng, 2);
    let (_, (a, b)) = f.tests[0].support().unwrap();
    let (_, (a2, b2)) = f.tests[1].support().unwrap();
    let low = a.min(a2);
    let high = b.max(b2);
    let eta = WeightedConfiguration::empty(Window::unit(2, 1e-6).unwrap())
        .with_atom(&[0.5, 0.5], 0.5 * low)
        .with_atom(&[0.5, 0.45], high + 0.1)
        .with_atom(&[0.99, 0.01], 1.0)
        .with_atom(&[0.5, 0.55], 0.5 * (low + high));
    for i in 0..3 {
        assert_eq!(f.intrinsic_gradient(&eta, i).unwrap(), vec![0.0, 0.0]);
        assert_eq!(f.extrinsic_gradient(&eta, i).unwrap(), 0.0);
        assert_eq!(f.delta_x(&eta, i).unwrap(), 0.0);
        assert_eq!(f.delta_mark(&eta, i).unwrap(), 0.0);
    }
}

#[test]
fn generator_sides_agree() {
    let mut rng = RandomStream::new(9).rng();
    let coeffs = [
        MassCoefficient::One,
        MassCoefficient::Linear,
        MassCoefficient::Quadratic,
        MassCoefficient::cubic(1.0, 0.5, 1.0).unwrap(),
    ];
    for case in 0..20 {
        let d = 1 + case % 3;
        let f = random_cylinder(&mut rng, d);
        let eta = random_configuration(&mut rng, d);
        for c in &coeffs {
            for kind in FormKind::ALL {
                let a = f.generator(kind, c, &eta);
                let b = f.generator_gamma_side(kind, c, &eta);
                assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{a} vs {b}");
            }
            let full = f.generator(FormKind::Full, c, &eta);
            let parts = f.generator(FormKind::Int, c, &eta) + f.generator(FormKind::Ext, c, &eta);
            assert!((full - parts).abs() <= 1e-12 * (1.0 + full.abs()));
        }
    }
    let empty = WeightedConfiguration::empty(Window::unit(1, 1e-6).unwrap());
    assert_eq!(
        random_cylinder(&mut rng, 1).generator(FormKind::Full, &MassCoefficient::One, &empty),
        0.0
    );
}

#[test]
fn flow_identities_and_group_law() {
    let mut rng = RandomStream::new(10).rng();
    let eta = random_configuration(&mut rng, 2);
    let v = random_field(&mut rng, 2);
    assert_eq!(flow_pushforward(&v, 0.0, &eta), eta);
    let zero = VectorField::new(vec![SpatialTest::bump(0.0, &[0.5, 0.5], 0.3).unwrap(); 2]).unwrap();
    assert_eq!(flow_pushforward(&zero, 0.7, &eta), eta);
    for _ in 0..10 {
        let v = random_field(&mut rng, 2);
        let t = rng.random_range(-0.5..0.5);
        let s = rng.random_range(-0.5..0.5);
        let once = flow_pushforward(&v, t + s, &eta);
        let twice = flow_pushforward(&v, t, &flow_pushforward(&v, s, &eta));
        for (a, b) in once.atoms().iter().zip(twice.atoms()) {
            for (p, q) in a.position().iter().zip(b.position()) {
                assert!((p - q).abs() < 1e-8, "{p} vs {q}");
            }
            assert_eq!(a.mass, b.mass);
        }
    }
}

#[test]
fn mass_scaling_group_law() {
    let mut rng = RandomStream::new(11).rng();
    let eta = random_configuration(&mut rng, 1);
    let h = SpatialTest::bump(0.9, &[0.5], 0.4).unwrap();
    assert_eq!(mass_scaling(&h, 0.0, &eta), eta);
    let zero = SpatialTest::bump(0.0, &[0.5], 0.4).unwrap();
    assert_eq!(mass_scaling(&zero, 1.3, &eta), eta);
    let once = mass_scaling(&h, 0.7, &eta);
    let twice = mass_scaling(&h, 0.3, &mass_scaling(&h, 0.4, &eta));
    for (a, b) in once.atoms().iter().zip(twice.atoms()) {
        assert!((a.mass - b.mass).abs() <= 4.0 * f64::EPSILON * a.mass);
        assert_eq!(a.position(), b.position());
    }
}

#[test]
fn directional_derivative_trivial_cases() {
    let mut rng = RandomStream::new(12).rng();
    let eta = random_configuration(&mut rng, 1);
    let constant = HatCylinder::new(OuterFunction::constant(1.0), vec![random_hat(&mut rng, 1)]).unwrap();
    let v = random_field(&mut rng, 1);
    assert_eq!(directional_derivative_int(&constant, &v, &eta), 0.0);
    let f = random_cylinder(&mut rng, 1);
    let far = VectorField::new(vec![SpatialTest::bump(1.0, &[5.0], 0.5).unwrap()]).unwrap();
    assert_eq!(directional_derivative_int(&f, &far, &eta), 0.0);
}

#[test]
fn hat_cylinder_json_round_trip() {
    let mut rng = RandomStream::new(13).rng();
    let f = random_cylinder(&mut rng, 2);
    let back: HatCylinder = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
    assert_eq!(back, f);
}
