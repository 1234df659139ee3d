//! Standard and randomized test-function instances shared by the suites,
//! the acceptance tests and the benchmarks.

use rand::Rng;

use crate::testfn::{HatCylinder, HatTerm, HatTestFunction, OuterFunction, Profile, SpatialTest};

/// Product bump on `[0,1]ᵈ` around `center` with a mass bump on `[a, b]`.
pub fn hat(weight: f64, center: &[f64], rx: f64, a: f64, b: f64) -> HatTestFunction {
    HatTestFunction::bump(weight, center, rx, a, b).expect("valid fixture")
}

fn centered(d: usize, c: f64) -> Vec<f64> {
    vec![c; d]
}

/// Two test functions with overlapping supports inside `[0,1]ᵈ × [0.3, 3.5]`.
pub fn linear_pair(d: usize) -> (HatTestFunction, HatTestFunction) {
    let phi = HatTestFunction::new(vec![
        HatTerm {
            space: SpatialTest::bump(1.0, &centered(d, 0.5), 0.48).expect("valid fixture"),
            mass: Profile::bump(1.6, 1.3).expect("valid fixture"),
        },
        HatTerm {
            space: SpatialTest::bump(-0.5, &centered(d, 0.52), 0.45).expect("valid fixture"),
            mass: Profile::bump(1.3, 1.0).expect("valid fixture"),
        },
    ])
    .expect("valid fixture");
    let psi = hat(0.8, &centered(d, 0.5), 0.46, 0.5, 3.5);
    (phi, psi)
}

/// Pair of nonlinear bounded cylinder functions used by the form checks.
pub fn standard_pair(d: usize) -> (HatCylinder, HatCylinder) {
    use OuterFunction as O;
    let (phi, psi) = linear_pair(d);
    let chi = hat(1.2, &centered(d, 0.48), 0.45, 0.3, 2.6);
    let f = HatCylinder::new(
        O::sum(vec![
            O::scale(2.0, O::tanh(O::sum(vec![O::arg(0), O::scale(0.5, O::arg(1))]))),
            O::product(vec![O::tanh(O::arg(0)), O::tanh(O::arg(1))]),
        ]),
        vec![phi.clone(), chi.clone()],
    )
    .expect("valid fixture");
    let g = HatCylinder::new(
        O::sum(vec![
            O::tanh(O::scale(1.5, O::arg(0))),
            O::scale(-0.6, O::pow(O::tanh(O::arg(1)), 2)),
        ]),
        vec![psi, chi],
    )
    .expect("valid fixture");
    (f, g)
}

/// Random product bump with masses in `[a_min, a_min + 3.5]`.
pub fn random_hat<R: Rng + ?Sized>(rng: &mut R, d: usize, a_min: f64) -> HatTestFunction {
    let terms = (0..1)
        .map(|_| {
            let center: Vec<f64> = (0..d).map(|_| rng.random_range(0.45..0.55)).collect();
            let a = a_min + rng.random_range(0.0..0.5);
            let b = a + rng.random_range(1.6..3.0);
            HatTerm {
                space: SpatialTest::bump(rng.random_range(-1.5..1.5), &center, rng.random_range(0.35..0.45)).expect("valid fixture"),
                mass: Profile::bump(0.5 * (a + b), 0.5 * (b - a)).expect("valid fixture"),
            }
        })
        .collect();
    HatTestFunction::new(terms).expect("valid fixture")
}

/// Random bounded cylinder function of two random test functions.
pub fn random_cylinder<R: Rng + ?Sized>(rng: &mut R, d: usize, a_min: f64) -> HatCylinder {
    use OuterFunction as O;
    let w: Vec<f64> = (0..3).map(|_| rng.random_range(-1.5..1.5)).collect();
    let outer = O::sum(vec![
        O::scale(w[0], O::tanh(O::sum(vec![O::arg(0), O::scale(w[1], O::arg(1))]))),
        O::product(vec![O::tanh(O::arg(1)), O::tanh(O::scale(w[2], O::arg(0)))]),
    ]);
    HatCylinder::new(outer, vec![random_hat(rng, d, a_min), random_hat(rng, d, a_min)]).expect("valid fixture")
}
