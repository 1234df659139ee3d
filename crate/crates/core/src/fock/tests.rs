use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

use super::*;
use crate::fixtures;
use crate::one_particle::WeightedGrid;
use crate::rng::RandomStream;
use crate::testfn::FormKind;
use crate::testfn::MassCoefficient;

fn space(w: &[f64]) -> WeightedSpace {
    WeightedSpace::new(w.to_vec()).unwrap()
}

fn random_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn random_fock<R: Rng>(rng: &mut R, fock: &FockSpace) -> FockVector {
    let mut f = fock.zero();
    for c in &mut f.components {
        for v in &mut c.coeffs {
            *v = rng.random_range(-1.0..1.0);
        }
    }
    f
}

/// `W^{-1/2} C W^{1/2}` with `C` scaled to spectral norm `scale`.
fn random_contraction<R: Rng>(rng: &mut R, w: &[f64], scale: f64) -> DMatrix<f64> {
    let n = w.len();
    let c: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let c = &c * (scale / c.singular_values().max());
    DMatrix::from_fn(n, n, |i, j| c[(i, j)] * w[j].sqrt() / w[i].sqrt())
}

/// `W^{-1} S` with `S` symmetric negative semidefinite.
fn random_generator<R: Rng>(rng: &mut R, w: &[f64]) -> DMatrix<f64> {
    let n = w.len();
    let q = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let s = -(q.transpose() * q);
    DMatrix::from_fn(n, n, |i, j| s[(i, j)] / w[i])
}

fn permanent(m: &[Vec<f64>]) -> f64 {
    let k = m.len();
    permutations(k).iter().map(|p| (0..k).map(|l| m[l][p[l]]).product::<f64>()).sum()
}

#[test]
fn square_of_a_vector_has_norm_two_inner_squared() {
    let sp = space(&[0.5, 1.0, 2.0]);
    let fock = FockSpace::new(sp.clone(), 2).unwrap();
    let u = [0.3, -1.2, 0.7];
    let uu = fock.sym_product(&[&u, &u]).unwrap();
    let expected = 2.0 * sp.inner(&u, &u).powi(2);
    assert!((fock.tensor_inner(&uu, &uu) - expected).abs() < 1e-12 * expected);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn product_inner_is_gram_permanent(seed in any::<u64>(), k in 1usize..=3) {
        let mut rng = RandomStream::new(seed).rng();
        let w: Vec<f64> = (0..3).map(|_| rng.random_range(0.2..2.0)).collect();
        let sp = space(&w);
        let fock = FockSpace::new(sp.clone(), 3).unwrap();
        let us: Vec<Vec<f64>> = (0..k).map(|_| random_vec(&mut rng, 3)).collect();
        let vs: Vec<Vec<f64>> = (0..k).map(|_| random_vec(&mut rng, 3)).collect();
        let a = fock.sym_product(&us.iter().map(Vec::as_slice).collect::<Vec<_>>()).unwrap();
        let b = fock.sym_product(&vs.iter().map(Vec::as_slice).collect::<Vec<_>>()).unwrap();
        let gram: Vec<Vec<f64>> = us.iter().map(|u| vs.iter().map(|v| sp.inner(u, v)).collect()).collect();
        let expected = permanent(&gram);
        prop_assert!((fock.tensor_inner(&a, &b) - expected).abs() < 1e-12 * (1.0 + expected.abs()));
    }

    #[test]
    fn product_is_symmetric(seed in any::<u64>()) {
        let mut rng = RandomStream::new(seed).rng();
        let fock = FockSpace::new(WeightedSpace::uniform(4).unwrap(), 3).unwrap();
        let (u, v, x) = (random_vec(&mut rng, 4), random_vec(&mut rng, 4), random_vec(&mut rng, 4));
        let a = fock.sym_product(&[&u, &v, &x]).unwrap();
        let b = fock.sym_product(&[&x, &u, &v]).unwrap();
        for (p, q) in a.coeffs.iter().zip(&b.coeffs) {
            prop_assert!((p - q).abs() < 1e-14);
        }
    }
}

#[test]
fn annihilation_on_products() {
    let fock = FockSpace::new(space(&[1.0, 0.5, 3.0]), 3).unwrap();
    let u = [1.0, 2.0, -1.0];
    let v = [0.5, -0.3, 0.8];
    let uv = fock.embed(fock.sym_product(&[&u, &v]).unwrap()).unwrap();
    for i in 0..3 {
        let got = fock.annihilation(i, &uv).unwrap();
        let expected: Vec<f64> = (0..3).map(|j| u[i] * v[j] + v[i] * u[j]).collect();
        let expected = fock.sym_product(&[&expected]).unwrap();
        for (a, b) in got.components[1].coeffs.iter().zip(&expected.coeffs) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(got
            .components
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != 1)
            .all(|(_, c)| c.coeffs.iter().all(|x| *x == 0.0)));
    }
    let zero = fock.annihilation(1, &fock.vacuum()).unwrap();
    assert_eq!(fock.norm(&zero), 0.0);
    assert!(fock.annihilation(3, &uv).is_err());
    assert!(fock.sym_product(&[&u, &v, &u, &v]).is_err());
}

#[test]
fn annihilation_adjoint_by_brute_force() {
    let mut rng = RandomStream::new(11).rng();
    let fock = FockSpace::new(space(&[0.7, 1.3, 2.1]), 2).unwrap();
    for _ in 0..10 {
        let f = random_fock(&mut rng, &fock);
        let g = random_fock(&mut rng, &fock);
        for i in 0..3 {
            let lhs = fock.inner(&fock.annihilation(i, &f).unwrap(), &g);
            let rhs = fock.inner(&f, &fock.creation(i, &g).unwrap());
            assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
        }
    }
}

#[test]
fn second_quantization_is_functorial_and_contractive() {
    let mut rng = RandomStream::new(5).rng();
    let w = [0.4, 1.0, 1.7, 0.9];
    let fock = FockSpace::new(space(&w), 3).unwrap();
    let id = DMatrix::identity(fock.len(), fock.len());
    assert!((fock.exp_matrix(&DMatrix::identity(4, 4)).unwrap() - &id).abs().max() < 1e-15);
    for _ in 0..20 {
        let scale = rng.random_range(0.2..1.0);
        let b1 = random_contraction(&mut rng, &w, scale);
        let b2 = random_contraction(&mut rng, &w, 1.0);
        let e1 = fock.exp_matrix(&b1).unwrap();
        let e2 = fock.exp_matrix(&b2).unwrap();
        let e12 = fock.exp_matrix(&(&b1 * &b2)).unwrap();
        assert!((e12 - &e1 * &e2).abs().max() < 1e-10);
        assert!(fock.operator_norm(&e1) <= 1.0 + 1e-10);
        assert!(fock.operator_norm(&e2) <= 1.0 + 1e-10);
        let psi = fock.exp(&b1, &fock.vacuum()).unwrap();
        assert_eq!(psi, fock.vacuum());
    }
    let big = random_contraction(&mut rng, &w, 1.01);
    assert!(fock.exp(&big, &fock.vacuum()).is_err());
}

#[test]
fn first_chaos_sees_the_one_particle_operator() {
    let mut rng = RandomStream::new(8).rng();
    let w = [1.0, 2.0, 0.5];
    let fock = FockSpace::new(space(&w), 2).unwrap();
    let b = random_contraction(&mut rng, &w, 0.9);
    let a = random_generator(&mut rng, &w);
    let u = random_vec(&mut rng, 3);
    let f = fock.embed(fock.sym_product(&[&u]).unwrap()).unwrap();
    let bu: Vec<f64> = (&b * nalgebra::DVector::from_column_slice(&u)).iter().copied().collect();
    let au: Vec<f64> = (&a * nalgebra::DVector::from_column_slice(&u)).iter().copied().collect();
    assert_eq!(fock.exp(&b, &f).unwrap().components[1].coeffs.len(), 3);
    for (x, y) in fock.exp(&b, &f).unwrap().components[1].coeffs.iter().zip(&bu) {
        assert!((x - y).abs() < 1e-14);
    }
    for (x, y) in fock.d_exp(&a, &f).unwrap().components[1].coeffs.iter().zip(&au) {
        assert!((x - y).abs() < 1e-13);
    }
}

#[test]
fn d_exp_of_diagonal_sums_over_slots() {
    let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, -0.5, -3.0]));
    let fock = FockSpace::new(space(&[1.0, 2.0, 3.0]), 4).unwrap();
    let m = fock.d_exp_matrix(&a).unwrap();
    let mut offset = 0;
    for k in 0..=4 {
        for (j, set) in fock.bases[k].sets.iter().enumerate() {
            let expected: f64 = set.iter().map(|&i| a[(i, i)]).sum();
            assert!((m[(offset + j, offset + j)] - expected).abs() < 1e-14);
        }
        offset += fock.degree_len(k);
    }
    assert!((m.clone() - DMatrix::from_diagonal(&m.diagonal())).abs().max() == 0.0);
}

#[test]
fn d_exp_is_the_derivative_of_exp() {
    let mut rng = RandomStream::new(21).rng();
    let w = [0.8, 1.1, 1.9];
    let fock = FockSpace::new(space(&w), 3).unwrap();
    let a = random_generator(&mut rng, &w);
    let h = 1e-4;
    // e^{-hA} may expand, so build it through the unchecked path
    let plus = fock.dense(|f| fock.exp_unchecked(&(&a * h).exp(), f));
    let minus = fock.dense(|f| fock.exp_unchecked(&(&a * -h).exp(), f));
    let fd = (plus - minus) / (2.0 * h);
    let gap = (fd - fock.d_exp_matrix(&a).unwrap()).abs().max();
    assert!(gap < 1e-6, "gap {gap}");
}

#[test]
fn intertwining_on_discretized_ext_generator() {
    let grid = WeightedGrid::marks(0.05, 6.0, 4).unwrap();
    let op = crate::one_particle::discretize_generator(FormKind::Ext, &MassCoefficient::One, &grid).unwrap();
    let sp = WeightedSpace::new(op.weights.clone()).unwrap();
    let v = verify_intertwining(&sp, &op.matrix, 0.5, 3).unwrap();
    assert!(v.pass, "{v:?}");
    assert!(v.discrepancy < 1e-8);
}

#[test]
fn intertwining_on_random_generators() {
    let mut rng = RandomStream::new(3).rng();
    for n in [2, 4, 6] {
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.3..2.0)).collect();
        let a = random_generator(&mut rng, &w);
        let v = verify_intertwining(&space(&w), &a, 0.7, 3).unwrap();
        assert!(v.pass, "n={n}: {v:?}");
    }
}

#[test]
fn intertwining_rejects_bad_generators() {
    let sp = WeightedSpace::uniform(2).unwrap();
    let skew = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]);
    assert!(verify_intertwining(&sp, &skew, 1.0, 2).is_err());
    let positive = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    assert!(verify_intertwining(&sp, &positive, 1.0, 2).is_err());
    assert!(verify_intertwining(&WeightedSpace::uniform(7).unwrap(), &DMatrix::zeros(7, 7), 1.0, 2).is_err());
    assert!(verify_intertwining(&sp, &DMatrix::zeros(2, 2), -1.0, 2).is_err());
}

#[test]
fn first_chaos_isometry_matches_kappa_inner() {
    let (phi, psi) = fixtures::linear_pair(1);
    let window = Window::unit(1, 1e-6).unwrap();
    let plan = McPlan::single(40_000, 17);
    let v = first_chaos_isometry(&phi, &psi, &window, &plan).unwrap();
    assert!(v.pass, "{v:?}");
    assert!(v.rhs.abs() > 10.0 * v.se, "identity should be resolved: {v:?}");
}

#[test]
fn first_chaos_isometry_for_disjoint_supports() {
    let phi = fixtures::hat(1.0, &[0.25], 0.2, 0.5, 2.0);
    let psi = fixtures::hat(1.0, &[0.75], 0.2, 0.5, 2.0);
    let window = Window::unit(1, 1e-6).unwrap();
    let v = first_chaos_isometry(&phi, &psi, &window, &McPlan::single(20_000, 4)).unwrap();
    assert_eq!(v.rhs, 0.0);
    assert!(v.pass, "{v:?}");
}

#[test]
fn csv_has_one_row_per_matrix_row() {
    let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    let text = matrix_csv(&m);
    assert_eq!(text.lines().count(), 2);
    assert_eq!(text.lines().next().unwrap().split(',').count(), 3);
}
