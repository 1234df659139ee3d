use super::cylinder::Cylinder;
use super::profile::{SpatialTest, VectorField};
use crate::measure::{Atom, WeightedConfiguration, MAX_DIM};

pub const FLOW_SUBSTEPS: usize = 64;
pub const FD_STEP: f64 = 1e-4;

fn rk4(v: &VectorField, x: &mut [f64; MAX_DIM], d: usize, t: f64) {
    let h = t / FLOW_SUBSTEPS as f64;
    let mut k = [[0.0; MAX_DIM]; 4];
    let mut y = [0.0; MAX_DIM];
    for _ in 0..FLOW_SUBSTEPS {
        v.eval(&x[..d], &mut k[0][..d]);
        for i in 0..d {
            y[i] = x[i] + 0.5 * h * k[0][i];
        }
        v.eval(&y[..d], &mut k[1][..d]);
        for i in 0..d {
            y[i] = x[i] + 0.5 * h * k[1][i];
        }
        v.eval(&y[..d], &mut k[2][..d]);
        for i in 0..d {
            y[i] = x[i] + h * k[2][i];
        }
        v.eval(&y[..d], &mut k[3][..d]);
        for i in 0..d {
            x[i] += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
        }
    }
}

/// Image of η under the time-`t` flow of `v`; masses travel with their atoms.
pub fn flow_pushforward(v: &VectorField, t: f64, eta: &WeightedConfiguration) -> WeightedConfiguration {
    let d = eta.dim();
    let atoms = eta
        .atoms()
        .iter()
        .map(|a| {
            let mut x = a.position_array();
            if t != 0.0 {
                rk4(v, &mut x, d, t);
            }
            Atom::raw(x, d, a.mass)
        })
        .collect();
    WeightedConfiguration::from_parts(eta.window().clone(), atoms)
}

/// `e^{t h(x)} dη`: every mass multiplied by `e^{t h(x)}`.
pub fn mass_scaling(h: &SpatialTest, t: f64, eta: &WeightedConfiguration) -> WeightedConfiguration {
    let atoms = eta
        .atoms()
        .iter()
        .map(|a| Atom::raw(a.position_array(), a.dim(), a.mass * (t * h.value(a.position())).exp()))
        .collect();
    WeightedConfiguration::from_parts(eta.window().clone(), atoms)
}

/// Central difference at 0 with one Richardson step.
pub fn richardson_derivative(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    let d = |h: f64| (f(h) - f(-h)) / (2.0 * h);
    (4.0 * d(0.5 * h) - d(h)) / 3.0
}

/// `(d/dt) F(φₜᵛ η)` at `t = 0`.
pub fn directional_derivative_int<C: Cylinder + ?Sized>(f: &C, v: &VectorField, eta: &WeightedConfiguration) -> f64 {
    richardson_derivative(|t| f.value(&flow_pushforward(v, t, eta)), FD_STEP)
}

/// `(d/dt) F(e^{th} η)` at `t = 0`.
pub fn directional_derivative_ext<C: Cylinder + ?Sized>(f: &C, h: &SpatialTest, eta: &WeightedConfiguration) -> f64 {
    richardson_derivative(|t| f.value(&mass_scaling(h, t, eta)), FD_STEP)
}

/// `Σ s(x) ⟨∇^int F(η, x), v(x)⟩`.
pub fn tangent_pairing_int<C: Cylinder + ?Sized>(f: &C, v: &VectorField, eta: &WeightedConfiguration) -> f64 {
    let d = eta.dim();
    let mut vx = [0.0; MAX_DIM];
    (0..eta.len())
        .map(|i| {
            let a = &eta.atoms()[i];
            v.eval(a.position(), &mut vx[..d]);
            let g = f.intrinsic_gradient(eta, i).expect("index in range");
            a.mass * g.iter().zip(&vx[..d]).map(|(p, q)| p * q).sum::<f64>()
        })
        .sum()
}

/// `Σ s(x) ∇^ext F(η, x) h(x)`.
pub fn tangent_pairing_ext<C: Cylinder + ?Sized>(f: &C, h: &SpatialTest, eta: &WeightedConfiguration) -> f64 {
    (0..eta.len())
        .map(|i| {
            let a = &eta.atoms()[i];
            a.mass * f.extrinsic_gradient(eta, i).expect("index in range") * h.value(a.position())
        })
        .sum()
}
