//! Finite symmetric Fock space over a weighted `ℝⁿ`.
//!
//! A degree-`k` symmetric tensor is stored by its values on sorted index
//! multisets. Inner products carry the factor `k!`:
//! `⟨T, S⟩ = k! Σ_{i₁..i_k} w_{i₁}⋯w_{i_k} T(i) S(i)`, so in multiset
//! coordinates the Gram matrix is diagonal with entries
//! `k! · (orderings of M) · Π_{i∈M} wᵢ`. The symmetric product is the
//! normalized symmetrization `u₁⊙⋯⊙u_k = (1/k!) Σ_σ u_{σ1}⊗⋯⊗u_{σk}`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::mc::McPlan;
use crate::measure::Window;
use crate::one_particle::{kappa_inner, kappa_integral, weighted_operator_norm};
use crate::testfn::HatTestFunction;
use crate::verdict::IdentityVerdict;

#[cfg(test)]
mod tests;

/// Dense checks are limited to this many one-particle dimensions.
pub const MAX_DENSE_DIM: usize = 6;
pub const MAX_DENSE_DEGREE: usize = 4;
pub const INTERTWINING_TOLERANCE: f64 = 1e-8;

/// `ℝⁿ` with `⟨u, v⟩ = Σ wᵢ uᵢ vᵢ`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedSpace {
    weights: Vec<f64>,
}

impl WeightedSpace {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Domain("weighted space needs dimension ≥ 1".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::Domain(format!("weights must be positive, got {w}")));
        }
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n])
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.weights.iter().zip(u).zip(v).map(|((w, a), b)| w * a * b).sum()
    }

    /// Operator norm of `b` on this space.
    pub fn operator_norm(&self, b: &DMatrix<f64>) -> f64 {
        weighted_operator_norm(b, &self.weights)
    }

    /// `‖WA - (WA)ᵀ‖_max / max(1, ‖WA‖_max)`.
    pub fn symmetry_defect(&self, a: &DMatrix<f64>) -> f64 {
        let w = &self.weights;
        let n = w.len();
        let (mut d, mut m) = (0.0f64, 0.0f64);
        for i in 0..n {
            for j in 0..n {
                d = d.max((w[i] * a[(i, j)] - w[j] * a[(j, i)]).abs());
                m = m.max((w[i] * a[(i, j)]).abs());
            }
        }
        d / m.max(1.0)
    }
}

/// Sorted multisets of size `k` over `0..n`, lexicographic order.
#[derive(Clone, Debug)]
struct MultisetBasis {
    sets: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
    /// Number of distinct orderings of each multiset.
    orderings: Vec<f64>,
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

impl MultisetBasis {
    fn new(n: usize, k: usize) -> Self {
        let mut sets = Vec::new();
        let mut cur = Vec::with_capacity(k);
        fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..n {
                cur.push(i);
                rec(n, k, i, cur, out);
                cur.pop();
            }
        }
        rec(n, k, 0, &mut cur, &mut sets);
        let index = sets.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let orderings = sets
            .iter()
            .map(|s| {
                let mut counts = HashMap::new();
                for &i in s {
                    *counts.entry(i).or_insert(0usize) += 1;
                }
                factorial(k) / counts.values().map(|&c| factorial(c)).product::<f64>()
            })
            .collect();
        Self { sets, index, orderings }
    }

    fn len(&self) -> usize {
        self.sets.len()
    }

    fn position(&self, idx: &[usize]) -> usize {
        let mut key = idx.to_vec();
        key.sort_unstable();
        self.index[&key]
    }
}

/// Symmetric tensor of one degree, by multiset coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensor {
    pub degree: usize,
    pub coeffs: Vec<f64>,
}

/// Element of `⊕_{k≤K}` symmetric tensor powers; `components[0]` is the
/// vacuum coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    pub components: Vec<SymTensor>,
}

impl FockVector {
    pub fn truncation(&self) -> usize {
        self.components.len() - 1
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            components: self
                .components
                .iter()
                .map(|c| SymTensor {
                    degree: c.degree,
                    coeffs: c.coeffs.iter().map(|v| a * v).collect(),
                })
                .collect(),
        }
    }

    fn flat(&self) -> Vec<f64> {
        self.components.iter().flat_map(|c| c.coeffs.iter().copied()).collect()
    }
}

/// Truncated symmetric Fock space `⊕_{k=0}^{K} ℋ^{⊙k}` over a weighted space.
#[derive(Clone, Debug)]
pub struct FockSpace {
    space: WeightedSpace,
    bases: Vec<MultisetBasis>,
}

impl FockSpace {
    pub fn new(space: WeightedSpace, truncation: usize) -> Result<Self> {
        let n = space.dim();
        if n > MAX_DENSE_DIM || truncation > MAX_DENSE_DEGREE {
            return Err(Error::Unsupported(format!(
                "dense Fock algebra supports n ≤ {MAX_DENSE_DIM} and K ≤ {MAX_DENSE_DEGREE}, got n = {n}, K = {truncation}"
            )));
        }
        let bases = (0..=truncation).map(|k| MultisetBasis::new(n, k)).collect();
        Ok(Self { space, bases })
    }

    pub fn space(&self) -> &WeightedSpace {
        &self.space
    }

    pub fn truncation(&self) -> usize {
        self.bases.len() - 1
    }

    pub fn degree_len(&self, k: usize) -> usize {
        self.bases[k].len()
    }

    /// Total dimension of the truncated space.
    pub fn len(&self) -> usize {
        self.bases.iter().map(MultisetBasis::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn zero_tensor(&self, k: usize) -> SymTensor {
        SymTensor {
            degree: k,
            coeffs: vec![0.0; self.bases[k].len()],
        }
    }

    pub fn zero(&self) -> FockVector {
        FockVector {
            components: (0..=self.truncation()).map(|k| self.zero_tensor(k)).collect(),
        }
    }

    /// Ψ.
    pub fn vacuum(&self) -> FockVector {
        let mut f = self.zero();
        f.components[0].coeffs[0] = 1.0;
        f
    }

    /// Vector with a single nonzero component.
    pub fn embed(&self, t: SymTensor) -> Result<FockVector> {
        if t.degree > self.truncation() {
            return Err(Error::Domain(format!(
                "degree {} exceeds truncation {}",
                t.degree,
                self.truncation()
            )));
        }
        let mut f = self.zero();
        let k = t.degree;
        f.components[k] = t;
        Ok(f)
    }

    fn check_vector(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.space.dim() {
            return Err(Error::Domain(format!(
                "vector of length {} in a {}-dimensional space",
                u.len(),
                self.space.dim()
            )));
        }
        Ok(())
    }

    /// `u₁ ⊙ ⋯ ⊙ u_k`.
    pub fn sym_product(&self, factors: &[&[f64]]) -> Result<SymTensor> {
        let k = factors.len();
        if k > self.truncation() {
            return Err(Error::Domain(format!("degree {k} exceeds truncation {}", self.truncation())));
        }
        for u in factors {
            self.check_vector(u)?;
        }
        let basis = &self.bases[k];
        let perms = permutations(k);
        let coeffs = basis
            .sets
            .iter()
            .map(|m| {
                perms
                    .iter()
                    .map(|p| (0..k).map(|l| factors[p[l]][m[l]]).product::<f64>())
                    .sum::<f64>()
                    / perms.len() as f64
            })
            .collect();
        Ok(SymTensor { degree: k, coeffs })
    }

    /// Diagonal of the Gram matrix in degree `k`.
    fn gram_diagonal(&self, k: usize) -> Vec<f64> {
        let w = self.space.weights();
        let basis = &self.bases[k];
        basis
            .sets
            .iter()
            .zip(&basis.orderings)
            .map(|(m, o)| factorial(k) * o * m.iter().map(|&i| w[i]).product::<f64>())
            .collect()
    }

    pub fn tensor_inner(&self, a: &SymTensor, b: &SymTensor) -> f64 {
        if a.degree != b.degree {
            return 0.0;
        }
        self.gram_diagonal(a.degree)
            .iter()
            .zip(&a.coeffs)
            .zip(&b.coeffs)
            .map(|((g, x), y)| g * x * y)
            .sum()
    }

    pub fn inner(&self, f: &FockVector, g: &FockVector) -> f64 {
        f.components.iter().zip(&g.components).map(|(a, b)| self.tensor_inner(a, b)).sum()
    }

    pub fn norm(&self, f: &FockVector) -> f64 {
        self.inner(f, f).sqrt()
    }

    fn full(&self, t: &SymTensor) -> Vec<f64> {
        let n = self.space.dim();
        let k = t.degree;
        let basis = &self.bases[k];
        (0..n.pow(k as u32))
            .map(|flat| t.coeffs[basis.position(&digits(flat, n, k))])
            .collect()
    }

    fn tensor_from_full(&self, k: usize, full: &[f64]) -> SymTensor {
        let n = self.space.dim();
        let coeffs = self.bases[k].sets.iter().map(|m| full[undigits(m, n)]).collect();
        SymTensor { degree: k, coeffs }
    }

    /// `(∂ᵢT)(j₂..j_k) = k · T(i, j₂..j_k)`, so `∂ᵢ(u⊙v) = u(i)v + v(i)u`.
    pub fn annihilation(&self, i: usize, f: &FockVector) -> Result<FockVector> {
        if i >= self.space.dim() {
            return Err(Error::Domain(format!("basis index {i} out of range")));
        }
        let mut out = self.zero();
        for k in 1..=self.truncation() {
            let t = &f.components[k];
            let coeffs = self.bases[k - 1]
                .sets
                .iter()
                .map(|m| {
                    let mut idx = m.clone();
                    idx.push(i);
                    k as f64 * t.coeffs[self.bases[k].position(&idx)]
                })
                .collect();
            out.components[k - 1] = SymTensor { degree: k - 1, coeffs };
        }
        Ok(out)
    }

    /// Adjoint of [`FockSpace::annihilation`]: `g ↦ (1/wᵢ) eᵢ ⊙ g`.
    /// The top degree is dropped.
    pub fn creation(&self, i: usize, f: &FockVector) -> Result<FockVector> {
        if i >= self.space.dim() {
            return Err(Error::Domain(format!("basis index {i} out of range")));
        }
        let wi = self.space.weights()[i];
        let mut out = self.zero();
        for k in 1..=self.truncation() {
            let s = &f.components[k - 1];
            let coeffs = self.bases[k]
                .sets
                .iter()
                .map(|m| {
                    // (eᵢ⊙S)(m) = (1/k) Σ_l δ_{i,m_l} S(m without l)
                    let mut acc = 0.0;
                    for l in 0..k {
                        if m[l] == i {
                            let mut rest = m.clone();
                            rest.remove(l);
                            acc += s.coeffs[self.bases[k - 1].position(&rest)];
                        }
                    }
                    acc / (k as f64 * wi)
                })
                .collect();
            out.components[k] = SymTensor { degree: k, coeffs };
        }
        Ok(out)
    }

    fn check_matrix(&self, a: &DMatrix<f64>) -> Result<()> {
        let n = self.space.dim();
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::Domain(format!("expected a {n}x{n} matrix, got {}x{}", a.nrows(), a.ncols())));
        }
        Ok(())
    }

    /// `Σ_slots (A in one slot)`; vanishes on Ψ.
    pub fn d_exp(&self, a: &DMatrix<f64>, f: &FockVector) -> Result<FockVector> {
        self.check_matrix(a)?;
        let n = self.space.dim();
        let mut out = self.zero();
        for k in 1..=self.truncation() {
            let full = self.full(&f.components[k]);
            let mut acc = vec![0.0; full.len()];
            for slot in 0..k {
                for (o, v) in acc.iter_mut().zip(apply_axis(a, &full, n, k, slot)) {
                    *o += v;
                }
            }
            out.components[k] = self.tensor_from_full(k, &acc);
        }
        Ok(out)
    }

    /// `B^{⊗k}` on each degree; `Exp(B)Ψ = Ψ`. Requires `‖B‖_W ≤ 1 + 1e-12`.
    pub fn exp(&self, b: &DMatrix<f64>, f: &FockVector) -> Result<FockVector> {
        self.check_matrix(b)?;
        let norm = self.space.operator_norm(b);
        if norm > 1.0 + 1e-12 {
            return Err(Error::Domain(format!("second quantization needs a contraction, got norm {norm}")));
        }
        Ok(self.exp_unchecked(b, f))
    }

    fn exp_unchecked(&self, b: &DMatrix<f64>, f: &FockVector) -> FockVector {
        let n = self.space.dim();
        let mut out = self.zero();
        out.components[0] = f.components[0].clone();
        for k in 1..=self.truncation() {
            let mut full = self.full(&f.components[k]);
            for slot in 0..k {
                full = apply_axis(b, &full, n, k, slot);
            }
            out.components[k] = self.tensor_from_full(k, &full);
        }
        out
    }

    fn basis_vector(&self, flat: usize) -> FockVector {
        let mut f = self.zero();
        let mut rest = flat;
        for c in &mut f.components {
            if rest < c.coeffs.len() {
                c.coeffs[rest] = 1.0;
                break;
            }
            rest -= c.coeffs.len();
        }
        f
    }

    /// Dense matrix of a linear map in multiset coordinates.
    pub fn dense(&self, op: impl Fn(&FockVector) -> FockVector) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            let col = op(&self.basis_vector(j)).flat();
            m.column_mut(j).copy_from(&DVector::from_vec(col));
        }
        m
    }

    pub fn d_exp_matrix(&self, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_matrix(a)?;
        Ok(self.dense(|f| self.d_exp(a, f).expect("checked dimensions")))
    }

    pub fn exp_matrix(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.exp(b, &self.vacuum())?;
        Ok(self.dense(|f| self.exp_unchecked(b, f)))
    }

    /// Gram weights of the whole truncated space, multiset coordinates.
    pub fn gram(&self) -> Vec<f64> {
        (0..=self.truncation()).flat_map(|k| self.gram_diagonal(k)).collect()
    }

    /// Operator norm on the Fock space.
    pub fn operator_norm(&self, m: &DMatrix<f64>) -> f64 {
        weighted_operator_norm(m, &self.gram())
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Base-`n` digits of `flat`, most significant first.
fn digits(mut flat: usize, n: usize, k: usize) -> Vec<usize> {
    let mut d = vec![0; k];
    for slot in (0..k).rev() {
        d[slot] = flat % n;
        flat /= n;
    }
    d
}

fn undigits(d: &[usize], n: usize) -> usize {
    d.iter().fold(0, |acc, &x| acc * n + x)
}

/// Applies `a` along tensor axis `slot` of a full `n^k` array.
fn apply_axis(a: &DMatrix<f64>, full: &[f64], n: usize, k: usize, slot: usize) -> Vec<f64> {
    let stride = n.pow((k - 1 - slot) as u32);
    let mut out = vec![0.0; full.len()];
    for (flat, o) in out.iter_mut().enumerate() {
        let i = (flat / stride) % n;
        let base = flat - i * stride;
        *o = (0..n).map(|j| a[(i, j)] * full[base + j * stride]).sum();
    }
    out
}

/// Largest eigenvalue of the W-symmetrization of `a`.
fn top_eigenvalue(space: &WeightedSpace, a: &DMatrix<f64>) -> f64 {
    let w = space.weights();
    let n = w.len();
    let s = DMatrix::from_fn(n, n, |i, j| {
        0.5 * (w[i].sqrt() * a[(i, j)] / w[j].sqrt() + w[j].sqrt() * a[(j, i)] / w[i].sqrt())
    });
    SymmetricEigen::new(s).eigenvalues.max()
}

/// `exp(t · dExp(A))` against `Exp(e^{tA})` as dense matrices on the
/// truncated space; passes iff the largest entry gap is at most `1e-8`.
pub fn verify_intertwining(space: &WeightedSpace, a: &DMatrix<f64>, t: f64, truncation: usize) -> Result<IdentityVerdict> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("time must be nonnegative, got {t}")));
    }
    let fock = FockSpace::new(space.clone(), truncation)?;
    fock.check_matrix(a)?;
    let defect = space.symmetry_defect(a);
    if defect > 1e-10 {
        return Err(Error::Domain(format!("generator is not W-symmetric (defect {defect:e})")));
    }
    let top = top_eigenvalue(space, a);
    if top > 1e-10 * a.abs().max().max(1.0) {
        return Err(Error::Domain(format!(
            "generator is not negative semidefinite (top eigenvalue {top:e})"
        )));
    }
    let started = std::time::Instant::now();
    let lhs = (fock.d_exp_matrix(a)? * t).exp();
    let rhs = fock.exp_matrix(&(a * t).exp())?;
    let gap = (&lhs - &rhs).abs().max();
    Ok(IdentityVerdict::matrix("fock-intertwining", gap, INTERTWINING_TOLERANCE)
        .with_n(fock.len() as u64)
        .with_note(format!("n={} K={truncation} t={t}", space.dim()))
        .with_runtime(started))
}

/// `Cov(⟨⟨φ,γ⟩⟩, ⟨⟨ψ,γ⟩⟩)` over marked Poisson samples against `(φ, ψ)_ϰ`.
///
/// The means are taken from quadrature of `∫φ dϰ`, so the per-sample
/// product of centered pairings is an unbiased covariance estimate.
pub fn first_chaos_isometry(phi: &HatTestFunction, psi: &HatTestFunction, window: &Window, plan: &McPlan) -> Result<IdentityVerdict> {
    crate::forms::check_mass_floor(window, &[phi, psi])?;
    for t in [phi, psi] {
        if let Some((bx, _)) = t.support() {
            if !window.region.contains_box(&bx) {
                return Err(Error::OutsideWindow("test-function support leaves the window".into()));
            }
        }
    }
    let started = std::time::Instant::now();
    let mean_phi = kappa_integral(phi)?;
    let mean_psi = kappa_integral(psi)?;
    let exact = kappa_inner(phi, psi)?;
    let sampler = crate::measure::GammaSampler::new(window.clone())?;
    let acc = plan.run(1, |rng, out| {
        let eta = sampler.sample(rng);
        let a = crate::testfn::pairing_hat(phi, &eta) - mean_phi;
        let b = crate::testfn::pairing_hat(psi, &eta) - mean_psi;
        out[0] = a * b;
    });
    let r = plan.report(&acc, &crate::mc::pick(1, 0));
    Ok(IdentityVerdict::statistical(
        "first-chaos-isometry",
        r.value,
        exact,
        r.std_error,
        crate::forms::QUADRATURE_TOLERANCE,
    )
    .with_n(r.n_samples)
    .with_seed(r.seed)
    .with_note("checks the first-chaos covariance only; the full chaos isomorphism is not constructed")
    .with_runtime(started))
}

/// Dense matrix as CSV rows.
pub fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.16e}", m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
