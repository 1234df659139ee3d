//! Gamma random measure on a compact window.
//!
//! The gamma measure is the image of a Poisson point process on
//! `X × (0, ∞)` with intensity `dx ⊗ s⁻¹e⁻ˢ ds` under the map that turns a
//! marked point `(x, s)` into the atom `s δₓ`. The intensity is infinite
//! near `s = 0`, so sampling keeps only masses above a floor `ε`; on a box
//! of volume `V` the number of atoms is then Poisson with mean `V·E₁(ε)`.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::exp_integral_e1;

pub const MAX_DIM: usize = 3;
pub const DEFAULT_MASS_FLOOR: f64 = 1e-6;

/// Axis-aligned closed box in ℝᵈ, `1 ≤ d ≤ 3`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SpatialBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() || lo.len() > MAX_DIM {
            return Err(Error::InvalidWindow(format!(
                "box needs matching bounds of dimension 1..=3, got {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        for (a, b) in lo.iter().zip(&hi) {
            if !a.is_finite() || !b.is_finite() || a > b {
                return Err(Error::InvalidWindow(format!("bad interval [{a}, {b}]")));
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim], vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    pub fn contains_box(&self, other: &SpatialBox) -> bool {
        self.dim() == other.dim() && (0..self.dim()).all(|k| other.lo[k] >= self.lo[k] && other.hi[k] <= self.hi[k])
    }

    /// Smallest box containing both.
    pub fn union(&self, other: &SpatialBox) -> SpatialBox {
        SpatialBox {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| a.min(*b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| a.max(*b)).collect(),
        }
    }

    pub fn intersection(&self, other: &SpatialBox) -> Option<SpatialBox> {
        let lo: Vec<f64> = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi: Vec<f64> = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        if lo.iter().zip(&hi).all(|(a, b)| a < b) {
            Some(SpatialBox { lo, hi })
        } else {
            None
        }
    }
}

/// Sampling window: a spatial box and a mass floor `ε > 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub region: SpatialBox,
    pub mass_floor: f64,
}

impl Window {
    pub fn new(region: SpatialBox, mass_floor: f64) -> Result<Self> {
        if !(mass_floor > 0.0) || !mass_floor.is_finite() {
            return Err(Error::InvalidWindow(format!("mass floor must be positive, got {mass_floor}")));
        }
        Ok(Self { region, mass_floor })
    }

    pub fn unit(dim: usize, mass_floor: f64) -> Result<Self> {
        Self::new(SpatialBox::unit(dim)?, mass_floor)
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    pub fn volume(&self) -> f64 {
        self.region.volume()
    }
}

/// One atom `s δₓ`; equivalently the marked point `(x, s)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pos: [f64; MAX_DIM],
    dim: u8,
    pub mass: f64,
}

impl Atom {
    pub fn new(position: &[f64], mass: f64) -> Result<Self> {
        if position.is_empty() || position.len() > MAX_DIM {
            return Err(Error::InvalidConfiguration(format!(
                "atom dimension {} outside 1..=3",
                position.len()
            )));
        }
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidConfiguration(format!("atom mass must be positive, got {mass}")));
        }
        if position.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfiguration("atom position must be finite".into()));
        }
        let mut pos = [0.0; MAX_DIM];
        pos[..position.len()].copy_from_slice(position);
        Ok(Self {
            pos,
            dim: position.len() as u8,
            mass,
        })
    }

    pub(crate) fn raw(pos: [f64; MAX_DIM], dim: usize, mass: f64) -> Self {
        Self { pos, dim: dim as u8, mass }
    }

    pub fn position(&self) -> &[f64] {
        &self.pos[..self.dim as usize]
    }

    pub(crate) fn position_array(&self) -> [f64; MAX_DIM] {
        self.pos
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }
}

/// Finite restriction of a discrete Radon measure `η = Σ sᵢ δ_{xᵢ}` to a window.
///
/// Atom order carries no meaning; equality is multiset equality with exact
/// position match.
#[derive(Clone, Debug)]
pub struct WeightedConfiguration {
    atoms: Vec<Atom>,
    window: Window,
}

impl PartialEq for WeightedConfiguration {
    fn eq(&self, other: &Self) -> bool {
        if self.window != other.window || self.atoms.len() != other.atoms.len() {
            return false;
        }
        let key = |a: &Atom| (a.pos.map(f64::to_bits), a.mass.to_bits());
        let mut x: Vec<_> = self.atoms.iter().map(key).collect();
        let mut y: Vec<_> = other.atoms.iter().map(key).collect();
        x.sort_unstable();
        y.sort_unstable();
        x == y
    }
}

impl WeightedConfiguration {
    /// Validated constructor: positions inside the window and pairwise
    /// distinct, masses at or above the window's floor.
    pub fn new(window: Window, atoms: Vec<Atom>) -> Result<Self> {
        let d = window.dim();
        for a in &atoms {
            if a.dim() != d {
                return Err(Error::InvalidConfiguration(format!(
                    "atom of dimension {} in a {d}-dimensional window",
                    a.dim()
                )));
            }
            if !window.region.contains(a.position()) {
                return Err(Error::OutsideWindow(format!("atom at {:?}", a.position())));
            }
            if a.mass < window.mass_floor {
                return Err(Error::InvalidConfiguration(format!(
                    "atom mass {} below the window floor {}",
                    a.mass, window.mass_floor
                )));
            }
        }
        let cfg = Self { atoms, window };
        if !cfg.is_pinpointing() {
            return Err(Error::InvalidConfiguration("two atoms share a position".into()));
        }
        Ok(cfg)
    }

    pub fn empty(window: Window) -> Self {
        Self { atoms: Vec::new(), window }
    }

    /// Configuration produced by a transformation of a valid one; positions
    /// and masses may leave the window or the floor.
    pub(crate) fn from_parts(window: Window, atoms: Vec<Atom>) -> Self {
        Self { atoms, window }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    pub fn atom(&self, index: usize) -> Result<&Atom> {
        self.atoms.get(index).ok_or(Error::AtomIndex {
            index,
            len: self.atoms.len(),
        })
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// No two atoms share a spatial position.
    pub fn is_pinpointing(&self) -> bool {
        let mut keys: Vec<[u64; MAX_DIM]> = self.atoms.iter().map(|a| a.pos.map(f64::to_bits)).collect();
        keys.sort_unstable();
        keys.windows(2).all(|w| w[0] != w[1])
    }

    /// `η + s δₓ`. The new atom is not checked against the window.
    pub fn with_atom(&self, position: &[f64], mass: f64) -> Self {
        let mut atoms = self.atoms.clone();
        let mut pos = [0.0; MAX_DIM];
        pos[..position.len()].copy_from_slice(position);
        atoms.push(Atom::raw(pos, self.dim(), mass));
        Self::from_parts(self.window.clone(), atoms)
    }

    /// `η - s(x)δₓ + s(x)δ_y`: atom `index` moved to `position`.
    pub fn with_moved_atom(&self, index: usize, position: &[f64]) -> Result<Self> {
        self.atom(index)?;
        let mut atoms = self.atoms.clone();
        atoms[index].pos[..position.len()].copy_from_slice(position);
        Ok(Self::from_parts(self.window.clone(), atoms))
    }

    /// `η - s(x)δₓ + u δₓ`: atom `index` given mass `mass`.
    pub fn with_mass(&self, index: usize, mass: f64) -> Result<Self> {
        self.atom(index)?;
        let mut atoms = self.atoms.clone();
        atoms[index].mass = mass;
        Ok(Self::from_parts(self.window.clone(), atoms))
    }

    /// The marked points `(x, s)` of `𝓡⁻¹η`.
    pub fn to_marked_points(&self) -> Vec<(Vec<f64>, f64)> {
        self.atoms.iter().map(|a| (a.position().to_vec(), a.mass)).collect()
    }

    /// `𝓡γ` for a pinpointing marked configuration γ.
    pub fn from_marked_points(window: Window, points: &[(Vec<f64>, f64)]) -> Result<Self> {
        let atoms = points.iter().map(|(x, s)| Atom::new(x, *s)).collect::<Result<Vec<_>>>()?;
        Self::new(window, atoms)
    }

    /// CSV with header `x1,...,xd,mass`, 17 significant digits per value.
    pub fn to_csv(&self) -> String {
        let d = self.dim();
        let mut out = String::new();
        let header: Vec<String> = (1..=d)
            .map(|k| format!("x{k}"))
            .chain(std::iter::once("mass".to_string()))
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for a in &self.atoms {
            let row: Vec<String> = a
                .position()
                .iter()
                .chain(std::iter::once(&a.mass))
                .map(|v| format!("{v:.16e}"))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(window: Window, text: &str) -> Result<Self> {
        let d = window.dim();
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
        if header.split(',').count() != d + 1 {
            return Err(Error::Parse(format!("header `{header}` does not match dimension {d}")));
        }
        let mut atoms = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let vals = line
                .split(',')
                .map(|f| f.trim().parse::<f64>().map_err(|e| Error::Parse(format!("`{f}`: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            if vals.len() != d + 1 {
                return Err(Error::Parse(format!("row `{line}` has {} fields", vals.len())));
            }
            atoms.push(Atom::new(&vals[..d], vals[d])?);
        }
        Self::new(window, atoms)
    }
}

/// The Lévy intensity `dλ(s) = s⁻¹e⁻ˢ ds` on `(0, ∞)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LevyIntensity;

impl LevyIntensity {
    pub fn density(&self, s: f64) -> f64 {
        if s > 0.0 {
            (-s).exp() / s
        } else {
            0.0
        }
    }

    /// `λ([eps, ∞)) = E₁(eps)`.
    pub fn tail_mass(&self, eps: f64) -> Result<f64> {
        exp_integral_e1(eps)
    }

    /// `∫₀^∞ s^l dλ(s) = (l-1)!`.
    pub fn moment(&self, l: u32) -> f64 {
        assert!(l >= 1, "moment order must be positive");
        (1..l).map(f64::from).product()
    }
}

/// Sampler for `λ` restricted to `[eps, ∞)` and normalised.
///
/// Two-piece composition: on `[eps, 1]` a log-uniform proposal thinned by
/// `e⁻ˢ`; on `[1, ∞)` a shifted unit exponential thinned by `1/s`. A piece
/// is chosen once per draw and rejection repeats within it, so each piece
/// keeps its conditional law; acceptance is at least `e⁻¹` and `1/2`
/// respectively regardless of `eps`.
#[derive(Clone, Debug)]
pub struct TruncatedMassSampler {
    eps: f64,
    tail: f64,
    p_low: f64,
    log_eps: f64,
}

impl TruncatedMassSampler {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::Domain(format!("mass floor must be positive, got {eps}")));
        }
        let tail = exp_integral_e1(eps)?;
        let p_low = if eps < 1.0 { (tail - exp_integral_e1(1.0)?) / tail } else { 0.0 };
        Ok(Self {
            eps,
            tail,
            p_low,
            log_eps: eps.ln(),
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `E₁(eps)`, the total intensity above the floor.
    pub fn tail_mass(&self) -> f64 {
        self.tail
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.p_low > 0.0 && rng.random::<f64>() < self.p_low {
            loop {
                let u: f64 = rng.random();
                let s = (self.log_eps * (1.0 - u)).exp();
                if rng.random::<f64>() < (-s).exp() {
                    return s;
                }
            }
        }
        let start = self.eps.max(1.0);
        loop {
            let e: f64 = Exp1.sample(rng);
            let s = start + e;
            if rng.random::<f64>() * s < start {
                return s;
            }
        }
    }
}

pub fn sample_truncated_mass<R: Rng + ?Sized>(eps: f64, rng: &mut R) -> Result<f64> {
    Ok(TruncatedMassSampler::new(eps)?.sample(rng))
}

/// Sampler for the gamma measure restricted to a window.
#[derive(Clone, Debug)]
pub struct GammaSampler {
    window: Window,
    masses: TruncatedMassSampler,
    poisson: Option<Poisson<f64>>,
}

impl GammaSampler {
    pub fn new(window: Window) -> Result<Self> {
        let masses = TruncatedMassSampler::new(window.mass_floor)?;
        let mean = window.volume() * masses.tail_mass();
        let poisson = if mean > 0.0 {
            Some(Poisson::new(mean).map_err(|e| Error::Domain(e.to_string()))?)
        } else {
            None
        };
        Ok(Self { window, masses, poisson })
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    /// Mean atom count `vol · E₁(ε)`.
    pub fn mean_count(&self) -> f64 {
        self.window.volume() * self.masses.tail_mass()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> WeightedConfiguration {
        let count = match &self.poisson {
            Some(p) => p.sample(rng) as usize,
            None => 0,
        };
        let d = self.window.dim();
        let region = &self.window.region;
        let mut atoms = Vec::with_capacity(count);
        for _ in 0..count {
            let mut pos = [0.0; MAX_DIM];
            for k in 0..d {
                pos[k] = region.lo[k] + (region.hi[k] - region.lo[k]) * rng.random::<f64>();
            }
            atoms.push(Atom::raw(pos, d, self.masses.sample(rng)));
        }
        WeightedConfiguration::from_parts(self.window.clone(), atoms)
    }
}

pub fn sample_gamma_configuration<R: Rng + ?Sized>(window: &Window, rng: &mut R) -> Result<WeightedConfiguration> {
    Ok(GammaSampler::new(window.clone())?.sample(rng))
}

/// `η(A)`: total mass of atoms inside `region`, which must lie in the window.
pub fn local_mass(eta: &WeightedConfiguration, region: &SpatialBox) -> Result<f64> {
    if !eta.window().region.contains_box(region) {
        return Err(Error::OutsideWindow(format!("box {region:?} is not inside the sampled window")));
    }
    Ok(eta.atoms().iter().filter(|a| region.contains(a.position())).map(|a| a.mass).sum())
}

/// Bound on the bias of `E⟨f, η⟩` caused by dropping masses below the
/// floor: `sup|f| · vol · (1 - e^{-ε})`.
pub fn truncation_bias_bound(window: &Window, f_sup: f64) -> f64 {
    f_sup * window.volume() * (-(-window.mass_floor).exp_m1())
}
