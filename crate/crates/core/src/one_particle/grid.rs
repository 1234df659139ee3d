use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::SpatialBox;
use crate::special::exp_integral_e1;
use crate::testfn::{FormKind, MassCoefficient};

/// Default mark-domain truncation.
pub const MARK_RANGE: (f64, f64) = (1e-3, 30.0);

/// Closure of the mark axis below `s_min`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerBoundary {
    /// Zero Dirichlet value at `s = 0`, reached through a ghost cell
    /// `[0, s_0]`. Matches the one-particle space, whose elements cannot
    /// carry mass at `s = 0`.
    Absorbing,
    /// No flux through `s_min`. Keeps constants in the kernel, which are
    /// not in the one-particle space; the spectrum then converges to a
    /// truncation-dependent limit.
    NoFlux,
}

/// Cell-centered tensor grid on `A × [s_min, s_max]`.
///
/// Marks use log-uniform cells with nodes at geometric centers; space uses
/// uniform cells. Node index is `spatial_index · marks + mark_index`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGrid {
    region: Option<SpatialBox>,
    cells: usize,
    faces: Vec<f64>,
    marks: Vec<f64>,
    mark_weights: Vec<f64>,
    pub lower: LowerBoundary,
}

impl WeightedGrid {
    /// Pure mark grid with `n` cells.
    pub fn marks(s_min: f64, s_max: f64, n: usize) -> Result<Self> {
        if !(s_min > 0.0) || !(s_max > s_min) || !s_max.is_finite() {
            return Err(Error::Domain(format!("mark range needs 0 < s_min < s_max, got [{s_min}, {s_max}]")));
        }
        if n == 0 {
            return Err(Error::Domain("grid needs at least one cell".into()));
        }
        let (la, lb) = (s_min.ln(), s_max.ln());
        let faces: Vec<f64> = (0..=n).map(|i| (la + (lb - la) * i as f64 / n as f64).exp()).collect();
        let marks = faces.windows(2).map(|f| (f[0] * f[1]).sqrt()).collect();
        let e1 = faces.iter().map(|&f| exp_integral_e1(f)).collect::<Result<Vec<_>>>()?;
        let mark_weights: Vec<f64> = e1.windows(2).map(|e| e[0] - e[1]).collect();
        if let Some(w) = mark_weights.iter().find(|w| !(**w > 0.0)) {
            return Err(Error::Domain(format!("nonpositive cell weight {w}")));
        }
        Ok(Self {
            region: None,
            cells: 1,
            faces,
            marks,
            mark_weights,
            lower: LowerBoundary::Absorbing,
        })
    }

    /// Tensor grid with `nx` cells per spatial axis and `ns` mark cells.
    pub fn tensor(region: SpatialBox, nx: usize, s_min: f64, s_max: f64, ns: usize) -> Result<Self> {
        if nx == 0 {
            return Err(Error::Domain("grid needs at least one spatial cell".into()));
        }
        let mut g = Self::marks(s_min, s_max, ns)?;
        g.region = Some(region);
        g.cells = nx;
        Ok(g)
    }

    pub fn with_lower_boundary(mut self, lower: LowerBoundary) -> Self {
        self.lower = lower;
        self
    }

    /// Same domain, every spacing halved.
    pub fn refine(&self) -> Self {
        let ns = 2 * self.marks.len();
        let (a, b) = self.mark_range();
        let mut g = Self::marks(a, b, ns).expect("refining a valid grid");
        g.region = self.region.clone();
        g.cells = if self.region.is_some() { 2 * self.cells } else { 1 };
        g.lower = self.lower;
        g
    }

    pub fn mark_range(&self) -> (f64, f64) {
        (self.faces[0], self.faces[self.faces.len() - 1])
    }

    pub fn dim(&self) -> usize {
        self.region.as_ref().map_or(0, SpatialBox::dim)
    }

    pub fn mark_nodes(&self) -> &[f64] {
        &self.marks
    }

    /// Log spacing of the mark axis.
    pub fn mark_spacing(&self) -> f64 {
        let (a, b) = self.mark_range();
        (b / a).ln() / self.marks.len() as f64
    }

    fn spatial_count(&self) -> usize {
        self.cells.pow(self.dim() as u32)
    }

    fn cell_width(&self, k: usize) -> f64 {
        let r = self.region.as_ref().expect("spatial axis");
        (r.hi[k] - r.lo[k]) / self.cells as f64
    }

    fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.cell_width(k)).product()
    }

    pub fn len(&self) -> usize {
        self.spatial_count() * self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `ϰ`-masses of the cells, node order.
    pub fn weights(&self) -> Vec<f64> {
        let v = self.cell_volume();
        (0..self.spatial_count())
            .flat_map(|_| self.mark_weights.iter().map(move |w| v * w))
            .collect()
    }

    /// Position and mark of node `i`.
    pub fn node(&self, i: usize) -> (Vec<f64>, f64) {
        let m = self.marks.len();
        let (mut sp, mi) = (i / m, i % m);
        let mut x = Vec::with_capacity(self.dim());
        if let Some(r) = &self.region {
            for k in (0..self.dim()).rev() {
                let j = sp % self.cells;
                sp /= self.cells;
                x.push(r.lo[k] + (j as f64 + 0.5) * self.cell_width(k));
            }
            x.reverse();
        }
        (x, self.marks[mi])
    }
}

/// Discretized one-particle generator `M = -W⁻¹K` with `K` the assembled
/// form matrix and `W = diag(w)`.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    pub matrix: DMatrix<f64>,
    pub weights: Vec<f64>,
    pub invariants: AssemblyInvariants,
    spectrum: Vec<f64>,
}

/// Structural diagnostics recorded at assembly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssemblyInvariants {
    /// `‖WM - (WM)ᵀ‖_max / max(1, ‖WM‖_max)`.
    pub symmetry_defect: f64,
    /// Largest eigenvalue divided by `max(1, ‖M‖_max)`.
    pub max_eigenvalue: f64,
    pub min_off_diagonal: f64,
}

pub const SYMMETRY_TOLERANCE: f64 = 1e-12;
pub const SPECTRUM_TOLERANCE: f64 = 1e-10;

fn add_edge(k: &mut DMatrix<f64>, a: usize, b: usize, g: f64) {
    k[(a, a)] += g;
    k[(b, b)] += g;
    k[(a, b)] -= g;
    k[(b, a)] -= g;
}

/// Symmetric `-W^{-1/2} K W^{-1/2}` built from `M`.
fn symmetrized(m: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let n = w.len();
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] = 0.5 * (w[i].sqrt() * m[(i, j)] / w[j].sqrt() + w[j].sqrt() * m[(j, i)] / w[i].sqrt());
        }
    }
    s
}

impl DiscreteOperator {
    /// Eigenvalues in decreasing order, computed at assembly.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn measure_invariants(matrix: &DMatrix<f64>, weights: &[f64], spectrum: &[f64]) -> AssemblyInvariants {
        let n = weights.len();
        let (mut defect, mut wm_max, mut m_max) = (0.0f64, 0.0f64, 0.0f64);
        let mut min_off = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                let a = weights[i] * matrix[(i, j)];
                defect = defect.max((a - weights[j] * matrix[(j, i)]).abs());
                wm_max = wm_max.max(a.abs());
                m_max = m_max.max(matrix[(i, j)].abs());
                if i != j {
                    min_off = min_off.min(matrix[(i, j)]);
                }
            }
        }
        AssemblyInvariants {
            symmetry_defect: defect / wm_max.max(1.0),
            max_eigenvalue: spectrum.first().copied().unwrap_or(0.0) / m_max.max(1.0),
            min_off_diagonal: if min_off.is_finite() { min_off } else { 0.0 },
        }
    }
}

/// Assembles the one-particle generator by discretizing the form.
///
/// Edge conductances: along the mark axis `∫e⁻ˢds / h²` over the dual cell
/// (times the spatial cell volume); along a spatial axis
/// `(c(s)/s)·w_mark·vol / Δx²`. Spatial boundaries carry no flux.
/// The three structural invariants are verified before returning.
pub fn discretize_generator(kind: FormKind, c: &MassCoefficient, grid: &WeightedGrid) -> Result<DiscreteOperator> {
    let weights = grid.weights();
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0)) {
        return Err(Error::Domain(format!("nonpositive node weight {w}")));
    }
    let n = grid.len();
    let ns = grid.marks.len();
    let nsp = grid.spatial_count();
    let vol = grid.cell_volume();
    let s = &grid.marks;
    let mut k = DMatrix::<f64>::zeros(n, n);
    if kind.has_ext() {
        for sp in 0..nsp {
            let base = sp * ns;
            for m in 0..ns.saturating_sub(1) {
                let h = s[m + 1] - s[m];
                let g = vol * ((-s[m]).exp() - (-s[m + 1]).exp()) / (h * h);
                add_edge(&mut k, base + m, base + m + 1, g);
            }
            if grid.lower == LowerBoundary::Absorbing {
                k[(base, base)] += vol * (-(-s[0]).exp_m1()) / (s[0] * s[0]);
            }
        }
    }
    if kind.has_int() && grid.dim() > 0 {
        let d = grid.dim();
        let cells = grid.cells;
        for ax in 0..d {
            let stride = cells.pow((d - 1 - ax) as u32);
            let dx = grid.cell_width(ax);
            for sp in 0..nsp {
                if (sp / stride) % cells + 1 == cells {
                    continue;
                }
                let nb = sp + stride;
                for m in 0..ns {
                    let g = c.eval(s[m]) / s[m] * grid.mark_weights[m] * vol / (dx * dx);
                    add_edge(&mut k, sp * ns + m, nb * ns + m, g);
                }
            }
        }
    }
    let mut matrix = -k;
    for i in 0..n {
        let wi = weights[i];
        matrix.row_mut(i).iter_mut().for_each(|v| *v /= wi);
    }
    let mut spectrum: Vec<f64> = SymmetricEigen::new(symmetrized(&matrix, &weights))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    spectrum.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let invariants = DiscreteOperator::measure_invariants(&matrix, &weights, &spectrum);
    let op = DiscreteOperator {
        matrix,
        weights,
        invariants,
        spectrum,
    };
    let inv = &op.invariants;
    if inv.symmetry_defect > SYMMETRY_TOLERANCE || inv.max_eigenvalue > SPECTRUM_TOLERANCE || inv.min_off_diagonal < 0.0 {
        return Err(Error::Contract(format!("assembled operator breaks its structure: {inv:?}")));
    }
    Ok(op)
}

/// `‖A‖` as an operator on `ℝⁿ` with inner product `Σ wᵢ uᵢ vᵢ`.
pub fn weighted_operator_norm(a: &DMatrix<f64>, w: &[f64]) -> f64 {
    let n = w.len();
    let b = DMatrix::from_fn(n, n, |i, j| w[i].sqrt() * a[(i, j)] / w[j].sqrt());
    b.singular_values().max()
}

/// `e^{tM}` by Padé scaling and squaring, with its contract checked:
/// W-self-adjoint, entrywise `≥ -1e-12`, W-operator norm `≤ 1 + 1e-10`.
pub fn heat_semigroup(op: &DiscreteOperator, t: f64) -> Result<DMatrix<f64>> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("semigroup time must be nonnegative, got {t}")));
    }
    let e = (&op.matrix * t).exp();
    let w = &op.weights;
    let n = w.len();
    let mut defect = 0.0f64;
    let mut min_entry = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            defect = defect.max((w[i] * e[(i, j)] - w[j] * e[(j, i)]).abs() / (w[i] * e[(i, j)]).abs().max(w[i].min(w[j])));
            min_entry = min_entry.min(e[(i, j)]);
        }
    }
    let norm = weighted_operator_norm(&e, w);
    if defect > 1e-8 || min_entry < -1e-12 || norm > 1.0 + 1e-10 {
        return Err(Error::Contract(format!(
            "heat semigroup at t = {t}: symmetry defect {defect:e}, min entry {min_entry:e}, W-norm {norm}"
        )));
    }
    Ok(e)
}

/// One eigenvalue at one refinement level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub nodes: usize,
    pub spacing: f64,
    pub index: usize,
    pub value: f64,
    /// Limit predicted by the Laguerre eigenstructure, when it applies.
    pub exact: Option<f64>,
    /// Observed order from this level and the previous one.
    pub order: Option<f64>,
}

/// Leading `count` eigenvalues on `levels` successively refined grids.
///
/// For the extrinsic operator on a pure mark grid with absorbing closure the
/// limits are `-1, -2, -3, …` and orders come from errors against them;
/// otherwise they are Richardson estimates from three consecutive levels.
pub fn refinement_study(
    kind: FormKind,
    c: &MassCoefficient,
    base: &WeightedGrid,
    levels: usize,
    count: usize,
) -> Result<Vec<RefinementRow>> {
    let laguerre = kind == FormKind::Ext && base.dim() == 0 && base.lower == LowerBoundary::Absorbing;
    let mut grid = base.clone();
    let mut spectra: Vec<(usize, f64, Vec<f64>)> = Vec::with_capacity(levels);
    for level in 0..levels {
        if level > 0 {
            grid = grid.refine();
        }
        let op = discretize_generator(kind, c, &grid)?;
        let ev: Vec<f64> = op.spectrum().iter().take(count).copied().collect();
        spectra.push((grid.len(), grid.mark_spacing(), ev));
    }
    let mut rows = Vec::new();
    for (level, (nodes, spacing, ev)) in spectra.iter().enumerate() {
        for (index, &value) in ev.iter().enumerate() {
            let exact = laguerre.then_some(-((index + 1) as f64));
            let order = if let Some(x) = exact {
                (level >= 1).then(|| ((spectra[level - 1].2[index] - x).abs() / (value - x).abs()).log2())
            } else {
                (level >= 2).then(|| {
                    let (a, b) = (spectra[level - 2].2[index], spectra[level - 1].2[index]);
                    ((a - b).abs() / (b - value).abs()).log2()
                })
            };
            rows.push(RefinementRow {
                nodes: *nodes,
                spacing: *spacing,
                index,
                value,
                exact,
                order,
            });
        }
    }
    Ok(rows)
}

pub fn refinement_csv(rows: &[RefinementRow]) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
    let mut out = String::from("nodes,spacing,index,value,exact,order\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.12e},{},{:.12e},{},{}\n",
            r.nodes,
            r.spacing,
            r.index,
            r.value,
            opt(r.exact),
            opt(r.order)
        ));
    }
    out
}

/// Nodal values of `u` on the grid.
pub fn sample_on_grid(grid: &WeightedGrid, u: impl Fn(&[f64], f64) -> f64) -> DVector<f64> {
    DVector::from_fn(grid.len(), |i, _| {
        let (x, s) = grid.node(i);
        u(&x, s)
    })
}
