use crate::measure::{SpatialBox, Window, MAX_DIM};
use crate::quadrature::{breakpoints, Rule1d, TensorRule};
use crate::testfn::{HatJet, HatTestFunction};

/// Tensor Gauss–Legendre nodes on `region × [s_lo, s_hi]`.
#[derive(Clone, Debug)]
pub(crate) struct NodeSet {
    pub dim: usize,
    pub xs: Vec<[f64; MAX_DIM]>,
    pub ss: Vec<f64>,
    pub ws: Vec<f64>,
}

/// Bounding support of a family of test functions, intersected with the window.
pub(crate) fn support_region(tests: &[&HatTestFunction], window: &Window) -> Option<(SpatialBox, (f64, f64))> {
    let mut acc: Option<(SpatialBox, (f64, f64))> = None;
    for t in tests {
        if let Some((bx, (a, b))) = t.support() {
            acc = Some(match acc {
                None => (bx, (a, b)),
                Some((r, (lo, hi))) => (r.union(&bx), (lo.min(a), hi.max(b))),
            });
        }
    }
    let (bx, (a, b)) = acc?;
    let bx = bx.intersection(&window.region)?;
    let a = a.max(window.mass_floor);
    (a < b).then_some((bx, (a, b)))
}

pub(crate) fn intersect(p: Option<(SpatialBox, (f64, f64))>, q: Option<(SpatialBox, (f64, f64))>) -> Option<(SpatialBox, (f64, f64))> {
    let (bp, (a1, b1)) = p?;
    let (bq, (a2, b2)) = q?;
    let bx = bp.intersection(&bq)?;
    let (a, b) = (a1.max(a2), b1.min(b2));
    (a < b).then_some((bx, (a, b)))
}

/// Shortest support among consecutive `(lo, hi)` pairs.
fn shortest(pairs: &[f64]) -> f64 {
    pairs.chunks(2).map(|p| p[1] - p[0]).fold(f64::INFINITY, f64::min)
}

/// Composite rule with panels no wider than `shortest / panels`, split at
/// every support edge in `breaks`.
fn sized_rule(breaks: &[f64], shortest: f64, panels: usize, degree: usize) -> Rule1d {
    let width = shortest / panels as f64;
    let mut rule = Rule1d::default();
    for pair in breaks.windows(2) {
        let count = ((pair[1] - pair[0]) / width).ceil().max(1.0) as usize;
        let piece = Rule1d::interval(pair[0], pair[1], count, degree);
        rule.points.extend(piece.points);
        rule.weights.extend(piece.weights);
    }
    rule
}

impl NodeSet {
    fn axes(region: &SpatialBox, mass: (f64, f64), tests: &[&HatTestFunction], panels: usize, degree: usize) -> Vec<Rule1d> {
        let d = region.dim();
        let mut xb = vec![Vec::new(); d];
        let mut sb = Vec::new();
        for t in tests {
            let (x, s) = t.breakpoints();
            for (k, v) in x.into_iter().enumerate().take(d) {
                xb[k].extend(v);
            }
            sb.extend(s);
        }
        let mut axes: Vec<Rule1d> = (0..d)
            .map(|k| {
                sized_rule(
                    &breakpoints(region.lo[k], region.hi[k], xb[k].iter().copied()),
                    shortest(&xb[k]),
                    panels,
                    degree,
                )
            })
            .collect();
        axes.push(sized_rule(
            &breakpoints(mass.0, mass.1, sb.iter().copied()),
            shortest(&sb),
            panels,
            degree,
        ));
        axes
    }

    /// Node count [`NodeSet::build`] would produce, without allocating it.
    pub fn size(region: &SpatialBox, mass: (f64, f64), tests: &[&HatTestFunction], panels: usize, degree: usize) -> usize {
        Self::axes(region, mass, tests, panels, degree).iter().map(Rule1d::len).product()
    }

    pub fn build(region: &SpatialBox, mass: (f64, f64), tests: &[&HatTestFunction], panels: usize, degree: usize) -> Self {
        let d = region.dim();
        let axes = Self::axes(region, mass, tests, panels, degree);
        let rule = TensorRule::new(&axes);
        let mut out = Self {
            dim: d,
            xs: Vec::with_capacity(rule.len()),
            ss: Vec::with_capacity(rule.len()),
            ws: Vec::with_capacity(rule.len()),
        };
        for (p, w) in rule.iter() {
            let mut x = [0.0; MAX_DIM];
            x[..d].copy_from_slice(&p[..d]);
            out.xs.push(x);
            out.ss.push(p[d]);
            out.ws.push(w);
        }
        out
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            xs: Vec::new(),
            ss: Vec::new(),
            ws: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.ws.len()
    }

    /// Jets of every test at every node, node-major.
    pub fn jets(&self, tests: &[HatTestFunction]) -> Vec<HatJet> {
        let mut out = Vec::with_capacity(self.len() * tests.len());
        for (x, &s) in self.xs.iter().zip(&self.ss) {
            for t in tests {
                out.push(t.jet(&x[..self.dim], s));
            }
        }
        out
    }

    /// Keeps only nodes where `keep` holds.
    pub fn retain(&mut self, keep: &[bool]) {
        let mut i = 0;
        self.xs.retain(|_| {
            i += 1;
            keep[i - 1]
        });
        i = 0;
        self.ss.retain(|_| {
            i += 1;
            keep[i - 1]
        });
        i = 0;
        self.ws.retain(|_| {
            i += 1;
            keep[i - 1]
        });
    }
}
