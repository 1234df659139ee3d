//! Gauss–Legendre rules: one-dimensional composite rules and their tensor products.
//!
//! Integrands in this crate are built from bump functions, which are smooth
//! but far from polynomial near their support edges. Composite rules with
//! panel breaks at those edges converge quickly; [`Rule1d::composite`] takes
//! the break list explicitly.

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(degree: usize) -> Self {
        assert!(degree >= 1, "Gauss-Legendre degree must be positive");
        let n = degree;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A one-dimensional quadrature rule: points and weights on some interval.
#[derive(Clone, Debug, Default)]
pub struct Rule1d {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    /// Composite rule: every interval between consecutive `breaks` is cut
    /// into `panels` equal panels, each carrying a `degree`-point rule.
    pub fn composite(breaks: &[f64], panels: usize, degree: usize) -> Self {
        let gl = GaussLegendre::new(degree);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for pair in breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if !(b > a) {
                continue;
            }
            let h = (b - a) / panels as f64;
            for p in 0..panels {
                let lo = a + h * p as f64;
                let mid = lo + 0.5 * h;
                for (x, w) in gl.nodes.iter().zip(&gl.weights) {
                    points.push(mid + 0.5 * h * x);
                    weights.push(0.5 * h * w);
                }
            }
        }
        Self { points, weights }
    }

    pub fn interval(a: f64, b: f64, panels: usize, degree: usize) -> Self {
        Self::composite(&[a, b], panels, degree)
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Sorted, deduplicated break points: `lo`, `hi`, and every candidate strictly inside.
pub fn breakpoints<I: IntoIterator<Item = f64>>(lo: f64, hi: f64, candidates: I) -> Vec<f64> {
    let mut v = vec![lo, hi];
    v.extend(candidates.into_iter().filter(|&c| c > lo && c < hi));
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
    v
}

/// Tensor product of one-dimensional rules.
#[derive(Clone, Debug)]
pub struct TensorRule {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl TensorRule {
    pub fn new(axes: &[Rule1d]) -> Self {
        let dim = axes.len();
        let mut points = Vec::new();
        let mut weights = Vec::new();
        if axes.iter().any(|a| a.is_empty()) {
            return Self { dim, points, weights };
        }
        let mut idx = vec![0usize; dim];
        'outer: loop {
            let mut w = 1.0;
            for (k, axis) in axes.iter().enumerate() {
                points.push(axis.points[idx[k]]);
                w *= axis.weights[idx[k]];
            }
            weights.push(w);
            for k in (0..dim).rev() {
                idx[k] += 1;
                if idx[k] < axes[k].len() {
                    continue 'outer;
                }
                idx[k] = 0;
            }
            break;
        }
        Self { dim, points, weights }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.points.chunks_exact(self.dim.max(1)).zip(self.weights.iter().copied())
    }

    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        self.iter().map(|(p, w)| w * f(p)).sum()
    }
}
