//! Streaming moment accumulators and goodness-of-fit tests.

use crate::special::kolmogorov_survival;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Running means and co-moments of a fixed-width sample vector.
///
/// Welford updates per sample, Chan's formula for merging shards. Linear
/// combinations of the tracked components get exact standard errors from
/// the co-moment matrix, which is what paired (same-sample) comparisons need.
#[derive(Clone, Debug)]
pub struct CovAccumulator {
    n: u64,
    mean: Vec<f64>,
    comoment: Vec<f64>,
    scratch: Vec<f64>,
}

impl CovAccumulator {
    pub fn new(width: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; width],
            comoment: vec![0.0; width * width],
            scratch: vec![0.0; width],
        }
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn push(&mut self, x: &[f64]) {
        let k = self.width();
        debug_assert_eq!(x.len(), k);
        self.n += 1;
        let nf = self.n as f64;
        let delta = &mut self.scratch;
        for i in 0..k {
            delta[i] = x[i] - self.mean[i];
            self.mean[i] += delta[i] / nf;
        }
        for i in 0..k {
            let di = delta[i];
            let row = &mut self.comoment[i * k..(i + 1) * k];
            for j in 0..k {
                row[j] += di * (x[j] - self.mean[j]);
            }
        }
    }

    pub fn merge(&mut self, other: &CovAccumulator) {
        let k = self.width();
        assert_eq!(k, other.width());
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let na = self.n as f64;
        let nb = other.n as f64;
        let n = na + nb;
        let delta: Vec<f64> = (0..k).map(|i| other.mean[i] - self.mean[i]).collect();
        for i in 0..k {
            for j in 0..k {
                self.comoment[i * k + j] += other.comoment[i * k + j] + delta[i] * delta[j] * na * nb / n;
            }
        }
        for i in 0..k {
            self.mean[i] += delta[i] * nb / n;
        }
        self.n += other.n;
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.mean[i]
    }

    /// Sample covariance (n - 1 denominator) of components i and j.
    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.comoment[i * self.width() + j] / (self.n as f64 - 1.0)
    }

    /// Mean and standard error of `Σ coeffs[i] · x_i`.
    pub fn linear(&self, coeffs: &[f64]) -> (f64, f64) {
        let k = self.width();
        assert_eq!(coeffs.len(), k);
        let mean: f64 = coeffs.iter().zip(&self.mean).map(|(c, m)| c * m).sum();
        if self.n < 2 {
            return (mean, 0.0);
        }
        let mut var = 0.0;
        for i in 0..k {
            if coeffs[i] == 0.0 {
                continue;
            }
            for j in 0..k {
                var += coeffs[i] * coeffs[j] * self.comoment[i * k + j];
            }
        }
        var /= self.n as f64 - 1.0;
        (mean, (var.max(0.0) / self.n as f64).sqrt())
    }

    pub fn std_error(&self, i: usize) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.covariance(i, i).max(0.0) / self.n as f64).sqrt()
    }
}

/// Result of a goodness-of-fit test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> TestOutcome {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let en = n.sqrt();
    TestOutcome {
        statistic: d,
        p_value: kolmogorov_survival((en + 0.12 + 0.11 / en) * d),
    }
}

/// Two-sample Kolmogorov–Smirnov test. Ties (e.g. atoms at zero) are
/// handled by stepping both empirical CDFs over each distinct value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestOutcome {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(|p, q| p.partial_cmp(q).unwrap());
    xb.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (na, nb) = (xa.len(), xb.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let v = xa[i].min(xb[j]);
        while i < na && xa[i] <= v {
            i += 1;
        }
        while j < nb && xb[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let en = ((na * nb) as f64 / (na + nb) as f64).sqrt();
    TestOutcome {
        statistic: d,
        p_value: kolmogorov_survival((en + 0.12 + 0.11 / en) * d),
    }
}

/// Pearson chi-square test of observed counts against expected counts.
/// Cells with expected count below 5 should be pooled by the caller.
pub fn chi_square(observed: &[f64], expected: &[f64], fitted_params: usize) -> TestOutcome {
    let stat: f64 = observed.iter().zip(expected).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = (observed.len() - 1 - fitted_params).max(1) as f64;
    let chi = ChiSquared::new(dof).expect("positive degrees of freedom");
    TestOutcome {
        statistic: stat,
        p_value: 1.0 - chi.cdf(stat),
    }
}
