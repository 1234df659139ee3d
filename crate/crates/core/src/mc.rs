//! Sharded Monte Carlo driver.
//!
//! `n` samples are split over `shards` child streams (shard `i` draws from
//! `stream.split(i)`); shards run on the rayon pool and their accumulators
//! are merged in shard order, so results depend only on `(seed, path,
//! shards, n)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{RandomStream, StreamRng};
use crate::stats::CovAccumulator;
use crate::verdict::EstimateReport;

#[derive(Clone, Debug, PartialEq)]
pub struct McPlan {
    pub n: u64,
    pub shards: u32,
    pub stream: RandomStream,
}

impl McPlan {
    pub fn new(n: u64, shards: u32, stream: RandomStream) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("Monte Carlo sample count must be positive".into()));
        }
        if shards == 0 {
            return Err(Error::Domain("shard count must be positive".into()));
        }
        Ok(Self { n, shards, stream })
    }

    pub fn single(n: u64, seed: u64) -> Self {
        Self {
            n: n.max(1),
            shards: 1,
            stream: RandomStream::new(seed),
        }
    }

    /// Same sizes, different stream.
    pub fn on(&self, stream: RandomStream) -> Self {
        Self { stream, ..self.clone() }
    }

    pub fn with_n(&self, n: u64) -> Self {
        Self {
            n: n.max(1),
            ..self.clone()
        }
    }

    fn shard_sizes(&self) -> Vec<u64> {
        let s = self.shards as u64;
        (0..s).map(|i| self.n / s + u64::from(i < self.n % s)).collect()
    }

    /// Runs `sample` `n` times; each call writes `width` values into its buffer.
    pub fn run<F>(&self, width: usize, sample: F) -> CovAccumulator
    where
        F: Fn(&mut StreamRng, &mut [f64]) + Sync,
    {
        let sizes = self.shard_sizes();
        let partials: Vec<CovAccumulator> = sizes
            .par_iter()
            .enumerate()
            .map(|(i, &count)| {
                let mut rng = self.stream.split(i as u64).rng();
                let mut acc = CovAccumulator::new(width);
                let mut buf = vec![0.0; width];
                for _ in 0..count {
                    buf.iter_mut().for_each(|b| *b = 0.0);
                    sample(&mut rng, &mut buf);
                    acc.push(&buf);
                }
                acc
            })
            .collect();
        let mut total = CovAccumulator::new(width);
        for p in &partials {
            total.merge(p);
        }
        total
    }

    /// Collects raw per-sample outputs, concatenated in shard order.
    pub fn collect<T, F>(&self, sample: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut StreamRng) -> T + Sync,
    {
        let sizes = self.shard_sizes();
        let parts: Vec<Vec<T>> = sizes
            .par_iter()
            .enumerate()
            .map(|(i, &count)| {
                let mut rng = self.stream.split(i as u64).rng();
                (0..count).map(|_| sample(&mut rng)).collect()
            })
            .collect();
        parts.into_iter().flatten().collect()
    }

    pub fn report(&self, acc: &CovAccumulator, coeffs: &[f64]) -> EstimateReport {
        let (value, std_error) = acc.linear(coeffs);
        EstimateReport {
            value,
            std_error,
            n_samples: acc.count(),
            shards: self.shards,
            seed: self.stream.seed(),
        }
    }
}

/// Unit vector selecting component `i` of a width-`k` sample.
pub fn pick(k: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; k];
    v[i] = 1.0;
    v
}

/// `x_i - x_j`.
pub fn diff(k: usize, i: usize, j: usize) -> Vec<f64> {
    let mut v = vec![0.0; k];
    v[i] += 1.0;
    v[j] -= 1.0;
    v
}
