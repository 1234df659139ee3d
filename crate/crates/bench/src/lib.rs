//! Criterion benchmarks for the gammalab kernels; see `benches/kernels.rs`.
