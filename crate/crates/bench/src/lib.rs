//! Benchmarks for the `tristab` kernels live in `benches/kernels.rs`.
