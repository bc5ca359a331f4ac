//! Benchmarks for the blwp kernels live under `benches/`.
