//! Criterion benchmarks for the `dmimo-core` kernels live in `benches/`.
