//! Criterion benchmarks for the approximation pipeline; see `benches/`.
