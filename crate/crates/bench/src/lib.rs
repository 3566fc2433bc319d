//! Criterion benchmarks for the sampling and counting hot loops; see `benches/`.
