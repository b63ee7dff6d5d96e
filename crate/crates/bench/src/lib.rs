//! Criterion benchmarks for the tokgraft library; see `benches/`.
