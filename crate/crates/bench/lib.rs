//! Criterion benchmarks for the eigensolver and the reduction flow; see `benches/`.
