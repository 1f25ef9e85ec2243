//! Criterion benchmarks for the minlgan core; see `benches/`.
