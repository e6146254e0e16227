//! Criterion benchmarks for skycover-core; see the `benches/` directory.
