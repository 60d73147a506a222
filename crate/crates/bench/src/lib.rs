//! Benchmarks for arbor-core live in `benches/`.
