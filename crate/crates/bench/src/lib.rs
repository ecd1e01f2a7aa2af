//! Criterion benchmarks for `casfit` live in `benches/`.
