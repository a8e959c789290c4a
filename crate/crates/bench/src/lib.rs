//! Criterion benchmarks for `gda-core`; see `benches/`.
