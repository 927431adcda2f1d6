//! Criterion benchmarks for `xlda-core`; see `benches/`.
