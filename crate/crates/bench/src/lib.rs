//! Criterion benchmarks for `nameid-core`; see `benches/`.
