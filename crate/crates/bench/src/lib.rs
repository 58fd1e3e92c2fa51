//! Criterion benchmarks for `llproj-core`; see `benches/`.
