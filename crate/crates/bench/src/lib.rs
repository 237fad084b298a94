//! Criterion benchmarks for `dvsnoise`; see `benches/`.
