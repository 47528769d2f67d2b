//! Criterion benchmarks for `logfsk`; see `benches/`.
