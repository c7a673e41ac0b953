//! Criterion benchmarks for `metricstep`; see `benches/`.
