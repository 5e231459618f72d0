//! Criterion benchmarks for the k-star check and the witness scans; see `benches/`.
