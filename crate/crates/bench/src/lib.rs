//! Criterion benchmarks for the bsgame solvers live under `benches/`.
