//! Benchmarks for the solver hot paths; see `benches/solvers.rs`.
