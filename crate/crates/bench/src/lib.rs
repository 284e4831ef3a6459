//! Benchmark-only crate; see `benches/operators.rs` for the criterion
//! harness covering the skeleton operator kernels.
