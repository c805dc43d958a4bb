//! Benchmark programs live in `vecloop_core::bench`; this crate hosts the
//! criterion harness that times them on both state backends.

pub use vecloop_core::bench::*;
