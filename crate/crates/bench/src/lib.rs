//! Benchmark-only crate; see `benches/ranking.rs`.
