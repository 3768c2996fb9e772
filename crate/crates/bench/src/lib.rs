//! Benchmarks for the spectral invariants and the two flow integrators; see
//! `benches/flows.rs`.
