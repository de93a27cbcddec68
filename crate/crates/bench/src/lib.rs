//! Shared fixtures for the pipeline benchmarks.

use robustify_core::confidence::{build_relaxed_negation, delta_relaxed};
use robustify_core::{Formula, ModelGraph};

/// Relaxed-robustness negation for an `m`-class model at an 80% threshold.
pub fn relaxed_formula(m: usize) -> Formula {
    let delta = delta_relaxed(80.0).unwrap();
    build_relaxed_negation(m, 0, delta).unwrap()
}

/// Deterministic fully connected fixture model.
pub fn fixture_mlp(dims: &[usize]) -> ModelGraph {
    // xorshift keeps the fixture dependency-free
    let mut state = 0x9e3779b97f4a7c15u64;
    robustify_core::build_mlp(dims, move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        ((state >> 11) as f32 / (1u64 << 53) as f32) - 0.5
    })
}
