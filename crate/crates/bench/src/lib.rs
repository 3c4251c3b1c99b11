//! Benchmark fixtures.

use fused_strip::vertex_weights::ModelParams;

/// A small admissible model used across the benches.
pub fn reference_params(spin: usize) -> ModelParams {
    ModelParams { spin, q: 0.5, kappa: 0.5, aa: 3.0, bb: 3.0, cc: 0.05, dd: 0.05 }
}
