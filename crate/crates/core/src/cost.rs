//! Modeled prefill cost: `alpha * L^2 + beta * L` for sequence length `L`.
//!
//! This is a token-count proxy, not a wall-clock measurement.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.0,
        }
    }
}

impl CostModel {
    pub fn prefill_cost(&self, len: usize) -> f64 {
        let l = len as f64;
        self.alpha * l * l + self.beta * l
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostEstimate {
    pub tokens_before: usize,
    pub tokens_after: usize,
    pub prefill_cost_before: f64,
    pub prefill_cost_after: f64,
    pub estimated_speedup: f64,
}

/// Compares prompt segments (video, audio, text, ...) before and after
/// pruning under the default quadratic model.
pub fn estimate_cost(before: &[usize], after: &[usize]) -> Result<CostEstimate> {
    estimate_cost_with(&CostModel::default(), before, after)
}

pub fn estimate_cost_with(
    model: &CostModel,
    before: &[usize],
    after: &[usize],
) -> Result<CostEstimate> {
    if before.len() != after.len() {
        return Err(Error::Shape(format!(
            "{} segments before pruning, {} after",
            before.len(),
            after.len()
        )));
    }
    if let Some(i) = (0..before.len()).find(|&i| after[i] > before[i]) {
        return Err(Error::Config(format!(
            "segment {i} grew from {} to {} tokens",
            before[i], after[i]
        )));
    }
    let tokens_before: usize = before.iter().sum();
    let tokens_after: usize = after.iter().sum();
    if tokens_after == 0 {
        return Err(Error::Degenerate("no tokens left after pruning".into()));
    }
    let prefill_cost_before = model.prefill_cost(tokens_before);
    let prefill_cost_after = model.prefill_cost(tokens_after);
    Ok(CostEstimate {
        tokens_before,
        tokens_after,
        prefill_cost_before,
        prefill_cost_after,
        estimated_speedup: prefill_cost_before / prefill_cost_after,
    })
}
