//! Water-filling reference for budget allocation.
//!
//! Finds a common scale `c` with `sum(clip(c * p_i, 0, 1) * n_i) = N_exp` by
//! bisection. It shares no code with the iterative refinement in
//! [`crate::allocation`] and is used to cross-check it.

use crate::error::{Error, Result};

const RESIDUAL_TOL: f64 = 1e-9;
const MAX_BISECTIONS: usize = 2000;

pub fn oracle_allocate(p: &[f64], n: &[usize], eta: f64) -> Result<Vec<f64>> {
    if p.len() != n.len() {
        return Err(Error::Shape(format!(
            "{} probabilities for {} groups",
            p.len(),
            n.len()
        )));
    }
    let total: f64 = n.iter().map(|&n| n as f64).sum();
    let target = eta * total;
    let filled = |c: f64| -> f64 {
        p.iter()
            .zip(n)
            .map(|(&p, &n)| (c * p).clamp(0.0, 1.0) * n as f64)
            .sum()
    };
    let fill = |c: f64| -> Vec<f64> { p.iter().map(|&p| (c * p).clamp(0.0, 1.0)).collect() };

    if target <= 0.0 {
        return Ok(vec![0.0; p.len()]);
    }
    // the most any scale can reach: every group with p > 0 saturated
    let reachable: f64 = p
        .iter()
        .zip(n)
        .filter(|(&p, _)| p > 0.0)
        .map(|(_, &n)| n as f64)
        .sum();
    if target > reachable + RESIDUAL_TOL {
        return Err(Error::InfeasibleBudget {
            expected: target,
            available: reachable,
        });
    }

    let p_min = p
        .iter()
        .copied()
        .filter(|&p| p > 0.0)
        .fold(f64::INFINITY, f64::min);
    let mut hi = 1.0 / p_min;
    if filled(hi) <= target + RESIDUAL_TOL {
        return Ok(fill(hi));
    }
    let mut lo = 0.0;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let f = filled(mid);
        if (f - target).abs() <= RESIDUAL_TOL || mid == lo || mid == hi {
            return Ok(fill(mid));
        }
        if f < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(fill(0.5 * (lo + hi)))
}

/// How far the budget constraint pins down the allocation of an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fixpoint {
    /// The proportional rescale already meets the budget without clipping.
    Unclipped,
    /// Clipping saturates groups and leaves at most one group strictly
    /// inside (0, 1), so the budget fixes that group's ratio.
    Pinned,
    /// Clipping leaves two or more interior groups: any redistribution of
    /// the remaining budget among them that keeps their order is budget
    /// feasible, so proportional and additive refinement may differ.
    Ambiguous,
}

impl Fixpoint {
    pub fn is_unique(self) -> bool {
        !matches!(self, Fixpoint::Ambiguous)
    }
}

pub fn classify_fixpoint(p: &[f64], n: &[usize], eta: f64) -> Result<Fixpoint> {
    let total: f64 = n.iter().map(|&n| n as f64).sum();
    let weighted: f64 = p.iter().zip(n).map(|(&p, &n)| p * n as f64).sum();
    if eta <= 0.0 || weighted <= 0.0 {
        return Ok(Fixpoint::Unclipped);
    }
    let scale = eta * total / weighted;
    if p.iter().zip(n).all(|(&p, &n)| n == 0 || p * scale <= 1.0) {
        return Ok(Fixpoint::Unclipped);
    }
    let rho = oracle_allocate(p, n, eta)?;
    let interior = rho
        .iter()
        .zip(n)
        .filter(|(&r, &n)| n > 0 && r > 1e-12 && r < 1.0 - 1e-12)
        .count();
    Ok(if interior <= 1 {
        Fixpoint::Pinned
    } else {
        Fixpoint::Ambiguous
    })
}
