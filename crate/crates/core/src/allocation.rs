//! Per-group pruning ratios under a global per-modality budget.
//!
//! Scores are turned into base pruning probabilities with a temperature
//! sigmoid around their mean (higher relevance, lower pruning), rescaled so
//! that the expected number of pruned tokens equals `eta * sum(n)`, and then
//! refined by spreading the remaining deficit evenly over the groups that are
//! not yet clipped at 0 or 1.

use crate::error::{Error, Result};
use crate::scoring::Strategy;

/// Slack added before flooring retained counts so that products such as
/// `(1 - 0.55) * 100 = 44.999999999999993` land on the intended integer.
const FLOOR_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetConfig {
    /// Target fraction of tokens to prune.
    pub eta: f64,
    pub tau: f64,
    /// Standard deviation at or below which all groups get `eta`.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Acceptable budget residual, in tokens.
    pub budget_tol: f64,
}

impl BudgetConfig {
    pub fn with_eta(eta: f64) -> Self {
        Self {
            eta,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::Config(format!("eta {} outside [0, 1]", self.eta)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!("tau {} must be > 0", self.tau)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "epsilon {} must be > 0",
                self.epsilon
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be >= 1".into()));
        }
        if !(self.budget_tol >= 0.0 && self.budget_tol.is_finite()) {
            return Err(Error::Config("budget_tol must be >= 0".into()));
        }
        Ok(())
    }
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self {
            eta: 0.0,
            tau: 1.0,
            epsilon: 1e-6,
            max_iters: 32,
            budget_tol: 0.5,
        }
    }
}

/// `max(1, floor((1 - rho) * n))` for `n >= 1`, `0` for an empty group.
pub fn retained_count(rho: f64, n: usize) -> usize {
    if n == 0 {
        return 0;
    }
    let kept = ((1.0 - rho) * n as f64 + FLOOR_SLACK).floor();
    (kept.max(1.0) as usize).min(n)
}

/// Sigmoid pruning probabilities; falls back to `eta` everywhere when the
/// scores have (population) standard deviation at most `epsilon`.
pub fn base_probabilities(scores: &[f64], cfg: &BudgetConfig) -> Vec<f64> {
    if scores.is_empty() {
        return Vec::new();
    }
    let g = scores.len() as f64;
    let mu = scores.iter().sum::<f64>() / g;
    let sigma = (scores.iter().map(|s| (s - mu) * (s - mu)).sum::<f64>() / g).sqrt();
    if sigma <= cfg.epsilon {
        return vec![cfg.eta; scores.len()];
    }
    scores
        .iter()
        .map(|s| 1.0 / (1.0 + ((s - mu) / (cfg.tau * sigma)).exp()))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rescaled {
    pub rho: Vec<f64>,
    /// `N_exp - sum(rho * n)` after refinement, in tokens.
    pub residual: f64,
    /// Refinement steps taken after the initial rescale.
    pub iterations: usize,
}

impl Rescaled {
    /// No group left strictly inside (0, 1) with tokens to absorb a deficit.
    pub fn saturated(&self, n: &[usize]) -> bool {
        self.rho
            .iter()
            .zip(n)
            .all(|(&r, &n)| n == 0 || r <= 0.0 || r >= 1.0)
    }
}

pub fn rescale_to_budget(p: &[f64], n: &[usize], cfg: &BudgetConfig) -> Result<Rescaled> {
    if p.len() != n.len() {
        return Err(Error::Shape(format!(
            "{} probabilities for {} groups",
            p.len(),
            n.len()
        )));
    }
    let total: usize = n.iter().sum();
    if total == 0 {
        return Err(Error::Shape("no tokens to allocate a budget over".into()));
    }
    let expected = cfg.eta * total as f64;
    if cfg.eta == 0.0 {
        return Ok(Rescaled {
            rho: vec![0.0; p.len()],
            residual: 0.0,
            iterations: 0,
        });
    }
    let weighted: f64 = p.iter().zip(n).map(|(&p, &n)| p * n as f64).sum();
    if weighted <= 0.0 {
        return Err(Error::DegenerateDistribution);
    }

    let scale = expected / weighted;
    let mut rho: Vec<f64> = p.iter().map(|&p| (p * scale).clamp(0.0, 1.0)).collect();
    let pruned = |rho: &[f64]| -> f64 { rho.iter().zip(n).map(|(&r, &n)| r * n as f64).sum() };

    let mut iterations = 0;
    loop {
        let deficit = expected - pruned(&rho);
        if deficit.abs() <= cfg.budget_tol || iterations == cfg.max_iters {
            break;
        }
        let capacity: usize = rho
            .iter()
            .zip(n)
            .filter(|(&r, _)| r > 0.0 && r < 1.0)
            .map(|(_, &n)| n)
            .sum();
        if capacity == 0 {
            break;
        }
        let step = deficit / capacity as f64;
        for r in rho.iter_mut().filter(|r| **r > 0.0 && **r < 1.0) {
            *r = (*r + step).clamp(0.0, 1.0);
        }
        iterations += 1;
    }
    let residual = expected - pruned(&rho);
    Ok(Rescaled {
        rho,
        residual,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationPlan {
    pub strategy: Strategy,
    pub rho_video: Vec<f64>,
    pub rho_audio: Vec<f64>,
    pub k_video: Vec<usize>,
    pub k_audio: Vec<usize>,
    pub residual_video: f64,
    pub residual_audio: f64,
}

impl AllocationPlan {
    pub fn len(&self) -> usize {
        self.rho_video.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho_video.is_empty()
    }
}

struct ModalityAllocation {
    rho: Vec<f64>,
    residual: f64,
}

fn uniform(n: &[usize], cfg: &BudgetConfig) -> ModalityAllocation {
    ModalityAllocation {
        rho: vec![cfg.eta; n.len()],
        residual: 0.0,
    }
}

fn score_driven(scores: &[f64], n: &[usize], cfg: &BudgetConfig) -> Result<ModalityAllocation> {
    if n.iter().all(|&n| n == 0) {
        return Ok(uniform(n, cfg));
    }
    let p = base_probabilities(scores, cfg);
    let r = rescale_to_budget(&p, n, cfg)?;
    Ok(ModalityAllocation {
        rho: r.rho,
        residual: r.residual,
    })
}

/// Ratios and retained counts for both modalities. The dominant modality of
/// a centric strategy is score-driven; everything else prunes uniformly.
pub fn allocate(
    scores_video: &[f64],
    scores_audio: &[f64],
    n_video: &[usize],
    n_audio: &[usize],
    strategy: Strategy,
    cfg_video: &BudgetConfig,
    cfg_audio: &BudgetConfig,
) -> Result<AllocationPlan> {
    let g = n_video.len();
    if scores_video.len() != g || scores_audio.len() != g || n_audio.len() != g {
        return Err(Error::Shape(format!(
            "allocation inputs disagree on group count: scores {}/{}, counts {}/{}",
            scores_video.len(),
            scores_audio.len(),
            g,
            n_audio.len()
        )));
    }
    cfg_video.validate()?;
    cfg_audio.validate()?;

    let (video, audio) = match strategy {
        Strategy::Uniform => (uniform(n_video, cfg_video), uniform(n_audio, cfg_audio)),
        Strategy::VideoCentric => (
            score_driven(scores_video, n_video, cfg_video)?,
            uniform(n_audio, cfg_audio),
        ),
        Strategy::AudioCentric => (
            uniform(n_video, cfg_video),
            score_driven(scores_audio, n_audio, cfg_audio)?,
        ),
    };

    let counts = |rho: &[f64], n: &[usize]| -> Vec<usize> {
        rho.iter()
            .zip(n)
            .map(|(&r, &n)| retained_count(r, n))
            .collect()
    };
    Ok(AllocationPlan {
        strategy,
        k_video: counts(&video.rho, n_video),
        k_audio: counts(&audio.rho, n_audio),
        rho_video: video.rho,
        rho_audio: audio.rho,
        residual_video: video.residual,
        residual_audio: audio.residual,
    })
}
