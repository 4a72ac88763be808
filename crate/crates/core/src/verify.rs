//! Self-checks run by `avprune verify` on a generated instance.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::allocation::{base_probabilities, rescale_to_budget, BudgetConfig};
use crate::error::Result;
use crate::io::PruneResultFile;
use crate::oracle::{classify_fixpoint, oracle_allocate};
use crate::pipeline::{load_dir, run_pipeline_detailed, PipelineConfig};
use crate::scoring::Strategy;
use crate::synth::{read_truth, Regime, Truth, TRUTH_FILE};

/// Per-component agreement required between refinement and water-filling.
pub const ORACLE_TOL: f64 = 1e-6;
/// Residual below which the refinement counts as having met the budget exactly.
pub const EXACT_RESIDUAL: f64 = 1e-9;
/// Minimum planted-signal recovery rate.
pub const RECOVERY_THRESHOLD: f64 = 0.95;
pub const RECOVERY_ETA: f64 = 0.7;
pub const BUDGET_ETAS: [f64; 4] = [0.3, 0.45, 0.55, 0.7];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OracleAgreement {
    pub instances: usize,
    /// Instances whose allocation is pinned down by the budget and that the
    /// refinement solved without residual.
    pub compared: usize,
    pub mismatched: usize,
    pub max_error: f64,
    /// Clipped instances with several interior groups, or where the two
    /// methods clip different groups; reported only.
    pub ambiguous: usize,
    pub ambiguous_max_divergence: f64,
}

impl OracleAgreement {
    pub fn record(&mut self, p: &[f64], n: &[usize], cfg: &BudgetConfig) -> Result<()> {
        self.instances += 1;
        let refined = rescale_to_budget(p, n, cfg)?;
        let oracle = oracle_allocate(p, n, cfg.eta)?;
        let err = refined
            .rho
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let unique = classify_fixpoint(p, n, cfg.eta)?.is_unique()
            && same_clipping(&refined.rho, &oracle, n);
        if !unique {
            self.ambiguous += 1;
            self.ambiguous_max_divergence = self.ambiguous_max_divergence.max(err);
        } else if refined.residual.abs() <= EXACT_RESIDUAL {
            self.compared += 1;
            self.max_error = self.max_error.max(err);
            if err > ORACLE_TOL {
                self.mismatched += 1;
            }
        }
        Ok(())
    }

    pub fn passed(&self) -> bool {
        self.mismatched == 0 && self.compared > 0
    }
}

/// Both solutions saturate and zero the same groups. When they do and at
/// most one group is interior, the budget fixes the remaining ratio.
fn same_clipping(a: &[f64], b: &[f64], n: &[usize]) -> bool {
    const EDGE: f64 = 1e-12;
    let class = |r: f64| {
        if r <= EDGE {
            0
        } else if r >= 1.0 - EDGE {
            2
        } else {
            1
        }
    };
    a.iter()
        .zip(b)
        .zip(n)
        .all(|((&x, &y), &n)| n == 0 || class(x) == class(y))
}

/// Random allocation instances: `G` in `1..=max_groups`, counts in `1..=256`,
/// scores standard-normal-ish, `eta` from [`BUDGET_ETAS`].
pub fn random_allocation_instance(
    rng: &mut ChaCha8Rng,
    max_groups: usize,
) -> (Vec<f64>, Vec<usize>, BudgetConfig) {
    let g = rng.gen_range(1..=max_groups);
    let scores: Vec<f64> = (0..g).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let n: Vec<usize> = (0..g).map(|_| rng.gen_range(1..=256)).collect();
    let eta = BUDGET_ETAS[rng.gen_range(0..BUDGET_ETAS.len())];
    let cfg = BudgetConfig::with_eta(eta);
    (base_probabilities(&scores, &cfg), n, cfg)
}

pub fn oracle_agreement(seed: u64, instances: usize, max_groups: usize) -> Result<OracleAgreement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agreement = OracleAgreement::default();
    for _ in 0..instances {
        let (p, n, cfg) = random_allocation_instance(&mut rng, max_groups);
        agreement.record(&p, &n, &cfg)?;
    }
    Ok(agreement)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recovery {
    pub duplicates_planted: usize,
    pub duplicates_pruned: usize,
    pub salient_planted: usize,
    pub salient_retained: usize,
}

impl Recovery {
    pub fn duplicate_rate(&self) -> f64 {
        rate(self.duplicates_pruned, self.duplicates_planted)
    }

    pub fn salient_rate(&self) -> f64 {
        rate(self.salient_retained, self.salient_planted)
    }

    pub fn passed(&self) -> bool {
        self.duplicate_rate() >= RECOVERY_THRESHOLD && self.salient_rate() >= RECOVERY_THRESHOLD
    }
}

fn rate(hit: usize, total: usize) -> f64 {
    if total == 0 {
        1.0
    } else {
        hit as f64 / total as f64
    }
}

pub fn planted_recovery(result: &PruneResultFile, truth: &Truth) -> Recovery {
    let mut r = Recovery {
        duplicates_planted: 0,
        duplicates_pruned: 0,
        salient_planted: 0,
        salient_retained: 0,
    };
    for (g, group) in result.groups.iter().enumerate() {
        if let Some(dups) = truth.video_duplicates.get(g) {
            r.duplicates_planted += dups.len();
            r.duplicates_pruned += dups
                .iter()
                .filter(|i| group.video.binary_search(i).is_err())
                .count();
        }
        if let Some(salient) = truth.audio_salient.get(g) {
            r.salient_planted += salient.len();
            r.salient_retained += salient
                .iter()
                .filter(|i| group.audio.binary_search(i).is_ok())
                .count();
        }
    }
    r
}

/// Strategy the default threshold policy should pick for a planted regime.
pub fn expected_strategy(regime: Regime) -> Strategy {
    match regime {
        Regime::VideoHeavy => Strategy::VideoCentric,
        Regime::AudioHeavy => Strategy::AudioCentric,
        Regime::Balanced => Strategy::Uniform,
    }
}

#[derive(Debug, Clone)]
pub struct CheckLine {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub checks: Vec<CheckLine>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Runs allocator-vs-oracle and planted-signal checks on a generated directory.
pub fn verify_dir(dir: &Path) -> Result<VerifyReport> {
    let (bundle, spec) = load_dir(dir)?;
    let truth = read_truth(dir.join(TRUTH_FILE))?;
    let mut checks = Vec::new();

    let cfg = PipelineConfig {
        logit_scale: truth.logit_scale,
        ..PipelineConfig::with_eta(RECOVERY_ETA, RECOVERY_ETA)
    };
    let run = run_pipeline_detailed(&bundle, &spec, &cfg)?;

    let mut agreement = oracle_agreement(truth.seed, 1000, 16)?;
    let budget = cfg.budget(cfg.eta_video);
    let dominant = match run.plan.strategy {
        Strategy::AudioCentric => (&run.scores.s_audio, spec.audio_counts()),
        _ => (&run.scores.s_video, spec.video_counts()),
    };
    if dominant.1.iter().any(|&n| n > 0) {
        agreement.record(
            &base_probabilities(dominant.0, &budget),
            &dominant.1,
            &budget,
        )?;
    }
    checks.push(CheckLine {
        name: "allocator-oracle",
        passed: agreement.passed(),
        detail: format!(
            "{} instances, {} compared, {} mismatched (max error {:.3e}), {} ambiguous reported (max divergence {:.3e})",
            agreement.instances,
            agreement.compared,
            agreement.mismatched,
            agreement.max_error,
            agreement.ambiguous,
            agreement.ambiguous_max_divergence
        ),
    });

    let budget_ok = run.plan.residual_video.abs() <= cfg.budget_tol
        && run.plan.residual_audio.abs() <= cfg.budget_tol;
    checks.push(CheckLine {
        name: "budget",
        passed: budget_ok,
        detail: format!(
            "residual video {:.3e}, audio {:.3e} tokens",
            run.plan.residual_video, run.plan.residual_audio
        ),
    });

    checks.push(CheckLine {
        name: "strategy",
        passed: expected_strategy(truth.regime) == run.plan.strategy,
        detail: format!(
            "regime {} -> {} (gap {:.4})",
            truth.regime,
            run.plan.strategy,
            run.scores.gap()
        ),
    });

    let recovery = planted_recovery(&run.result, &truth);
    checks.push(CheckLine {
        name: "planted-video",
        passed: recovery.duplicate_rate() >= RECOVERY_THRESHOLD,
        detail: format!(
            "{}/{} planted duplicates pruned",
            recovery.duplicates_pruned, recovery.duplicates_planted
        ),
    });
    checks.push(CheckLine {
        name: "planted-audio",
        passed: recovery.salient_rate() >= RECOVERY_THRESHOLD,
        detail: format!(
            "{}/{} planted salient positions retained",
            recovery.salient_retained, recovery.salient_planted
        ),
    });

    Ok(VerifyReport { checks })
}
