//! End-to-end compression: score, classify, allocate, prune every group,
//! assemble.

use std::path::{Path, PathBuf};

use crate::allocation::{allocate, AllocationPlan, BudgetConfig};
use crate::cost::{estimate_cost, CostEstimate};
use crate::error::{Error, Result, Stage, StageExt};
use crate::grouping::{build_groups, GroupedSequence};
use crate::io::{read_group_spec, read_tensor, GroupRetention, GroupSpec, PruneResultFile};
use crate::par::{map_indices, Execution};
use crate::pruning::{prune_group, AudioAttention, GlobalAttention};
use crate::scoring::{classify_strategy, score_modalities, ModalityScores, ThresholdPolicy};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub eta_video: f64,
    pub eta_audio: f64,
    pub policy: ThresholdPolicy,
    pub tau: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    pub budget_tol: f64,
    pub frame_stride: usize,
    pub logit_scale: f64,
    pub pool_factor: usize,
    pub execution: Execution,
}

pub const DEFAULT_ETA: f64 = 0.7;
pub const DEFAULT_LOGIT_SCALE: f64 = 100.0;

impl Default for PipelineConfig {
    fn default() -> Self {
        let b = BudgetConfig::default();
        Self {
            eta_video: DEFAULT_ETA,
            eta_audio: DEFAULT_ETA,
            policy: ThresholdPolicy::default(),
            tau: b.tau,
            epsilon: b.epsilon,
            max_iters: b.max_iters,
            budget_tol: b.budget_tol,
            frame_stride: 1,
            logit_scale: DEFAULT_LOGIT_SCALE,
            pool_factor: 2,
            execution: Execution::default(),
        }
    }
}

impl PipelineConfig {
    pub fn with_eta(eta_video: f64, eta_audio: f64) -> Self {
        Self {
            eta_video,
            eta_audio,
            ..Self::default()
        }
    }

    pub fn budget(&self, eta: f64) -> BudgetConfig {
        BudgetConfig {
            eta,
            tau: self.tau,
            epsilon: self.epsilon,
            max_iters: self.max_iters,
            budget_tol: self.budget_tol,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.budget(self.eta_video).validate()?;
        self.budget(self.eta_audio).validate()?;
        self.policy.validate()?;
        if self.frame_stride == 0 {
            return Err(Error::Config("frame_stride must be >= 1".into()));
        }
        if !(self.logit_scale > 0.0 && self.logit_scale.is_finite()) {
            return Err(Error::Config("logit_scale must be positive".into()));
        }
        if self.pool_factor == 0 {
            return Err(Error::Config("pool_factor must be >= 1".into()));
        }
        Ok(())
    }
}

/// Audio attention source for the whole audio sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum AudioInput {
    /// Query and key projections, `N_a x d_k` each.
    Projections { q: Tensor, k: Tensor },
    /// Attention weights, `[N_a, N_a]` or `[H, N_a, N_a]`.
    Attention(Tensor),
}

impl AudioInput {
    /// Splits a stacked `[2, N_a, d_k]` tensor (Q first, then K).
    pub fn from_stacked(qk: Tensor) -> Result<Self> {
        let (n, d) = match qk.shape()[..] {
            [2, n, d] => (n, d),
            _ => {
                return Err(Error::Shape(format!(
                    "audio Q/K must have shape [2, N_a, d_k], got {:?}",
                    qk.shape()
                )))
            }
        };
        let mut data = qk.into_data();
        let k = data.split_off(n * d);
        Ok(AudioInput::Projections {
            q: Tensor::new(vec![n, d], data)?,
            k: Tensor::new(vec![n, d], k)?,
        })
    }

    /// Inverse of [`AudioInput::from_stacked`]; `None` for attention weights.
    pub fn to_stacked(&self) -> Option<Tensor> {
        match self {
            AudioInput::Projections { q, k } => {
                let mut data = q.data().to_vec();
                data.extend_from_slice(k.data());
                let mut shape = vec![2];
                shape.extend_from_slice(q.shape());
                Tensor::new(shape, data).ok()
            }
            AudioInput::Attention(_) => None,
        }
    }
}

/// Everything the pipeline consumes besides the group spec and config.
#[derive(Debug, Clone, PartialEq)]
pub struct InputBundle {
    /// Per-frame video embeddings in the shared text space, `F x D_clip`.
    pub video_clip: Tensor,
    /// Per-frame audio embeddings in the shared text space, `F x D_clip`.
    pub audio_clip: Tensor,
    /// Query text embedding, `[D_clip]` or `[1, D_clip]`.
    pub text_clip: Tensor,
    /// Video token embeddings, `N_v x D`.
    pub video_emb: Tensor,
    pub audio: AudioInput,
}

/// Paths of the tensors making up an [`InputBundle`].
#[derive(Debug, Clone)]
pub struct BundlePaths {
    pub video_clip: PathBuf,
    pub audio_clip: PathBuf,
    pub text_clip: PathBuf,
    pub video_emb: PathBuf,
    pub audio_qk: Option<PathBuf>,
    pub audio_attn: Option<PathBuf>,
}

pub const VIDEO_CLIP_FILE: &str = "video_clip.omst";
pub const AUDIO_CLIP_FILE: &str = "audio_clip.omst";
pub const TEXT_CLIP_FILE: &str = "text_clip.omst";
pub const VIDEO_EMB_FILE: &str = "video_emb.omst";
pub const AUDIO_QK_FILE: &str = "audio_qk.omst";
pub const AUDIO_ATTN_FILE: &str = "audio_attn.omst";
pub const GROUPS_FILE: &str = "groups.txt";

impl BundlePaths {
    /// Standard file names inside `dir`; prefers Q/K over attention weights.
    pub fn in_dir(dir: &Path) -> Self {
        let qk = dir.join(AUDIO_QK_FILE);
        let (audio_qk, audio_attn) = if qk.exists() {
            (Some(qk), None)
        } else {
            (None, Some(dir.join(AUDIO_ATTN_FILE)))
        };
        Self {
            video_clip: dir.join(VIDEO_CLIP_FILE),
            audio_clip: dir.join(AUDIO_CLIP_FILE),
            text_clip: dir.join(TEXT_CLIP_FILE),
            video_emb: dir.join(VIDEO_EMB_FILE),
            audio_qk,
            audio_attn,
        }
    }

    pub fn load(&self) -> Result<InputBundle> {
        let audio = match (&self.audio_qk, &self.audio_attn) {
            (Some(qk), None) => AudioInput::from_stacked(read_tensor(qk)?)?,
            (None, Some(attn)) => AudioInput::Attention(read_tensor(attn)?),
            _ => {
                return Err(Error::Config(
                    "exactly one of audio Q/K or audio attention is required".into(),
                ))
            }
        };
        Ok(InputBundle {
            video_clip: read_tensor(&self.video_clip)?,
            audio_clip: read_tensor(&self.audio_clip)?,
            text_clip: read_tensor(&self.text_clip)?,
            video_emb: read_tensor(&self.video_emb)?,
            audio,
        })
    }
}

/// Loads the bundle and group spec written by the synthetic generator.
pub fn load_dir(dir: &Path) -> Result<(InputBundle, GroupSpec)> {
    let bundle = BundlePaths::in_dir(dir).load()?;
    let spec = read_group_spec(dir.join(GROUPS_FILE))?;
    Ok((bundle, spec))
}

/// Intermediate products of one pipeline run.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub scores: ModalityScores,
    pub plan: AllocationPlan,
    pub result: PruneResultFile,
    pub cost: CostEstimate,
}

pub fn run_pipeline(
    bundle: &InputBundle,
    spec: &GroupSpec,
    cfg: &PipelineConfig,
) -> Result<PruneResultFile> {
    run_pipeline_detailed(bundle, spec, cfg).map(|r| r.result)
}

pub fn run_pipeline_detailed(
    bundle: &InputBundle,
    spec: &GroupSpec,
    cfg: &PipelineConfig,
) -> Result<PipelineRun> {
    cfg.validate().stage(Stage::Load)?;
    let seq = build_groups(spec);
    let video = bundle.video_emb.as_matrix().stage(Stage::Group)?;
    if video.rows() != seq.video_tokens() {
        return Err(Error::Shape(format!(
            "video embeddings have {} rows, group spec has {} video tokens",
            video.rows(),
            seq.video_tokens()
        )))
        .stage(Stage::Group);
    }

    let text = bundle.text_clip.as_vector().stage(Stage::Score)?;
    let scores = score_modalities(
        &bundle.video_clip,
        &bundle.audio_clip,
        text,
        cfg.frame_stride,
        cfg.logit_scale,
    )
    .stage(Stage::Score)?;
    if scores.s_video.len() != seq.len() {
        return Err(Error::Shape(format!(
            "{} scored frames for {} temporal groups",
            scores.s_video.len(),
            seq.len()
        )))
        .stage(Stage::Score);
    }

    let strategy = classify_strategy(&scores, &cfg.policy);
    let plan = allocate(
        &scores.s_video,
        &scores.s_audio,
        &spec.video_counts(),
        &spec.audio_counts(),
        strategy,
        &cfg.budget(cfg.eta_video),
        &cfg.budget(cfg.eta_audio),
    )
    .stage(Stage::Allocate)?;

    // attention for the whole audio sequence is computed once, then sliced
    let attention = global_attention(&bundle.audio, &seq, cfg.execution).stage(Stage::Attention)?;

    let selections = map_indices(seq.len(), cfg.execution, |g| {
        let group = &seq.groups()[g];
        let rows = video.row_block(group.video_range.clone());
        let audio = attention.block(g).map(AudioAttention::Weights);
        prune_group(group, rows, audio, &plan, cfg.pool_factor)
    });

    let mut groups = Vec::with_capacity(seq.len());
    for (group, selection) in seq.groups().iter().zip(selections) {
        let selection = selection.stage(Stage::Prune)?;
        let id = group.group_id;
        groups.push(GroupRetention {
            group_id: id,
            video_tokens: group.video_tokens(),
            audio_tokens: group.audio_tokens(),
            rho_video: plan.rho_video[id],
            rho_audio: plan.rho_audio[id],
            video: selection.video.indices,
            audio: selection.audio.indices,
        });
    }
    let result = PruneResultFile {
        strategy,
        pool_factor: cfg.pool_factor,
        groups,
    };
    result
        .validate()
        .map_err(|e| Error::Invariant(e.to_string()))
        .stage(Stage::Assemble)?;

    let summary = result.summary();
    let cost = estimate_cost(
        &[summary.video_tokens_before, summary.audio_tokens_before],
        &[summary.video_tokens_after, summary.audio_tokens_after],
    )
    .stage(Stage::Assemble)?;

    Ok(PipelineRun {
        scores,
        plan,
        result,
        cost,
    })
}

fn global_attention(
    audio: &AudioInput,
    seq: &GroupedSequence,
    exec: Execution,
) -> Result<GlobalAttention> {
    match audio {
        AudioInput::Projections { q, k } => {
            GlobalAttention::from_projections(q.as_matrix()?, k.as_matrix()?, seq, exec)
        }
        AudioInput::Attention(weights) => GlobalAttention::from_weights(weights, seq),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stacked_qk_round_trip() {
        let t = Tensor::new(vec![2, 3, 2], (0..12).map(|x| x as f32).collect()).unwrap();
        let input = AudioInput::from_stacked(t.clone()).unwrap();
        match &input {
            AudioInput::Projections { q, k } => {
                assert_eq!(q.data(), &[0., 1., 2., 3., 4., 5.]);
                assert_eq!(k.data()[0], 6.0);
            }
            _ => unreachable!(),
        }
        assert_eq!(input.to_stacked().unwrap(), t);
        assert!(AudioInput::from_stacked(Tensor::zeros(vec![3, 2, 2])).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(PipelineConfig::default().validate().is_ok());
        assert!(PipelineConfig::with_eta(1.2, 0.5).validate().is_err());
        let cfg = PipelineConfig {
            pool_factor: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
