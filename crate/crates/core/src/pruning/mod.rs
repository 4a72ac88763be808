//! Within-group token selection.
//!
//! Audio tokens are ranked by the attention they receive inside the group
//! (pooled to encoder output granularity) and the most attended are kept.
//! Video tokens are ranked by mean cosine similarity to the other tokens of
//! the group and the least redundant are kept.

mod attention;
mod select;

pub use attention::{
    average_attention, check_row_stochastic, compute_attention, pool_attention, pool_scores,
    GlobalAttention, ROW_SUM_TOL,
};
pub use select::{bottom_k, select_audio, select_video, top_k, video_redundancy_scores};

use crate::allocation::AllocationPlan;
use crate::error::{Error, Result};
use crate::grouping::{Modality, TemporalGroup};
use crate::tensor::{MatRef, Tensor};

/// Audio attention source for one group.
#[derive(Debug, Clone, Copy)]
pub enum AudioAttention<'a> {
    /// Query and key projections of the group's audio tokens, `n x d_k` each.
    Projections { q: MatRef<'a>, k: MatRef<'a> },
    /// Attention weights, `[n, n]` or `[H, n, n]`, rows summing to one.
    Weights(&'a Tensor),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetainedIndices {
    pub group_id: usize,
    pub modality: Modality,
    /// Strictly increasing local indices. Audio indices are pooled positions.
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupSelection {
    pub video: RetainedIndices,
    pub audio: RetainedIndices,
}

/// Per-key audio salience pooled by `pool_factor`.
pub fn audio_salience(attn: AudioAttention<'_>, pool_factor: usize) -> Result<Vec<f64>> {
    let owned;
    let weights = match attn {
        AudioAttention::Projections { q, k } => {
            owned = compute_attention(q, k)?;
            &owned
        }
        AudioAttention::Weights(w) => {
            check_row_stochastic(w)?;
            w
        }
    };
    Ok(pool_scores(&average_attention(weights)?, pool_factor))
}

fn attention_tokens(attn: &AudioAttention<'_>) -> usize {
    match attn {
        AudioAttention::Projections { q, .. } => q.rows(),
        AudioAttention::Weights(w) => *w.shape().last().unwrap_or(&0),
    }
}

pub fn prune_group(
    group: &TemporalGroup,
    video_emb: MatRef<'_>,
    audio_attn: Option<AudioAttention<'_>>,
    plan: &AllocationPlan,
    pool_factor: usize,
) -> Result<GroupSelection> {
    let id = group.group_id;
    if id >= plan.len() {
        return Err(Error::Shape(format!(
            "plan covers {} groups, asked for group {id}",
            plan.len()
        )));
    }
    if pool_factor == 0 {
        return Err(Error::Config("pool_factor must be >= 1".into()));
    }
    if video_emb.rows() != group.video_tokens() {
        return Err(Error::Shape(format!(
            "group {id}: {} video rows for {} video tokens",
            video_emb.rows(),
            group.video_tokens()
        )));
    }

    let video = if group.video_tokens() == 0 {
        Vec::new()
    } else {
        let scores = video_redundancy_scores(video_emb)?;
        select_video(&scores, plan.rho_video[id])
    };

    let audio = match (group.audio_tokens(), audio_attn) {
        (0, _) => Vec::new(),
        (n, Some(attn)) => {
            if attention_tokens(&attn) != n {
                return Err(Error::Shape(format!(
                    "group {id}: attention over {} tokens, group has {n} audio tokens",
                    attention_tokens(&attn)
                )));
            }
            let pooled = audio_salience(attn, pool_factor)?;
            select_audio(&pooled, plan.rho_audio[id])
        }
        (n, None) => {
            return Err(Error::Shape(format!(
                "group {id} has {n} audio tokens but no attention input"
            )))
        }
    };

    Ok(GroupSelection {
        video: RetainedIndices {
            group_id: id,
            modality: Modality::Video,
            indices: video,
        },
        audio: RetainedIndices {
            group_id: id,
            modality: Modality::Audio,
            indices: audio,
        },
    })
}
