//! Temporal groups: each sampled frame's video tokens concatenated with the
//! audio tokens of its aligned segment.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::io::GroupSpec;
use crate::tensor::{MatRef, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modality {
    Video,
    Audio,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Video => "video",
            Modality::Audio => "audio",
        })
    }
}

impl FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "video" => Ok(Modality::Video),
            "audio" => Ok(Modality::Audio),
            other => Err(Error::Config(format!("unknown modality `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalGroup {
    pub group_id: usize,
    /// Half-open range into the global video token sequence.
    pub video_range: Range<usize>,
    /// Half-open range into the global audio token sequence.
    pub audio_range: Range<usize>,
    pub frame_index: usize,
}

impl TemporalGroup {
    pub fn range(&self, modality: Modality) -> Range<usize> {
        match modality {
            Modality::Video => self.video_range.clone(),
            Modality::Audio => self.audio_range.clone(),
        }
    }

    pub fn video_tokens(&self) -> usize {
        self.video_range.len()
    }

    pub fn audio_tokens(&self) -> usize {
        self.audio_range.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupedSequence {
    groups: Vec<TemporalGroup>,
    video_tokens: usize,
    audio_tokens: usize,
}

impl GroupedSequence {
    pub fn groups(&self) -> &[TemporalGroup] {
        &self.groups
    }

    pub fn group(&self, group_id: usize) -> Result<&TemporalGroup> {
        self.groups.get(group_id).ok_or_else(|| {
            Error::Shape(format!(
                "group {group_id} out of range (G = {})",
                self.groups.len()
            ))
        })
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// N_v
    pub fn video_tokens(&self) -> usize {
        self.video_tokens
    }

    /// N_a
    pub fn audio_tokens(&self) -> usize {
        self.audio_tokens
    }

    pub fn total(&self, modality: Modality) -> usize {
        match modality {
            Modality::Video => self.video_tokens,
            Modality::Audio => self.audio_tokens,
        }
    }

    /// Row block of `embeddings` belonging to one group, as a view.
    pub fn group_rows<'a>(
        &self,
        embeddings: MatRef<'a>,
        group_id: usize,
        modality: Modality,
    ) -> Result<MatRef<'a>> {
        let total = self.total(modality);
        if embeddings.rows() != total {
            return Err(Error::Shape(format!(
                "{modality} embeddings have {} rows, grouped sequence has {total} tokens",
                embeddings.rows()
            )));
        }
        let group = self.group(group_id)?;
        Ok(embeddings.row_block(group.range(modality)))
    }
}

/// Lays groups out back to back: group `i` starts at the sum of the counts of
/// groups `0..i`, separately per modality.
pub fn build_groups(spec: &GroupSpec) -> GroupedSequence {
    let mut video_at = 0;
    let mut audio_at = 0;
    let groups = spec
        .groups()
        .iter()
        .map(|e| {
            let g = TemporalGroup {
                group_id: e.group_id,
                video_range: video_at..video_at + e.video_tokens,
                audio_range: audio_at..audio_at + e.audio_tokens,
                frame_index: e.frame_index,
            };
            video_at += e.video_tokens;
            audio_at += e.audio_tokens;
            g
        })
        .collect();
    GroupedSequence {
        groups,
        video_tokens: video_at,
        audio_tokens: audio_at,
    }
}

/// Copies out the rows of `embeddings` that belong to `group_id`.
pub fn slice_group(
    seq: &GroupedSequence,
    embeddings: &Tensor,
    group_id: usize,
    modality: Modality,
) -> Result<Tensor> {
    let m = embeddings.as_matrix()?;
    Ok(seq.group_rows(m, group_id, modality)?.to_tensor())
}
