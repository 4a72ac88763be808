//! Query relevance of each modality and the pruning regime derived from it.
//!
//! Scores are cosine similarities multiplied by a logit scale; the regime
//! thresholds are expressed in the same (scaled) units.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Uniform,
    VideoCentric,
    AudioCentric,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Uniform => "uniform",
            Strategy::VideoCentric => "video-centric",
            Strategy::AudioCentric => "audio-centric",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Strategy::Uniform),
            "video-centric" => Ok(Strategy::VideoCentric),
            "audio-centric" => Ok(Strategy::AudioCentric),
            other => Err(Error::Config(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScoreScale {
    /// Plain cosines in [-1, 1].
    RawCosine,
    /// Cosines multiplied by this factor.
    Logit(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModalityScores {
    pub s_video: Vec<f64>,
    pub s_audio: Vec<f64>,
    pub mean_video: f64,
    pub mean_audio: f64,
    pub scale: ScoreScale,
}

impl ModalityScores {
    /// Wraps precomputed per-frame scores, deriving the means.
    pub fn from_scores(s_video: Vec<f64>, s_audio: Vec<f64>, scale: ScoreScale) -> Self {
        let mean_video = mean(&s_video);
        let mean_audio = mean(&s_audio);
        Self {
            s_video,
            s_audio,
            mean_video,
            mean_audio,
            scale,
        }
    }

    pub fn gap(&self) -> f64 {
        (self.mean_video - self.mean_audio).abs()
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Piecewise threshold: `theta_small` while the gap is at most
/// `gap_breakpoint`, `theta_large` beyond it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPolicy {
    pub gap_breakpoint: f64,
    pub theta_small: f64,
    pub theta_large: f64,
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        Self {
            gap_breakpoint: 2.0,
            theta_small: 0.0,
            theta_large: 5.0,
        }
    }
}

impl ThresholdPolicy {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.gap_breakpoint, self.theta_small, self.theta_large]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::Config(
                "threshold policy values must be finite".into(),
            ));
        }
        if self.gap_breakpoint < 0.0 {
            return Err(Error::Config("gap_breakpoint must be >= 0".into()));
        }
        if self.theta_small > self.theta_large {
            return Err(Error::Config(
                "theta_small must not exceed theta_large".into(),
            ));
        }
        Ok(())
    }

    pub fn theta(&self, gap: f64) -> f64 {
        if gap <= self.gap_breakpoint {
            self.theta_small
        } else {
            self.theta_large
        }
    }
}

/// Cosine of the angle between `u` and `v`, accumulated in f64.
pub fn cosine_similarity(u: &[f32], v: &[f32]) -> Result<f64> {
    if u.len() != v.len() || u.is_empty() {
        return Err(Error::Shape(format!(
            "cosine of vectors with dimensions {} and {}",
            u.len(),
            v.len()
        )));
    }
    let (mut dot, mut nu, mut nv) = (0.0f64, 0.0f64, 0.0f64);
    for (&a, &b) in u.iter().zip(v) {
        let (a, b) = (a as f64, b as f64);
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Degenerate(
            "zero-norm vector in cosine similarity".into(),
        ));
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// Per-frame text similarity of the video and audio embeddings.
///
/// Only frames `0, stride, 2*stride, ..` are scored; the frames in between
/// carry the score of the preceding scored frame so both lists keep length F.
pub fn score_modalities(
    video_emb: &Tensor,
    audio_emb: &Tensor,
    text_emb: &[f32],
    frame_stride: usize,
    logit_scale: f64,
) -> Result<ModalityScores> {
    if frame_stride == 0 {
        return Err(Error::Config("frame_stride must be >= 1".into()));
    }
    if !(logit_scale > 0.0 && logit_scale.is_finite()) {
        return Err(Error::Config("logit_scale must be positive".into()));
    }
    let video = video_emb.as_matrix()?;
    let audio = audio_emb.as_matrix()?;
    if video.rows() != audio.rows() {
        return Err(Error::Shape(format!(
            "video has {} frames, audio has {}",
            video.rows(),
            audio.rows()
        )));
    }
    if video.cols() != text_emb.len() || audio.cols() != text_emb.len() {
        return Err(Error::Shape(format!(
            "embedding dims video={} audio={} text={}",
            video.cols(),
            audio.cols(),
            text_emb.len()
        )));
    }
    if video.rows() == 0 {
        return Err(Error::Shape("no frames to score".into()));
    }

    let frames = video.rows();
    let mut s_video = Vec::with_capacity(frames);
    let mut s_audio = Vec::with_capacity(frames);
    for f in 0..frames {
        if f % frame_stride == 0 {
            s_video.push(cosine_similarity(video.row(f), text_emb)? * logit_scale);
            s_audio.push(cosine_similarity(audio.row(f), text_emb)? * logit_scale);
        } else {
            s_video.push(s_video[f - 1]);
            s_audio.push(s_audio[f - 1]);
        }
    }
    let scale = if logit_scale == 1.0 {
        ScoreScale::RawCosine
    } else {
        ScoreScale::Logit(logit_scale)
    };
    Ok(ModalityScores::from_scores(s_video, s_audio, scale))
}

pub fn classify_strategy(scores: &ModalityScores, policy: &ThresholdPolicy) -> Strategy {
    let gap = scores.gap();
    if gap <= policy.theta(gap) {
        Strategy::Uniform
    } else if scores.mean_video > scores.mean_audio {
        Strategy::VideoCentric
    } else {
        Strategy::AudioCentric
    }
}
