//! Seeded synthetic workloads with planted signal.
//!
//! Each instance plants three things and records them in a truth sidecar:
//! a modality-score gap chosen so the default threshold policy lands in the
//! requested regime, a cluster of near-duplicate video tokens per group, and
//! one pooled audio position per group whose keys attract every query.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::io::{write_group_spec, write_tensor, GroupSpec};
use crate::pipeline::{
    AudioInput, InputBundle, AUDIO_CLIP_FILE, AUDIO_QK_FILE, DEFAULT_LOGIT_SCALE, GROUPS_FILE,
    TEXT_CLIP_FILE, VIDEO_CLIP_FILE, VIDEO_EMB_FILE,
};
use crate::tensor::Tensor;

pub const TRUTH_FILE: &str = "truth.txt";

/// Mean text cosine of the less relevant modality.
const BASE_COSINE: f64 = 0.2;
/// Half-width of the per-frame cosine spread around each modality mean.
const FRAME_SPREAD: f64 = 0.03;
/// Logit by which a salient audio key beats an average key.
const ATTENTION_MARGIN: f64 = 4.0;
/// Per-coordinate noise of duplicate video tokens relative to their anchor.
const DUPLICATE_NOISE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    VideoHeavy,
    AudioHeavy,
    Balanced,
}

impl Regime {
    /// Planted |mean_video - mean_audio| in logit units.
    pub fn planted_gap(self) -> f64 {
        match self {
            Regime::VideoHeavy | Regime::AudioHeavy => 1.0,
            Regime::Balanced => 3.5,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::VideoHeavy => "video-heavy",
            Regime::AudioHeavy => "audio-heavy",
            Regime::Balanced => "balanced",
        })
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "video-heavy" => Ok(Regime::VideoHeavy),
            "audio-heavy" => Ok(Regime::AudioHeavy),
            "balanced" => Ok(Regime::Balanced),
            other => Err(Error::Config(format!(
                "unknown regime `{other}` (expected video-heavy, audio-heavy or balanced)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub seed: u64,
    pub groups: usize,
    pub video_tokens: usize,
    pub audio_tokens: usize,
    pub dim: usize,
    pub regime: Regime,
    pub logit_scale: f64,
}

impl SynthParams {
    pub fn new(
        seed: u64,
        groups: usize,
        video_tokens: usize,
        audio_tokens: usize,
        dim: usize,
        regime: Regime,
    ) -> Self {
        Self {
            seed,
            groups,
            video_tokens,
            audio_tokens,
            dim,
            regime,
            logit_scale: DEFAULT_LOGIT_SCALE,
        }
    }
}

/// What the generator planted, per group.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub regime: Regime,
    pub seed: u64,
    pub logit_scale: f64,
    pub planted_gap: f64,
    pub attention_margin: f64,
    /// Near-duplicate video tokens (local indices), excluding the cluster's
    /// first member.
    pub video_duplicates: Vec<Vec<usize>>,
    /// Pooled audio positions whose keys attract all queries.
    pub audio_salient: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub bundle: InputBundle,
    pub spec: GroupSpec,
    pub truth: Truth,
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| gaussian(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Unit vector at cosine `c` to the unit vector `t`.
fn at_cosine(rng: &mut ChaCha8Rng, t: &[f64], c: f64) -> Vec<f64> {
    let w = loop {
        let r = random_unit(rng, t.len());
        let along: f64 = r.iter().zip(t).map(|(a, b)| a * b).sum();
        let orth: Vec<f64> = r.iter().zip(t).map(|(a, b)| a - along * b).collect();
        let norm = orth.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 {
            break orth.into_iter().map(|x| x / norm).collect::<Vec<_>>();
        }
    };
    let s = (1.0 - c * c).max(0.0).sqrt();
    t.iter().zip(&w).map(|(a, b)| c * a + s * b).collect()
}

/// `count` cosines spread uniformly around `mean` with an exact sample mean.
fn frame_cosines(rng: &mut ChaCha8Rng, count: usize, mean: f64) -> Vec<f64> {
    let dev: Vec<f64> = (0..count)
        .map(|_| rng.gen_range(-FRAME_SPREAD..=FRAME_SPREAD))
        .collect();
    let offset = dev.iter().sum::<f64>() / count as f64;
    dev.into_iter().map(|d| mean + d - offset).collect()
}

fn to_f32(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

pub fn generate_synthetic(params: &SynthParams) -> Result<SyntheticInstance> {
    let SynthParams {
        seed,
        groups,
        video_tokens,
        audio_tokens,
        dim,
        regime,
        logit_scale,
    } = *params;
    if groups == 0 || dim < 2 || (video_tokens == 0 && audio_tokens == 0) {
        return Err(Error::Config(
            "synthetic instances need groups >= 1, dim >= 2 and some tokens".into(),
        ));
    }
    if logit_scale.is_nan() || logit_scale <= 0.0 {
        return Err(Error::Config("logit_scale must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // modality relevance
    let text = random_unit(&mut rng, dim);
    let gap = regime.planted_gap() / logit_scale;
    let (mean_v, mean_a) = match regime {
        Regime::VideoHeavy => (BASE_COSINE + gap, BASE_COSINE),
        Regime::AudioHeavy => (BASE_COSINE, BASE_COSINE + gap),
        Regime::Balanced => {
            if rng.gen_bool(0.5) {
                (BASE_COSINE + gap, BASE_COSINE)
            } else {
                (BASE_COSINE, BASE_COSINE + gap)
            }
        }
    };
    let mut video_clip = Vec::with_capacity(groups * dim);
    for c in frame_cosines(&mut rng, groups, mean_v) {
        video_clip.extend(to_f32(&at_cosine(&mut rng, &text, c)));
    }
    let mut audio_clip = Vec::with_capacity(groups * dim);
    for c in frame_cosines(&mut rng, groups, mean_a) {
        audio_clip.extend(to_f32(&at_cosine(&mut rng, &text, c)));
    }

    // video tokens with one near-duplicate cluster per group
    let mut video_emb = Vec::with_capacity(groups * video_tokens * dim);
    let mut video_duplicates = Vec::with_capacity(groups);
    for _ in 0..groups {
        let mut tokens: Vec<Vec<f64>> = (0..video_tokens)
            .map(|_| (0..dim).map(|_| gaussian(&mut rng)).collect())
            .collect();
        let mut dups = Vec::new();
        if video_tokens >= 4 {
            let cluster = (video_tokens / 12).max(2);
            let mut members: Vec<usize> = (0..video_tokens).collect();
            members.shuffle(&mut rng);
            members.truncate(cluster);
            members.sort_unstable();
            let anchor: Vec<f64> = (0..dim).map(|_| gaussian(&mut rng)).collect();
            for &m in &members {
                tokens[m] = anchor
                    .iter()
                    .map(|a| a + DUPLICATE_NOISE * gaussian(&mut rng))
                    .collect();
            }
            dups = members[1..].to_vec();
        }
        for t in &tokens {
            video_emb.extend(to_f32(t));
        }
        video_duplicates.push(dups);
    }

    // audio projections with one salient pooled position per group
    let pool = 2;
    let amp = (ATTENTION_MARGIN * (dim as f64).sqrt()).sqrt();
    let direction = random_unit(&mut rng, dim);
    let mut q = Vec::with_capacity(groups * audio_tokens * dim);
    let mut k = Vec::with_capacity(groups * audio_tokens * dim);
    let mut audio_salient = Vec::with_capacity(groups);
    for _ in 0..groups {
        if audio_tokens == 0 {
            audio_salient.push(Vec::new());
            continue;
        }
        let positions = audio_tokens.div_ceil(pool);
        let salient = rng.gen_range(0..positions);
        let salient_tokens = salient * pool..((salient + 1) * pool).min(audio_tokens);
        for j in 0..audio_tokens {
            for &u in &direction {
                q.push((amp * u + 0.3 * gaussian(&mut rng)) as f32);
            }
            let boost = if salient_tokens.contains(&j) {
                amp
            } else {
                0.0
            };
            for &u in &direction {
                k.push((boost * u + gaussian(&mut rng)) as f32);
            }
        }
        audio_salient.push(vec![salient]);
    }

    let n_a = groups * audio_tokens;
    let bundle = InputBundle {
        video_clip: Tensor::new(vec![groups, dim], video_clip)?,
        audio_clip: Tensor::new(vec![groups, dim], audio_clip)?,
        text_clip: Tensor::new(vec![dim], to_f32(&text))?,
        video_emb: Tensor::new(vec![groups * video_tokens, dim], video_emb)?,
        audio: AudioInput::Projections {
            q: Tensor::new(vec![n_a, dim], q)?,
            k: Tensor::new(vec![n_a, dim], k)?,
        },
    };
    Ok(SyntheticInstance {
        bundle,
        spec: GroupSpec::uniform(groups, video_tokens, audio_tokens)?,
        truth: Truth {
            regime,
            seed,
            logit_scale,
            planted_gap: regime.planted_gap(),
            attention_margin: ATTENTION_MARGIN,
            video_duplicates,
            audio_salient,
        },
    })
}

impl SyntheticInstance {
    /// Writes the OMST tensors, group spec and truth sidecar into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_tensor(&self.bundle.video_clip, dir.join(VIDEO_CLIP_FILE))?;
        write_tensor(&self.bundle.audio_clip, dir.join(AUDIO_CLIP_FILE))?;
        write_tensor(&self.bundle.text_clip, dir.join(TEXT_CLIP_FILE))?;
        write_tensor(&self.bundle.video_emb, dir.join(VIDEO_EMB_FILE))?;
        let qk =
            self.bundle.audio.to_stacked().ok_or_else(|| {
                Error::Invariant("synthetic audio must be Q/K projections".into())
            })?;
        write_tensor(&qk, dir.join(AUDIO_QK_FILE))?;
        write_group_spec(&self.spec, dir.join(GROUPS_FILE))?;
        let path = dir.join(TRUTH_FILE);
        fs::write(&path, format_truth(&self.truth)).map_err(|e| Error::io(&path, e))
    }
}

pub fn format_truth(t: &Truth) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "regime {}", t.regime);
    let _ = writeln!(out, "seed {}", t.seed);
    let _ = writeln!(out, "logit_scale {}", t.logit_scale);
    let _ = writeln!(out, "planted_gap {}", t.planted_gap);
    let _ = writeln!(out, "attention_margin {}", t.attention_margin);
    let _ = writeln!(out, "groups {}", t.video_duplicates.len());
    for (g, (dups, salient)) in t.video_duplicates.iter().zip(&t.audio_salient).enumerate() {
        let _ = write!(out, "group {g} video_duplicates {}", dups.len());
        dups.iter().for_each(|i| {
            let _ = write!(out, " {i}");
        });
        let _ = write!(out, "\ngroup {g} audio_salient {}", salient.len());
        salient.iter().for_each(|i| {
            let _ = write!(out, " {i}");
        });
        out.push('\n');
    }
    out
}

pub fn read_truth(path: impl AsRef<Path>) -> Result<Truth> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_truth(&text)
}

pub fn parse_truth(text: &str) -> Result<Truth> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, f)| !f.is_empty());
    let mut field = |key: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((n, f)) if f.len() == 2 && f[0] == key => Ok((n, f[1].to_string())),
            Some((n, _)) => Err(Error::parse(n, format!("expected `{key} <value>`"))),
            None => Err(Error::parse(0, format!("missing `{key}`"))),
        }
    };
    fn num<T: FromStr>(v: (usize, String)) -> Result<T> {
        v.1.parse()
            .map_err(|_| Error::parse(v.0, format!("cannot parse `{}`", v.1)))
    }
    let regime: Regime = field("regime")?.1.parse()?;
    let seed = num(field("seed")?)?;
    let logit_scale = num(field("logit_scale")?)?;
    let planted_gap = num(field("planted_gap")?)?;
    let attention_margin = num(field("attention_margin")?)?;
    let groups: usize = num(field("groups")?)?;

    let mut video_duplicates = Vec::with_capacity(groups);
    let mut audio_salient = Vec::with_capacity(groups);
    for g in 0..groups {
        for (key, dest) in [
            ("video_duplicates", &mut video_duplicates),
            ("audio_salient", &mut audio_salient),
        ] {
            let (n, f) = lines
                .next()
                .ok_or_else(|| Error::parse(0, format!("missing group {g} {key}")))?;
            let gid = g.to_string();
            match &f[..] {
                ["group", id, k, count, rest @ ..] if *id == gid && *k == key => {
                    let idx: Vec<usize> = rest
                        .iter()
                        .map(|s| s.parse().map_err(|_| Error::parse(n, "bad index")))
                        .collect::<Result<_>>()?;
                    if count.parse::<usize>().ok() != Some(idx.len()) {
                        return Err(Error::parse(n, "index count mismatch"));
                    }
                    dest.push(idx);
                }
                _ => return Err(Error::parse(n, format!("expected `group {g} {key} ..`"))),
            }
        }
    }
    Ok(Truth {
        regime,
        seed,
        logit_scale,
        planted_gap,
        attention_margin,
        video_duplicates,
        audio_salient,
    })
}
