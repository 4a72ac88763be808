//! Brute-force reference implementations shared by the integration tests.
//!
//! Everything here is written as plainly as possible (double loops, full
//! sorts) and shares no code with the library beyond the input types.
#![allow(dead_code, clippy::needless_range_loop, clippy::manual_clamp)]

use std::fmt::Write;

use avprune::io::GroupSpec;
use avprune::pipeline::{AudioInput, InputBundle};
use avprune::Tensor;

pub const GOLDEN_SEED: u64 = 20261015;
pub const GOLDEN_GROUPS: usize = 6;
pub const GOLDEN_VIDEO: usize = 12;
pub const GOLDEN_AUDIO: usize = 7;
pub const GOLDEN_DIM: usize = 16;

/// Same slack the library uses so `(1 - 0.55) * 100` floors to 45.
const FLOOR_SLACK: f64 = 1e-9;

pub fn row(t: &Tensor, i: usize) -> Vec<f64> {
    let d = *t.shape().last().unwrap();
    t.data()[i * d..(i + 1) * d]
        .iter()
        .map(|&x| x as f64)
        .collect()
}

pub fn naive_cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for i in 0..a.len() {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Softmax of `q k^T / sqrt(d)` over `n` rows starting at `start`, one
/// entry at a time, rounded to f32 like stored attention weights.
pub fn naive_softmax(q: &Tensor, k: &Tensor, start: usize, n: usize) -> Vec<Vec<f64>> {
    let d = q.shape()[1];
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        let qi = row(q, start + i);
        let mut logits = vec![0.0; n];
        for j in 0..n {
            let kj = row(k, start + j);
            let mut dot = 0.0;
            for t in 0..d {
                dot += qi[t] * kj[t];
            }
            logits[j] = dot / (d as f64).sqrt();
        }
        let mut max = f64::NEG_INFINITY;
        for &l in &logits {
            if l > max {
                max = l;
            }
        }
        let mut total = 0.0;
        for j in 0..n {
            total += (logits[j] - max).exp();
        }
        for j in 0..n {
            out[i][j] = ((logits[j] - max).exp() / total) as f32 as f64;
        }
    }
    out
}

/// Column means of a square matrix: attention each key receives.
pub fn naive_received(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut out = vec![0.0; n];
    for j in 0..n {
        let mut s = 0.0;
        for i in 0..n {
            s += a[i][j];
        }
        out[j] = s / n as f64;
    }
    out
}

pub fn naive_pool_pairs(x: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < x.len() {
        if i + 1 < x.len() {
            out.push((x[i] + x[i + 1]) / 2.0);
        } else {
            out.push(x[i]);
        }
        i += 2;
    }
    out
}

/// Mean of each row of the full pairwise cosine matrix.
pub fn naive_redundancy(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            s += naive_cosine(&rows[i], &rows[j]);
        }
        out[i] = s / n as f64;
    }
    out
}

/// Full sort by score (descending if `largest`), lowest index first on
/// ties, first `k` taken and returned in ascending index order.
pub fn full_sort_select(scores: &[f64], k: usize, largest: bool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        let ord = if largest {
            scores[b].partial_cmp(&scores[a]).unwrap()
        } else {
            scores[a].partial_cmp(&scores[b]).unwrap()
        };
        ord.then(a.cmp(&b))
    });
    let mut kept: Vec<usize> = idx.into_iter().take(k).collect();
    kept.sort();
    kept
}

pub fn naive_retained(rho: f64, n: usize) -> usize {
    if n == 0 {
        return 0;
    }
    let k = ((1.0 - rho) * n as f64 + FLOOR_SLACK).floor() as usize;
    k.max(1).min(n)
}

pub fn naive_sigmoid_probs(scores: &[f64], eta: f64, tau: f64, eps: f64) -> Vec<f64> {
    let g = scores.len() as f64;
    let mut mu = 0.0;
    for s in scores {
        mu += s;
    }
    mu /= g;
    let mut var = 0.0;
    for s in scores {
        var += (s - mu) * (s - mu);
    }
    let sigma = (var / g).sqrt();
    if sigma <= eps {
        return vec![eta; scores.len()];
    }
    let mut out = Vec::new();
    for s in scores {
        out.push(1.0 / (1.0 + ((s - mu) / (tau * sigma)).exp()));
    }
    out
}

/// Proportional rescale then additive redistribution over unclipped groups.
pub fn naive_refine(p: &[f64], n: &[usize], eta: f64) -> Vec<f64> {
    let clip = |x: f64| x.max(0.0).min(1.0);
    let mut total = 0.0;
    let mut weighted = 0.0;
    for i in 0..p.len() {
        total += n[i] as f64;
        weighted += p[i] * n[i] as f64;
    }
    let target = eta * total;
    let mut rho: Vec<f64> = p.iter().map(|&x| clip(x * target / weighted)).collect();
    for _ in 0..32 {
        let mut pruned = 0.0;
        for i in 0..p.len() {
            pruned += rho[i] * n[i] as f64;
        }
        let deficit = target - pruned;
        if deficit.abs() <= 0.5 {
            break;
        }
        let mut free = 0usize;
        for i in 0..p.len() {
            if rho[i] > 0.0 && rho[i] < 1.0 {
                free += n[i];
            }
        }
        if free == 0 {
            break;
        }
        for i in 0..p.len() {
            if rho[i] > 0.0 && rho[i] < 1.0 {
                rho[i] = clip(rho[i] + deficit / free as f64);
            }
        }
    }
    rho
}

/// The whole compression pipeline with default settings, rendered directly
/// in the result-file text format.
pub fn naive_pipeline(
    bundle: &InputBundle,
    spec: &GroupSpec,
    eta: f64,
    logit_scale: f64,
) -> String {
    let groups = spec.groups();
    let g = groups.len();
    let text = row(&bundle.text_clip, 0);

    let mut sv = Vec::new();
    let mut sa = Vec::new();
    for f in 0..g {
        sv.push(naive_cosine(&row(&bundle.video_clip, f), &text) * logit_scale);
        sa.push(naive_cosine(&row(&bundle.audio_clip, f), &text) * logit_scale);
    }
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    let (mv, ma) = (mean(&sv), mean(&sa));
    let gap = (mv - ma).abs();
    let theta = if gap <= 2.0 { 0.0 } else { 5.0 };
    let strategy = if gap <= theta {
        "uniform"
    } else if mv > ma {
        "video-centric"
    } else {
        "audio-centric"
    };

    let nv: Vec<usize> = groups.iter().map(|e| e.video_tokens).collect();
    let na: Vec<usize> = groups.iter().map(|e| e.audio_tokens).collect();
    let driven =
        |s: &[f64], n: &[usize]| naive_refine(&naive_sigmoid_probs(s, eta, 1.0, 1e-6), n, eta);
    let (rho_v, rho_a) = match strategy {
        "video-centric" => (driven(&sv, &nv), vec![eta; g]),
        "audio-centric" => (vec![eta; g], driven(&sa, &na)),
        _ => (vec![eta; g], vec![eta; g]),
    };

    let (q, k) = match &bundle.audio {
        AudioInput::Projections { q, k } => (q, k),
        AudioInput::Attention(_) => panic!("naive pipeline expects projections"),
    };

    let mut out = String::new();
    writeln!(out, "strategy {strategy}").unwrap();
    writeln!(out, "pool_factor 2").unwrap();
    writeln!(out, "groups {g}").unwrap();
    let (mut v_before, mut v_after, mut p_before, mut p_after, mut a_before, mut a_after) =
        (0, 0, 0, 0, 0, 0);
    let (mut v_start, mut a_start) = (0, 0);
    for (i, e) in groups.iter().enumerate() {
        let rows: Vec<Vec<f64>> = (0..e.video_tokens)
            .map(|t| row(&bundle.video_emb, v_start + t))
            .collect();
        let video = full_sort_select(
            &naive_redundancy(&rows),
            naive_retained(rho_v[i], e.video_tokens),
            false,
        );

        let attn = naive_softmax(q, k, a_start, e.audio_tokens);
        let pooled = naive_pool_pairs(&naive_received(&attn));
        let audio = full_sort_select(&pooled, naive_retained(rho_a[i], pooled.len()), true);

        writeln!(
            out,
            "group {i} tokens {} {}",
            e.video_tokens, e.audio_tokens
        )
        .unwrap();
        writeln!(out, "group {i} ratio {} {}", rho_v[i], rho_a[i]).unwrap();
        write!(out, "group {i} video {}", video.len()).unwrap();
        for x in &video {
            write!(out, " {x}").unwrap();
        }
        writeln!(out).unwrap();
        write!(out, "group {i} audio {}", audio.len()).unwrap();
        for x in &audio {
            write!(out, " {x}").unwrap();
        }
        writeln!(out).unwrap();

        v_before += e.video_tokens;
        v_after += video.len();
        p_before += pooled.len();
        p_after += audio.len();
        a_before += e.audio_tokens;
        for &p in &audio {
            a_after += if 2 * p + 1 < e.audio_tokens { 2 } else { 1 };
        }
        v_start += e.video_tokens;
        a_start += e.audio_tokens;
    }
    writeln!(out, "video_tokens {v_before} {v_after}").unwrap();
    writeln!(out, "audio_positions {p_before} {p_after}").unwrap();
    writeln!(out, "audio_tokens {a_before} {a_after}").unwrap();
    writeln!(out, "tokens {} {}", v_before + a_before, v_after + a_after).unwrap();
    writeln!(
        out,
        "retained_ratio_video {}",
        v_after as f64 / v_before as f64
    )
    .unwrap();
    writeln!(
        out,
        "retained_ratio_audio {}",
        p_after as f64 / p_before as f64
    )
    .unwrap();
    writeln!(
        out,
        "retained_ratio {}",
        (v_after + a_after) as f64 / (v_before + a_before) as f64
    )
    .unwrap();
    out
}
