//! Audio salience from encoder self-attention.

use crate::error::{Error, Result};
use crate::grouping::GroupedSequence;
use crate::par::{map_indices, Execution};
use crate::tensor::{MatRef, Tensor};

/// Tolerance on row sums of caller-supplied attention weights.
pub const ROW_SUM_TOL: f64 = 1e-4;

/// `softmax(Q K^T / sqrt(d_k))`, row-wise with max subtraction.
pub fn compute_attention(q: MatRef<'_>, k: MatRef<'_>) -> Result<Tensor> {
    if q.rows() != k.rows() || q.cols() != k.cols() {
        return Err(Error::Shape(format!(
            "Q is {}x{}, K is {}x{}",
            q.rows(),
            q.cols(),
            k.rows(),
            k.cols()
        )));
    }
    if q.rows() == 0 || q.cols() == 0 {
        return Err(Error::Shape("attention needs n >= 1 and d_k >= 1".into()));
    }
    let n = q.rows();
    let scale = 1.0 / (q.cols() as f64).sqrt();
    let mut out = Vec::with_capacity(n * n);
    let mut logits = vec![0.0f64; n];
    for i in 0..n {
        let qi = q.row(i);
        for (j, l) in logits.iter_mut().enumerate() {
            let dot: f64 = qi
                .iter()
                .zip(k.row(j))
                .map(|(&a, &b)| a as f64 * b as f64)
                .sum();
            *l = dot * scale;
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for l in logits.iter_mut() {
            *l = (*l - max).exp();
            total += *l;
        }
        out.extend(logits.iter().map(|&e| (e / total) as f32));
    }
    Tensor::new(vec![n, n], out)
}

/// Splits `[H, n, n]` or `[n, n]` into (heads, n).
fn attention_dims(a: &Tensor) -> Result<(usize, usize)> {
    match a.shape()[..] {
        [n, m] if n == m => Ok((1, n)),
        [h, n, m] if n == m && h >= 1 => Ok((h, n)),
        _ => Err(Error::Shape(format!(
            "attention must be [n, n] or [H, n, n], got {:?}",
            a.shape()
        ))),
    }
}

/// Checks every attention row sums to one within [`ROW_SUM_TOL`].
pub fn check_row_stochastic(a: &Tensor) -> Result<()> {
    let (_, n) = attention_dims(a)?;
    if n == 0 {
        return Ok(());
    }
    for (r, row) in a.data().chunks_exact(n).enumerate() {
        let sum: f64 = row.iter().map(|&x| x as f64).sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL || row.iter().any(|&x| x < 0.0) {
            return Err(Error::Degenerate(format!(
                "attention row {r} is not a probability distribution (sum {sum})"
            )));
        }
    }
    Ok(())
}

/// Received attention per key: mean over heads, then over queries.
pub fn average_attention(a: &Tensor) -> Result<Vec<f64>> {
    let (heads, n) = attention_dims(a)?;
    if n == 0 {
        return Err(Error::Shape("empty attention matrix".into()));
    }
    let mut scores = vec![0.0f64; n];
    for row in a.data().chunks_exact(n) {
        for (s, &x) in scores.iter_mut().zip(row) {
            *s += x as f64;
        }
    }
    let rows = (heads * n) as f64;
    scores.iter_mut().for_each(|s| *s /= rows);
    Ok(scores)
}

/// Means over consecutive windows of `factor` scores; a shorter trailing
/// window is averaged over the elements it has.
pub fn pool_scores(scores: &[f64], factor: usize) -> Vec<f64> {
    assert!(factor >= 1, "pool factor must be >= 1");
    scores
        .chunks(factor)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect()
}

/// Adjacent-pair pooling matching a 2x downsampling encoder stage.
pub fn pool_attention(scores: &[f64]) -> Vec<f64> {
    pool_scores(scores, 2)
}

/// Per-group attention blocks for the whole audio sequence.
///
/// Restricting a row of a softmax to a subset of keys and renormalising is
/// the same as taking the softmax over that subset alone, so slicing one
/// global attention map by group yields each group's own attention matrix.
#[derive(Debug, Clone)]
pub struct GlobalAttention {
    blocks: Vec<Option<Tensor>>,
}

impl GlobalAttention {
    /// Computes attention once for every group from projections of the full
    /// audio sequence (`N_a x d_k` each).
    pub fn from_projections(
        q: MatRef<'_>,
        k: MatRef<'_>,
        seq: &GroupedSequence,
        exec: Execution,
    ) -> Result<Self> {
        if q.rows() != seq.audio_tokens() || k.rows() != seq.audio_tokens() {
            return Err(Error::Shape(format!(
                "audio projections have {}/{} rows, sequence has {} audio tokens",
                q.rows(),
                k.rows(),
                seq.audio_tokens()
            )));
        }
        let blocks = map_indices(seq.len(), exec, |g| {
            let range = seq.groups()[g].audio_range.clone();
            if range.is_empty() {
                return Ok(None);
            }
            compute_attention(q.row_block(range.clone()), k.row_block(range)).map(Some)
        });
        Ok(Self {
            blocks: blocks.into_iter().collect::<Result<_>>()?,
        })
    }

    /// Slices precomputed `[N_a, N_a]` or `[H, N_a, N_a]` attention weights
    /// into renormalised per-group blocks.
    pub fn from_weights(weights: &Tensor, seq: &GroupedSequence) -> Result<Self> {
        let (heads, n) = attention_dims(weights)?;
        if n != seq.audio_tokens() {
            return Err(Error::Shape(format!(
                "attention covers {n} audio tokens, sequence has {}",
                seq.audio_tokens()
            )));
        }
        check_row_stochastic(weights)?;
        let data = weights.data();
        let mut blocks = Vec::with_capacity(seq.len());
        for group in seq.groups() {
            let range = group.audio_range.clone();
            let m = range.len();
            if m == 0 {
                blocks.push(None);
                continue;
            }
            let mut block = Vec::with_capacity(heads * m * m);
            for h in 0..heads {
                for i in range.clone() {
                    let start = h * n * n + i * n;
                    let row = &data[start + range.start..start + range.end];
                    let sum: f64 = row.iter().map(|&x| x as f64).sum();
                    if sum > 0.0 {
                        block.extend(row.iter().map(|&x| (x as f64 / sum) as f32));
                    } else {
                        // no mass inside the group: treat the row as uninformative
                        block.extend(std::iter::repeat_n(1.0 / m as f32, m));
                    }
                }
            }
            let shape = if weights.ndim() == 2 {
                vec![m, m]
            } else {
                vec![heads, m, m]
            };
            blocks.push(Some(Tensor::new(shape, block)?));
        }
        Ok(Self { blocks })
    }

    /// Attention block for one group; `None` when the group has no audio.
    pub fn block(&self, group_id: usize) -> Option<&Tensor> {
        self.blocks.get(group_id).and_then(|b| b.as_ref())
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}
