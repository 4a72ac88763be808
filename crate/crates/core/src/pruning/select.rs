use std::cmp::Ordering;

use crate::allocation::retained_count;
use crate::error::{Error, Result};
use crate::tensor::MatRef;

/// Indices of the `k` largest scores, lowest index first among equals,
/// returned in ascending index order.
pub fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    select_by(scores, k, |a, b| b.total_cmp(a))
}

/// Indices of the `k` smallest scores, lowest index first among equals,
/// returned in ascending index order.
pub fn bottom_k(scores: &[f64], k: usize) -> Vec<usize> {
    select_by(scores, k, |a, b| a.total_cmp(b))
}

fn select_by(scores: &[f64], k: usize, order: impl Fn(&f64, &f64) -> Ordering) -> Vec<usize> {
    let k = k.min(scores.len());
    if k == 0 {
        return Vec::new();
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    // (score, index) is a strict total order, so the partition is unique
    let cmp = |&a: &usize, &b: &usize| order(&scores[a], &scores[b]).then(a.cmp(&b));
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, cmp);
        idx.truncate(k);
    }
    idx.sort_unstable();
    idx
}

/// Keeps the `max(1, floor((1 - rho) * m))` most attended pooled positions.
pub fn select_audio(scores_pooled: &[f64], rho: f64) -> Vec<usize> {
    top_k(scores_pooled, retained_count(rho, scores_pooled.len()))
}

/// Mean cosine similarity of each token to every token of its group
/// (itself included).
pub fn video_redundancy_scores(v: MatRef<'_>) -> Result<Vec<f64>> {
    let n = v.rows();
    if n == 0 {
        return Err(Error::Shape("redundancy of an empty group".into()));
    }
    let d = v.cols();
    let mut unit = vec![0.0f64; n * d];
    for i in 0..n {
        let row = v.row(i);
        let norm = row.iter().map(|&x| x as f64 * x as f64).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Degenerate(format!("video token {i} has zero norm")));
        }
        for (u, &x) in unit[i * d..(i + 1) * d].iter_mut().zip(row) {
            *u = x as f64 / norm;
        }
    }
    // row mean of U U^T is u_i . (sum_j u_j) / n
    let mut total = vec![0.0f64; d];
    for u in unit.chunks_exact(d) {
        for (t, &x) in total.iter_mut().zip(u) {
            *t += x;
        }
    }
    Ok(unit
        .chunks_exact(d)
        .map(|u| u.iter().zip(&total).map(|(a, b)| a * b).sum::<f64>() / n as f64)
        .collect())
}

/// Keeps the `max(1, floor((1 - rho) * n))` least redundant tokens.
pub fn select_video(scores: &[f64], rho: f64) -> Vec<usize> {
    bottom_k(scores, retained_count(rho, scores.len()))
}
