//! The scorer's loss stack as plain functions: frame-level binary
//! cross-entropy, hinge triplet loss over memory reads, and a KL term
//! pulling the normal-memory reads toward a standard Gaussian.
//!
//! These mirror the graph ops in `autograd` value-for-value; training uses
//! the graph versions, tests and callers use these.

use ndarray::ArrayView2;

use crate::timeline::{FrameLabels, ScoreTimeline};
use crate::{Error, Result};

pub(crate) const BCE_EPS: f64 = 1e-7;
pub(crate) const VAR_FLOOR: f64 = 1e-8;

/// Mean binary cross-entropy between scores and frame labels, with the
/// number of scores that had to be clamped away from {0, 1}.
pub fn loss_as_detailed(scores: &ScoreTimeline, labels: &FrameLabels) -> Result<(f64, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::Shape {
            expected: format!("{} labels", scores.len()),
            actual: format!("{} labels", labels.len()),
        });
    }
    if scores.is_empty() {
        return Err(Error::validation("empty timeline"));
    }
    let mut clamped = 0usize;
    let t = scores.len() as f64;
    let loss = scores
        .scores
        .iter()
        .zip(&labels.labels)
        .map(|(&s, &y)| {
            let s = if !(BCE_EPS..=1.0 - BCE_EPS).contains(&s) {
                clamped += 1;
                s.clamp(BCE_EPS, 1.0 - BCE_EPS)
            } else {
                s
            };
            let y = y as f64;
            -(y * s.ln() + (1.0 - y) * (1.0 - s).ln())
        })
        .sum::<f64>()
        / t;
    Ok((loss, clamped))
}

/// Mean binary cross-entropy; see [`loss_as_detailed`].
pub fn loss_as(scores: &ScoreTimeline, labels: &FrameLabels) -> Result<f64> {
    loss_as_detailed(scores, labels).map(|(l, _)| l)
}

/// Hinge triplet loss `max(0, d(a,p) - d(a,n) + margin)` with Euclidean
/// distance.
pub fn loss_triplet(anchor: &[f64], positive: &[f64], negative: &[f64], margin: f64) -> Result<f64> {
    if anchor.len() != positive.len() || anchor.len() != negative.len() {
        return Err(Error::Shape {
            expected: format!("dim {}", anchor.len()),
            actual: format!("dims {}/{}", positive.len(), negative.len()),
        });
    }
    if margin.is_nan() || margin <= 0.0 {
        return Err(Error::parameter("margin must be > 0"));
    }
    let dist = |a: &[f64], b: &[f64]| {
        a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    };
    Ok((dist(anchor, positive) - dist(anchor, negative) + margin).max(0.0))
}

/// KL divergence of the batch's empirical diagonal Gaussian from the
/// standard Gaussian: `sum_j 0.5 (mu_j^2 + var_j - ln var_j - 1)`, with the
/// per-coordinate variance floored at 1e-8.
pub fn loss_kl(reads: ArrayView2<f64>) -> Result<f64> {
    if reads.nrows() < 2 {
        return Err(Error::parameter("KL loss needs a batch of at least 2 vectors"));
    }
    let t = reads.nrows() as f64;
    let mut kl = 0.0;
    for j in 0..reads.ncols() {
        let col = reads.column(j);
        let mu = col.sum() / t;
        let var = (col.iter().map(|&x| (x - mu) * (x - mu)).sum::<f64>() / t).max(VAR_FLOOR);
        kl += 0.5 * (mu * mu + var - var.ln() - 1.0);
    }
    Ok(kl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn timeline(scores: Vec<f64>) -> ScoreTimeline {
        ScoreTimeline { scores, stride: 16, fps: 24.0 }
    }

    #[test]
    fn symmetric_uncertainty_is_ln2() {
        let l = loss_as(&timeline(vec![0.5, 0.5]), &FrameLabels::new(vec![1, 0])).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn confident_correct_is_epsilon_level() {
        let eps = 1e-6;
        let l = loss_as(&timeline(vec![1.0 - eps, eps]), &FrameLabels::new(vec![1, 0])).unwrap();
        assert!(l < 2e-6);
    }

    #[test]
    fn exact_zero_and_one_are_clamped() {
        let (l, clamped) =
            loss_as_detailed(&timeline(vec![0.0, 1.0]), &FrameLabels::new(vec![0, 1])).unwrap();
        assert_eq!(clamped, 2);
        assert!(l.is_finite());
    }

    #[test]
    fn bce_matches_independent_formula_on_random_instance() {
        // Second implementation straight from the formula, different code path.
        let scores = [0.13f64, 0.87, 0.42, 0.69, 0.05, 0.99];
        let labels = [0u8, 1, 1, 0, 0, 1];
        let oracle = -scores
            .iter()
            .zip(&labels)
            .map(|(&s, &y)| {
                if y == 1 {
                    s.ln()
                } else {
                    (1.0f64 - s).ln()
                }
            })
            .sum::<f64>()
            / scores.len() as f64;
        let l = loss_as(&timeline(scores.to_vec()), &FrameLabels::new(labels.to_vec())).unwrap();
        assert!((l - oracle).abs() < 1e-9);
    }

    #[test]
    fn triplet_boundary_is_zero() {
        // anchor == positive, d(anchor, negative) == margin.
        let l = loss_triplet(&[0.0, 0.0], &[0.0, 0.0], &[1.0, 0.0], 1.0).unwrap();
        assert_eq!(l, 0.0);
    }

    #[test]
    fn triplet_anchor_equals_negative() {
        // d(a,n) = 0, so loss = d(a,p) + margin.
        let l = loss_triplet(&[0.0, 0.0], &[3.0, 4.0], &[0.0, 0.0], 1.0).unwrap();
        assert!((l - 6.0).abs() < 1e-12);
    }

    #[test]
    fn triplet_matches_hand_computation() {
        let a = [0.2, -0.3, 0.5];
        let p = [0.1, 0.0, 0.4];
        let n = [-0.6, 0.2, 0.9];
        let dp = ((0.1f64).powi(2) + (0.3f64).powi(2) + (0.1f64).powi(2)).sqrt();
        let dn = ((0.8f64).powi(2) + (0.5f64).powi(2) + (0.4f64).powi(2)).sqrt();
        let expect = (dp - dn + 1.0f64).max(0.0);
        let l = loss_triplet(&a, &p, &n, 1.0).unwrap();
        assert!((l - expect).abs() < 1e-12);
    }

    #[test]
    fn kl_of_exact_standard_batch_is_zero() {
        // Empirical mean 0, population variance 1 per column.
        let reads = array![[1.0, -1.0], [-1.0, 1.0]];
        let kl = loss_kl(reads.view()).unwrap();
        assert!(kl.abs() < 1e-12);
    }

    #[test]
    fn kl_unit_mean_shift_is_half() {
        // mu = (1, 0), var = (1, 1): KL = 0.5.
        let reads = array![[2.0, -1.0], [0.0, 1.0]];
        let kl = loss_kl(reads.view()).unwrap();
        assert!((kl - 0.5).abs() < 1e-12);
    }

    #[test]
    fn kl_matches_closed_form_on_random_batch() {
        let reads = array![
            [0.3, -0.7, 1.2],
            [-0.4, 0.9, 0.1],
            [1.1, 0.2, -0.8],
            [-0.5, -0.3, 0.6]
        ];
        let mut oracle = 0.0;
        for j in 0..3 {
            let col: Vec<f64> = (0..4).map(|i| reads[[i, j]]).collect();
            let mu: f64 = col.iter().sum::<f64>() / 4.0;
            let var: f64 = col.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / 4.0;
            oracle += 0.5 * (mu * mu + var - var.ln() - 1.0);
        }
        let kl = loss_kl(reads.view()).unwrap();
        assert!((kl - oracle).abs() < 1e-9);
    }

    #[test]
    fn kl_single_row_rejected() {
        let reads = array![[0.1, 0.2]];
        assert!(loss_kl(reads.view()).is_err());
    }
}
