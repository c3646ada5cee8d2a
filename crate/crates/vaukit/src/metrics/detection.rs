//! Rank-statistic detection metrics: ROC-AUC and average precision.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Frame-level detection result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub auc: f64,
    pub ap: f64,
    pub positives: usize,
    pub negatives: usize,
}

fn check_lengths(scores: &[f64], labels: &[u8]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::Shape {
            expected: format!("{} labels", scores.len()),
            actual: format!("{} labels", labels.len()),
        });
    }
    Ok(())
}

/// ROC-AUC via the Mann-Whitney statistic with average ranks:
/// `(#concordant pairs + 0.5 * #tied pairs) / (P * N)`.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::parameter(
            "undefined metric: ROC-AUC needs at least one positive and one negative",
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    // Average rank within each tie block, 1-based.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if labels[idx] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let p = positives as f64;
    let n = negatives as f64;
    let u = rank_sum_pos - p * (p + 1.0) / 2.0;
    Ok(u / (p * n))
}

/// Average precision over the descending-score sweep. Equal-scored items
/// enter the sweep together as one block, so the value is invariant to
/// permutations within ties.
pub fn average_precision(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let positives = labels.iter().filter(|&&l| l == 1).count();
    if positives == 0 {
        return Err(Error::parameter(
            "undefined metric: average precision needs at least one positive",
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let total_pos = positives as f64;
    let mut tp = 0usize;
    let mut seen = 0usize;
    let mut recall_prev = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        tp += order[i..j].iter().filter(|&&idx| labels[idx] == 1).count();
        seen += j - i;
        let recall = tp as f64 / total_pos;
        let precision = tp as f64 / seen as f64;
        ap += (recall - recall_prev) * precision;
        recall_prev = recall;
        i = j;
    }
    Ok(ap)
}

/// Convenience wrapper computing both metrics at once.
pub fn detection_result(scores: &[f64], labels: &[u8]) -> Result<DetectionResult> {
    let positives = labels.iter().filter(|&&l| l == 1).count();
    Ok(DetectionResult {
        auc: roc_auc(scores, labels)?,
        ap: average_precision(scores, labels)?,
        positives,
        negatives: labels.len() - positives,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_separation() {
        assert_eq!(roc_auc(&[0.9, 0.1], &[1, 0]).unwrap(), 1.0);
    }

    #[test]
    fn constant_scores_are_half() {
        assert_eq!(roc_auc(&[0.3, 0.3, 0.3, 0.3], &[1, 0, 1, 0]).unwrap(), 0.5);
    }

    #[test]
    fn single_class_undefined() {
        assert!(roc_auc(&[0.1, 0.2], &[1, 1]).is_err());
        assert!(average_precision(&[0.1, 0.2], &[0, 0]).is_err());
    }

    #[test]
    fn ap_perfect_ranking() {
        assert_eq!(average_precision(&[0.9, 0.5, 0.1], &[1, 0, 0]).unwrap(), 1.0);
    }

    #[test]
    fn ap_positive_ranked_last() {
        let ap = average_precision(&[0.9, 0.5, 0.1], &[0, 0, 1]).unwrap();
        assert!((ap - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn auc_complement_identity_without_ties() {
        let scores = [0.11, 0.52, 0.33, 0.94, 0.75, 0.26];
        let labels = [0u8, 1, 0, 1, 0, 1];
        let flipped: Vec<u8> = labels.iter().map(|&l| 1 - l).collect();
        let a = roc_auc(&scores, &labels).unwrap();
        let b = roc_auc(&scores, &flipped).unwrap();
        assert!((a + b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ap_tie_block_permutation_invariant() {
        // Two items share a score; swapping their labels must not change AP.
        let a = average_precision(&[0.9, 0.5, 0.5, 0.1], &[1, 1, 0, 0]).unwrap();
        let b = average_precision(&[0.9, 0.5, 0.5, 0.1], &[1, 0, 1, 0]).unwrap();
        assert_eq!(a, b);
    }
}
