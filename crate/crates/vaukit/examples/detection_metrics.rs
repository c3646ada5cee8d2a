//! Frame-level detection metrics: ROC-AUC and average precision.

use vaukit::metrics::{average_precision, detection_result, roc_auc};

fn main() -> vaukit::Result<()> {
    // A decent but imperfect scorer: anomalies mostly score high.
    let scores = [0.9, 0.8, 0.75, 0.6, 0.55, 0.4, 0.3, 0.2, 0.15, 0.1];
    let labels = [1u8, 1, 0, 1, 0, 1, 0, 0, 0, 0];

    let r = detection_result(&scores, &labels)?;
    println!("auc = {:.4}, ap = {:.4} ({} pos / {} neg)", r.auc, r.ap, r.positives, r.negatives);

    // Perfect ranking maxes both metrics; inverting the scores flips AUC.
    let perfect = [0.9, 0.8, 0.7, 0.6, 0.3, 0.2];
    let labels2 = [1u8, 1, 1, 0, 0, 0];
    println!("perfect auc = {}", roc_auc(&perfect, &labels2)?);
    let inverted: Vec<f64> = perfect.iter().map(|s| 1.0 - s).collect();
    println!("inverted auc = {}", roc_auc(&inverted, &labels2)?);
    println!("perfect ap = {}", average_precision(&perfect, &labels2)?);
    Ok(())
}
