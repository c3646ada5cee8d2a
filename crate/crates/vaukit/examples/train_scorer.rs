//! Train the anomaly scorer on a linearly separable synthetic corpus and
//! check that it learned with ROC-AUC on held-out videos.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vaukit::metrics::roc_auc;
use vaukit::scorer::{train, FeatureSequence, ModelConfig, TrainConfig};
use vaukit::timeline::FrameLabels;

/// Anomalous frames cluster at +1 per dimension, normal at -1, plus noise.
fn synthetic(videos: usize, frames: usize, dim: usize, seed: u64) -> Vec<(FeatureSequence, FrameLabels)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..videos)
        .map(|v| {
            let labels: Vec<u8> = (0..frames).map(|_| rng.gen_range(0..2) as u8).collect();
            let features = Array2::from_shape_fn((frames, dim), |(i, _)| {
                let mu = if labels[i] == 1 { 1.0 } else { -1.0 };
                mu + rng.gen_range(-0.8..0.8)
            });
            (FeatureSequence { video: format!("v{v}"), features }, FrameLabels::new(labels))
        })
        .collect()
}

fn main() -> vaukit::Result<()> {
    let train_set = synthetic(12, 40, 8, 1);
    let held_out = synthetic(4, 40, 8, 2);

    let mut cfg = TrainConfig::new(ModelConfig::new(8), 42);
    cfg.learning_rate = 1e-2;
    cfg.epochs = 30;
    let outcome = train(&train_set, &cfg)?;
    println!(
        "loss: {:.4} -> {:.4} over {} epochs (diverged: {})",
        outcome.curve[0],
        outcome.curve.last().unwrap(),
        outcome.curve.len(),
        outcome.diverged
    );

    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for (f, l) in &held_out {
        scores.extend(outcome.model.score(f, 16, 24.0)?.scores);
        labels.extend_from_slice(&l.labels);
    }
    println!("held-out ROC-AUC: {:.4}", roc_auc(&scores, &labels)?);
    Ok(())
}
