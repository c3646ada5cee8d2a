//! Sampler benchmark over a synthetic corpus with localized anomaly bursts:
//! coverage and spread per (sampler, budget).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vaukit::sampler::{bench_table, benchmark_samplers, BenchItem};
use vaukit::timeline::{FrameLabels, ScoreTimeline};

fn main() -> vaukit::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let corpus: Vec<BenchItem> = (0..50)
        .map(|v| {
            let t = rng.gen_range(80..200);
            let burst_len = rng.gen_range(5..15);
            let burst_at = rng.gen_range(0..t - burst_len);
            let labels: Vec<u8> = (0..t)
                .map(|i| u8::from((burst_at..burst_at + burst_len).contains(&i)))
                .collect();
            // Oracle-ish scores: high in the burst, noisy elsewhere.
            let scores: Vec<f64> = labels
                .iter()
                .map(|&l| if l == 1 { rng.gen_range(0.7..1.0) } else { rng.gen_range(0.0..0.2) })
                .collect();
            BenchItem {
                video: format!("v{v}"),
                scores: ScoreTimeline::new(scores, 16, 24.0).unwrap(),
                labels: FrameLabels::new(labels),
            }
        })
        .collect();

    let rows = benchmark_samplers(&corpus, &[8, 16, 32], 0.1)?;
    print!("{}", bench_table(&rows));
    Ok(())
}
