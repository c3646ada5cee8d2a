//! Anomaly-focused temporal sampling vs the uniform and top-k baselines on
//! a hand-made score timeline with one anomaly burst.

use vaukit::sampler::{sample_ats, sample_topk, sample_uniform, temporal_spread};
use vaukit::timeline::ScoreTimeline;

fn main() -> vaukit::Result<()> {
    // 60 frames, anomaly burst around frames 40..50.
    let scores: Vec<f64> = (0..60)
        .map(|i| if (40..50).contains(&i) { 0.9 } else { 0.05 })
        .collect();
    let t = ScoreTimeline::new(scores, 16, 24.0)?;
    let n = 12;
    let tau = 0.1;

    let ats = sample_ats(&t, tau, n)?;
    let uniform = sample_uniform(t.len(), n)?;
    let topk = sample_topk(&t, n)?;

    println!("budget N = {n}, tau = {tau}");
    println!("ats     : {:?}", ats.indices);
    println!("uniform : {:?}", uniform.indices);
    println!("topk    : {:?}", topk.indices);
    println!();
    println!(
        "ats concentrates on the burst but keeps context; its spread {:.3} sits \
         between uniform {:.3} and topk {:.3}",
        temporal_spread(&ats, t.len()),
        temporal_spread(&uniform, t.len()),
        temporal_spread(&topk, t.len()),
    );

    // With a flat timeline, ats degenerates to uniform exactly.
    let flat = ScoreTimeline::new(vec![0.3; 60], 16, 24.0)?;
    assert_eq!(sample_ats(&flat, 0.1, n)?.indices, sample_uniform(60, n)?.indices);
    println!("flat scores: ats == uniform, as expected");
    Ok(())
}
