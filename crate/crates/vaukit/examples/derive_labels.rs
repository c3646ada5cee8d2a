//! Turn second-level event annotations into per-frame binary labels.

use vaukit::timeline::{derive_frame_labels, EventInterval};

fn main() -> vaukit::Result<()> {
    let events = vec![
        EventInterval::new(5.583, 24.542, "Explosion"),
        EventInterval::new(36.167, 50.792, "Explosion"),
        // Normal stretches never label frames, whatever their bounds.
        EventInterval::new(0.0, 5.0, "Normal"),
    ];
    // 80 scores at stride 16 over a 24 fps video: one score per 2/3 s.
    let labels = derive_frame_labels(&events, 80, 16, 24.0)?;

    println!("labels: {:?}", labels.labels);
    for (i, (start, end)) in labels.anomaly_runs().into_iter().enumerate() {
        println!(
            "run {i}: score indices [{start}, {end}) = seconds [{:.2}, {:.2})",
            start as f64 * 16.0 / 24.0,
            end as f64 * 16.0 / 24.0
        );
    }
    Ok(())
}
