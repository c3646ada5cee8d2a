//! Build instruction conversations from a hierarchical annotation record.

use vaukit::dataengine::{
    build_instructions, items_to_jsonl, render_event_summary_prompt, summarize,
    AnnotationRecord, BuildConfig, MockClient, PromptPool,
};

const SAMPLE: &str = include_str!("../data/sample_annotation.json");

fn main() -> vaukit::Result<()> {
    let record = AnnotationRecord::from_json(SAMPLE)?;
    let pools = PromptPool::builtin();

    // Summarization prompt for the first event, answered by the offline mock.
    let req = render_event_summary_prompt(&record, 0)?;
    let summary = summarize(&req, &MockClient)?;
    println!("event 0 summary ({} retries): {}\n", summary.retries, summary.text);

    let out = build_instructions(&record, &pools, &BuildConfig::default(), 23)?;
    println!(
        "built {} items ({} clips + events/video), {} queued for review",
        out.items.len(),
        record.clip_count(),
        out.review.len()
    );
    for entry in &out.review {
        println!("review {}: {}", entry.id, entry.reason);
    }
    println!("\nJSONL:\n{}", items_to_jsonl(&out.items)?);
    Ok(())
}
