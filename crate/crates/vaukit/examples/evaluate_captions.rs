//! Caption/reasoning metrics: BLEU, ROUGE-L, CIDEr, METEOR-lite, and the
//! corpus-level report grouped by granularity.

use vaukit::metrics::{bleu, evaluate_text_corpus, meteor_lite, rouge_l, tokenize, TextItem};

fn main() -> vaukit::Result<()> {
    let cand = tokenize("a man is slapped to the ground by another man");
    let reference = tokenize("the man in shorts was slapped to the ground by the strong man");

    let b = bleu(&cand, std::slice::from_ref(&reference));
    println!("bleu1-4: {:?}, sum: {:.4}", b.cumulative, b.sum);
    println!("rouge-l: {:.4}", rouge_l(&cand, &reference));
    println!("meteor : {:.4}", meteor_lite(&cand, &reference));

    // Corpus-level: predictions keyed to references by id.
    let refs = vec![
        TextItem { id: "c1".into(), granularity: "clip".into(), text: "a tank crosses a field".into() },
        TextItem { id: "c2".into(), granularity: "clip".into(), text: "smoke rises after an explosion".into() },
        TextItem { id: "v1".into(), granularity: "video".into(), text: "the video shows an explosion near buildings".into() },
        TextItem { id: "v2".into(), granularity: "video".into(), text: "a quiet street with no unusual activity".into() },
    ];
    let mut preds = refs.clone();
    preds[1].text = "an explosion produces smoke".into();
    let report = evaluate_text_corpus(&preds, &refs)?;
    for (granularity, r) in &report {
        println!(
            "{granularity}: n={} bleu_sum={:.3} rouge={:.3} cider={:.3} meteor={:.3}",
            r.count, r.mean.bleu_sum, r.mean.rouge_l, r.mean.cider, r.mean.meteor
        );
    }
    Ok(())
}
