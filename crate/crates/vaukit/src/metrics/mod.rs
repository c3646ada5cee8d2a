//! Detection metrics (ROC-AUC, average precision) and reasoning metrics
//! (BLEU, ROUGE-L, CIDEr, METEOR-lite), plus corpus-level aggregation.

pub mod detection;
pub mod text;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use detection::{average_precision, detection_result, roc_auc, DetectionResult};
pub use text::{bleu, cider, meteor_lite, rouge_l, stem, tokenize, BleuScore, CiderScore};

/// One prediction or reference text keyed by id and granularity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextItem {
    pub id: String,
    #[serde(rename = "type")]
    pub granularity: String,
    pub text: String,
}

/// Aggregated text metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TextScore {
    pub bleu: [f64; 4],
    pub bleu_sum: f64,
    pub rouge_l: f64,
    pub cider: f64,
    pub meteor: f64,
}

/// Mean text metrics for one granularity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GranularityReport {
    pub count: usize,
    pub mean: TextScore,
}

/// Full evaluation report: per-granularity reasoning metrics plus an
/// optional detection block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub text: BTreeMap<String, GranularityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detection: Option<DetectionResult>,
}

impl EvalReport {
    /// Flattens the report to CSV rows (granularity, count, metrics...).
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "granularity,count,bleu1,bleu2,bleu3,bleu4,bleu_sum,rouge_l,cider,meteor\n",
        );
        for (g, r) in &self.text {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                g,
                r.count,
                r.mean.bleu[0],
                r.mean.bleu[1],
                r.mean.bleu[2],
                r.mean.bleu[3],
                r.mean.bleu_sum,
                r.mean.rouge_l,
                r.mean.cider,
                r.mean.meteor
            ));
        }
        out
    }
}

/// Evaluates a prediction corpus against a reference corpus.
///
/// Items align by id; granularity is taken from the reference. CIDEr's IDF
/// base is the reference corpus of each granularity, so every granularity
/// present needs at least two items. Items are aggregated in sorted-id order
/// for deterministic output.
pub fn evaluate_text_corpus(
    predictions: &[TextItem],
    references: &[TextItem],
) -> Result<BTreeMap<String, GranularityReport>> {
    let pred_by_id: BTreeMap<&str, &TextItem> =
        predictions.iter().map(|p| (p.id.as_str(), p)).collect();
    let ref_by_id: BTreeMap<&str, &TextItem> =
        references.iter().map(|r| (r.id.as_str(), r)).collect();

    let mut orphans: Vec<String> = Vec::new();
    for id in pred_by_id.keys() {
        if !ref_by_id.contains_key(id) {
            orphans.push(format!("prediction without reference: {id}"));
        }
    }
    for id in ref_by_id.keys() {
        if !pred_by_id.contains_key(id) {
            orphans.push(format!("reference without prediction: {id}"));
        }
    }
    if !orphans.is_empty() {
        return Err(Error::Validation(orphans));
    }
    if ref_by_id.is_empty() {
        return Err(Error::validation("empty corpus"));
    }

    // Group aligned pairs by granularity, sorted by id.
    let mut groups: BTreeMap<String, Vec<(&TextItem, &TextItem)>> = BTreeMap::new();
    for (id, r) in &ref_by_id {
        groups.entry(r.granularity.clone()).or_default().push((pred_by_id[id], r));
    }

    let mut report = BTreeMap::new();
    for (granularity, pairs) in groups {
        let cands: Vec<Vec<String>> = pairs.iter().map(|(p, _)| tokenize(&p.text)).collect();
        let refs: Vec<Vec<Vec<String>>> =
            pairs.iter().map(|(_, r)| vec![tokenize(&r.text)]).collect();
        let cider_scores = cider(&cands, &refs)?;

        let n = pairs.len() as f64;
        let mut mean = TextScore {
            bleu: [0.0; 4],
            bleu_sum: 0.0,
            rouge_l: 0.0,
            cider: cider_scores.mean,
            meteor: 0.0,
        };
        for (cand, refs) in cands.iter().zip(&refs) {
            let b = bleu(cand, refs);
            for (acc, v) in mean.bleu.iter_mut().zip(b.cumulative) {
                *acc += v / n;
            }
            mean.bleu_sum += b.sum / n;
            mean.rouge_l += rouge_l(cand, &refs[0]) / n;
            mean.meteor += meteor_lite(cand, &refs[0]) / n;
        }
        report.insert(granularity, GranularityReport { count: pairs.len(), mean });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(id: &str, granularity: &str, text: &str) -> TextItem {
        TextItem { id: id.into(), granularity: granularity.into(), text: text.into() }
    }

    fn toy_corpus() -> Vec<TextItem> {
        let mut items = Vec::new();
        for (g, texts) in [
            ("clip", ["a man walks along the road", "a tank crosses a field slowly", "two people argue near a parked car"]),
            ("event", ["an explosion erupts behind the buildings", "the crowd flees from the smoke quickly", "police officers line up across the street"]),
            ("video", ["the video shows a riot in the city", "a quiet surveillance scene with nothing unusual", "a car accident blocks the whole intersection"]),
        ] {
            for (i, t) in texts.iter().enumerate() {
                items.push(item(&format!("{g}{i}"), g, t));
            }
        }
        items
    }

    #[test]
    fn identity_corpus_hits_maxima() {
        let refs = toy_corpus();
        let report = evaluate_text_corpus(&refs, &refs).unwrap();
        assert_eq!(report.len(), 3);
        for (g, r) in &report {
            assert_eq!(r.count, 3, "granularity {g}");
            assert!((r.mean.bleu_sum - 4.0).abs() < 1e-9);
            assert!((r.mean.rouge_l - 1.0).abs() < 1e-12);
            assert!((r.mean.cider - 10.0).abs() < 1e-9);
            assert!(r.mean.meteor > 0.95);
        }
    }

    #[test]
    fn orphan_ids_rejected() {
        let refs = toy_corpus();
        let mut preds = refs.clone();
        preds[0].id = "unknown".into();
        let err = evaluate_text_corpus(&preds, &refs).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("prediction without reference: unknown"));
        assert!(msg.contains("reference without prediction: clip0"));
    }

    #[test]
    fn csv_flattening_has_header_and_rows() {
        let refs = toy_corpus();
        let report = EvalReport {
            text: evaluate_text_corpus(&refs, &refs).unwrap(),
            detection: None,
        };
        let csv = report.to_csv();
        assert!(csv.starts_with("granularity,count,"));
        assert_eq!(csv.lines().count(), 4);
    }
}
