//! Caption-quality metrics: BLEU, ROUGE-L, CIDEr, and a METEOR variant.
//!
//! All metrics operate on the tokenization pinned by [`tokenize`]:
//! lowercase, punctuation split into single-character tokens, whitespace
//! separated. Candidates and references must go through the same tokenizer
//! for the scores to be comparable.
//!
//! `meteor_lite` is METEOR without the synonym stage: unigrams align when
//! their stems agree (exact matches trivially do), using the alignment with
//! maximum matches and, among those, fewest chunks.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Pinned tokenization: lowercase; alphanumeric runs are tokens; every other
/// non-whitespace character is its own token.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.to_lowercase().chars() {
        if c.is_alphanumeric() {
            current.push(c);
        } else {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            if !c.is_whitespace() {
                tokens.push(c.to_string());
            }
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Cumulative BLEU-1..4 and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    /// Cumulative BLEU-n for n = 1..=4.
    pub cumulative: [f64; 4],
    /// Sum of the four cumulative scores, in [0, 4].
    pub sum: f64,
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Cumulative BLEU with clipped modified precisions and brevity penalty.
/// No smoothing: zero overlap at order `k` forces BLEU-j = 0 for j >= k.
pub fn bleu(candidate: &[String], references: &[Vec<String>]) -> BleuScore {
    let zeros = BleuScore { cumulative: [0.0; 4], sum: 0.0 };
    if candidate.is_empty() || references.is_empty() {
        return zeros;
    }
    let c_len = candidate.len();
    // Closest reference length; ties favor the shorter reference.
    let r_len = references
        .iter()
        .map(|r| r.len())
        .min_by_key(|&l| (l.abs_diff(c_len), l))
        .unwrap();
    let bp = if c_len >= r_len { 1.0 } else { (1.0 - r_len as f64 / c_len as f64).exp() };

    let mut precisions = [0.0f64; 4];
    for (n, p) in precisions.iter_mut().enumerate() {
        let order = n + 1;
        let cand_counts = ngram_counts(candidate, order);
        let total: usize = cand_counts.values().sum();
        if total == 0 {
            *p = 0.0;
            continue;
        }
        let mut clipped = 0usize;
        for (gram, &count) in &cand_counts {
            let max_ref = references
                .iter()
                .map(|r| ngram_counts(r, order).get(gram).copied().unwrap_or(0))
                .max()
                .unwrap_or(0);
            clipped += count.min(max_ref);
        }
        *p = clipped as f64 / total as f64;
    }

    let mut cumulative = [0.0f64; 4];
    for n in 0..4 {
        if precisions[..=n].contains(&0.0) {
            cumulative[n] = 0.0;
        } else {
            let log_mean =
                precisions[..=n].iter().map(|p| p.ln()).sum::<f64>() / (n + 1) as f64;
            cumulative[n] = bp * log_mean.exp();
        }
    }
    BleuScore { cumulative, sum: cumulative.iter().sum() }
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for ai in a {
        for (j, bj) in b.iter().enumerate() {
            cur[j + 1] = if ai == bj { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L: LCS-based F-measure with beta = 1.2 favoring recall.
pub fn rouge_l(candidate: &[String], reference: &[String]) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(candidate, reference) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let p = lcs / candidate.len() as f64;
    let r = lcs / reference.len() as f64;
    let beta2 = 1.2 * 1.2;
    (1.0 + beta2) * p * r / (r + beta2 * p)
}

/// Per-item and mean CIDEr scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiderScore {
    pub per_item: Vec<f64>,
    pub mean: f64,
}

type NgramVec<'a> = HashMap<&'a [String], f64>;

fn tfidf_vector<'a>(tokens: &'a [String], n: usize, idf: &HashMap<&[String], f64>) -> NgramVec<'a> {
    let counts = ngram_counts(tokens, n);
    let total: usize = counts.values().sum();
    if total == 0 {
        return HashMap::new();
    }
    counts
        .into_iter()
        .map(|(g, c)| {
            let w = idf.get(g).copied().unwrap_or(0.0);
            (g, c as f64 / total as f64 * w)
        })
        .collect()
}

fn cosine(a: &NgramVec, b: &NgramVec) -> f64 {
    let dot: f64 = a
        .iter()
        .filter_map(|(g, &va)| b.get(g).map(|&vb| va * vb))
        .sum();
    let na: f64 = a.values().map(|v| v * v).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// CIDEr over a corpus: mean over n = 1..4 of TF-IDF-weighted cosine
/// similarity between candidate and reference n-gram vectors, scaled by 10.
/// IDF is computed over the reference corpus, so at least two items are
/// required.
pub fn cider(candidates: &[Vec<String>], references: &[Vec<Vec<String>>]) -> Result<CiderScore> {
    if candidates.len() != references.len() {
        return Err(Error::Shape {
            expected: format!("{} reference sets", candidates.len()),
            actual: format!("{} reference sets", references.len()),
        });
    }
    let n_items = candidates.len();
    if n_items < 2 {
        return Err(Error::parameter(
            "degenerate IDF: CIDEr needs a corpus of at least 2 items",
        ));
    }

    let mut per_item = vec![0.0f64; n_items];
    for order in 1..=4usize {
        // Document frequency: number of items whose references contain the n-gram.
        let mut df: HashMap<&[String], usize> = HashMap::new();
        for refs in references {
            let mut seen: Vec<&[String]> = Vec::new();
            for r in refs {
                for g in ngram_counts(r, order).into_keys() {
                    if !seen.contains(&g) {
                        seen.push(g);
                    }
                }
            }
            for g in seen {
                *df.entry(g).or_insert(0) += 1;
            }
        }
        let idf: HashMap<&[String], f64> = df
            .into_iter()
            .map(|(g, d)| (g, (n_items as f64 / d as f64).ln()))
            .collect();

        for (i, (cand, refs)) in candidates.iter().zip(references).enumerate() {
            let gc = tfidf_vector(cand, order, &idf);
            let sim: f64 = refs
                .iter()
                .map(|r| cosine(&gc, &tfidf_vector(r, order, &idf)))
                .sum::<f64>()
                / refs.len().max(1) as f64;
            per_item[i] += sim;
        }
    }
    for v in &mut per_item {
        *v = 10.0 * *v / 4.0;
    }
    let mean = per_item.iter().sum::<f64>() / n_items as f64;
    Ok(CiderScore { per_item, mean })
}

/// Light suffix stemmer shared by `meteor_lite` and its callers.
pub fn stem(word: &str) -> String {
    let w = word;
    if w.len() > 5 && w.ends_with("ing") {
        return w[..w.len() - 3].to_string();
    }
    if w.len() > 4 && w.ends_with("ed") {
        return w[..w.len() - 2].to_string();
    }
    if w.len() > 4 && w.ends_with("es") {
        return w[..w.len() - 2].to_string();
    }
    if w.len() > 3 && w.ends_with('s') && !w.ends_with("ss") {
        return w[..w.len() - 1].to_string();
    }
    w.to_string()
}

/// Alignment: maximum number of stem matches; among maximum alignments, the
/// one with fewest chunks (maximal runs contiguous in both sentences).
/// Exact search with a node budget; falls back to a greedy alignment on
/// pathological inputs (long sentences full of repeated words).
fn align(cand: &[String], refr: &[String]) -> (usize, usize) {
    let c_stems: Vec<String> = cand.iter().map(|w| stem(w)).collect();
    let r_stems: Vec<String> = refr.iter().map(|w| stem(w)).collect();
    if r_stems.len() <= 64 {
        let mut search = AlignSearch {
            c_stems: &c_stems,
            r_stems: &r_stems,
            best: (0, usize::MAX),
            nodes: 0,
            budget: 500_000,
        };
        search.dfs(0, 0u64, 0, 0, None);
        if search.nodes < search.budget {
            return (search.best.0, if search.best.0 == 0 { 0 } else { search.best.1 });
        }
    }
    greedy_align(&c_stems, &r_stems)
}

struct AlignSearch<'a> {
    c_stems: &'a [String],
    r_stems: &'a [String],
    best: (usize, usize),
    nodes: usize,
    budget: usize,
}

impl AlignSearch<'_> {
    fn dfs(&mut self, ci: usize, used: u64, matches: usize, chunks: usize, last: Option<(usize, usize)>) {
        self.nodes += 1;
        if self.nodes >= self.budget {
            return;
        }
        // Upper bound on reachable matches.
        if matches + (self.c_stems.len() - ci) < self.best.0 {
            return;
        }
        if ci == self.c_stems.len() {
            if matches > self.best.0 || (matches == self.best.0 && chunks < self.best.1) {
                self.best = (matches, chunks);
            }
            return;
        }
        for rj in 0..self.r_stems.len() {
            if used & (1 << rj) != 0 || self.r_stems[rj] != self.c_stems[ci] {
                continue;
            }
            let continues = matches!(last, Some((pc, pr)) if pc + 1 == ci && pr + 1 == rj);
            self.dfs(
                ci + 1,
                used | (1 << rj),
                matches + 1,
                if continues { chunks } else { chunks + 1 },
                Some((ci, rj)),
            );
        }
        self.dfs(ci + 1, used, matches, chunks, last);
    }
}

fn greedy_align(c_stems: &[String], r_stems: &[String]) -> (usize, usize) {
    let mut used = vec![false; r_stems.len()];
    let mut matches = 0;
    let mut chunks = 0;
    let mut last: Option<(usize, usize)> = None;
    for (ci, cs) in c_stems.iter().enumerate() {
        // Prefer continuing the current chunk, else the earliest free slot.
        let continuation = last.and_then(|(pc, pr)| {
            (pc + 1 == ci && pr + 1 < r_stems.len() && !used[pr + 1] && &r_stems[pr + 1] == cs)
                .then_some(pr + 1)
        });
        let pick = continuation
            .or_else(|| (0..r_stems.len()).find(|&rj| !used[rj] && &r_stems[rj] == cs));
        if let Some(rj) = pick {
            used[rj] = true;
            matches += 1;
            let continues = matches!(last, Some((pc, pr)) if pc + 1 == ci && pr + 1 == rj);
            if !continues {
                chunks += 1;
            }
            last = Some((ci, rj));
        }
    }
    (matches, chunks)
}

/// METEOR without the synonym stage: stem-level unigram alignment, harmonic
/// F-mean weighted toward recall, and a fragmentation penalty.
pub fn meteor_lite(candidate: &[String], reference: &[String]) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let (m, chunks) = align(candidate, reference);
    if m == 0 {
        return 0.0;
    }
    let p = m as f64 / candidate.len() as f64;
    let r = m as f64 / reference.len() as f64;
    let f_mean = 10.0 * p * r / (r + 9.0 * p);
    let penalty = 0.5 * (chunks as f64 / m as f64).powi(3);
    f_mean * (1.0 - penalty)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn tokenize_lowercases_and_splits_punctuation() {
        assert_eq!(
            toks("The man, running fast!"),
            vec!["the", "man", ",", "running", "fast", "!"]
        );
    }

    #[test]
    fn bleu_identity_hits_maximum() {
        let c = toks("a man walks his dog down the street");
        let s = bleu(&c, std::slice::from_ref(&c));
        assert_eq!(s.cumulative, [1.0; 4]);
        assert_eq!(s.sum, 4.0);
    }

    #[test]
    fn bleu_unigram_only_overlap() {
        let c = toks("dog street man the");
        let r = toks("the man walks the dog down a street");
        let s = bleu(&c, &[r]);
        assert!(s.cumulative[0] > 0.0);
        assert_eq!(&s.cumulative[1..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn bleu_empty_candidate_is_zero() {
        let s = bleu(&[], &[toks("something")]);
        assert_eq!(s.sum, 0.0);
    }

    #[test]
    fn bleu_order_sensitivity() {
        // BLEU-1 is bag-of-words invariant, BLEU-4 is not.
        let r = toks("one two three four five six");
        let shuffled = toks("six five four three two one");
        let s = bleu(&shuffled, std::slice::from_ref(&r));
        assert_eq!(s.cumulative[0], 1.0);
        assert_eq!(s.cumulative[3], 0.0);
    }

    #[test]
    fn rouge_identity_and_disjoint() {
        let a = toks("the quick brown fox");
        assert_eq!(rouge_l(&a, &a), 1.0);
        let b = toks("some other words entirely");
        assert_eq!(rouge_l(&a, &b), 0.0);
    }

    #[test]
    fn rouge_order_sensitive() {
        let r = toks("one two three four");
        let shuffled = toks("four three two one");
        assert!(rouge_l(&shuffled, &r) < 1.0);
    }

    #[test]
    fn cider_self_similarity_is_ten() {
        let items: Vec<Vec<String>> = [
            "a tank drives across a barren field",
            "people flee from a burning building downtown",
            "a quiet street with no movement at night",
        ]
        .iter()
        .map(|s| toks(s))
        .collect();
        let refs: Vec<Vec<Vec<String>>> = items.iter().map(|c| vec![c.clone()]).collect();
        let score = cider(&items, &refs).unwrap();
        for v in &score.per_item {
            assert!((v - 10.0).abs() < 1e-9, "got {v}");
        }
    }

    #[test]
    fn cider_disjoint_is_zero() {
        let cands = vec![toks("alpha beta gamma delta"), toks("epsilon zeta eta theta")];
        let refs = vec![vec![toks("one two three four")], vec![toks("five six seven eight")]];
        let score = cider(&cands, &refs).unwrap();
        assert_eq!(score.mean, 0.0);
    }

    #[test]
    fn cider_singleton_corpus_rejected() {
        let c = vec![toks("hello world")];
        let r = vec![vec![toks("hello world")]];
        assert!(cider(&c, &r).is_err());
    }

    #[test]
    fn meteor_identity_close_to_one() {
        let s = toks("the man in shorts was slapped to the ground by the strong man opposite");
        let m = meteor_lite(&s, &s);
        // chunks = 1, penalty = 0.5 / m^3, tiny for a long sentence.
        assert!(m > 0.99, "got {m}");
    }

    #[test]
    fn meteor_disjoint_is_zero() {
        assert_eq!(meteor_lite(&toks("alpha beta"), &toks("gamma delta")), 0.0);
    }

    #[test]
    fn meteor_stem_match_counts() {
        let m = meteor_lite(&toks("the dogs running"), &toks("the dog runs"));
        assert!(m > 0.0);
    }

    #[test]
    fn stem_suffixes() {
        assert_eq!(stem("running"), "runn");
        assert_eq!(stem("slapped"), "slapp");
        assert_eq!(stem("dogs"), "dog");
        assert_eq!(stem("glass"), "glass");
    }
}
