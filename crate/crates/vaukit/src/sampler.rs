//! Frame samplers: the anomaly-focused temporal sampler (ATS) and the
//! uniform and top-k baselines it is compared against.
//!
//! ATS treats the per-frame anomaly scores, each offset by `tau`, as a
//! probability mass function, accumulates them into a cumulative mass curve,
//! and inverts that curve at `N` midpoint targets `u_k = (k - 0.5) * M / N`.
//! Each target maps to the smallest frame index whose cumulative mass reaches
//! it (inverse-transform sampling). Frames with high scores own wide mass
//! spans and catch more targets; `tau` pads every span equally, so large
//! `tau` drives the sampler toward uniform spacing.
//!
//! All mass arithmetic is exact rational arithmetic over the input floats,
//! so sampling is deterministic across platforms and boundary comparisons
//! never depend on summation order.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::timeline::{FrameLabels, ScoreTimeline};
use crate::{Error, Result};

/// Strictly increasing scored-frame indices chosen by a sampler.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSet {
    pub indices: Vec<usize>,
    /// Requested sample count.
    pub budget: usize,
}

/// Exact prefix sums of `(s_i + tau)`.
#[derive(Debug, Clone)]
pub struct CumulativeMass {
    values: Vec<BigRational>,
    tau: f64,
}

impl CumulativeMass {
    /// Prefix sums as f64, each rounded from its exact value.
    pub fn values_f64(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Total mass `sum(s_i) + T * tau`, exact.
    pub fn total(&self) -> &BigRational {
        self.values.last().expect("non-empty timeline")
    }

    pub(crate) fn values(&self) -> &[BigRational] {
        &self.values
    }
}

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

/// Computes the exact cumulative mass curve of `(s_i + tau)`.
pub fn cumulative_mass(t: &ScoreTimeline, tau: f64) -> Result<CumulativeMass> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::parameter(format!("tau must be >= 0, got {tau}")));
    }
    if t.is_empty() {
        return Err(Error::validation("empty timeline"));
    }
    let tau_r = rational(tau);
    let mut values = Vec::with_capacity(t.len());
    let mut acc = BigRational::zero();
    for &s in &t.scores {
        acc += rational(s) + &tau_r;
        values.push(acc.clone());
    }
    Ok(CumulativeMass { values, tau })
}

/// Midpoint targets `u_k = (2k - 1) * M / (2N)` for `k = 1..=n`, exact.
fn midpoint_targets(total: &BigRational, n: usize) -> Vec<BigRational> {
    (1..=n)
        .map(|k| total * BigRational::new(BigInt::from(2 * k as i64 - 1), BigInt::from(2 * n as i64)))
        .collect()
}

/// Maps each midpoint target to the smallest index `t` with
/// `cumsum[t] >= u_k`, without de-duplication. This is the raw
/// inverse-transform mapping; [`sample_ats`] post-processes it.
pub fn sample_ats_raw(t: &ScoreTimeline, tau: f64, n: usize) -> Result<Vec<usize>> {
    if n < 1 {
        return Err(Error::parameter("sample budget N must be >= 1"));
    }
    if n > t.len() {
        return Err(Error::parameter(format!(
            "budget exceeds timeline: N={n} > T={}",
            t.len()
        )));
    }
    let cum = cumulative_mass(t, tau)?;
    if cum.total().is_zero() {
        return Err(Error::parameter("degenerate mass, supply tau > 0"));
    }
    let targets = midpoint_targets(cum.total(), n);
    // Targets are increasing, so a single forward pointer suffices.
    let mut indices = Vec::with_capacity(n);
    let mut idx = 0usize;
    for u in &targets {
        while &cum.values[idx] < u {
            idx += 1;
        }
        indices.push(idx);
    }
    Ok(indices)
}

/// Anomaly-focused temporal sampling: inverse-transform sampling of the
/// cumulative `(s_i + tau)` mass at `n` midpoint targets, with duplicate
/// indices resolved by monotone nudging so the budget is met exactly.
pub fn sample_ats(t: &ScoreTimeline, tau: f64, n: usize) -> Result<SampleSet> {
    let raw = sample_ats_raw(t, tau, n)?;
    let indices = nudge_distinct(&raw, t.len());
    Ok(SampleSet { indices, budget: n })
}

/// Duplicate resolution: process raw indices in target order; a taken index
/// advances to the next free index above, or walks downward when nothing
/// above is free. With `n <= t_len` this always yields `n` distinct indices.
fn nudge_distinct(raw: &[usize], t_len: usize) -> Vec<usize> {
    let mut used = BTreeSet::new();
    for &r in raw {
        let pick = if !used.contains(&r) {
            Some(r)
        } else {
            (r + 1..t_len)
                .find(|i| !used.contains(i))
                .or_else(|| (0..r).rev().find(|i| !used.contains(i)))
        };
        let pick = pick.expect("n <= t_len guarantees a free index");
        used.insert(pick);
    }
    used.into_iter().collect()
}

/// Uniform sampling at the same midpoint targets ATS uses, specialized to
/// constant mass: index_k = ceil((2k - 1) * T / (2N)) - 1, in integer
/// arithmetic. By construction `sample_ats` on a constant-score timeline
/// reduces to exactly this.
pub fn sample_uniform(t_len: usize, n: usize) -> Result<SampleSet> {
    if n < 1 {
        return Err(Error::parameter("sample budget N must be >= 1"));
    }
    if n > t_len {
        return Err(Error::parameter(format!(
            "budget exceeds timeline: N={n} > T={t_len}"
        )));
    }
    let (t_len_u, n_u) = (t_len as u64, n as u64);
    let indices = (1..=n_u)
        .map(|k| {
            let num = (2 * k - 1) * t_len_u;
            let den = 2 * n_u;
            (num.div_ceil(den) - 1) as usize
        })
        .collect();
    Ok(SampleSet { indices, budget: n })
}

/// Selects the `n` indices with the highest scores, ties broken by earlier
/// index; the result is sorted by time.
pub fn sample_topk(t: &ScoreTimeline, n: usize) -> Result<SampleSet> {
    if n < 1 {
        return Err(Error::parameter("sample budget N must be >= 1"));
    }
    if n > t.len() {
        return Err(Error::parameter(format!(
            "budget exceeds timeline: N={n} > T={}",
            t.len()
        )));
    }
    let mut order: Vec<usize> = (0..t.len()).collect();
    order.sort_by(|&a, &b| {
        t.scores[b].partial_cmp(&t.scores[a]).unwrap().then(a.cmp(&b))
    });
    let mut indices: Vec<usize> = order[..n].to_vec();
    indices.sort_unstable();
    Ok(SampleSet { indices, budget: n })
}

/// Coverage of anomalous frames and events by a sample set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    /// Fraction of sampled frames that carry label 1.
    pub anomaly_recall: f64,
    /// Fraction of maximal label-1 runs containing at least one sample.
    pub events_hit: f64,
    pub events_total: usize,
    pub events_covered: usize,
}

/// Benchmark proxy for downstream quality: how much of the anomalous
/// content did the sample set hit.
pub fn event_coverage(sample: &SampleSet, labels: &FrameLabels) -> Coverage {
    let sampled_anomalous = sample
        .indices
        .iter()
        .filter(|&&i| labels.labels.get(i).copied() == Some(1))
        .count();
    let anomaly_recall = if sample.indices.is_empty() {
        0.0
    } else {
        sampled_anomalous as f64 / sample.indices.len() as f64
    };
    let runs = labels.anomaly_runs();
    let covered = runs
        .iter()
        .filter(|&&(s, e)| sample.indices.iter().any(|&i| i >= s && i < e))
        .count();
    let events_hit = if runs.is_empty() { 0.0 } else { covered as f64 / runs.len() as f64 };
    Coverage {
        anomaly_recall,
        events_hit,
        events_total: runs.len(),
        events_covered: covered,
    }
}

/// Normalized temporal spread: mean gap between consecutive sampled indices
/// divided by the ideal uniform gap `T / N`. 1.0 means uniform-like spread;
/// clustered samples score lower. Zero for fewer than two samples.
pub fn temporal_spread(sample: &SampleSet, t_len: usize) -> f64 {
    if sample.indices.len() < 2 || t_len == 0 {
        return 0.0;
    }
    let gaps: f64 = sample
        .indices
        .windows(2)
        .map(|w| (w[1] - w[0]) as f64)
        .sum::<f64>();
    let mean_gap = gaps / (sample.indices.len() - 1) as f64;
    mean_gap / (t_len as f64 / sample.indices.len() as f64)
}

/// One corpus entry for [`benchmark_samplers`].
#[derive(Debug, Clone, PartialEq)]
pub struct BenchItem {
    pub video: String,
    pub scores: ScoreTimeline,
    pub labels: FrameLabels,
}

/// One (sampler, budget) row of the benchmark report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub sampler: String,
    pub n: usize,
    pub mean_anomaly_recall: f64,
    pub mean_events_hit: f64,
    pub mean_spread: f64,
}

/// Runs all three samplers over a corpus at each budget and reports mean
/// coverage proxies. Rows are ordered by budget, then ats / uniform / topk.
pub fn benchmark_samplers(
    corpus: &[BenchItem],
    budgets: &[usize],
    tau: f64,
) -> Result<Vec<BenchRow>> {
    if corpus.is_empty() {
        return Err(Error::validation("empty benchmark corpus"));
    }
    if budgets.is_empty() {
        return Err(Error::parameter("no budgets given"));
    }
    for item in corpus {
        if item.scores.len() != item.labels.len() {
            return Err(Error::validation(format!(
                "{}: {} scores but {} labels",
                item.video,
                item.scores.len(),
                item.labels.len()
            )));
        }
    }
    let mut rows = Vec::new();
    for &n in budgets {
        if let Some(item) = corpus.iter().find(|i| i.scores.len() < n) {
            return Err(Error::validation(format!(
                "budget {n} exceeds timeline of video {}",
                item.video
            )));
        }
        for sampler in ["ats", "uniform", "topk"] {
            let mut recall = 0.0;
            let mut hit = 0.0;
            let mut spread = 0.0;
            for item in corpus {
                let sample = match sampler {
                    "ats" => sample_ats(&item.scores, tau, n)?,
                    "uniform" => sample_uniform(item.scores.len(), n)?,
                    _ => sample_topk(&item.scores, n)?,
                };
                let cov = event_coverage(&sample, &item.labels);
                recall += cov.anomaly_recall;
                hit += cov.events_hit;
                spread += temporal_spread(&sample, item.scores.len());
            }
            let m = corpus.len() as f64;
            rows.push(BenchRow {
                sampler: sampler.to_string(),
                n,
                mean_anomaly_recall: recall / m,
                mean_events_hit: hit / m,
                mean_spread: spread / m,
            });
        }
    }
    Ok(rows)
}

/// Flattens benchmark rows into an aligned text table.
pub fn bench_table(rows: &[BenchRow]) -> String {
    let mut out = String::from("sampler  n     anomaly_recall  events_hit  spread\n");
    for r in rows {
        out.push_str(&format!(
            "{:<8} {:<5} {:<15.4} {:<11.4} {:.4}\n",
            r.sampler, r.n, r.mean_anomaly_recall, r.mean_events_hit, r.mean_spread
        ));
    }
    out
}

/// Exact per-region target counts for a two-region piecewise-constant
/// timeline: how many midpoint targets fall at or below the first region's
/// mass. Used to check mass proportionality.
pub fn targets_in_prefix_mass(t: &ScoreTimeline, tau: f64, n: usize, prefix_len: usize) -> Result<usize> {
    let cum = cumulative_mass(t, tau)?;
    if cum.total().is_zero() {
        return Err(Error::parameter("degenerate mass, supply tau > 0"));
    }
    let boundary = &cum.values()[prefix_len - 1];
    let targets = midpoint_targets(cum.total(), n);
    Ok(targets.iter().filter(|u| *u <= boundary).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeline::FrameLabels;

    fn timeline(scores: Vec<f64>) -> ScoreTimeline {
        ScoreTimeline::new(scores, 16, 24.0).unwrap()
    }

    #[test]
    fn cumulative_mass_constant_accumulation() {
        let cum = cumulative_mass(&timeline(vec![0.0, 0.0, 0.0, 0.0]), 0.1).unwrap();
        let vals = cum.values_f64();
        for (v, e) in vals.iter().zip([0.1, 0.2, 0.3, 0.4]) {
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn cumulative_mass_direct_sum() {
        let cum = cumulative_mass(&timeline(vec![0.0, 1.0, 0.0, 0.0]), 0.1).unwrap();
        let vals = cum.values_f64();
        for (v, e) in vals.iter().zip([0.1, 1.2, 1.3, 1.4]) {
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn cumulative_mass_zero_tau() {
        let cum = cumulative_mass(&timeline(vec![1.0, 1.0]), 0.0).unwrap();
        assert_eq!(cum.values_f64(), vec![1.0, 2.0]);
    }

    #[test]
    fn negative_tau_rejected() {
        assert!(cumulative_mass(&timeline(vec![0.5]), -0.1).is_err());
    }

    #[test]
    fn ats_constant_scores_is_uniform_spacing() {
        let s = sample_ats(&timeline(vec![0.0, 0.0, 0.0, 0.0]), 0.1, 2).unwrap();
        assert_eq!(s.indices, vec![0, 2]);
    }

    #[test]
    fn ats_spike_attracts_both_targets_then_nudges() {
        // Targets 0.35 and 1.05 both land in index 1's span (0.1, 1.2];
        // nudging moves the second one up to index 2.
        let s = sample_ats(&timeline(vec![0.0, 1.0, 0.0, 0.0]), 0.1, 2).unwrap();
        assert_eq!(s.indices, vec![1, 2]);
        let raw = sample_ats_raw(&timeline(vec![0.0, 1.0, 0.0, 0.0]), 0.1, 2).unwrap();
        assert_eq!(raw, vec![1, 1]);
    }

    #[test]
    fn ats_budget_exceeds_timeline_is_error() {
        let err = sample_ats(&timeline(vec![0.5, 0.5]), 0.1, 3).unwrap_err();
        assert!(err.to_string().contains("budget exceeds timeline"));
    }

    #[test]
    fn ats_degenerate_mass_is_error() {
        let err = sample_ats(&timeline(vec![0.0, 0.0]), 0.0, 1).unwrap_err();
        assert!(err.to_string().contains("degenerate mass"));
    }

    #[test]
    fn two_region_mass_share() {
        let mut scores = vec![0.05; 100];
        scores.extend(vec![0.95; 100]);
        let t = timeline(scores);
        let n = 20;
        let tau = 0.1;
        // Region masses: 100 * 0.15 = 15 and 100 * 1.05 = 105, total 120.
        // Expected shares: 20 * 15/120 = 2.5 and 20 * 105/120 = 17.5.
        let in_first = targets_in_prefix_mass(&t, tau, n, 100).unwrap();
        assert!((in_first as f64 - 2.5).abs() <= 1.0);
        let s = sample_ats(&t, tau, n).unwrap();
        let low = s.indices.iter().filter(|&&i| i < 100).count();
        assert!((low as f64 - 2.5).abs() <= 1.0, "low region got {low}");
    }

    #[test]
    fn uniform_full_coverage() {
        assert_eq!(sample_uniform(4, 4).unwrap().indices, vec![0, 1, 2, 3]);
    }

    #[test]
    fn uniform_midpoints() {
        assert_eq!(sample_uniform(4, 2).unwrap().indices, vec![0, 2]);
        assert_eq!(sample_uniform(10, 3).unwrap().indices, vec![1, 4, 8]);
    }

    #[test]
    fn uniform_budget_error() {
        assert!(sample_uniform(3, 4).is_err());
    }

    #[test]
    fn topk_basics() {
        assert_eq!(sample_topk(&timeline(vec![0.1, 0.9, 0.5]), 1).unwrap().indices, vec![1]);
        assert_eq!(sample_topk(&timeline(vec![0.5, 0.5, 0.5]), 2).unwrap().indices, vec![0, 1]);
        assert_eq!(sample_topk(&timeline(vec![0.2, 0.8, 0.8, 0.1]), 2).unwrap().indices, vec![1, 2]);
    }

    #[test]
    fn coverage_all_and_none() {
        let labels = FrameLabels::new(vec![0, 1, 1, 0]);
        let hit = event_coverage(&SampleSet { indices: vec![1, 2], budget: 2 }, &labels);
        assert_eq!(hit.anomaly_recall, 1.0);
        assert_eq!(hit.events_hit, 1.0);
        let miss = event_coverage(&SampleSet { indices: vec![0, 3], budget: 2 }, &labels);
        assert_eq!(miss.anomaly_recall, 0.0);
        assert_eq!(miss.events_hit, 0.0);
    }

    #[test]
    fn spread_uniform_near_one_topk_cluster_low() {
        let uni = sample_uniform(100, 10).unwrap();
        assert!(temporal_spread(&uni, 100) > 0.9);
        let cluster = SampleSet { indices: (40..50).collect(), budget: 10 };
        assert!(temporal_spread(&cluster, 100) < 0.2);
    }

    #[test]
    fn samplers_strictly_increasing() {
        let t = timeline(vec![0.9, 0.1, 0.4, 0.8, 0.2, 0.6, 0.3, 0.7]);
        for s in [
            sample_ats(&t, 0.1, 5).unwrap(),
            sample_uniform(8, 5).unwrap(),
            sample_topk(&t, 5).unwrap(),
        ] {
            assert!(s.indices.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(s.indices.len(), 5);
        }
    }
}
