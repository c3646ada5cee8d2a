//! Randomized invariants: properties that must hold for every input, not
//! just the fixtures the unit tests pin down.

use proptest::prelude::*;

use vaukit::metrics::{average_precision, bleu, meteor_lite, roc_auc, rouge_l, tokenize};
use vaukit::sampler::{sample_ats, sample_topk, sample_uniform};
use vaukit::timeline::ScoreTimeline;

fn timeline(scores: Vec<f64>) -> ScoreTimeline {
    ScoreTimeline::new(scores, 16, 24.0).unwrap()
}

fn scores_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..=1.0, 1..200)
}

fn assert_valid_sample(indices: &[usize], t: usize, n: usize) {
    assert_eq!(indices.len(), n);
    assert!(indices.windows(2).all(|w| w[0] < w[1]), "not strictly increasing: {indices:?}");
    assert!(indices.iter().all(|&i| i < t));
}

proptest! {
    #[test]
    fn ats_sample_is_valid(scores in scores_strategy(), n_seed in 1usize..200, tau in 0.01f64..2.0) {
        let t = scores.len();
        let n = 1 + n_seed % t;
        let set = sample_ats(&timeline(scores), tau, n).unwrap();
        assert_valid_sample(&set.indices, t, n);
    }

    #[test]
    fn uniform_and_topk_samples_are_valid(scores in scores_strategy(), n_seed in 1usize..200) {
        let t = scores.len();
        let n = 1 + n_seed % t;
        let tl = timeline(scores);
        assert_valid_sample(&sample_uniform(t, n).unwrap().indices, t, n);
        assert_valid_sample(&sample_topk(&tl, n).unwrap().indices, t, n);
    }

    #[test]
    fn ats_full_budget_takes_every_frame(scores in scores_strategy(), tau in 0.01f64..2.0) {
        let t = scores.len();
        let set = sample_ats(&timeline(scores), tau, t).unwrap();
        let expected: Vec<usize> = (0..t).collect();
        prop_assert_eq!(set.indices, expected);
    }

    #[test]
    fn constant_scores_reduce_to_uniform(
        c in 0.05f64..1.0,
        t in 1usize..300,
        n_seed in 1usize..300,
        tau in 0.01f64..2.0,
    ) {
        let n = 1 + n_seed % t;
        let ats = sample_ats(&timeline(vec![c; t]), tau, n).unwrap();
        prop_assert_eq!(ats.indices, sample_uniform(t, n).unwrap().indices);
    }

    #[test]
    fn auc_flipping_labels_complements(
        raw in prop::collection::vec((0.0f64..1.0, 0u8..2), 4..60),
    ) {
        let scores: Vec<f64> = raw.iter().map(|&(s, _)| s).collect();
        let mut labels: Vec<u8> = raw.iter().map(|&(_, l)| l).collect();
        if labels.iter().all(|&l| l == labels[0]) {
            labels[0] = 1 - labels[0];
        }
        let flipped: Vec<u8> = labels.iter().map(|&l| 1 - l).collect();
        let a = roc_auc(&scores, &labels).unwrap();
        let b = roc_auc(&scores, &flipped).unwrap();
        prop_assert!((a + b - 1.0).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
        let ap = average_precision(&scores, &labels).unwrap();
        prop_assert!((0.0..=1.0).contains(&ap));
    }

    #[test]
    fn text_metrics_stay_in_range(a in "[a-d ]{1,40}", b in "[a-d ]{1,40}") {
        let ta = tokenize(&a);
        let tb = tokenize(&b);
        prop_assume!(!ta.is_empty() && !tb.is_empty());
        let s = bleu(&ta, std::slice::from_ref(&tb));
        prop_assert!(s.cumulative.iter().all(|p| (0.0..=1.0).contains(p)));
        prop_assert!((0.0..=4.0).contains(&s.sum));
        prop_assert!((0.0..=1.0).contains(&rouge_l(&ta, &tb)));
        prop_assert!((0.0..=1.0).contains(&meteor_lite(&ta, &tb)));
    }

    #[test]
    fn rouge_and_meteor_are_maximal_on_identity(a in "[a-d]{1}( [a-d]{1,4}){0,10}") {
        let ta = tokenize(&a);
        prop_assume!(!ta.is_empty());
        prop_assert_eq!(rouge_l(&ta, &ta), 1.0);
        let m = meteor_lite(&ta, &ta);
        prop_assert!(meteor_lite(&ta, &ta) <= 1.0 && m > 0.0);
    }
}
