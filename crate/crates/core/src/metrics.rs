//! Ranking and classification metrics with deterministic aggregation.

use crate::corpus::LabelId;
use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// An ordered list of (label id, score) pairs: strictly descending score,
/// ties broken by ascending label id, no duplicate labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPrediction {
    entries: Vec<(LabelId, f32)>,
}

impl RankedPrediction {
    /// Sorts raw scores into the canonical order. Duplicate labels and
    /// non-finite scores are rejected.
    pub fn from_scores(pairs: impl IntoIterator<Item = (LabelId, f32)>) -> Result<Self> {
        let mut entries: Vec<(LabelId, f32)> = pairs.into_iter().collect();
        if entries.iter().any(|&(_, s)| !s.is_finite()) {
            return Err(Error::InvalidArgument {
                detail: "prediction scores must be finite".into(),
            });
        }
        entries.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut seen = std::collections::HashSet::with_capacity(entries.len());
        for &(label, _) in &entries {
            if !seen.insert(label) {
                return Err(Error::InvalidArgument {
                    detail: format!("duplicate label {label} in prediction"),
                });
            }
        }
        Ok(RankedPrediction { entries })
    }

    /// Wraps entries that are already in canonical order (e.g. a filtered
    /// subsequence of another ranking).
    pub fn from_ranked(pairs: impl IntoIterator<Item = (LabelId, f32)>) -> Self {
        let entries: Vec<(LabelId, f32)> = pairs.into_iter().collect();
        debug_assert!(entries
            .windows(2)
            .all(|w| w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0)));
        RankedPrediction { entries }
    }

    pub fn entries(&self) -> &[(LabelId, f32)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The top `k` label ids in rank order.
    pub fn top_labels(&self, k: usize) -> impl Iterator<Item = LabelId> + '_ {
        self.entries.iter().take(k).map(|&(l, _)| l)
    }
}

fn contains(sorted: &[LabelId], label: LabelId) -> bool {
    sorted.binary_search(&label).is_ok()
}

/// Fraction of the top-k ranking entries that are relevant. Slots beyond
/// the ranking's length count as irrelevant.
pub fn precision_at_k(pred: &RankedPrediction, relevant: &[LabelId], k: usize) -> f64 {
    assert!(k >= 1, "k must be positive");
    debug_assert!(relevant.windows(2).all(|w| w[0] < w[1]));
    let hits = pred
        .top_labels(k)
        .filter(|&l| contains(relevant, l))
        .count();
    hits as f64 / k as f64
}

/// Precision at k = |relevant|; defined as 1.0 for an empty ground truth.
pub fn r_precision(pred: &RankedPrediction, relevant: &[LabelId]) -> f64 {
    if relevant.is_empty() {
        return 1.0;
    }
    precision_at_k(pred, relevant, relevant.len())
}

/// Harmonic mean of pooled precision and recall: true/false positives and
/// false negatives are counted over every (document, label) decision.
pub fn micro_f1(preds: &[Vec<LabelId>], truths: &[Vec<LabelId>]) -> Result<f64> {
    check_lengths(preds.len(), truths.len())?;
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for (pred, truth) in preds.iter().zip(truths) {
        let hits = pred.iter().filter(|&&l| contains(truth, l)).count() as u64;
        tp += hits;
        fp += pred.len() as u64 - hits;
        fn_ += truth.len() as u64 - hits;
    }
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        return Ok(0.0);
    }
    Ok(2.0 * tp as f64 / denom as f64)
}

/// Per-class F1 averaged over a label universe of `n_labels` classes.
///
/// A class with no true and no predicted positives scores 0 unless
/// `skip_absent` is set, in which case it is left out of the average.
pub fn macro_f1(
    preds: &[Vec<LabelId>],
    truths: &[Vec<LabelId>],
    n_labels: usize,
    skip_absent: bool,
) -> Result<f64> {
    check_lengths(preds.len(), truths.len())?;
    let mut tp = vec![0u64; n_labels];
    let mut pred_pos = vec![0u64; n_labels];
    let mut true_pos = vec![0u64; n_labels];
    for (pred, truth) in preds.iter().zip(truths) {
        for &l in pred {
            pred_pos[l as usize] += 1;
            if contains(truth, l) {
                tp[l as usize] += 1;
            }
        }
        for &l in truth {
            true_pos[l as usize] += 1;
        }
    }
    let mut sum = 0.0f64;
    let mut counted = 0usize;
    for c in 0..n_labels {
        let denom = pred_pos[c] + true_pos[c];
        if denom == 0 {
            if skip_absent {
                continue;
            }
            counted += 1;
            continue; // contributes 0
        }
        sum += 2.0 * tp[c] as f64 / denom as f64;
        counted += 1;
    }
    if counted == 0 {
        return Ok(0.0);
    }
    Ok(sum / counted as f64)
}

/// How hard yes/no decisions are derived from a ranking when computing the
/// F1 components of an [`EvalReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DecisionRule {
    /// Take the top r entries where r is the document's ground-truth size.
    TopR,
    /// Take a fixed number of top entries.
    TopK(usize),
    /// Take entries scoring strictly above the threshold.
    Threshold(f32),
}

/// Scores for one evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub p_at_k: BTreeMap<usize, f64>,
    pub r_precision: f64,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub n_docs: usize,
}

/// Scores ranked predictions against per-document ground-truth label sets.
///
/// Ranking metrics are unweighted means over documents (fixed pairwise
/// reduction, so results are bit-reproducible). The F1 scores use hard
/// decisions derived by `decision`; `n_labels` is the macro-F1 universe.
pub fn evaluate(
    preds: &[RankedPrediction],
    truths: &[Vec<LabelId>],
    ks: &[usize],
    n_labels: usize,
    decision: DecisionRule,
) -> Result<EvalReport> {
    check_lengths(preds.len(), truths.len())?;
    let n = preds.len();

    let mut p_at_k = BTreeMap::new();
    for &k in ks {
        let per_doc: Vec<f64> = preds
            .par_iter()
            .zip(truths)
            .map(|(pred, truth)| precision_at_k(pred, truth, k))
            .collect();
        p_at_k.insert(k, mean(&per_doc));
    }
    let rp: Vec<f64> = preds
        .par_iter()
        .zip(truths)
        .map(|(pred, truth)| r_precision(pred, truth))
        .collect();

    let decisions: Vec<Vec<LabelId>> = preds
        .par_iter()
        .zip(truths)
        .map(|(pred, truth)| {
            let mut set: Vec<LabelId> = match decision {
                DecisionRule::TopR => pred.top_labels(truth.len()).collect(),
                DecisionRule::TopK(k) => pred.top_labels(k).collect(),
                DecisionRule::Threshold(t) => pred
                    .entries()
                    .iter()
                    .filter(|&&(_, s)| s > t)
                    .map(|&(l, _)| l)
                    .collect(),
            };
            set.sort_unstable();
            set
        })
        .collect();

    Ok(EvalReport {
        p_at_k,
        r_precision: mean(&rp),
        micro_f1: micro_f1(&decisions, truths)?,
        macro_f1: macro_f1(&decisions, truths, n_labels, false)?,
        n_docs: n,
    })
}

/// Mean and spread of several runs' reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub n_runs: usize,
    pub mean: EvalReport,
    /// Max minus min per metric across runs.
    pub spread: EvalReport,
}

/// Averages reports from repeated runs; all runs must share the same ks.
pub fn aggregate_reports(reports: &[EvalReport]) -> Result<AggregateReport> {
    let first = reports.first().ok_or_else(|| Error::InvalidArgument {
        detail: "cannot aggregate zero reports".into(),
    })?;
    let ks: Vec<usize> = first.p_at_k.keys().copied().collect();
    for r in reports {
        if r.p_at_k.keys().copied().collect::<Vec<_>>() != ks {
            return Err(Error::InvalidArgument {
                detail: "reports disagree on the P@k cutoffs".into(),
            });
        }
    }
    let stat = |get: &dyn Fn(&EvalReport) -> f64| {
        let values: Vec<f64> = reports.iter().map(get).collect();
        let mean_v = mean(&values);
        let spread = values.iter().copied().fold(f64::MIN, f64::max)
            - values.iter().copied().fold(f64::MAX, f64::min);
        (mean_v, spread)
    };
    let mut mean_p = BTreeMap::new();
    let mut spread_p = BTreeMap::new();
    for &k in &ks {
        let (m, s) = stat(&|r: &EvalReport| r.p_at_k[&k]);
        mean_p.insert(k, m);
        spread_p.insert(k, s);
    }
    let (rp_m, rp_s) = stat(&|r: &EvalReport| r.r_precision);
    let (mi_m, mi_s) = stat(&|r: &EvalReport| r.micro_f1);
    let (ma_m, ma_s) = stat(&|r: &EvalReport| r.macro_f1);
    Ok(AggregateReport {
        n_runs: reports.len(),
        mean: EvalReport {
            p_at_k: mean_p,
            r_precision: rp_m,
            micro_f1: mi_m,
            macro_f1: ma_m,
            n_docs: first.n_docs,
        },
        spread: EvalReport {
            p_at_k: spread_p,
            r_precision: rp_s,
            micro_f1: mi_s,
            macro_f1: ma_s,
            n_docs: first.n_docs,
        },
    })
}

/// Sum with a fixed pairwise reduction tree; independent of how the values
/// were produced, so aggregate results are bit-reproducible.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    pairwise_sum(values) / values.len() as f64
}

fn check_lengths(preds: usize, truths: usize) -> Result<()> {
    if preds != truths {
        return Err(Error::LengthMismatch { preds, truths });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranking(labels: &[LabelId]) -> RankedPrediction {
        RankedPrediction::from_scores(
            labels
                .iter()
                .enumerate()
                .map(|(i, &l)| (l, 1.0 - i as f32 * 0.1)),
        )
        .unwrap()
    }

    #[test]
    fn p_at_k_perfect_and_empty() {
        let pred = ranking(&[0, 1, 2]);
        assert_eq!(precision_at_k(&pred, &[0, 1, 2], 3), 1.0);
        assert_eq!(precision_at_k(&pred, &[], 3), 0.0);
    }

    #[test]
    fn p_at_k_hand_example() {
        // ranking [a, c, b] with relevant {a, b}
        let pred = ranking(&[0, 2, 1]);
        let relevant = vec![0, 1];
        assert_eq!(precision_at_k(&pred, &relevant, 1), 1.0);
        assert_eq!(precision_at_k(&pred, &relevant, 2), 0.5);
        assert!((precision_at_k(&pred, &relevant, 3) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn short_rankings_count_missing_as_irrelevant() {
        let pred = ranking(&[0]);
        assert_eq!(precision_at_k(&pred, &[0, 1], 4), 0.25);
    }

    #[test]
    fn r_precision_cases() {
        // relevant {a,b}, ranking [a,c,b] -> top-2 holds one relevant
        let pred = ranking(&[0, 2, 1]);
        assert_eq!(r_precision(&pred, &[0, 1]), 0.5);
        // perfect top-r
        assert_eq!(r_precision(&ranking(&[0, 1, 2]), &[0, 1]), 1.0);
        // vacuous
        assert_eq!(r_precision(&pred, &[]), 1.0);
    }

    #[test]
    fn micro_f1_cases() {
        // identical non-empty -> 1.0
        assert_eq!(
            micro_f1(&[vec![0], vec![1, 2]], &[vec![0], vec![1, 2]]).unwrap(),
            1.0
        );
        // fully wrong -> 0.0
        assert_eq!(micro_f1(&[vec![0]], &[vec![1]]).unwrap(), 0.0);
        // pred {a},{a,b}; truth {a},{b}: TP=2 FP=1 FN=0 -> 0.8
        assert_eq!(
            micro_f1(&[vec![0], vec![0, 1]], &[vec![0], vec![1]]).unwrap(),
            0.8
        );
        assert!(matches!(
            micro_f1(&[vec![0]], &[]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn macro_f1_cases() {
        // single perfect class
        assert_eq!(macro_f1(&[vec![0]], &[vec![0]], 1, false).unwrap(), 1.0);
        // class a perfect, class b present but never predicted -> (1 + 0)/2
        assert_eq!(
            macro_f1(&[vec![0]], &[vec![0, 1]], 2, false).unwrap(),
            0.5
        );
        // empty universe
        assert_eq!(macro_f1(&[vec![]], &[vec![]], 0, false).unwrap(), 0.0);
        // absent class: included as zero by default, skippable by flag
        assert_eq!(macro_f1(&[vec![0]], &[vec![0]], 2, false).unwrap(), 0.5);
        assert_eq!(macro_f1(&[vec![0]], &[vec![0]], 2, true).unwrap(), 1.0);
    }

    #[test]
    fn evaluate_single_doc_matches_ops() {
        let preds = vec![ranking(&[0, 2, 1])];
        let truths = vec![vec![0, 1]];
        let report = evaluate(&preds, &truths, &[1, 2, 3], 3, DecisionRule::TopR).unwrap();
        assert_eq!(report.p_at_k[&1], 1.0);
        assert_eq!(report.p_at_k[&2], 0.5);
        assert_eq!(report.r_precision, 0.5);
        // top-2 decision set {0, 2} vs truth {0, 1}: TP=1 FP=1 FN=1
        assert_eq!(report.micro_f1, 0.5);
        assert_eq!(report.n_docs, 1);
    }

    #[test]
    fn two_label_truths_make_p2_equal_rprec() {
        let preds: Vec<RankedPrediction> = (0..50)
            .map(|i| ranking(&[(i % 7) as u32, ((i + 2) % 7) as u32, ((i + 4) % 7) as u32]))
            .collect();
        let truths: Vec<Vec<LabelId>> = (0..50)
            .map(|i| crate::corpus::normalize_labels(vec![(i % 7) as u32, ((i + 3) % 7) as u32]))
            .collect();
        let report = evaluate(&preds, &truths, &[1, 2, 3], 7, DecisionRule::TopR).unwrap();
        assert_eq!(report.p_at_k[&2].to_bits(), report.r_precision.to_bits());
    }

    #[test]
    fn k_times_p_at_k_is_nondecreasing() {
        let pred = ranking(&[4, 1, 3, 0]);
        let relevant = vec![0, 3];
        let mut prev = 0.0;
        for k in 1..8 {
            let hits = k as f64 * precision_at_k(&pred, &relevant, k);
            assert!(hits + 1e-12 >= prev);
            prev = hits;
        }
    }

    #[test]
    fn empty_truth_conventions() {
        // P@k counts nothing as relevant; R-Precision is vacuously perfect
        let preds = vec![ranking(&[0, 1]), ranking(&[2])];
        let truths = vec![vec![], vec![2]];
        let report = evaluate(&preds, &truths, &[1, 2], 3, DecisionRule::TopR).unwrap();
        assert_eq!(report.p_at_k[&1], 0.5); // only the second doc scores
        assert_eq!(report.r_precision, 1.0); // vacuous + perfect
    }

    #[test]
    fn aggregation_of_identical_runs_has_zero_spread() {
        let preds = vec![ranking(&[0, 1])];
        let truths = vec![vec![0]];
        let report = evaluate(&preds, &truths, &[1, 2], 2, DecisionRule::TopR).unwrap();
        let agg = aggregate_reports(&[report.clone(), report.clone(), report.clone()]).unwrap();
        assert_eq!(agg.n_runs, 3);
        assert_eq!(agg.mean.p_at_k, report.p_at_k);
        assert_eq!(agg.spread.r_precision, 0.0);
        assert_eq!(agg.spread.p_at_k[&1], 0.0);
    }

    #[test]
    fn ties_order_by_ascending_label() {
        let pred = RankedPrediction::from_scores(vec![(5, 0.5), (1, 0.5), (3, 0.9)]).unwrap();
        let labels: Vec<LabelId> = pred.top_labels(3).collect();
        assert_eq!(labels, vec![3, 1, 5]);
    }

    #[test]
    fn duplicate_labels_rejected() {
        assert!(RankedPrediction::from_scores(vec![(1, 0.5), (1, 0.4)]).is_err());
    }

    #[test]
    fn pairwise_sum_matches_naive_on_ints() {
        let values: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&values), 499500.0);
    }
}
