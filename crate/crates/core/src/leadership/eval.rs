//! Stratified cross-validation and the accuracy / F-measure / AUC metrics.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::classifiers::{train_classifier, ClassifierKind};
use super::{LabeledInstance, LeadershipError};
use crate::util::derive_seed;

/// Assigns each instance a fold in `0..folds`. Each class is shuffled with
/// the seeded generator and dealt round-robin; the dealing position carries
/// over from one class to the next, so fold sizes differ by at most one and
/// every fold holds each class within one instance of its share.
pub fn stratified_folds(labels: &[bool], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0; labels.len()];
    let mut slot = 0;
    for class in [false, true] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            out[i] = slot % folds;
            slot += 1;
        }
    }
    out
}

/// Tie-corrected Mann-Whitney AUC: the probability that a random manager
/// outscores a random non-manager, counting ties as one half. `None` when a
/// class is absent.
pub fn auc_rank(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1..=j+1 share their average.
        let avg = (i + j + 2) as f64 / 2.0;
        rank_sum += avg * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let (p, q) = (n_pos as f64, n_neg as f64);
    Some((rank_sum - p * (p + 1.0) / 2.0) / (p * q))
}

/// Area under the empirical ROC curve by the trapezoid rule, with tied
/// scores forming a single diagonal step.
pub fn auc_trapezoid(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut area = 0.0;
    let mut i = 0;
    while i < order.len() {
        let (tp0, fp0) = (tp, fp);
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] {
                tp += 1;
            } else {
                fp += 1;
            }
            j += 1;
        }
        area += (fp - fp0) as f64 * (tp + tp0) as f64 / 2.0;
        i = j;
    }
    Some(area / (n_pos * n_neg) as f64)
}

/// Percentage of correct predictions.
pub fn accuracy(pred: &[bool], labels: &[bool]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    100.0 * pred.iter().zip(labels).filter(|(p, y)| p == y).count() as f64 / labels.len() as f64
}

/// F1 of the manager class; 0 when nothing is predicted a manager.
pub fn f_measure(pred: &[bool], labels: &[bool]) -> f64 {
    let tp = pred.iter().zip(labels).filter(|(&p, &y)| p && y).count() as f64;
    let fp = pred.iter().zip(labels).filter(|(&p, &y)| p && !y).count() as f64;
    let fn_ = pred.iter().zip(labels).filter(|(&p, &y)| !p && y).count() as f64;
    if tp + fp == 0.0 || tp == 0.0 {
        return 0.0;
    }
    2.0 * tp / (2.0 * tp + fp + fn_)
}

/// Pooled cross-validation result for one classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub classifier: String,
    pub folds: usize,
    /// Percent, pooled over all held-out predictions.
    pub accuracy: f64,
    pub f_measure: f64,
    pub auc: f64,
    /// Held-out accuracy of each fold, for paired comparisons.
    pub fold_accuracy: Vec<f64>,
    /// Folds whose training part had a single class and used the majority
    /// rule instead.
    pub fallback_folds: Vec<usize>,
}

/// Held-out predictions of one cross-validation run, in instance order.
#[derive(Debug, Clone)]
pub struct CvPredictions {
    pub fold: Vec<usize>,
    pub score: Vec<f64>,
    pub predicted: Vec<bool>,
}

pub fn cross_validate(
    kind: ClassifierKind,
    data: &[LabeledInstance],
    folds: usize,
    seed: u64,
) -> Result<CvResult, LeadershipError> {
    Ok(cross_validate_with_predictions(kind, data, folds, seed)?.0)
}

pub fn cross_validate_with_predictions(
    kind: ClassifierKind,
    data: &[LabeledInstance],
    folds: usize,
    seed: u64,
) -> Result<(CvResult, CvPredictions), LeadershipError> {
    if folds < 2 {
        return Err(LeadershipError::Config(
            "at least two folds are required".into(),
        ));
    }
    if data.len() < folds {
        return Err(LeadershipError::Config(format!(
            "{} instances cannot fill {folds} folds",
            data.len()
        )));
    }
    let labels: Vec<bool> = data.iter().map(|d| d.is_manager).collect();
    if labels.iter().all(|&y| y) || labels.iter().all(|&y| !y) {
        return Err(LeadershipError::SingleClass);
    }
    let assignment = stratified_folds(&labels, folds, seed);
    let per_fold: Vec<Result<(Vec<(usize, f64, bool)>, bool), LeadershipError>> = (0..folds)
        .into_par_iter()
        .map(|f| {
            let train: Vec<LabeledInstance> = data
                .iter()
                .zip(&assignment)
                .filter(|(_, &a)| a != f)
                .map(|(d, _)| d.clone())
                .collect();
            let model = train_classifier(kind, &train, derive_seed(seed, &format!("fold-{f}")))?;
            let held: Vec<(usize, f64, bool)> = (0..data.len())
                .filter(|&i| assignment[i] == f)
                .map(|i| {
                    let p = model.predict(&data[i].features);
                    (i, p.score, p.is_manager)
                })
                .collect();
            Ok((held, model.fallback))
        })
        .collect();
    let mut score = vec![0.0; data.len()];
    let mut predicted = vec![false; data.len()];
    let mut fold_accuracy = Vec::with_capacity(folds);
    let mut fallback_folds = Vec::new();
    for (f, r) in per_fold.into_iter().enumerate() {
        let (held, fallback) = r?;
        if fallback {
            fallback_folds.push(f);
        }
        let correct = held.iter().filter(|(i, _, p)| *p == labels[*i]).count();
        fold_accuracy.push(100.0 * correct as f64 / held.len().max(1) as f64);
        for (i, s, p) in held {
            score[i] = s;
            predicted[i] = p;
        }
    }
    let result = CvResult {
        classifier: kind.to_string(),
        folds,
        accuracy: accuracy(&predicted, &labels),
        f_measure: f_measure(&predicted, &labels),
        auc: auc_rank(&score, &labels).expect("both classes present"),
        fold_accuracy,
        fallback_folds,
    };
    Ok((
        result,
        CvPredictions {
            fold: assignment,
            score,
            predicted,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p_value: f64,
}

/// Paired t-test over per-fold values of two classifiers.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Option<TTest> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = a.len() as f64;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let df = n - 1.0;
    if var == 0.0 {
        let p_value = if mean == 0.0 { 1.0 } else { 0.0 };
        let t = if mean == 0.0 {
            0.0
        } else {
            mean.signum() * f64::INFINITY
        };
        return Some(TTest { t, df, p_value });
    }
    let t = mean / (var / n).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    Some(TTest {
        t,
        df,
        p_value: 2.0 * (1.0 - dist.cdf(t.abs())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_small_cases() {
        assert_eq!(auc_rank(&[0.1, 0.9], &[false, true]), Some(1.0));
        assert_eq!(auc_rank(&[0.5, 0.5, 0.5], &[false, true, false]), Some(0.5));
        assert_eq!(
            auc_trapezoid(&[0.5, 0.5, 0.5], &[false, true, false]),
            Some(0.5)
        );
        assert_eq!(auc_rank(&[0.3, 0.2], &[true, true]), None);
        let s = [0.2, 0.4, 0.4, 0.8, 0.1];
        let y = [false, true, false, true, false];
        assert!((auc_rank(&s, &y).unwrap() - auc_trapezoid(&s, &y).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn f_measure_zero_without_positive_predictions() {
        assert_eq!(f_measure(&[false, false], &[true, false]), 0.0);
        assert_eq!(f_measure(&[true, false], &[true, false]), 1.0);
        assert_eq!(accuracy(&[true, false], &[true, true]), 50.0);
    }

    #[test]
    fn folds_are_balanced() {
        let labels: Vec<bool> = (0..53).map(|i| i % 4 == 0).collect();
        let f = stratified_folds(&labels, 10, 3);
        for k in 0..10 {
            let size = f.iter().filter(|&&x| x == k).count();
            assert!((5..=6).contains(&size));
        }
        assert_eq!(f, stratified_folds(&labels, 10, 3));
    }

    #[test]
    fn t_test_basics() {
        let a = [80.0, 82.0, 79.0, 85.0];
        let t = paired_t_test(&a, &a).unwrap();
        assert_eq!(t.p_value, 1.0);
        let b = [70.0, 71.0, 72.0, 70.5];
        let t = paired_t_test(&a, &b).unwrap();
        assert!(t.t > 0.0 && t.p_value < 0.05);
    }
}
