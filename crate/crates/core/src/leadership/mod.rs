//! Leadership detection: top-k rankings by centrality, hidden-manager
//! accounting, and manager classifiers evaluated by cross-validation.

mod classifiers;
mod eval;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::centrality::{CentralityTable, Column};
use crate::graph::{LabelTable, NodeId};
use crate::scalar::Scalar;

pub use classifiers::{train_classifier, ClassifierKind, Model, Prediction};
pub use eval::{
    accuracy, auc_rank, auc_trapezoid, cross_validate, cross_validate_with_predictions, f_measure,
    paired_t_test, stratified_folds, CvPredictions, CvResult, TTest,
};

pub const FEATURE_COUNT: usize = 8;

#[derive(Debug, Error)]
pub enum LeadershipError {
    #[error("top-{k} contains unlabeled nodes; label these ids: {}", join_ids(.ids))]
    Unlabeled { k: usize, ids: Vec<NodeId> },
    #[error("k = {k} exceeds the ranked list length {len}")]
    KTooLarge { k: usize, len: usize },
    #[error("centrality table lacks the `{0}` column")]
    MissingColumn(Column),
    #[error("unknown classifier `{0}`")]
    UnknownClassifier(String),
    #[error("no labeled instances to train on")]
    NoTrainingData,
    #[error("labels contain a single class; both managers and non-managers are required")]
    SingleClass,
    #[error("node {0} has a non-finite feature")]
    NonFinite(NodeId),
    #[error("{0}")]
    Config(String),
}

fn join_ids(ids: &[NodeId]) -> String {
    ids.iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// A node's eight features with its manager label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledInstance {
    pub node: NodeId,
    pub features: [f64; FEATURE_COUNT],
    pub is_manager: bool,
}

/// Nodes ordered by descending score, ties by ascending node id.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub measure: Column,
    pub entries: Vec<RankedEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedEntry {
    pub node: NodeId,
    pub score: f64,
    pub is_manager: Option<bool>,
}

impl RankedList {
    /// Ranks by one column of a table, attaching labels where known.
    pub fn from_table<T: Scalar>(
        table: &CentralityTable<T>,
        measure: Column,
        labels: Option<&LabelTable>,
    ) -> Result<Self, LeadershipError> {
        let col = table
            .column(measure)
            .ok_or(LeadershipError::MissingColumn(measure))?;
        let scores: Vec<(NodeId, f64)> = table
            .nodes()
            .iter()
            .copied()
            .zip(col.iter().map(|x| x.as_f64()))
            .collect();
        Ok(Self::from_scores(measure, &scores, labels))
    }

    pub fn from_scores(
        measure: Column,
        scores: &[(NodeId, f64)],
        labels: Option<&LabelTable>,
    ) -> Self {
        let mut entries: Vec<RankedEntry> = scores
            .iter()
            .map(|&(node, score)| RankedEntry {
                node,
                score,
                is_manager: labels.and_then(|l| l.is_manager(node)),
            })
            .collect();
        entries.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.node.cmp(&b.node)));
        RankedList { measure, entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn top(&self, k: usize) -> &[RankedEntry] {
        &self.entries[..k.min(self.entries.len())]
    }
}

fn labeled_top<'a>(
    ranked: &'a RankedList,
    labels: &LabelTable,
    k: usize,
) -> Result<Vec<(&'a RankedEntry, crate::graph::Label)>, LeadershipError> {
    if k > ranked.len() {
        return Err(LeadershipError::KTooLarge {
            k,
            len: ranked.len(),
        });
    }
    let top = ranked.top(k);
    let missing: Vec<NodeId> = top
        .iter()
        .filter(|e| labels.get(e.node).is_none())
        .map(|e| e.node)
        .collect();
    if !missing.is_empty() {
        return Err(LeadershipError::Unlabeled { k, ids: missing });
    }
    Ok(top
        .iter()
        .map(|e| (e, *labels.get(e.node).expect("checked above")))
        .collect())
}

/// Fraction of the top `k` that are managers. Every top-`k` node must be
/// labeled; otherwise the error lists the ids to label.
pub fn precision_at_k(
    ranked: &RankedList,
    labels: &LabelTable,
    k: usize,
) -> Result<f64, LeadershipError> {
    if k == 0 {
        return Err(LeadershipError::Config("k must be positive".into()));
    }
    let top = labeled_top(ranked, labels, k)?;
    Ok(top.iter().filter(|(_, l)| l.is_manager).count() as f64 / k as f64)
}

/// Managers among a ranking's top `k`, and how many of them do not disclose
/// their position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenManagerRow {
    pub measure: String,
    pub k: usize,
    pub managers: usize,
    pub hidden: usize,
}

impl HiddenManagerRow {
    pub fn hidden_fraction(&self) -> Option<f64> {
        (self.managers > 0).then(|| self.hidden as f64 / self.managers as f64)
    }
}

pub fn hidden_manager_report(
    ranked: &[RankedList],
    labels: &LabelTable,
    k: usize,
) -> Result<Vec<HiddenManagerRow>, LeadershipError> {
    ranked
        .iter()
        .map(|r| {
            let top = labeled_top(r, labels, k)?;
            let managers: Vec<_> = top.iter().filter(|(_, l)| l.is_manager).collect();
            Ok(HiddenManagerRow {
                measure: r.measure.to_string(),
                k,
                managers: managers.len(),
                hidden: managers
                    .iter()
                    .filter(|(_, l)| !l.discloses_position)
                    .count(),
            })
        })
        .collect()
}

/// Labeled feature vectors for every table node that has a label.
pub fn labeled_instances<T: Scalar>(
    table: &CentralityTable<T>,
    labels: &LabelTable,
) -> Result<Vec<LabeledInstance>, LeadershipError> {
    check_features(table)?;
    Ok(table
        .nodes()
        .iter()
        .enumerate()
        .filter_map(|(i, &node)| {
            let label = labels.get(node)?;
            Some(LabeledInstance {
                node,
                features: to_f64(table.features(i).expect("checked")),
                is_manager: label.is_manager,
            })
        })
        .collect())
}

fn check_features<T: Scalar>(table: &CentralityTable<T>) -> Result<(), LeadershipError> {
    match Column::FEATURES
        .iter()
        .find(|c| table.column(**c).is_none())
    {
        Some(c) => Err(LeadershipError::MissingColumn(*c)),
        None => Ok(()),
    }
}

fn to_f64<T: Scalar>(x: [T; FEATURE_COUNT]) -> [f64; FEATURE_COUNT] {
    x.map(|v| v.as_f64())
}

/// Precision at each cutoff for one measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRow {
    pub measure: String,
    pub precision: Vec<(usize, f64)>,
}

/// Ranking, hidden-manager and classifier results of one evaluation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: Vec<PrecisionRow>,
    pub hidden: Vec<HiddenManagerRow>,
    pub classifiers: Vec<CvResult>,
}

impl EvalReport {
    /// `measure,p@k...` rows.
    pub fn precision_csv(&self) -> String {
        let mut out = String::from("measure");
        if let Some(first) = self.precision.first() {
            for (k, _) in &first.precision {
                let _ = write!(out, ",p@{k}");
            }
        }
        out.push('\n');
        for row in &self.precision {
            out.push_str(&row.measure);
            for (_, p) in &row.precision {
                let _ = write!(out, ",{p:.4}");
            }
            out.push('\n');
        }
        out
    }

    pub fn hidden_csv(&self) -> String {
        let mut out = String::from("measure,k,managers,hidden,hidden_fraction\n");
        for r in &self.hidden {
            let frac = r
                .hidden_fraction()
                .map_or(String::new(), |f| format!("{f:.4}"));
            let _ = writeln!(
                out,
                "{},{},{},{},{frac}",
                r.measure, r.k, r.managers, r.hidden
            );
        }
        out
    }

    pub fn classifier_csv(&self) -> String {
        let mut out = String::from("classifier,accuracy,f_measure,auc,fallback_folds\n");
        for r in &self.classifiers {
            let fb: Vec<String> = r.fallback_folds.iter().map(|f| f.to_string()).collect();
            let _ = writeln!(
                out,
                "{},{:.2},{:.4},{:.4},{}",
                r.classifier,
                r.accuracy,
                r.f_measure,
                r.auc,
                fb.join(";")
            );
        }
        out
    }
}

/// Precision at each `k` for each column, skipping cutoffs beyond the list.
pub fn ranking_report<T: Scalar>(
    table: &CentralityTable<T>,
    labels: &LabelTable,
    columns: &[Column],
    ks: &[usize],
) -> Result<Vec<PrecisionRow>, LeadershipError> {
    columns
        .iter()
        .filter(|c| table.column(**c).is_some())
        .map(|&c| {
            let ranked = RankedList::from_table(table, c, Some(labels))?;
            let precision = ks
                .iter()
                .filter(|&&k| k <= ranked.len())
                .map(|&k| Ok((k, precision_at_k(&ranked, labels, k)?)))
                .collect::<Result<_, LeadershipError>>()?;
            Ok(PrecisionRow {
                measure: c.to_string(),
                precision,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodePrediction {
    pub node: NodeId,
    pub is_manager: bool,
    pub score: f64,
}

/// Predictions for the unlabeled nodes of a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOutcome {
    pub predictions: Vec<NodePrediction>,
    pub labeled: usize,
    pub labeled_managers: usize,
    pub predicted_managers: usize,
    /// Labeled managers plus the summed manager scores of unlabeled nodes,
    /// over all nodes.
    pub estimated_manager_fraction: f64,
}

/// Trains each kind on the labeled nodes and averages their scores on the
/// unlabeled ones; a node is predicted a manager when the mean score
/// exceeds 0.5.
pub fn classify_all<T: Scalar>(
    kinds: &[ClassifierKind],
    table: &CentralityTable<T>,
    labels: &LabelTable,
    seed: u64,
) -> Result<ClassifyOutcome, LeadershipError> {
    if kinds.is_empty() {
        return Err(LeadershipError::Config("no classifiers selected".into()));
    }
    let train = labeled_instances(table, labels)?;
    if train.is_empty() {
        return Err(LeadershipError::NoTrainingData);
    }
    let labeled_managers = train.iter().filter(|d| d.is_manager).count();
    if labeled_managers == 0 || labeled_managers == train.len() {
        return Err(LeadershipError::SingleClass);
    }
    let models = kinds
        .iter()
        .map(|&k| train_classifier(k, &train, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let predictions: Vec<NodePrediction> = table
        .nodes()
        .iter()
        .enumerate()
        .filter(|(_, id)| labels.get(**id).is_none())
        .map(|(i, &node)| {
            let x = to_f64(table.features(i).expect("checked"));
            if x.iter().any(|v| !v.is_finite()) {
                return Err(LeadershipError::NonFinite(node));
            }
            let score =
                models.iter().map(|m| m.predict(&x).score).sum::<f64>() / models.len() as f64;
            Ok(NodePrediction {
                node,
                is_manager: score > 0.5,
                score,
            })
        })
        .collect::<Result<_, _>>()?;
    let expected: f64 = predictions.iter().map(|p| p.score).sum();
    Ok(ClassifyOutcome {
        labeled: train.len(),
        labeled_managers,
        predicted_managers: predictions.iter().filter(|p| p.is_manager).count(),
        estimated_manager_fraction: (labeled_managers as f64 + expected) / table.len() as f64,
        predictions,
    })
}

/// `node,is_manager,score` rows.
pub fn predictions_csv(outcome: &ClassifyOutcome) -> String {
    let mut out = String::from("node,is_manager,score\n");
    for p in &outcome.predictions {
        let _ = writeln!(out, "{},{},{:.6}", p.node, p.is_manager, p.score);
    }
    out
}
