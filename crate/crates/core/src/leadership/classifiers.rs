//! Binary manager/non-manager classifiers over the eight centrality features.
//!
//! Every model emits a score in `[0, 1]` (an estimate of the manager
//! probability) and predicts a manager iff the score exceeds 0.5.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{LabeledInstance, LeadershipError, FEATURE_COUNT};

/// Classifier family and its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ClassifierKind {
    ZeroR,
    OneR,
    Knn { k: usize },
    GaussianNaiveBayes,
    DecisionTree { max_depth: usize, min_leaf: usize },
    Logistic,
    RandomForest { trees: usize },
}

impl ClassifierKind {
    pub const DEFAULT_TREE: ClassifierKind = ClassifierKind::DecisionTree {
        max_depth: 6,
        min_leaf: 2,
    };
    pub const DEFAULT_FOREST: ClassifierKind = ClassifierKind::RandomForest { trees: 100 };

    /// The full suite in reporting order.
    pub fn all() -> Vec<ClassifierKind> {
        vec![
            ClassifierKind::ZeroR,
            ClassifierKind::OneR,
            ClassifierKind::Knn { k: 1 },
            ClassifierKind::Knn { k: 3 },
            ClassifierKind::Knn { k: 10 },
            ClassifierKind::GaussianNaiveBayes,
            Self::DEFAULT_TREE,
            ClassifierKind::Logistic,
            Self::DEFAULT_FOREST,
        ]
    }

    /// Parses `all` or a comma-separated list of names.
    pub fn parse_list(s: &str) -> Result<Vec<ClassifierKind>, LeadershipError> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(Self::all());
        }
        s.split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(str::parse)
            .collect()
    }

    /// Whether training needs both classes.
    pub fn needs_both_classes(self) -> bool {
        self != ClassifierKind::ZeroR
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassifierKind::ZeroR => f.write_str("zero-r"),
            ClassifierKind::OneR => f.write_str("one-r"),
            ClassifierKind::Knn { k } => write!(f, "knn{k}"),
            ClassifierKind::GaussianNaiveBayes => f.write_str("naive-bayes"),
            ClassifierKind::DecisionTree { .. } => f.write_str("decision-tree"),
            ClassifierKind::Logistic => f.write_str("logistic"),
            ClassifierKind::RandomForest { .. } => f.write_str("random-forest"),
        }
    }
}

impl FromStr for ClassifierKind {
    type Err = LeadershipError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase().replace('_', "-");
        Ok(match lower.as_str() {
            "zero-r" | "zeror" | "zr" => ClassifierKind::ZeroR,
            "one-r" | "oner" => ClassifierKind::OneR,
            "naive-bayes" | "nb" | "gaussian-naive-bayes" => ClassifierKind::GaussianNaiveBayes,
            "decision-tree" | "dt" | "tree" => Self::DEFAULT_TREE,
            "logistic" | "lr" => ClassifierKind::Logistic,
            "random-forest" | "rf" => Self::DEFAULT_FOREST,
            other => {
                let k = other
                    .strip_prefix("knn")
                    .map(|r| r.trim_start_matches(['-', ':', '(']).trim_end_matches(')'))
                    .and_then(|r| r.parse::<usize>().ok())
                    .filter(|&k| k > 0)
                    .ok_or_else(|| LeadershipError::UnknownClassifier(s.to_string()))?;
                ClassifierKind::Knn { k }
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub is_manager: bool,
    pub score: f64,
}

/// A fitted classifier. `fallback` is set when a trainable kind saw a single
/// class and was replaced by the majority rule.
#[derive(Debug, Clone)]
pub struct Model {
    pub kind: ClassifierKind,
    pub fallback: bool,
    inner: Inner,
}

#[derive(Debug, Clone)]
enum Inner {
    Constant(f64),
    OneR(OneRule),
    Knn {
        k: usize,
        scaler: Scaler,
        points: Vec<([f64; FEATURE_COUNT], bool)>,
    },
    Bayes(GaussianNb),
    Tree(Tree),
    Logistic {
        scaler: Scaler,
        /// Intercept first.
        beta: Vec<f64>,
    },
    Forest(Vec<Tree>),
}

impl Model {
    pub fn predict(&self, x: &[f64; FEATURE_COUNT]) -> Prediction {
        let score = match &self.inner {
            Inner::Constant(s) => *s,
            Inner::OneR(r) => r.score(x),
            Inner::Knn { k, scaler, points } => knn_score(*k, scaler, points, x),
            Inner::Bayes(nb) => nb.score(x),
            Inner::Tree(t) => t.score(x),
            Inner::Logistic { scaler, beta } => {
                let z = scaler.apply(x);
                sigmoid(beta[0] + z.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>())
            }
            Inner::Forest(trees) => {
                trees.iter().map(|t| t.score(x)).sum::<f64>() / trees.len() as f64
            }
        };
        Prediction {
            is_manager: score > 0.5,
            score,
        }
    }
}

/// Fits `kind` on `data`. A trainable kind given a single class falls back
/// to the majority rule with `fallback` set.
pub fn train_classifier(
    kind: ClassifierKind,
    data: &[LabeledInstance],
    seed: u64,
) -> Result<Model, LeadershipError> {
    if data.is_empty() {
        return Err(LeadershipError::NoTrainingData);
    }
    if let Some(bad) = data
        .iter()
        .find(|d| d.features.iter().any(|x| !x.is_finite()))
    {
        return Err(LeadershipError::NonFinite(bad.node));
    }
    let positives = data.iter().filter(|d| d.is_manager).count();
    let single_class = positives == 0 || positives == data.len();
    let zero_r = || {
        // Ties go to the non-manager class: score 0.5 does not exceed 0.5.
        let rate = positives as f64 / data.len() as f64;
        Inner::Constant(if rate > 0.5 {
            1.0
        } else if rate < 0.5 {
            0.0
        } else {
            0.5
        })
    };
    if kind.needs_both_classes() && single_class {
        return Ok(Model {
            kind,
            fallback: true,
            inner: zero_r(),
        });
    }
    let inner = match kind {
        ClassifierKind::ZeroR => zero_r(),
        ClassifierKind::OneR => Inner::OneR(OneRule::fit(data, 6)),
        ClassifierKind::Knn { k } => {
            let scaler = Scaler::fit(data);
            Inner::Knn {
                k,
                points: data
                    .iter()
                    .map(|d| (scaler.apply(&d.features), d.is_manager))
                    .collect(),
                scaler,
            }
        }
        ClassifierKind::GaussianNaiveBayes => Inner::Bayes(GaussianNb::fit(data)),
        ClassifierKind::DecisionTree {
            max_depth,
            min_leaf,
        } => {
            let idx: Vec<usize> = (0..data.len()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Inner::Tree(Tree::fit(
                data,
                &idx,
                max_depth,
                min_leaf.max(1),
                FEATURE_COUNT,
                &mut rng,
            ))
        }
        ClassifierKind::Logistic => {
            let scaler = Scaler::fit(data);
            Inner::Logistic {
                beta: fit_logistic(data, &scaler),
                scaler,
            }
        }
        ClassifierKind::RandomForest { trees } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = (FEATURE_COUNT as f64).sqrt().round() as usize;
            let n = data.len();
            Inner::Forest(
                (0..trees.max(1))
                    .map(|_| {
                        let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                        Tree::fit(data, &sample, usize::MAX, 1, m, &mut rng)
                    })
                    .collect(),
            )
        }
    };
    Ok(Model {
        kind,
        fallback: false,
        inner,
    })
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Per-feature standardization fitted on training data. Constant features
/// get unit scale.
#[derive(Debug, Clone)]
struct Scaler {
    mean: [f64; FEATURE_COUNT],
    sd: [f64; FEATURE_COUNT],
}

impl Scaler {
    fn fit(data: &[LabeledInstance]) -> Self {
        let n = data.len() as f64;
        let mut mean = [0.0; FEATURE_COUNT];
        let mut sd = [0.0; FEATURE_COUNT];
        for f in 0..FEATURE_COUNT {
            mean[f] = data.iter().map(|d| d.features[f]).sum::<f64>() / n;
            let var = data
                .iter()
                .map(|d| (d.features[f] - mean[f]).powi(2))
                .sum::<f64>()
                / n;
            sd[f] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        Scaler { mean, sd }
    }

    fn apply(&self, x: &[f64; FEATURE_COUNT]) -> [f64; FEATURE_COUNT] {
        let mut out = [0.0; FEATURE_COUNT];
        for f in 0..FEATURE_COUNT {
            out[f] = (x[f] - self.mean[f]) / self.sd[f];
        }
        out
    }
}

fn knn_score(
    k: usize,
    scaler: &Scaler,
    points: &[([f64; FEATURE_COUNT], bool)],
    x: &[f64; FEATURE_COUNT],
) -> f64 {
    let z = scaler.apply(x);
    let mut dist: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, (p, _))| {
            (
                p.iter().zip(&z).map(|(a, b)| (a - b).powi(2)).sum::<f64>(),
                i,
            )
        })
        .collect();
    // Equal distances keep training order.
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let k = k.min(points.len());
    dist[..k].iter().filter(|(_, i)| points[*i].1).count() as f64 / k as f64
}

/// One-feature rule over buckets of the sorted feature values. A bucket
/// closes once its majority class has at least `min_bucket` members and the
/// next value both differs and belongs to another class; adjacent buckets
/// with the same majority are then merged.
#[derive(Debug, Clone)]
struct OneRule {
    feature: usize,
    /// Upper thresholds between consecutive buckets, ascending.
    cuts: Vec<f64>,
    /// Manager fraction in each bucket.
    rates: Vec<f64>,
}

impl OneRule {
    fn fit(data: &[LabeledInstance], min_bucket: usize) -> Self {
        let mut best: Option<(usize, OneRule)> = None;
        for f in 0..FEATURE_COUNT {
            let rule = Self::fit_feature(data, f, min_bucket);
            let correct = data
                .iter()
                .filter(|d| (rule.score(&d.features) > 0.5) == d.is_manager)
                .count();
            if best.as_ref().is_none_or(|(c, _)| correct > *c) {
                best = Some((correct, rule));
            }
        }
        best.expect("eight candidate features").1
    }

    fn fit_feature(data: &[LabeledInstance], f: usize, min_bucket: usize) -> Self {
        let mut sorted: Vec<(f64, bool)> =
            data.iter().map(|d| (d.features[f], d.is_manager)).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        // (upper value, positives, total)
        let mut buckets: Vec<(f64, usize, usize)> = Vec::new();
        let (mut pos, mut tot) = (0usize, 0usize);
        for (i, &(v, y)) in sorted.iter().enumerate() {
            pos += y as usize;
            tot += 1;
            let majority_pos = pos * 2 > tot;
            let majority_count = if majority_pos { pos } else { tot - pos };
            let closes = match sorted.get(i + 1) {
                None => true,
                Some(&(nv, ny)) => majority_count >= min_bucket && nv > v && ny != majority_pos,
            };
            if closes {
                buckets.push((v, pos, tot));
                pos = 0;
                tot = 0;
            }
        }
        let mut merged: Vec<(f64, usize, usize)> = Vec::new();
        for b in buckets {
            match merged.last_mut() {
                Some(last) if (last.1 * 2 > last.2) == (b.1 * 2 > b.2) => {
                    *last = (b.0, last.1 + b.1, last.2 + b.2);
                }
                _ => merged.push(b),
            }
        }
        let cuts = merged
            .windows(2)
            .map(|w| {
                let next_low = sorted
                    .iter()
                    .map(|s| s.0)
                    .find(|&v| v > w[0].0)
                    .unwrap_or(w[0].0);
                (w[0].0 + next_low) / 2.0
            })
            .collect();
        OneRule {
            feature: f,
            cuts,
            rates: merged.iter().map(|b| b.1 as f64 / b.2 as f64).collect(),
        }
    }

    fn score(&self, x: &[f64; FEATURE_COUNT]) -> f64 {
        let v = x[self.feature];
        let bucket = self.cuts.iter().take_while(|&&c| v > c).count();
        self.rates[bucket]
    }
}

#[derive(Debug, Clone)]
struct GaussianNb {
    log_prior: [f64; 2],
    mean: [[f64; FEATURE_COUNT]; 2],
    var: [[f64; FEATURE_COUNT]; 2],
}

impl GaussianNb {
    fn fit(data: &[LabeledInstance]) -> Self {
        let mut mean = [[0.0; FEATURE_COUNT]; 2];
        let mut var = [[0.0; FEATURE_COUNT]; 2];
        let mut count = [0usize; 2];
        for d in data {
            count[d.is_manager as usize] += 1;
        }
        let mut max_var: f64 = 0.0;
        for c in 0..2 {
            let members: Vec<&LabeledInstance> =
                data.iter().filter(|d| d.is_manager as usize == c).collect();
            let n = members.len() as f64;
            for f in 0..FEATURE_COUNT {
                mean[c][f] = members.iter().map(|d| d.features[f]).sum::<f64>() / n;
                var[c][f] = members
                    .iter()
                    .map(|d| (d.features[f] - mean[c][f]).powi(2))
                    .sum::<f64>()
                    / n;
                max_var = max_var.max(var[c][f]);
            }
        }
        // Variance floor relative to the widest feature.
        let floor = 1e-9 * max_var.max(f64::MIN_POSITIVE);
        for row in var.iter_mut() {
            for v in row.iter_mut() {
                *v += floor;
            }
        }
        let total = data.len() as f64;
        GaussianNb {
            log_prior: [
                (count[0] as f64 / total).ln(),
                (count[1] as f64 / total).ln(),
            ],
            mean,
            var,
        }
    }

    fn score(&self, x: &[f64; FEATURE_COUNT]) -> f64 {
        let ll: Vec<f64> = (0..2)
            .map(|c| {
                self.log_prior[c]
                    + (0..FEATURE_COUNT)
                        .map(|f| {
                            let v = self.var[c][f];
                            -0.5 * ((2.0 * std::f64::consts::PI * v).ln()
                                + (x[f] - self.mean[c][f]).powi(2) / v)
                        })
                        .sum::<f64>()
            })
            .collect();
        sigmoid(ll[1] - ll[0])
    }
}

#[derive(Debug, Clone)]
enum Tree {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Tree>,
        right: Box<Tree>,
    },
}

fn gini(pos: usize, tot: usize) -> f64 {
    if tot == 0 {
        return 0.0;
    }
    let p = pos as f64 / tot as f64;
    2.0 * p * (1.0 - p)
}

impl Tree {
    /// CART on the multiset `idx` of rows; `mtry` features are drawn at each
    /// split (all of them when `mtry` equals the feature count).
    fn fit(
        data: &[LabeledInstance],
        idx: &[usize],
        depth_left: usize,
        min_leaf: usize,
        mtry: usize,
        rng: &mut ChaCha8Rng,
    ) -> Tree {
        let tot = idx.len();
        let pos = idx.iter().filter(|&&i| data[i].is_manager).count();
        let leaf = Tree::Leaf(pos as f64 / tot as f64);
        if depth_left == 0 || pos == 0 || pos == tot || tot < 2 * min_leaf {
            return leaf;
        }
        let features: Vec<usize> = if mtry >= FEATURE_COUNT {
            (0..FEATURE_COUNT).collect()
        } else {
            let all: Vec<usize> = (0..FEATURE_COUNT).collect();
            let mut pick: Vec<usize> = all.choose_multiple(rng, mtry).copied().collect();
            pick.sort_unstable();
            pick
        };
        let parent = gini(pos, tot);
        let mut best: Option<(f64, usize, f64)> = None;
        for &f in &features {
            let mut order: Vec<(f64, bool)> = idx
                .iter()
                .map(|&i| (data[i].features[f], data[i].is_manager))
                .collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut lpos = 0;
            for s in 1..tot {
                lpos += order[s - 1].1 as usize;
                if order[s].0 <= order[s - 1].0 || s < min_leaf || tot - s < min_leaf {
                    continue;
                }
                let imp = (s as f64 * gini(lpos, s) + (tot - s) as f64 * gini(pos - lpos, tot - s))
                    / tot as f64;
                if best.is_none_or(|(b, _, _)| imp < b - 1e-15) {
                    best = Some((imp, f, (order[s - 1].0 + order[s].0) / 2.0));
                }
            }
        }
        match best {
            Some((imp, feature, threshold)) if imp < parent - 1e-15 => {
                let (l, r): (Vec<usize>, Vec<usize>) = idx
                    .iter()
                    .partition(|&&i| data[i].features[feature] <= threshold);
                Tree::Split {
                    feature,
                    threshold,
                    left: Box::new(Tree::fit(data, &l, depth_left - 1, min_leaf, mtry, rng)),
                    right: Box::new(Tree::fit(data, &r, depth_left - 1, min_leaf, mtry, rng)),
                }
            }
            _ => leaf,
        }
    }

    fn score(&self, x: &[f64; FEATURE_COUNT]) -> f64 {
        let mut node = self;
        loop {
            match node {
                Tree::Leaf(p) => return *p,
                Tree::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }
}

const LOGISTIC_RIDGE: f64 = 1e-4;
const LOGISTIC_TOL: f64 = 1e-8;
const LOGISTIC_MAX_ITER: usize = 100;

/// Maximum-likelihood logistic regression by Newton-Raphson on
/// standardized features, with a small ridge on the slopes so separable
/// data still yields finite coefficients.
fn fit_logistic(data: &[LabeledInstance], scaler: &Scaler) -> Vec<f64> {
    let n = data.len();
    let d = FEATURE_COUNT + 1;
    let x = DMatrix::from_fn(n, d, |r, c| {
        if c == 0 {
            1.0
        } else {
            (data[r].features[c - 1] - scaler.mean[c - 1]) / scaler.sd[c - 1]
        }
    });
    let y = DVector::from_fn(n, |r, _| data[r].is_manager as u8 as f64);
    let mut beta = DVector::zeros(d);
    let mut penalty = DMatrix::identity(d, d) * LOGISTIC_RIDGE;
    penalty[(0, 0)] = 0.0;
    for _ in 0..LOGISTIC_MAX_ITER {
        let p = (&x * &beta).map(sigmoid);
        let w = p.map(|v| (v * (1.0 - v)).max(1e-12));
        let grad = x.transpose() * (&y - &p) - &penalty * &beta;
        let xw = DMatrix::from_fn(n, d, |r, c| x[(r, c)] * w[r]);
        let hess = x.transpose() * xw + &penalty;
        let step = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&grad),
            None => match hess.lu().solve(&grad) {
                Some(s) => s,
                None => break,
            },
        };
        beta += &step;
        if step.amax() < LOGISTIC_TOL {
            break;
        }
    }
    beta.iter().copied().collect()
}
