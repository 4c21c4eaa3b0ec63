//! Threshold-logic approximation of the PNN pattern layer.
//!
//! A stored column fires when `|x·w/σ − 1| < θ`; each class scores the
//! fraction of its columns that fire and a winner-takes-all stage picks the
//! class. Thresholds are either one global θ or one θ per class, both chosen
//! by leave-one-out accuracy inside the training split.

use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::error::{ApnnError, Result};
use crate::quantizer::QuantizerSpec;
use crate::weights::{dot, ClassWeights, StoredWeights};

/// Class decision with the per-class scores that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub class: usize,
    pub scores: Vec<f64>,
    /// False when every score is zero (no column fired anywhere).
    pub activated: bool,
}

impl Prediction {
    pub fn from_scores(scores: Vec<f64>) -> Result<Self> {
        let class = wta(&scores)?;
        let activated = scores.iter().any(|&s| s > 0.0);
        Ok(Self {
            class,
            scores,
            activated,
        })
    }
}

/// Index of the largest score, lowest index on ties.
pub fn wta(scores: &[f64]) -> Result<usize> {
    let (first, rest) = scores.split_first().ok_or(ApnnError::EmptyScores)?;
    let mut best = (0, *first);
    for (i, &s) in rest.iter().enumerate() {
        if s > best.1 {
            best = (i + 1, s);
        }
    }
    Ok(best.0)
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta <= 1.0 {
        Ok(())
    } else {
        Err(ApnnError::InvalidTheta(theta))
    }
}

/// Firing test of one pattern unit: 1 iff `|x·w/σ − 1| < θ`.
pub fn activation(x: &[f64], w: &[f64], sigma: f64, theta: f64) -> Result<bool> {
    check_theta(theta)?;
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(ApnnError::InvalidSigma(sigma));
    }
    let d = dot(x, w)?;
    Ok(fires(d / sigma, theta))
}

#[inline]
pub(crate) fn fires(normalized_dot: f64, theta: f64) -> bool {
    (normalized_dot - 1.0).abs() < theta
}

/// Fraction of the crossbar's columns that fire for `x`.
pub fn class_score(x: &[f64], crossbar: &ClassWeights, sigma: f64, theta: f64) -> Result<f64> {
    if crossbar.columns.is_empty() {
        return Err(ApnnError::EmptyCrossbar(0));
    }
    let mut count = 0usize;
    for w in &crossbar.columns {
        if activation(x, w, sigma, theta)? {
            count += 1;
        }
    }
    Ok(count as f64 / crossbar.columns.len() as f64)
}

/// Finite set of candidate thresholds searched during training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdGrid {
    values: Vec<f64>,
}

impl ThresholdGrid {
    pub const DEFAULT_LEVELS: usize = 1024;

    /// `{k/n : k = 1..=n}`.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(ApnnError::EmptyGrid);
        }
        Ok(Self {
            values: (1..=n).map(|k| k as f64 / n as f64).collect(),
        })
    }

    /// Arbitrary candidates, sorted ascending and deduplicated.
    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(ApnnError::EmptyGrid);
        }
        for &v in &values {
            check_theta(v)?;
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl Default for ThresholdGrid {
    fn default() -> Self {
        Self::uniform(Self::DEFAULT_LEVELS).expect("non-empty grid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "theta")]
pub enum ThresholdPolicy {
    Fixed(f64),
    PerClass(Vec<f64>),
}

impl ThresholdPolicy {
    pub fn theta_for(&self, class: usize) -> f64 {
        match self {
            Self::Fixed(t) => *t,
            Self::PerClass(ts) => ts[class],
        }
    }

    pub fn per_class(&self, n_classes: usize) -> Vec<f64> {
        (0..n_classes).map(|c| self.theta_for(c)).collect()
    }

    fn validate(&self, n_classes: usize) -> Result<()> {
        match self {
            Self::Fixed(t) => check_theta(*t),
            Self::PerClass(ts) => {
                if ts.len() != n_classes {
                    return Err(ApnnError::InvalidPolicy(format!(
                        "{} thresholds for {n_classes} classes",
                        ts.len()
                    )));
                }
                ts.iter().try_for_each(|&t| check_theta(t))
            }
        }
    }
}

/// Trained threshold-logic classifier. σ is pinned to 1; θ carries all the
/// tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApnnModel {
    pub weights: StoredWeights,
    pub policy: ThresholdPolicy,
    pub sigma: f64,
    pub quantizer: Option<QuantizerSpec>,
}

impl ApnnModel {
    pub fn new(
        weights: StoredWeights,
        policy: ThresholdPolicy,
        quantizer: Option<QuantizerSpec>,
    ) -> Result<Self> {
        policy.validate(weights.n_classes())?;
        if let Some(c) = weights.classes.iter().position(|c| c.columns.is_empty()) {
            return Err(ApnnError::EmptyCrossbar(c));
        }
        if let Some(q) = &quantizer {
            let off_level = weights
                .classes
                .iter()
                .flat_map(|c| c.columns.iter().flatten())
                .find(|&&w| !q.is_level(w));
            if let Some(w) = off_level {
                return Err(ApnnError::InvalidQuantizer(format!(
                    "stored weight {w} is not a level value"
                )));
            }
        }
        Ok(Self {
            weights,
            policy,
            sigma: 1.0,
            quantizer,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.weights.n_classes()
    }

    pub fn n_features(&self) -> usize {
        self.weights.n_features()
    }

    pub fn theta_for(&self, class: usize) -> f64 {
        self.policy.theta_for(class)
    }

    /// Firing bits per class and column, in read order.
    pub fn firing_pattern(&self, x: &[f64]) -> Result<Vec<Vec<bool>>> {
        self.check_len(x)?;
        self.weights
            .classes
            .iter()
            .enumerate()
            .map(|(c, cw)| {
                let theta = self.theta_for(c);
                cw.columns
                    .iter()
                    .map(|w| activation(x, w, self.sigma, theta))
                    .collect()
            })
            .collect()
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features() {
            return Err(ApnnError::LengthMismatch {
                expected: self.n_features(),
                found: x.len(),
            });
        }
        Ok(())
    }
}

pub fn apnn_classify(m: &ApnnModel, x: &[f64]) -> Result<Prediction> {
    m.check_len(x)?;
    let scores = m
        .weights
        .classes
        .iter()
        .enumerate()
        .map(|(c, cw)| class_score(x, cw, m.sigma, m.theta_for(c)))
        .collect::<Result<Vec<_>>>()?;
    Prediction::from_scores(scores)
}

/// Leave-one-out evaluator over a training split.
///
/// For every training sample and every class it keeps the sorted distances
/// `|x·w − 1|` to that class's columns, with the sample's own column removed.
/// The number of columns firing at θ is then a binary search.
#[derive(Debug, Clone)]
pub struct LooEvaluator {
    labels: Vec<usize>,
    /// `distances[i][c]`: ascending `|x_i·w − 1|` over class `c`'s columns,
    /// excluding sample i's own column.
    distances: Vec<Vec<Vec<f64>>>,
    n_classes: usize,
}

impl LooEvaluator {
    /// `train` must be the samples `weights` was built from, in the same order.
    pub fn new(train: &[Sample], weights: &StoredWeights) -> Result<Self> {
        if train.len() != weights.placement.len() {
            return Err(ApnnError::LengthMismatch {
                expected: weights.placement.len(),
                found: train.len(),
            });
        }
        let n_classes = weights.n_classes();
        let mut distances = Vec::with_capacity(train.len());
        for (s, &(own_class, own_col)) in train.iter().zip(&weights.placement) {
            let mut per_class = Vec::with_capacity(n_classes);
            for (c, cw) in weights.classes.iter().enumerate() {
                let mut ds = Vec::with_capacity(cw.columns.len());
                for (j, w) in cw.columns.iter().enumerate() {
                    if c == own_class && j == own_col {
                        continue;
                    }
                    ds.push((dot(&s.features, w)? - 1.0).abs());
                }
                ds.sort_by(f64::total_cmp);
                per_class.push(ds);
            }
            distances.push(per_class);
        }
        Ok(Self {
            labels: train.iter().map(|s| s.label).collect(),
            distances,
            n_classes,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn score(&self, i: usize, class: usize, theta: f64) -> f64 {
        let ds = &self.distances[i][class];
        if ds.is_empty() {
            return 0.0;
        }
        let firing = ds.partition_point(|&d| d < theta);
        firing as f64 / ds.len() as f64
    }

    fn correct(&self, i: usize, thetas: &[f64]) -> bool {
        let label = self.labels[i];
        let own = self.score(i, label, thetas[label]);
        // lowest-index tie-break: earlier classes win ties, later need strictly more
        (0..self.n_classes).all(|c| {
            if c == label {
                return true;
            }
            let s = self.score(i, c, thetas[c]);
            if c < label {
                s < own
            } else {
                s <= own
            }
        })
    }

    /// LOO accuracy with per-class thresholds `thetas`.
    pub fn accuracy(&self, thetas: &[f64]) -> f64 {
        if self.labels.is_empty() {
            return 0.0;
        }
        let hits = (0..self.labels.len())
            .filter(|&i| self.correct(i, thetas))
            .count();
        hits as f64 / self.labels.len() as f64
    }

    pub fn policy_accuracy(&self, policy: &ThresholdPolicy) -> f64 {
        self.accuracy(&policy.per_class(self.n_classes))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFit {
    pub policy: ThresholdPolicy,
    /// LOO-on-train accuracy of `policy`.
    pub loo_accuracy: f64,
    /// LOO-on-train accuracy of the best single θ.
    pub fixed_loo_accuracy: f64,
    pub fixed_theta: f64,
    pub sweeps: usize,
}

/// Grid value with the best LOO accuracy; smaller θ wins ties.
pub fn train_fixed_threshold(eval: &LooEvaluator, grid: &ThresholdGrid) -> ThresholdFit {
    let mut best = (grid.values()[0], f64::NEG_INFINITY);
    for &t in grid.values() {
        let acc = eval.accuracy(&vec![t; eval.n_classes()]);
        if acc > best.1 {
            best = (t, acc);
        }
    }
    ThresholdFit {
        policy: ThresholdPolicy::Fixed(best.0),
        loo_accuracy: best.1,
        fixed_loo_accuracy: best.1,
        fixed_theta: best.0,
        sweeps: 0,
    }
}

pub const MAX_SWEEPS: usize = 10;

/// Per-class thresholds by coordinate descent from the best fixed θ.
///
/// Classes are visited in ascending id order. For each class the full grid
/// is scanned and the smallest θ reaching the maximum is adopted only if that
/// maximum strictly beats the current accuracy. Stops after a sweep with no
/// change or [`MAX_SWEEPS`] sweeps.
pub fn train_adaptive_thresholds(eval: &LooEvaluator, grid: &ThresholdGrid) -> ThresholdFit {
    let fixed = train_fixed_threshold(eval, grid);
    let mut thetas = vec![fixed.fixed_theta; eval.n_classes()];
    let mut current = fixed.loo_accuracy;
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut changed = false;
        for c in 0..eval.n_classes() {
            let mut trial = thetas.clone();
            let mut best = (thetas[c], f64::NEG_INFINITY);
            for &t in grid.values() {
                trial[c] = t;
                let acc = eval.accuracy(&trial);
                if acc > best.1 {
                    best = (t, acc);
                }
            }
            if best.1 > current {
                thetas[c] = best.0;
                current = best.1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    assert!(
        current >= fixed.loo_accuracy,
        "adaptive thresholds lost LOO accuracy: {current} < {}",
        fixed.loo_accuracy
    );
    ThresholdFit {
        policy: ThresholdPolicy::PerClass(thetas),
        loo_accuracy: current,
        fixed_loo_accuracy: fixed.loo_accuracy,
        fixed_theta: fixed.fixed_theta,
        sweeps,
    }
}
