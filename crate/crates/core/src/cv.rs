//! k-fold cross-validation of the five classifier variants.
//!
//! Every hyperparameter (σ for the PNN, θ for the threshold classifier) is
//! picked by leave-one-out accuracy on the training folds only.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::apnn::{
    apnn_classify, train_adaptive_thresholds, train_fixed_threshold, ApnnModel, LooEvaluator,
    Prediction, ThresholdGrid, ThresholdPolicy,
};
use crate::data::{kfold, Dataset, FoldSplit, Sample};
use crate::error::{ApnnError, Result};
use crate::pnn::{pnn_classify, select_sigma, PnnModel, DEFAULT_SIGMA_GRID};
use crate::quantizer::QuantizerSpec;
use crate::weights::StoredWeights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "pnn")]
    Pnn,
    #[serde(rename = "pnn-q")]
    PnnQuantized,
    #[serde(rename = "apnn-fixed")]
    ApnnFixed,
    #[serde(rename = "apnn-fixed-q")]
    ApnnFixedQuantized,
    #[serde(rename = "apnn-adaptive-q")]
    ApnnAdaptiveQuantized,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Pnn,
        Method::PnnQuantized,
        Method::ApnnFixed,
        Method::ApnnFixedQuantized,
        Method::ApnnAdaptiveQuantized,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Method::Pnn => "pnn",
            Method::PnnQuantized => "pnn-q",
            Method::ApnnFixed => "apnn-fixed",
            Method::ApnnFixedQuantized => "apnn-fixed-q",
            Method::ApnnAdaptiveQuantized => "apnn-adaptive-q",
        }
    }

    pub fn quantized(self) -> bool {
        matches!(
            self,
            Method::PnnQuantized | Method::ApnnFixedQuantized | Method::ApnnAdaptiveQuantized
        )
    }

    pub fn is_threshold_logic(self) -> bool {
        !matches!(self, Method::Pnn | Method::PnnQuantized)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Method {
    type Err = ApnnError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| ApnnError::UnknownMethod(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOptions {
    pub quantizer: QuantizerSpec,
    pub sigma_grid: Vec<f64>,
    pub theta_grid: ThresholdGrid,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            quantizer: QuantizerSpec::default(),
            sigma_grid: DEFAULT_SIGMA_GRID.to_vec(),
            theta_grid: ThresholdGrid::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Pnn(PnnModel),
    Apnn(ApnnModel),
}

impl TrainedModel {
    pub fn classify(&self, x: &[f64]) -> Result<Prediction> {
        match self {
            TrainedModel::Pnn(m) => pnn_classify(m, x),
            TrainedModel::Apnn(m) => apnn_classify(m, x),
        }
    }

    pub fn as_apnn(&self) -> Option<&ApnnModel> {
        match self {
            TrainedModel::Apnn(m) => Some(m),
            TrainedModel::Pnn(_) => None,
        }
    }
}

/// Hyperparameters chosen on one training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldFit {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<ThresholdPolicy>,
    /// LOO-on-train accuracy of the chosen thresholds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loo_accuracy: Option<f64>,
    /// LOO-on-train accuracy of the best single θ.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_loo_accuracy: Option<f64>,
}

/// Trains `method` on normalized samples.
pub fn train_model(
    method: Method,
    train: &[Sample],
    n_classes: usize,
    opts: &CvOptions,
) -> Result<(TrainedModel, FoldFit)> {
    let quantizer = method.quantized().then_some(opts.quantizer);
    if !method.is_threshold_logic() {
        let sigma = select_sigma(train, n_classes, &opts.sigma_grid, quantizer.as_ref())?;
        let model = PnnModel::fit(train, n_classes, sigma, quantizer)?;
        let fit = FoldFit {
            sigma: Some(sigma),
            theta: None,
            loo_accuracy: None,
            fixed_loo_accuracy: None,
        };
        return Ok((TrainedModel::Pnn(model), fit));
    }
    let weights = StoredWeights::from_samples(train, n_classes, quantizer.as_ref())?;
    let eval = LooEvaluator::new(train, &weights)?;
    let fit = match method {
        Method::ApnnAdaptiveQuantized => train_adaptive_thresholds(&eval, &opts.theta_grid),
        _ => train_fixed_threshold(&eval, &opts.theta_grid),
    };
    let model = ApnnModel::new(weights, fit.policy.clone(), quantizer)?;
    let fold_fit = FoldFit {
        sigma: None,
        theta: Some(fit.policy),
        loo_accuracy: Some(fit.loo_accuracy),
        fixed_loo_accuracy: Some(fit.fixed_loo_accuracy),
    };
    Ok((TrainedModel::Apnn(model), fold_fit))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub accuracy: f64,
    #[serde(flatten)]
    pub fit: FoldFit,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub method: Method,
    pub k: usize,
    pub seed: u64,
    pub n_samples: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub folds: Vec<FoldReport>,
}

/// One trained fold, kept so callers can re-evaluate it (e.g. through the
/// analog model).
#[derive(Debug, Clone)]
pub struct FoldModel {
    pub fold: usize,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub model: TrainedModel,
    pub fit: FoldFit,
}

/// Normalizes `d` and trains `method` on every fold of `split`.
pub fn train_folds(
    d: &Dataset,
    split: &FoldSplit,
    method: Method,
    opts: &CvOptions,
) -> Result<(Dataset, Vec<FoldModel>)> {
    let normalized = d.normalized()?;
    let folds = (0..split.k)
        .map(|fold| {
            let train_indices = split.train_indices(fold);
            let test_indices = split.test_indices(fold).to_vec();
            let train = normalized.subset(&train_indices);
            let (model, fit) = train_model(method, &train, d.n_classes(), opts)?;
            Ok(FoldModel {
                fold,
                train_indices,
                test_indices,
                model,
                fit,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((normalized, folds))
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (0.0, 0.0);
    }
    // Shifted by the first value so a run of equal inputs returns that value exactly.
    let first = values[0];
    let mean = first + values.iter().map(|v| v - first).sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Scores already-trained folds with `classify` and assembles the report.
pub fn evaluate_folds<F>(
    normalized: &Dataset,
    folds: &[FoldModel],
    method: Method,
    seed: u64,
    mut classify: F,
) -> Result<CvReport>
where
    F: FnMut(&FoldModel, usize, &[f64]) -> Result<usize>,
{
    let n_classes = normalized.n_classes();
    let mut reports = Vec::with_capacity(folds.len());
    for fm in folds {
        let mut confusion = vec![vec![0usize; n_classes]; n_classes];
        let mut hits = 0usize;
        for &i in &fm.test_indices {
            let s = &normalized.samples()[i];
            let predicted = classify(fm, i, &s.features)?;
            confusion[s.label][predicted] += 1;
            hits += usize::from(predicted == s.label);
        }
        reports.push(FoldReport {
            fold: fm.fold,
            n_train: fm.train_indices.len(),
            n_test: fm.test_indices.len(),
            accuracy: hits as f64 / fm.test_indices.len() as f64,
            fit: fm.fit.clone(),
            confusion,
        });
    }
    let accs: Vec<f64> = reports.iter().map(|r| r.accuracy).collect();
    let (mean_accuracy, std_accuracy) = mean_std(&accs);
    Ok(CvReport {
        method,
        k: folds.len(),
        seed,
        n_samples: normalized.len(),
        mean_accuracy,
        std_accuracy,
        folds: reports,
    })
}

/// Stratified k-fold cross-validation of `method` on `d`.
pub fn cross_validate(
    d: &Dataset,
    method: Method,
    k: usize,
    seed: u64,
    opts: &CvOptions,
) -> Result<CvReport> {
    let split = kfold(d, k, seed)?;
    let (normalized, folds) = train_folds(d, &split, method, opts)?;
    evaluate_folds(&normalized, &folds, method, seed, |fm, _, x| {
        Ok(fm.model.classify(x)?.class)
    })
}
