//! Conventional probabilistic neural network with the exponential kernel
//! `g = exp((x·w − 1)/σ²) / √(2πσ²)`, used as the accuracy baseline.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::apnn::Prediction;
use crate::data::Sample;
use crate::error::{ApnnError, Result};
use crate::quantizer::QuantizerSpec;
use crate::weights::{dot, StoredWeights};

pub const DEFAULT_SIGMA_GRID: [f64; 7] = [0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PnnModel {
    pub weights: StoredWeights,
    pub sigma: f64,
    pub quantizer: Option<QuantizerSpec>,
}

impl PnnModel {
    /// Stores `train` (already normalized), quantizing when asked.
    pub fn fit(
        train: &[Sample],
        n_classes: usize,
        sigma: f64,
        quantizer: Option<QuantizerSpec>,
    ) -> Result<Self> {
        if sigma.is_nan() || sigma <= 0.0 {
            return Err(ApnnError::InvalidSigma(sigma));
        }
        let weights = StoredWeights::from_samples(train, n_classes, quantizer.as_ref())?;
        Ok(Self {
            weights,
            sigma,
            quantizer,
        })
    }

    pub fn quantized(&self) -> bool {
        self.quantizer.is_some()
    }
}

/// Pattern-layer output for one stored column.
pub fn pattern_output(x: &[f64], w: &[f64], sigma: f64) -> Result<f64> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(ApnnError::InvalidSigma(sigma));
    }
    Ok(kernel(dot(x, w)?, sigma))
}

#[inline]
fn kernel(d: f64, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    ((d - 1.0) / s2).exp() / (2.0 * PI * s2).sqrt()
}

/// Per-class mean of pattern outputs, argmax with lowest-index tie-break.
pub fn pnn_classify(m: &PnnModel, x: &[f64]) -> Result<Prediction> {
    let scores = m
        .weights
        .classes
        .iter()
        .map(|cw| {
            let total = cw
                .columns
                .iter()
                .map(|w| pattern_output(x, w, m.sigma))
                .sum::<Result<f64>>()?;
            Ok(total / cw.columns.len() as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    Prediction::from_scores(scores)
}

/// Picks σ from `grid` by leave-one-out accuracy inside `train`; the smaller
/// σ wins ties. `train` must be normalized; columns are quantized iff
/// `quantizer` is given, matching how the final model will be built.
pub fn select_sigma(
    train: &[Sample],
    n_classes: usize,
    grid: &[f64],
    quantizer: Option<&QuantizerSpec>,
) -> Result<f64> {
    if grid.is_empty() {
        return Err(ApnnError::EmptyGrid);
    }
    if let Some(&s) = grid.iter().find(|s| s.is_nan() || **s <= 0.0) {
        return Err(ApnnError::InvalidSigma(s));
    }
    let weights = StoredWeights::from_samples(train, n_classes, quantizer)?;
    // dots[i][c] = x_i · w for every column of class c
    let dots: Vec<Vec<Vec<f64>>> = train
        .iter()
        .map(|s| {
            weights
                .classes
                .iter()
                .map(|cw| cw.columns.iter().map(|w| dot(&s.features, w)).collect())
                .collect::<Result<Vec<Vec<f64>>>>()
        })
        .collect::<Result<_>>()?;

    let mut order: Vec<f64> = grid.to_vec();
    order.sort_by(f64::total_cmp);
    let mut best = (order[0], usize::MAX);
    for &sigma in &order {
        let mut hits = 0usize;
        for (i, s) in train.iter().enumerate() {
            let (own_class, own_col) = weights.placement[i];
            let scores: Vec<f64> = dots[i]
                .iter()
                .enumerate()
                .map(|(c, ds)| {
                    let (sum, n) = ds
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| !(c == own_class && j == own_col))
                        .fold((0.0, 0usize), |(acc, n), (_, &d)| {
                            (acc + kernel(d, sigma), n + 1)
                        });
                    if n == 0 {
                        0.0
                    } else {
                        sum / n as f64
                    }
                })
                .collect();
            if crate::apnn::wta(&scores)? == s.label {
                hits += 1;
            }
        }
        if best.1 == usize::MAX || hits > best.1 {
            best = (sigma, hits);
        }
    }
    Ok(best.0)
}
