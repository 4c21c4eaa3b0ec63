//! Per-class stored weight columns shared by the reference PNN, the
//! threshold-logic classifier and the crossbar model.

use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::error::{ApnnError, Result};
use crate::quantizer::QuantizerSpec;

/// Columns of one class crossbar. Each column is one stored training sample
/// and has one entry per feature row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub columns: Vec<Vec<f64>>,
}

impl ClassWeights {
    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }
}

/// All class crossbars plus, for each source sample, where it was stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredWeights {
    pub classes: Vec<ClassWeights>,
    /// `(class, column)` of the i-th training sample.
    pub placement: Vec<(usize, usize)>,
}

impl StoredWeights {
    /// Stores every (already normalized) sample as a column of its class,
    /// quantized when `quantizer` is given. Column order follows sample order.
    pub fn from_samples(
        samples: &[Sample],
        n_classes: usize,
        quantizer: Option<&QuantizerSpec>,
    ) -> Result<Self> {
        let mut classes = vec![
            ClassWeights {
                columns: Vec::new()
            };
            n_classes
        ];
        let mut placement = Vec::with_capacity(samples.len());
        let n_features = samples.first().map_or(0, |s| s.features.len());
        for s in samples {
            if s.features.len() != n_features {
                return Err(ApnnError::LengthMismatch {
                    expected: n_features,
                    found: s.features.len(),
                });
            }
            if s.label >= n_classes {
                return Err(ApnnError::InvalidDataset(format!(
                    "label {} outside 0..{n_classes}",
                    s.label
                )));
            }
            let column = match quantizer {
                Some(q) => s
                    .features
                    .iter()
                    .map(|&w| q.quantize(w))
                    .collect::<Result<Vec<_>>>()?,
                None => s.features.clone(),
            };
            let class = &mut classes[s.label];
            placement.push((s.label, class.columns.len()));
            class.columns.push(column);
        }
        if let Some(c) = classes.iter().position(|c| c.columns.is_empty()) {
            return Err(ApnnError::EmptyCrossbar(c));
        }
        Ok(Self { classes, placement })
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn n_features(&self) -> usize {
        self.classes
            .first()
            .and_then(|c| c.columns.first())
            .map_or(0, Vec::len)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(ApnnError::LengthMismatch {
            expected: b.len(),
            found: a.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).sum())
}
