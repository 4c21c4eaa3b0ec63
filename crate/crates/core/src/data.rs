//! Dataset ingestion, per-sample unit normalization and stratified k-fold
//! splitting.
//!
//! Labels are densified to `0..C` in order of first appearance; the original
//! label strings are kept in [`Dataset::label_names`] for reporting.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ApnnError, Result};

/// One labeled feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: usize,
}

impl Sample {
    pub fn new(features: Vec<f64>, label: usize) -> Self {
        Self { features, label }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    samples: Vec<Sample>,
    n_features: usize,
    n_classes: usize,
    label_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset and checks the shape invariants: at least two
    /// classes, every class populated, identical finite feature vectors.
    pub fn new(samples: Vec<Sample>, n_classes: usize) -> Result<Self> {
        let names = (0..n_classes).map(|c| c.to_string()).collect();
        Self::with_label_names(samples, names)
    }

    pub fn with_label_names(samples: Vec<Sample>, label_names: Vec<String>) -> Result<Self> {
        let n_classes = label_names.len();
        if n_classes < 2 {
            return Err(ApnnError::TooFewClasses { found: n_classes });
        }
        let n_features = samples
            .first()
            .map(|s| s.features.len())
            .ok_or_else(|| ApnnError::InvalidDataset("no samples".into()))?;
        if n_features == 0 {
            return Err(ApnnError::InvalidDataset("samples have no features".into()));
        }
        let mut counts = vec![0usize; n_classes];
        for (i, s) in samples.iter().enumerate() {
            if s.features.len() != n_features {
                return Err(ApnnError::InvalidDataset(format!(
                    "sample {i} has {} features, expected {n_features}",
                    s.features.len()
                )));
            }
            if let Some(v) = s.features.iter().find(|v| !v.is_finite()) {
                return Err(ApnnError::NonFinite(*v));
            }
            if s.label >= n_classes {
                return Err(ApnnError::InvalidDataset(format!(
                    "sample {i} has label {} outside 0..{n_classes}",
                    s.label
                )));
            }
            counts[s.label] += 1;
        }
        if let Some(c) = counts.iter().position(|&n| n == 0) {
            return Err(ApnnError::InvalidDataset(format!(
                "class {c} has no samples"
            )));
        }
        Ok(Self {
            samples,
            n_features,
            n_classes,
            label_names,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for s in &self.samples {
            counts[s.label] += 1;
        }
        counts
    }

    /// Returns a copy with every sample scaled to unit L2 norm.
    pub fn normalized(&self) -> Result<Self> {
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| unit_normalize(s, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            samples,
            ..self.clone()
        })
    }

    /// Clones the samples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Vec<Sample> {
        indices.iter().map(|&i| self.samples[i].clone()).collect()
    }
}

/// Scales a sample to unit L2 norm. `index` only labels the error.
pub fn unit_normalize(sample: &Sample, index: usize) -> Result<Sample> {
    let norm = l2_norm(&sample.features);
    if norm == 0.0 || !norm.is_finite() {
        return Err(ApnnError::ZeroNorm { index });
    }
    Ok(Sample {
        features: sample.features.iter().map(|v| v / norm).collect(),
        label: sample.label,
    })
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| ApnnError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(file)
}

/// Parses `F` numeric columns followed by one label column. A first row whose
/// feature columns do not all parse as numbers is treated as a header.
pub fn parse_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut rows: Vec<(usize, csv::StringRecord)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| ApnnError::Csv {
            row: i + 1,
            message: e.to_string(),
        })?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        rows.push((i + 1, rec));
    }
    let Some((_, first)) = rows.first() else {
        return Err(ApnnError::EmptyFile);
    };
    let width = first.len();
    if width < 2 {
        return Err(ApnnError::InvalidDataset(
            "need at least one feature column and a label column".into(),
        ));
    }
    let is_header = first
        .iter()
        .take(width - 1)
        .any(|f| f.parse::<f64>().is_err());
    let data_rows = if is_header { &rows[1..] } else { &rows[..] };
    if data_rows.is_empty() {
        return Err(ApnnError::EmptyFile);
    }

    let mut label_names: Vec<String> = Vec::new();
    let mut samples = Vec::with_capacity(data_rows.len());
    for (row, rec) in data_rows {
        if rec.len() != width {
            return Err(ApnnError::RaggedRow {
                row: *row,
                expected: width,
                found: rec.len(),
            });
        }
        let mut features = Vec::with_capacity(width - 1);
        for (column, field) in rec.iter().take(width - 1).enumerate() {
            let v: f64 = field.parse().map_err(|_| ApnnError::NonNumeric {
                row: *row,
                column: column + 1,
                value: field.to_string(),
            })?;
            if !v.is_finite() {
                return Err(ApnnError::NonFiniteFeature {
                    row: *row,
                    column: column + 1,
                });
            }
            features.push(v);
        }
        let name = &rec[width - 1];
        let label = match label_names.iter().position(|n| n == name) {
            Some(l) => l,
            None => {
                label_names.push(name.to_string());
                label_names.len() - 1
            }
        };
        samples.push(Sample { features, label });
    }
    if label_names.len() < 2 {
        return Err(ApnnError::TooFewClasses {
            found: label_names.len(),
        });
    }
    Dataset::with_label_names(samples, label_names)
}

/// Disjoint stratified folds covering every sample index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<Vec<usize>>,
}

impl FoldSplit {
    pub fn test_indices(&self, fold: usize) -> &[usize] {
        &self.folds[fold]
    }

    /// All indices outside `fold`, ascending.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|(f, _)| *f != fold)
            .flat_map(|(_, idx)| idx.iter().copied())
            .collect();
        out.sort_unstable();
        out
    }

    /// Fold id per sample index.
    pub fn assignments(&self) -> Vec<usize> {
        let n = self.folds.iter().map(Vec::len).sum();
        let mut out = vec![0; n];
        for (f, idx) in self.folds.iter().enumerate() {
            for &i in idx {
                out[i] = f;
            }
        }
        out
    }

    /// Writes `sample_index,fold_id` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "sample_index,fold_id")?;
        for (i, f) in self.assignments().iter().enumerate() {
            writeln!(w, "{i},{f}")?;
        }
        Ok(())
    }
}

/// Stratified k-fold split. Each class is shuffled with a ChaCha8 generator
/// seeded from `seed`, then dealt round-robin; the deal position carries over
/// between classes so fold sizes stay within one of each other.
pub fn kfold(d: &Dataset, k: usize, seed: u64) -> Result<FoldSplit> {
    if k < 2 {
        return Err(ApnnError::InvalidFoldCount(k));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); d.n_classes()];
    for (i, s) in d.samples().iter().enumerate() {
        by_class[s.label].push(i);
    }
    if let Some((class, idx)) = by_class.iter().enumerate().find(|(_, v)| v.len() < k) {
        return Err(ApnnError::Split {
            class,
            count: idx.len(),
            k,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0usize;
    for mut idx in by_class {
        idx.shuffle(&mut rng);
        for i in idx {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(FoldSplit { k, seed, folds })
}
