//! The four subcommands, each split into a pure `run_*` step that returns
//! data and a renderer, so tests can call them without touching disk.

use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, ensure, Context, Result};
use apnn_core::apnn::{train_adaptive_thresholds, train_fixed_threshold, LooEvaluator};
use apnn_core::cost::{estimate, CostReport};
use apnn_core::crossbar::analog_forward;
use apnn_core::cv::{evaluate_folds, mean_std, train_folds, FoldModel};
use apnn_core::weights::StoredWeights;
use apnn_core::{
    cross_validate, kfold, unit_normalize, AnalogTrace, ApnnModel, CvReport, Dataset,
    ElectricalConfig, Method, Prediction, Sample, ThresholdGrid, ThresholdPolicy,
};
use serde::Serialize;

use crate::config::{RunConfig, SweepParameter};

#[derive(Debug, Clone, Serialize)]
pub struct CvOutput {
    #[serde(flatten)]
    pub report: CvReport,
    pub config: RunConfig,
}

pub fn run_cv(cfg: &RunConfig) -> Result<CvOutput> {
    cfg.validate().context("config")?;
    let data = cfg.load_dataset()?;
    let report = cross_validate(&data, cfg.method, cfg.k, cfg.seed, &cfg.cv_options()?)
        .context("cross-validation")?;
    Ok(CvOutput {
        report,
        config: cfg.clone(),
    })
}

#[derive(Debug, Clone)]
pub struct TraceOutput {
    pub prediction: Prediction,
    pub trace: AnalogTrace,
    pub policy: ThresholdPolicy,
    /// True class of the probe when it came from the dataset.
    pub probe_label: Option<usize>,
}

/// Builds one crossbar per class from the first `train_per_class` samples of
/// each class in file order (skipping the probe row) and runs the probe
/// through the analog chain.
pub fn run_trace(cfg: &RunConfig) -> Result<TraceOutput> {
    cfg.validate().context("config")?;
    ensure!(
        cfg.method.is_threshold_logic(),
        "trace needs a threshold-logic method, got {}",
        cfg.method
    );
    let data = cfg.load_dataset()?;
    let tc = &cfg.trace;
    ensure!(tc.train_per_class > 0, "train_per_class must be positive");

    let (probe, probe_label, skip) = match &tc.input {
        Some(v) => {
            ensure!(
                v.len() == data.n_features(),
                "input has {} values, dataset has {} features",
                v.len(),
                data.n_features()
            );
            let probe = if v.iter().all(|x| *x == 0.0) {
                v.clone()
            } else {
                unit_normalize(&Sample::new(v.clone(), 0), 0)?.features
            };
            (probe, None, None)
        }
        None => {
            ensure!(
                tc.sample < data.len(),
                "sample index {} out of range (dataset has {} rows)",
                tc.sample,
                data.len()
            );
            let s = unit_normalize(&data.samples()[tc.sample], tc.sample)?;
            (s.features, Some(s.label), Some(tc.sample))
        }
    };

    let mut taken = vec![0usize; data.n_classes()];
    let mut train = Vec::with_capacity(tc.train_per_class * data.n_classes());
    for (i, s) in data.samples().iter().enumerate() {
        if Some(i) == skip || taken[s.label] == tc.train_per_class {
            continue;
        }
        taken[s.label] += 1;
        train.push(unit_normalize(s, i)?);
    }
    if let Some(c) = taken.iter().position(|&n| n < tc.train_per_class) {
        bail!(
            "class {c} has only {} samples available, {} requested",
            taken[c],
            tc.train_per_class
        );
    }

    let quantizer = cfg.method.quantized().then_some(cfg.quantizer);
    let weights = StoredWeights::from_samples(&train, data.n_classes(), quantizer.as_ref())?;
    let policy = match tc.theta {
        Some(theta) => ThresholdPolicy::Fixed(theta),
        None => {
            let eval = LooEvaluator::new(&train, &weights)?;
            let grid = ThresholdGrid::uniform(cfg.theta_grid_levels)?;
            if cfg.method == Method::ApnnAdaptiveQuantized {
                train_adaptive_thresholds(&eval, &grid).policy
            } else {
                train_fixed_threshold(&eval, &grid).policy
            }
        }
    };
    let model = ApnnModel::new(weights, policy.clone(), quantizer)?;
    let stream = skip.unwrap_or(0) as u64;
    let (prediction, trace) =
        analog_forward(&model, &probe, &cfg.electrical, stream).context("analog forward")?;
    Ok(TraceOutput {
        prediction,
        trace,
        policy,
        probe_label,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

/// Cross-validated accuracy with every prediction taken from the analog
/// chain. The variation stream of each inference is its dataset row.
pub fn analog_cv(
    normalized: &Dataset,
    folds: &[FoldModel],
    method: Method,
    seed: u64,
    electrical: &ElectricalConfig,
) -> Result<CvReport> {
    Ok(evaluate_folds(
        normalized,
        folds,
        method,
        seed,
        |fm, i, x| {
            let model = fm
                .model
                .as_apnn()
                .ok_or_else(|| apnn_core::ApnnError::UnknownMethod(method.to_string()))?;
            Ok(analog_forward(model, x, electrical, i as u64)?.0.class)
        },
    )?)
}

pub fn run_sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    cfg.validate().context("config")?;
    let parameter = cfg
        .sweep
        .parameter
        .ok_or_else(|| anyhow!("sweep parameter not set"))?;
    let values = if cfg.sweep.values.is_empty() {
        match parameter {
            SweepParameter::Theta => (1..=64).map(|k| k as f64 / 64.0).collect(),
            SweepParameter::VariationSigma => vec![0.0, 0.02, 0.05, 0.1, 0.2],
            SweepParameter::NLevels => vec![4.0, 8.0, 16.0, 256.0],
        }
    } else {
        cfg.sweep.values.clone()
    };
    let data = cfg.load_dataset()?;
    let opts = cfg.cv_options()?;

    match parameter {
        SweepParameter::Theta => {
            ensure!(
                cfg.method.is_threshold_logic(),
                "theta sweep needs a threshold-logic method"
            );
            let split = kfold(&data, cfg.k, cfg.seed)?;
            let normalized = data.normalized()?;
            let quantizer = cfg.method.quantized().then_some(cfg.quantizer);
            let stored: Vec<(Vec<usize>, StoredWeights)> = (0..cfg.k)
                .map(|f| {
                    let train = normalized.subset(&split.train_indices(f));
                    let w =
                        StoredWeights::from_samples(&train, data.n_classes(), quantizer.as_ref())?;
                    Ok((split.test_indices(f).to_vec(), w))
                })
                .collect::<Result<_>>()?;
            values
                .iter()
                .map(|&theta| {
                    let mut accs = Vec::with_capacity(stored.len());
                    for (test, w) in &stored {
                        let model =
                            ApnnModel::new(w.clone(), ThresholdPolicy::Fixed(theta), quantizer)
                                .with_context(|| format!("theta {theta}"))?;
                        let hits = test
                            .iter()
                            .map(|&i| {
                                let s = &normalized.samples()[i];
                                apnn_core::apnn_classify(&model, &s.features)
                                    .map(|p| p.class == s.label)
                            })
                            .collect::<apnn_core::Result<Vec<bool>>>()?;
                        accs.push(hits.iter().filter(|h| **h).count() as f64 / test.len() as f64);
                    }
                    let (mean_accuracy, std_accuracy) = mean_std(&accs);
                    Ok(SweepRow {
                        value: theta,
                        mean_accuracy,
                        std_accuracy,
                    })
                })
                .collect()
        }
        SweepParameter::NLevels => values
            .iter()
            .map(|&v| {
                ensure!(
                    v >= 2.0 && v.fract() == 0.0,
                    "n_levels must be an integer >= 2, got {v}"
                );
                let mut opts = opts.clone();
                opts.quantizer.n_levels = v as usize;
                let r = cross_validate(&data, cfg.method, cfg.k, cfg.seed, &opts)
                    .with_context(|| format!("n_levels {v}"))?;
                Ok(SweepRow {
                    value: v,
                    mean_accuracy: r.mean_accuracy,
                    std_accuracy: r.std_accuracy,
                })
            })
            .collect(),
        SweepParameter::VariationSigma => {
            ensure!(
                cfg.method.is_threshold_logic(),
                "variation sweep needs a threshold-logic method"
            );
            ensure!(cfg.sweep.seeds > 0, "sweep needs at least one seed");
            let split = kfold(&data, cfg.k, cfg.seed)?;
            let (normalized, folds) =
                train_folds(&data, &split, cfg.method, &opts).context("training folds")?;
            values
                .iter()
                .map(|&sigma| {
                    let means = (0..cfg.sweep.seeds as u64)
                        .map(|s| {
                            let electrical = ElectricalConfig {
                                variation_sigma: sigma,
                                seed: cfg.electrical.seed.wrapping_add(s),
                                ..cfg.electrical.clone()
                            };
                            analog_cv(&normalized, &folds, cfg.method, cfg.seed, &electrical)
                                .map(|r| r.mean_accuracy)
                        })
                        .collect::<Result<Vec<f64>>>()
                        .with_context(|| format!("variation_sigma {sigma}"))?;
                    let (mean_accuracy, std_accuracy) = mean_std(&means);
                    Ok(SweepRow {
                        value: sigma,
                        mean_accuracy,
                        std_accuracy,
                    })
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CostOutput {
    #[serde(flatten)]
    pub report: CostReport,
    pub config: RunConfig,
}

pub fn run_cost(cfg: &RunConfig) -> Result<CostOutput> {
    let table = cfg.cost.table()?;
    let report = estimate(cfg.cost.n_classes, &table).context("cost estimate")?;
    Ok(CostOutput {
        report,
        config: cfg.clone(),
    })
}

pub fn render_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

pub fn render_trace(t: &TraceOutput) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    t.trace.write_csv(&mut out)?;
    Ok(out)
}

pub fn render_sweep(rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    writeln!(out, "value,mean_accuracy,std_accuracy")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.value, r.mean_accuracy, r.std_accuracy)?;
    }
    Ok(out)
}

/// Writes to a temporary file beside `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| e.error)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Sends `bytes` to `cfg.out`, or stdout when unset. CSV outputs get a
/// `<out>.config.json` sidecar holding the resolved configuration.
pub fn emit(cfg: &RunConfig, bytes: &[u8], sidecar: bool) -> Result<()> {
    match &cfg.out {
        Some(path) => {
            write_atomic(path, bytes)?;
            if sidecar {
                let mut name = path.as_os_str().to_owned();
                name.push(".config.json");
                write_atomic(Path::new(&name), &render_json(cfg)?)?;
            }
            Ok(())
        }
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}
