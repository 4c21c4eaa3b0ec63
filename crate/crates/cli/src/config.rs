//! Run configuration. Built-in defaults are overlaid by an optional TOML file,
//! which is in turn overlaid by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use apnn_core::cost::{apply_override, default_table, ComponentCost};
use apnn_core::pnn::DEFAULT_SIGMA_GRID;
use apnn_core::{CvOptions, Dataset, ElectricalConfig, Method, QuantizerSpec, ThresholdGrid};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Theta,
    VariationSigma,
    NLevels,
}

impl std::str::FromStr for SweepParameter {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "theta" => Ok(Self::Theta),
            "variation_sigma" | "variation-sigma" => Ok(Self::VariationSigma),
            "n_levels" | "n-levels" => Ok(Self::NLevels),
            _ => Err(format!(
                "unknown sweep parameter {s:?} (expected theta, variation_sigma or n_levels)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub parameter: Option<SweepParameter>,
    pub values: Vec<f64>,
    /// Device-variation seeds per value (variation_sigma sweeps only).
    pub seeds: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            parameter: None,
            values: Vec::new(),
            seeds: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TraceConfig {
    /// Dataset row used as the probe.
    pub sample: usize,
    pub train_per_class: usize,
    /// Fixed threshold for every class; trained on the trace subset when unset.
    pub theta: Option<f64>,
    /// Synthetic probe replacing `sample`.
    pub input: Option<Vec<f64>>,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            sample: 0,
            train_per_class: 10,
            theta: None,
            input: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostConfig {
    pub n_classes: usize,
    /// `component.power=W` / `component.area=um2` entries.
    pub overrides: Vec<String>,
}

impl Default for CostConfig {
    fn default() -> Self {
        Self {
            n_classes: 3,
            overrides: Vec::new(),
        }
    }
}

impl CostConfig {
    pub fn table(&self) -> Result<Vec<ComponentCost>> {
        let mut table = default_table();
        for o in &self.overrides {
            apply_override(&mut table, o).context("cost override")?;
        }
        Ok(table)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Dataset CSV; the bundled IRIS file when unset.
    pub data: Option<PathBuf>,
    pub method: Method,
    pub k: usize,
    pub seed: u64,
    pub quantizer: QuantizerSpec,
    pub sigma_grid: Vec<f64>,
    /// Threshold candidates are `k / theta_grid_levels`, k = 1..=levels.
    pub theta_grid_levels: usize,
    pub electrical: ElectricalConfig,
    pub sweep: SweepConfig,
    pub trace: TraceConfig,
    pub cost: CostConfig,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: None,
            method: Method::ApnnAdaptiveQuantized,
            k: 5,
            seed: 42,
            quantizer: QuantizerSpec::default(),
            sigma_grid: DEFAULT_SIGMA_GRID.to_vec(),
            theta_grid_levels: ThresholdGrid::DEFAULT_LEVELS,
            electrical: ElectricalConfig::default(),
            sweep: SweepConfig::default(),
            trace: TraceConfig::default(),
            cost: CostConfig::default(),
            out: None,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Defaults, or the file at `path` when given.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::from_file(p),
            None => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            bail!("k must be at least 2, got {}", self.k);
        }
        self.quantizer.validate()?;
        self.electrical.validate()?;
        if self.theta_grid_levels == 0 {
            bail!("theta_grid_levels must be positive");
        }
        if self.sigma_grid.is_empty() || self.sigma_grid.iter().any(|s| s.is_nan() || *s <= 0.0) {
            bail!("sigma_grid must be a non-empty list of positive values");
        }
        Ok(())
    }

    pub fn cv_options(&self) -> Result<CvOptions> {
        Ok(CvOptions {
            quantizer: self.quantizer,
            sigma_grid: self.sigma_grid.clone(),
            theta_grid: ThresholdGrid::uniform(self.theta_grid_levels)?,
        })
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        match &self.data {
            Some(p) => {
                apnn_core::load_csv(p).with_context(|| format!("loading dataset {}", p.display()))
            }
            None => Ok(apnn_core::iris()),
        }
    }
}
