use std::path::PathBuf;

use anyhow::Result;
use apnn_core::{Calibration, Method};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands;
use crate::config::{RunConfig, SweepParameter};

#[derive(Debug, Parser)]
#[command(
    name = "apnn",
    version,
    about = "Threshold-logic PNN classifier and memristive crossbar simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// k-fold cross-validation; writes a JSON accuracy report
    Cv(CvArgs),
    /// One inference through the analog chain; writes the trace CSV
    Trace(TraceArgs),
    /// Accuracy versus one parameter; writes a CSV
    Sweep(SweepArgs),
    /// Power and area estimate; writes JSON
    Cost(CostArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Dataset CSV (defaults to the bundled IRIS data)
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML config file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_parser = parse_method)]
    pub method: Option<Method>,
    /// Number of quantizer levels
    #[arg(long)]
    pub levels: Option<usize>,
    /// Threshold grid resolution (candidates k/N, k = 1..=N)
    #[arg(long)]
    pub theta_levels: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CalibrationArg {
    Ideal,
    CircuitAnchored,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Dataset row used as the probe
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long)]
    pub train_per_class: Option<usize>,
    /// Same threshold for every class instead of training one
    #[arg(long)]
    pub theta: Option<f64>,
    /// Synthetic probe, comma separated, instead of a dataset row
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub input: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub calibration: Option<CalibrationArg>,
    #[arg(long)]
    pub variation_sigma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub k: Option<usize>,
    /// theta, variation_sigma or n_levels
    #[arg(long)]
    pub param: Option<SweepParameter>,
    /// Comma-separated values
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    /// Device-variation seeds per value
    #[arg(long)]
    pub seeds: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CostArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub classes: Option<usize>,
    /// Override a table entry, e.g. `ivc.power=0.02` or `wta.area=2.0`
    #[arg(long = "set")]
    pub overrides: Vec<String>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|_| {
        let ids: Vec<&str> = Method::ALL.iter().map(|m| m.id()).collect();
        format!("expected one of {}", ids.join(", "))
    })
}

fn apply_common(cfg: &mut RunConfig, a: &CommonArgs) {
    if let Some(d) = &a.data {
        cfg.data = Some(d.clone());
    }
    if let Some(o) = &a.out {
        cfg.out = Some(o.clone());
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
}

fn apply_model(cfg: &mut RunConfig, a: &ModelArgs) {
    if let Some(m) = a.method {
        cfg.method = m;
    }
    if let Some(l) = a.levels {
        cfg.quantizer.n_levels = l;
    }
    if let Some(t) = a.theta_levels {
        cfg.theta_grid_levels = t;
    }
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Cv(a) => &a.common,
            Command::Trace(a) => &a.common,
            Command::Sweep(a) => &a.common,
            Command::Cost(a) => &a.common,
        }
    }

    /// Layers defaults, the config file and this command's flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let common = self.common();
        let mut cfg = RunConfig::load(common.config.as_deref())?;
        apply_common(&mut cfg, common);
        match self {
            Command::Cv(a) => {
                apply_model(&mut cfg, &a.model);
                if let Some(k) = a.k {
                    cfg.k = k;
                }
            }
            Command::Trace(a) => {
                apply_model(&mut cfg, &a.model);
                let t = &mut cfg.trace;
                if let Some(s) = a.sample {
                    t.sample = s;
                }
                if let Some(n) = a.train_per_class {
                    t.train_per_class = n;
                }
                if a.theta.is_some() {
                    t.theta = a.theta;
                }
                if a.input.is_some() {
                    t.input = a.input.clone();
                }
                if let Some(c) = a.calibration {
                    cfg.electrical.calibration = match c {
                        CalibrationArg::Ideal => Calibration::Ideal,
                        CalibrationArg::CircuitAnchored => Calibration::CircuitAnchored,
                    };
                }
                if let Some(v) = a.variation_sigma {
                    cfg.electrical.variation_sigma = v;
                }
            }
            Command::Sweep(a) => {
                apply_model(&mut cfg, &a.model);
                if let Some(k) = a.k {
                    cfg.k = k;
                }
                if a.param.is_some() {
                    cfg.sweep.parameter = a.param;
                }
                if let Some(v) = &a.values {
                    cfg.sweep.values = v.clone();
                }
                if let Some(s) = a.seeds {
                    cfg.sweep.seeds = s;
                }
            }
            Command::Cost(a) => {
                if let Some(n) = a.classes {
                    cfg.cost.n_classes = n;
                }
                cfg.cost.overrides.extend(a.overrides.iter().cloned());
            }
        }
        Ok(cfg)
    }

    pub fn run(&self) -> Result<()> {
        let cfg = self.resolve()?;
        match self {
            Command::Cv(_) => {
                let out = commands::run_cv(&cfg)?;
                commands::emit(&cfg, &commands::render_json(&out)?, false)
            }
            Command::Trace(_) => {
                let out = commands::run_trace(&cfg)?;
                commands::emit(&cfg, &commands::render_trace(&out)?, true)
            }
            Command::Sweep(_) => {
                let rows = commands::run_sweep(&cfg)?;
                commands::emit(&cfg, &commands::render_sweep(&rows)?, true)
            }
            Command::Cost(_) => {
                let out = commands::run_cost(&cfg)?;
                commands::emit(&cfg, &commands::render_json(&out)?, false)
            }
        }
    }
}
