//! Threshold-logic approximation of a probabilistic neural network (APNN),
//! plus a behavioral model of the memristive crossbar that evaluates it.
//!
//! - [`data`]: CSV ingestion, unit normalization, stratified k-fold splits
//! - [`quantizer`]: multi-level weight quantization (16 GST levels by default)
//! - [`pnn`]: exponential-kernel PNN reference classifier
//! - [`apnn`]: threshold-logic classifier with fixed or per-class thresholds
//! - [`crossbar`]: analog read-out chain, device variation and trace capture
//! - [`cost`]: power/area estimate for an N-class deployment
//! - [`cv`]: cross-validation over the five classifier variants

pub mod apnn;
pub mod cost;
pub mod crossbar;
pub mod cv;
pub mod data;
pub mod error;
pub mod pnn;
pub mod quantizer;
pub mod weights;

pub use apnn::{
    activation, apnn_classify, class_score, train_adaptive_thresholds, train_fixed_threshold, wta,
    ApnnModel, LooEvaluator, Prediction, ThresholdFit, ThresholdGrid, ThresholdPolicy,
};
pub use crossbar::{analog_forward, AnalogTrace, Calibration, ElectricalConfig};
pub use cv::{cross_validate, CvOptions, CvReport, Method, TrainedModel};
pub use data::{kfold, load_csv, unit_normalize, Dataset, FoldSplit, Sample};
pub use error::{ApnnError, Result};
pub use pnn::{pattern_output, pnn_classify, select_sigma, PnnModel};
pub use quantizer::QuantizerSpec;

/// The IRIS dataset as shipped with this crate (150 rows, header line).
pub const IRIS_CSV: &str = include_str!("../data/iris.csv");

pub fn iris() -> Dataset {
    data::parse_csv(IRIS_CSV.as_bytes()).expect("bundled IRIS parses")
}
