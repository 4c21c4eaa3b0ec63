//! Behavioral model of the analog read-out chain.
//!
//! Each class owns one memristive crossbar: rows are features, columns are
//! stored training samples. Columns are selected one at a time, the column
//! current passes through an ideal inverting current buffer into a
//! transimpedance stage (IVC), the IVC voltage is compared against the class
//! threshold, comparator outputs are stored and averaged, and a Vref-gated
//! winner-takes-all stage raises one 1 V output line.
//!
//! Select transistors, buffer, storage and averaging are lossless and
//! instantaneous. Device variation is a seeded multiplicative Gaussian on
//! every conductance.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::apnn::{wta, ApnnModel, Prediction};
use crate::error::{ApnnError, Result};

/// Trip offset anchored on a measured calibration point: a real
/// probability level of 0.4 V needs Vth = 0.1 V.
pub const ANCHOR_OFFSET_V: f64 = 0.3;

/// Output level of a high WTA line and of a firing comparator.
pub const LOGIC_HIGH_V: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Calibration {
    /// Window comparator at `(1 ∓ θ)` full-scale volts; reproduces the
    /// digital threshold test exactly.
    #[default]
    Ideal,
    /// Single comparator programmed with the circuit-anchored Vth.
    CircuitAnchored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ElectricalConfig {
    /// IVC feedback resistance, ohms.
    pub r_ivc: f64,
    /// Conductance of a unit weight, siemens.
    pub g_unit: f64,
    /// Input volts per unit feature.
    pub v_scale: f64,
    pub vref_wta: f64,
    pub calibration: Calibration,
    /// Relative conductance standard deviation.
    pub variation_sigma: f64,
    pub seed: u64,
}

impl Default for ElectricalConfig {
    fn default() -> Self {
        let r_ivc = 200_000.0;
        Self {
            r_ivc,
            g_unit: 1.0 / r_ivc,
            v_scale: 1.0,
            vref_wta: 0.3,
            calibration: Calibration::Ideal,
            variation_sigma: 0.0,
            seed: 0,
        }
    }
}

impl ElectricalConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("r_ivc", self.r_ivc),
            ("g_unit", self.g_unit),
            ("v_scale", self.v_scale),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ApnnError::InvalidElectrical(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.variation_sigma >= 0.0 && self.variation_sigma.is_finite()) {
            return Err(ApnnError::InvalidElectrical(format!(
                "variation_sigma must be non-negative, got {}",
                self.variation_sigma
            )));
        }
        if !self.vref_wta.is_finite() {
            return Err(ApnnError::InvalidElectrical(
                "vref_wta must be finite".into(),
            ));
        }
        Ok(())
    }

    /// IVC volts produced by a unit dot product.
    pub fn full_scale_volts(&self) -> f64 {
        self.v_scale * self.g_unit * self.r_ivc
    }
}

pub fn weight_to_conductance(q: f64, cfg: &ElectricalConfig) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(ApnnError::WeightOutOfRange(q));
    }
    Ok(q * cfg.g_unit)
}

/// Read current of the selected column: `Σ_r (x_r · v_scale) · G_r`.
pub fn column_current(x: &[f64], conductances: &[f64], cfg: &ElectricalConfig) -> Result<f64> {
    if x.len() != conductances.len() {
        return Err(ApnnError::LengthMismatch {
            expected: conductances.len(),
            found: x.len(),
        });
    }
    Ok(x.iter()
        .zip(conductances)
        .map(|(xr, g)| xr * cfg.v_scale * g)
        .sum())
}

/// IVC output after the buffer's sign inversion.
pub fn ivc_voltage(current: f64, cfg: &ElectricalConfig) -> f64 {
    current * cfg.r_ivc
}

/// Comparator threshold for class tolerance θ. Ideal calibration returns the
/// lower firing boundary; circuit-anchored subtracts the fitted 0.3 V offset.
pub fn map_theta_to_vth(theta: f64, cfg: &ElectricalConfig) -> Result<f64> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(ApnnError::InvalidTheta(theta));
    }
    let real_level = (1.0 - theta) * cfg.full_scale_volts();
    Ok(match cfg.calibration {
        Calibration::Ideal => real_level,
        Calibration::CircuitAnchored => (real_level - ANCHOR_OFFSET_V).max(0.0),
    })
}

/// Strict `v > vth`.
pub fn comparator(v: f64, vth: f64) -> bool {
    v > vth
}

/// Comparator decision for one IVC voltage under the configured calibration.
fn threshold_stage(v: f64, theta: f64, cfg: &ElectricalConfig) -> Result<bool> {
    let lower = map_theta_to_vth(theta, cfg)?;
    Ok(match cfg.calibration {
        Calibration::Ideal => {
            let upper = (1.0 + theta) * cfg.full_scale_volts();
            comparator(v, lower) && comparator(upper, v)
        }
        Calibration::CircuitAnchored => comparator(v, lower),
    })
}

/// Conductances of every stored column, per class.
pub type ConductanceMap = Vec<Vec<Vec<f64>>>;

pub fn model_conductances(m: &ApnnModel, cfg: &ElectricalConfig) -> Result<ConductanceMap> {
    m.weights
        .classes
        .iter()
        .map(|cw| {
            cw.columns
                .iter()
                .map(|col| {
                    col.iter()
                        .map(|&q| weight_to_conductance(q, cfg))
                        .collect::<Result<Vec<_>>>()
                })
                .collect()
        })
        .collect()
}

/// Multiplies each conductance by `1 + ε`, `ε ~ N(0, variation_sigma)`, and
/// clamps to `[0, g_unit]`. The generator is ChaCha8 seeded with `cfg.seed`
/// on stream `stream`, so each inference can draw independently and
/// reproducibly.
pub fn inject_variation(
    conductances: &ConductanceMap,
    cfg: &ElectricalConfig,
    stream: u64,
) -> Result<ConductanceMap> {
    if cfg.variation_sigma == 0.0 {
        return Ok(conductances.clone());
    }
    let normal = Normal::new(0.0, cfg.variation_sigma)
        .map_err(|e| ApnnError::InvalidElectrical(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    Ok(conductances
        .iter()
        .map(|class| {
            class
                .iter()
                .map(|col| {
                    col.iter()
                        .map(|&g| {
                            let eps: f64 = normal.sample(&mut rng);
                            (g * (1.0 + eps)).clamp(0.0, cfg.g_unit)
                        })
                        .collect()
                })
                .collect()
        })
        .collect())
}

/// 1 V on the winning class when its mean voltage reaches Vref, 0 V
/// elsewhere.
pub fn wta_analog(mean_voltages: &[f64], cfg: &ElectricalConfig) -> Result<Vec<f64>> {
    let winner = wta(mean_voltages)?;
    Ok(mean_voltages
        .iter()
        .enumerate()
        .map(|(c, &v)| {
            if c == winner && v >= cfg.vref_wta {
                LOGIC_HIGH_V
            } else {
                0.0
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnRecord {
    /// Read-order time step.
    pub step: usize,
    pub class: usize,
    pub column: usize,
    pub current_a: f64,
    pub v_ivc: f64,
    pub comp_bit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub class: usize,
    pub vth: f64,
    pub mean_v: f64,
    pub wta_v: f64,
}

/// Everything one inference drove through the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalogTrace {
    pub columns: Vec<ColumnRecord>,
    pub classes: Vec<ClassSummary>,
}

impl AnalogTrace {
    pub fn firing_pattern(&self) -> Vec<Vec<bool>> {
        let mut out = vec![Vec::new(); self.classes.len()];
        for r in &self.columns {
            out[r.class].push(r.comp_bit);
        }
        out
    }

    pub fn wta_outputs(&self) -> Vec<f64> {
        self.classes.iter().map(|c| c.wta_v).collect()
    }

    /// Column records, then a `class,mean_v_V,wta_V` section. Floats use
    /// scientific notation with 9 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,class,column,current_A,v_ivc_V,comp_bit")?;
        for r in &self.columns {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.step,
                r.class,
                r.column,
                sci(r.current_a),
                sci(r.v_ivc),
                u8::from(r.comp_bit)
            )?;
        }
        writeln!(w, "class,mean_v_V,wta_V")?;
        for c in &self.classes {
            writeln!(w, "{},{},{}", c.class, sci(c.mean_v), sci(c.wta_v))?;
        }
        Ok(())
    }
}

/// Scientific notation, 9 significant digits, `.` decimal separator.
pub fn sci(v: f64) -> String {
    format!("{v:.8e}")
}

/// Runs one input through every class crossbar in read order.
///
/// `stream` selects the variation generator stream; pass the sample index so
/// parallel evaluation stays deterministic. The returned prediction picks the
/// class by the averaged comparator voltages and is `activated` only when a
/// WTA line is high.
pub fn analog_forward(
    m: &ApnnModel,
    x: &[f64],
    cfg: &ElectricalConfig,
    stream: u64,
) -> Result<(Prediction, AnalogTrace)> {
    cfg.validate()?;
    if x.len() != m.n_features() {
        return Err(ApnnError::LengthMismatch {
            expected: m.n_features(),
            found: x.len(),
        });
    }
    let nominal = model_conductances(m, cfg)?;
    let conductances = inject_variation(&nominal, cfg, stream)?;

    let mut columns = Vec::new();
    let mut classes = Vec::with_capacity(conductances.len());
    let mut means = Vec::with_capacity(conductances.len());
    let mut step = 0;
    for (class, crossbar) in conductances.iter().enumerate() {
        let theta = m.theta_for(class);
        let mut high = 0usize;
        for (column, g) in crossbar.iter().enumerate() {
            let current = column_current(x, g, cfg)?;
            let v_ivc = ivc_voltage(current, cfg);
            let comp_bit = threshold_stage(v_ivc, theta, cfg)?;
            high += usize::from(comp_bit);
            columns.push(ColumnRecord {
                step,
                class,
                column,
                current_a: current,
                v_ivc,
                comp_bit,
            });
            step += 1;
        }
        let mean_v = high as f64 / crossbar.len() as f64 * LOGIC_HIGH_V;
        means.push(mean_v);
        classes.push(ClassSummary {
            class,
            vth: map_theta_to_vth(theta, cfg)?,
            mean_v,
            wta_v: 0.0,
        });
    }
    let outputs = wta_analog(&means, cfg)?;
    for (summary, v) in classes.iter_mut().zip(&outputs) {
        summary.wta_v = *v;
    }
    let mut prediction = Prediction::from_scores(means)?;
    prediction.activated = outputs.iter().any(|&v| v > 0.0);
    Ok((prediction, AnalogTrace { columns, classes }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apnn::{apnn_classify, ThresholdPolicy};
    use crate::data::{unit_normalize, Sample};
    use crate::weights::StoredWeights;
    use proptest::prelude::*;

    fn unit(v: &[f64]) -> Vec<f64> {
        unit_normalize(&Sample::new(v.to_vec(), 0), 0)
            .unwrap()
            .features
    }

    #[test]
    fn conductance_mapping() {
        let cfg = ElectricalConfig::default();
        assert_eq!(weight_to_conductance(0.0, &cfg).unwrap(), 0.0);
        assert!((weight_to_conductance(1.0, &cfg).unwrap() - 1.0 / 200_000.0).abs() < 1e-20);
        assert!(
            (weight_to_conductance(8.0 / 15.0, &cfg).unwrap() - 2.666_666_666_666_67e-6).abs()
                < 1e-18
        );
        assert!(weight_to_conductance(1.01, &cfg).is_err());
        assert!(weight_to_conductance(-0.1, &cfg).is_err());
    }

    #[test]
    fn current_and_ivc() {
        let cfg = ElectricalConfig::default();
        assert_eq!(column_current(&[0.0; 3], &[1e-6; 3], &cfg).unwrap(), 0.0);
        let i = column_current(&[1.0, 0.0], &[5e-6, 0.0], &cfg).unwrap();
        assert!((i - 5e-6).abs() < 1e-20);
        assert!(column_current(&[1.0], &[1e-6, 1e-6], &cfg).is_err());

        assert_eq!(ivc_voltage(0.0, &cfg), 0.0);
        assert!((ivc_voltage(5e-6, &cfg) - 1.0).abs() < 1e-12);
        assert!((ivc_voltage(1e-6, &cfg) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn vth_mapping() {
        let ideal = ElectricalConfig::default();
        let anchored = ElectricalConfig {
            calibration: Calibration::CircuitAnchored,
            ..ElectricalConfig::default()
        };
        assert!((map_theta_to_vth(0.6, &ideal).unwrap() - 0.4).abs() < 1e-12);
        assert!((map_theta_to_vth(0.6, &anchored).unwrap() - 0.1).abs() < 1e-12);
        assert!((map_theta_to_vth(0.5, &anchored).unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(map_theta_to_vth(0.9, &anchored).unwrap(), 0.0);
        assert!(map_theta_to_vth(0.0, &ideal).is_err());
        assert!(map_theta_to_vth(1.2, &ideal).is_err());
    }

    #[test]
    fn comparator_is_strict() {
        assert!(comparator(0.5, 0.4));
        assert!(!comparator(0.4, 0.4));
        assert!(!comparator(0.0, 0.0));
    }

    #[test]
    fn wta_analog_examples() {
        let cfg = ElectricalConfig::default();
        assert_eq!(
            wta_analog(&[0.9, 0.1, 0.2], &cfg).unwrap(),
            vec![1.0, 0.0, 0.0]
        );
        assert_eq!(
            wta_analog(&[0.2, 0.25, 0.1], &cfg).unwrap(),
            vec![0.0, 0.0, 0.0]
        );
        assert_eq!(
            wta_analog(&[0.5, 0.5, 0.4], &cfg).unwrap(),
            vec![1.0, 0.0, 0.0]
        );
        assert!(wta_analog(&[], &cfg).is_err());
    }

    #[test]
    fn variation_noop_and_determinism() {
        let map: ConductanceMap = vec![vec![vec![2e-6; 4]; 10]; 3];
        let cfg = ElectricalConfig::default();
        assert_eq!(inject_variation(&map, &cfg, 7).unwrap(), map);

        let noisy = ElectricalConfig {
            variation_sigma: 0.1,
            seed: 9,
            ..ElectricalConfig::default()
        };
        let a = inject_variation(&map, &noisy, 7).unwrap();
        assert_eq!(a, inject_variation(&map, &noisy, 7).unwrap());
        assert_ne!(a, inject_variation(&map, &noisy, 8).unwrap());
        assert_ne!(a, map);
        assert!(a
            .iter()
            .flatten()
            .flatten()
            .all(|&g| (0.0..=noisy.g_unit).contains(&g)));
    }

    #[test]
    fn variation_spread_matches_sigma() {
        let cfg = ElectricalConfig {
            variation_sigma: 0.05,
            seed: 3,
            ..ElectricalConfig::default()
        };
        // half-scale conductance so the clamp at g_unit is 10 sigma away
        let g0 = 0.5 * cfg.g_unit;
        let map: ConductanceMap = vec![vec![vec![g0; 10_000]]];
        let out = inject_variation(&map, &cfg, 0).unwrap();
        let eps: Vec<f64> = out[0][0].iter().map(|g| g / g0 - 1.0).collect();
        let n = eps.len() as f64;
        let mean = eps.iter().sum::<f64>() / n;
        let sd = (eps.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((sd - 0.05).abs() < 0.05 * 0.05, "sd = {sd}");
        assert!(mean.abs() < 0.002, "mean = {mean}");
    }

    fn toy_model(theta: f64) -> (ApnnModel, Vec<Sample>) {
        let samples: Vec<Sample> = (0..3)
            .flat_map(|c| {
                (0..10).map(move |j| {
                    let mut f = vec![0.2, 0.2, 0.2, 0.2];
                    f[c] = 1.0 + 0.03 * j as f64;
                    Sample::new(unit(&f), c)
                })
            })
            .collect();
        let w = StoredWeights::from_samples(&samples, 3, None).unwrap();
        (
            ApnnModel::new(w, ThresholdPolicy::Fixed(theta), None).unwrap(),
            samples,
        )
    }

    #[test]
    fn forward_trace_shape() {
        let (m, samples) = toy_model(0.01);
        let probe = &samples[24].features;
        let (p, trace) = analog_forward(&m, probe, &ElectricalConfig::default(), 0).unwrap();
        assert_eq!(trace.columns.len(), 30);
        assert_eq!(trace.classes.len(), 3);
        assert!(trace.columns.iter().enumerate().all(|(i, r)| r.step == i));
        assert!(trace
            .columns
            .iter()
            .all(|r| (r.v_ivc - r.current_a * 200_000.0).abs() <= 1e-15));

        let class2: Vec<&ColumnRecord> = trace.columns.iter().filter(|r| r.class == 2).collect();
        let own = class2[4].current_a;
        assert!(class2
            .iter()
            .enumerate()
            .all(|(j, r)| j == 4 || r.current_a < own));

        assert_eq!(p.class, 2);
        assert_eq!(trace.wta_outputs(), vec![0.0, 0.0, 1.0]);
        assert_eq!(trace.firing_pattern(), m.firing_pattern(probe).unwrap());
        assert_eq!(p.class, apnn_classify(&m, probe).unwrap().class);
    }

    #[test]
    fn orthogonal_probe_leaves_wta_low() {
        let (m, _) = toy_model(0.05);
        let (p, trace) =
            analog_forward(&m, &[0.0, 0.0, 0.0, 0.0], &ElectricalConfig::default(), 0).unwrap();
        assert_eq!(trace.wta_outputs(), vec![0.0; 3]);
        assert!(!p.activated);
    }

    #[test]
    fn anchored_mode_fires_more_liberally() {
        let (m, samples) = toy_model(0.05);
        let cfg = ElectricalConfig {
            calibration: Calibration::CircuitAnchored,
            ..ElectricalConfig::default()
        };
        let (_, trace) = analog_forward(&m, &samples[0].features, &cfg, 0).unwrap();
        let ideal = m.firing_pattern(&samples[0].features).unwrap();
        let ideal_count: usize = ideal.iter().flatten().filter(|b| **b).count();
        let anchored_count = trace.columns.iter().filter(|r| r.comp_bit).count();
        assert!(anchored_count >= ideal_count);
        assert!((trace.classes[0].vth - (0.95 - 0.3)).abs() < 1e-12);
    }

    #[test]
    fn csv_schema() {
        let (m, samples) = toy_model(0.01);
        let (_, trace) =
            analog_forward(&m, &samples[3].features, &ElectricalConfig::default(), 0).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "step,class,column,current_A,v_ivc_V,comp_bit");
        assert_eq!(lines[31], "class,mean_v_V,wta_V");
        assert_eq!(lines.len(), 35);
        let fields: Vec<&str> = lines[32].split(',').collect();
        assert_eq!(fields[0], "0");
        assert_eq!(fields.len(), 3);
        assert!(fields[1].contains('e') && fields[2].contains('e'));
        assert_eq!(sci(5e-6), "5.00000000e-6");
    }

    proptest! {
        #[test]
        fn current_is_linear(
            x in prop::collection::vec(0.0f64..1.0, 4),
            y in prop::collection::vec(0.0f64..1.0, 4),
            g in prop::collection::vec(0.0f64..5e-6, 4),
            h in prop::collection::vec(0.0f64..5e-6, 4),
            a in 0.0f64..3.0,
        ) {
            let cfg = ElectricalConfig::default();
            let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p + q).collect();
            let gh: Vec<f64> = g.iter().zip(&h).map(|(p, q)| p + q).collect();
            let ax: Vec<f64> = x.iter().map(|v| a * v).collect();
            let i = |x: &[f64], g: &[f64]| column_current(x, g, &cfg).unwrap();
            // currents are ~1e-5 A; compare in volts-equivalent units
            let scale = cfg.r_ivc;
            prop_assert!(((i(&xy, &g) - i(&x, &g) - i(&y, &g)) * scale).abs() < 1e-12);
            prop_assert!(((i(&x, &gh) - i(&x, &g) - i(&x, &h)) * scale).abs() < 1e-12);
            prop_assert!(((i(&ax, &g) - a * i(&x, &g)) * scale).abs() < 1e-12);
        }
    }
}
