//! Power and area estimate for an N-class deployment.
//!
//! Every class carries one crossbar, current buffer, IVC and comparator; a
//! single WTA block is shared. Defaults are 180 nm circuit figures for
//! 10 columns per class.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ApnnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Crossbar,
    CurrentBuffer,
    Ivc,
    Comparator,
    Wta,
}

impl Component {
    pub const ALL: [Component; 5] = [
        Component::Crossbar,
        Component::CurrentBuffer,
        Component::Ivc,
        Component::Comparator,
        Component::Wta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Component::Crossbar => "crossbar",
            Component::CurrentBuffer => "current_buffer",
            Component::Ivc => "ivc",
            Component::Comparator => "comparator",
            Component::Wta => "wta",
        }
    }

    pub fn per_class(self) -> bool {
        self != Component::Wta
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Component {
    type Err = ApnnError;

    fn from_str(s: &str) -> Result<Self> {
        Component::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| ApnnError::InvalidCost(format!("unknown component {s:?}")))
    }
}

/// Unit cost of one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentCost {
    pub name: Component,
    /// Watts.
    pub power: f64,
    /// Square micrometres.
    pub area: f64,
    pub per_class: bool,
}

impl ComponentCost {
    pub fn new(name: Component, power: f64, area: f64) -> Self {
        Self {
            name,
            power,
            area,
            per_class: name.per_class(),
        }
    }
}

pub fn default_table() -> Vec<ComponentCost> {
    vec![
        ComponentCost::new(Component::Crossbar, 5e-6, 1.36),
        ComponentCost::new(Component::CurrentBuffer, 149e-6, 280.0),
        ComponentCost::new(Component::Ivc, 41.1e-3, 1638.7),
        ComponentCost::new(Component::Comparator, 17e-9, 0.5183),
        ComponentCost::new(Component::Wta, 47.34e-12, 1.555),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentTotal {
    pub name: Component,
    pub per_class: bool,
    pub instances: usize,
    pub unit_power_w: f64,
    pub unit_area_um2: f64,
    pub power_w: f64,
    pub area_um2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub n_classes: usize,
    pub components: Vec<ComponentTotal>,
    /// Sum of the per-class components, `n_classes ×` one class's units.
    pub per_class_power_w: f64,
    pub per_class_area_um2: f64,
    pub total_power_w: f64,
    pub total_power_mw: f64,
    pub total_area_um2: f64,
}

impl CostReport {
    pub fn component(&self, name: Component) -> &ComponentTotal {
        self.components
            .iter()
            .find(|c| c.name == name)
            .expect("report lists every component")
    }
}

/// Totals are `n_classes × Σ per-class units + WTA`, for power and area alike,
/// so the per-class subtotal is exactly linear in `n_classes`.
pub fn estimate(n_classes: usize, table: &[ComponentCost]) -> Result<CostReport> {
    let mut rows: Vec<&ComponentCost> = Vec::with_capacity(Component::ALL.len());
    for name in Component::ALL {
        let mut found = table.iter().filter(|c| c.name == name);
        let entry = found
            .next()
            .ok_or_else(|| ApnnError::MissingComponent(name.to_string()))?;
        if found.next().is_some() {
            return Err(ApnnError::DuplicateComponent(name.to_string()));
        }
        if !(entry.power >= 0.0 && entry.power.is_finite())
            || !(entry.area >= 0.0 && entry.area.is_finite())
        {
            return Err(ApnnError::InvalidCost(format!(
                "{name}: power and area must be finite and non-negative"
            )));
        }
        rows.push(entry);
    }

    let components: Vec<ComponentTotal> = rows
        .iter()
        .map(|c| {
            let instances = if c.per_class { n_classes } else { 1 };
            ComponentTotal {
                name: c.name,
                per_class: c.per_class,
                instances,
                unit_power_w: c.power,
                unit_area_um2: c.area,
                power_w: c.power * instances as f64,
                area_um2: c.area * instances as f64,
            }
        })
        .collect();
    let n = n_classes as f64;
    let unit_power: f64 = rows.iter().filter(|c| c.per_class).map(|c| c.power).sum();
    let unit_area: f64 = rows.iter().filter(|c| c.per_class).map(|c| c.area).sum();
    let shared = |f: fn(&ComponentCost) -> f64| -> f64 {
        rows.iter().filter(|c| !c.per_class).map(|c| f(c)).sum()
    };
    let per_class_power_w = n * unit_power;
    let per_class_area_um2 = n * unit_area;
    let total_power_w = per_class_power_w + shared(|c| c.power);
    let total_area_um2 = per_class_area_um2 + shared(|c| c.area);
    Ok(CostReport {
        n_classes,
        components,
        per_class_power_w,
        per_class_area_um2,
        total_power_w,
        total_power_mw: total_power_w * 1e3,
        total_area_um2,
    })
}

/// Applies `component.power=VALUE` or `component.area=VALUE` to `table`.
pub fn apply_override(table: &mut [ComponentCost], entry: &str) -> Result<()> {
    let malformed = || {
        ApnnError::InvalidCost(format!(
            "malformed override {entry:?}, expected component.power=VALUE"
        ))
    };
    let (key, value) = entry.split_once('=').ok_or_else(malformed)?;
    let (name, field) = key.trim().split_once('.').ok_or_else(malformed)?;
    let name: Component = name.parse()?;
    let value: f64 = value.trim().parse().map_err(|_| malformed())?;
    if !(value >= 0.0 && value.is_finite()) {
        return Err(malformed());
    }
    let entry = table
        .iter_mut()
        .find(|c| c.name == name)
        .ok_or_else(|| ApnnError::MissingComponent(name.to_string()))?;
    match field {
        "power" => entry.power = value,
        "area" => entry.area = value,
        _ => return Err(malformed()),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_class_totals() {
        let r = estimate(3, &default_table()).unwrap();
        assert!((r.total_power_mw - 123.76).abs() < 0.01);
        assert!((r.total_area_um2 - 5761.2).abs() / 5761.2 < 1e-3);
    }

    #[test]
    fn empty_deployment_is_wta_only() {
        let r = estimate(0, &default_table()).unwrap();
        assert_eq!(r.total_power_w, 47.34e-12);
        assert_eq!(r.total_area_um2, 1.555);
    }

    #[test]
    fn single_class_hand_sum() {
        // 5e-6 + 149e-6 + 41.1e-3 + 17e-9 + 47.34e-12 W
        // 1.36 + 280 + 1638.7 + 0.5183 + 1.555 um^2
        let r = estimate(1, &default_table()).unwrap();
        assert!((r.total_power_w - 0.041_254_017_047_34).abs() < 1e-15);
        assert!((r.total_area_um2 - 1922.1333).abs() < 1e-9);
    }

    #[test]
    fn per_class_subtotal_is_linear() {
        let one = estimate(1, &default_table()).unwrap();
        for n in [0, 1, 3, 6] {
            let r = estimate(n, &default_table()).unwrap();
            assert_eq!(r.per_class_power_w, n as f64 * one.per_class_power_w);
            assert_eq!(r.per_class_area_um2, n as f64 * one.per_class_area_um2);
            assert_eq!(r.component(Component::Wta).power_w, 47.34e-12);
        }
    }

    #[test]
    fn table_must_be_complete_and_unique() {
        let mut t = default_table();
        t.pop();
        assert!(matches!(estimate(3, &t), Err(ApnnError::MissingComponent(n)) if n == "wta"));
        let mut t = default_table();
        t.push(ComponentCost::new(Component::Ivc, 1.0, 1.0));
        assert!(matches!(estimate(3, &t), Err(ApnnError::DuplicateComponent(n)) if n == "ivc"));
    }

    #[test]
    fn overrides() {
        let mut t = default_table();
        apply_override(&mut t, "ivc.power=1e-3").unwrap();
        apply_override(&mut t, "wta.area = 2").unwrap();
        let r = estimate(1, &t).unwrap();
        assert_eq!(r.component(Component::Ivc).power_w, 1e-3);
        assert_eq!(r.component(Component::Wta).area_um2, 2.0);
        for bad in [
            "ivc",
            "ivc.power",
            "ivc.speed=1",
            "opamp.power=1",
            "ivc.power=abc",
            "ivc.area=-1",
        ] {
            assert!(apply_override(&mut t, bad).is_err(), "{bad}");
        }
    }
}
