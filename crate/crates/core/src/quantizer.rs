//! Uniform multi-level weight quantizer modelling the stable conductance
//! states of a GST memristor (16 by default).

use serde::{Deserialize, Serialize};

use crate::error::{ApnnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuantizerSpec {
    pub n_levels: usize,
    pub range_lo: f64,
    pub range_hi: f64,
}

impl Default for QuantizerSpec {
    fn default() -> Self {
        Self {
            n_levels: 16,
            range_lo: 0.0,
            range_hi: 1.0,
        }
    }
}

impl QuantizerSpec {
    pub fn new(n_levels: usize, range_lo: f64, range_hi: f64) -> Result<Self> {
        let q = Self {
            n_levels,
            range_lo,
            range_hi,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn with_levels(n_levels: usize) -> Result<Self> {
        Self::new(n_levels, 0.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_levels < 2 {
            return Err(ApnnError::InvalidQuantizer(format!(
                "need at least 2 levels, got {}",
                self.n_levels
            )));
        }
        if !(self.range_lo.is_finite() && self.range_hi.is_finite())
            || self.range_lo >= self.range_hi
        {
            return Err(ApnnError::InvalidQuantizer(format!(
                "range [{}, {}] is empty",
                self.range_lo, self.range_hi
            )));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.range_hi - self.range_lo) / (self.n_levels - 1) as f64
    }

    /// Value of level `k`. Every quantized output is produced by this exact
    /// expression, which keeps `quantize` idempotent bit for bit.
    pub fn level(&self, k: usize) -> f64 {
        if k + 1 == self.n_levels {
            return self.range_hi;
        }
        self.range_lo + k as f64 * (self.range_hi - self.range_lo) / (self.n_levels - 1) as f64
    }

    pub fn levels(&self) -> Vec<f64> {
        (0..self.n_levels).map(|k| self.level(k)).collect()
    }

    /// Nearest level to `w`. Inputs outside the range clamp to the boundary
    /// level; exact midpoints go to the higher level.
    pub fn quantize(&self, w: f64) -> Result<f64> {
        if !w.is_finite() {
            return Err(ApnnError::NonFinite(w));
        }
        if w <= self.range_lo {
            return Ok(self.level(0));
        }
        if w >= self.range_hi {
            return Ok(self.level(self.n_levels - 1));
        }
        let top = self.n_levels - 1;
        let t = (w - self.range_lo) / (self.range_hi - self.range_lo) * top as f64;
        let below = (t.floor() as usize).min(top - 1);
        // t is only an estimate; the decision uses the distances to the two
        // bracketing levels as actually represented.
        let (mut lo, mut hi) = (below, below + 1);
        if w < self.level(lo) && lo > 0 {
            lo -= 1;
            hi -= 1;
        } else if w > self.level(hi) && hi < top {
            lo += 1;
            hi += 1;
        }
        let d_lo = w - self.level(lo);
        let d_hi = self.level(hi) - w;
        Ok(if d_hi <= d_lo {
            self.level(hi)
        } else {
            self.level(lo)
        })
    }

    /// Elementwise [`quantize`](Self::quantize); rows are preserved as given.
    pub fn quantize_matrix(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter()
            .map(|r| r.iter().map(|&w| self.quantize(w)).collect())
            .collect()
    }

    pub fn is_level(&self, w: f64) -> bool {
        self.quantize(w).map(|q| q == w).unwrap_or(false)
    }
}
