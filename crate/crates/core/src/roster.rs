//! Synthetic region rosters.
//!
//! Each region gets a development index `u` in `[0, 1)`. Richer regions
//! (larger `u`) produce more, employ fewer people and emit less per unit of
//! output. Totals are scaled to a world economy of roughly present-day size.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{ModelConstants, RegionState};
use crate::rng;

/// World gross output at the start, trillion USD per year.
pub const WORLD_OUTPUT: f64 = 105.0;
/// World labor at the start, millions.
pub const WORLD_LABOR: f64 = 7403.0;
/// Output-weighted mean carbon intensity at the start, GtCO2 per trillion USD.
pub const WORLD_CARBON_INTENSITY: f64 = 0.35;
/// Capital-output ratio at the start.
pub const CAPITAL_OUTPUT_RATIO: f64 = 2.12;

/// Orders of magnitude spanned by output across the development range.
const OUTPUT_SPREAD: f64 = 1.0;
/// Orders of magnitude by which carbon intensity falls across the range.
const INTENSITY_SPREAD: f64 = 1.3;
const LABOR_SPREAD: f64 = 0.5;
/// Width of the multiplicative idiosyncratic noise (log scale).
const NOISE: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RosterSpec {
    pub count: usize,
    pub seed: u64,
    /// Abatement cost at full mitigation for the most carbon-intensive region.
    /// Other regions scale with their carbon intensity.
    pub abatement_scale: f64,
}

impl Default for RosterSpec {
    fn default() -> Self {
        Self { count: 10, seed: 0, abatement_scale: 0.1 }
    }
}

impl RosterSpec {
    pub fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::InvalidConfig(format!("roster.count must be >= 2, got {}", self.count)));
        }
        if !(self.abatement_scale >= 0.0 && self.abatement_scale <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "roster.abatement_scale must lie in [0, 1], got {}",
                self.abatement_scale
            )));
        }
        Ok(())
    }
}

/// Draw a roster. `draw` selects one member of the family keyed by `spec.seed`.
pub fn generate_roster(spec: &RosterSpec, draw: u64, constants: &ModelConstants) -> Vec<RegionState> {
    let n = spec.count;
    let mut rng = rng::stream(spec.seed, &[draw]);
    let mut noise = || (NOISE * (rng.random::<f64>() - 0.5)).exp();
    let mut dev = Vec::with_capacity(n);
    for i in 0..n {
        // One index per stratum keeps the range covered for small rosters.
        let u = (i as f64 + rng::stream(spec.seed, &[draw, i as u64]).random::<f64>()) / n as f64;
        dev.push((u, noise(), noise()));
    }

    let out_w: Vec<f64> = dev.iter().map(|(u, _, _)| 10f64.powf(OUTPUT_SPREAD * u)).collect();
    let out_total: f64 = out_w.iter().sum();
    let output: Vec<f64> = out_w.iter().map(|w| WORLD_OUTPUT * w / out_total).collect();

    let sig_w: Vec<f64> = dev.iter().map(|(u, e, _)| 10f64.powf(-INTENSITY_SPREAD * u) * e).collect();
    let emitted: f64 = sig_w.iter().zip(&output).map(|(s, y)| s * y).sum();
    let sigma: Vec<f64> = sig_w.iter().map(|s| s * WORLD_CARBON_INTENSITY * WORLD_OUTPUT / emitted).collect();
    let sigma_max = sigma.iter().copied().fold(0.0, f64::max);

    let lab_w: Vec<f64> = dev.iter().map(|(u, _, e)| 10f64.powf(-LABOR_SPREAD * u) * e).collect();
    let lab_total: f64 = lab_w.iter().sum();

    let gamma = constants.capital_elasticity;
    (0..n)
        .map(|i| {
            let labor = WORLD_LABOR * lab_w[i] / lab_total;
            let capital = CAPITAL_OUTPUT_RATIO * output[i];
            RegionState {
                capital,
                tfp: output[i] / (capital.powf(gamma) * labor.powf(1.0 - gamma)),
                labor,
                carbon_intensity: sigma[i],
                abatement_scale: spec.abatement_scale * sigma[i] / sigma_max,
            }
        })
        .collect()
}
