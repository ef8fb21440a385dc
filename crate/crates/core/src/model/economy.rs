use super::ModelConstants;
use crate::error::{Error, Result};

/// Damages never remove more than this fraction of output.
pub const MAX_DAMAGE: f64 = 0.99;

/// Economic stocks of one region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionState {
    /// Capital, trillion USD.
    pub capital: f64,
    /// Total factor productivity.
    pub tfp: f64,
    /// Labor, millions.
    pub labor: f64,
    /// GtCO2 per trillion USD of gross output.
    pub carbon_intensity: f64,
    /// Abatement cost at full mitigation, as a fraction of gross output.
    pub abatement_scale: f64,
}

impl RegionState {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("capital", self.capital, self.capital >= 0.0, "[0, inf)"),
            ("tfp", self.tfp, self.tfp > 0.0, "(0, inf)"),
            ("labor", self.labor, self.labor > 0.0, "(0, inf)"),
            ("carbon_intensity", self.carbon_intensity, self.carbon_intensity >= 0.0, "[0, inf)"),
            ("abatement_scale", self.abatement_scale, self.abatement_scale >= 0.0, "[0, inf)"),
        ];
        for (name, value, ok, domain) in checks {
            if !ok || !value.is_finite() {
                return Err(Error::InputDomain { name, value, domain });
            }
        }
        Ok(())
    }
}

/// Flows of one region over one step, expressed as annual rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionFlows {
    pub gross_output: f64,
    pub damage_frac: f64,
    pub abatement_frac: f64,
    pub net_output: f64,
    /// Industrial emissions, GtCO2 per year.
    pub emissions: f64,
    /// Consumption before trade: `(1 - s) * net_output`.
    pub consumption: f64,
    pub abatement_cost: f64,
}

impl RegionFlows {
    /// Output lost to damages: whatever is neither net output nor abatement spending.
    pub fn damage_loss(&self) -> f64 {
        self.gross_output - self.net_output - self.abatement_cost
    }
}

/// Cobb-Douglas output `A * K^gamma * L^(1-gamma)`.
pub fn gross_output(region: &RegionState, constants: &ModelConstants) -> f64 {
    let gamma = constants.capital_elasticity;
    region.tfp * region.capital.powf(gamma) * region.labor.powf(1.0 - gamma)
}

/// Quadratic damages `a * T^2`, clamped to `[0, MAX_DAMAGE]`.
pub fn damage_fraction(t_at: f64, constants: &ModelConstants) -> f64 {
    (constants.damage_coeff * t_at * t_at).clamp(0.0, MAX_DAMAGE)
}

fn check_rate(name: &'static str, mu: f64) -> Result<()> {
    if (0.0..=1.0).contains(&mu) {
        Ok(())
    } else {
        Err(Error::InputDomain { name, value: mu, domain: "[0, 1]" })
    }
}

/// Abatement cost as a fraction of gross output, `theta1 * mu^theta2`.
pub fn abatement_cost_fraction(mu: f64, theta1: f64, theta2: f64) -> Result<f64> {
    check_rate("mitigation_rate", mu)?;
    Ok(theta1 * mu.powf(theta2))
}

/// Industrial emissions `sigma * (1 - mu) * Y`.
pub fn emissions(sigma: f64, mu: f64, gross_output: f64) -> Result<f64> {
    check_rate("mitigation_rate", mu)?;
    if !(sigma >= 0.0) {
        return Err(Error::InputDomain { name: "carbon_intensity", value: sigma, domain: "[0, inf)" });
    }
    if !(gross_output >= 0.0) {
        return Err(Error::InputDomain { name: "gross_output", value: gross_output, domain: "[0, inf)" });
    }
    Ok(sigma * (1.0 - mu) * gross_output)
}

pub fn region_flows(
    region: &RegionState,
    mu: f64,
    t_at: f64,
    constants: &ModelConstants,
) -> Result<RegionFlows> {
    let y = gross_output(region, constants);
    let d = damage_fraction(t_at, constants);
    let lambda = abatement_cost_fraction(mu, region.abatement_scale, constants.abatement_exponent)?;
    let e = emissions(region.carbon_intensity, mu, y)?;
    let net_output = y * (1.0 - d) * (1.0 - lambda);
    Ok(RegionFlows {
        gross_output: y,
        damage_frac: d,
        abatement_frac: lambda,
        net_output,
        emissions: e,
        consumption: (1.0 - constants.savings_rate) * net_output,
        abatement_cost: lambda * y,
    })
}

/// Advance stocks by one step given annual gross investment.
///
/// `K' = K (1-delta)^dt + dt * investment`; productivity, carbon intensity and
/// abatement scale follow exponential trends; labor is held constant.
pub fn advance_exogenous(
    region: &RegionState,
    investment: f64,
    constants: &ModelConstants,
) -> RegionState {
    let dt = constants.dt_years;
    RegionState {
        capital: (region.capital * (1.0 - constants.depreciation).powf(dt) + dt * investment).max(0.0),
        tfp: region.tfp * (constants.tfp_growth * dt).exp(),
        labor: region.labor,
        carbon_intensity: region.carbon_intensity * (-constants.sigma_decline * dt).exp(),
        abatement_scale: region.abatement_scale * (-constants.abatement_scale_decline * dt).exp(),
    }
}
