use crate::error::{Error, Result};

/// Calibration of the climate-economy core. Rates are per year unless noted.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConstants {
    pub dt_years: f64,
    pub horizon_steps: usize,
    /// Capital elasticity of output.
    pub capital_elasticity: f64,
    pub depreciation: f64,
    pub savings_rate: f64,
    /// Quadratic damage coefficient, fraction of output per degC squared.
    pub damage_coeff: f64,
    pub abatement_exponent: f64,
    pub abatement_scale_decline: f64,
    pub sigma_decline: f64,
    pub tfp_growth: f64,
    /// Forcing from a doubling of atmospheric carbon, W/m2.
    pub forcing_per_doubling: f64,
    /// Equilibrium climate sensitivity, degC.
    pub climate_sensitivity: f64,
    pub c1: f64,
    pub c3: f64,
    pub c4: f64,
    /// Preindustrial atmospheric carbon, GtC.
    pub preindustrial_atmos_carbon: f64,
    /// Carbon transfer per step. `carbon_transfer[to][from]`, order
    /// atmosphere, upper ocean, lower ocean. Columns sum to one.
    pub carbon_transfer: [[f64; 3]; 3],
}

impl Default for ModelConstants {
    fn default() -> Self {
        Self {
            dt_years: 5.0,
            horizon_steps: 20,
            capital_elasticity: 0.3,
            depreciation: 0.1,
            savings_rate: 0.25,
            damage_coeff: 0.00236,
            abatement_exponent: 2.6,
            abatement_scale_decline: 0.005,
            sigma_decline: 0.01,
            tfp_growth: 0.01,
            forcing_per_doubling: 3.6813,
            climate_sensitivity: 3.1,
            c1: 0.1005,
            c3: 0.088,
            c4: 0.025,
            preindustrial_atmos_carbon: 588.0,
            carbon_transfer: [
                [0.88, 0.196, 0.0],
                [0.12, 0.797, 0.001465],
                [0.0, 0.007, 0.998535],
            ],
        }
    }
}

impl ModelConstants {
    /// Feedback parameter lambda = F2x / ECS.
    pub fn feedback(&self) -> f64 {
        self.forcing_per_doubling / self.climate_sensitivity
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.dt_years > 0.0) {
            return bad(format!("model.dt_years must be > 0, got {}", self.dt_years));
        }
        if self.horizon_steps < 1 {
            return bad("model.horizon_steps must be >= 1".into());
        }
        let open_unit = [
            ("model.gamma", self.capital_elasticity),
            ("model.savings_rate", self.savings_rate),
        ];
        for (key, v) in open_unit {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{key} must lie in (0, 1), got {v}"));
            }
        }
        let non_negative = [
            ("model.delta", self.depreciation),
            ("model.damage_coeff", self.damage_coeff),
            ("model.abatement_exponent", self.abatement_exponent),
            ("model.preindustrial_atmos_carbon", self.preindustrial_atmos_carbon),
            ("model.climate_sensitivity", self.climate_sensitivity),
        ];
        for (key, v) in non_negative {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(format!("{key} must be finite and >= 0, got {v}"));
            }
        }
        if self.depreciation >= 1.0 {
            return bad(format!("model.delta must be < 1, got {}", self.depreciation));
        }
        if !(self.preindustrial_atmos_carbon > 0.0 && self.climate_sensitivity > 0.0) {
            return bad("model.preindustrial_atmos_carbon and model.climate_sensitivity must be > 0".into());
        }
        for (name, v) in [
            ("model.abatement_scale_decline", self.abatement_scale_decline),
            ("model.sigma_decline", self.sigma_decline),
            ("model.tfp_growth", self.tfp_growth),
            ("model.forcing_per_doubling", self.forcing_per_doubling),
            ("model.c1", self.c1),
            ("model.c3", self.c3),
            ("model.c4", self.c4),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite, got {v}"));
            }
        }
        for col in 0..3 {
            let mut sum = 0.0;
            for row in 0..3 {
                let b = self.carbon_transfer[row][col];
                if !(0.0..=1.0).contains(&b) {
                    return bad(format!("model.carbon_transfer entry ({row},{col}) = {b} outside [0,1]"));
                }
                sum += b;
            }
            if (sum - 1.0).abs() > 1e-12 {
                return bad(format!("model.carbon_transfer column {col} sums to {sum}, not 1"));
            }
        }
        Ok(())
    }
}
