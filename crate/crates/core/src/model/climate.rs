use super::ModelConstants;

/// Mass of carbon in one mass of CO2.
pub const GTC_PER_GTCO2: f64 = 12.0 / 44.0;

/// Shared climate: three carbon reservoirs (GtC) and two-layer temperatures
/// (degC above preindustrial).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClimateState {
    pub m_at: f64,
    pub m_up: f64,
    pub m_lo: f64,
    pub t_at: f64,
    pub t_lo: f64,
}

impl Default for ClimateState {
    fn default() -> Self {
        Self { m_at: 851.0, m_up: 460.0, m_lo: 1740.0, t_at: 1.1, t_lo: 0.27 }
    }
}

impl ClimateState {
    pub fn total_carbon(&self) -> f64 {
        self.m_at + self.m_up + self.m_lo
    }

    pub fn is_valid(&self) -> bool {
        self.m_at > 0.0
            && self.m_up > 0.0
            && self.m_lo > 0.0
            && self.t_at.is_finite()
            && self.t_lo.is_finite()
    }
}

/// Transfer carbon between reservoirs for one step and inject
/// `total_emissions` (GtCO2 released over the step) into the atmosphere.
pub fn step_carbon_cycle(
    climate: &ClimateState,
    total_emissions: f64,
    constants: &ModelConstants,
) -> ClimateState {
    let b = &constants.carbon_transfer;
    let m = [climate.m_at, climate.m_up, climate.m_lo];
    let row = |r: usize| b[r][0] * m[0] + b[r][1] * m[1] + b[r][2] * m[2];
    ClimateState {
        m_at: row(0) + total_emissions * GTC_PER_GTCO2,
        m_up: row(1),
        m_lo: row(2),
        ..*climate
    }
}

/// Radiative forcing from atmospheric carbon, W/m2.
pub fn forcing(m_at: f64, constants: &ModelConstants) -> f64 {
    constants.forcing_per_doubling * (m_at / constants.preindustrial_atmos_carbon).log2()
}

/// Two-layer energy balance update using the current atmospheric carbon.
pub fn step_temperature(climate: &ClimateState, constants: &ModelConstants) -> ClimateState {
    let f = forcing(climate.m_at, constants);
    let lambda = constants.feedback();
    let (t_at, t_lo) = (climate.t_at, climate.t_lo);
    ClimateState {
        t_at: t_at + constants.c1 * (f - lambda * t_at - constants.c3 * (t_at - t_lo)),
        t_lo: t_lo + constants.c4 * (t_at - t_lo),
        ..*climate
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn carbon_cycle_examples() {
        let c = ModelConstants::default();
        let s = ClimateState::default();
        let next = step_carbon_cycle(&s, 0.0, &c);
        assert!((next.total_carbon() - s.total_carbon()).abs() < 1e-9);
        // 0.88*851 + 0.196*460 and the other two rows, by mpmath.
        assert!((next.m_at - 839.04).abs() < 1e-10);
        assert!((next.m_up - 471.2891).abs() < 1e-10);
        assert!((next.m_lo - 1740.6709).abs() < 1e-10);
        let next = step_carbon_cycle(&s, 100.0, &c);
        let added = next.total_carbon() - s.total_carbon();
        assert!((added - 100.0 * 12.0 / 44.0).abs() < 1e-9);
        assert_eq!((next.t_at, next.t_lo), (s.t_at, s.t_lo));
    }

    #[test]
    fn temperature_examples() {
        let c = ModelConstants::default();
        let eq = ClimateState { m_at: 588.0, t_at: 0.0, t_lo: 0.0, ..Default::default() };
        let next = step_temperature(&eq, &c);
        assert_eq!((next.t_at, next.t_lo), (0.0, 0.0));

        let doubled = ClimateState { m_at: 1176.0, ..eq };
        let next = step_temperature(&doubled, &c);
        assert!((next.t_at - 0.36997065).abs() < 1e-12, "{}", next.t_at);
        assert_eq!(next.t_lo, 0.0);

        let warm = ClimateState { t_at: 2.0, t_lo: 0.5, ..Default::default() };
        assert!(step_temperature(&warm, &c).t_lo > warm.t_lo);
    }

    proptest! {
        #[test]
        fn carbon_is_conserved(
            m_at in 100.0f64..5000.0, m_up in 100.0f64..5000.0, m_lo in 100.0f64..20000.0,
            e in 0.0f64..1000.0,
        ) {
            let c = ModelConstants::default();
            let s = ClimateState { m_at, m_up, m_lo, t_at: 1.0, t_lo: 0.5 };
            let next = step_carbon_cycle(&s, e, &c);
            let expected = s.total_carbon() + e * GTC_PER_GTCO2;
            prop_assert!((next.total_carbon() - expected).abs() <= 1e-9 * expected);
            prop_assert!(next.is_valid());
        }
    }
}
