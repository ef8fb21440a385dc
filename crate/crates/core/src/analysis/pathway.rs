/// Emissions pathway and socioeconomic scenario matching a temperature rise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathwayLabel {
    pub rcp: &'static str,
    pub ssp: &'static str,
    /// The band below 1.8 degC has no anchor row and is extrapolated.
    pub extrapolated: bool,
}

pub fn map_to_pathway(temperature_rise: f64) -> PathwayLabel {
    let (rcp, ssp, extrapolated) = if temperature_rise < 1.8 {
        ("RCP 2.6", "SSP 1", true)
    } else if temperature_rise < 2.6 {
        ("RCP 3.4/4.5", "SSP 2", false)
    } else if temperature_rise < 3.8 {
        ("RCP 6.0", "SSP 2/4.5", false)
    } else {
        ("RCP 7.5/8.5", "SSP 7", false)
    };
    PathwayLabel { rcp, ssp, extrapolated }
}
