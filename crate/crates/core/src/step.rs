//! One economic step for all regions: flows, trade settlement and the split
//! of disposable income into consumption and investment.

use crate::error::{Error, Result};
use crate::model::{region_flows, ModelConstants, RegionFlows, RegionState};
use crate::trade::{build_trade_flows, disposable_income, settle_trade, MitigationLevel, TariffMatrix, TradeOutcome};

/// Consumption floor applied before taking logs.
pub const CONSUMPTION_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct EconomyStep {
    pub flows: Vec<RegionFlows>,
    pub trade: TradeOutcome,
    /// Annual consumption after trade.
    pub consumption: Vec<f64>,
    /// Annual gross investment.
    pub investment: Vec<f64>,
}

impl EconomyStep {
    pub fn reward(&self, region: usize, labor: f64) -> Reward {
        reward(self.consumption[region], labor)
    }
}

/// Period utility of a region.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Reward(pub f64);

/// `L * ln(C / L)`, with `C` floored at [`CONSUMPTION_FLOOR`].
pub fn reward(consumption: f64, labor: f64) -> Reward {
    let c = consumption.max(CONSUMPTION_FLOOR);
    Reward(labor * (c / labor).ln())
}

/// Evaluate one step of the economy for executed mitigation `levels` and
/// `tariffs`, with damages taken at `t_at`.
///
/// Trade flows are allocated from net output, so consumption, investment,
/// abatement spending and damages add up to gross output.
pub fn economy_step(
    regions: &[RegionState],
    levels: &[MitigationLevel],
    t_at: f64,
    tariffs: &TariffMatrix,
    openness: f64,
    constants: &ModelConstants,
) -> Result<EconomyStep> {
    if levels.len() != regions.len() || tariffs.len() != regions.len() {
        return Err(Error::Shape(format!(
            "{} regions, {} levels, {} tariff rows",
            regions.len(),
            levels.len(),
            tariffs.len()
        )));
    }
    let flows = regions
        .iter()
        .zip(levels)
        .map(|(r, l)| region_flows(r, l.rate(), t_at, constants))
        .collect::<Result<Vec<_>>>()?;
    let net: Vec<f64> = flows.iter().map(|f| f.net_output).collect();
    let trade = settle_trade(&build_trade_flows(&net, openness)?, tariffs)?;
    let s = constants.savings_rate;
    let (consumption, investment) = (0..regions.len())
        .map(|i| {
            let income = disposable_income(net[i], openness, trade.export_income[i], trade.tariff_revenue[i]);
            ((1.0 - s) * income, s * income)
        })
        .unzip();
    Ok(EconomyStep { flows, trade, consumption, investment })
}
