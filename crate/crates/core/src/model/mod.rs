//! Per-region economy and shared climate, advanced in fixed multi-year steps.
//!
//! Everything here is a pure function of its arguments.

mod climate;
mod constants;
mod economy;

pub use climate::{step_carbon_cycle, step_temperature, ClimateState, GTC_PER_GTCO2};
pub use constants::ModelConstants;
pub use economy::{
    abatement_cost_fraction, advance_exogenous, damage_fraction, emissions, gross_output,
    region_flows, RegionFlows, RegionState, MAX_DAMAGE,
};
