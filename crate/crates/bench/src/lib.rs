//! Shared fixtures for the criterion benchmarks.

use clubsim::{PolicySpec, ProtocolConfig, SimConfig, Variant};

/// Default ten-region setup under the given protocol with one policy for all.
pub fn fixture(variant: Variant, policy: PolicySpec) -> SimConfig {
    let mut cfg = SimConfig { variant, ..SimConfig::default() };
    cfg.policies = vec![policy; cfg.policies.len()];
    cfg
}

pub fn club(discrete_defect: bool) -> Variant {
    Variant::Club(ProtocolConfig { discrete_defect, ..ProtocolConfig::BASIC })
}
