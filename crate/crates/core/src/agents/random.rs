use rand::{Rng, RngCore, SeedableRng};

use super::{AgentRng, DefectStage};
use crate::protocol::{ExecutionRule, Proposal};
use crate::trade::{MitigationLevel, TariffBounds, TariffLevel};

pub(super) fn salted(rng: &mut AgentRng, salt: u64) -> AgentRng {
    if salt == 0 {
        rng.clone()
    } else {
        AgentRng::seed_from_u64(rng.next_u64() ^ salt)
    }
}

pub(super) fn propose(rng: &mut AgentRng) -> MitigationLevel {
    MitigationLevel::new(rng.random_range(0..=10)).expect("in range")
}

pub(super) fn vote(proposals: &[Proposal], rng: &mut AgentRng) -> Vec<bool> {
    proposals.iter().map(|_| rng.random_bool(0.5)).collect()
}

pub(super) fn defect(stage: &DefectStage<'_>, rng: &mut AgentRng) -> bool {
    stage.config.discrete_defect && rng.random_bool(0.5)
}

pub(super) fn tariffs(bounds: &[TariffBounds], rng: &mut AgentRng) -> Vec<TariffLevel> {
    bounds
        .iter()
        .map(|b| TariffLevel::new(rng.random_range(b.min.get()..=b.max.get())).expect("in range"))
        .collect()
}

pub(super) fn mitigate(rule: ExecutionRule, rng: &mut AgentRng) -> MitigationLevel {
    let (lo, hi) = rule.range();
    MitigationLevel::new(rng.random_range(lo.get()..=hi.get())).expect("in range")
}
