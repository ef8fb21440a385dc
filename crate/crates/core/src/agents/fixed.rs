use crate::protocol::{ExecutionRule, Proposal};
use crate::trade::{MitigationLevel, TariffBounds, TariffLevel};

pub(super) fn propose(level: MitigationLevel) -> MitigationLevel {
    level
}

pub(super) fn vote(level: MitigationLevel, proposals: &[Proposal]) -> Vec<bool> {
    proposals.iter().map(|p| p.level <= level).collect()
}

pub(super) fn tariffs(bounds: &[TariffBounds]) -> Vec<TariffLevel> {
    bounds.iter().map(|b| b.min).collect()
}

/// Own level, moved into the permitted range if needed.
pub(super) fn mitigate(level: MitigationLevel, rule: ExecutionRule) -> MitigationLevel {
    let (lo, hi) = rule.range();
    level.max(lo).min(hi)
}
