//! One-step best response.
//!
//! The greedy agent simulates the coming economic step for each candidate
//! action, holding the other regions at their most recent observable
//! behaviour: last commitments, last executed levels and last tariff
//! positions inside their bounds (the maximum before any round was seen).
//! Ties go to the lowest level.

use rand::Rng;

use super::{AgentRng, DefectStage, ExecutionStage, Observation, TariffStage, WorldSnapshot};
use crate::protocol::{bounds_matrix, Commitment, ExecutionRule, Proposal, ProtocolConfig, PunishmentRegistry};
use crate::step::economy_step;
use crate::trade::{MitigationLevel, TariffBounds, TariffLevel, TariffMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyParams {
    /// Probability that defecting is considered at all in a given step.
    /// When it is considered, the agent defects only if that pays strictly more.
    pub defect_propensity: f64,
}

impl Default for GreedyParams {
    fn default() -> Self {
        Self { defect_propensity: 0.5 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GreedyPolicy {
    pub params: GreedyParams,
}

/// Position assumed for a partner whose past tariff behaviour is unknown.
const DEFAULT_POSITION: f64 = 1.0;

fn argmax<T: Copy>(scored: &[(T, f64)]) -> Option<(T, f64)> {
    scored.iter().copied().fold(None, |best, (a, v)| match best {
        Some((_, bv)) if v <= bv => best,
        _ => Some((a, v)),
    })
}

struct Forecast<'w> {
    world: &'w WorldSnapshot<'w>,
    me: usize,
}

impl Forecast<'_> {
    fn reward(&self, levels: &[MitigationLevel], tariffs: &TariffMatrix) -> Option<(f64, Vec<f64>)> {
        let w = self.world;
        let step = economy_step(w.regions, levels, w.climate.t_at, tariffs, w.openness, w.constants).ok()?;
        let r = step.reward(self.me, w.regions[self.me].labor).0;
        Some((r, step.trade.revenue_by_flow[self.me].clone()))
    }

    fn position(&self, importer: usize, exporter: usize) -> f64 {
        self.world
            .last_round
            .map_or(DEFAULT_POSITION, |r| r.tariff_position(importer, exporter))
    }

    /// Others' tariffs at their last positions inside `bounds`; own row at `own`.
    fn tariffs(&self, bounds: &[Vec<TariffBounds>], own: &[TariffLevel]) -> TariffMatrix {
        let n = bounds.len();
        let mut m = TariffMatrix::zeros(n);
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let t = if i == self.me { own[j] } else { bounds[i][j].at_position(self.position(i, j)) };
                m.set(i, j, t).expect("off-diagonal");
            }
        }
        m
    }

    /// Best own tariff row and the reward it yields.
    ///
    /// Own tariffs only move own revenue flow by flow, so each partner is
    /// settled independently by comparing the two ends of its bounds.
    fn best_row(&self, levels: &[MitigationLevel], bounds: &[Vec<TariffBounds>]) -> (Vec<TariffLevel>, f64) {
        let n = bounds.len();
        let diag = |j: usize, t: TariffLevel| if j == self.me { TariffLevel::ZERO } else { t };
        let lows: Vec<TariffLevel> = (0..n).map(|j| diag(j, bounds[self.me][j].min)).collect();
        let highs: Vec<TariffLevel> = (0..n).map(|j| diag(j, bounds[self.me][j].max)).collect();
        let Some((_, rev_lo)) = self.reward(levels, &self.tariffs(bounds, &lows)) else {
            return (lows, f64::NEG_INFINITY);
        };
        let Some((_, rev_hi)) = self.reward(levels, &self.tariffs(bounds, &highs)) else {
            return (lows, f64::NEG_INFINITY);
        };
        let row: Vec<TariffLevel> = (0..n).map(|j| if rev_hi[j] > rev_lo[j] { highs[j] } else { lows[j] }).collect();
        let value = self.reward(levels, &self.tariffs(bounds, &row)).map_or(f64::NEG_INFINITY, |(r, _)| r);
        (row, value)
    }

    fn value_of(
        &self,
        commitments: &[Commitment],
        levels: &[MitigationLevel],
        config: &ProtocolConfig,
        registry: &PunishmentRegistry,
    ) -> f64 {
        let bounds = bounds_matrix(commitments, config, registry);
        self.best_row(levels, &bounds).1
    }
}

fn predicted_commitments(world: &WorldSnapshot<'_>) -> Vec<Commitment> {
    match world.last_round {
        Some(r) => r
            .commitments
            .iter()
            .map(|c| Commitment { defected_this_step: false, ..*c })
            .collect(),
        None => (0..world.regions.len())
            .map(|region| Commitment { region, level: MitigationLevel::ZERO, defected_this_step: false })
            .collect(),
    }
}

fn floor_of(rule: ExecutionRule, last: MitigationLevel) -> MitigationLevel {
    match rule {
        ExecutionRule::AtLeast(l) => l,
        ExecutionRule::Released | ExecutionRule::ForcedZero => MitigationLevel::ZERO,
        ExecutionRule::Unconstrained => last,
    }
}

impl GreedyPolicy {
    pub fn new(params: GreedyParams) -> Self {
        Self { params }
    }

    /// Forecast reward of committing (and complying) at each level.
    /// Empty when no protocol is in force.
    pub fn commitment_values(&self, obs: &Observation<'_>) -> Vec<(MitigationLevel, f64)> {
        let world = obs.world;
        let Some(config) = world.protocol else { return Vec::new() };
        let f = Forecast { world, me: obs.region };
        let mut commitments = predicted_commitments(world);
        let mut levels = world.last_executed.to_vec();
        MitigationLevel::all()
            .map(|v| {
                commitments[obs.region].level = v;
                levels[obs.region] = v;
                (v, f.value_of(&commitments, &levels, config, world.registry))
            })
            .collect()
    }

    /// Forecast reward of each level the execution rule allows.
    pub fn mitigation_values(&self, obs: &Observation<'_>, stage: &ExecutionStage<'_>) -> Vec<(MitigationLevel, f64)> {
        let world = obs.world;
        let f = Forecast { world, me: obs.region };
        let mut levels: Vec<MitigationLevel> = stage
            .rules
            .iter()
            .zip(world.last_executed)
            .map(|(r, l)| floor_of(*r, *l))
            .collect();
        stage.rules[obs.region]
            .levels()
            .map(|v| {
                levels[obs.region] = v;
                let value = f.reward(&levels, stage.tariffs).map_or(f64::NEG_INFINITY, |(r, _)| r);
                (v, value)
            })
            .collect()
    }

    pub fn propose(&self, obs: &Observation<'_>) -> MitigationLevel {
        argmax(&self.commitment_values(obs)).map_or(MitigationLevel::ZERO, |(l, _)| l)
    }

    /// Accept every proposal up to the best commitment achievable from the
    /// proposals on the table.
    pub fn vote(&self, obs: &Observation<'_>, proposals: &[Proposal]) -> Vec<bool> {
        let values = self.commitment_values(obs);
        let reachable: Vec<(MitigationLevel, f64)> = values
            .iter()
            .copied()
            .filter(|(l, _)| *l == MitigationLevel::ZERO || proposals.iter().any(|p| p.level == *l))
            .collect();
        let best = argmax(&reachable).map_or(MitigationLevel::ZERO, |(l, _)| l);
        proposals.iter().map(|p| p.level <= best).collect()
    }

    pub fn defect(&self, obs: &Observation<'_>, stage: &DefectStage<'_>, rng: &mut AgentRng) -> bool {
        let considered = rng.random::<f64>() < self.params.defect_propensity;
        let me = obs.region;
        let own = stage.commitments[me];
        if !considered || !stage.config.discrete_defect || own.level == MitigationLevel::ZERO {
            return false;
        }
        let world = obs.world;
        let f = Forecast { world, me };
        let mut levels: Vec<MitigationLevel> = stage.commitments.iter().map(|c| c.level).collect();
        let comply = f.value_of(stage.commitments, &levels, stage.config, world.registry);

        let mut registry = world.registry.clone();
        crate::protocol::update_punishments(&mut registry, [me], world.step, stage.config);
        let mut commitments = stage.commitments.to_vec();
        commitments[me].defected_this_step = true;
        levels[me] = MitigationLevel::ZERO;
        let defect = f.value_of(&commitments, &levels, stage.config, &registry);
        defect > comply
    }

    pub fn tariffs(&self, obs: &Observation<'_>, stage: &TariffStage<'_>) -> Vec<TariffLevel> {
        let f = Forecast { world: obs.world, me: obs.region };
        let levels: Vec<MitigationLevel> = stage
            .commitments
            .iter()
            .map(|c| if c.defected_this_step { MitigationLevel::ZERO } else { c.level })
            .collect();
        f.best_row(&levels, stage.bounds).0
    }

    pub fn mitigate(&self, obs: &Observation<'_>, stage: &ExecutionStage<'_>) -> MitigationLevel {
        argmax(&self.mitigation_values(obs, stage)).map_or_else(|| stage.rules[obs.region].range().0, |(l, _)| l)
    }
}
