//! Parameterised scripted policies and a seeded parallel hill climber.

use rand::Rng;
use rayon::prelude::*;

use super::{AgentRng, DefectStage, Observation, PolicySpec};
use crate::engine::{run_episode, SimConfig};
use crate::error::{Error, Result};
use crate::protocol::{ExecutionRule, Proposal};
use crate::rng;
use crate::trade::{MitigationLevel, TariffBounds, TariffLevel, MAX_LEVEL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolvedParams {
    pub propose_level: u8,
    /// Highest proposal the agent accepts.
    pub accept_threshold: u8,
    /// Probability of defecting when committed above zero under DD.
    pub defect_propensity: f64,
    /// Where inside the tariff bounds to sit (0 = floor, 1 = ceiling).
    pub tariff_aggressiveness: f64,
}

fn level(l: u8) -> MitigationLevel {
    MitigationLevel::new(l.min(MAX_LEVEL)).expect("clamped")
}

impl EvolvedParams {
    pub(super) fn propose(&self) -> MitigationLevel {
        level(self.propose_level)
    }

    pub(super) fn vote(&self, proposals: &[Proposal]) -> Vec<bool> {
        proposals.iter().map(|p| p.level.get() <= self.accept_threshold).collect()
    }

    pub(super) fn defect(&self, obs: &Observation<'_>, stage: &DefectStage<'_>, rng: &mut AgentRng) -> bool {
        let draw = rng.random::<f64>();
        stage.config.discrete_defect
            && stage.commitments[obs.region].level > MitigationLevel::ZERO
            && draw < self.defect_propensity
    }

    pub(super) fn tariffs(&self, bounds: &[TariffBounds]) -> Vec<TariffLevel> {
        bounds.iter().map(|b| b.at_position(self.tariff_aggressiveness)).collect()
    }

    /// The obligation when there is one, otherwise zero once released, and
    /// the proposal level when no protocol applies.
    pub(super) fn mitigate(&self, rule: ExecutionRule) -> MitigationLevel {
        match rule {
            ExecutionRule::AtLeast(l) => l,
            ExecutionRule::Released | ExecutionRule::ForcedZero => MitigationLevel::ZERO,
            ExecutionRule::Unconstrained => self.propose(),
        }
    }

    fn random(rng: &mut AgentRng) -> Self {
        Self {
            propose_level: rng.random_range(0..=MAX_LEVEL),
            accept_threshold: rng.random_range(0..=MAX_LEVEL),
            defect_propensity: rng.random(),
            tariff_aggressiveness: rng.random(),
        }
    }

    fn mutate(&self, rng: &mut AgentRng) -> Self {
        let mut p = *self;
        let step_level = |l: u8, rng: &mut AgentRng| (l as i32 + rng.random_range(-2..=2)).clamp(0, MAX_LEVEL as i32) as u8;
        let step_unit = |v: f64, rng: &mut AgentRng| (v + rng.random_range(-0.2..=0.2)).clamp(0.0, 1.0);
        match rng.random_range(0..4) {
            0 => p.propose_level = step_level(p.propose_level, rng),
            1 => p.accept_threshold = step_level(p.accept_threshold, rng),
            2 => p.defect_propensity = step_unit(p.defect_propensity, rng),
            _ => p.tariff_aggressiveness = step_unit(p.tariff_aggressiveness, rng),
        }
        p
    }
}

fn score(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Keep the best genome; every generation mutate it into as many children as
/// there are initial genomes and adopt the best child if it is strictly better.
///
/// Children of generation `g` draw from stream `[g + 1, k]` of `seed`, and
/// fitness is evaluated in parallel with results merged by index, so the
/// outcome does not depend on thread scheduling. Ties go to the lowest index.
pub fn hill_climb<G, F, M>(initial: Vec<G>, generations: usize, seed: u64, mutate: M, fitness: F) -> Option<(G, f64)>
where
    G: Clone + Send + Sync,
    F: Fn(&G) -> f64 + Sync,
    M: Fn(&G, &mut AgentRng) -> G + Sync,
{
    let best_of = |pop: Vec<G>| -> Option<(G, f64)> {
        let scores: Vec<f64> = pop.par_iter().map(|g| score(fitness(g))).collect();
        let mut best: Option<(usize, f64)> = None;
        for (k, s) in scores.into_iter().enumerate() {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((k, s));
            }
        }
        best.map(|(k, s)| (pop[k].clone(), s))
    };
    let size = initial.len();
    let mut best = best_of(initial)?;
    for g in 0..generations {
        let children: Vec<G> = (0..size)
            .map(|k| mutate(&best.0, &mut rng::stream(seed, &[g as u64 + 1, k as u64])))
            .collect();
        if let Some(child) = best_of(children) {
            if child.1 > best.1 {
                best = child;
            }
        }
    }
    Some(best)
}

/// Mean episode reward across regions of a profile of evolved policies.
fn profile_fitness(config: &SimConfig, profile: &[EvolvedParams]) -> f64 {
    let specs: Vec<PolicySpec> = profile.iter().copied().map(PolicySpec::Evolved).collect();
    let cfg = SimConfig { policies: specs, ..config.clone() };
    match run_episode(&cfg) {
        Ok(trace) => {
            let r = trace.episode_rewards();
            r.iter().sum::<f64>() / r.len() as f64
        }
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Hill-climb a profile of evolved policies, one per region, on mean episode
/// reward under `config`. Reproducible for a given `seed`.
pub fn evolve_policies(config: &SimConfig, population: usize, generations: usize, seed: u64) -> Result<Vec<PolicySpec>> {
    if population == 0 {
        return Err(Error::InvalidConfig("evolution population must be >= 1".into()));
    }
    config.validate()?;
    let n = config.roster.count();
    let initial: Vec<Vec<EvolvedParams>> = (0..population)
        .map(|k| {
            let mut r = rng::stream(seed, &[0, k as u64]);
            (0..n).map(|_| EvolvedParams::random(&mut r)).collect()
        })
        .collect();
    let mutate = |g: &Vec<EvolvedParams>, r: &mut AgentRng| {
        let mut child = g.clone();
        let i = r.random_range(0..child.len());
        child[i] = child[i].mutate(r);
        child
    };
    let (best, _) = hill_climb(initial, generations, seed, mutate, |g| profile_fitness(config, g))
        .expect("population is non-empty");
    Ok(best.into_iter().map(PolicySpec::Evolved).collect())
}
