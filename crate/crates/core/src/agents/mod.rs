//! Agent policies.
//!
//! An agent answers one question per protocol stage: what to propose, which
//! proposals to accept, whether to defect, which tariffs to set and how much
//! to mitigate. Observations expose public world data (every region's stocks,
//! the last round, the punishment registry) but nothing about other agents'
//! policies.

mod evolve;
mod fixed;
mod greedy;
mod random;

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;

pub use evolve::{evolve_policies, hill_climb, EvolvedParams};
pub use greedy::{GreedyParams, GreedyPolicy};

use crate::error::{Error, Result};
use crate::model::{ClimateState, ModelConstants, RegionState};
use crate::protocol::{Club, Commitment, ExecutionRule, Proposal, ProtocolConfig, PunishmentRegistry, RoundOutcome};
use crate::trade::{MitigationLevel, TariffBounds, TariffLevel, TariffMatrix};

pub type AgentRng = ChaCha8Rng;

/// Public state of the world at the start of a step.
#[derive(Debug, Clone, Copy)]
pub struct WorldSnapshot<'a> {
    pub step: usize,
    pub constants: &'a ModelConstants,
    pub regions: &'a [RegionState],
    pub climate: &'a ClimateState,
    pub openness: f64,
    pub protocol: Option<&'a ProtocolConfig>,
    pub last_round: Option<&'a RoundOutcome>,
    /// Levels executed in the previous step (zeros before the first step).
    pub last_executed: &'a [MitigationLevel],
    pub registry: &'a PunishmentRegistry,
}

/// What one region sees.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub region: usize,
    pub world: &'a WorldSnapshot<'a>,
}

impl Observation<'_> {
    pub fn own_state(&self) -> &RegionState {
        &self.world.regions[self.region]
    }

    pub fn t_at(&self) -> f64 {
        self.world.climate.t_at
    }

    pub fn punished(&self) -> bool {
        self.world.registry.contains(self.region)
    }

    pub fn step(&self) -> usize {
        self.world.step
    }
}

pub struct DefectStage<'a> {
    pub proposals: &'a [Proposal],
    pub commitments: &'a [Commitment],
    pub clubs: &'a [Club],
    pub config: &'a ProtocolConfig,
}

pub struct TariffStage<'a> {
    pub commitments: &'a [Commitment],
    pub clubs: &'a [Club],
    /// `bounds[importer][exporter]` after defections and punishments.
    pub bounds: &'a [Vec<TariffBounds>],
    pub registry: &'a PunishmentRegistry,
    pub config: &'a ProtocolConfig,
}

impl TariffStage<'_> {
    pub fn own_bounds(&self, region: usize) -> &[TariffBounds] {
        &self.bounds[region]
    }
}

pub struct ExecutionStage<'a> {
    /// This step's round, if a protocol is in force.
    pub round: Option<&'a RoundOutcome>,
    /// Execution rule of every region.
    pub rules: &'a [ExecutionRule],
    /// Tariffs that will be applied this step.
    pub tariffs: &'a TariffMatrix,
}

/// A policy answering each protocol stage.
pub trait Agent {
    fn propose(&self, obs: &Observation<'_>, rng: &mut AgentRng) -> MitigationLevel;
    fn vote(&self, obs: &Observation<'_>, proposals: &[Proposal], rng: &mut AgentRng) -> Vec<bool>;
    fn defect(&self, obs: &Observation<'_>, stage: &DefectStage<'_>, rng: &mut AgentRng) -> bool;
    /// One tariff per exporter (the own entry is ignored).
    fn tariffs(&self, obs: &Observation<'_>, stage: &TariffStage<'_>, rng: &mut AgentRng) -> Vec<TariffLevel>;
    fn mitigate(&self, obs: &Observation<'_>, stage: &ExecutionStage<'_>, rng: &mut AgentRng) -> MitigationLevel;
}

/// A serialisable policy choice.
///
/// Text forms: `fixed:<level>`, `random[:<salt>]`, `greedy[:<defect propensity>]`,
/// `evolved:<propose>,<accept>,<defect propensity>,<tariff aggressiveness>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicySpec {
    /// Always proposes, accepts up to and executes one level; never defects;
    /// tariffs at the lower bound.
    Fixed(MitigationLevel),
    /// Uniform over legal actions.
    Random { salt: u64 },
    /// One-step best response.
    Greedy(GreedyParams),
    /// Parameterised scripted policy tuned by hill climbing.
    Evolved(EvolvedParams),
}

impl Default for PolicySpec {
    fn default() -> Self {
        PolicySpec::Greedy(GreedyParams::default())
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::Fixed(l) => write!(f, "fixed:{l}"),
            PolicySpec::Random { salt: 0 } => f.write_str("random"),
            PolicySpec::Random { salt } => write!(f, "random:{salt}"),
            PolicySpec::Greedy(p) => write!(f, "greedy:{}", p.defect_propensity),
            PolicySpec::Evolved(p) => write!(
                f,
                "evolved:{},{},{},{}",
                p.propose_level, p.accept_threshold, p.defect_propensity, p.tariff_aggressiveness
            ),
        }
    }
}

fn parse_unit(s: &str, what: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| Error::InvalidConfig(format!("{what}: `{s}` is not a number")))?;
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidConfig(format!("{what} must lie in [0, 1], got {v}")));
    }
    Ok(v)
}

fn parse_level(s: &str, what: &str) -> Result<MitigationLevel> {
    let v: u8 = s.trim().parse().map_err(|_| Error::InvalidConfig(format!("{what}: `{s}` is not a level 0..=10")))?;
    MitigationLevel::new(v)
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (s, None),
        };
        match (kind.to_ascii_lowercase().as_str(), arg) {
            ("fixed", Some(a)) => Ok(PolicySpec::Fixed(parse_level(a, "fixed level")?)),
            ("random", None) => Ok(PolicySpec::Random { salt: 0 }),
            ("random", Some(a)) => a
                .parse()
                .map(|salt| PolicySpec::Random { salt })
                .map_err(|_| Error::InvalidConfig(format!("random salt `{a}` is not an integer"))),
            ("greedy", None) => Ok(PolicySpec::Greedy(GreedyParams::default())),
            ("greedy", Some(a)) => Ok(PolicySpec::Greedy(GreedyParams {
                defect_propensity: parse_unit(a, "greedy defect propensity")?,
            })),
            ("evolved", Some(a)) => {
                let parts: Vec<&str> = a.split(',').collect();
                if parts.len() != 4 {
                    return Err(Error::InvalidConfig(format!("evolved policy needs 4 parameters, got `{a}`")));
                }
                Ok(PolicySpec::Evolved(EvolvedParams {
                    propose_level: parse_level(parts[0], "evolved propose level")?.get(),
                    accept_threshold: parse_level(parts[1], "evolved accept threshold")?.get(),
                    defect_propensity: parse_unit(parts[2], "evolved defect propensity")?,
                    tariff_aggressiveness: parse_unit(parts[3], "evolved tariff aggressiveness")?,
                }))
            }
            _ => Err(Error::InvalidConfig(format!("unknown policy `{s}`"))),
        }
    }
}

impl Agent for PolicySpec {
    fn propose(&self, obs: &Observation<'_>, rng: &mut AgentRng) -> MitigationLevel {
        match self {
            PolicySpec::Fixed(l) => fixed::propose(*l),
            PolicySpec::Random { salt } => random::propose(&mut random::salted(rng, *salt)),
            PolicySpec::Greedy(p) => GreedyPolicy::new(*p).propose(obs),
            PolicySpec::Evolved(p) => p.propose(),
        }
    }

    fn vote(&self, obs: &Observation<'_>, proposals: &[Proposal], rng: &mut AgentRng) -> Vec<bool> {
        match self {
            PolicySpec::Fixed(l) => fixed::vote(*l, proposals),
            PolicySpec::Random { salt } => random::vote(proposals, &mut random::salted(rng, *salt)),
            PolicySpec::Greedy(p) => GreedyPolicy::new(*p).vote(obs, proposals),
            PolicySpec::Evolved(p) => p.vote(proposals),
        }
    }

    fn defect(&self, obs: &Observation<'_>, stage: &DefectStage<'_>, rng: &mut AgentRng) -> bool {
        match self {
            PolicySpec::Fixed(_) => false,
            PolicySpec::Random { salt } => random::defect(stage, &mut random::salted(rng, *salt)),
            PolicySpec::Greedy(p) => GreedyPolicy::new(*p).defect(obs, stage, rng),
            PolicySpec::Evolved(p) => p.defect(obs, stage, rng),
        }
    }

    fn tariffs(&self, obs: &Observation<'_>, stage: &TariffStage<'_>, rng: &mut AgentRng) -> Vec<TariffLevel> {
        match self {
            PolicySpec::Fixed(_) => fixed::tariffs(stage.own_bounds(obs.region)),
            PolicySpec::Random { salt } => random::tariffs(stage.own_bounds(obs.region), &mut random::salted(rng, *salt)),
            PolicySpec::Greedy(p) => GreedyPolicy::new(*p).tariffs(obs, stage),
            PolicySpec::Evolved(p) => p.tariffs(stage.own_bounds(obs.region)),
        }
    }

    fn mitigate(&self, obs: &Observation<'_>, stage: &ExecutionStage<'_>, rng: &mut AgentRng) -> MitigationLevel {
        let rule = stage.rules[obs.region];
        match self {
            PolicySpec::Fixed(l) => fixed::mitigate(*l, rule),
            PolicySpec::Random { salt } => random::mitigate(rule, &mut random::salted(rng, *salt)),
            PolicySpec::Greedy(p) => GreedyPolicy::new(*p).mitigate(obs, stage),
            PolicySpec::Evolved(p) => p.mitigate(rule),
        }
    }
}
