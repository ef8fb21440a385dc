//! Episode orchestration: one negotiation round per economic step over the
//! horizon, and seeded ensembles of episodes.

use std::fmt::{self, Write as _};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::agents::{Agent, ExecutionStage, Observation, PolicySpec, WorldSnapshot};
use crate::error::{Error, Result};
use crate::fsum::fsum;
use crate::model::{advance_exogenous, step_carbon_cycle, step_temperature, ClimateState, ModelConstants, RegionState};
use crate::protocol::{
    apply_defection, run_negotiation_round, stage, ExecutionRule, PunishmentRegistry, RoundOutcome, Variant,
};
use crate::rng;
use crate::roster::{generate_roster, RosterSpec};
use crate::step::economy_step;
use crate::trade::{MitigationLevel, TariffLevel, TariffMatrix};

/// Where the initial regions come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Roster {
    Explicit(Vec<RegionState>),
    /// Drawn afresh for every episode seed from the family keyed by the roster seed.
    Generated(RosterSpec),
}

impl Roster {
    pub fn count(&self) -> usize {
        match self {
            Roster::Explicit(r) => r.len(),
            Roster::Generated(s) => s.count,
        }
    }

    pub fn resolve(&self, episode_seed: u64, constants: &ModelConstants) -> Vec<RegionState> {
        match self {
            Roster::Explicit(r) => r.clone(),
            Roster::Generated(spec) => generate_roster(spec, episode_seed, constants),
        }
    }
}

/// Everything one episode depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub constants: ModelConstants,
    pub initial_climate: ClimateState,
    pub roster: Roster,
    pub variant: Variant,
    /// One policy per region.
    pub policies: Vec<PolicySpec>,
    /// Share of output exported.
    pub openness: f64,
    /// Tariff applied on every pair when no protocol is in force.
    pub default_tariff: TariffLevel,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        let roster = Roster::Generated(RosterSpec::default());
        Self {
            constants: ModelConstants::default(),
            initial_climate: ClimateState::default(),
            policies: vec![PolicySpec::default(); roster.count()],
            roster,
            variant: Variant::Club(crate::protocol::ProtocolConfig::BASIC),
            openness: 0.1,
            default_tariff: TariffLevel::ZERO,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        if !self.initial_climate.is_valid() {
            return Err(Error::InvalidConfig("climate: initial state has non-positive carbon or non-finite temperature".into()));
        }
        match &self.roster {
            Roster::Explicit(r) => {
                if r.len() < 2 {
                    return Err(Error::InvalidConfig(format!("regions: need at least 2 regions, got {}", r.len())));
                }
                for s in r {
                    s.validate()?;
                }
            }
            Roster::Generated(spec) => spec.validate()?,
        }
        if let Some(p) = self.variant.protocol() {
            p.validate()?;
        }
        if self.policies.len() != self.roster.count() {
            return Err(Error::InvalidConfig(format!(
                "agents: {} policies for {} regions",
                self.policies.len(),
                self.roster.count()
            )));
        }
        if !(0.0..=1.0).contains(&self.openness) {
            return Err(Error::InvalidConfig(format!("trade.openness must lie in [0, 1], got {}", self.openness)));
        }
        Ok(())
    }

    /// Stable text form of every field that affects a trace.
    pub fn canonical_text(&self) -> String {
        let c = &self.constants;
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        line("dt_years", format!("{:?}", c.dt_years));
        line("horizon_steps", c.horizon_steps.to_string());
        for (k, v) in [
            ("capital_elasticity", c.capital_elasticity),
            ("depreciation", c.depreciation),
            ("savings_rate", c.savings_rate),
            ("damage_coeff", c.damage_coeff),
            ("abatement_exponent", c.abatement_exponent),
            ("abatement_scale_decline", c.abatement_scale_decline),
            ("sigma_decline", c.sigma_decline),
            ("tfp_growth", c.tfp_growth),
            ("forcing_per_doubling", c.forcing_per_doubling),
            ("climate_sensitivity", c.climate_sensitivity),
            ("c1", c.c1),
            ("c3", c.c3),
            ("c4", c.c4),
            ("preindustrial_atmos_carbon", c.preindustrial_atmos_carbon),
        ] {
            line(k, format!("{v:?}"));
        }
        line("carbon_transfer", format!("{:?}", c.carbon_transfer));
        line("initial_climate", format!("{:?}", self.initial_climate));
        line("roster", format!("{:?}", self.roster));
        line("variant", self.variant.to_string());
        let policies: Vec<String> = self.policies.iter().map(|p| p.to_string()).collect();
        line("policies", policies.join(";"));
        line("openness", format!("{:?}", self.openness));
        line("default_tariff", self.default_tariff.to_string());
        line("seed", self.seed.to_string());
        s
    }

    /// SHA-256 of [`canonical_text`](Self::canonical_text), hex encoded.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }
}

/// What one region did and produced in one step (annual rates).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionRecord {
    pub commit_level: MitigationLevel,
    pub defected: bool,
    pub rule: ExecutionRule,
    pub executed: MitigationLevel,
    pub gross_output: f64,
    pub net_output: f64,
    pub emissions: f64,
    pub abatement_cost: f64,
    pub damage_loss: f64,
    pub consumption: f64,
    pub investment: f64,
    pub tariff_revenue: f64,
    pub reward: f64,
}

impl RegionRecord {
    pub fn mu(&self) -> f64 {
        self.executed.rate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub regions: Vec<RegionRecord>,
    /// Climate after the step.
    pub climate: ClimateState,
    pub tariffs: TariffMatrix,
    /// Regions under permanent punishment after this step's round.
    pub punished: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub fingerprint: String,
    pub label: String,
    pub seed: u64,
    pub initial_regions: Vec<RegionState>,
    pub initial_climate: ClimateState,
    pub steps: Vec<StepRecord>,
}

impl EpisodeTrace {
    pub fn final_temperature(&self) -> f64 {
        self.steps.last().map_or(self.initial_climate.t_at, |s| s.climate.t_at)
    }

    /// Gross output summed over steps and regions.
    pub fn gross_output_total(&self) -> f64 {
        fsum(self.steps.iter().flat_map(|s| s.regions.iter().map(|r| r.gross_output)))
    }

    /// Per-region sum over steps of `f`.
    pub fn per_region_total(&self, f: impl Fn(&RegionRecord) -> f64) -> Vec<f64> {
        (0..self.initial_regions.len())
            .map(|i| fsum(self.steps.iter().map(|s| f(&s.regions[i]))))
            .collect()
    }

    /// Episode reward of each region (sum of step rewards).
    pub fn episode_rewards(&self) -> Vec<f64> {
        self.per_region_total(|r| r.reward)
    }

    /// Trace CSV: one row per step and region.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from(
            "step,region,commit_level,defected,mu,gross_output,emissions,abatement_cost,consumption,tariff_revenue,t_at\n",
        );
        for st in &self.steps {
            for (i, r) in st.regions.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    st.step,
                    i,
                    r.commit_level,
                    u8::from(r.defected),
                    num(r.mu()),
                    num(r.gross_output),
                    num(r.emissions),
                    num(r.abatement_cost),
                    num(r.consumption),
                    num(r.tariff_revenue),
                    num(st.climate.t_at),
                );
            }
        }
        s
    }

    pub fn climate_csv(&self) -> String {
        let mut s = String::from("step,m_at,m_up,m_lo,t_at,t_lo\n");
        for st in &self.steps {
            let c = &st.climate;
            let _ = writeln!(s, "{},{},{},{},{},{}", st.step, num(c.m_at), num(c.m_up), num(c.m_lo), num(c.t_at), num(c.t_lo));
        }
        s
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// An episode that aborted. No partial trace is kept.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct EpisodeError {
    pub seed: u64,
    pub step: Option<usize>,
    #[source]
    pub source: Error,
}

impl fmt::Display for EpisodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.step {
            Some(step) => write!(f, "episode with seed {} aborted at step {step}: {}", self.seed, self.source),
            None => write!(f, "episode with seed {} rejected: {}", self.seed, self.source),
        }
    }
}

/// Run one episode with `config.seed`.
pub fn run_episode(config: &SimConfig) -> Result<EpisodeTrace, EpisodeError> {
    run_episode_with(config, &config.policies)
}

/// Run one episode with the given agents in place of `config.policies`.
pub fn run_episode_with<A: Agent>(config: &SimConfig, agents: &[A]) -> Result<EpisodeTrace, EpisodeError> {
    let seed = config.seed;
    let reject = |source| EpisodeError { seed, step: None, source };
    config.validate().map_err(reject)?;
    if agents.len() != config.roster.count() {
        return Err(reject(Error::Shape(format!("{} agents for {} regions", agents.len(), config.roster.count()))));
    }
    let c = &config.constants;
    let initial_regions = config.roster.resolve(seed, c);
    let n = initial_regions.len();

    let mut regions = initial_regions.clone();
    let mut climate = config.initial_climate;
    let mut registry = PunishmentRegistry::default();
    let mut last_round: Option<RoundOutcome> = None;
    let mut last_executed = vec![MitigationLevel::ZERO; n];
    let mut steps = Vec::with_capacity(c.horizon_steps);

    for step in 0..c.horizon_steps {
        let abort = |source| EpisodeError { seed, step: Some(step), source };
        let protocol = config.variant.protocol();
        let world = WorldSnapshot {
            step,
            constants: c,
            regions: &regions,
            climate: &climate,
            openness: config.openness,
            protocol,
            last_round: last_round.as_ref(),
            last_executed: &last_executed,
            registry: &registry,
        };

        let mut next_registry = registry.clone();
        let (round, rules, tariffs) = match protocol {
            Some(p) => {
                let round = run_negotiation_round(agents, &world, p, &mut next_registry, seed).map_err(abort)?;
                let rules = round
                    .commitments
                    .iter()
                    .map(|cm| apply_defection(cm, cm.defected_this_step, p))
                    .collect::<Result<Vec<_>>>()
                    .map_err(abort)?;
                let tariffs = round.tariffs.clone();
                (Some(round), rules, tariffs)
            }
            None => (
                None,
                vec![ExecutionRule::Unconstrained; n],
                TariffMatrix::uniform(n, config.default_tariff),
            ),
        };

        let exec = ExecutionStage { round: round.as_ref(), rules: &rules, tariffs: &tariffs };
        let mut levels = Vec::with_capacity(n);
        for (i, a) in agents.iter().enumerate() {
            let obs = Observation { region: i, world: &world };
            let level = a.mitigate(&obs, &exec, &mut rng::stream(seed, &[step as u64, i as u64, stage::MITIGATE]));
            if !rules[i].allows(level) {
                return Err(abort(Error::IllegalAction {
                    region: i,
                    reason: format!("executed level {level} violates {:?}", rules[i]),
                }));
            }
            levels.push(level);
        }

        let econ = economy_step(&regions, &levels, climate.t_at, &tariffs, config.openness, c).map_err(abort)?;
        let annual_emissions = fsum(econ.flows.iter().map(|f| f.emissions));
        let after = step_temperature(&step_carbon_cycle(&climate, c.dt_years * annual_emissions, c), c);
        if !after.is_valid() {
            return Err(abort(Error::InvalidConfig("climate state left its valid domain".into())));
        }

        let records = (0..n)
            .map(|i| {
                let f = &econ.flows[i];
                let (commit_level, defected) = round
                    .as_ref()
                    .map_or((MitigationLevel::ZERO, false), |r| (r.commitments[i].level, r.commitments[i].defected_this_step));
                RegionRecord {
                    commit_level,
                    defected,
                    rule: rules[i],
                    executed: levels[i],
                    gross_output: f.gross_output,
                    net_output: f.net_output,
                    emissions: f.emissions,
                    abatement_cost: f.abatement_cost,
                    damage_loss: f.damage_loss(),
                    consumption: econ.consumption[i],
                    investment: econ.investment[i],
                    tariff_revenue: econ.trade.tariff_revenue[i],
                    reward: econ.reward(i, regions[i].labor).0,
                }
            })
            .collect();
        steps.push(StepRecord {
            step,
            regions: records,
            climate: after,
            tariffs,
            punished: next_registry.members().collect(),
        });

        regions = regions.iter().zip(&econ.investment).map(|(r, inv)| advance_exogenous(r, *inv, c)).collect();
        climate = after;
        registry = next_registry;
        last_round = round;
        last_executed = levels;
    }

    Ok(EpisodeTrace {
        fingerprint: config.fingerprint(),
        label: config.variant.to_string(),
        seed,
        initial_regions,
        initial_climate: config.initial_climate,
        steps,
    })
}

/// Run one episode per seed. Results come back in seed order whatever the
/// worker count; `workers = 0` uses the global thread pool.
pub fn run_ensemble(config: &SimConfig, seeds: &[u64], workers: usize) -> Vec<Result<EpisodeTrace, EpisodeError>> {
    let one = |&seed: &u64| run_episode(&SimConfig { seed, ..config.clone() });
    if workers == 0 {
        return seeds.par_iter().map(one).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| seeds.par_iter().map(one).collect()),
        Err(_) => seeds.iter().map(one).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fingerprint_tracks_contents() {
        let a = SimConfig::default();
        let b = SimConfig { seed: 1, ..a.clone() };
        assert_eq!(a.fingerprint(), SimConfig::default().fingerprint());
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 64);
    }

    #[test]
    fn number_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 12345.678901234567, -2.5] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn validation_rejects_bad_shapes() {
        let mut c = SimConfig::default();
        c.policies.pop();
        assert!(c.validate().is_err());
        let c = SimConfig { roster: Roster::Explicit(vec![]), policies: vec![], ..SimConfig::default() };
        assert!(c.validate().is_err());
    }
}
