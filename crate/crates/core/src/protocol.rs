//! The Basic Club negotiation round and its design-element modifiers.
//!
//! One round per economic step, in stage order: every region proposes a
//! mitigation level, votes on all proposals, commits to the highest level it
//! accepted, optionally defects (DD), and finally picks tariffs inside the
//! bounds implied by commitments.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::agents::{Agent, DefectStage, Observation, TariffStage, WorldSnapshot};
use crate::error::{Error, Result};
use crate::rng;
use crate::trade::{
    clamp_tariff, tariff_ceiling_level, tariff_floor_level, MitigationLevel, TariffBounds,
    TariffLevel, TariffMatrix,
};

/// Which design elements modify the Basic Club.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct ProtocolConfig {
    /// DD: a Defect action step releases the defector from its commitment.
    pub discrete_defect: bool,
    /// FT: no tariffs on exporters committed at or above the importer's club.
    pub free_trade: bool,
    /// MP: one defection means maximum tariffs for the rest of the episode.
    pub max_punishment: bool,
    /// HD: defecting forces zero mitigation for that step.
    pub hard_defect: bool,
}

impl ProtocolConfig {
    pub const BASIC: Self = Self {
        discrete_defect: false,
        free_trade: false,
        max_punishment: false,
        hard_defect: false,
    };

    pub fn validate(&self) -> Result<()> {
        if (self.max_punishment || self.hard_defect) && !self.discrete_defect {
            let which = if self.hard_defect { "hd" } else { "mp" };
            return Err(Error::InvalidConfig(format!("protocol element {which} requires dd")));
        }
        Ok(())
    }

    /// Every valid combination of design elements, Basic Club first.
    pub fn all_valid() -> Vec<Self> {
        let mut out: Vec<Self> = (0u8..16)
            .map(|bits| Self {
                discrete_defect: bits & 1 != 0,
                free_trade: bits & 2 != 0,
                hard_defect: bits & 4 != 0,
                max_punishment: bits & 8 != 0,
            })
            .filter(|c| c.validate().is_ok())
            .collect();
        out.sort_by_key(|c| (c.element_count(), c.label()));
        out
    }

    fn element_count(&self) -> usize {
        [self.discrete_defect, self.free_trade, self.hard_defect, self.max_punishment]
            .iter()
            .filter(|b| **b)
            .count()
    }

    /// Canonical label such as `bc`, `bc+dd`, `bc+dd+ft+mp` (elements sorted).
    pub fn label(&self) -> String {
        let mut s = String::from("bc");
        for (on, name) in [
            (self.discrete_defect, "dd"),
            (self.free_trade, "ft"),
            (self.hard_defect, "hd"),
            (self.max_punishment, "mp"),
        ] {
            if on {
                s.push('+');
                s.push_str(name);
            }
        }
        s
    }

    /// Parse a list of element names (`dd`, `ft`, `mp`, `hd`; `bc` is implied).
    pub fn from_elements<'a, I: IntoIterator<Item = &'a str>>(elements: I) -> Result<Self> {
        let mut c = Self::BASIC;
        for e in elements {
            match e.trim().to_ascii_lowercase().as_str() {
                "" | "bc" => {}
                "dd" => c.discrete_defect = true,
                "ft" => c.free_trade = true,
                "mp" => c.max_punishment = true,
                "hd" => c.hard_defect = true,
                other => {
                    return Err(Error::InvalidConfig(format!("unknown protocol element `{other}`")))
                }
            }
        }
        c.validate()?;
        Ok(c)
    }
}

/// A protocol variant: no negotiation at all, or a configured club protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    NoProtocol,
    Club(ProtocolConfig),
}

impl Variant {
    pub fn protocol(&self) -> Option<&ProtocolConfig> {
        match self {
            Variant::NoProtocol => None,
            Variant::Club(c) => Some(c),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::NoProtocol => f.write_str("none"),
            Variant::Club(c) => f.write_str(&c.label()),
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    /// Accepts `none`, `bc`, `bc+dd`, `dd,ft` and similar spellings.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "none" {
            return Ok(Variant::NoProtocol);
        }
        ProtocolConfig::from_elements(s.split(['+', ','])).map(Variant::Club)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Proposal {
    pub proposer: usize,
    pub level: MitigationLevel,
}

/// `accept[voter][proposal]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BallotSheet {
    pub accept: Vec<Vec<bool>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Commitment {
    pub region: usize,
    pub level: MitigationLevel,
    pub defected_this_step: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Club {
    pub level: MitigationLevel,
    pub members: BTreeSet<usize>,
}

/// Regions that defected while MP was active, with the step of first defection.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PunishmentRegistry {
    first_defection: BTreeMap<usize, usize>,
}

impl PunishmentRegistry {
    pub fn contains(&self, region: usize) -> bool {
        self.first_defection.contains_key(&region)
    }

    pub fn first_defection(&self, region: usize) -> Option<usize> {
        self.first_defection.get(&region).copied()
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.first_defection.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.first_defection.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first_defection.is_empty()
    }
}

/// Each region commits to the highest proposal it accepted, or 0.
pub fn resolve_commitments(
    n_regions: usize,
    proposals: &[Proposal],
    ballots: &BallotSheet,
) -> Result<Vec<Commitment>> {
    if ballots.accept.len() != n_regions {
        return Err(Error::Shape(format!(
            "{} ballots for {n_regions} regions",
            ballots.accept.len()
        )));
    }
    ballots
        .accept
        .iter()
        .enumerate()
        .map(|(region, row)| {
            if row.len() != proposals.len() {
                return Err(Error::Shape(format!(
                    "region {region} voted on {} of {} proposals",
                    row.len(),
                    proposals.len()
                )));
            }
            let level = proposals
                .iter()
                .zip(row)
                .filter(|(_, &ok)| ok)
                .map(|(p, _)| p.level)
                .max()
                .unwrap_or(MitigationLevel::ZERO);
            Ok(Commitment { region, level, defected_this_step: false })
        })
        .collect()
}

/// One club per distinct committed level above zero, ordered by level.
pub fn form_clubs(commitments: &[Commitment]) -> Vec<Club> {
    let mut by_level: BTreeMap<MitigationLevel, BTreeSet<usize>> = BTreeMap::new();
    for c in commitments.iter().filter(|c| c.level > MitigationLevel::ZERO) {
        by_level.entry(c.level).or_default().insert(c.region);
    }
    by_level.into_iter().map(|(level, members)| Club { level, members }).collect()
}

/// Tariff bounds an importer committed at `importer_level` may apply to `exporter`.
///
/// Precedence: MP punishment, then the clubless importer rule, then FT, then
/// the floor for exporters below the importer, else the ceiling.
pub fn tariff_bounds_for(
    importer_level: MitigationLevel,
    exporter: &Commitment,
    config: &ProtocolConfig,
    registry: &PunishmentRegistry,
) -> TariffBounds {
    if config.max_punishment && registry.contains(exporter.region) {
        return TariffBounds::new(TariffLevel::MAX, TariffLevel::MAX);
    }
    let ceiling = || TariffBounds::new(TariffLevel::ZERO, tariff_ceiling_level(exporter.level));
    if importer_level == MitigationLevel::ZERO {
        return ceiling();
    }
    if config.free_trade && exporter.level >= importer_level {
        return TariffBounds::new(TariffLevel::ZERO, TariffLevel::ZERO);
    }
    if exporter.level < importer_level {
        TariffBounds::new(tariff_floor_level(exporter.level), TariffLevel::MAX)
    } else {
        ceiling()
    }
}

/// Full bounds matrix `bounds[importer][exporter]`; the diagonal is `(0, 0)`.
pub fn bounds_matrix(
    commitments: &[Commitment],
    config: &ProtocolConfig,
    registry: &PunishmentRegistry,
) -> Vec<Vec<TariffBounds>> {
    let zero = TariffBounds::new(TariffLevel::ZERO, TariffLevel::ZERO);
    commitments
        .iter()
        .map(|imp| {
            commitments
                .iter()
                .map(|exp| {
                    if imp.region == exp.region {
                        zero
                    } else {
                        tariff_bounds_for(imp.level, exp, config, registry)
                    }
                })
                .collect()
        })
        .collect()
}

/// What a region may execute in the economic step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExecutionRule {
    /// Committed and compliant: at least the committed level.
    AtLeast(MitigationLevel),
    /// Defected under DD: any level.
    Released,
    /// Defected under HD: exactly zero.
    ForcedZero,
    /// No protocol in force: any level.
    Unconstrained,
}

impl ExecutionRule {
    pub fn allows(&self, level: MitigationLevel) -> bool {
        let (lo, hi) = self.range();
        lo <= level && level <= hi
    }

    /// Inclusive range of permitted levels.
    pub fn range(&self) -> (MitigationLevel, MitigationLevel) {
        match *self {
            ExecutionRule::AtLeast(l) => (l, MitigationLevel::MAX),
            ExecutionRule::Released | ExecutionRule::Unconstrained => {
                (MitigationLevel::ZERO, MitigationLevel::MAX)
            }
            ExecutionRule::ForcedZero => (MitigationLevel::ZERO, MitigationLevel::ZERO),
        }
    }

    pub fn levels(&self) -> impl Iterator<Item = MitigationLevel> {
        let (lo, hi) = self.range();
        MitigationLevel::all().filter(move |l| *l >= lo && *l <= hi)
    }
}

/// Mitigation obligation after the defect stage.
pub fn apply_defection(
    commitment: &Commitment,
    defect: bool,
    config: &ProtocolConfig,
) -> Result<ExecutionRule> {
    if !defect {
        return Ok(ExecutionRule::AtLeast(commitment.level));
    }
    if !config.discrete_defect {
        return Err(Error::IllegalAction {
            region: commitment.region,
            reason: "defect action without DD".into(),
        });
    }
    Ok(if config.hard_defect { ExecutionRule::ForcedZero } else { ExecutionRule::Released })
}

/// Record this step's defectors under MP. The registry never shrinks.
pub fn update_punishments(
    registry: &mut PunishmentRegistry,
    defectors: impl IntoIterator<Item = usize>,
    step: usize,
    config: &ProtocolConfig,
) {
    if !config.max_punishment {
        return;
    }
    for region in defectors {
        registry.first_defection.entry(region).or_insert(step);
    }
}

/// Everything decided in one negotiation round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub step: usize,
    pub proposals: Vec<Proposal>,
    pub ballots: BallotSheet,
    pub commitments: Vec<Commitment>,
    pub clubs: Vec<Club>,
    pub bounds: Vec<Vec<TariffBounds>>,
    /// Tariffs after clamping into `bounds`.
    pub tariffs: TariffMatrix,
}

impl RoundOutcome {
    pub fn defected(&self, region: usize) -> bool {
        self.commitments[region].defected_this_step
    }

    /// Where importer `i` placed its tariff on `j` inside the bounds
    /// (0 = at the minimum, 1 = at the maximum; 1 when the bounds are a point).
    pub fn tariff_position(&self, importer: usize, exporter: usize) -> f64 {
        let b = self.bounds[importer][exporter];
        let span = b.max.get() as f64 - b.min.get() as f64;
        if span <= 0.0 {
            1.0
        } else {
            (self.tariffs.get(importer, exporter).get() as f64 - b.min.get() as f64) / span
        }
    }
}

/// Stage indices used to address per-agent random streams.
pub(crate) mod stage {
    pub const PROPOSE: u64 = 0;
    pub const VOTE: u64 = 1;
    pub const DEFECT: u64 = 2;
    pub const TARIFF: u64 = 3;
    pub const MITIGATE: u64 = 4;
}

/// Run one full negotiation round.
///
/// `seed` keys the per-agent random streams; given the same agents, snapshot,
/// registry and seed the outcome is identical.
pub fn run_negotiation_round<A: Agent>(
    agents: &[A],
    world: &WorldSnapshot<'_>,
    config: &ProtocolConfig,
    registry: &mut PunishmentRegistry,
    seed: u64,
) -> Result<RoundOutcome> {
    let n = world.regions.len();
    if agents.len() != n {
        return Err(Error::Shape(format!("{} agents for {n} regions", agents.len())));
    }
    let step = world.step as u64;
    let obs = |region| Observation { region, world };
    let stream = |region: usize, st: u64| rng::stream(seed, &[step, region as u64, st]);

    let proposals: Vec<Proposal> = agents
        .iter()
        .enumerate()
        .map(|(i, a)| Proposal { proposer: i, level: a.propose(&obs(i), &mut stream(i, stage::PROPOSE)) })
        .collect();

    let mut ballots = BallotSheet::default();
    for (i, a) in agents.iter().enumerate() {
        let row = a.vote(&obs(i), &proposals, &mut stream(i, stage::VOTE));
        if row.len() != proposals.len() {
            return Err(Error::IllegalAction {
                region: i,
                reason: format!("ballot has {} entries for {} proposals", row.len(), proposals.len()),
            });
        }
        ballots.accept.push(row);
    }

    let mut commitments = resolve_commitments(n, &proposals, &ballots)?;
    let clubs = form_clubs(&commitments);

    if config.discrete_defect {
        let ctx = DefectStage { proposals: &proposals, commitments: &commitments, clubs: &clubs, config };
        let decisions: Vec<bool> = agents
            .iter()
            .enumerate()
            .map(|(i, a)| a.defect(&obs(i), &ctx, &mut stream(i, stage::DEFECT)))
            .collect();
        for (c, d) in commitments.iter_mut().zip(decisions) {
            c.defected_this_step = d;
        }
        let defectors: Vec<usize> = commitments.iter().filter(|c| c.defected_this_step).map(|c| c.region).collect();
        update_punishments(registry, defectors, world.step, config);
    } else {
        for (i, a) in agents.iter().enumerate() {
            let ctx = DefectStage { proposals: &proposals, commitments: &commitments, clubs: &clubs, config };
            if a.defect(&obs(i), &ctx, &mut stream(i, stage::DEFECT)) {
                return Err(Error::IllegalAction { region: i, reason: "defect action without DD".into() });
            }
        }
    }

    let bounds = bounds_matrix(&commitments, config, registry);
    let mut tariffs = TariffMatrix::zeros(n);
    for (i, a) in agents.iter().enumerate() {
        let ctx = TariffStage {
            commitments: &commitments,
            clubs: &clubs,
            bounds: &bounds,
            registry,
            config,
        };
        let row = a.tariffs(&obs(i), &ctx, &mut stream(i, stage::TARIFF));
        if row.len() != n {
            return Err(Error::IllegalAction {
                region: i,
                reason: format!("tariff row has {} entries for {n} regions", row.len()),
            });
        }
        for (j, proposed) in row.into_iter().enumerate() {
            if i == j {
                continue;
            }
            let b = bounds[i][j];
            let chosen = clamp_tariff(proposed, b).map_err(|_| Error::BoundInversion {
                importer: i,
                exporter: j,
                min: b.min.get(),
                max: b.max.get(),
            })?;
            tariffs.set(i, j, chosen)?;
        }
    }

    Ok(RoundOutcome { step: world.step, proposals, ballots, commitments, clubs, bounds, tariffs })
}
