use clubsim::agents::{evolve_policies, hill_climb, Agent, ExecutionStage, GreedyPolicy, Observation, WorldSnapshot};
use clubsim::engine::{run_episode, Roster, SimConfig};
use clubsim::model::ClimateState;
use clubsim::protocol::{bounds_matrix, run_negotiation_round, Commitment, ExecutionRule, PunishmentRegistry};
use clubsim::roster::{generate_roster, RosterSpec};
use clubsim::step::economy_step;
use clubsim::trade::{TariffBounds, TariffMatrix};
use clubsim::{MitigationLevel, ModelConstants, PolicySpec, ProtocolConfig, RegionState, TariffLevel, Variant};
use rand::Rng;

fn m(l: u8) -> MitigationLevel {
    MitigationLevel::new(l).unwrap()
}

struct World {
    constants: ModelConstants,
    regions: Vec<RegionState>,
    climate: ClimateState,
    executed: Vec<MitigationLevel>,
    registry: PunishmentRegistry,
    openness: f64,
    last_round: Option<clubsim::protocol::RoundOutcome>,
}

impl World {
    fn new(regions: Vec<RegionState>) -> Self {
        let n = regions.len();
        Self {
            constants: ModelConstants::default(),
            regions,
            climate: ClimateState::default(),
            executed: vec![MitigationLevel::ZERO; n],
            registry: PunishmentRegistry::default(),
            openness: 0.1,
            last_round: None,
        }
    }

    fn snapshot<'a>(&'a self, protocol: Option<&'a ProtocolConfig>) -> WorldSnapshot<'a> {
        WorldSnapshot {
            step: 0,
            constants: &self.constants,
            regions: &self.regions,
            climate: &self.climate,
            openness: self.openness,
            protocol,
            last_round: self.last_round.as_ref(),
            last_executed: &self.executed,
            registry: &self.registry,
        }
    }
}

fn three_regions() -> Vec<RegionState> {
    generate_roster(&RosterSpec { count: 3, seed: 5, abatement_scale: 0.1 }, 0, &ModelConstants::default())
}

#[test]
fn random_policies_stay_legal_over_many_rounds() {
    let mut violations = Vec::new();
    let mut r = clubsim::rng::stream(11, &[]);
    for round in 0..1000u64 {
        let configs = ProtocolConfig::all_valid();
        let cfg = configs[round as usize % configs.len()];
        let n = r.random_range(2..7);
        let regions = generate_roster(&RosterSpec { count: n, seed: round, abatement_scale: 0.1 }, 0, &ModelConstants::default());
        let mut world = World::new(regions);
        for i in 0..n {
            if cfg.max_punishment && r.random_bool(0.2) {
                let mut reg = PunishmentRegistry::default();
                clubsim::protocol::update_punishments(&mut reg, [i], 0, &cfg);
                world.registry = reg;
            }
        }
        let agents: Vec<PolicySpec> = (0..n).map(|i| PolicySpec::Random { salt: i as u64 }).collect();
        let before: Vec<usize> = world.registry.members().collect();
        let snap = world.snapshot(Some(&cfg));
        let mut registry = world.registry.clone();
        let out = run_negotiation_round(&agents, &snap, &cfg, &mut registry, round).unwrap();
        for c in &out.commitments {
            if c.defected_this_step && !cfg.discrete_defect {
                violations.push(format!("round {round}: defect without DD"));
            }
            let accepted = out.ballots.accept[c.region]
                .iter()
                .zip(&out.proposals)
                .filter(|(a, _)| **a)
                .map(|(_, p)| p.level)
                .max()
                .unwrap_or(MitigationLevel::ZERO);
            if accepted != c.level {
                violations.push(format!("round {round}: commitment is not the highest accepted proposal"));
            }
        }
        for i in 0..n {
            for j in 0..n {
                let b = out.bounds[i][j];
                if !b.is_consistent() || !b.contains(out.tariffs.get(i, j)) {
                    violations.push(format!("round {round}: tariff ({i},{j}) outside {b:?}"));
                }
            }
        }
        if !before.iter().all(|p| registry.contains(*p)) {
            violations.push(format!("round {round}: punishment lifted"));
        }
        // Mitigation choices respect the execution rules.
        let rules: Vec<ExecutionRule> = out
            .commitments
            .iter()
            .map(|c| clubsim::protocol::apply_defection(c, c.defected_this_step, &cfg).unwrap())
            .collect();
        let stage = ExecutionStage { round: Some(&out), rules: &rules, tariffs: &out.tariffs };
        for (i, a) in agents.iter().enumerate() {
            let l = a.mitigate(&Observation { region: i, world: &snap }, &stage, &mut clubsim::rng::stream(round, &[i as u64]));
            if !rules[i].allows(l) {
                violations.push(format!("round {round}: region {i} executed {l} under {:?}", rules[i]));
            }
        }
    }
    assert!(violations.is_empty(), "{violations:?}");
}

#[test]
fn random_policy_samples_inside_bounds_and_never_defects_without_dd() {
    let world = World::new(three_regions());
    let cfg = ProtocolConfig::BASIC;
    let agents = vec![PolicySpec::Random { salt: 0 }; 3];
    for seed in 0..200 {
        let snap = world.snapshot(Some(&cfg));
        let mut reg = PunishmentRegistry::default();
        let out = run_negotiation_round(&agents, &snap, &cfg, &mut reg, seed).unwrap();
        assert!(out.commitments.iter().all(|c| !c.defected_this_step));
        let again = run_negotiation_round(&agents, &snap, &cfg, &mut PunishmentRegistry::default(), seed).unwrap();
        assert_eq!(out, again);
    }
    let bounds = vec![TariffBounds::new(TariffLevel::new(3).unwrap(), TariffLevel::MAX); 3];
    let spec = PolicySpec::Random { salt: 4 };
    let snap = world.snapshot(Some(&cfg));
    let commitments: Vec<Commitment> =
        (0..3).map(|region| Commitment { region, level: MitigationLevel::ZERO, defected_this_step: false }).collect();
    let all_bounds = vec![bounds; 3];
    let stage = clubsim::agents::TariffStage {
        commitments: &commitments,
        clubs: &[],
        bounds: &all_bounds,
        registry: &world.registry,
        config: &cfg,
    };
    for seed in 0..200 {
        let row = spec.tariffs(&Observation { region: 0, world: &snap }, &stage, &mut clubsim::rng::stream(seed, &[]));
        assert!(row.iter().all(|t| t.get() >= 3));
    }
}

#[test]
fn fixed_agents_commit_to_their_level() {
    let world = World::new(three_regions());
    let cfg = ProtocolConfig::BASIC;
    let snap = world.snapshot(Some(&cfg));
    let agents = vec![PolicySpec::Fixed(m(9)), PolicySpec::Fixed(m(9)), PolicySpec::Fixed(m(0))];
    let out = run_negotiation_round(&agents, &snap, &cfg, &mut PunishmentRegistry::default(), 0).unwrap();
    assert_eq!(out.commitments.iter().map(|c| c.level.get()).collect::<Vec<_>>(), vec![9, 9, 0]);
    assert_eq!(out.clubs.len(), 1);
    assert_eq!(out.clubs[0].members.iter().copied().collect::<Vec<_>>(), vec![0, 1]);
    assert_eq!(out.ballots.accept[2], vec![false, false, true]);
    // Tariffs sit at the lower bound.
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(out.tariffs.get(i, j), out.bounds[i][j].min);
        }
    }
}

/// Own one-step reward of committing at `v`, computed directly from the
/// public building blocks: others keep commitment `others` and tariff at the
/// top of their bounds, own tariffs go to whichever end of the bounds pays more.
fn enumerate_commitment(world: &World, me: usize, v: u8, others: u8, cfg: &ProtocolConfig) -> f64 {
    let n = world.regions.len();
    let mut commitments: Vec<Commitment> =
        (0..n).map(|region| Commitment { region, level: m(others), defected_this_step: false }).collect();
    commitments[me].level = m(v);
    let bounds = bounds_matrix(&commitments, cfg, &world.registry);
    let mut levels = world.executed.clone();
    levels[me] = m(v);
    let mut best = f64::NEG_INFINITY;
    // Exhaustive over own tariff rows at the bound ends.
    for mask in 0u32..(1 << n) {
        let mut t = TariffMatrix::zeros(n);
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let b = bounds[i][j];
                let level = if i == me { if mask & (1 << j) != 0 { b.max } else { b.min } } else { b.max };
                t.set(i, j, level).unwrap();
            }
        }
        let e = economy_step(&world.regions, &levels, world.climate.t_at, &t, world.openness, &world.constants).unwrap();
        best = best.max(e.reward(me, world.regions[me].labor).0);
    }
    best
}

fn check_against_enumeration(world: &World, others: u8, cfg: &ProtocolConfig) -> Vec<u8> {
    let snap = world.snapshot(Some(cfg));
    (0..world.regions.len())
        .map(|me| {
            let obs = Observation { region: me, world: &snap };
            let g = GreedyPolicy::new(Default::default());
            let values = g.commitment_values(&obs);
            let chosen = g.propose(&obs);
            let oracle: Vec<f64> = (0..=10).map(|v| enumerate_commitment(world, me, v, others, cfg)).collect();
            let best = oracle.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let oracle_choice = oracle.iter().position(|v| *v == best).unwrap() as u8;
            for (v, (l, val)) in values.iter().enumerate() {
                assert_eq!(l.get() as usize, v);
                assert!((val - oracle[v]).abs() <= 1e-9 * oracle[v].abs(), "region {me} level {v}");
            }
            assert_eq!(chosen.get(), oracle_choice, "region {me}");
            assert!(values.iter().all(|(_, v)| *v <= values[chosen.get() as usize].1));
            chosen.get()
        })
        .collect()
}

#[test]
fn greedy_commitment_matches_exhaustive_enumeration() {
    // First round: nobody has committed and unseen partners are assumed to
    // tariff at the top of their bounds.
    let world = World::new(three_regions());
    let chosen = check_against_enumeration(&world, 0, &ProtocolConfig::BASIC);
    assert!(chosen.iter().all(|&l| l > 0), "{chosen:?}");
}

#[test]
fn greedy_commits_high_against_prohibitive_tariffs() {
    // Last round everyone committed 10 and tariffed at the top of the bounds:
    // anything below 10 now faces a 100% tariff on all exports, which costs
    // more than full abatement at a scale of 5% of output.
    let cfg = ProtocolConfig::BASIC;
    let regions = generate_roster(&RosterSpec { count: 3, seed: 5, abatement_scale: 0.05 }, 0, &ModelConstants::default());
    let mut world = World::new(regions);
    let hawk = clubsim::agents::EvolvedParams {
        propose_level: 10,
        accept_threshold: 10,
        defect_propensity: 0.0,
        tariff_aggressiveness: 1.0,
    };
    let agents = vec![PolicySpec::Evolved(hawk); 3];
    let round = run_negotiation_round(&agents, &world.snapshot(Some(&cfg)), &cfg, &mut PunishmentRegistry::default(), 0).unwrap();
    world.executed = vec![m(10); 3];
    world.last_round = Some(round);
    assert_eq!(check_against_enumeration(&world, 10, &cfg), vec![10, 10, 10]);
}

#[test]
fn greedy_tariffs_at_floor_when_they_earn_nothing() {
    let mut world = World::new(three_regions());
    world.openness = 0.0;
    let cfg = ProtocolConfig::BASIC;
    let snap = world.snapshot(Some(&cfg));
    let commitments: Vec<Commitment> =
        (0..3).map(|region| Commitment { region, level: m(region as u8 * 4), defected_this_step: false }).collect();
    let bounds = bounds_matrix(&commitments, &cfg, &world.registry);
    let stage = clubsim::agents::TariffStage {
        commitments: &commitments,
        clubs: &[],
        bounds: &bounds,
        registry: &world.registry,
        config: &cfg,
    };
    let g = PolicySpec::Greedy(Default::default());
    for me in 0..3 {
        let row = g.tariffs(&Observation { region: me, world: &snap }, &stage, &mut clubsim::rng::stream(0, &[]));
        for j in 0..3 {
            assert_eq!(row[j], if j == me { TariffLevel::ZERO } else { bounds[me][j].min });
        }
    }
}

#[test]
fn greedy_mitigation_is_best_among_allowed_levels() {
    let world = World::new(three_regions());
    let snap = world.snapshot(None);
    let tariffs = TariffMatrix::zeros(3);
    for rule in [ExecutionRule::AtLeast(m(6)), ExecutionRule::Released, ExecutionRule::ForcedZero, ExecutionRule::Unconstrained] {
        let rules = vec![rule; 3];
        let stage = ExecutionStage { round: None, rules: &rules, tariffs: &tariffs };
        for me in 0..3 {
            let obs = Observation { region: me, world: &snap };
            let g = GreedyPolicy::new(Default::default());
            let values = g.mitigation_values(&obs, &stage);
            let chosen = g.mitigate(&obs, &stage);
            assert!(rule.allows(chosen));
            assert_eq!(values.len(), rule.levels().count());
            let best = values.iter().find(|(l, _)| *l == chosen).unwrap().1;
            assert!(values.iter().all(|(_, v)| *v <= best));
            // Mitigating only costs output within one step: the floor wins.
            assert_eq!(chosen, rule.range().0);
        }
        if rule == ExecutionRule::ForcedZero {
            assert_eq!(GreedyPolicy::new(Default::default()).mitigation_values(&Observation { region: 0, world: &snap }, &stage).len(), 1);
        }
    }
}

#[test]
fn greedy_choices_are_rational_along_an_episode() {
    // Re-evaluate every greedy decision recorded in a BC+DD episode.
    let cfg = SimConfig {
        variant: "bc+dd".parse().unwrap(),
        roster: Roster::Generated(RosterSpec { count: 4, seed: 2, abatement_scale: 0.1 }),
        policies: vec![PolicySpec::default(); 4],
        ..SimConfig::default()
    };
    let trace = run_episode(&cfg).unwrap();
    for st in &trace.steps {
        for r in &st.regions {
            assert!(r.rule.allows(r.executed));
            assert_eq!(r.executed, r.rule.range().0);
        }
    }
}

fn evolve_fixture() -> SimConfig {
    // Three regions, no negotiation: only the executed level matters, so the
    // fitness landscape is small enough to search exhaustively.
    let regions = generate_roster(&RosterSpec { count: 3, seed: 1, abatement_scale: 0.3 }, 0, &ModelConstants::default());
    SimConfig {
        roster: Roster::Explicit(regions),
        variant: Variant::NoProtocol,
        policies: vec![PolicySpec::Fixed(MitigationLevel::ZERO); 3],
        ..SimConfig::default()
    }
}

fn mean_reward(cfg: &SimConfig, levels: [u8; 3]) -> f64 {
    let c = SimConfig { policies: levels.iter().map(|l| PolicySpec::Fixed(m(*l))).collect(), ..cfg.clone() };
    let r = run_episode(&c).unwrap().episode_rewards();
    r.iter().sum::<f64>() / 3.0
}

#[test]
fn evolution_finds_the_planted_optimum() {
    let cfg = evolve_fixture();
    let mut best = ([0u8; 3], f64::NEG_INFINITY);
    for a in 0..=10 {
        for b in 0..=10 {
            for c in 0..=10 {
                let v = mean_reward(&cfg, [a, b, c]);
                if v > best.1 {
                    best = ([a, b, c], v);
                }
            }
        }
    }

    let specs = evolve_policies(&cfg, 8, 40, 3).unwrap();
    let levels: Vec<u8> = specs
        .iter()
        .map(|s| match s {
            PolicySpec::Evolved(p) => p.propose_level,
            other => panic!("unexpected {other}"),
        })
        .collect();
    assert_eq!(levels, best.0.to_vec(), "exhaustive optimum {:?}", best);
    assert_eq!(evolve_policies(&cfg, 8, 40, 3).unwrap(), specs);
}

#[test]
fn evolution_without_generations_keeps_initial_best() {
    let cfg = evolve_fixture();
    let zero = evolve_policies(&cfg, 5, 0, 9).unwrap();
    let more = evolve_policies(&cfg, 5, 10, 9).unwrap();
    let fitness = |specs: &[PolicySpec]| {
        let r = run_episode(&SimConfig { policies: specs.to_vec(), ..cfg.clone() }).unwrap().episode_rewards();
        r.iter().sum::<f64>() / 3.0
    };
    assert!(fitness(&more) >= fitness(&zero));
    assert!(evolve_policies(&cfg, 0, 1, 0).is_err());
    // The generic climber is order independent: the same answer on any pool size.
    let run = || hill_climb(vec![3i32, -8, 12], 30, 5, |g, r| g + r.random_range(-2..=2), |g| -(*g as f64).abs());
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    assert_eq!(pool.install(run), run());
}
