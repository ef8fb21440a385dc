//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use clubsim::analysis::{map_to_pathway, pareto_front, pearson_r};
use clubsim::engine::{EpisodeTrace, Roster};
use clubsim::model::{step_carbon_cycle, GTC_PER_GTCO2};
use clubsim::protocol::{bounds_matrix, update_punishments, Commitment, ExecutionRule, PunishmentRegistry};
use clubsim::rng::{seed_schedule, stream};
use clubsim::roster::RosterSpec;
use clubsim::trade::{build_trade_flows, settle_trade, tariff_ceiling_level, tariff_floor_level, TariffMatrix};
use clubsim::{
    run_ensemble, ClimateState, Config, MitigationLevel, ModelConstants, PolicySpec, ProtocolConfig, RegionState,
    SimConfig, TariffLevel, Variant,
};
use clubsim_cli::{cmd_compare, cmd_correlate, Options};
use rand::Rng;

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn m(l: u8) -> MitigationLevel {
    MitigationLevel::new(l).unwrap()
}

fn tariff_anchors() -> Result<String, String> {
    ensure(tariff_floor_level(m(7)).get() == 3, || "floor(7) != 3".into())?;
    ensure(tariff_ceiling_level(m(8)).get() == 2, || "ceiling(8) != 2".into())?;
    for v in 0..=10u8 {
        let (f, c) = (tariff_floor_level(m(v)).get(), tariff_ceiling_level(m(v)).get());
        ensure(f == 10 - v && c == 10 - v, || format!("v={v}: floor {f}, ceiling {c}"))?;
    }
    Ok("floor(7)=3, ceiling(8)=2, 10-v for v=0..10".into())
}

fn pathway_anchors() -> Result<String, String> {
    for (t, rcp, ssp) in [(2.09, "RCP 3.4/4.5", "SSP 2"), (3.20, "RCP 6.0", "SSP 2/4.5"), (4.43, "RCP 7.5/8.5", "SSP 7")] {
        let p = map_to_pathway(t);
        ensure(p.rcp == rcp && p.ssp == ssp && !p.extrapolated, || format!("{t}: {p:?}"))?;
    }
    Ok("2.09, 3.20, 4.43 map to their rows".into())
}

fn finals(variant: &str, seeds: &[u64]) -> Vec<f64> {
    let cfg = SimConfig { variant: variant.parse().unwrap(), ..SimConfig::default() };
    run_ensemble(&cfg, seeds, 0).into_iter().map(|t| t.unwrap().final_temperature()).collect()
}

fn protocol_ordering() -> Result<String, String> {
    let base = SimConfig::default();
    ensure(base.roster.count() == 10 && base.constants.horizon_steps == 20, || "default is not 10 regions x 20 steps".into())?;
    ensure(base.policies.iter().all(|p| matches!(p, PolicySpec::Greedy(_))), || "default agents are not greedy".into())?;
    let seeds = seed_schedule(Config::default().sim.seed, 5);
    let (bc, dd, none) = (finals("bc", &seeds), finals("bc+dd", &seeds), finals("none", &seeds));
    let ordered = (0..5).filter(|&k| bc[k] < dd[k] && dd[k] < none[k]).count();
    let gap = (0..5).map(|k| none[k] - bc[k]).sum::<f64>() / 5.0;
    ensure(ordered >= 4 && gap >= 1.0, || format!("ordered in {ordered}/5 seeds, mean gap {gap:.3}"))?;
    Ok(format!("ordered in {ordered}/5 seeds, mean gap {gap:.2} degC"))
}

fn correlation_sign() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let opts = Options { config: None, seed: None, runs: None, out: dir.path().into(), variants: None, workers: 0 };
    let results = cmd_correlate(&opts).map_err(|e| e.to_string())?;
    let (_, sigma) = results.iter().find(|(n, _)| n == "carbon_intensity").ok_or("no carbon_intensity row")?;
    let sigma = sigma.as_ref().map_err(|e| e.to_string())?;
    ensure(sigma.n == 400 && sigma.r > 0.5 && sigma.p < 0.05, || format!("n={} r={:.3} p={:.4}", sigma.n, sigma.r, sigma.p))?;

    // Planted signal: identical economies, abatement scale proportional to
    // carbon intensity, full mitigation, one step.
    let sig = [0.12, 0.2, 0.31, 0.45, 0.52, 0.66, 0.8];
    let regions: Vec<RegionState> = sig
        .iter()
        .map(|s| RegionState { capital: 30.0, tfp: 0.03, labor: 1000.0, carbon_intensity: *s, abatement_scale: 0.1 * s / 0.8 })
        .collect();
    let mut planted = SimConfig {
        policies: vec![PolicySpec::Fixed(MitigationLevel::MAX); regions.len()],
        roster: Roster::Explicit(regions),
        variant: "bc+dd".parse().unwrap(),
        ..SimConfig::default()
    };
    planted.constants.horizon_steps = 1;
    let traces: Vec<EpisodeTrace> = run_ensemble(&planted, &[1, 2], 0).into_iter().map(|t| t.unwrap()).collect();
    let cost: Vec<f64> = traces.iter().flat_map(|t| t.per_region_total(|r| r.abatement_cost)).collect();
    let xs: Vec<f64> = traces.iter().flat_map(|t| t.initial_regions.iter().map(|r| r.carbon_intensity)).collect();
    let r1 = pearson_r(&xs, &cost).map_err(|e| e.to_string())?;
    ensure((r1 - 1.0).abs() <= 1e-12, || format!("planted r = {r1}"))?;
    Ok(format!("r={:.3} p={:.4} over n={}; planted r={r1}", sigma.r, sigma.p, sigma.n))
}

fn conservation() -> Result<String, String> {
    let c = ModelConstants::default();
    let mut rng = stream(51, &[]);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let s = ClimateState {
            m_at: rng.random_range(100.0..5000.0),
            m_up: rng.random_range(100.0..5000.0),
            m_lo: rng.random_range(100.0..20000.0),
            t_at: rng.random_range(-1.0..8.0),
            t_lo: rng.random_range(-1.0..4.0),
        };
        let e = rng.random_range(0.0..1000.0);
        let next = step_carbon_cycle(&s, e, &c);
        let expected = s.total_carbon() + e * GTC_PER_GTCO2;
        let rel = (next.total_carbon() - expected).abs() / expected;
        worst = worst.max(rel);
        ensure(rel <= 1e-9, || format!("carbon closure {rel:e} for {s:?}, e={e}"))?;
    }
    for k in 0..10_000 {
        let n = rng.random_range(1..=12usize);
        let outputs: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(-3.0..3.0))).collect();
        let openness = rng.random_range(0.0..=1.0);
        let flows = build_trade_flows(&outputs, openness).map_err(|e| e.to_string())?;
        let mut tariffs = TariffMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    tariffs.set(i, j, TariffLevel::new(rng.random_range(0..=10)).unwrap()).unwrap();
                }
            }
        }
        let t = settle_trade(&flows, &tariffs).map_err(|e| e.to_string())?;
        let (settled, gross) = t.value_balance();
        ensure(settled == gross, || format!("settlement {k}: {settled} != {gross}"))?;
        let income = clubsim::fsum::fsum(t.export_income.iter().chain(&t.tariff_revenue).copied());
        ensure((income - gross).abs() <= 4.0 * f64::EPSILON * gross, || format!("settlement {k}: totals {income} vs {gross}"))?;
    }
    Ok(format!("worst carbon residual {worst:.1e}; 10^4 settlements balanced"))
}

fn registry_of(punished: &[usize], cfg: &ProtocolConfig) -> PunishmentRegistry {
    let mut r = PunishmentRegistry::default();
    update_punishments(&mut r, punished.iter().copied(), 0, cfg);
    r
}

fn commitment_fuzz() -> Result<String, String> {
    let combos = ProtocolConfig::all_valid();
    let per = 1000 / combos.len();
    let mut episodes = 0;
    for (k, p) in combos.iter().enumerate() {
        let label = p.label();
        let cfg = SimConfig {
            variant: Variant::Club(*p),
            roster: Roster::Generated(RosterSpec { count: 6, seed: k as u64, abatement_scale: 0.1 }),
            policies: (0..6).map(|i| PolicySpec::Random { salt: i }).collect(),
            ..SimConfig::default()
        };
        for t in run_ensemble(&cfg, &seed_schedule(100 + k as u64, per), 0) {
            let t = t.map_err(|e| format!("{label}: {e}"))?;
            episodes += 1;
            let mut punished: Vec<usize> = Vec::new();
            for st in &t.steps {
                for (i, r) in st.regions.iter().enumerate() {
                    let ok = match (r.defected, p.discrete_defect, p.hard_defect) {
                        (false, _, _) => r.rule == ExecutionRule::AtLeast(r.commit_level) && r.executed >= r.commit_level,
                        (true, false, _) => false,
                        (true, true, true) => r.executed == MitigationLevel::ZERO,
                        (true, true, false) => r.rule == ExecutionRule::Released,
                    };
                    ensure(ok, || format!("{label} seed {} step {} region {i}: {r:?}", t.seed, st.step))?;
                    if p.max_punishment && r.defected {
                        ensure(st.punished.contains(&i), || format!("{label}: defector {i} not punished"))?;
                    }
                }
                ensure(punished.iter().all(|x| st.punished.contains(x)), || format!("{label}: punishment lifted"))?;
                punished = st.punished.clone();
                let commitments: Vec<Commitment> = st
                    .regions
                    .iter()
                    .enumerate()
                    .map(|(i, r)| Commitment { region: i, level: r.commit_level, defected_this_step: r.defected })
                    .collect();
                let bounds = bounds_matrix(&commitments, p, &registry_of(&st.punished, p));
                for (i, row) in bounds.iter().enumerate() {
                    for (j, b) in row.iter().enumerate() {
                        ensure(b.is_consistent(), || format!("{label}: inverted bounds {i}->{j}"))?;
                        ensure(b.contains(st.tariffs.get(i, j)), || format!("{label}: tariff {i}->{j} outside bounds"))?;
                    }
                }
            }
        }
    }
    Ok(format!("{episodes} episodes over {} element combinations, no violations", combos.len()))
}

fn pareto_oracle() -> Result<String, String> {
    let oracle = |p: &[(f64, f64)]| -> Vec<bool> {
        p.iter().map(|a| !p.iter().any(|b| b.0 <= a.0 && b.1 >= a.1 && (b.0 < a.0 || b.1 > a.1))).collect()
    };
    let mut rng = stream(77, &[]);
    let mut largest = 0;
    for k in 0..100 {
        let n = if k == 0 { 1000 } else { rng.random_range(1..=1000) };
        largest = largest.max(n);
        let grid = k % 2 == 0;
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                if grid {
                    (rng.random_range(0..30) as f64 * 0.1, rng.random_range(0..30) as f64)
                } else {
                    (rng.random::<f64>() * 4.0, rng.random::<f64>() * 500.0)
                }
            })
            .collect();
        ensure(pareto_front(&pts) == oracle(&pts), || format!("instance {k} ({n} points) differs"))?;
    }
    Ok(format!("100 instances, up to {largest} points"))
}

fn read_outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("csv" | "svg")))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism() -> Result<String, String> {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    for (d, workers) in dirs.iter().zip([0, 0, 1]) {
        let opts = Options { config: None, seed: Some(11), runs: Some(4), out: d.path().into(), variants: None, workers };
        cmd_compare(&opts).map_err(|e| e.to_string())?;
    }
    let outs: Vec<_> = dirs.iter().map(|d| read_outputs(d.path())).collect();
    ensure(outs[0].len() >= 7, || format!("only {} output files", outs[0].len()))?;
    ensure(outs[0] == outs[1], || "repeat run differs".into())?;
    ensure(outs[0] == outs[2], || "single-worker run differs".into())?;
    let manifests: Vec<String> =
        dirs.iter().map(|d| std::fs::read_to_string(d.path().join("manifest.txt")).unwrap()).collect();
    ensure(manifests[0] == manifests[1], || "manifests differ".into())?;
    Ok(format!("{} CSV/SVG files byte-identical across repeats and worker counts", outs[0].len()))
}

fn statistics_anchors() -> Result<String, String> {
    let x = [2.1, 3.4, 1.9, 5.6, 4.4, 3.3, 6.1, 2.8, 4.9, 3.7];
    let y = [1.2, 2.9, 1.1, 4.8, 3.1, 3.0, 5.5, 2.0, 4.2, 2.6];
    // Hand computation: Sxy = 2264/125, Sxx = 2252/125, Syy = 2368/125.
    let expected = 2264.0 / (2252f64 * 2368.0).sqrt();
    let r = pearson_r(&x, &y).map_err(|e| e.to_string())?;
    ensure((r - expected).abs() <= 1e-12, || format!("r = {r}, expected {expected}"))?;
    let twice: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    let (a, b) = (pearson_r(&x, &twice).unwrap(), pearson_r(&x, &neg).unwrap());
    ensure(a == 1.0 && b == -1.0, || format!("pearson(x,2x)={a}, pearson(x,-x)={b}"))?;
    Ok(format!("r = {r:.16}"))
}

fn main() {
    let checks: [(&str, Check, Duration); 9] = [
        ("tariff-bound anchors", tariff_anchors, Duration::from_secs(1)),
        ("pathway anchors", pathway_anchors, Duration::from_secs(1)),
        ("protocol ordering", protocol_ordering, Duration::from_secs(120)),
        ("correlation sign", correlation_sign, Duration::from_secs(180)),
        ("conservation", conservation, Duration::from_secs(30)),
        ("commitment enforcement", commitment_fuzz, Duration::from_secs(120)),
        ("pareto oracle", pareto_oracle, Duration::from_secs(10)),
        ("determinism", determinism, Duration::from_secs(120)),
        ("statistics anchors", statistics_anchors, Duration::from_secs(1)),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, check, budget)) in checks.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let took = start.elapsed();
        let (status, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        let slow = if took > *budget { format!(" (over {}s budget)", budget.as_secs()) } else { String::new() };
        println!("criterion {} {status} {name}: {detail} [{:.2}s]{slow}", k + 1, took.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
