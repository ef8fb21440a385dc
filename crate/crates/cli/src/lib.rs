//! Experiment orchestration behind the `clubsim` binary.
//!
//! Each command writes its outputs, a `resolved.conf` holding the fully
//! resolved configuration, and a `manifest.txt` describing how to reproduce
//! the run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clubsim::analysis::charts::{emit_compare_charts, emit_correlation_charts, write_file};
use clubsim::analysis::{
    abatement_correlations, episode_metrics, CORRELATION_VARIABLES, map_to_pathway, output_variants, summarize_variants, PermutationTest,
    VariantSummary,
};
use clubsim::engine::num;
use clubsim::rng::seed_schedule;
use clubsim::{run_ensemble, run_episode, Config, EpisodeError, EpisodeTrace, ProtocolConfig, SimConfig, Variant};
use sha2::{Digest, Sha256};

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const CONFIG: u8 = 1;
    pub const SIMULATION: u8 = 2;
    pub const IO: u8 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("simulation aborted: {0}")]
    Simulation(#[from] EpisodeError),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Simulation(_) => exit::SIMULATION,
            CliError::Io(_) => exit::IO,
        }
    }
}

impl From<clubsim::Error> for CliError {
    fn from(e: clubsim::Error) -> Self {
        match e {
            clubsim::Error::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// A configuration loaded from disk together with the raw file hash.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: Config,
    pub source: String,
    pub sha256: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Read and parse a configuration file. `None` gives the defaults.
pub fn parse_config(path: Option<&Path>) -> CliResult<LoadedConfig> {
    let (text, source) = match path {
        Some(p) => (
            std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?,
            p.display().to_string(),
        ),
        None => (String::new(), "(defaults)".to_string()),
    };
    let config = Config::parse(&text).map_err(|e| CliError::Config(format!("{source}: {e}")))?;
    Ok(LoadedConfig { config, source, sha256: sha256_hex(text.as_bytes()) })
}

/// Options shared by every command.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub out: PathBuf,
    pub variants: Option<Vec<String>>,
    /// Worker threads for ensembles; 0 uses all cores.
    pub workers: usize,
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn prepare(opts: &Options) -> CliResult<LoadedConfig> {
    let mut loaded = parse_config(opts.config.as_deref())?;
    if let Some(seed) = opts.seed {
        loaded.config.sim.seed = seed;
    }
    if let Some(runs) = opts.runs {
        loaded.config.runs = runs;
    }
    loaded.config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    std::fs::create_dir_all(&opts.out).map_err(|e| io_err(&opts.out, e))?;
    Ok(loaded)
}

fn write(dir: &Path, name: &str, contents: &str, written: &mut Vec<String>) -> CliResult<()> {
    write_file(&dir.join(name), contents)?;
    written.push(name.to_string());
    Ok(())
}

struct Manifest<'a> {
    command: &'a str,
    loaded: &'a LoadedConfig,
    variants: &'a [Variant],
    seeds: &'a [u64],
    notes: Vec<String>,
}

impl Manifest<'_> {
    fn write(&self, dir: &Path, outputs: &mut Vec<String>) -> CliResult<()> {
        let resolved = self.loaded.config.render();
        write(dir, "resolved.conf", &resolved, outputs)?;
        let mut s = String::new();
        let _ = writeln!(s, "tool = clubsim {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "command = {}", self.command);
        let _ = writeln!(s, "config_file = {}", self.loaded.source);
        let _ = writeln!(s, "config_sha256 = {}", self.loaded.sha256);
        let _ = writeln!(s, "resolved_config = resolved.conf");
        let _ = writeln!(s, "resolved_sha256 = {}", sha256_hex(resolved.as_bytes()));
        let labels: Vec<String> = self.variants.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "variants = {}", labels.join(","));
        let _ = writeln!(s, "master_seed = {}", self.loaded.config.sim.seed);
        let seeds: Vec<String> = self.seeds.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(s, "seed_schedule = {}", seeds.join(","));
        let runs = match self.command {
            "run" => String::new(),
            _ => format!(" --runs {}", self.seeds.len()),
        };
        let vars = match self.command {
            "run" => String::new(),
            _ => format!(" --variants {}", labels.join(",")),
        };
        let _ = writeln!(s, "reproduce = clubsim {} --config resolved.conf{runs}{vars} --out <dir>", self.command);
        for n in &self.notes {
            let _ = writeln!(s, "note = {n}");
        }
        outputs.push("manifest.txt".into());
        let _ = writeln!(s, "outputs = {}", outputs.join(","));
        write_file(&dir.join("manifest.txt"), &s)?;
        Ok(())
    }
}

/// Run one episode; writes `trace.csv` and `climate.csv`.
pub fn cmd_run(opts: &Options) -> CliResult<EpisodeTrace> {
    let loaded = prepare(opts)?;
    let variants = match &opts.variants {
        Some(v) => parse_variants(v)?,
        None => vec![loaded.config.sim.variant],
    };
    let [variant] = variants[..] else {
        return Err(CliError::Config("run takes a single variant".into()));
    };
    let sim = SimConfig { variant, ..loaded.config.sim.clone() };
    let trace = run_episode(&sim)?;
    let mut out = Vec::new();
    write(&opts.out, "trace.csv", &trace.trace_csv(), &mut out)?;
    write(&opts.out, "climate.csv", &trace.climate_csv(), &mut out)?;
    Manifest { command: "run", loaded: &loaded, variants: &[variant], seeds: &[sim.seed], notes: vec![] }
        .write(&opts.out, &mut out)?;
    Ok(trace)
}

pub fn parse_variants(list: &[String]) -> CliResult<Vec<Variant>> {
    list.iter()
        .map(|s| s.parse().map_err(|e| CliError::Config(format!("variant `{s}`: {e}"))))
        .collect()
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect()
}

/// Split a `--variants` value into items. Commas separate variants, so
/// elements inside one variant are joined with `+`.
pub fn variant_list(s: &str) -> Vec<String> {
    split_list(s)
}

type Groups = Vec<(String, Vec<EpisodeTrace>)>;

fn run_variants(sim: &SimConfig, variants: &[Variant], seeds: &[u64], workers: usize) -> CliResult<Groups> {
    variants
        .iter()
        .map(|v| {
            let cfg = SimConfig { variant: *v, ..sim.clone() };
            let traces = run_ensemble(&cfg, seeds, workers).into_iter().collect::<Result<Vec<_>, _>>()?;
            Ok((v.to_string(), traces))
        })
        .collect()
}

fn metrics_csv(groups: &Groups, summaries: &[VariantSummary]) -> String {
    let mut s = String::from("label,seed,temp_rise,gross_output_total,pareto_dominant\n");
    for ((label, traces), summary) in groups.iter().zip(summaries) {
        for t in traces {
            let m = episode_metrics(t);
            let _ = writeln!(
                s,
                "{label},{},{},{},{}",
                m.seed,
                num(m.temperature_rise),
                num(m.gross_output_total),
                summary.pareto_dominant
            );
        }
    }
    s
}

fn output_variants_csv(groups: &Groups, dt: f64, rate: f64) -> String {
    let mut s = String::from("label,seed,gross_output_total,gross_output_final,gross_output_discounted\n");
    for (label, traces) in groups {
        for t in traces {
            let o = output_variants(t, dt, rate);
            let _ = writeln!(s, "{label},{},{},{},{}", t.seed, num(o.total), num(o.final_step), num(o.discounted));
        }
    }
    s
}

fn summary_csv(summaries: &[VariantSummary]) -> String {
    let mut s = String::from(
        "label,runs,temp_rise,gross_output_total,gross_output_final,gross_output_discounted,rcp,ssp,pathway_extrapolated,pareto_dominant\n",
    );
    for v in summaries {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            v.label,
            v.runs,
            num(v.temperature_rise),
            num(v.gross_output_total),
            num(v.final_output),
            num(v.discounted_output),
            v.pathway.rcp,
            v.pathway.ssp,
            v.pathway.extrapolated,
            v.pareto_dominant
        );
    }
    s
}

/// Table of variant means ordered from hottest to coolest.
pub fn pathway_report(summaries: &[VariantSummary]) -> String {
    let mut rows: Vec<&VariantSummary> = summaries.iter().collect();
    rows.sort_by(|a, b| b.temperature_rise.total_cmp(&a.temperature_rise).then_with(|| a.label.cmp(&b.label)));
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<14} {:>5} {:>11} {:>14} {:<12} {:<10} {}",
        "protocol", "runs", "temp (degC)", "gross output", "RCP", "SSP", "Pareto"
    );
    for v in &rows {
        let p = map_to_pathway(v.temperature_rise);
        let _ = writeln!(
            s,
            "{:<14} {:>5} {:>11.2} {:>14.1} {:<12} {:<10} {}{}",
            v.label,
            v.runs,
            v.temperature_rise,
            v.gross_output_total,
            p.rcp,
            p.ssp,
            if v.pareto_dominant { "dominant" } else { "dominated" },
            if p.extrapolated { " (pathway band extrapolated)" } else { "" }
        );
    }
    let order: Vec<&str> = rows.iter().rev().map(|v| v.label.as_str()).collect();
    let _ = writeln!(s, "temperature ordering (coolest first): {}", order.join(" < "));
    s
}

/// Outcome of an ensemble comparison.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub summaries: Vec<VariantSummary>,
    pub report: String,
    pub rejected: Vec<String>,
}

fn compare_like(opts: &Options, command: &str, variants: Vec<Variant>, rejected: Vec<String>) -> CliResult<Comparison> {
    let loaded = prepare(opts)?;
    let cfg = &loaded.config;
    if variants.is_empty() {
        return Err(CliError::Config("no valid variants to run".into()));
    }
    let seeds = seed_schedule(cfg.sim.seed, cfg.runs);
    let groups = run_variants(&cfg.sim, &variants, &seeds, opts.workers)?;
    let dt = cfg.sim.constants.dt_years;
    let rate = cfg.analysis.discount_rate;
    let summaries = summarize_variants(&groups, dt, rate);

    let mut out = Vec::new();
    write(&opts.out, "metrics.csv", &metrics_csv(&groups, &summaries), &mut out)?;
    write(&opts.out, "output_variants.csv", &output_variants_csv(&groups, dt, rate), &mut out)?;
    write(&opts.out, "pareto.csv", &summary_csv(&summaries), &mut out)?;
    let report = pathway_report(&summaries);
    write(&opts.out, "report.txt", &report, &mut out)?;
    for p in emit_compare_charts(&groups, &summaries, dt, &opts.out)? {
        out.push(p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default());
    }
    let notes = rejected.iter().map(|r| format!("rejected {r}")).collect();
    Manifest { command, loaded: &loaded, variants: &variants, seeds: &seeds, notes }.write(&opts.out, &mut out)?;
    Ok(Comparison { summaries, report, rejected })
}

/// Ensembles for each listed variant (default `none,bc,bc+dd`).
pub fn cmd_compare(opts: &Options) -> CliResult<Comparison> {
    let list = opts
        .variants
        .clone()
        .unwrap_or_else(|| vec!["none".into(), "bc".into(), "bc+dd".into()]);
    let variants = parse_variants(&list)?;
    compare_like(opts, "compare", variants, Vec::new())
}

/// Sweep of protocol element combinations (default: every valid one).
/// Invalid combinations are reported and skipped; the rest still run.
pub fn cmd_pareto(opts: &Options) -> CliResult<Comparison> {
    let (variants, rejected) = match &opts.variants {
        None => (ProtocolConfig::all_valid().into_iter().map(Variant::Club).collect(), Vec::new()),
        Some(list) => {
            let mut ok = Vec::new();
            let mut bad = Vec::new();
            for s in list {
                match s.parse::<Variant>() {
                    Ok(v) => ok.push(v),
                    Err(e) => bad.push(format!("{s} ({e})")),
                }
            }
            (ok, bad)
        }
    };
    compare_like(opts, "pareto", variants, rejected)
}

/// Default ensemble size for correlations.
pub const CORRELATE_RUNS: usize = 40;

/// Correlate per-region abatement cost with development indicators over a
/// BC+DD ensemble (or the single variant given).
pub fn cmd_correlate(opts: &Options) -> CliResult<Vec<(String, clubsim::Result<clubsim::analysis::CorrelationResult>)>> {
    let runs = opts.runs.unwrap_or(CORRELATE_RUNS);
    if runs < 3 {
        return Err(CliError::Config(format!("correlate needs at least 3 runs, got {runs}")));
    }
    let opts = Options { runs: Some(runs), ..opts.clone() };
    let loaded = prepare(&opts)?;
    let cfg = &loaded.config;
    let variant = match &opts.variants {
        None => "bc+dd".parse::<Variant>().expect("valid label"),
        Some(list) => match parse_variants(list)?[..] {
            [v] => v,
            _ => return Err(CliError::Config("correlate takes a single variant".into())),
        },
    };
    let seeds = seed_schedule(cfg.sim.seed, runs);
    let sim = SimConfig { variant, ..cfg.sim.clone() };
    let traces = run_ensemble(&sim, &seeds, opts.workers).into_iter().collect::<Result<Vec<_>, _>>()?;
    let test = PermutationTest { permutations: cfg.analysis.permutations, seed: cfg.analysis.permutation_seed };
    let results = abatement_correlations(&traces, test);
    let samples = traces.iter().map(|t| t.initial_regions.len()).sum::<usize>();

    let mut out = Vec::new();
    let mut csv = String::from("variable,r,p,n\n");
    for (name, r) in CORRELATION_VARIABLES.iter().zip(&results) {
        match r {
            Ok(r) => {
                let _ = writeln!(csv, "{name},{},{},{}", num(r.r), num(r.p), r.n);
            }
            Err(_) => {
                let _ = writeln!(csv, "{name},undefined,undefined,{samples}");
            }
        }
    }
    write(&opts.out, "correlations.csv", &csv, &mut out)?;
    for p in emit_correlation_charts(&traces, &results, &opts.out)? {
        out.push(p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default());
    }
    Manifest { command: "correlate", loaded: &loaded, variants: &[variant], seeds: &seeds, notes: vec![] }
        .write(&opts.out, &mut out)?;
    Ok(CORRELATION_VARIABLES.iter().map(|n| n.to_string()).zip(results).collect())
}
