use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use clubsim_cli::{cmd_compare, cmd_correlate, cmd_pareto, cmd_run, variant_list, CliError, Options};

/// Climate-club negotiation simulator.
#[derive(Parser)]
#[command(name = "clubsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and write its trace.
    Run(Common),
    /// Compare protocol variants over seeded ensembles.
    Compare(Common),
    /// Sweep protocol element combinations and classify Pareto dominance.
    Pareto(Common),
    /// Correlate abatement cost with development indicators.
    Correlate(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file (dotted keys); defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding sim.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Episodes per variant, overriding sim.runs (correlate defaults to 40).
    #[arg(long)]
    runs: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Comma-separated variants, e.g. `none,bc,bc+dd+mp`.
    #[arg(long)]
    variants: Option<String>,
    /// Worker threads for ensembles (0 = all cores).
    #[arg(long, env = "CLUBSIM_WORKERS", default_value_t = 0)]
    workers: usize,
}

impl From<Common> for Options {
    fn from(c: Common) -> Self {
        Options {
            config: c.config,
            seed: c.seed,
            runs: c.runs,
            out: c.out,
            variants: c.variants.as_deref().map(variant_list),
            workers: c.workers,
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(c) => {
            let opts = Options::from(c);
            let trace = cmd_run(&opts)?;
            println!(
                "{}: seed {} final T_AT {:.3} degC, gross output {:.1}; wrote {}",
                trace.label,
                trace.seed,
                trace.final_temperature(),
                trace.gross_output_total(),
                opts.out.display()
            );
        }
        Command::Compare(c) => print!("{}", cmd_compare(&c.into())?.report),
        Command::Pareto(c) => {
            let cmp = cmd_pareto(&c.into())?;
            for r in &cmp.rejected {
                eprintln!("rejected {r}");
            }
            print!("{}", cmp.report);
        }
        Command::Correlate(c) => {
            println!("{:<18} {:>8} {:>8} {:>5}", "variable", "r", "p", "n");
            for (name, r) in cmd_correlate(&c.into())? {
                match r {
                    Ok(r) => println!("{name:<18} {:>8.4} {:>8.4} {:>5}", r.r, r.p, r.n),
                    Err(e) => println!("{name:<18} undefined ({e})"),
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors share the configuration exit code; 2 means a simulation abort.
            return if e.use_stderr() { ExitCode::from(clubsim_cli::exit::CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("clubsim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
