use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use whittle_cli::{report, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "whittle", about = "Whittle-likelihood Bayesian inference for state space models")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory; overrides the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for Monte Carlo evaluation and parallel chains.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the configured model and write data.csv.
    Simulate,
    /// Write the periodogram and Welch spectrum and report the update plan.
    Periodogram,
    /// Run the configured engine and write draws, summary and timing.
    Fit,
    /// Effective sample size of each column of a draws file.
    Ess {
        draws: PathBuf,
        /// Split the draws into this many equal chains instead of using the
        /// `chain` column.
        #[arg(long)]
        chains: Option<usize>,
    },
    /// Posterior mean differences between two draws files, in pooled sd.
    Compare { a: PathBuf, b: PathBuf },
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config is required for this command".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Simulate => {
            let cfg = load_config(cli)?;
            let path = whittle_cli::simulate_to(&cfg, cli.seed, &whittle_cli::out_dir(&cfg, out))?;
            println!("wrote {}", path.display());
        }
        Command::Periodogram => {
            let cfg = load_config(cli)?;
            let dir = whittle_cli::out_dir(&cfg, out);
            let r = whittle_cli::periodogram_to(&cfg, &dir)?;
            println!("frequencies {}", r.periodogram.len());
            println!("cutoff {}", r.cutoff);
            println!(
                "updates individual {} blocks {} total {}",
                r.plan.n_individual,
                r.plan.n_blocks(),
                r.plan.total_updates()
            );
            println!("wrote {}", dir.display());
        }
        Command::Fit => {
            let cfg = load_config(cli)?;
            let dir = whittle_cli::out_dir(&cfg, out);
            let bundle = whittle_cli::fit_to(&cfg, &dir)?;
            print!("{}", report::summary_text(&bundle)?);
            println!("# seconds {:.3}", bundle.seconds);
            println!("wrote {}", dir.display());
        }
        Command::Ess { draws, chains } => {
            for (name, e) in whittle_cli::ess_report(draws, *chains)? {
                println!("{name:<14} {e:>12.1}");
            }
        }
        Command::Compare { a, b } => {
            println!(
                "{:<14} {:>12} {:>12} {:>12} {:>12} {:>10}",
                "parameter", "mean_a", "mean_b", "sd_a", "sd_b", "diff/sd"
            );
            for c in whittle_cli::compare(a, b)? {
                println!(
                    "{:<14} {:>12.6} {:>12.6} {:>12.6} {:>12.6} {:>10.4}",
                    c.name, c.mean_a, c.mean_b, c.sd_a, c.sd_b, c.z
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

