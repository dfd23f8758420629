use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use dbandit::config::{figure1_preset, parse_config, ExperimentConfig};
use dbandit::experiment::run_experiment;
use dbandit::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    Figure1,
}

/// Monte Carlo runner for distributed bandits with scheduled communication.
#[derive(Debug, Parser)]
#[command(name = "dbandit", version)]
struct Cli {
    /// Experiment config file.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,

    /// Built-in experiment.
    #[arg(long, value_enum)]
    preset: Option<Preset>,

    /// Override the number of replications.
    #[arg(long)]
    replications: Option<u32>,

    /// Override the root seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory (default: the config's `out`, else `results`).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Print and write the comparison against the bound leading terms.
    #[arg(long)]
    bounds: bool,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn load(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match (&cli.config, cli.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            parse_config(&text)?
        }
        (None, Some(Preset::Figure1)) => figure1_preset(),
        (None, None) => unreachable!("clap requires --config or --preset"),
    };
    if let Some(r) = cli.replications {
        if r == 0 {
            return Err(Error::InvalidRun(
                "--replications must be at least 1".into(),
            ));
        }
        cfg.replications = r;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.bounds |= cli.bounds;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            // a config file that cannot be read is still a config problem
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"));

    eprintln!(
        "running {} strategies: M={}, K={}, T={}, {} replications, seed {}",
        cfg.strategies.len(),
        cfg.players,
        cfg.arms.num_arms(),
        cfg.horizon,
        cfg.replications,
        cfg.seed
    );
    let outcome = match run_experiment(&cfg, &out) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if e.is_config_error() {
                EXIT_CONFIG
            } else {
                EXIT_RUNTIME
            });
        }
    };

    let last = cfg.horizon;
    let at_end = cfg.checkpoints.last().copied().unwrap_or(last);
    println!(
        "{:<12} {:<24} {:<18} {:>14}",
        "strategy",
        "schedule",
        "density",
        format!("regret@{at_end}")
    );
    for r in &outcome.results {
        let mut schedule = r.schedule.clone();
        if schedule.len() > 24 {
            schedule.truncate(21);
            schedule.push_str("...");
        }
        let regret = r.aggregate.regret.last().copied().unwrap_or(0.0);
        println!(
            "{:<12} {:<24} {:<18} {:>14.3}",
            r.name, schedule, r.density, regret
        );
    }
    for r in &outcome.results {
        if let Some(table) = &r.comparison {
            println!("\n[{}] empirical vs bound", r.name);
            print!("{table}");
        }
    }
    for f in &outcome.files {
        eprintln!("wrote {}", f.display());
    }
    ExitCode::SUCCESS
}
