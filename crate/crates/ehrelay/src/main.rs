use clap::{Parser, Subcommand};
use ehrelay::cli::{
    parse_config, render_csv, render_optimize_csv, run_optimize, run_sweep, run_validate, Engine,
    ResultRow,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ehrelay", version)]
#[command(about = "Outage/throughput sweeps for an energy-harvesting cognitive relay network")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a parameter sweep and write CSV
    Sweep {
        /// Path to the key=value run configuration
        #[arg(short, long)]
        config: PathBuf,

        /// Output CSV path (stdout when omitted)
        #[arg(short, long)]
        out: Option<PathBuf>,

        /// Override the Monte Carlo seed
        #[arg(long)]
        seed: Option<u64>,

        /// Override the Monte Carlo trial count
        #[arg(long)]
        trials: Option<u64>,
    },

    /// Report closed-form and numeric throughput-optimal rho per mode
    Optimize {
        /// Path to the key=value run configuration (axis is ignored)
        #[arg(short, long)]
        config: PathBuf,

        /// Output CSV path (stdout when omitted)
        #[arg(short, long)]
        out: Option<PathBuf>,

        /// Override the Monte Carlo seed
        #[arg(long)]
        seed: Option<u64>,

        /// Override the Monte Carlo trial count
        #[arg(long)]
        trials: Option<u64>,
    },

    /// Run the analytic-vs-Monte-Carlo agreement suite
    Validate {
        /// Trials per Monte Carlo estimate
        #[arg(long, default_value_t = 200_000)]
        trials: u64,

        /// Monte Carlo seed
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn override_engines(engines: &mut [Engine], seed: Option<u64>, trials: Option<u64>) {
    for e in engines {
        if let Engine::MonteCarlo {
            trials: t,
            seed: s,
        } = e
        {
            if let Some(seed) = seed {
                *s = seed;
            }
            if let Some(trials) = trials {
                *t = trials;
            }
        }
    }
}

fn write_out(path: Option<PathBuf>, content: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Sweep {
            config,
            out,
            seed,
            trials,
        } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", config.display());
                    return ExitCode::from(1);
                }
            };
            let mut spec = match parse_config(&text) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            override_engines(&mut spec.engines, seed, trials);
            for engine in &spec.engines {
                if let Engine::Analytic(tier) = engine {
                    let dp = spec.config.derived();
                    let rates = spec.geometry.link_rates();
                    if let Some(w) = ehrelay::analytic::regime_warning(&dp, &rates, *tier) {
                        eprintln!("warning: {w}");
                    }
                }
            }
            let rows = run_sweep(&spec);
            if write_out(out, &render_csv(&spec, &rows)).is_err() {
                return ExitCode::from(1);
            }
            if rows.iter().all(ResultRow::is_ok) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Command::Optimize {
            config,
            out,
            seed,
            trials,
        } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", config.display());
                    return ExitCode::from(1);
                }
            };
            let mut spec = match parse_config(&text) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            override_engines(&mut spec.engines, seed, trials);
            let rows = run_optimize(&spec);
            if write_out(out, &render_optimize_csv(&spec, &rows)).is_err() {
                return ExitCode::from(1);
            }
            if rows.iter().any(|r| r.is_failure()) {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Command::Validate { trials, seed } => {
            let lines = run_validate(trials, seed);
            let mut all_ok = true;
            for l in &lines {
                println!("{} {} -- {}", if l.pass { "PASS" } else { "FAIL" }, l.name, l.detail);
                all_ok &= l.pass;
            }
            if all_ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
    }
}
