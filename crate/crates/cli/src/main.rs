mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{resolve, CommonArgs, Resolved, SEED_ENV};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "trustweave", version, about = "Trust-weighted resilient consensus experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a Monte Carlo ensemble and write mean trajectories.
    Run {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate the analytical bounds for a scenario.
    Bounds {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        t_max: Option<usize>,
        /// Plug-in classification time for all edges.
        #[arg(long)]
        t_f: Option<usize>,
        /// Plug-in classification time for malicious edges.
        #[arg(long)]
        t_f_m: Option<usize>,
        /// Extra gamma values tabulated into gamma_grid.
        #[arg(long, value_delimiter = ',')]
        gammas: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
        /// Add the gamma -> infinity and gamma -> 0 limits to the series.
        #[arg(long)]
        asymptotes: bool,
    },
    /// Run one ensemble per gamma at fixed c.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_delimiter = ',')]
        gammas: Option<Vec<f64>>,
        #[arg(long)]
        c: Option<f64>,
    },
    /// Pair the exponential schedule with a hard window baseline.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// Window length of the baseline.
        #[arg(long)]
        t0: Option<usize>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
    },
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Run { common } => common,
            Command::Bounds { common, .. } => common,
            Command::Sweep { common, .. } => common,
            Command::Compare { common, .. } => common,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Run { .. } => "run",
            Command::Bounds { .. } => "bounds",
            Command::Sweep { .. } => "sweep",
            Command::Compare { .. } => "compare",
        }
    }

    fn apply_overrides(&self, cfg: &mut Resolved) {
        match self {
            Command::Run { .. } => {}
            Command::Bounds { t_max, t_f, t_f_m, gammas, epsilons, asymptotes, .. } => {
                let b = cfg.bounds.get_or_insert_with(Default::default);
                b.t_max = t_max.unwrap_or(b.t_max);
                b.t_f = t_f.unwrap_or(b.t_f);
                b.t_f_m = t_f_m.unwrap_or(b.t_f_m);
                if let Some(g) = gammas {
                    b.gammas = g.clone();
                }
                if let Some(e) = epsilons {
                    b.epsilons = e.clone();
                }
                b.asymptotes |= asymptotes;
            }
            Command::Sweep { gammas, c, .. } => {
                let s = cfg.sweep.get_or_insert_with(Default::default);
                if let Some(g) = gammas {
                    s.gammas = g.clone();
                }
                s.c = c.unwrap_or(s.c);
            }
            Command::Compare { t0, gamma, c, .. } => {
                let s = cfg.compare.get_or_insert_with(Default::default);
                s.t0 = t0.unwrap_or(s.t0);
                s.gamma = gamma.unwrap_or(s.gamma);
                s.c = c.unwrap_or(s.c);
            }
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let common = cli.command.common();
    let mut cfg = resolve(cli.command.name(), common, std::env::var(SEED_ENV).ok())?;
    cli.command.apply_overrides(&mut cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Run { .. } => commands::run(&cfg),
        Command::Bounds { .. } => commands::bounds(&cfg),
        Command::Sweep { .. } => commands::sweep_gammas(&cfg),
        Command::Compare { .. } => commands::compare(&cfg),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
