use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use z2lattice::{run, CliError, Command, RunConfig, RunOptions};

#[derive(Parser)]
#[command(name = "z2lattice", version, about = "Mean-field phases of the two-photon driven dissipative Bose-Hubbard lattice")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Self-consistent steady states over a list of J.
    Steady(Common),
    /// Excitation spectra of the symmetric state.
    Stability(Common),
    /// Mean-field time evolution from coherent initial states.
    Dynamics(Common),
    /// Phase diagram over a (J, G) grid.
    Sweep(Common),
    /// Wigner function of one steady-state branch.
    Wigner(Common),
    /// Critical point and exponent per G.
    Fit(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (overrides workers; 0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Repeat at N + 10 and report the drift of the reported observables.
    #[arg(long)]
    check_truncation: bool,
    /// Fixed-step RK4 for dynamics.
    #[arg(long)]
    fixed_step: bool,
}

fn load(path: Option<&PathBuf>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            RunConfig::from_toml(&text)
        }
        None => Ok(RunConfig::default()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (cmd, common) = match cli.command {
        Sub::Steady(c) => (Command::Steady, c),
        Sub::Stability(c) => (Command::Stability, c),
        Sub::Dynamics(c) => (Command::Dynamics, c),
        Sub::Sweep(c) => (Command::Sweep, c),
        Sub::Wigner(c) => (Command::Wigner, c),
        Sub::Fit(c) => (Command::Fit, c),
    };
    let result = load(common.config.as_ref()).and_then(|cfg| {
        let opts = RunOptions {
            out: common.out,
            workers: common.workers,
            check_truncation: common.check_truncation,
            fixed_step: common.fixed_step,
        };
        run(cmd, &cfg, &opts)
    });
    match result {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
