use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fraclap_cli::{cmd_check, cmd_eigen, cmd_export, cmd_probe, cmd_solve, CliError, ExportKind, Outcome};

#[derive(Parser, Debug)]
#[command(name = "fraclap", version, about = "Fractional Laplacian experiments")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Reserved; every computation is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the Dirichlet problem.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Smallest Dirichlet eigenpairs.
    Eigen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Local regularity probe over a refinement ladder.
    Probe {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Built-in property suite: commutator, semigroup, pohozaev, ultracontractive or theory.
    Check {
        suite: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plot data from a run directory: fit, norms or solution.
    Export {
        run: PathBuf,
        what: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads {k}: {e}")))?;
    }
    match cli.command {
        Command::Solve { config, out } => cmd_solve(&config, out.as_deref()),
        Command::Eigen { config, out } => cmd_eigen(&config, out.as_deref()),
        Command::Probe { config, out } => cmd_probe(&config, out.as_deref()),
        Command::Check { suite, out } => cmd_check(&suite, out.as_deref()),
        Command::Export { run, what, out } => cmd_export(&run, what.parse::<ExportKind>()?, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            if !outcome.passed {
                eprintln!("assertion failed; see {}", outcome.dir.display());
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("fraclap: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
