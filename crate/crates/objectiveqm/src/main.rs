use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use objectiveqm::io::{replay, run_to_dir, CliError};

/// Objective local hidden-property model: quantum-matching simulation,
/// synthesis, and no-go demonstrations.
#[derive(Parser)]
#[command(name = "objectiveqm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file (must carry format_version and a master seed).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; primary outputs and manifest.json land here.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Quantum (Born) probabilities for a state and a list of properties.
    Born(RunArgs),
    /// Seeded ensemble run with exact tally identities and convergence data.
    Simulate(RunArgs),
    /// Build a model matching quantum targets (product or CHSH task).
    Synthesize(RunArgs),
    /// Block-wise CHSH estimation on four fresh ensembles.
    Chsh(RunArgs),
    /// Kochen-Specker pipeline: exhaustive search, evasion model, context check.
    Ks(RunArgs),
    /// Largest detection efficiency at which CHSH targets stay classical.
    Threshold(RunArgs),
    /// Re-run a manifest's command and verify byte-identical outputs.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn configure_threads() {
    if let Ok(value) = std::env::var("OBJECTIVEQM_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            if threads > 0 {
                // Results are thread-count independent by construction; this
                // only caps the worker pool.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Born(args) => run_command("born", args),
        Command::Simulate(args) => run_command("simulate", args),
        Command::Synthesize(args) => run_command("synthesize", args),
        Command::Chsh(args) => run_command("chsh", args),
        Command::Ks(args) => run_command("ks", args),
        Command::Threshold(args) => run_command("threshold", args),
        Command::Replay { manifest, out } => {
            let outcome = replay(&manifest, &out)?;
            for (file, ok) in &outcome.per_file {
                println!("{file}: {}", if *ok { "byte-identical" } else { "MISMATCH" });
            }
            if outcome.matches {
                println!("replay reproduced every primary output");
                Ok(())
            } else {
                Err(CliError::Internal(
                    "replay outputs differ from the manifest digests".into(),
                ))
            }
        }
    }
}

fn run_command(command: &str, args: RunArgs) -> Result<(), CliError> {
    let report = run_to_dir(command, &args.config, &args.out, args.seed)?;
    print!("{}", report.products.summary);
    println!("status: {}", report.products.status);
    for (name, _) in &report.products.files {
        println!("wrote {}", args.out.join(name).display());
    }
    println!("wrote {}", args.out.join("manifest.json").display());
    Ok(())
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
