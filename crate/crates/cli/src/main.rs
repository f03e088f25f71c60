use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cvnn_cli::{emit_report, run_experiment, CliError, ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(name = "cvnn", version, about = "Complex-valued neural network experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Image classification under the five input settings.
    Exp1(Args),
    /// Activation × input-transform grid on images.
    Sweep1(Args),
    /// Audio classification from MFCC and complex spectral features.
    Exp2(Args),
    /// Graph classification over MFCC coefficient graphs.
    Exp3(Args),
}

#[derive(clap::Args)]
struct Args {
    /// JSON experiment config.
    #[arg(long, required_unless_present = "print_config")]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Prints the default config for this experiment and exits.
    #[arg(long)]
    print_config: bool,
}

fn run(kind: ExperimentKind, args: Args) -> Result<(), CliError> {
    if args.print_config {
        println!("{}", ExperimentConfig::defaults_for(kind).to_json());
        return Ok(());
    }
    let path = args.config.expect("clap enforces --config");
    let mut cfg = ExperimentConfig::load(&path)?;
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    if args.out.is_some() {
        cfg.output_dir = args.out;
    }
    cfg.validate(kind)?;
    let out = cfg
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs").join(kind.command()));
    let report = run_experiment(&cfg, kind)?;
    emit_report(&report, &out)?;
    for r in &report.runs {
        let last = r.last();
        println!(
            "{:<28} train_acc {:.4}  test_acc {:.4}  test_loss {:.4}",
            r.name, last.train_acc, last.test_acc, last.test_loss
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Exp1(a) => (ExperimentKind::Exp1Image, a),
        Command::Sweep1(a) => (ExperimentKind::Exp1ActivationSweep, a),
        Command::Exp2(a) => (ExperimentKind::Exp2Audio, a),
        Command::Exp3(a) => (ExperimentKind::Exp3Gnn, a),
    };
    match run(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cvnn: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
