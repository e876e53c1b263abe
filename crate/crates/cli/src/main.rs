use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use momentctl::pipeline::{self, RunConfig, Stage};
use momentctl::JobDescriptor;

/// Decide whether a moment functional on countably many variables admits a
/// representing measure: per-subalgebra matrix checks, atomic extraction,
/// exact projective families, and tightness/determinacy certificates.
#[derive(Parser)]
#[command(name = "momentctl", version, about)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Run the moment/localizing matrix checks only.
    Check(CommonArgs),
    /// Also extract atomic measures and seal the projective family.
    Solve(CommonArgs),
    /// Also run the well-definedness audit and the tightness certificate.
    Verify(CommonArgs),
    /// Verify and render all artifacts.
    Report(CommonArgs),
    /// Use the stage named by the job descriptor's `command` field
    /// (defaults to verify).
    Run(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the job descriptor JSON.
    #[arg(long)]
    job: PathBuf,
    /// Output directory for verdict.json, report.txt and the family bundle.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the audit and the extraction combination draws.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for the per-index stages (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Also write every moment/localizing matrix as CSV.
    #[arg(long)]
    dump_matrices: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("momentctl: error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    let (args, stage_override) = match cli.command {
        CliCommand::Check(args) => (args, Some(Stage::Check)),
        CliCommand::Solve(args) => (args, Some(Stage::Solve)),
        CliCommand::Verify(args) => (args, Some(Stage::Verify)),
        CliCommand::Report(args) => (args, Some(Stage::Report)),
        CliCommand::Run(args) => (args, None),
    };
    let text = std::fs::read_to_string(&args.job)
        .with_context(|| format!("reading job file {}", args.job.display()))?;
    let descriptor = JobDescriptor::from_json(&text)?;
    let stage = stage_override.unwrap_or_else(|| {
        descriptor
            .command
            .map(Stage::from)
            .unwrap_or(Stage::Verify)
    });
    let job = descriptor.prepare()?;
    let config = RunConfig {
        stage,
        seed: args.seed,
        threads: args.threads,
        out_dir: args.out,
        dump_matrices: args.dump_matrices,
    };
    let verdict = pipeline::run(&job, &config)?;
    if stage == Stage::Report && config.out_dir.is_none() {
        print!("{}", momentctl::report::render(&verdict));
    } else {
        println!("overall: {:?}", verdict.overall);
    }
    let code = u8::try_from(verdict.overall.exit_code()).unwrap_or(1);
    Ok(ExitCode::from(code))
}

