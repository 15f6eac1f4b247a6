mod cmd;
mod config;
mod failure;
mod recording;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use duet_core::par::Execution;

use cmd::Ctx;
use config::RunConfig;
use failure::CmdResult;

/// Two-person audio-driven body and face motion toolkit.
#[derive(Parser, Debug)]
#[command(name = "duet", version)]
struct Cli {
    /// `key = value` configuration file.
    #[arg(long, global = true, env = "DUET_CONFIG")]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides one configuration key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Run data-parallel loops on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a dataset container from recording directories.
    Preprocess(cmd::preprocess::PreprocessArgs),
    /// Train the body or face model.
    Train(cmd::train::TrainArgs),
    /// Sample body motion for every window of a dataset.
    Generate(cmd::generate::GenerateArgs),
    /// Sample faces from a face checkpoint.
    GenerateFace(cmd::generate::GenerateFaceArgs),
    /// Compute metrics of generated against ground-truth data.
    Evaluate(cmd::evaluate::EvaluateArgs),
    /// Dataset statistics tables and heat maps.
    Analyze(cmd::analyze::AnalyzeArgs),
    /// Write synthetic recordings and their preprocessed dataset.
    Synth(cmd::synth::SynthArgs),
}

fn dispatch(cli: Cli) -> CmdResult {
    let cfg = RunConfig::resolve(cli.config.as_deref(), &cli.sets, cli.seed)?;
    let exec = if cli.sequential { Execution::Sequential } else { Execution::default() };
    let ctx = Ctx { cfg, exec };
    match &cli.command {
        Command::Preprocess(a) => cmd::preprocess::report(&cmd::preprocess::run(&ctx, a)?, &a.out),
        Command::Synth(a) => cmd::preprocess::report(&cmd::synth::run(&ctx, a)?, &a.out.join("dataset.duet")),
        Command::Train(a) => cmd::train::run(&ctx, a)?,
        Command::Generate(a) => {
            let n = cmd::generate::run(&ctx, a)?;
            eprintln!("generate: {n} samples -> {}", a.out.display());
        }
        Command::GenerateFace(a) => {
            let n = cmd::generate::run_face(&ctx, a)?;
            eprintln!("generate-face: {n} recordings -> {}", a.out.display());
        }
        Command::Evaluate(a) => {
            cmd::evaluate::run(&ctx, a)?;
        }
        Command::Analyze(a) => cmd::analyze::run(&ctx, a)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
