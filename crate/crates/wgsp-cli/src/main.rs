use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use wgsp_cli::config::{ExperimentConfig, Overrides};
use wgsp_cli::experiments::{run_dynamic, run_modified_ctr, run_static};
use wgsp_cli::fixtures::validate_motivating_example;

/// Scored sponsored-search auction experiments.
#[derive(Parser)]
#[command(name = "wgsp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track the revenue optimum on a fixed product-form instance.
    Static(RunArgs),
    /// Re-track the optimum across noisy parameter changes with warm restarts.
    Dynamic(RunArgs),
    /// Measure revenue capture under the competitor-group rate model.
    ModifiedCtr(RunArgs),
    /// Re-derive the built-in reference scenarios and check every cell.
    ValidateFixtures,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the ladder-gap ratio.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Override the ladder-increment ratio.
    #[arg(long)]
    delta: Option<f64>,
}

impl RunArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut config = ExperimentConfig::load(&self.config)?;
        config.apply(&Overrides {
            seed: self.seed,
            out: self.out.clone(),
            epsilon_ratio: self.epsilon,
            delta_ratio: self.delta,
        });
        Ok(config)
    }
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Static(args) => {
            let config = args.load()?;
            let outcome = run_static(&config)?;
            println!("revenue            {:.4}", outcome.report.revenue);
            println!("social optimum     {:.4}", outcome.optimum);
            println!("ratio              {:.6}", outcome.ratio);
            println!("adjustments        {}", outcome.report.adjustments);
            println!("final ranking      {:?}", outcome.report.final_sigma.rank_vector());
            println!("optimal ranking    {:?}", outcome.optimum_rank_of);
            println!("matches optimum    {}", outcome.matches_optimum);
            println!("outputs in {}", config.output.dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Dynamic(args) => {
            let config = args.load()?;
            let outcome = run_dynamic(&config)?;
            println!("instances              {}", outcome.records.len());
            println!("cold adjustments       {}", outcome.cold_adjustments());
            println!("warm mean adjustments  {:.2}", outcome.warm_mean_adjustments());
            println!("all rankings optimal   {}", outcome.all_match_optimum());
            println!("outputs in {}", config.output.dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::ModifiedCtr(args) => {
            let config = args.load()?;
            let outcome = run_modified_ctr(&config)?;
            println!("trials       {}", outcome.trials.len());
            if !outcome.trials.is_empty() {
                println!("mean ratio   {:.6}", outcome.mean_ratio);
                println!("std ratio    {:.6}", outcome.std_ratio);
            }
            println!("outputs in {}", config.output.dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::ValidateFixtures => {
            let report = validate_motivating_example();
            for (i, revenue) in report.revenues.iter().enumerate() {
                println!("scenario-{} revenue {:.4}", i + 1, revenue);
            }
            if report.passed() {
                println!("all fixture cells reproduced; every scenario is an equilibrium");
                Ok(ExitCode::SUCCESS)
            } else {
                for line in &report.mismatches {
                    eprintln!("mismatch: {line}");
                }
                Ok(ExitCode::FAILURE)
            }
        }
    }
}
