use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use recovery_core::pipeline::{self, PipelineConfig, Stage};
use recovery_core::synth::{generate, ScenarioFile};

#[derive(Parser)]
#[command(name = "recovery-track", version, about = "Track post-disaster activity recovery per region")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnlyStage {
    Milestones,
    Metric,
    Stats,
}

impl From<OnlyStage> for Stage {
    fn from(s: OnlyStage) -> Stage {
        match s {
            OnlyStage::Milestones => Stage::Milestones,
            OnlyStage::Metric => Stage::Metric,
            OnlyStage::Stats => Stage::Stats,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline and write the report bundle.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Run a single stage from the artifacts already in the output directory.
        #[arg(long, value_enum)]
        only: Option<OnlyStage>,
        /// Permutation replicates for Moran's I.
        #[arg(long)]
        permutations: Option<usize>,
        /// Apply the Yates continuity correction to chi-square tests.
        #[arg(long)]
        yates: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a config and its inputs without running; exits nonzero on any diagnostic.
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Print diagnostics as a JSON array.
        #[arg(long)]
        json: bool,
    },
    /// Generate a synthetic scenario and its ground truth.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config, only, permutations, yates, seed } => {
            let mut cfg = PipelineConfig::load(&config)?;
            if let Some(k) = permutations {
                cfg.stats.permutations = k;
            }
            if yates {
                cfg.stats.yates = true;
            }
            if let Some(s) = seed {
                cfg.stats.seed = s;
            }
            let written = pipeline::run(&cfg, only.map(Stage::from))?;
            for p in written {
                println!("{}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { config, json } => {
            let cfg = PipelineConfig::load_unchecked(&config)?;
            let diagnostics = pipeline::validate(&cfg);
            if json {
                println!("{}", serde_json::to_string_pretty(&diagnostics)?);
            } else {
                for d in &diagnostics {
                    println!("{d}");
                }
            }
            Ok(if diagnostics.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Synth { spec, out } => {
            let scenario = ScenarioFile::load(&spec)?.into_spec()?;
            let generated = generate(&scenario)?;
            generated.write_dir(&out).with_context(|| format!("writing scenario to {}", out.display()))?;
            println!("{} regions written to {}", scenario.regions.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
