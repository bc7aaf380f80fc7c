use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use rpushpull::harness::{self, ExperimentConfig, Setup, TheoryReport};
use rpushpull::Error;

/// Noisy distributed optimization experiments over directed networks.
#[derive(Debug, Parser)]
#[command(name = "rpp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the Monte-Carlo experiment and write CSV, JSON and plot files.
    Run(Common),
    /// Print the convergence certificate as JSON.
    Theory(Common),
    /// Check the graph and mixing assumptions only.
    Validate(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON experiment config; defaults apply to omitted fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

const EXIT_ASSUMPTION: u8 = 2;
const EXIT_ALL_ABORTED: u8 = 3;

impl Common {
    fn load(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_json_file(path).with_context(|| format!("loading {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(i) = self.iterations {
            cfg.iterations = i;
        }
        if let Some(d) = &self.out_dir {
            cfg.out_dir = Some(d.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(args: &Common) -> anyhow::Result<ExitCode> {
    let cfg = args.load()?;
    let report = harness::run_experiment(&cfg)?;
    let dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    let paths = harness::emit_outputs(&report, &dir)?;
    for s in &report.series {
        eprintln!(
            "{:<12} final mean {:.4e}  min mean {:.4e}  aborted {}/{}",
            s.algorithm.name(),
            s.final_mean(),
            s.min_mean(),
            s.aborted_trials,
            cfg.trials
        );
    }
    eprintln!(
        "wrote {} and {} ({:.2?})",
        paths.csv.display(),
        paths.json.display(),
        report.wall_clock.total
    );
    if report.all_aborted() {
        eprintln!("every trial aborted");
        return Ok(ExitCode::from(EXIT_ALL_ABORTED));
    }
    Ok(ExitCode::SUCCESS)
}

fn theory(args: &Common) -> anyhow::Result<ExitCode> {
    let cfg = args.load()?;
    let setup = Setup::build(&cfg)?;
    let report = TheoryReport::evaluate(&setup, cfg.alpha)?;
    let text = serde_json::to_string_pretty(&report)?;
    match &cfg.out_dir {
        Some(dir) => write_file(dir, "theory.json", &text)?,
        None => println!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn validate(args: &Common) -> anyhow::Result<ExitCode> {
    let cfg = args.load()?;
    let setup = Setup::build(&cfg)?;
    println!("{}", setup.root_check.diagnostic());
    println!("{}", serde_json::to_string_pretty(&setup.mix.summary())?);
    Ok(ExitCode::SUCCESS)
}

fn write_file(dir: &Path, name: &str, text: &str) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, format!("{text}\n")).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Theory(a) => theory(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            match err.downcast_ref::<Error>() {
                Some(Error::AssumptionViolation(_)) => ExitCode::from(EXIT_ASSUMPTION),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
