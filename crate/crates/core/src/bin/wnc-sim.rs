use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wnc_sched::experiment::{run_experiment, CostValue, ExperimentConfig, ExperimentKind};
use wnc_sched::Error;

/// Simulator and self-checks for online network-coding schedulers at relays.
#[derive(Parser)]
#[command(name = "wnc-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Golden traces, oracle cross-checks, feasibility and cap suites.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Random instances per suite.
        #[arg(long, default_value_t = 2_000)]
        instances: usize,
        #[arg(long, default_value = "results/verify")]
        out: PathBuf,
    },
    /// Run a sweep from a JSON config, with flag overrides.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// verify | single-relay-sweep | line-network-sweep | ski-rental-sweep | golden-examples
    #[arg(long)]
    kind: Option<String>,
    /// Transmission costs, e.g. `5,10,7/2`.
    #[arg(long = "c", value_delimiter = ',')]
    costs: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    p1: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    p2: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    sigma2: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    relays: Option<Vec<usize>>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print per-point summaries.
    #[arg(long, short)]
    verbose: bool,
}

impl SweepArgs {
    fn resolve(self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(k) = self.kind {
            cfg.kind = k.parse::<ExperimentKind>()?;
        }
        if let Some(c) = self.costs {
            cfg.costs = c.into_iter().map(CostValue).collect();
        }
        if let Some(v) = self.p1 {
            cfg.p1 = v;
        }
        if let Some(v) = self.p2 {
            cfg.p2 = v;
        }
        if let Some(v) = self.sigma2 {
            cfg.sigma2 = v;
        }
        if let Some(v) = self.relays {
            cfg.relays = v;
        }
        if let Some(v) = self.horizon {
            cfg.horizon = v;
        }
        if let Some(v) = self.reps {
            cfg.replications = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.out {
            cfg.output_dir = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cfg: &ExperimentConfig, verbose: bool) -> ExitCode {
    match run_experiment(cfg) {
        Ok(report) => {
            let always = matches!(cfg.kind, ExperimentKind::Verify | ExperimentKind::GoldenExamples);
            if verbose || always || report.failed {
                for line in &report.lines {
                    println!("{line}");
                }
            }
            for f in &report.files {
                eprintln!("wrote {}", f.display());
            }
            if report.failed {
                eprintln!("verification failed");
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Verify { seed, instances, out } => {
            let cfg = ExperimentConfig {
                kind: ExperimentKind::Verify,
                seed,
                verify_instances: instances,
                output_dir: out,
                ..ExperimentConfig::default()
            };
            run(&cfg, true)
        }
        Command::Sweep(args) => {
            let verbose = args.verbose;
            match args.resolve() {
                Ok(cfg) => run(&cfg, verbose),
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
