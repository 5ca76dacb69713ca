use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use velab::config::load_config_from;
use velab::harness::{run_grid, ExperimentConfig};
use velab::methods::Method;

mod output;

use output::{Experiment, RunOutput};

#[derive(Debug, Parser)]
#[command(name = "velab", version, about = "Variance-elimination policy-gradient experiments on a controlled diffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Gradient means versus N with T fixed (VE unless --methods is given).
    GradientConvergence(RunArgs),
    /// Per-trajectory gradient variance of all methods versus N.
    VarianceSweep(RunArgs),
    /// Run the deterministic identity and finite-difference checks.
    Selftest,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "velab-out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<String>,
    /// Trajectories per (method, N) point.
    #[arg(long)]
    samples: Option<String>,
    /// Comma list drawn from nb,vb,sb,ab,ve.
    #[arg(long)]
    methods: Option<String>,
    /// Comma list of horizons N.
    #[arg(long = "n-grid")]
    n_grid: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    #[arg(long = "B", allow_hyphen_values = true)]
    b: Option<String>,
    #[arg(long = "W", allow_hyphen_values = true)]
    w: Option<String>,
    #[arg(long = "C_s", allow_hyphen_values = true)]
    c_s: Option<String>,
    #[arg(long = "C_a", allow_hyphen_values = true)]
    c_a: Option<String>,
    #[arg(long = "K", allow_hyphen_values = true)]
    k: Option<String>,
    #[arg(long = "mu_inf", allow_hyphen_values = true)]
    mu_inf: Option<String>,
    #[arg(long = "s0", allow_hyphen_values = true)]
    s0: Option<String>,
    #[arg(long = "T", allow_hyphen_values = true)]
    total_time: Option<String>,
    /// `propagated` or `steady`.
    #[arg(long = "vb-baseline")]
    vb_baseline: Option<String>,
}

impl RunArgs {
    fn overrides(&self) -> Vec<(String, String)> {
        [
            ("seed", &self.seed),
            ("samples", &self.samples),
            ("methods", &self.methods),
            ("n_grid", &self.n_grid),
            ("workers", &self.workers),
            ("B", &self.b),
            ("W", &self.w),
            ("C_s", &self.c_s),
            ("C_a", &self.c_a),
            ("K", &self.k),
            ("mu_inf", &self.mu_inf),
            ("s0", &self.s0),
            ("T", &self.total_time),
            ("vb_baseline", &self.vb_baseline),
        ]
        .into_iter()
        .filter_map(|(key, value)| value.as_ref().map(|v| (key.to_string(), v.clone())))
        .collect()
    }
}

fn run_experiment(experiment: Experiment, args: &RunArgs) -> Result<()> {
    let base = match experiment {
        Experiment::GradientConvergence => ExperimentConfig {
            methods: vec![Method::Ve],
            ..ExperimentConfig::default()
        },
        Experiment::VarianceSweep => ExperimentConfig::default(),
    };
    let config = load_config_from(base, args.config.as_deref(), &args.overrides())
        .context("invalid configuration")?;

    let started = Instant::now();
    let results = run_grid(&config);
    let run = RunOutput::new(experiment, config, results);
    let files = run.write(&args.out)?;
    for file in &files {
        println!("wrote {}", args.out.join(file).display());
    }
    eprintln!("finished in {:.1}s", started.elapsed().as_secs_f64());
    Ok(())
}

fn selftest() -> bool {
    let started = Instant::now();
    let results = velab::selftest::run();
    let mut all = true;
    for r in &results {
        println!("{} {:<40} {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
        all &= r.passed;
    }
    let elapsed = started.elapsed().as_secs_f64();
    println!("{} of {} checks passed in {elapsed:.2}s", results.iter().filter(|r| r.passed).count(), results.len());
    if elapsed > 60.0 {
        eprintln!("warning: selftest exceeded its 60s budget");
    }
    all
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::GradientConvergence(args) => run_experiment(Experiment::GradientConvergence, args),
        Command::VarianceSweep(args) => run_experiment(Experiment::VarianceSweep, args),
        Command::Selftest => {
            return if selftest() { ExitCode::SUCCESS } else { ExitCode::FAILURE };
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
