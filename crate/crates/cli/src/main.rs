use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use weylbench::experiment::{self, ExperimentConfig, EXPERIMENTS};
use weylbench::{Error, HermiteContext, Result};

#[derive(Parser)]
#[command(name = "weylbench", version, about = "Numerical checks for Weyl and Heisenberg multipliers")]
struct Cli {
    /// Worker threads for data-parallel loops. Reports are byte-identical only with 1.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// List the experiments with a one-line description each.
    ListExperiments,
    /// Check a config's preconditions without computing anything.
    Validate { config: PathBuf },
    /// Write a named operator (A, A*, H, P_j, chi_k, S_j, riesz) in matrix file format.
    ExportMatrix {
        name: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 64)]
        trunc: usize,
        #[arg(long, default_value_t = 14.0)]
        l_xi: f64,
        #[arg(long, default_value_t = 224)]
        points: usize,
    },
    /// Print the default config of an experiment as JSON.
    DefaultConfig { experiment: String },
    /// `weylbench <experiment> [--config FILE] [--output-dir DIR]` runs one check directly.
    #[command(external_subcommand)]
    Check(Vec<String>),
}

#[derive(Parser)]
#[command(no_binary_name = true)]
struct CheckArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

fn run(config: &ExperimentConfig) -> Result<()> {
    let out = experiment::run(config)?;
    for line in &out.summary {
        println!("{line}");
    }
    println!("report: {}", out.dir.display());
    Ok(())
}

fn check(args: &[String]) -> Result<()> {
    let (name, rest) = args.split_first().ok_or_else(|| Error::Config("missing experiment name".into()))?;
    if !EXPERIMENTS.iter().any(|(n, _)| n == name) {
        return Err(Error::Config(format!("unknown subcommand or experiment '{name}'; see list-experiments")));
    }
    let opts = CheckArgs::try_parse_from(rest).map_err(|e| Error::Config(e.to_string()))?;
    let mut config = match &opts.config {
        Some(path) => {
            let c = ExperimentConfig::load(path)?;
            if &c.experiment != name {
                return Err(Error::Config(format!("config is for '{}', not '{name}'", c.experiment)));
            }
            c
        }
        None => ExperimentConfig::for_experiment(name)?,
    };
    if let Some(dir) = opts.output_dir {
        config.output_dir = dir;
    }
    run(&config)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, output_dir } => {
            let mut c = ExperimentConfig::load(config)?;
            if let Some(dir) = output_dir {
                c.output_dir = dir;
            }
            run(&c)
        }
        Command::ListExperiments => {
            print!("{}", experiment::list_experiments());
            Ok(())
        }
        Command::Validate { config } => {
            let c = ExperimentConfig::load(config)?;
            for note in experiment::validate(&c)? {
                println!("{note}");
            }
            Ok(())
        }
        Command::ExportMatrix { name, out, n, trunc, l_xi, points } => {
            let ctx = HermiteContext::new(n, trunc, l_xi, points)?;
            let m = experiment::export_matrix(&ctx, &name, &out)?;
            println!("{name}: {}x{} written to {}", m.dim(), m.dim(), out.display());
            Ok(())
        }
        Command::DefaultConfig { experiment } => {
            println!("{}", ExperimentConfig::for_experiment(&experiment)?.to_json());
            Ok(())
        }
        Command::Check(args) => check(&args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads.max(1)).build_global() {
        log::warn!("thread pool already initialized: {e}");
    }
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
