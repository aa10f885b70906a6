//! `pswitch`: command-line front end of the planar switching analysis.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use planar_switching::config::{Config, Task};
use planar_switching::pipeline::{self, AnalysisReport, RunOptions};
use planar_switching::verdict::StabilityClass;
use planar_switching::{builtins, svg, Error};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_UNKNOWN: u8 = 4;

#[derive(Parser)]
#[command(name = "pswitch", version, about = "Stability analysis of planar two-field switched systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task listed in the configuration.
    Analyze(RunArgs),
    /// Trace and classify the collinearity set.
    Trace(RunArgs),
    /// Decide the stability class.
    Verdict(RunArgs),
    /// Run the configured simulations and export trajectories as CSV.
    Simulate(RunArgs),
    /// List the built-in examples.
    ListBuiltins,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file.
    config: Option<PathBuf>,
    /// Use a built-in example instead of a configuration file.
    #[arg(long, conflicts_with = "config")]
    builtin: Option<String>,
    /// Seed for random switching signals.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for report.json, figure.svg and trajectory CSV files.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Exit with status 4 when the verdict is unknown.
    #[arg(long)]
    require_conclusive: bool,
    /// Record wall-clock time per task in the report.
    #[arg(long)]
    timings: bool,
}

enum Failure {
    Config(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

fn load(args: &RunArgs) -> Result<Config, Failure> {
    let mut cfg = match (&args.config, &args.builtin) {
        (Some(path), None) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            Config::parse(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        (None, Some(name)) => builtins::config(name)?,
        _ => return Err(Failure::Config("give a configuration file or --builtin NAME".into())),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Numerical(format!("cannot write {}: {e}", path.display())))
}

fn export(report: &AnalysisReport, cfg: &Config, dir: &Path, all_csv: bool) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Numerical(format!("cannot create {}: {e}", dir.display())))?;
    write(&dir.join("report.json"), &report.to_json())?;
    let figure = cfg.svg.as_deref().unwrap_or("figure.svg");
    write(&dir.join(figure), &svg::render(report, &cfg.window))?;
    for (k, (spec, traj)) in cfg.simulations.iter().zip(&report.artifacts.trajectories).enumerate() {
        let name = match (&spec.csv, all_csv) {
            (Some(n), _) => n.clone(),
            (None, true) => format!("simulation_{k}.csv"),
            (None, false) => continue,
        };
        write(&dir.join(name), &traj.to_csv())?;
    }
    Ok(())
}

fn execute(args: &RunArgs, tasks: Option<Vec<Task>>, all_csv: bool) -> Result<u8, Failure> {
    let mut cfg = load(args)?;
    if let Some(t) = tasks {
        cfg.tasks = t;
    }
    let report = pipeline::run_with(&cfg, &RunOptions { timings: args.timings })?;
    match args.format {
        Format::Json => println!("{}", report.to_json()),
        Format::Text => print!("{}", report.to_text()),
    }
    if let Some(dir) = &args.out {
        export(&report, &cfg, dir, all_csv)?;
    }
    if !report.errors.is_empty() {
        for e in &report.errors {
            eprintln!("error in {}: {}", e.task, e.message);
        }
        return Ok(EXIT_NUMERICAL);
    }
    if args.require_conclusive && cfg.has_task(Task::Verdict) {
        let conclusive = report.verdict.as_ref().is_some_and(|v| v.class != StabilityClass::Unknown);
        if !conclusive {
            eprintln!("verdict is unknown");
            return Ok(EXIT_UNKNOWN);
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::ListBuiltins => {
            for b in builtins::registry() {
                println!("{:<30} {}", b.name, b.description);
            }
            Ok(0)
        }
        Command::Analyze(a) => execute(a, None, false),
        Command::Trace(a) => execute(a, Some(vec![Task::Trace, Task::Classify]), false),
        Command::Verdict(a) => execute(a, Some(vec![Task::Verdict]), false),
        Command::Simulate(a) => execute(a, Some(vec![Task::Simulate]), true),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(m)) => {
            eprintln!("configuration error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
