//! Command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::config::{self, ExperimentConfig};
use crate::error::{LabError, Result};
use crate::experiment::{self, RunOptions, RunSummary};
use crate::grid;
use crate::record::{read_jsonl, Method, CONFIG_FILE};

#[derive(Debug, Parser)]
#[command(name = "bayrn-lab", version, about = "Bayesian domain randomization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bayesian optimization over domain distribution parameters.
    Bayrn {
        #[command(subcommand)]
        action: BayrnAction,
    },
    /// Uniform domain randomization baseline.
    Udr {
        #[command(subcommand)]
        action: RunAction,
    },
    /// Training on the nominal domain only.
    Nominal {
        #[command(subcommand)]
        action: RunAction,
    },
    /// Re-evaluate a saved policy on its target domain.
    Eval {
        #[arg(long)]
        policy_file: PathBuf,
        /// Target rollouts (default: as logged).
        #[arg(long)]
        n_tau: Option<usize>,
        /// Config holding the task and target (default: config.toml next to the policy).
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Furuta sim-to-sim recovery of the target's mass means.
    Sim2sim {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replaces the shipped sim2sim config.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
    /// Write the GP posterior over two search coordinates as CSV.
    ExportGpGrid {
        #[arg(long)]
        run_record: PathBuf,
        /// Two 0-based search-space coordinates, e.g. `0,1`.
        #[arg(long, value_parser = parse_dims)]
        dims: (usize, usize),
        #[arg(long)]
        resolution: usize,
        /// Config of the run (default: config.toml next to the record).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config file, or a shipped one by name.
    ValidateConfig {
        /// Path, or one of `furuta`, `ballcup`, `sim2sim`.
        config: String,
    },
}

#[derive(Debug, Subcommand)]
enum BayrnAction {
    Run {
        #[command(flatten)]
        args: RunArgs,
        /// Continue from the records in the output directory.
        #[arg(long)]
        resume: bool,
    },
}

#[derive(Debug, Subcommand)]
enum RunAction {
    Run {
        #[command(flatten)]
        args: RunArgs,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Config file path, or one of `furuta`, `ballcup`, `sim2sim`.
    #[arg(long)]
    config: String,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
}

fn parse_dims(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `i,j`, got `{s}`"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    Ok((parse(a)?, parse(b)?))
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// A shipped config by name, otherwise a file.
fn load_config(name_or_path: &str) -> Result<ExperimentConfig> {
    match config::shipped(name_or_path) {
        Some(text) if !Path::new(name_or_path).exists() => ExperimentConfig::parse(text),
        _ => ExperimentConfig::load(Path::new(name_or_path)),
    }
}

fn run_method(method: Method, args: RunArgs, resume: bool) -> Result<()> {
    let cfg = load_config(&args.config)?.with_overrides(args.seed, args.out.as_deref());
    cfg.validate()?;
    let summary = experiment::run(method, &cfg, RunOptions { resume, quiet: args.quiet })?;
    print_summary(&summary);
    Ok(())
}

fn print_summary(s: &RunSummary) {
    println!("method      {}", s.method.as_str());
    if let Some(phi) = &s.phi {
        println!("phi         {phi:?}");
    }
    if let Some(it) = s.iterations {
        println!("iterations  {it}");
    }
    println!("J_sim       {:?}", s.j_sim);
    println!("J_hat       {:?}", s.j_hat);
    println!("eval seed   {}", s.policy.eval_seed);
    println!("output      {}", s.dir.display());
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Bayrn { action: BayrnAction::Run { args, resume } } => run_method(Method::Bayrn, args, resume),
        Command::Udr { action: RunAction::Run { args } } => run_method(Method::Udr, args, false),
        Command::Nominal { action: RunAction::Run { args } } => run_method(Method::Nominal, args, false),
        Command::Eval { policy_file, n_tau, config } => {
            let eval = experiment::eval(&policy_file, config.as_deref(), n_tau)?;
            println!("J_hat    {:?}", eval.mean);
            println!("returns  {:?}", eval.returns);
            Ok(())
        }
        Command::Sim2sim { seed, out, config, quiet } => {
            let base = match config {
                Some(p) => ExperimentConfig::load(&p)?,
                None => ExperimentConfig::parse(config::SIM2SIM)?,
            };
            let out = out.unwrap_or_else(|| base.out_dir.join(format!("seed{seed}")));
            let cfg = base.with_overrides(Some(seed), Some(&out));
            cfg.validate()?;
            let summary = experiment::run(Method::Bayrn, &cfg, RunOptions { resume: false, quiet })?;
            print_summary(&summary);
            for r in experiment::recovery(&cfg, summary.phi.as_deref().unwrap_or_default()) {
                println!("{:<12} found {:.5}  target {:.5}  error {:.1}% of box width", r.label, r.found, r.truth, 100.0 * r.error);
            }
            Ok(())
        }
        Command::ExportGpGrid { run_record, dims, resolution, config, out } => {
            let config_path = config.unwrap_or_else(|| run_record.parent().unwrap_or(Path::new(".")).join(CONFIG_FILE));
            let cfg = ExperimentConfig::load(&config_path)?;
            let events = read_jsonl(&run_record)?;
            let rows = grid::gp_grid(&cfg, &events, dims, resolution)?;
            match out {
                Some(path) => {
                    let file = std::fs::File::create(&path).map_err(|e| LabError::io(&path, e))?;
                    grid::write_csv(&rows, file).map_err(|e| LabError::record(&path, e))
                }
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    grid::write_csv(&rows, &mut lock).map_err(|e| LabError::record(Path::new("<stdout>"), e))?;
                    lock.flush().map_err(|e| LabError::io(Path::new("<stdout>"), e))
                }
            }
        }
        Command::ValidateConfig { config } => {
            let cfg = load_config(&config)?;
            println!(
                "ok: {} search coordinates, {} policy parameters",
                cfg.domain.search_box.dim(),
                cfg.task.policy_dim()
            );
            Ok(())
        }
    }
}
