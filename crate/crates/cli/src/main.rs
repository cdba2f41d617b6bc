//! `ctmc-check`: build, check, sweep, scan and simulate guarded-command CTMC models.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ctmc_core::compose::BuildOptions;
use ctmc_core::harness::{HarnessConfig, TimeGrid};
use ctmc_core::numerics::{Method, SolverConfig, UnifConfig};
use ctmc_core::CheckConfig;

#[derive(Parser, Debug)]
#[command(name = "ctmc-check", version, about = "Model checker for continuous-time Markov chains")]
#[command(after_help = "Exit status: 0 success, 1 model/property/solver error, 2 usage error.\n\
Environment: CTMC_CHECK_THREADS sets the worker thread count.")]
pub struct Cli {
    /// Emit structured JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Explore the state space of a model.
    Build {
        #[command(flatten)]
        model: ModelArgs,
        /// Print a Model/States/Transitions table.
        #[arg(long)]
        stats: bool,
    },
    /// Check CSL and reward properties.
    Check {
        #[command(flatten)]
        model: ModelArgs,
        /// Property text; may be repeated.
        #[arg(short = 'p', long = "property", required_unless_present = "props")]
        properties: Vec<String>,
        /// File with one property per line (`#` starts a comment).
        #[arg(long)]
        props: Option<PathBuf>,
        /// Report every state's value, not only the initial state's.
        #[arg(long)]
        all_states: bool,
        #[command(flatten)]
        num: NumArgs,
    },
    /// Evaluate property templates over a time grid for several variants.
    Sweep {
        /// Model file; overrides the experiment's.
        model: Option<PathBuf>,
        /// Experiment description (TOML).
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Constant file; defaults to `<stem>_rates.gcm` next to the model.
        #[arg(long)]
        rates: Option<PathBuf>,
        /// Property template with `{t}` for the time; may be repeated.
        #[arg(short = 'p', long = "property")]
        properties: Vec<String>,
        /// `start:stop:step` or a comma-separated list.
        #[arg(long, value_parser = parse_grid)]
        times: Option<TimeGrid>,
        /// `NAME=ID,ID,...` removes reactions; `label:X` entries remove labels.
        #[arg(long = "variant", value_parser = parse_variant)]
        variants: Vec<VariantArg>,
        /// Leave out the unedited wildtype column.
        #[arg(long)]
        no_wildtype: bool,
        /// Abort exploration beyond this many states.
        #[arg(long, default_value_t = 10_000_000, value_parser = clap::value_parser!(u64).range(1..))]
        max_states: u64,
        /// CSV file per template, in order; remaining tables go to stdout.
        #[arg(short, long)]
        output: Vec<PathBuf>,
        #[command(flatten)]
        num: NumArgs,
    },
    /// Long-run probability that each variable equals 1.
    Steady {
        #[command(flatten)]
        model: ModelArgs,
        /// Variables to report (default: all).
        #[arg(long, value_delimiter = ',')]
        molecules: Vec<String>,
        /// CSV output file (default: stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        num: NumArgs,
    },
    /// Expected cumulative reward curves.
    Rewards {
        #[command(flatten)]
        model: ModelArgs,
        /// `start:stop:step` or a comma-separated list.
        #[arg(long, value_parser = parse_grid)]
        times: TimeGrid,
        /// Reward structures (default: all).
        #[arg(long, value_delimiter = ',')]
        blocks: Vec<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        num: NumArgs,
    },
    /// Remove each reaction in turn and compare two long-run probabilities.
    KnockoutScan {
        #[command(flatten)]
        model: ModelArgs,
        /// State formula for the first axis, e.g. `MEK12=1`.
        #[arg(long = "a")]
        formula_a: String,
        /// State formula for the second axis, e.g. `Akt=1`.
        #[arg(long = "b")]
        formula_b: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        num: NumArgs,
    },
    /// Stochastic simulation: one trajectory, or an estimate with `--estimate`.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trajectory horizon.
        #[arg(long, default_value_t = 10.0, value_parser = non_negative)]
        horizon: f64,
        /// Run index of the trajectory (selects the random stream).
        #[arg(long, default_value_t = 0)]
        run: u64,
        /// Estimate the probability that this expression holds at `--time`.
        #[arg(long, requires = "time")]
        estimate: Option<String>,
        #[arg(long, value_parser = non_negative)]
        time: Option<f64>,
        /// Number of runs for `--estimate`.
        #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
        runs: u64,
        /// Trajectory CSV output (default: stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write the chain as `.tra`, `.sta` and `.lab` files.
    Export {
        #[command(flatten)]
        model: ModelArgs,
        /// Output path prefix; extensions are appended.
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Model file (`.gcm`).
    pub model: PathBuf,
    /// Constant file; defaults to `<stem>_rates.gcm` next to the model.
    #[arg(long)]
    pub rates: Option<PathBuf>,
    /// Abort exploration beyond this many states.
    #[arg(long, default_value_t = 10_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_states: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SolverArg {
    GaussSeidel,
    Jacobi,
}

#[derive(Args, Debug, Clone)]
pub struct NumArgs {
    /// Relative convergence threshold of the iterative solver.
    #[arg(long, default_value_t = 1e-9, value_parser = positive)]
    pub epsilon: f64,
    /// Iteration limit of the iterative solver.
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_iters: u64,
    #[arg(long, value_enum, default_value_t = SolverArg::GaussSeidel)]
    pub solver: SolverArg,
    /// Uniformization rate as a multiple of the largest exit rate.
    #[arg(long, default_value_t = 1.02, value_parser = at_least_one)]
    pub unif_factor: f64,
    /// Poisson tail mass dropped by uniformization.
    #[arg(long, default_value_t = 1e-12, value_parser = probability)]
    pub unif_accuracy: f64,
}

impl NumArgs {
    pub fn check_config(&self) -> CheckConfig {
        CheckConfig {
            unif: UnifConfig {
                factor: self.unif_factor,
                accuracy: self.unif_accuracy,
            },
            solver: SolverConfig {
                method: match self.solver {
                    SolverArg::GaussSeidel => Method::GaussSeidel,
                    SolverArg::Jacobi => Method::Jacobi,
                },
                epsilon: self.epsilon,
                max_iters: self.max_iters as usize,
            },
        }
    }
}

pub fn harness_config(model: &ModelArgs, num: &NumArgs) -> HarnessConfig {
    HarnessConfig {
        check: num.check_config(),
        build: build_options(model),
    }
}

pub fn build_options(model: &ModelArgs) -> BuildOptions {
    BuildOptions {
        max_states: model.max_states as usize,
    }
}

#[derive(Debug, Clone)]
pub struct VariantArg {
    pub name: String,
    pub reactions: Vec<String>,
    pub labels: Vec<String>,
}

fn parse_number(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a number"))
}

fn positive(s: &str) -> Result<f64, String> {
    let x = parse_number(s)?;
    (x > 0.0 && x.is_finite()).then_some(x).ok_or_else(|| format!("{s} must be > 0"))
}

fn non_negative(s: &str) -> Result<f64, String> {
    let x = parse_number(s)?;
    (x >= 0.0 && x.is_finite()).then_some(x).ok_or_else(|| format!("{s} must be >= 0"))
}

fn at_least_one(s: &str) -> Result<f64, String> {
    let x = parse_number(s)?;
    (x >= 1.0 && x.is_finite()).then_some(x).ok_or_else(|| format!("{s} must be >= 1"))
}

fn probability(s: &str) -> Result<f64, String> {
    let x = parse_number(s)?;
    (x > 0.0 && x < 1.0).then_some(x).ok_or_else(|| format!("{s} must lie in (0, 1)"))
}

fn parse_grid(s: &str) -> Result<TimeGrid, String> {
    let grid = match s.split(':').collect::<Vec<_>>()[..] {
        [a, b, c] => TimeGrid::Range {
            start: parse_number(a)?,
            stop: parse_number(b)?,
            step: parse_number(c)?,
        },
        [_] => TimeGrid::List(s.split(',').map(parse_number).collect::<Result<_, _>>()?),
        _ => return Err(format!("`{s}` is neither start:stop:step nor a list")),
    };
    grid.instants().map_err(|e| e.to_string())?;
    Ok(grid)
}

fn parse_variant(s: &str) -> Result<VariantArg, String> {
    let (name, items) = s.split_once('=').ok_or_else(|| format!("`{s}` is not NAME=ID,..."))?;
    if name.is_empty() {
        return Err("variant name is empty".into());
    }
    let mut v = VariantArg {
        name: name.into(),
        reactions: Vec::new(),
        labels: Vec::new(),
    };
    for item in items.split(',').map(str::trim).filter(|i| !i.is_empty()) {
        match item.strip_prefix("label:") {
            Some(l) => v.labels.push(l.into()),
            None => v.reactions.push(item.into()),
        }
    }
    Ok(v)
}

fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("CTMC_CHECK_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("CTMC_CHECK_THREADS must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.class());
            ExitCode::from(1)
        }
    }
}
