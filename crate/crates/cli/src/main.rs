//! `gwpattern`: sample conditioned Galton–Watson trees, count ordered patterns,
//! evaluate exact and limiting expectations, and run seeded experiments.
//!
//! Exit codes: 0 on success or passing verdicts, 2 when an experiment verdict
//! fails, 1 on any error (including invalid arguments).

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gwpattern::experiments::{self, ExperimentConfig, ExperimentReport};
use gwpattern::oracle::{exact_conditioned_mean_by_enumeration, naive_rooted_copies, MAX_MEAN_SIZE};
use gwpattern::random_walk::{walk_sum_pmf_with, WalkConfig};
use gwpattern::sampler::Strategy;
use gwpattern::{
    exact_root_mean_conditioned, limit_root_mean, limit_root_mean_conditioned, rooted_copies, total_copies,
    tree_size_prob, ConditionedSampler, Error, OffspringDistribution, OrderedTree, RngState,
};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "gwpattern", version, about = "Ordered pattern counts in conditioned Galton-Watson trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Limits of E nu_t(T) (= lim N_t(T_n)/n) and of E nu_t(T_n).
    Limit {
        #[arg(long)]
        pattern: String,
        #[arg(long)]
        dist: String,
    },
    /// Exact E nu_t(T_n), the expected rooted copies at the root of T_n.
    ExactMean {
        #[arg(long)]
        pattern: String,
        #[arg(long)]
        dist: String,
        #[arg(long)]
        n: usize,
        /// Cross-check against exhaustive enumeration (small n only).
        #[arg(long, hide = true)]
        oracle: bool,
    },
    /// P(|T| = n) for the unconditioned tree.
    SizeProb {
        #[arg(long)]
        dist: String,
        #[arg(long)]
        n: usize,
    },
    /// Draw conditioned trees; one parenthesis string per line.
    Sample {
        #[arg(long)]
        dist: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: u64,
    },
    /// Copies of a pattern in each tree of the input; one JSON object per tree.
    Count {
        #[arg(long)]
        pattern: String,
        /// A parenthesis string, or a file with one tree per line.
        #[arg(long)]
        tree: String,
    },
    /// Seeded Monte Carlo and exact-trajectory experiments.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    #[arg(long, default_value_t = 1000)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Allowed deviation in standard errors.
    #[arg(long, default_value_t = 3.0)]
    z_band: f64,
    /// Allowed relative deviation.
    #[arg(long, default_value_t = 0.05)]
    relative_band: f64,
    #[arg(long, value_enum, default_value_t = StrategyArg::Auto)]
    strategy: StrategyArg,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    /// Append JSON lines (or write CSV rows) here; the summary goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum StrategyArg {
    Auto,
    Direct,
    Multinomial,
}

#[derive(Subcommand, Debug)]
enum ExperimentCommand {
    /// N_t(T_n)/n against its limit.
    Lln {
        #[arg(long)]
        pattern: String,
        #[arg(long)]
        dist: String,
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Pairs at distance l per vertex against 1 + (l-1) sigma^2 / 2.
    PathPairs {
        #[arg(long)]
        dist: String,
        #[arg(long)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
        lengths: Vec<usize>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Quantiles of n - N_{P_k}(T_n).
    Concentration {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        dist: String,
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Standardized counts (N_t(T_n) - n mu) / sqrt(n).
    Clt {
        #[arg(long)]
        pattern: String,
        #[arg(long)]
        dist: String,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Growth exponent of the exact root star expectation under a power-law tail.
    HeavyTail {
        #[arg(long, default_value_t = 2)]
        delta: usize,
        #[arg(long, default_value_t = 0.2)]
        eps: f64,
        #[arg(long, value_delimiter = ',', default_value = "500,1000,2000,3000,4000,5000")]
        n_list: Vec<usize>,
        /// Truncation point of the stored pmf (default: largest n).
        #[arg(long)]
        max_degree: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Local limit ratio and tail suprema of the offspring walk.
    Llt {
        #[arg(long)]
        dist: String,
        #[arg(long, value_delimiter = ',', default_value = "100,200,500,1000,2000,5000,10000")]
        n_list: Vec<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Usage(String),
}

enum Outcome {
    Done,
    Verdict(bool),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(Outcome::Done) | Ok(Outcome::Verdict(true)) => ExitCode::SUCCESS,
        Ok(Outcome::Verdict(false)) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dist(spec: &str) -> Result<OffspringDistribution, CliError> {
    Ok(spec.parse()?)
}

fn pattern(text: &str) -> Result<OrderedTree, CliError> {
    Ok(text.parse()?)
}

fn run(command: Command) -> Result<Outcome, CliError> {
    match command {
        Command::Limit { pattern: p, dist: d } => {
            let (t, d) = (pattern(&p)?, dist(&d)?);
            let unconditioned = limit_root_mean(&t, &d);
            let conditioned = limit_root_mean_conditioned(&t, &d);
            output::print_json(&json!({
                "pattern": t.to_parens(),
                "distribution": d.spec(),
                "per_vertex_limit": output::finite_or_string(unconditioned.value),
                "per_vertex_limit_error_bound": unconditioned.error_bound,
                "conditioned_root_limit": output::finite_or_string(conditioned.value),
                "conditioned_root_limit_error_bound": conditioned.error_bound,
            }));
        }
        Command::ExactMean { pattern: p, dist: d, n, oracle } => {
            let (t, d) = (pattern(&p)?, dist(&d)?);
            let exact = exact_root_mean_conditioned(&t, &d, n)?;
            let mut value = json!({
                "pattern": t.to_parens(),
                "distribution": d.spec(),
                "n": n,
                "value": exact.value,
                "error_bound": exact.error_bound,
                "walk_method": exact.walk_method,
            });
            if oracle {
                if n > MAX_MEAN_SIZE {
                    return Err(CliError::Usage(format!("--oracle supports n <= {MAX_MEAN_SIZE}")));
                }
                let enumerated = exact_conditioned_mean_by_enumeration(
                    |host| naive_rooted_copies(&t, host, 0).map(|c| c.to_f64()).unwrap_or(f64::NAN),
                    &d,
                    n,
                )?;
                value["oracle"] = json!(enumerated.mean);
                value["oracle_abs_difference"] = json!((enumerated.mean - exact.value).abs());
            }
            output::print_json(&value);
        }
        Command::SizeProb { dist: d, n } => {
            let d = dist(&d)?;
            let method = if n == 0 { None } else { Some(walk_sum_pmf_with(&d, n, &WalkConfig::up_to(n - 1))?.method) };
            output::print_json(&json!({
                "distribution": d.spec(),
                "n": n,
                "value": tree_size_prob(&d, n),
                "walk_method": method,
            }));
        }
        Command::Sample { dist: d, n, seed, count } => {
            let sampler = ConditionedSampler::new(&dist(&d)?, n)?;
            let mut lines = String::new();
            for i in 0..count {
                let tree = sampler.sample(&mut RngState::new(seed, i).rng())?;
                lines.push_str(&tree.to_parens());
                lines.push('\n');
            }
            output::print_raw(&lines);
        }
        Command::Count { pattern: p, tree } => {
            let t = pattern(&p)?;
            let text = if tree.trim_start().starts_with('(') { tree } else { std::fs::read_to_string(&tree)? };
            let mut lines = String::new();
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                let host: OrderedTree = line.parse()?;
                let entry = json!({
                    "pattern": t.to_parens(),
                    "tree_size": host.len(),
                    "total": total_copies(&t, &host),
                    "at_root": rooted_copies(&t, &host),
                });
                lines.push_str(&entry.to_string());
                lines.push('\n');
            }
            if lines.is_empty() {
                return Err(CliError::Usage("no tree given".into()));
            }
            output::print_raw(&lines);
        }
        Command::Experiment(e) => return run_experiment(e),
    }
    Ok(Outcome::Done)
}

fn config(run: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::new(run.replicates, run.seed).with_env_threads()?;
    cfg.bands.z_band = run.z_band;
    cfg.bands.relative_band = run.relative_band;
    cfg.strategy = match run.strategy {
        StrategyArg::Auto => Strategy::Auto,
        StrategyArg::Direct => Strategy::Direct,
        StrategyArg::Multinomial => Strategy::Multinomial,
    };
    Ok(cfg)
}

fn run_experiment(command: ExperimentCommand) -> Result<Outcome, CliError> {
    let (report, out): (ExperimentReport, OutputArgs) = match command {
        ExperimentCommand::Lln { pattern: p, dist: d, n_list, run } => {
            (experiments::run_lln(&pattern(&p)?, &dist(&d)?, &n_list, &config(&run)?)?, run.output)
        }
        ExperimentCommand::PathPairs { dist: d, n, lengths, run } => {
            (experiments::run_path_pairs(&lengths, &dist(&d)?, n, &config(&run)?)?, run.output)
        }
        ExperimentCommand::Concentration { k, dist: d, n_list, run } => {
            (experiments::run_concentration(k, &dist(&d)?, &n_list, &config(&run)?)?, run.output)
        }
        ExperimentCommand::Clt { pattern: p, dist: d, n, run } => {
            (experiments::run_clt(&pattern(&p)?, &dist(&d)?, n, &config(&run)?)?, run.output)
        }
        ExperimentCommand::HeavyTail { delta, eps, n_list, max_degree, output } => {
            let cfg = ExperimentConfig::default().with_env_threads()?;
            (experiments::run_heavy_tail_growth(delta, eps, &n_list, max_degree, &cfg)?, output)
        }
        ExperimentCommand::Llt { dist: d, n_list, output } => {
            let cfg = ExperimentConfig::default().with_env_threads()?;
            (experiments::run_llt(&dist(&d)?, &n_list, &cfg)?, output)
        }
    };
    output::emit_report(&report, out.out.as_deref(), out.format == Format::Csv)?;
    Ok(Outcome::Verdict(report.passed))
}
