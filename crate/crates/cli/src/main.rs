//! `mtvar`: meta-evaluation of machine-translation metrics across datasets.

mod commands;
mod config;
mod failure;
mod outputs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{AdvvalArgs, DataArgs};
use config::{Flags, RunConfig};
use failure::{CliResult, Failure, EXIT_INPUT};

#[derive(Parser, Debug)]
#[command(name = "mtvar", version, about = "Meta-evaluation of machine-translation metrics across datasets")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Master seed; required by every command that resamples
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Bootstrap iterations [default: 1000]
    #[arg(long, global = true)]
    iterations: Option<usize>,
    /// Significance level [default: 0.05]
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Error counting: full or significant-only [default: full]
    #[arg(long, global = true)]
    policy: Option<String>,
    /// Worker threads; outputs do not depend on it [default: all cores]
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory [default: .]
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Flat `key = value` file with the same keys as the flags; flags win
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Data {
    /// Dataset directory: sources.txt, references.txt, systems/<name>.txt
    #[arg(long)]
    dataset: PathBuf,
    /// Human judgments TSV [default: <dataset>/judgments.tsv if present]
    #[arg(long)]
    judgments: Option<PathBuf>,
    /// External metric scores TSV, one per metric [default: <dataset>/scores/*.tsv]
    #[arg(long, num_args = 1..)]
    scores: Vec<PathBuf>,
    /// Comma-separated metric names [default: every builtin and external metric]
    #[arg(long)]
    metrics: Option<String>,
}

impl Data {
    fn args(&self) -> DataArgs {
        DataArgs {
            dataset: self.dataset.clone(),
            judgments: self.judgments.clone(),
            scores: self.scores.clone(),
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a dataset with its judgments and score files
    Validate {
        #[command(flatten)]
        data: Data,
    },
    /// Builtin metric roster
    Metrics {
        #[command(subcommand)]
        action: MetricsAction,
    },
    /// Corpus score of every system under every metric
    Score {
        #[command(flatten)]
        data: Data,
    },
    /// Human and metric verdicts for one system pair
    Compare {
        #[command(flatten)]
        data: Data,
        #[arg(long)]
        system_a: String,
        #[arg(long)]
        system_b: String,
    },
    /// Synthesize hybrid systems and their human scores
    Hybrid {
        #[command(flatten)]
        data: Data,
        /// Number of hybrids [default: 142]
        #[arg(long)]
        hybrids: Option<usize>,
    },
    /// Verdict grid, error numbers, metric comparisons and ranking
    Errors {
        #[command(flatten)]
        data: Data,
        /// Number of hybrids [default: 142]
        #[arg(long)]
        hybrids: Option<usize>,
        /// Compare the real systems instead of hybrids
        #[arg(long)]
        real_systems: bool,
    },
    /// Error numbers, comparisons and ranking from a grid cache
    Rank {
        #[arg(long)]
        grid: PathBuf,
    },
    /// Disagreement matrices over grid caches
    Disagree {
        #[arg(long, num_args = 1.., required = true)]
        grid: Vec<PathBuf>,
        /// Also emit SVG heatmaps
        #[arg(long)]
        svg: bool,
        /// Count pairs significant in only one dataset as disagreements
        #[arg(long)]
        weak: bool,
    },
    /// Adversarial validation between datasets
    Advval {
        #[arg(long, requires = "d2", conflicts_with = "datasets")]
        d1: Option<PathBuf>,
        #[arg(long, requires = "d1")]
        d2: Option<PathBuf>,
        /// Accuracy matrix over these datasets; the diagonal uses self splits
        #[arg(long, num_args = 1..)]
        datasets: Vec<PathBuf>,
        /// source or source-output
        #[arg(long, default_value = "source")]
        mode: String,
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        /// External predictions TSV `example_id<TAB>predicted_label` for the first run's test split
        #[arg(long, requires = "d1")]
        predictions: Option<PathBuf>,
    },
    /// Error-rate table and disagreement heatmaps over grid caches
    Report {
        #[arg(long, num_args = 1.., required = true)]
        grid: Vec<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum MetricsAction {
    /// Print name, averaging and polarity of each builtin metric
    List,
}

fn run(cli: Cli) -> CliResult<()> {
    let (hybrids, metrics) = match &cli.command {
        Command::Hybrid { hybrids, data } | Command::Errors { hybrids, data, .. } => (*hybrids, data.metrics.clone()),
        Command::Score { data } | Command::Compare { data, .. } | Command::Validate { data } => (None, data.metrics.clone()),
        _ => (None, None),
    };
    let g = cli.global;
    let flags = Flags {
        seed: g.seed,
        iterations: g.iterations,
        alpha: g.alpha,
        policy: g.policy,
        jobs: g.jobs,
        out: g.out,
        hybrids,
        metrics,
    };
    let cfg = RunConfig::load(flags, g.config.as_deref())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Failure::Internal(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Validate { data } => commands::validate(&data.args()),
        Command::Metrics { action: MetricsAction::List } => {
            commands::metrics_list();
            Ok(())
        }
        Command::Score { data } => commands::score(&cfg, &data.args()),
        Command::Compare {
            data,
            system_a,
            system_b,
        } => commands::compare(&cfg, &data.args(), system_a, system_b),
        Command::Hybrid { data, .. } => commands::hybrid(&cfg, &data.args()),
        Command::Errors { data, real_systems, .. } => commands::errors(&cfg, &data.args(), *real_systems),
        Command::Rank { grid } => commands::rank(&cfg, grid),
        Command::Disagree { grid, svg, weak } => commands::disagree(&cfg, grid, *weak, *svg),
        Command::Advval {
            d1,
            d2,
            datasets,
            mode,
            seeds,
            predictions,
        } => commands::advval(
            &cfg,
            &AdvvalArgs {
                d1: d1.clone(),
                d2: d2.clone(),
                datasets: datasets.clone(),
                mode: mode.clone(),
                seeds: *seeds,
                predictions: predictions.clone(),
            },
        ),
        Command::Report { grid } => commands::report(&cfg, grid),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run(cli)))
        .unwrap_or_else(|_| Err(Failure::Internal("panic (see message above)".into())));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("mtvar: {f}");
            ExitCode::from(f.code())
        }
    }
}
