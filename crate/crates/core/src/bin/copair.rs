use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use copair::dtree::{SplitKind, TreeParams};
use copair::feedgen::{generate_feed, replay_csv, write_feed_csv, FeedConfig, GroupSpec};
use copair::pipeline::classify;
use copair::ranking::{Pair, PairMode, PairPolicy, PairSet};
use copair::sampler::{run_sampling, SampleMatrix, SamplingPlan};
use copair::validation::{validate_pairs, CorrelationBasis, ValidationOptions};

#[derive(Parser)]
#[command(name = "copair", version, about = "Sample, classify and pair concurrent time-series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthetic feed tools.
    Feed {
        #[command(subcommand)]
        command: FeedCommand,
    },
    /// Snapshot a CSV feed into a sample matrix.
    Sample(SampleArgs),
    /// Train the tree on a sample matrix and emit pairs.
    Classify(ClassifyArgs),
    /// Score pairs with Pearson's r.
    Validate(ValidateArgs),
}

#[derive(Subcommand)]
enum FeedCommand {
    /// Generate a correlated-groups feed as CSV.
    Gen(GenArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Total number of series.
    #[arg(long, default_value_t = 200)]
    series: usize,
    /// Number of planted groups.
    #[arg(long, default_value_t = 20)]
    groups: usize,
    #[arg(long, default_value_t = 2)]
    group_size: usize,
    /// Relative per-step volatility of independent series and group moves.
    #[arg(long, default_value_t = 0.002)]
    sigma: f64,
    /// Relative per-step noise of each group member.
    #[arg(long, default_value_t = 0.0002)]
    group_sigma: f64,
    /// Tick periods per series.
    #[arg(long, default_value_t = 61)]
    ticks: usize,
    #[arg(long, default_value_t = 1.0)]
    tick_period: f64,
    #[arg(long, default_value_t = 0.0)]
    dropout: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, default_value_t = 10.0)]
    interval: f64,
    #[arg(long, default_value_t = 6)]
    samples: usize,
    /// First sample time; defaults to the feed's first timestamp.
    #[arg(long)]
    start: Option<f64>,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long, default_value_t = 2)]
    min_support: usize,
    #[arg(long, default_value_t = 0.0)]
    complexity_penalty: f64,
    #[arg(long, default_value = "threshold")]
    split_kind: SplitKind,
    #[arg(long)]
    max_nodes: Option<usize>,
    #[arg(long, default_value = "best")]
    pair_mode: PairMode,
    #[arg(long, default_value_t = 2)]
    min_counter: u32,
    #[arg(long)]
    same_sector_only: bool,
    #[arg(long = "in")]
    input: PathBuf,
    /// Tree export (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Pair records, one per line.
    #[arg(long)]
    pairs: PathBuf,
    /// Optional labeled dataset dump.
    #[arg(long)]
    dataset: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    same_sector_only: bool,
    /// Correlate step changes instead of price levels.
    #[arg(long)]
    on_changes: bool,
}

fn create(path: &PathBuf) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn feed_gen(args: GenArgs) -> Result<()> {
    let config = FeedConfig {
        seed: args.seed,
        n_series: args.series,
        groups: vec![GroupSpec { size: args.group_size, coupling: args.group_sigma }; args.groups],
        tick_period: args.tick_period,
        base_volatility: args.sigma,
        dropout_rate: args.dropout,
        steps: args.ticks,
        start: 0.0,
    };
    let feed = generate_feed(&config)?;
    let (meta, ticks) = feed.collect_ticks()?;
    let n = ticks.len();
    write_feed_csv(&meta, ticks, create(&args.out)?)?;
    eprintln!("wrote {n} ticks for {} series to {}", meta.len(), args.out.display());
    Ok(())
}

fn sample(args: SampleArgs) -> Result<()> {
    let mut feed = replay_csv(&args.input, 0.0)?;
    let Some(start) = args.start.or_else(|| feed.peek_timestamp()) else {
        bail!("{} has no ticks", args.input.display());
    };
    let plan = SamplingPlan::uniform(start, args.interval, args.samples)?;
    let matrix = run_sampling(&mut feed, &plan)?;
    matrix.write_csv(create(&args.out)?)?;
    eprintln!("sampled {} series x {} samples", matrix.n_series(), matrix.n_samples());
    Ok(())
}

fn run_classify(args: ClassifyArgs) -> Result<()> {
    let matrix = SampleMatrix::read_csv(File::open(&args.input).with_context(|| format!("opening {}", args.input.display()))?)?;
    let params = TreeParams {
        complexity_penalty: args.complexity_penalty,
        min_support: args.min_support,
        split_kind: args.split_kind,
        max_nodes: args.max_nodes,
    };
    let policy = PairPolicy { mode: args.pair_mode, min_counter: args.min_counter, same_sector_only: args.same_sector_only };
    let result = classify(&matrix, &params, &policy)?;

    let mut out = create(&args.out)?;
    serde_json::to_writer_pretty(&mut out, &result.tree.export())?;
    out.write_all(b"\n")?;
    let mut pairs = create(&args.pairs)?;
    for pair in &result.pairs.pairs {
        serde_json::to_writer(&mut pairs, pair)?;
        pairs.write_all(b"\n")?;
    }
    if let Some(path) = &args.dataset {
        result.dataset.write_csv(create(path)?)?;
    }
    let stats = result.tree.stats();
    eprintln!(
        "{} series kept ({} dropped), tree of {} nodes (depth {}), {} pairs",
        result.matrix.n_series(),
        result.dropped.len(),
        stats.node_count,
        stats.depth,
        result.pairs.len()
    );
    Ok(())
}

fn validate(args: ValidateArgs) -> Result<()> {
    let matrix = SampleMatrix::read_csv(File::open(&args.samples)?)?;
    let text = std::fs::read_to_string(&args.pairs)?;
    let pairs = text
        .lines()
        .filter(|l| l.contains("\"pair_id\""))
        .map(serde_json::from_str::<Pair>)
        .collect::<Result<Vec<_>, _>>()?;
    let options = ValidationOptions {
        basis: if args.on_changes { CorrelationBasis::Changes } else { CorrelationBasis::Prices },
        same_sector_only: args.same_sector_only,
    };
    let report = validate_pairs(&PairSet { pairs }, &matrix, options)?;
    match &args.out {
        Some(path) => report.write_jsonl(create(path)?)?,
        None => report.write_jsonl(std::io::stdout().lock())?,
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Feed { command: FeedCommand::Gen(args) } => feed_gen(args),
        Command::Sample(args) => sample(args),
        Command::Classify(args) => run_classify(args),
        Command::Validate(args) => validate(args),
    }
}
