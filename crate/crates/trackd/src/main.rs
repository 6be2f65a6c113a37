use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use copair::dtree::{SplitKind, TreeParams};
use copair::feedgen::FeedConfig;
use copair::ranking::{PairMode, PairPolicy};
use copair::validation::{CorrelationBasis, ValidationOptions};
use trackd::{FeedSource, PlanSpec, RunConfig, RunStatus, Store, Trackd};

#[derive(Parser)]
#[command(name = "trackd", version, about = "Run, persist and stream copair pair-tracking runs")]
struct Cli {
    /// Artifact store directory.
    #[arg(long, global = true, env = "TRACKD_STORE", default_value = "trackd-store")]
    store: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a run to completion, printing its events.
    Run(RunArgs),
    /// Print a stored run's event log.
    Replay {
        #[arg(long)]
        run: String,
        #[arg(long)]
        same_sector_only: bool,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:7878")]
        listen: String,
    },
}

#[derive(Args)]
struct RunArgs {
    /// CSV feed to replay.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    feed: Option<PathBuf>,
    /// JSON generator config for a synthetic feed.
    #[arg(long)]
    synthetic: Option<PathBuf>,
    /// Override the generator seed.
    #[arg(long, requires = "synthetic")]
    seed: Option<u64>,
    /// Feed-seconds per wall-clock second; 0 replays unpaced.
    #[arg(long, default_value_t = 0.0)]
    speed: f64,
    #[arg(long, default_value_t = 10.0)]
    interval: f64,
    #[arg(long, default_value_t = 6)]
    samples: usize,
    #[arg(long)]
    start: Option<f64>,
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
    /// Correlate step changes instead of price levels.
    #[arg(long)]
    on_changes: bool,
    /// Suppress the event echo on stdout.
    #[arg(long, short)]
    quiet: bool,
}

fn run_config(args: &RunArgs) -> Result<RunConfig> {
    let feed = match (&args.feed, &args.synthetic) {
        (Some(path), None) => FeedSource::Csv { path: path.clone(), speed: args.speed },
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut config: FeedConfig = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            if let Some(seed) = args.seed {
                config.seed = seed;
            }
            FeedSource::Synthetic { config, speed: args.speed }
        }
        _ => bail!("give exactly one of --feed and --synthetic"),
    };
    let mut plan = PlanSpec::uniform(args.interval, args.samples);
    plan.start = args.start;
    Ok(RunConfig {
        feed,
        plan,
        tree: TreeParams {
            complexity_penalty: args.complexity_penalty,
            min_support: args.min_support,
            split_kind: args.split_kind,
            max_nodes: args.max_nodes,
        },
        pairs: PairPolicy { mode: args.pair_mode, min_counter: args.min_counter, same_sector_only: args.same_sector_only },
        validation: ValidationOptions {
            basis: if args.on_changes { CorrelationBasis::Changes } else { CorrelationBasis::Prices },
            same_sector_only: args.same_sector_only,
        },
    })
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let store = Store::open(&cli.store).with_context(|| format!("opening store {}", cli.store.display()))?;
    let trackd = Trackd::new(store);
    match cli.command {
        Command::Run(args) => {
            let config = run_config(&args)?;
            let id = trackd.start_run(config)?;
            let handle = trackd.handle(&id)?;
            let mut out = std::io::stdout().lock();
            for line in handle.subscribe(false) {
                if !args.quiet {
                    writeln!(out, "{line}")?;
                }
            }
            let record = trackd.record(&id)?;
            eprintln!("{id}: {:?}", record.status);
            if record.status != RunStatus::Done {
                std::process::exit(1);
            }
        }
        Command::Replay { run, same_sector_only } => {
            let handle = trackd.handle(&run)?;
            let mut out = std::io::stdout().lock();
            for line in handle.subscribe(same_sector_only) {
                writeln!(out, "{line}")?;
            }
        }
        Command::Serve { listen } => {
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(&listen).await?;
                eprintln!("trackd listening on {}", listener.local_addr()?);
                trackd::server::serve(trackd, listener).await
            })?;
        }
    }
    Ok(())
}
