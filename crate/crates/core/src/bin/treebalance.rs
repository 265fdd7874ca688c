use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use treebalance::generate::TreeSpec;
use treebalance::harness::{self, BenchConfig, Mode, SweepAxis};
use treebalance::rng::RNG_ALGORITHM;
use treebalance::{partition, trivial_partition, BalanceConfig};

/// Partition an unbalanced binary tree across workers and benchmark a
/// parallel traversal of the result.
#[derive(Parser, Debug)]
#[command(name = "treebalance", version)]
struct Args {
    /// Workload tree: fib:<order>, random:<n>:<swap_fraction> or perfect:<depth>.
    /// Defaults to fib:26, or fib:31 with --paper-scale.
    #[arg(long)]
    tree: Option<String>,

    /// Number of workers.
    #[arg(long, default_value_t = 1)]
    p: usize,

    /// serial, trivial or suggested.
    #[arg(long, default_value = "suggested")]
    mode: String,

    /// Probing stop criterion (relative range of the estimate window).
    #[arg(long, default_value_t = 0.1)]
    psc: f64,

    /// Adaptive stop criterion, percent of one worker's share.
    #[arg(long, default_value_t = 10.0)]
    asc: f64,

    #[arg(long, default_value_t = 10)]
    window: usize,

    #[arg(long, default_value_t = 16)]
    granularity: u32,

    /// Seeds both the random tree generator and probing.
    #[arg(long, default_value_t = 42)]
    seed: u64,

    #[arg(long, default_value_t = 100_000)]
    max_probes: u64,

    #[arg(long, default_value_t = 32)]
    max_reprobes: u32,

    /// Synthetic arithmetic iterations per visited node.
    #[arg(long, default_value_t = 0)]
    work_unit: u64,

    /// Repetitions per measurement; medians are reported.
    #[arg(long, default_value_t = 5)]
    reps: usize,

    /// Sweep one parameter, e.g. psc=0.4,0.2,0.1 (axes: p, psc, asc, visited-vs-error).
    #[arg(long)]
    sweep: Option<String>,

    /// Write the report here (.json for JSON, CSV otherwise) instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Write the partition plan (in --mode) to this file.
    #[arg(long)]
    emit_plan: Option<PathBuf>,

    /// Use the full-size Fibonacci tree (order 31) as the default workload.
    #[arg(long)]
    paper_scale: bool,
}

fn parse_sweep(s: &str) -> Result<(SweepAxis, Vec<f64>), String> {
    let (axis, values) = s
        .split_once('=')
        .ok_or_else(|| format!("--sweep expects axis=v1,v2,..., got {s:?}"))?;
    let axis: SweepAxis = axis.parse().map_err(|e| format!("{e}"))?;
    let values = values
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad sweep value {v:?}"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err("--sweep needs at least one value".into());
    }
    Ok((axis, values))
}

fn build_config(args: &Args) -> Result<BenchConfig, String> {
    let mut tree: TreeSpec = match &args.tree {
        Some(t) => t.parse().map_err(|e| format!("{e}"))?,
        None if args.paper_scale => TreeSpec::fibonacci(31),
        None => TreeSpec::fibonacci(26),
    };
    tree.seed = args.seed;
    let balance = BalanceConfig {
        p: args.p,
        psc: args.psc,
        asc: args.asc,
        window: args.window,
        granularity: args.granularity,
        seed: args.seed,
        max_probes: args.max_probes,
        max_reprobes: args.max_reprobes,
        threads: harness::thread_cap(),
        ..BalanceConfig::default()
    };
    let config = BenchConfig {
        tree,
        balance,
        mode: args.mode.parse().map_err(|e| format!("{e}"))?,
        work_unit: args.work_unit,
        repetitions: args.reps,
        output: args.out.clone(),
    };
    config.validate().map_err(|e| format!("{e}"))?;
    Ok(config)
}

fn run(args: Args) -> Result<(), String> {
    let config = build_config(&args)?;
    let sweep = args.sweep.as_deref().map(parse_sweep).transpose()?;

    eprintln!(
        "treebalance: tree={} mode={} p={} psc={} asc={} window={} granularity={} seed={} \
         max_probes={} max_reprobes={} work_unit={} reps={} threads={} rng={}",
        config.tree,
        config.mode,
        config.balance.p,
        config.balance.psc,
        config.balance.asc,
        config.balance.window,
        config.balance.granularity,
        config.balance.seed,
        config.balance.max_probes,
        config.balance.max_reprobes,
        config.work_unit,
        config.repetitions,
        config
            .balance
            .threads
            .map_or_else(|| "unlimited".to_string(), |t| t.to_string()),
        RNG_ALGORITHM,
    );

    if let Some(path) = &args.emit_plan {
        let tree = config.tree.build().map_err(|e| e.to_string())?;
        let plan = match config.mode {
            Mode::Trivial => trivial_partition(&tree, config.balance.p),
            _ => partition(&tree, &config.balance),
        }
        .map_err(|e| e.to_string())?;
        let text = plan.to_document().map_err(|e| e.to_string())?.to_text();
        std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))?;
    }

    let rows = match sweep {
        Some((axis, values)) => harness::run_sweep(&config, axis, &values),
        None => harness::run_benchmark(&config).map(|r| vec![r]),
    }
    .map_err(|e| e.to_string())?;

    match &config.output {
        Some(path) => harness::write_report(path, &rows).map_err(|e| e.to_string()),
        None => {
            let bytes = harness::emit_report(&rows, harness::ReportFormat::Csv);
            print!("{}", String::from_utf8_lossy(&bytes));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("treebalance: error: {msg}");
            ExitCode::from(2)
        }
    }
}
