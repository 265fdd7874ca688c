//! Benchmark runner: parallel traversal of partitioned trees, timing,
//! parameter sweeps and CSV/JSON reports.

use std::fmt;
use std::hint::black_box;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::config::BalanceConfig;
use crate::error::{invalid_arg, Error, Result};
use crate::estimator::{estimate_subtree_seeded, WorkEstimate};
use crate::generate::TreeSpec;
use crate::partitioner::{partition, trivial_partition, PartitionPlan};
use crate::tree::{NodeHandle, TreeStore};

/// Environment variable capping the number of threads used for probing and
/// traversal.
pub const THREADS_ENV: &str = "TREEBALANCE_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Serial,
    Trivial,
    Suggested,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Serial => "serial",
            Mode::Trivial => "trivial",
            Mode::Suggested => "suggested",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "serial" => Ok(Mode::Serial),
            "trivial" => Ok(Mode::Trivial),
            "suggested" => Ok(Mode::Suggested),
            other => Err(invalid_arg(format!(
                "unknown mode {other:?} (expected serial, trivial or suggested)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    P,
    Psc,
    Asc,
    /// Whole-tree estimates at each psc value: visited share against error.
    VisitedVsError,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p" => Ok(SweepAxis::P),
            "psc" => Ok(SweepAxis::Psc),
            "asc" => Ok(SweepAxis::Asc),
            "visited-vs-error" | "visited" => Ok(SweepAxis::VisitedVsError),
            other => Err(invalid_arg(format!(
                "unknown sweep axis {other:?} (expected p, psc, asc or visited-vs-error)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub tree: TreeSpec,
    pub balance: BalanceConfig,
    pub mode: Mode,
    /// Synthetic arithmetic iterations per visited node.
    pub work_unit: u64,
    pub repetitions: usize,
    pub output: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            tree: TreeSpec::fibonacci(26),
            balance: BalanceConfig::default(),
            mode: Mode::Suggested,
            work_unit: 0,
            repetitions: 5,
            output: None,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions < 1 {
            return Err(invalid_arg("repetitions must be >= 1"));
        }
        self.balance.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraversalResult {
    pub per_worker_counts: Vec<usize>,
    pub per_worker_time: Vec<Duration>,
    /// Longest-running traversal thread.
    pub t_traverse_max: Duration,
    /// Folded per-node work results, kept so the work cannot be optimised away.
    pub checksum: u64,
}

/// Thread cap from `TREEBALANCE_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n >= 1)
}

pub fn available_cores() -> usize {
    thread::available_parallelism().map_or(1, |n| n.get())
}

#[inline]
fn node_work(acc: u64, node: NodeHandle, work_unit: u64) -> u64 {
    let mut x = acc ^ u64::from(node.raw());
    for _ in 0..work_unit {
        x = black_box(x)
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
    }
    x.rotate_left(7)
}

fn traverse_roots(tree: &TreeStore, roots: &[NodeHandle], work_unit: u64) -> (usize, u64) {
    let mut count = 0;
    let mut acc = 0u64;
    for &r in roots {
        for n in tree.preorder(r) {
            acc = node_work(acc, n, work_unit);
            count += 1;
        }
    }
    (count, black_box(acc))
}

/// Traverse the whole tree on the calling thread.
pub fn run_serial_traversal(tree: &TreeStore, work_unit: u64) -> TraversalResult {
    let start = Instant::now();
    let roots: Vec<NodeHandle> = tree.root().into_iter().collect();
    let (count, checksum) = traverse_roots(tree, &roots, work_unit);
    let t = start.elapsed();
    TraversalResult {
        per_worker_counts: vec![count],
        per_worker_time: vec![t],
        t_traverse_max: t,
        checksum,
    }
}

/// Traverse every worker's subtree set in parallel. Workers are dealt
/// round-robin onto at most `threads` threads (default: one per worker).
pub fn run_traversal(
    tree: &TreeStore,
    plan: &PartitionPlan,
    work_unit: u64,
    threads: Option<usize>,
) -> Result<TraversalResult> {
    if !plan.matches(tree) {
        return Err(invalid_arg(
            "partition plan was computed for a different tree",
        ));
    }
    let p = plan.workers();
    let threads = threads.unwrap_or(p).clamp(1, p.max(1));
    let walked = plan.clipped_tree();

    let per_thread = thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                s.spawn(move || {
                    let start = Instant::now();
                    let mut mine = Vec::new();
                    for w in (t..p).step_by(threads) {
                        let ws = Instant::now();
                        let (count, acc) = traverse_roots(walked, &plan.assignments[w], work_unit);
                        mine.push((w, count, ws.elapsed(), acc));
                    }
                    (mine, start.elapsed())
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("traversal thread panicked"))
            .collect::<Vec<_>>()
    });

    let mut counts = vec![0; p];
    let mut times = vec![Duration::ZERO; p];
    let mut slowest = Duration::ZERO;
    let mut checksum = 0u64;
    for (mine, elapsed) in per_thread {
        slowest = slowest.max(elapsed);
        for (w, count, t, acc) in mine {
            counts[w] = count;
            times[w] = t;
            checksum ^= acc;
        }
    }
    Ok(TraversalResult {
        per_worker_counts: counts,
        per_worker_time: times,
        t_traverse_max: slowest,
        checksum,
    })
}

/// One row of benchmark output. Times are in milliseconds, percentages are
/// in percent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mode: String,
    pub tree: String,
    pub nodes: usize,
    pub p: usize,
    pub psc: f64,
    pub asc: f64,
    pub seed: u64,
    pub t_serial_ms: f64,
    pub t_probe_ms: f64,
    pub t_partition_ms: f64,
    pub t_traverse_ms: f64,
    /// Serial time over this mode's probe + partition + traversal time.
    pub speedup: f64,
    /// `speedup` divided by the trivial split's speedup.
    pub ratio_vs_trivial: f64,
    /// Tree node count over the largest per-worker node count.
    pub count_speedup: f64,
    pub probe_overhead_pct: f64,
    pub visited_pct: f64,
    pub estimator_error_pct: f64,
    pub reprobes: u32,
    pub per_worker_counts: Vec<usize>,
}

pub const CSV_COLUMNS: [&str; 18] = [
    "mode",
    "tree",
    "nodes",
    "p",
    "psc",
    "asc",
    "seed",
    "t_serial_ms",
    "t_probe_ms",
    "t_partition_ms",
    "t_traverse_ms",
    "speedup",
    "ratio_vs_trivial",
    "count_speedup",
    "probe_overhead_pct",
    "visited_pct",
    "estimator_error_pct",
    "reprobes",
];

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn pct(part: f64, whole: f64) -> f64 {
    if whole > 0.0 {
        100.0 * part / whole
    } else {
        0.0
    }
}

/// Medians over repetitions of one partitioned mode.
struct ModeTiming {
    probe: f64,
    partition: f64,
    traverse: f64,
    plan: PartitionPlan,
    counts: Vec<usize>,
}

impl ModeTiming {
    fn total(&self) -> f64 {
        self.probe + self.partition + self.traverse
    }
}

fn time_mode(
    tree: &TreeStore,
    balance: &BalanceConfig,
    mode: Mode,
    work_unit: u64,
    reps: usize,
    threads: Option<usize>,
) -> Result<ModeTiming> {
    let mut probe = Vec::with_capacity(reps);
    let mut part = Vec::with_capacity(reps);
    let mut trav = Vec::with_capacity(reps);
    let mut last = None;
    for _ in 0..reps {
        let plan = match mode {
            Mode::Trivial => trivial_partition(tree, balance.p)?,
            _ => partition(tree, balance)?,
        };
        let tr = run_traversal(tree, &plan, work_unit, threads)?;
        probe.push(ms(plan.timings.probe));
        part.push(ms(plan.timings.partition));
        trav.push(ms(tr.t_traverse_max));
        last = Some((plan, tr.per_worker_counts));
    }
    let (plan, counts) = last.expect("reps >= 1");
    Ok(ModeTiming {
        probe: median(&mut probe),
        partition: median(&mut part),
        traverse: median(&mut trav),
        plan,
        counts,
    })
}

/// Benchmark `config.mode` on an already built tree. Serial and trivial
/// baselines are timed alongside to fill the ratio columns.
pub fn benchmark_tree(tree: &TreeStore, config: &BenchConfig) -> Result<MetricsReport> {
    config.validate()?;
    let cap = thread_cap();
    let mut balance = config.balance.clone();
    balance.threads = balance.threads.or(cap);
    let reps = config.repetitions;
    let nodes = tree.node_count();

    let mut serial_times: Vec<f64> = (0..reps)
        .map(|_| ms(run_serial_traversal(tree, config.work_unit).t_traverse_max))
        .collect();
    let t_serial = median(&mut serial_times);

    let mut report = MetricsReport {
        mode: config.mode.to_string(),
        tree: config.tree.to_string(),
        nodes,
        p: balance.p,
        psc: balance.psc,
        asc: balance.asc,
        seed: balance.seed,
        t_serial_ms: t_serial,
        t_probe_ms: 0.0,
        t_partition_ms: 0.0,
        t_traverse_ms: t_serial,
        speedup: 1.0,
        ratio_vs_trivial: 1.0,
        count_speedup: 1.0,
        probe_overhead_pct: 0.0,
        visited_pct: 0.0,
        estimator_error_pct: 0.0,
        reprobes: 0,
        per_worker_counts: vec![nodes],
    };

    let trivial = time_mode(tree, &balance, Mode::Trivial, config.work_unit, reps, cap)?;
    let trivial_speedup = t_serial / trivial.total();

    let timing = match config.mode {
        Mode::Serial => {
            report.ratio_vs_trivial = 1.0 / trivial_speedup;
            return Ok(report);
        }
        Mode::Trivial => trivial,
        Mode::Suggested => time_mode(tree, &balance, Mode::Suggested, config.work_unit, reps, cap)?,
    };

    let max_count = timing.counts.iter().copied().max().unwrap_or(0);
    report.t_probe_ms = timing.probe;
    report.t_partition_ms = timing.partition;
    report.t_traverse_ms = timing.traverse;
    report.speedup = t_serial / timing.total();
    report.ratio_vs_trivial = report.speedup / trivial_speedup;
    report.count_speedup = if max_count > 0 {
        nodes as f64 / max_count as f64
    } else {
        0.0
    };
    report.probe_overhead_pct = pct(timing.probe, timing.total());
    report.per_worker_counts = timing.counts;

    if config.mode == Mode::Suggested {
        let plan = &timing.plan;
        let exact = plan.exact_probed_count(tree) as f64;
        report.visited_pct = pct(plan.probe_cost.nodes_visited as f64, nodes as f64);
        report.estimator_error_pct = pct((plan.total_estimated_work - exact).abs(), exact);
        report.reprobes = plan.reprobe_count;
    }
    Ok(report)
}

pub fn run_benchmark(config: &BenchConfig) -> Result<MetricsReport> {
    let tree = config.tree.build()?;
    benchmark_tree(&tree, config)
}

/// Estimate the whole tree from its root. Returns the estimate, the share of
/// nodes visited by probes and the relative error, both in percent.
pub fn whole_tree_estimate(
    tree: &TreeStore,
    balance: &BalanceConfig,
) -> Result<(WorkEstimate, f64, f64)> {
    let root = tree.root().ok_or_else(|| invalid_arg("empty tree"))?;
    let est = estimate_subtree_seeded(tree, root, balance)?;
    let n = tree.node_count() as f64;
    let visited = pct(est.nodes_visited as f64, n);
    let error = pct((est.node_count - n).abs(), n);
    Ok((est, visited, error))
}

/// One report per value of `axis`. The tree is built once.
pub fn run_sweep(
    config: &BenchConfig,
    axis: SweepAxis,
    values: &[f64],
) -> Result<Vec<MetricsReport>> {
    if values.is_empty() {
        return Err(invalid_arg("sweep needs at least one value"));
    }
    config.validate()?;
    let tree = config.tree.build()?;
    let mut rows = Vec::with_capacity(values.len());
    for &v in values {
        let mut c = config.clone();
        match axis {
            SweepAxis::P => {
                if !(v >= 1.0 && v.fract() == 0.0) {
                    return Err(invalid_arg(format!(
                        "p sweep values must be positive integers, got {v}"
                    )));
                }
                c.balance.p = v as usize;
            }
            SweepAxis::Psc | SweepAxis::VisitedVsError => c.balance.psc = v,
            SweepAxis::Asc => c.balance.asc = v,
        }
        let row = if axis == SweepAxis::VisitedVsError {
            visited_vs_error_row(&tree, &c)?
        } else {
            benchmark_tree(&tree, &c)?
        };
        rows.push(row);
    }
    Ok(rows)
}

/// Median visited share and error of whole-tree estimates over
/// `repetitions` consecutive seeds.
fn visited_vs_error_row(tree: &TreeStore, config: &BenchConfig) -> Result<MetricsReport> {
    config.validate()?;
    let mut visited = Vec::with_capacity(config.repetitions);
    let mut error = Vec::with_capacity(config.repetitions);
    let mut probe_ms = Vec::with_capacity(config.repetitions);
    for r in 0..config.repetitions as u64 {
        let mut b = config.balance.clone();
        b.seed = b.seed.wrapping_add(r);
        let start = Instant::now();
        let (_, v, e) = whole_tree_estimate(tree, &b)?;
        probe_ms.push(ms(start.elapsed()));
        visited.push(v);
        error.push(e);
    }
    let nodes = tree.node_count();
    Ok(MetricsReport {
        mode: "estimate".to_string(),
        tree: config.tree.to_string(),
        nodes,
        p: 1,
        psc: config.balance.psc,
        asc: config.balance.asc,
        seed: config.balance.seed,
        t_serial_ms: 0.0,
        t_probe_ms: median(&mut probe_ms),
        t_partition_ms: 0.0,
        t_traverse_ms: 0.0,
        speedup: 0.0,
        ratio_vs_trivial: 0.0,
        count_speedup: 0.0,
        probe_overhead_pct: 0.0,
        visited_pct: median(&mut visited),
        estimator_error_pct: median(&mut error),
        reprobes: 0,
        per_worker_counts: Vec::new(),
    })
}

/// Render reports as CSV (header plus one line per report) or as a JSON array.
pub fn emit_report(rows: &[MetricsReport], format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(rows).expect("reports serialize");
            out.push(b'\n');
            out
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_COLUMNS).expect("write to memory");
            for r in rows {
                w.write_record([
                    r.mode.clone(),
                    r.tree.clone(),
                    r.nodes.to_string(),
                    r.p.to_string(),
                    r.psc.to_string(),
                    r.asc.to_string(),
                    r.seed.to_string(),
                    r.t_serial_ms.to_string(),
                    r.t_probe_ms.to_string(),
                    r.t_partition_ms.to_string(),
                    r.t_traverse_ms.to_string(),
                    r.speedup.to_string(),
                    r.ratio_vs_trivial.to_string(),
                    r.count_speedup.to_string(),
                    r.probe_overhead_pct.to_string(),
                    r.visited_pct.to_string(),
                    r.estimator_error_pct.to_string(),
                    r.reprobes.to_string(),
                ])
                .expect("write to memory");
            }
            w.into_inner().expect("flush to memory")
        }
    }
}

pub fn parse_json_report(bytes: &[u8]) -> Result<Vec<MetricsReport>> {
    serde_json::from_slice(bytes).map_err(|e| Error::Parse {
        offset: e.column(),
        message: e.to_string(),
    })
}

/// Format from the file extension: `.json` is JSON, anything else CSV.
pub fn format_for_path(path: &Path) -> ReportFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("json") => ReportFormat::Json,
        _ => ReportFormat::Csv,
    }
}

pub fn write_report(path: &Path, rows: &[MetricsReport]) -> Result<()> {
    std::fs::write(path, emit_report(rows, format_for_path(path))).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
