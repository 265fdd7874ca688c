use std::fmt::Write as _;
use std::time::Duration;

use crate::error::{invalid_arg, Error, Result};
use crate::estimator::WorkEstimate;
use crate::interval::IntervalLabel;
use crate::partitioner::{ProbingLevel, WorkDistribution};
use crate::tree::{NodeHandle, TreeStore};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ProbeCost {
    pub probes: u64,
    pub nodes_visited: u64,
    pub cap_hits: u32,
}

impl ProbeCost {
    pub(crate) fn add(&mut self, e: &WorkEstimate) {
        self.probes += e.probes_used;
        self.nodes_visited += e.nodes_visited;
        self.cap_hits += u32::from(e.cap_hit);
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PlanTimings {
    /// Slowest probing thread plus all re-probing.
    pub probe: Duration,
    /// Distribution, inversion and clipping.
    pub partition: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubtreeEstimate {
    pub root: NodeHandle,
    pub estimate: WorkEstimate,
}

/// Per-worker subtree sets over a clipped copy of the source tree.
///
/// Every assigned root is either the tree root or a clipped root, so walking
/// each worker's roots through the clipped copy visits exactly that worker's
/// nodes.
#[derive(Clone, Debug)]
pub struct PartitionPlan {
    /// Subtree roots per worker, in interval order.
    pub assignments: Vec<Vec<NodeHandle>>,
    pub per_worker_estimated_work: Vec<f64>,
    /// Empty until [`PartitionPlan::fill_exact_counts`] runs.
    pub per_worker_exact_count: Vec<usize>,
    pub total_estimated_work: f64,
    pub probe_cost: ProbeCost,
    pub reprobe_count: u32,
    /// Snapped boundary per worker except the last.
    pub boundaries: Vec<f64>,
    pub probing_level: ProbingLevel,
    pub subtree_estimates: Vec<SubtreeEstimate>,
    pub distribution: Option<WorkDistribution>,
    /// The distribution was flat and the trivial split was used instead.
    pub fallback_trivial: bool,
    pub timings: PlanTimings,
    clipped: TreeStore,
    source_len: usize,
    source_root: Option<NodeHandle>,
}

impl PartitionPlan {
    pub(crate) fn new(
        source: &TreeStore,
        clipped: TreeStore,
        assignments: Vec<Vec<NodeHandle>>,
    ) -> Self {
        let p = assignments.len();
        PartitionPlan {
            assignments,
            per_worker_estimated_work: vec![0.0; p],
            per_worker_exact_count: Vec::new(),
            total_estimated_work: 0.0,
            probe_cost: ProbeCost::default(),
            reprobe_count: 0,
            boundaries: Vec::new(),
            probing_level: ProbingLevel {
                nodes: Vec::new(),
                depth: 0,
                shortfall: false,
            },
            subtree_estimates: Vec::new(),
            distribution: None,
            fallback_trivial: false,
            timings: PlanTimings::default(),
            clipped,
            source_len: source.arena_len(),
            source_root: source.root(),
        }
    }

    pub fn workers(&self) -> usize {
        self.assignments.len()
    }

    /// The source tree with every assigned subtree detached.
    pub fn clipped_tree(&self) -> &TreeStore {
        &self.clipped
    }

    /// Whether this plan was computed for `tree`.
    pub fn matches(&self, tree: &TreeStore) -> bool {
        tree.arena_len() == self.source_len && tree.root() == self.source_root
    }

    /// Nodes owned by `worker`.
    pub fn worker_nodes(&self, worker: usize) -> impl Iterator<Item = NodeHandle> + '_ {
        self.assignments[worker]
            .iter()
            .flat_map(move |&r| self.clipped.preorder(r))
    }

    pub fn fill_exact_counts(&mut self) {
        self.per_worker_exact_count = (0..self.workers())
            .map(|w| self.worker_nodes(w).count())
            .collect();
    }

    /// Sum of exact node counts over the probed subtrees, for measuring
    /// estimator error. Walks the source tree.
    pub fn exact_probed_count(&self, source: &TreeStore) -> usize {
        self.subtree_estimates
            .iter()
            .map(|s| source.count_from(s.root))
            .sum()
    }

    pub fn to_document(&self) -> Result<PlanDocument> {
        let workers = self
            .assignments
            .iter()
            .enumerate()
            .map(|(index, roots)| {
                Ok(WorkerEntry {
                    index,
                    estimated: self
                        .per_worker_estimated_work
                        .get(index)
                        .copied()
                        .unwrap_or(0.0),
                    roots: roots
                        .iter()
                        .map(|&r| self.clipped.interval_of(r))
                        .collect::<Result<Vec<_>>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PlanDocument { workers })
    }
}

/// One worker's line of a [`PlanDocument`].
#[derive(Clone, Debug, PartialEq)]
pub struct WorkerEntry {
    pub index: usize,
    pub estimated: f64,
    pub roots: Vec<IntervalLabel>,
}

/// Text form of a plan.
///
/// ```text
/// treebalance-plan 1
/// workers 2
/// worker 0 estimated 3 roots L
/// worker 1 estimated 4 roots -
/// ```
///
/// Roots are root-to-node paths of `L`/`R`, comma separated; `-` is the tree
/// root. A worker with no subtrees ends its line after `roots`. Estimated
/// work is printed in shortest round-trip form.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanDocument {
    pub workers: Vec<WorkerEntry>,
}

const PLAN_HEADER: &str = "treebalance-plan 1";

impl PlanDocument {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{PLAN_HEADER}");
        let _ = writeln!(out, "workers {}", self.workers.len());
        for w in &self.workers {
            let roots: Vec<String> = w.roots.iter().map(|r| r.path_string()).collect();
            let _ = write!(out, "worker {} estimated {} roots", w.index, w.estimated);
            if !roots.is_empty() {
                let _ = write!(out, " {}", roots.join(","));
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::Parse {
            offset: line,
            message: format!("plan line {}: {msg}", line + 1),
        };
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, l)) if l.trim() == PLAN_HEADER => {}
            _ => return Err(bad(0, "missing header")),
        }
        let (n_line, count_line) = lines.next().ok_or_else(|| bad(1, "missing worker count"))?;
        let count: usize = count_line
            .trim()
            .strip_prefix("workers ")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| bad(n_line, "expected `workers <n>`"))?;

        let mut workers = Vec::with_capacity(count);
        for (i, line) in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() < 5
                || toks.len() > 6
                || toks[0] != "worker"
                || toks[2] != "estimated"
                || toks[4] != "roots"
            {
                return Err(bad(i, "expected `worker <i> estimated <w> roots [paths]`"));
            }
            let index: usize = toks[1].parse().map_err(|_| bad(i, "bad worker index"))?;
            let estimated: f64 = toks[3].parse().map_err(|_| bad(i, "bad estimated work"))?;
            let roots = match toks.get(5) {
                Some(list) => list
                    .split(',')
                    .map(IntervalLabel::parse_path)
                    .collect::<Result<Vec<_>>>()?,
                None => Vec::new(),
            };
            if index != workers.len() {
                return Err(bad(i, "workers out of order"));
            }
            workers.push(WorkerEntry {
                index,
                estimated,
                roots,
            });
        }
        if workers.len() != count {
            return Err(invalid_arg(format!(
                "plan declares {count} workers but lists {}",
                workers.len()
            )));
        }
        Ok(PlanDocument { workers })
    }

    /// Resolve root paths against `tree` (unclipped), worker by worker.
    pub fn resolve(&self, tree: &TreeStore) -> Result<Vec<Vec<NodeHandle>>> {
        self.workers
            .iter()
            .map(|w| {
                w.roots
                    .iter()
                    .map(|label| {
                        tree.node_at_path(label.path()).ok_or_else(|| {
                            invalid_arg(format!(
                                "path {} does not exist in tree",
                                label.path_string()
                            ))
                        })
                    })
                    .collect()
            })
            .collect()
    }
}
