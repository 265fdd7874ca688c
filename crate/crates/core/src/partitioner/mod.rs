//! Turning work estimates into per-worker subtree sets.
//!
//! [`partition`] runs the whole pipeline; the individual steps are public so
//! they can be exercised on their own.

mod distribution;
mod plan;

use std::thread;
use std::time::{Duration, Instant};

pub use distribution::{build_distribution, DistPoint, WorkDistribution};
pub use plan::{PartitionPlan, PlanDocument, PlanTimings, ProbeCost, SubtreeEstimate, WorkerEntry};

use crate::config::BalanceConfig;
use crate::error::{invalid_arg, Result};
use crate::estimator::{estimate_subtree_seeded, WorkEstimate};
use crate::tree::{NodeHandle, Sibling, TreeStore};

/// The first tree level with at least `p` nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbingLevel {
    /// Nodes of the level, in interval order.
    pub nodes: Vec<NodeHandle>,
    pub depth: usize,
    /// No level reaches `p` nodes; `nodes` is then the widest level
    /// (the deepest one on ties).
    pub shortfall: bool,
}

pub fn probing_level(tree: &TreeStore, p: usize) -> Result<ProbingLevel> {
    if p < 1 {
        return Err(invalid_arg("worker count p must be >= 1"));
    }
    let root = tree.root().ok_or_else(|| invalid_arg("empty tree"))?;
    let mut level = vec![root];
    let mut depth = 0;
    let mut best = (level.clone(), 0);
    while level.len() < p {
        let next: Vec<NodeHandle> = level
            .iter()
            .flat_map(|&n| [tree.left(n), tree.right(n)])
            .flatten()
            .collect();
        if next.is_empty() {
            return Ok(ProbingLevel {
                nodes: best.0,
                depth: best.1,
                shortfall: true,
            });
        }
        depth += 1;
        if next.len() >= best.0.len() {
            best = (next.clone(), depth);
        }
        level = next;
    }
    Ok(ProbingLevel {
        nodes: level,
        depth,
        shortfall: false,
    })
}

/// Baseline split: deal the probing-level subtrees to workers in contiguous
/// blocks of `ceil(m / p)`; everything above the level goes to worker 0.
pub fn trivial_partition(tree: &TreeStore, p: usize) -> Result<PartitionPlan> {
    let start = Instant::now();
    let level = probing_level(tree, p)?;
    let root = tree.root().expect("probing_level checked the root");
    let mut working = tree.clone();
    let mut assignments = vec![Vec::new(); p];
    let block = level.nodes.len().div_ceil(p);
    for (i, &node) in level.nodes.iter().enumerate() {
        if node != root {
            working.clip_subtree(node)?;
        }
        assignments[i / block].push(node);
    }
    if !level.nodes.contains(&root) {
        assignments[0].push(root);
    }
    let elapsed = start.elapsed();

    let mut plan = PartitionPlan::new(tree, working, assignments);
    plan.probing_level = level;
    plan.timings.partition = elapsed;
    Ok(plan)
}

/// Bookkeeping from refining one boundary.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RefineOutcome {
    pub reprobes: u32,
    pub probes: u64,
    pub nodes_visited: u64,
    pub cap_hits: u32,
    /// Stopped because the subtree to probe next does not exist.
    pub clamped: bool,
    pub elapsed: Duration,
}

/// Add probe points around work boundary `y` until it lies within
/// `asc% * total / p` of a known point, or the re-probe budget runs out.
///
/// Each step probes the left half of the subtree spanning the bracketing
/// segment, inserts the resulting point at that half's end, and keeps the
/// half that still brackets `y`.
pub fn adaptive_refine(
    tree: &TreeStore,
    dist: &mut WorkDistribution,
    y: f64,
    config: &BalanceConfig,
) -> Result<RefineOutcome> {
    let start = Instant::now();
    let mut out = RefineOutcome::default();
    let total = dist.total_work();
    if !(y > 0.0 && y < total) {
        return Err(invalid_arg(format!(
            "boundary {y} not strictly inside (0, {total})"
        )));
    }
    let threshold = config.asc / 100.0 * total / config.p as f64;

    let Some(seg) = dist.segment_for(y) else {
        return Ok(out);
    };
    let mut p1 = dist.points()[seg];
    let mut p2 = dist.points()[seg + 1];
    let mut span = p2.node;

    while (y - p1.y).min(p2.y - y) > threshold && out.reprobes < config.max_reprobes {
        let Some(span_node) = span else {
            out.clamped = true;
            break;
        };
        let Some(probe_start) = tree.left(span_node) else {
            out.clamped = true;
            break;
        };
        let x_new = tree.interval_of(probe_start)?.hi();
        if !(x_new > p1.x && x_new < p2.x) {
            // Too deep for f64 to place a new point.
            out.clamped = true;
            break;
        }
        let est = estimate_subtree_seeded(tree, probe_start, config)?;
        out.reprobes += 1;
        out.probes += est.probes_used;
        out.nodes_visited += est.nodes_visited;
        out.cap_hits += u32::from(est.cap_hit);

        let y_new = (p1.y + est.node_count).clamp(p1.y, p2.y);
        let p_new = DistPoint {
            x: x_new,
            y: y_new,
            node: Some(probe_start),
        };
        let idx = dist.insert(p_new)?;
        // The segment after the new point now spans only the right half.
        let right = tree.right(span_node);
        dist.set_node(idx + 1, right);
        p2.node = right;

        if p1.y < y && y < y_new {
            p2 = p_new;
            span = Some(probe_start);
        } else if y_new < y && y < p2.y {
            p1 = p_new;
            span = right;
        } else {
            break;
        }
    }
    out.elapsed = start.elapsed();
    Ok(out)
}

/// Subtrees clipped off for one worker.
#[derive(Clone, Debug, PartialEq)]
pub struct Extraction {
    pub roots: Vec<NodeHandle>,
    /// Node the walk started from.
    pub start: NodeHandle,
    pub snapped: f64,
    pub clamped: bool,
}

/// Clip off, in order, the subtrees of the remaining tree that lie at or left
/// of `boundary_x`.
///
/// Starts at the node whose interval ends at the (snapped) boundary. A left
/// child is clipped, then the walk climbs to the next right-child ancestor;
/// a right child hands over to its left sibling. The walk ends at the root.
/// `boundary_x = 1` returns the root itself: the whole remaining tree.
pub fn extract_assignment(
    tree: &mut TreeStore,
    boundary_x: f64,
    granularity: u32,
) -> Result<Extraction> {
    let located = tree.locate_interval_end(boundary_x, granularity)?;
    let root = tree.root().expect("located a node");
    let mut roots = Vec::new();
    let mut cur = located.node;

    if cur == root {
        if located.snapped == 1.0 {
            roots.push(root);
        }
        return Ok(Extraction {
            roots,
            start: cur,
            snapped: located.snapped,
            clamped: located.clamped,
        });
    }

    // A clamped right child is taken whole before moving left.
    if located.clamped && tree.is_right_child(cur) {
        tree.clip_subtree(cur)?;
        roots.push(cur);
        let parent = tree
            .original_parent(cur)
            .expect("clipped non-root has a parent");
        cur = match tree.left(parent) {
            Some(s) => s,
            None => climb_to_right_child(tree, parent, root),
        };
    }

    while cur != root {
        if tree.is_left_child(cur) {
            let parent = tree.parent(cur).expect("left child has a parent");
            tree.clip_subtree(cur)?;
            roots.push(cur);
            cur = climb_to_right_child(tree, parent, root);
        } else {
            cur = match tree.left_sibling(cur) {
                Sibling::Present(s) => s,
                _ => {
                    let parent = tree.parent(cur).expect("right child has a parent");
                    climb_to_right_child(tree, parent, root)
                }
            };
        }
    }

    Ok(Extraction {
        roots,
        start: located.node,
        snapped: located.snapped,
        clamped: located.clamped,
    })
}

/// From `node`, go up until reaching the root or a right child.
fn climb_to_right_child(tree: &TreeStore, mut node: NodeHandle, root: NodeHandle) -> NodeHandle {
    while node != root && !tree.is_right_child(node) {
        node = tree.parent(node).expect("attached non-root has a parent");
    }
    node
}

fn probe_level_parallel(
    tree: &TreeStore,
    nodes: &[NodeHandle],
    config: &BalanceConfig,
) -> Result<(Vec<WorkEstimate>, Duration)> {
    let threads = config
        .threads
        .unwrap_or(nodes.len())
        .clamp(1, nodes.len().max(1));
    let results = thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                s.spawn(move || {
                    let start = Instant::now();
                    let mine = nodes
                        .iter()
                        .enumerate()
                        .skip(t)
                        .step_by(threads)
                        .map(|(i, &n)| estimate_subtree_seeded(tree, n, config).map(|e| (i, e)))
                        .collect::<Result<Vec<_>>>();
                    mine.map(|m| (m, start.elapsed()))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("probing thread panicked"))
            .collect::<Vec<_>>()
    });

    let mut estimates: Vec<Option<WorkEstimate>> = vec![None; nodes.len()];
    let mut slowest = Duration::ZERO;
    for r in results {
        let (mine, elapsed) = r?;
        slowest = slowest.max(elapsed);
        for (i, e) in mine {
            estimates[i] = Some(e);
        }
    }
    Ok((
        estimates
            .into_iter()
            .map(|e| e.expect("every subtree probed"))
            .collect(),
        slowest,
    ))
}

/// Full pipeline: probe the first level holding `p` subtrees (in parallel),
/// build the work curve, and for each of the first `p - 1` workers refine,
/// invert and clip at the equal-work boundary. The last worker receives the
/// remaining tree, including every node above the probing level.
///
/// Deterministic for a fixed `config.seed`: each subtree probes from its own
/// stream derived from the seed and the subtree's path.
pub fn partition(tree: &TreeStore, config: &BalanceConfig) -> Result<PartitionPlan> {
    config.validate()?;
    let p = config.p;
    let level = probing_level(tree, p)?;
    let root = tree.root().expect("probing_level checked the root");

    let (estimates, probe_time) = probe_level_parallel(tree, &level.nodes, config)?;
    let mut cost = ProbeCost::default();
    for e in &estimates {
        cost.add(e);
    }

    let start = Instant::now();
    let works: Vec<f64> = estimates.iter().map(|e| e.node_count).collect();
    let mut dist = build_distribution(tree, &level.nodes, &works)?;
    let total = dist.total_work();
    let subtree_estimates: Vec<SubtreeEstimate> = level
        .nodes
        .iter()
        .zip(estimates)
        .map(|(&root, estimate)| SubtreeEstimate { root, estimate })
        .collect();

    if !(total > 0.0) {
        let mut plan = trivial_partition(tree, p)?;
        plan.fallback_trivial = true;
        plan.subtree_estimates = subtree_estimates;
        plan.probe_cost = cost;
        plan.timings.probe = probe_time;
        return Ok(plan);
    }

    let mut working = tree.clone();
    let mut assignments = Vec::with_capacity(p);
    let mut boundaries = Vec::with_capacity(p.saturating_sub(1));
    let mut reprobes = 0u32;
    let mut reprobe_time = Duration::ZERO;
    let mut effective_x = Vec::with_capacity(p);
    let grid_step = 0.5f64.powi(config.granularity as i32);

    for t in 1..p {
        let y = t as f64 * total / p as f64;
        if y > 0.0 && y < total {
            let r = adaptive_refine(tree, &mut dist, y, config)?;
            reprobes += r.reprobes;
            cost.probes += r.probes;
            cost.nodes_visited += r.nodes_visited;
            cost.cap_hits += r.cap_hits;
            reprobe_time += r.elapsed;
        }
        // Keep x = 1 (the whole remaining tree) for the last worker.
        let x = dist
            .inverse_map(y)?
            .clamp(f64::MIN_POSITIVE, 1.0 - grid_step);
        let ext = extract_assignment(&mut working, x, config.granularity)?;
        boundaries.push(ext.snapped);
        let eff = if ext.roots.is_empty() {
            None
        } else {
            Some(working.interval_of(ext.start)?.hi())
        };
        effective_x.push(eff);
        assignments.push(ext.roots);
    }
    assignments.push(vec![root]);

    // Estimated work per worker, read back off the curve at the boundaries
    // the clipping actually used.
    let mut per_worker = Vec::with_capacity(p);
    let mut prev = 0.0f64;
    let mut prev_x = f64::NEG_INFINITY;
    for eff in &effective_x {
        let y = match eff {
            Some(x) if *x > prev_x => {
                prev_x = *x;
                dist.work_at(*x)
            }
            _ => prev,
        };
        per_worker.push((y - prev).max(0.0));
        prev = y.max(prev);
    }
    per_worker.push((total - prev).max(0.0));

    let partition_time = start.elapsed().saturating_sub(reprobe_time);

    let mut plan = PartitionPlan::new(tree, working, assignments);
    plan.per_worker_estimated_work = per_worker;
    plan.total_estimated_work = total;
    plan.probe_cost = cost;
    plan.reprobe_count = reprobes;
    plan.boundaries = boundaries;
    plan.probing_level = level;
    plan.subtree_estimates = subtree_estimates;
    plan.distribution = Some(dist);
    plan.timings = PlanTimings {
        probe: probe_time + reprobe_time,
        partition: partition_time,
    };
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_biased_random, generate_perfect};
    use crate::text::parse_tree;

    fn paths(tree: &TreeStore, nodes: &[NodeHandle]) -> Vec<String> {
        nodes
            .iter()
            .map(|&n| tree.interval_of(n).unwrap().path_string())
            .collect()
    }

    #[test]
    fn probing_level_examples() {
        let tree = generate_perfect(3).unwrap();
        let lv = probing_level(&tree, 3).unwrap();
        assert_eq!((lv.depth, lv.nodes.len(), lv.shortfall), (2, 4, false));
        assert_eq!(paths(&tree, &lv.nodes), vec!["LL", "LR", "RL", "RR"]);
        assert_eq!(
            probing_level(&tree, 1).unwrap().nodes,
            vec![tree.root().unwrap()]
        );

        let lv = probing_level(&tree, 100).unwrap();
        assert!(lv.shortfall);
        assert_eq!((lv.depth, lv.nodes.len()), (3, 8));

        // widest level is depth 1
        let lopsided = parse_tree("((. .) (. .))").unwrap();
        let lv = probing_level(&lopsided, 4).unwrap();
        assert!(lv.shortfall);
        assert_eq!(lv.depth, 1);
        assert!(probing_level(&tree, 0).is_err());
    }

    #[test]
    fn trivial_blocks() {
        let tree = generate_perfect(3).unwrap();
        let plan = trivial_partition(&tree, 3).unwrap();
        let ct = plan.clipped_tree();
        assert_eq!(paths(ct, &plan.assignments[0]), vec!["LL", "LR", "-"]);
        assert_eq!(paths(ct, &plan.assignments[1]), vec!["RL", "RR"]);
        assert!(plan.assignments[2].is_empty());
        let mut plan = plan;
        plan.fill_exact_counts();
        assert_eq!(plan.per_worker_exact_count, vec![9, 6, 0]);
    }

    #[test]
    fn extraction_examples() {
        let mut tree = generate_perfect(2).unwrap();
        let ext = extract_assignment(&mut tree, 0.5, 16).unwrap();
        assert_eq!(paths(&tree, &ext.roots), vec!["L"]);
        assert_eq!(tree.node_count(), 4);

        let mut tree = generate_perfect(3).unwrap();
        let ext = extract_assignment(&mut tree, 0.375, 16).unwrap();
        assert_eq!(paths(&tree, &ext.roots), vec!["LRL", "LL"]);
        let taken: usize = ext.roots.iter().map(|&r| tree.count_from(r)).sum();
        assert_eq!(taken, 4);
        assert_eq!(tree.node_count(), 11);

        let mut tree = generate_perfect(2).unwrap();
        let root = tree.root().unwrap();
        let ext = extract_assignment(&mut tree, 1.0, 16).unwrap();
        assert_eq!(ext.roots, vec![root]);
    }

    #[test]
    fn successive_extractions_are_ordered() {
        let mut tree = generate_perfect(3).unwrap();
        let a = extract_assignment(&mut tree, 0.25, 16).unwrap();
        let b = extract_assignment(&mut tree, 0.5, 16).unwrap();
        let c = extract_assignment(&mut tree, 0.75, 16).unwrap();
        assert_eq!(paths(&tree, &a.roots), vec!["LL"]);
        // L itself ends at 0.5, so it goes whole with what is left under it
        assert_eq!(paths(&tree, &b.roots), vec!["L"]);
        assert_eq!(tree.count_from(b.roots[0]), 4);
        assert_eq!(paths(&tree, &c.roots), vec!["RL"]);
        assert_eq!(tree.node_count(), 5);
    }

    #[test]
    fn extraction_with_missing_left_sibling() {
        // 0.75 runs into R's missing left child: R is taken whole, then L
        let mut tree = parse_tree("((. .) (. (. .)))").unwrap();
        let ext = extract_assignment(&mut tree, 0.75, 16).unwrap();
        assert!(ext.clamped);
        assert_eq!(paths(&tree, &ext.roots), vec!["R", "L"]);
        assert_eq!(tree.node_count(), 1);

        // RR has no left sibling: the walk climbs past R to L
        let mut tree = parse_tree("((. .) (. (. .)))").unwrap();
        let ext = extract_assignment(&mut tree, 1.0, 16).unwrap();
        assert_eq!(ext.roots, vec![tree.root().unwrap()]);
        let mut tree = parse_tree("((. .) (. ((. .) .)))").unwrap();
        let ext = extract_assignment(&mut tree, 0.875, 16).unwrap();
        assert_eq!(paths(&tree, &ext.roots), vec!["RRL", "L"]);
    }

    #[test]
    fn refine_reprobes_at_the_midpoint() {
        let tree = generate_perfect(10).unwrap();
        let root = tree.root().unwrap();
        let pts = vec![
            DistPoint {
                x: 0.0,
                y: 0.0,
                node: None,
            },
            DistPoint {
                x: 1.0,
                y: 100.0,
                node: Some(root),
            },
        ];
        let mut dist = WorkDistribution::from_points(pts).unwrap();
        let config = BalanceConfig::with_workers(4);
        let r = adaptive_refine(&tree, &mut dist, 50.0, &config).unwrap();
        assert!(r.reprobes >= 1);
        assert!(dist.points().iter().any(|p| p.x == 0.5));
        assert!(dist.points().windows(2).all(|w| w[0].y <= w[1].y));
    }

    #[test]
    fn refine_stops_on_an_existing_point() {
        let tree = generate_perfect(3).unwrap();
        let root = tree.root().unwrap();
        let pts = vec![
            DistPoint {
                x: 0.0,
                y: 0.0,
                node: None,
            },
            DistPoint {
                x: 0.5,
                y: 50.0,
                node: tree.left(root),
            },
            DistPoint {
                x: 1.0,
                y: 100.0,
                node: tree.right(root),
            },
        ];
        let mut dist = WorkDistribution::from_points(pts).unwrap();
        let config = BalanceConfig::with_workers(2);
        let r = adaptive_refine(&tree, &mut dist, 50.0, &config).unwrap();
        assert_eq!(r.reprobes, 0);
        assert_eq!(dist.points().len(), 3);
    }

    #[test]
    fn single_worker_gets_everything() {
        let tree = generate_perfect(4).unwrap();
        let mut plan = partition(&tree, &BalanceConfig::with_workers(1)).unwrap();
        assert_eq!(plan.assignments, vec![vec![tree.root().unwrap()]]);
        plan.fill_exact_counts();
        assert_eq!(plan.per_worker_exact_count, vec![31]);
    }

    #[test]
    fn perfect_tree_splits_evenly() {
        let tree = generate_perfect(10).unwrap();
        let mut plan = partition(&tree, &BalanceConfig::with_workers(4)).unwrap();
        plan.fill_exact_counts();
        let counts = &plan.per_worker_exact_count;
        assert_eq!(counts.iter().sum::<usize>(), 2047);
        let mean = 2047.0 / 4.0;
        let max = *counts.iter().max().unwrap() as f64;
        assert!(max / mean <= 1.05, "{counts:?}");
    }

    #[test]
    fn partition_is_deterministic_and_complete() {
        let tree = generate_biased_random(5000, 0.5, 3).unwrap();
        let config = BalanceConfig::with_workers(6);
        let mut a = partition(&tree, &config).unwrap();
        let b = partition(&tree, &config).unwrap();
        assert_eq!(a.assignments, b.assignments);
        assert_eq!(a.per_worker_estimated_work, b.per_worker_estimated_work);
        a.fill_exact_counts();
        assert_eq!(a.per_worker_exact_count.iter().sum::<usize>(), 5000);
        assert!(a.matches(&tree));
    }

    #[test]
    fn boundaries_near_the_end_leave_the_root_to_the_last_worker() {
        // a long right spine puts every boundary close to x = 1
        let config = BalanceConfig {
            granularity: 2,
            ..BalanceConfig::with_workers(4)
        };
        let skewed = parse_tree("(. (. (. ((. .) (. .)))))").unwrap();
        let mut plan = partition(&skewed, &config).unwrap();
        plan.fill_exact_counts();
        assert_eq!(plan.per_worker_exact_count.iter().sum::<usize>(), 6);
        let root = skewed.root().unwrap();
        let holders = plan
            .assignments
            .iter()
            .filter(|a| a.contains(&root))
            .count();
        assert_eq!(holders, 1);
        assert_eq!(plan.assignments[3], vec![root]);
    }

    #[test]
    fn plan_text_round_trip() {
        let tree = generate_perfect(6).unwrap();
        let plan = partition(&tree, &BalanceConfig::with_workers(3)).unwrap();
        let doc = plan.to_document().unwrap();
        let text = doc.to_text();
        assert!(text.starts_with("treebalance-plan 1\nworkers 3\n"));
        let parsed = PlanDocument::parse(&text).unwrap();
        assert_eq!(parsed, doc);
        assert_eq!(parsed.resolve(&tree).unwrap(), plan.assignments);
        assert!(PlanDocument::parse("nonsense").is_err());
        assert!(PlanDocument::parse(
            "treebalance-plan 1\nworkers 2\nworker 0 estimated 1 roots L\n"
        )
        .is_err());
    }
}
