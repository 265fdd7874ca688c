//! Subtree work estimation by random depth probes.
//!
//! A probe walks down from a subtree root, picking a child with a fair coin,
//! and stops when the coin picks an absent child. Each probe's depth feeds
//! two estimators:
//!
//! * a running 2^d-weighted mean depth pushed through the exponential fit
//!   [`fast_node_count`], used only to decide when to stop probing;
//! * a depth histogram from which [`knuth_node_count`] computes the final,
//!   unbiased node-count estimate.

use std::collections::VecDeque;

use rand::RngCore;

use crate::config::{BalanceConfig, FitConstants};
use crate::error::{invalid_arg, Result};
use crate::interval::Side;
use crate::rng::{self, Coin};
use crate::tree::{NodeHandle, TreeStore};

/// Arithmetic operations charged for one weighted-average update, and for a
/// rescale when a new deepest probe arrives.
const UPDATE_OPS: u64 = 4;
const RESCALE_OPS: u64 = 2;
/// Log-space fast estimate (one multiply, one add) plus the range test
/// (one subtract, one exp).
const WINDOW_OPS: u64 = 4;

/// Running `sum(d * 2^d) / sum(2^d)` over recorded depths.
///
/// Both sums are stored scaled by `2^-scale_exponent`, where the exponent is
/// the deepest depth seen so far, so the largest weight is always 1.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProbeStats {
    sum: f64,
    num: f64,
    probes: u64,
    scale_exponent: u32,
    arith_ops: u64,
}

fn pow2_neg(k: u32) -> f64 {
    // 2^-k, flushing to zero well past the subnormal range
    if k > 1100 {
        0.0
    } else {
        (2.0f64).powi(-(k as i32))
    }
}

impl ProbeStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, depth: u32) {
        let d = f64::from(depth);
        if self.probes == 0 {
            self.scale_exponent = depth;
            self.sum = d;
            self.num = 1.0;
        } else if depth > self.scale_exponent {
            let f = pow2_neg(depth - self.scale_exponent);
            self.sum = self.sum * f + d;
            self.num = self.num * f + 1.0;
            self.scale_exponent = depth;
            self.arith_ops += RESCALE_OPS;
        } else {
            let w = pow2_neg(self.scale_exponent - depth);
            self.sum += d * w;
            self.num += w;
        }
        self.probes += 1;
        self.arith_ops += UPDATE_OPS;
    }

    /// Weighted mean depth; 0 before the first probe.
    pub fn avg(&self) -> f64 {
        if self.probes == 0 {
            0.0
        } else {
            self.sum / self.num
        }
    }

    pub fn probes(&self) -> u64 {
        self.probes
    }

    pub fn scale_exponent(&self) -> u32 {
        self.scale_exponent
    }

    /// Scaled numerator and denominator: the true sums are these times
    /// `2^scale_exponent`.
    pub fn scaled_sums(&self) -> (f64, f64) {
        (self.sum, self.num)
    }

    pub fn arith_ops(&self) -> u64 {
        self.arith_ops
    }
}

/// Pure-function form of [`ProbeStats::update`].
pub fn update_weighted_average(mut stats: ProbeStats, depth: u32) -> ProbeStats {
    stats.update(depth);
    stats
}

/// Number of probes that terminated at each depth.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DepthHistogram {
    counts: Vec<u64>,
}

impl DepthHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        DepthHistogram { counts }
    }

    pub fn record(&mut self, depth: u32) {
        let d = depth as usize;
        if d >= self.counts.len() {
            self.counts.resize(d + 1, 0);
        }
        self.counts[d] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn count_at(&self, depth: usize) -> u64 {
        self.counts.get(depth).copied().unwrap_or(0)
    }

    pub fn max_depth(&self) -> Option<usize> {
        self.counts.iter().rposition(|&c| c > 0)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }
}

/// `alpha * e^(beta * avg_depth)`.
pub fn fast_node_count(avg_depth: f64, fit: FitConstants) -> f64 {
    fit.alpha * (fit.beta * avg_depth).exp()
}

/// Knuth-style estimate from a depth histogram.
///
/// With `reach(l)` the number of probes that got at least as deep as `l`,
/// returns `sum over l of 2^l * reach(l) / reach(0)`; level `l` holds at most
/// `2^l` nodes and a probe reaches any given node there with probability
/// `2^-l`. This is the mean of the single-probe estimates `2^(d+1) - 1`.
pub fn knuth_node_count(hist: &DepthHistogram) -> Result<f64> {
    let total = hist.total();
    if total == 0 {
        return Err(invalid_arg("depth histogram is empty"));
    }
    let Some(max_depth) = hist.max_depth() else {
        return Err(invalid_arg("depth histogram is empty"));
    };
    let mut reach = total;
    let mut count = 0.0;
    let mut capacity = 1.0f64;
    for level in 0..=max_depth {
        count += capacity * (reach as f64 / total as f64);
        reach -= hist.count_at(level);
        capacity *= 2.0;
    }
    Ok(count)
}

/// Sliding window over the last `len` fast estimates.
///
/// Estimates are kept as natural logs so that deep averages cannot overflow;
/// `(max - min) / max` equals `1 - e^(ln min - ln max)`.
#[derive(Clone, Debug)]
pub struct StopWindow {
    len: usize,
    psc: f64,
    log_estimates: VecDeque<f64>,
}

impl StopWindow {
    pub fn new(len: usize, psc: f64) -> Self {
        StopWindow {
            len,
            psc,
            log_estimates: VecDeque::with_capacity(len),
        }
    }

    pub fn push_avg_depth(&mut self, avg_depth: f64, fit: FitConstants) {
        self.push_log(fit.alpha.ln() + fit.beta * avg_depth);
    }

    pub fn push_log(&mut self, log_estimate: f64) {
        if self.log_estimates.len() == self.len {
            self.log_estimates.pop_front();
        }
        self.log_estimates.push_back(log_estimate);
    }

    pub fn is_full(&self) -> bool {
        self.log_estimates.len() == self.len
    }

    pub fn estimates(&self) -> impl Iterator<Item = f64> + '_ {
        self.log_estimates.iter().map(|l| l.exp())
    }

    /// `(max - min) / max` over the window; 1 when the window is empty.
    pub fn relative_range(&self) -> f64 {
        let mut it = self.log_estimates.iter().copied();
        let Some(first) = it.next() else { return 1.0 };
        let (lo, hi) = it.fold((first, first), |(lo, hi), x| (lo.min(x), hi.max(x)));
        1.0 - (lo - hi).exp()
    }

    pub fn should_stop(&self) -> bool {
        self.is_full() && self.relative_range() < self.psc
    }
}

/// Outcome of probing one subtree.
#[derive(Clone, Debug, PartialEq)]
pub struct WorkEstimate {
    /// Knuth estimate of the subtree's node count.
    pub node_count: f64,
    /// Final weighted mean depth.
    pub avg_depth: f64,
    pub probes_used: u64,
    /// Nodes touched by all probes (depth + 1 per probe).
    pub nodes_visited: u64,
    pub max_depth: u32,
    /// Stopped at `max_probes` rather than by the window criterion.
    pub cap_hit: bool,
    /// Arithmetic operations spent on the running statistics.
    pub arith_ops: u64,
}

/// One random descent from `start`; returns the depth (edges below `start`)
/// of the node where the coin first picked an absent child.
pub fn random_probe<R: RngCore>(tree: &TreeStore, start: NodeHandle, coin: &mut Coin<R>) -> u32 {
    let mut cur = start;
    let mut depth = 0u32;
    loop {
        let (left, right) = (tree.left(cur), tree.right(cur));
        if left.is_none() && right.is_none() {
            return depth;
        }
        let next = match coin.flip() {
            Side::Left => left,
            Side::Right => right,
        };
        match next {
            Some(n) => {
                cur = n;
                depth += 1;
            }
            None => return depth,
        }
    }
}

/// Probe `start` until the window of fast estimates settles below `psc`
/// (or `max_probes` is hit), then return the Knuth estimate.
pub fn estimate_subtree_work<R: RngCore>(
    tree: &TreeStore,
    start: NodeHandle,
    config: &BalanceConfig,
    rng: &mut R,
) -> WorkEstimate {
    let mut coin = Coin::new(rng);
    let mut stats = ProbeStats::new();
    let mut hist = DepthHistogram::new();
    let mut window = StopWindow::new(config.window.max(1), config.psc);
    let mut visited = 0u64;
    let mut window_ops = 0u64;
    let mut cap_hit = false;

    loop {
        let d = random_probe(tree, start, &mut coin);
        visited += u64::from(d) + 1;
        hist.record(d);
        stats.update(d);
        window.push_avg_depth(stats.avg(), config.fit);
        window_ops += WINDOW_OPS;
        if window.should_stop() {
            break;
        }
        if stats.probes() >= config.max_probes {
            cap_hit = true;
            break;
        }
    }

    WorkEstimate {
        node_count: knuth_node_count(&hist).expect("at least one probe recorded"),
        avg_depth: stats.avg(),
        probes_used: stats.probes(),
        nodes_visited: visited,
        max_depth: hist.max_depth().unwrap_or(0) as u32,
        cap_hit,
        arith_ops: stats.arith_ops() + window_ops,
    }
}

/// [`estimate_subtree_work`] with the generator stream derived from
/// `config.seed` and the subtree's root path.
pub fn estimate_subtree_seeded(
    tree: &TreeStore,
    start: NodeHandle,
    config: &BalanceConfig,
) -> Result<WorkEstimate> {
    let path = tree.path_of(start)?;
    let mut rng = rng::stream_rng(config.seed, &path);
    Ok(estimate_subtree_work(tree, start, config, &mut rng))
}
