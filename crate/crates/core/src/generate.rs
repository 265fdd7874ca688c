//! Workload trees: Fibonacci trees, biased random search trees, and a few
//! shapes used as oracles (perfect trees, right spines).

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};
use crate::interval::Side;
use crate::rng;
use crate::tree::{NodeHandle, TreeStore};

/// Node count of the order-`k` Fibonacci tree: `N(1) = N(2) = 1`,
/// `N(k) = N(k-1) + N(k-2) + 1`.
pub fn fibonacci_node_count(order: u32) -> u64 {
    let (mut a, mut b) = (1u64, 1u64);
    for _ in 2..order {
        let next = a + b + 1;
        a = b;
        b = next;
    }
    b
}

/// Order-`k` Fibonacci tree: orders 1 and 2 are a single node; order `k >= 3`
/// has an order `k-1` left subtree and an order `k-2` right subtree.
pub fn generate_fibonacci(order: u32) -> Result<TreeStore> {
    if order < 1 {
        return Err(invalid_arg("fibonacci order must be >= 1"));
    }
    if order > 45 {
        return Err(invalid_arg(
            "fibonacci order above 45 does not fit the arena",
        ));
    }
    let mut tree = TreeStore::with_capacity(fibonacci_node_count(order) as usize);
    let root = tree.set_root();
    let mut stack = vec![(root, order)];
    while let Some((node, k)) = stack.pop() {
        if k >= 3 {
            let left = tree.push_child(node, Side::Left);
            let right = tree.push_child(node, Side::Right);
            stack.push((right, k - 2));
            stack.push((left, k - 1));
        }
    }
    Ok(tree)
}

/// Binary search tree built by inserting `1..=n` after `floor(swap_fraction * n)`
/// random transpositions, with no rebalancing.
pub fn generate_biased_random(n: usize, swap_fraction: f64, seed: u64) -> Result<TreeStore> {
    if n < 1 {
        return Err(invalid_arg("tree size must be >= 1"));
    }
    if !(0.0..=1.0).contains(&swap_fraction) {
        return Err(invalid_arg(format!(
            "swap fraction must be in [0, 1], got {swap_fraction}"
        )));
    }
    if n >= u32::MAX as usize {
        return Err(invalid_arg("tree size does not fit the arena"));
    }
    let mut keys: Vec<u32> = (1..=n as u32).collect();
    let swaps = (swap_fraction * n as f64).floor() as usize;
    let mut rng = rng::seeded(seed);
    for _ in 0..swaps {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        keys.swap(i, j);
    }

    let mut tree = TreeStore::with_capacity(n);
    let root = tree.set_root();
    // key of each arena slot, indexed by handle
    let mut node_key = Vec::with_capacity(n);
    node_key.push(keys[0]);
    for &key in &keys[1..] {
        let mut cur = root;
        loop {
            let side = if key < node_key[cur.index()] {
                Side::Left
            } else {
                Side::Right
            };
            match tree.child(cur, side) {
                Some(next) => cur = next,
                None => {
                    tree.push_child(cur, side);
                    node_key.push(key);
                    break;
                }
            }
        }
    }
    Ok(tree)
}

/// Perfect tree with all leaves at `depth` (`2^(depth+1) - 1` nodes).
pub fn generate_perfect(depth: u32) -> Result<TreeStore> {
    if depth > 30 {
        return Err(invalid_arg(
            "perfect tree depth above 30 does not fit the arena",
        ));
    }
    let mut tree = TreeStore::with_capacity((1usize << (depth + 1)) - 1);
    let root = tree.set_root();
    let mut level = vec![root];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(level.len() * 2);
        for node in level {
            next.push(tree.push_child(node, Side::Left));
            next.push(tree.push_child(node, Side::Right));
        }
        level = next;
    }
    Ok(tree)
}

/// Chain of `n` nodes where every non-leaf has only a right child.
pub fn generate_right_spine(n: usize) -> Result<TreeStore> {
    if n < 1 {
        return Err(invalid_arg("spine length must be >= 1"));
    }
    let mut tree = TreeStore::with_capacity(n);
    let mut cur: NodeHandle = tree.set_root();
    for _ in 1..n {
        cur = tree.push_child(cur, Side::Right);
    }
    Ok(tree)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeKind {
    Fibonacci,
    BiasedRandom,
    Perfect,
}

/// Recipe for a workload tree. `order_or_size` is the Fibonacci order, the
/// random tree's node count, or the perfect tree's depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeSpec {
    pub kind: TreeKind,
    pub order_or_size: u64,
    pub swap_fraction: f64,
    pub seed: u64,
}

impl TreeSpec {
    pub fn fibonacci(order: u32) -> Self {
        TreeSpec {
            kind: TreeKind::Fibonacci,
            order_or_size: u64::from(order),
            swap_fraction: 0.0,
            seed: 0,
        }
    }

    pub fn biased_random(n: usize, swap_fraction: f64, seed: u64) -> Self {
        TreeSpec {
            kind: TreeKind::BiasedRandom,
            order_or_size: n as u64,
            swap_fraction,
            seed,
        }
    }

    pub fn perfect(depth: u32) -> Self {
        TreeSpec {
            kind: TreeKind::Perfect,
            order_or_size: u64::from(depth),
            swap_fraction: 0.0,
            seed: 0,
        }
    }

    pub fn build(&self) -> Result<TreeStore> {
        match self.kind {
            TreeKind::Fibonacci => {
                if self.order_or_size < 1 {
                    return Err(invalid_arg("fibonacci order must be >= 1"));
                }
                generate_fibonacci(u32::try_from(self.order_or_size).unwrap_or(u32::MAX))
            }
            TreeKind::BiasedRandom => generate_biased_random(
                usize::try_from(self.order_or_size).unwrap_or(usize::MAX),
                self.swap_fraction,
                self.seed,
            ),
            TreeKind::Perfect => {
                generate_perfect(u32::try_from(self.order_or_size).unwrap_or(u32::MAX))
            }
        }
    }
}

impl fmt::Display for TreeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TreeKind::Fibonacci => write!(f, "fib:{}", self.order_or_size),
            TreeKind::BiasedRandom => {
                write!(f, "random:{}:{}", self.order_or_size, self.swap_fraction)
            }
            TreeKind::Perfect => write!(f, "perfect:{}", self.order_or_size),
        }
    }
}

/// Parses `fib:<order>`, `random:<n>:<swap_fraction>` or `perfect:<depth>`.
/// The seed is left at 0; callers set it from their own configuration.
impl FromStr for TreeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| -> Result<u64> {
            t.parse::<u64>()
                .map_err(|_| invalid_arg(format!("bad number {t:?} in tree spec {s:?}")))
        };
        let spec = match parts.as_slice() {
            ["fib", order] => TreeSpec {
                kind: TreeKind::Fibonacci,
                order_or_size: num(order)?,
                swap_fraction: 0.0,
                seed: 0,
            },
            ["random", n, frac] => TreeSpec {
                kind: TreeKind::BiasedRandom,
                order_or_size: num(n)?,
                swap_fraction: frac
                    .parse()
                    .map_err(|_| invalid_arg(format!("bad swap fraction in {s:?}")))?,
                seed: 0,
            },
            ["perfect", depth] => TreeSpec {
                kind: TreeKind::Perfect,
                order_or_size: num(depth)?,
                swap_fraction: 0.0,
                seed: 0,
            },
            _ => {
                return Err(invalid_arg(format!(
                    "tree spec {s:?} is not fib:<order>, random:<n>:<swap>, or perfect:<depth>"
                )))
            }
        };
        if spec.order_or_size < 1 && spec.kind != TreeKind::Perfect {
            return Err(invalid_arg("tree order/size must be >= 1"));
        }
        Ok(spec)
    }
}
