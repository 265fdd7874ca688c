//! Test-side oracles. These only use the public navigation API and never
//! call into the code under test for the quantity being checked.
#![allow(dead_code)]

use std::collections::HashSet;

use treebalance::estimator::{knuth_node_count, DepthHistogram};
use treebalance::{NodeHandle, Side, TreeStore};

/// Binary search tree built by inserting `keys` in order (duplicates skipped).
pub fn bst_from_keys(keys: &[u32]) -> TreeStore {
    let mut tree = TreeStore::new();
    let Some((&first, rest)) = keys.split_first() else {
        return tree;
    };
    let (t, root) = TreeStore::with_root();
    tree = t;
    let mut stored = vec![first];
    for &k in rest {
        let mut cur = root;
        loop {
            let here = stored[cur.index()];
            if k == here {
                break;
            }
            let side = if k < here { Side::Left } else { Side::Right };
            match tree.child(cur, side) {
                Some(c) => cur = c,
                None => {
                    let c = tree.add_child(cur, side).unwrap();
                    assert_eq!(c.index(), stored.len());
                    stored.push(k);
                    break;
                }
            }
        }
    }
    tree
}

/// Every node reachable from `start`, by plain recursion-free DFS.
pub fn reachable(tree: &TreeStore, start: NodeHandle) -> Vec<NodeHandle> {
    let mut out = Vec::new();
    let mut stack = vec![start];
    while let Some(n) = stack.pop() {
        out.push(n);
        stack.extend(tree.left(n));
        stack.extend(tree.right(n));
    }
    out
}

pub fn brute_count(tree: &TreeStore) -> usize {
    tree.root().map_or(0, |r| reachable(tree, r).len())
}

/// `hi` of a node's interval as an exact rational `num / 2^depth`, computed
/// from the original parent chain.
pub fn hi_exact(tree: &TreeStore, node: NodeHandle) -> (u128, u32) {
    let mut bits = Vec::new();
    let mut cur = node;
    while let Some(p) = tree.original_parent(cur) {
        bits.push(if tree.side_of(cur) == Some(Side::Right) {
            1u128
        } else {
            0
        });
        cur = p;
    }
    bits.reverse();
    let depth = bits.len() as u32;
    assert!(depth < 120, "tree too deep for the exact oracle");
    let num = bits.iter().fold(0u128, |acc, b| (acc << 1) | b) + 1;
    (num, depth)
}

pub fn cmp_hi(a: (u128, u32), b: (u128, u32)) -> std::cmp::Ordering {
    let e = a.1.max(b.1);
    (a.0 << (e - a.1)).cmp(&(b.0 << (e - b.1)))
}

/// Proper ancestors of `node` in the original tree.
pub fn ancestors(tree: &TreeStore, node: NodeHandle) -> HashSet<NodeHandle> {
    let mut out = HashSet::new();
    let mut cur = node;
    while let Some(p) = tree.original_parent(cur) {
        out.insert(p);
        cur = p;
    }
    out
}

/// Expectation of the single-probe Knuth estimate over every coin sequence,
/// together with the total probability mass (which must be 1).
pub fn enumerate_single_probe(tree: &TreeStore) -> (f64, f64) {
    let Some(root) = tree.root() else {
        return (0.0, 0.0);
    };
    let mut expectation = 0.0;
    let mut mass = 0.0;
    // (node, depth, probability of reaching node)
    let mut stack = vec![(root, 0u32, 1.0f64)];
    while let Some((n, d, q)) = stack.pop() {
        for side in [Side::Left, Side::Right] {
            let q2 = q * 0.5;
            match tree.child(n, side) {
                Some(c) => stack.push((c, d + 1, q2)),
                None => {
                    let mut h = DepthHistogram::new();
                    h.record(d);
                    expectation += q2 * knuth_node_count(&h).unwrap();
                    mass += q2;
                }
            }
        }
    }
    (expectation, mass)
}
