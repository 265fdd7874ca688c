//! Arena-backed binary tree with parent links.
//!
//! Nodes are never removed from the arena. Clipping a subtree only cuts the
//! link from its parent, so every handle stays resolvable and a clipped node
//! keeps its original interval label.

use crate::error::{invalid_arg, Error, Result};
use crate::interval::{snap_to_grid, IntervalLabel, Side};

const NIL: u32 = u32::MAX;

/// Opaque index of a node inside one [`TreeStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeHandle(u32);

impl NodeHandle {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(index: usize) -> Self {
        NodeHandle(index as u32)
    }

    pub fn raw(self) -> u32 {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Node {
    parent: u32,
    left: u32,
    right: u32,
    /// Side of the original parent this node hangs from.
    side: Option<Side>,
    detached: bool,
}

impl Node {
    const fn new(parent: u32, side: Option<Side>) -> Self {
        Node {
            parent,
            left: NIL,
            right: NIL,
            side,
            detached: false,
        }
    }
}

fn opt(raw: u32) -> Option<NodeHandle> {
    (raw != NIL).then_some(NodeHandle(raw))
}

/// Result of a sibling query.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sibling {
    Present(NodeHandle),
    /// The sibling slot exists but holds no node.
    Missing,
    /// The node has no sibling slot on that side (root, or wrong side).
    NoSlot,
}

impl Sibling {
    pub fn node(self) -> Option<NodeHandle> {
        match self {
            Sibling::Present(h) => Some(h),
            _ => None,
        }
    }
}

/// Structural relations of one node, as seen in the current (possibly clipped) tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Relations {
    pub parent: Option<NodeHandle>,
    pub left_child: Option<NodeHandle>,
    pub right_child: Option<NodeHandle>,
    pub left_sibling: Sibling,
    pub right_sibling: Sibling,
    pub is_left_child: bool,
    pub is_right_child: bool,
}

/// Where an interval-end lookup landed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Located {
    pub node: NodeHandle,
    /// The grid point actually searched for.
    pub snapped: f64,
    /// True when the descent ran out of nodes before reaching `snapped`.
    pub clamped: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TreeStore {
    nodes: Vec<Node>,
    root: Option<NodeHandle>,
}

impl TreeStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(capacity: usize) -> Self {
        TreeStore {
            nodes: Vec::with_capacity(capacity),
            root: None,
        }
    }

    /// A tree holding a single root node.
    pub fn with_root() -> (Self, NodeHandle) {
        let mut tree = Self::new();
        let root = tree.set_root();
        (tree, root)
    }

    pub(crate) fn set_root(&mut self) -> NodeHandle {
        assert!(self.nodes.is_empty(), "root must be the first node");
        self.nodes.push(Node::new(NIL, None));
        let root = NodeHandle(0);
        self.root = Some(root);
        root
    }

    pub fn root(&self) -> Option<NodeHandle> {
        self.root
    }

    pub fn is_empty(&self) -> bool {
        self.root.is_none()
    }

    /// Number of nodes ever allocated, including clipped ones.
    pub fn arena_len(&self) -> usize {
        self.nodes.len()
    }

    pub fn contains(&self, node: NodeHandle) -> bool {
        node.index() < self.nodes.len()
    }

    fn get(&self, node: NodeHandle) -> Result<&Node> {
        self.nodes
            .get(node.index())
            .ok_or(Error::InvalidHandle(node.0))
    }

    /// Attach a new node under `parent` on `side`.
    pub fn add_child(&mut self, parent: NodeHandle, side: Side) -> Result<NodeHandle> {
        let slot = match side {
            Side::Left => self.get(parent)?.left,
            Side::Right => self.get(parent)?.right,
        };
        if slot != NIL {
            return Err(Error::InvalidState(format!(
                "node {} already has a {side:?} child",
                parent.0
            )));
        }
        Ok(self.push_child(parent, side))
    }

    /// Unchecked variant for generators that know the slot is free.
    pub(crate) fn push_child(&mut self, parent: NodeHandle, side: Side) -> NodeHandle {
        let id = self.nodes.len() as u32;
        assert!(id != NIL, "arena full");
        self.nodes.push(Node::new(parent.0, Some(side)));
        let p = &mut self.nodes[parent.index()];
        match side {
            Side::Left => p.left = id,
            Side::Right => p.right = id,
        }
        NodeHandle(id)
    }

    pub fn left(&self, node: NodeHandle) -> Option<NodeHandle> {
        opt(self.nodes[node.index()].left)
    }

    pub fn right(&self, node: NodeHandle) -> Option<NodeHandle> {
        opt(self.nodes[node.index()].right)
    }

    pub fn child(&self, node: NodeHandle, side: Side) -> Option<NodeHandle> {
        match side {
            Side::Left => self.left(node),
            Side::Right => self.right(node),
        }
    }

    /// Parent in the current tree; `None` for the root and for clipped roots.
    pub fn parent(&self, node: NodeHandle) -> Option<NodeHandle> {
        let n = &self.nodes[node.index()];
        if n.detached {
            None
        } else {
            opt(n.parent)
        }
    }

    /// Parent in the original tree shape, even for a clipped root.
    pub fn original_parent(&self, node: NodeHandle) -> Option<NodeHandle> {
        opt(self.nodes[node.index()].parent)
    }

    /// Which side of its original parent this node hangs from, ignoring clipping.
    pub fn side_of(&self, node: NodeHandle) -> Option<Side> {
        self.nodes[node.index()].side
    }

    pub fn is_left_child(&self, node: NodeHandle) -> bool {
        self.parent(node).is_some() && self.side_of(node) == Some(Side::Left)
    }

    pub fn is_right_child(&self, node: NodeHandle) -> bool {
        self.parent(node).is_some() && self.side_of(node) == Some(Side::Right)
    }

    pub fn left_sibling(&self, node: NodeHandle) -> Sibling {
        match self.parent(node) {
            Some(p) if self.is_right_child(node) => match self.left(p) {
                Some(s) => Sibling::Present(s),
                None => Sibling::Missing,
            },
            _ => Sibling::NoSlot,
        }
    }

    pub fn right_sibling(&self, node: NodeHandle) -> Sibling {
        match self.parent(node) {
            Some(p) if self.is_left_child(node) => match self.right(p) {
                Some(s) => Sibling::Present(s),
                None => Sibling::Missing,
            },
            _ => Sibling::NoSlot,
        }
    }

    pub fn navigate(&self, node: NodeHandle) -> Result<Relations> {
        self.get(node)?;
        Ok(Relations {
            parent: self.parent(node),
            left_child: self.left(node),
            right_child: self.right(node),
            left_sibling: self.left_sibling(node),
            right_sibling: self.right_sibling(node),
            is_left_child: self.is_left_child(node),
            is_right_child: self.is_right_child(node),
        })
    }

    /// Root-to-node path in the original tree shape.
    pub fn path_of(&self, node: NodeHandle) -> Result<Vec<Side>> {
        self.get(node)?;
        let mut path = Vec::new();
        let mut cur = node;
        while let Some(side) = self.side_of(cur) {
            path.push(side);
            cur = NodeHandle(self.nodes[cur.index()].parent);
        }
        path.reverse();
        Ok(path)
    }

    pub fn interval_of(&self, node: NodeHandle) -> Result<IntervalLabel> {
        Ok(IntervalLabel::from_path(self.path_of(node)?))
    }

    /// Follow `path` from the root through existing links.
    pub fn node_at_path(&self, path: &[Side]) -> Option<NodeHandle> {
        let mut cur = self.root?;
        for side in path {
            cur = self.child(cur, *side)?;
        }
        Some(cur)
    }

    /// Shallowest node whose interval ends at `x` snapped to `k / 2^granularity`.
    ///
    /// Descends from the root going left while `x <= mid`. When the path runs
    /// into a missing child, the deepest node reached is returned.
    pub fn node_at_interval_end(&self, x: f64, granularity: u32) -> Result<NodeHandle> {
        Ok(self.locate_interval_end(x, granularity)?.node)
    }

    pub fn locate_interval_end(&self, x: f64, granularity: u32) -> Result<Located> {
        let snapped = snap_to_grid(x, granularity)?;
        let mut node = self.root.ok_or_else(|| invalid_arg("empty tree"))?;
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        loop {
            if hi == snapped {
                return Ok(Located {
                    node,
                    snapped,
                    clamped: false,
                });
            }
            let mid = 0.5 * (lo + hi);
            let next = if snapped <= mid {
                hi = mid;
                self.left(node)
            } else {
                lo = mid;
                self.right(node)
            };
            match next {
                Some(c) => node = c,
                None => {
                    return Ok(Located {
                        node,
                        snapped,
                        clamped: true,
                    })
                }
            }
        }
    }

    /// True when `node` is reachable from the root through current links.
    pub fn is_attached(&self, node: NodeHandle) -> bool {
        let mut cur = node;
        loop {
            if Some(cur) == self.root {
                return true;
            }
            match self.parent(cur) {
                Some(p) => cur = p,
                None => return false,
            }
        }
    }

    /// Detach `node` from its parent and return it as the root of the
    /// clipped-off subtree. The clipped nodes stay in the arena and can be
    /// walked from the returned handle.
    pub fn clip_subtree(&mut self, node: NodeHandle) -> Result<NodeHandle> {
        self.get(node)?;
        if Some(node) == self.root {
            return Err(invalid_arg("cannot clip the root"));
        }
        if !self.is_attached(node) {
            return Err(Error::InvalidState(format!(
                "node {} is already clipped",
                node.0
            )));
        }
        let side = self.side_of(node).expect("attached non-root has a side");
        let parent = self.nodes[node.index()].parent as usize;
        match side {
            Side::Left => self.nodes[parent].left = NIL,
            Side::Right => self.nodes[parent].right = NIL,
        }
        self.nodes[node.index()].detached = true;
        Ok(node)
    }

    /// Preorder walk of the subtree under `start` through current links.
    pub fn preorder(&self, start: NodeHandle) -> Preorder<'_> {
        Preorder {
            tree: self,
            stack: vec![start.0],
        }
    }

    /// Number of nodes reachable from `start`.
    pub fn count_from(&self, start: NodeHandle) -> usize {
        self.preorder(start).count()
    }

    /// Exact number of nodes reachable from the root.
    pub fn node_count(&self) -> usize {
        self.root.map_or(0, |r| self.count_from(r))
    }

    pub fn exact_count(&self) -> usize {
        self.node_count()
    }

    /// Mean depth over all null-child slots (a leaf contributes two slots at
    /// its depth, a one-child node one slot). This is the depth a probe
    /// records when it terminates at that slot.
    pub fn exact_mean_termination_depth(&self) -> f64 {
        let Some(root) = self.root else { return 0.0 };
        let (sum, slots) = self.termination_slots(root);
        if slots == 0 {
            0.0
        } else {
            sum as f64 / slots as f64
        }
    }

    fn termination_slots(&self, start: NodeHandle) -> (u128, u64) {
        let mut sum: u128 = 0;
        let mut slots: u64 = 0;
        let mut stack = vec![(start.0, 0u64)];
        while let Some((id, depth)) = stack.pop() {
            let n = &self.nodes[id as usize];
            for child in [n.left, n.right] {
                if child == NIL {
                    sum += u128::from(depth);
                    slots += 1;
                } else {
                    stack.push((child, depth + 1));
                }
            }
        }
        (sum, slots)
    }

    /// Depth of the deepest node under `start`, counted from `start`.
    pub fn height_from(&self, start: NodeHandle) -> usize {
        let mut best = 0;
        let mut stack = vec![(start.0, 0usize)];
        while let Some((id, depth)) = stack.pop() {
            best = best.max(depth);
            let n = &self.nodes[id as usize];
            for child in [n.left, n.right] {
                if child != NIL {
                    stack.push((child, depth + 1));
                }
            }
        }
        best
    }
}

pub struct Preorder<'a> {
    tree: &'a TreeStore,
    stack: Vec<u32>,
}

impl Iterator for Preorder<'_> {
    type Item = NodeHandle;

    fn next(&mut self) -> Option<NodeHandle> {
        let id = self.stack.pop()?;
        let n = &self.tree.nodes[id as usize];
        if n.right != NIL {
            self.stack.push(n.right);
        }
        if n.left != NIL {
            self.stack.push(n.left);
        }
        Some(NodeHandle(id))
    }
}
