//! Rooted multifurcating trees whose leaves are graph vertices.
//!
//! A [`FragTree`] is stored as an arena of nodes. Every internal node has at
//! least two children, and child order carries no meaning: equality,
//! hashing and the text forms all go through the canonical form, in which
//! children are ordered by their smallest leaf label.

mod edit;
mod text;

use std::collections::VecDeque;
use std::fmt;
use std::hash::{Hash, Hasher};

pub use edit::{InsertSite, MoveType, Pruned, PrunedView, SprEdit, SprOutcome};
pub use text::Nested;

use crate::error::{invalid, Error, Result};

/// Handle to a node of a [`FragTree`].
///
/// A handle stays valid until its node is removed by an edit; after that
/// every lookup through it fails with [`Error::StaleNode`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeRef {
    index: u32,
    generation: u32,
}

impl NodeRef {
    /// Arena slot of the node. Slots are reused after removal, so the slot
    /// alone does not identify a node across edits.
    pub fn index(self) -> usize {
        self.index as usize
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}.{}", self.index, self.generation)
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Node {
    pub(crate) parent: Option<usize>,
    pub(crate) children: Vec<usize>,
    pub(crate) leaf_count: usize,
    pub(crate) vertex: Option<usize>,
}

#[derive(Clone, Debug)]
struct Slot {
    generation: u32,
    node: Option<Node>,
}

#[derive(Clone, Debug)]
pub struct FragTree {
    slots: Vec<Slot>,
    free: Vec<usize>,
    root: usize,
    /// vertex label -> slot of its leaf
    leaf_of: Vec<Option<usize>>,
    n_leaves: usize,
}

impl FragTree {
    /// Single-leaf tree.
    pub fn leaf(vertex: usize) -> Self {
        let mut t = FragTree::empty();
        let idx = t.alloc(Node {
            parent: None,
            children: Vec::new(),
            leaf_count: 1,
            vertex: Some(vertex),
        });
        t.set_leaf(vertex, idx);
        t.root = idx;
        t.n_leaves = 1;
        t
    }

    /// Root with `n` leaf children `0..n` (a single leaf for `n == 1`).
    pub fn star(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("a tree needs at least one leaf"));
        }
        if n == 1 {
            return Ok(FragTree::leaf(0));
        }
        Ok(FragTree::from_nested(&Nested::Node((0..n).map(Nested::Leaf).collect()))?)
    }

    fn empty() -> Self {
        FragTree {
            slots: Vec::new(),
            free: Vec::new(),
            root: 0,
            leaf_of: Vec::new(),
            n_leaves: 0,
        }
    }

    /// Builds a tree from a nested description, rejecting unary nodes and
    /// repeated leaves. Leaf labels may be any distinct integers.
    pub fn from_nested(spec: &Nested) -> Result<Self> {
        let mut t = FragTree::empty();
        let root = t.build(spec, None)?;
        t.root = root;
        t.n_leaves = t.node(root).leaf_count;
        Ok(t)
    }

    fn build(&mut self, spec: &Nested, parent: Option<usize>) -> Result<usize> {
        match spec {
            Nested::Leaf(v) => {
                if self.leaf_slot(*v).is_some() {
                    return Err(invalid(format!("leaf {v} appears more than once")));
                }
                let idx = self.alloc(Node {
                    parent,
                    children: Vec::new(),
                    leaf_count: 1,
                    vertex: Some(*v),
                });
                self.set_leaf(*v, idx);
                Ok(idx)
            }
            Nested::Node(kids) => {
                if kids.len() < 2 {
                    return Err(invalid("internal node with fewer than two children"));
                }
                let idx = self.alloc(Node {
                    parent,
                    children: Vec::with_capacity(kids.len()),
                    leaf_count: 0,
                    vertex: None,
                });
                let mut count = 0;
                for k in kids {
                    let c = self.build(k, Some(idx))?;
                    count += self.node(c).leaf_count;
                    self.node_mut(idx).children.push(c);
                }
                self.node_mut(idx).leaf_count = count;
                Ok(idx)
            }
        }
    }

    /// Nested description of the tree in canonical child order.
    pub fn to_nested(&self) -> Nested {
        self.nested_at(self.root)
    }

    fn nested_at(&self, idx: usize) -> Nested {
        let node = self.node(idx);
        match node.vertex {
            Some(v) => Nested::Leaf(v),
            None => {
                let mut kids: Vec<Nested> = node.children.iter().map(|&c| self.nested_at(c)).collect();
                kids.sort_by_key(Nested::min_leaf);
                Nested::Node(kids)
            }
        }
    }

    // ---- arena plumbing -------------------------------------------------

    pub(crate) fn alloc(&mut self, node: Node) -> usize {
        if let Some(idx) = self.free.pop() {
            let slot = &mut self.slots[idx];
            slot.generation = slot.generation.wrapping_add(1);
            slot.node = Some(node);
            idx
        } else {
            self.slots.push(Slot {
                generation: 0,
                node: Some(node),
            });
            self.slots.len() - 1
        }
    }

    pub(crate) fn release(&mut self, idx: usize) {
        let slot = &mut self.slots[idx];
        debug_assert!(slot.node.is_some());
        slot.node = None;
        slot.generation = slot.generation.wrapping_add(1);
        self.free.push(idx);
    }

    fn set_leaf(&mut self, v: usize, idx: usize) {
        if self.leaf_of.len() <= v {
            self.leaf_of.resize(v + 1, None);
        }
        self.leaf_of[v] = Some(idx);
    }

    pub(crate) fn clear_leaf(&mut self, v: usize) {
        if let Some(s) = self.leaf_of.get_mut(v) {
            *s = None;
        }
    }

    pub(crate) fn node(&self, idx: usize) -> &Node {
        self.slots[idx].node.as_ref().expect("live node")
    }

    pub(crate) fn node_mut(&mut self, idx: usize) -> &mut Node {
        self.slots[idx].node.as_mut().expect("live node")
    }

    pub(crate) fn is_live(&self, idx: usize) -> bool {
        self.slots.get(idx).is_some_and(|s| s.node.is_some())
    }

    pub(crate) fn handle(&self, idx: usize) -> NodeRef {
        NodeRef {
            index: idx as u32,
            generation: self.slots[idx].generation,
        }
    }

    /// Resolves a handle to its slot, failing for stale handles.
    pub fn resolve(&self, r: NodeRef) -> Result<usize> {
        match self.slots.get(r.index()) {
            Some(slot) if slot.generation == r.generation && slot.node.is_some() => Ok(r.index()),
            _ => Err(Error::StaleNode(r.to_string())),
        }
    }

    pub(crate) fn leaf_slot(&self, v: usize) -> Option<usize> {
        self.leaf_of.get(v).copied().flatten()
    }

    pub(crate) fn root_slot(&self) -> usize {
        self.root
    }

    pub(crate) fn set_root(&mut self, idx: usize) {
        self.root = idx;
    }

    pub(crate) fn set_n_leaves(&mut self, n: usize) {
        self.n_leaves = n;
    }

    pub(crate) fn slot_capacity(&self) -> usize {
        self.slots.len()
    }

    // ---- structural queries ---------------------------------------------

    pub fn root(&self) -> NodeRef {
        self.handle(self.root)
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    /// Number of nodes reachable from the root.
    pub fn n_nodes(&self) -> usize {
        self.preorder_slots().len()
    }

    pub fn parent(&self, r: NodeRef) -> Result<Option<NodeRef>> {
        let idx = self.resolve(r)?;
        Ok(self.node(idx).parent.map(|p| self.handle(p)))
    }

    pub fn children(&self, r: NodeRef) -> Result<Vec<NodeRef>> {
        let idx = self.resolve(r)?;
        Ok(self.node(idx).children.iter().map(|&c| self.handle(c)).collect())
    }

    pub fn leaf_count(&self, r: NodeRef) -> Result<usize> {
        Ok(self.node(self.resolve(r)?).leaf_count)
    }

    /// Graph vertex of a leaf, `None` for internal nodes.
    pub fn vertex(&self, r: NodeRef) -> Result<Option<usize>> {
        Ok(self.node(self.resolve(r)?).vertex)
    }

    pub fn is_leaf(&self, r: NodeRef) -> Result<bool> {
        Ok(self.node(self.resolve(r)?).vertex.is_some())
    }

    /// Leaf node holding vertex `v`.
    pub fn leaf_node(&self, v: usize) -> Option<NodeRef> {
        self.leaf_slot(v).filter(|&s| self.is_live(s)).map(|s| self.handle(s))
    }

    /// Sorted leaf labels.
    pub fn leaves(&self) -> Vec<usize> {
        let mut out = self.leaves_under_slot(self.root);
        out.sort_unstable();
        out
    }

    /// Leaf labels below `r`, sorted.
    pub fn leaves_under(&self, r: NodeRef) -> Result<Vec<usize>> {
        let mut out = self.leaves_under_slot(self.resolve(r)?);
        out.sort_unstable();
        Ok(out)
    }

    pub(crate) fn leaves_under_slot(&self, idx: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.node(idx).leaf_count);
        self.for_each_leaf(idx, |v| out.push(v));
        out
    }

    pub(crate) fn for_each_leaf<F: FnMut(usize)>(&self, idx: usize, mut f: F) {
        let mut stack = vec![idx];
        while let Some(i) = stack.pop() {
            let node = self.node(i);
            match node.vertex {
                Some(v) => f(v),
                None => stack.extend(node.children.iter().rev().copied()),
            }
        }
    }

    /// All nodes, parents before children.
    pub fn preorder(&self) -> Vec<NodeRef> {
        self.preorder_slots().into_iter().map(|i| self.handle(i)).collect()
    }

    pub(crate) fn preorder_slots(&self) -> Vec<usize> {
        self.preorder_from(self.root)
    }

    pub(crate) fn preorder_from(&self, idx: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![idx];
        while let Some(i) = stack.pop() {
            out.push(i);
            stack.extend(self.node(i).children.iter().rev().copied());
        }
        out
    }

    /// Internal nodes in preorder.
    pub fn internal_nodes(&self) -> Vec<NodeRef> {
        self.preorder_slots()
            .into_iter()
            .filter(|&i| self.node(i).vertex.is_none())
            .map(|i| self.handle(i))
            .collect()
    }

    /// Number of edges between `r` and the root.
    pub fn depth(&self, r: NodeRef) -> Result<usize> {
        Ok(self.depth_slot(self.resolve(r)?))
    }

    pub(crate) fn depth_slot(&self, mut idx: usize) -> usize {
        let mut d = 0;
        while let Some(p) = self.node(idx).parent {
            idx = p;
            d += 1;
        }
        d
    }

    /// `true` when `anc` lies on the path from `idx` to the root (inclusive).
    pub(crate) fn is_ancestor_slot(&self, anc: usize, mut idx: usize) -> bool {
        loop {
            if idx == anc {
                return true;
            }
            match self.node(idx).parent {
                Some(p) => idx = p,
                None => return false,
            }
        }
    }

    /// Lowest common ancestor of the leaves holding vertices `i` and `j`.
    pub fn lca(&self, i: usize, j: usize) -> Result<NodeRef> {
        if i == j {
            return Err(invalid(format!("lca needs two distinct vertices, got {i} twice")));
        }
        let a = self.leaf_slot(i).ok_or_else(|| invalid(format!("vertex {i} is not a leaf")))?;
        let b = self.leaf_slot(j).ok_or_else(|| invalid(format!("vertex {j} is not a leaf")))?;
        Ok(self.handle(self.lca_slot(a, b)))
    }

    pub(crate) fn lca_slot(&self, a: usize, b: usize) -> usize {
        let (mut a, mut b) = (a, b);
        let (mut da, mut db) = (self.depth_slot(a), self.depth_slot(b));
        while da > db {
            a = self.node(a).parent.expect("depth");
            da -= 1;
        }
        while db > da {
            b = self.node(b).parent.expect("depth");
            db -= 1;
        }
        while a != b {
            a = self.node(a).parent.expect("common root");
            b = self.node(b).parent.expect("common root");
        }
        a
    }

    /// The child of `anc` on the path down to `idx`; `anc` must be a strict
    /// ancestor.
    pub(crate) fn child_toward(&self, anc: usize, mut idx: usize) -> usize {
        loop {
            let p = self.node(idx).parent.expect("strict ancestor");
            if p == anc {
                return idx;
            }
            idx = p;
        }
    }

    /// Restriction of the tree to a subset of its leaves: every fragment is
    /// intersected with `subset`, empty and duplicate fragments are dropped
    /// and unary chains contracted.
    pub fn project(&self, subset: &[usize]) -> Result<FragTree> {
        if subset.is_empty() {
            return Err(invalid("projection onto an empty set"));
        }
        let mut keep = vec![false; self.leaf_of.len()];
        for &v in subset {
            if self.leaf_slot(v).is_none() {
                return Err(invalid(format!("vertex {v} is not a leaf of the tree")));
            }
            keep[v] = true;
        }
        let nested = self.project_at(self.root, &keep).expect("nonempty subset");
        FragTree::from_nested(&nested)
    }

    fn project_at(&self, idx: usize, keep: &[bool]) -> Option<Nested> {
        let node = self.node(idx);
        if let Some(v) = node.vertex {
            return keep[v].then_some(Nested::Leaf(v));
        }
        let mut kids: Vec<Nested> = node.children.iter().filter_map(|&c| self.project_at(c, keep)).collect();
        match kids.len() {
            0 => None,
            1 => kids.pop(),
            _ => Some(Nested::Node(kids)),
        }
    }

    /// Nodes within `radius` tree edges of `anchor`, in breadth-first order.
    pub fn ball(&self, anchor: NodeRef, radius: usize) -> Result<Vec<NodeRef>> {
        let start = self.resolve(anchor)?;
        let mut seen = vec![false; self.slots.len()];
        let mut out = Vec::new();
        let mut queue = VecDeque::from([(start, 0usize)]);
        seen[start] = true;
        while let Some((i, d)) = queue.pop_front() {
            out.push(self.handle(i));
            if d == radius {
                continue;
            }
            let node = self.node(i);
            for nb in node.parent.iter().chain(node.children.iter()) {
                if !seen[*nb] {
                    seen[*nb] = true;
                    queue.push_back((*nb, d + 1));
                }
            }
        }
        Ok(out)
    }

    /// Checks every structural invariant, returning a description of the
    /// first violation.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Invariant(m));
        if !self.is_live(self.root) {
            return fail("root slot is empty".into());
        }
        if self.node(self.root).parent.is_some() {
            return fail("root has a parent".into());
        }
        let order = self.preorder_slots();
        let mut leaves = 0;
        for &i in order.iter().rev() {
            let node = self.node(i);
            match node.vertex {
                Some(v) => {
                    if !node.children.is_empty() {
                        return fail(format!("leaf {v} has children"));
                    }
                    if node.leaf_count != 1 {
                        return fail(format!("leaf {v} has leaf count {}", node.leaf_count));
                    }
                    if self.leaf_slot(v) != Some(i) {
                        return fail(format!("leaf index for vertex {v} is out of date"));
                    }
                    leaves += 1;
                }
                None => {
                    if node.children.len() < 2 {
                        return fail(format!("internal node {} has {} children", self.handle(i), node.children.len()));
                    }
                    let mut sum = 0;
                    for &c in &node.children {
                        if self.node(c).parent != Some(i) {
                            return fail(format!("child {} does not point back to its parent", self.handle(c)));
                        }
                        sum += self.node(c).leaf_count;
                    }
                    if sum != node.leaf_count {
                        return fail(format!("leaf count mismatch at {}", self.handle(i)));
                    }
                }
            }
        }
        if leaves != self.n_leaves || self.node(self.root).leaf_count != self.n_leaves {
            return fail(format!("tree reports {} leaves but holds {leaves}", self.n_leaves));
        }
        let indexed = self.leaf_of.iter().filter(|s| s.is_some()).count();
        if indexed != leaves {
            return fail("leaf index holds detached vertices".into());
        }
        Ok(())
    }

    /// `true` when the leaves are exactly `0..n`.
    pub fn covers_vertices(&self, n: usize) -> bool {
        self.n_leaves == n && (0..n).all(|v| self.leaf_node(v).is_some())
    }
}

impl PartialEq for FragTree {
    fn eq(&self, other: &Self) -> bool {
        self.n_leaves == other.n_leaves && self.canonical() == other.canonical()
    }
}

impl Eq for FragTree {}

impl Hash for FragTree {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.canonical().hash(state);
    }
}
