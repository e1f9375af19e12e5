//! Link and pair counts grouped by tree node.
//!
//! Every observed vertex pair `(i, j)` is charged to the internal node that
//! is the lowest common ancestor of the two leaves, and within that node to
//! the pair of children that contain `i` and `j`. Pairs between two leaf
//! children are only needed in aggregate, so they are kept as one total per
//! node; all other child pairs are stored explicitly.

use std::collections::BTreeMap;
use std::ops::{Add, AddAssign, Sub, SubAssign};

use super::Graph;
use crate::error::{invalid, Error, Result};
use crate::partition::FlatPartition;
use crate::tree::{FragTree, MoveType, NodeRef, SprEdit, SprOutcome};

/// Number of linked pairs and of observed pairs in some set of vertex pairs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Counts {
    pub links: u64,
    pub pairs: u64,
}

impl Counts {
    pub fn new(links: u64, pairs: u64) -> Self {
        Counts { links, pairs }
    }

    pub fn non_links(self) -> u64 {
        self.pairs - self.links
    }

    pub fn is_zero(self) -> bool {
        self.pairs == 0 && self.links == 0
    }

    fn of_pair(graph: &Graph, i: usize, j: usize) -> Self {
        if graph.is_observed(i, j) {
            Counts::new(graph.has_edge(i, j) as u64, 1)
        } else {
            Counts::default()
        }
    }
}

impl Add for Counts {
    type Output = Counts;
    fn add(self, o: Counts) -> Counts {
        Counts::new(self.links + o.links, self.pairs + o.pairs)
    }
}

impl AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        *self = *self + o;
    }
}

impl Sub for Counts {
    type Output = Counts;
    fn sub(self, o: Counts) -> Counts {
        Counts::new(self.links - o.links, self.pairs - o.pairs)
    }
}

impl SubAssign for Counts {
    fn sub_assign(&mut self, o: Counts) {
        *self = *self - o;
    }
}

/// Counts held for one internal node.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NodeStats {
    /// All pairs whose lowest common ancestor is this node.
    pub pooled: Counts,
    /// Pairs between two leaf children, summed.
    pub leaf_pairs: Counts,
    /// Remaining child pairs keyed by `(min slot, max slot)`.
    pub(crate) child_pairs: BTreeMap<(usize, usize), Counts>,
}

impl NodeStats {
    /// Explicit child-pair counts in key order.
    pub fn child_pair_counts(&self) -> impl Iterator<Item = Counts> + '_ {
        self.child_pairs.values().copied()
    }

    pub fn n_child_pairs(&self) -> usize {
        self.child_pairs.len()
    }
}

#[inline]
fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Result of [`BlockStats::apply_edit`].
#[derive(Clone, Debug)]
pub struct EditEffect {
    pub outcome: SprOutcome,
    /// Internal nodes whose counts or child sizes changed (arena slots).
    pub(crate) touched: Vec<usize>,
    /// Slot freed by contraction, if any.
    pub(crate) released: Option<usize>,
}

impl EditEffect {
    pub fn touched(&self) -> &[usize] {
        &self.touched
    }
}

/// Per-node counts for a tree over a graph, updated incrementally under
/// prune-and-regraft edits.
#[derive(Clone, Debug, Default)]
pub struct BlockStats {
    nodes: Vec<Option<NodeStats>>,
    cross_links: Vec<u32>,
    cross_masked: Vec<u32>,
    moved_size: u64,
}

impl PartialEq for BlockStats {
    fn eq(&self, other: &Self) -> bool {
        let live = |s: &BlockStats| -> Vec<(usize, NodeStats)> {
            s.nodes
                .iter()
                .enumerate()
                .filter_map(|(i, n)| n.clone().map(|n| (i, n)))
                .collect()
        };
        live(self) == live(other)
    }
}

impl BlockStats {
    /// Counts computed from scratch.
    pub fn full_stats(graph: &Graph, tree: &FragTree) -> Result<Self> {
        if !tree.covers_vertices(graph.n()) {
            return Err(invalid(format!(
                "tree leaves do not match the {} graph vertices",
                graph.n()
            )));
        }
        let mut stats = BlockStats {
            nodes: vec![None; tree.slot_capacity()],
            cross_links: vec![0; graph.n()],
            cross_masked: vec![0; graph.n()],
            moved_size: 0,
        };
        for idx in tree.preorder_slots() {
            let node = tree.node(idx);
            if node.vertex.is_some() {
                continue;
            }
            let leaves: Vec<Vec<usize>> = node.children.iter().map(|&c| tree.leaves_under_slot(c)).collect();
            let mut st = NodeStats::default();
            for a in 0..node.children.len() {
                for b in a + 1..node.children.len() {
                    let mut c = Counts::default();
                    for &i in &leaves[a] {
                        for &j in &leaves[b] {
                            c += Counts::of_pair(graph, i, j);
                        }
                    }
                    st.pooled += c;
                    if is_leaf(tree, node.children[a]) && is_leaf(tree, node.children[b]) {
                        st.leaf_pairs += c;
                    } else {
                        st.child_pairs.insert(key(node.children[a], node.children[b]), c);
                    }
                }
            }
            stats.nodes[idx] = Some(st);
        }
        Ok(stats)
    }

    /// Counts of an internal node, `None` for leaves.
    pub fn node(&self, tree: &FragTree, r: NodeRef) -> Result<Option<&NodeStats>> {
        let idx = tree.resolve(r)?;
        Ok(self.slot(idx))
    }

    pub(crate) fn slot(&self, idx: usize) -> Option<&NodeStats> {
        self.nodes.get(idx).and_then(|n| n.as_ref())
    }

    pub(crate) fn live_slots(&self) -> impl Iterator<Item = (usize, &NodeStats)> {
        self.nodes.iter().enumerate().filter_map(|(i, n)| n.as_ref().map(|n| (i, n)))
    }

    /// Counts for the pair of children `a`, `b` of a common parent.
    pub fn child_pair(&self, graph: &Graph, tree: &FragTree, a: NodeRef, b: NodeRef) -> Result<Counts> {
        let (ia, ib) = (tree.resolve(a)?, tree.resolve(b)?);
        let parent = tree.node(ia).parent;
        if ia == ib || parent.is_none() || parent != tree.node(ib).parent {
            return Err(invalid("nodes are not distinct siblings"));
        }
        let (va, vb) = (tree.node(ia).vertex, tree.node(ib).vertex);
        if let (Some(i), Some(j)) = (va, vb) {
            return Ok(Counts::of_pair(graph, i, j));
        }
        let st = self.slot(parent.unwrap()).ok_or_else(|| Error::Invariant("missing node counts".into()))?;
        st.child_pairs
            .get(&key(ia, ib))
            .copied()
            .ok_or_else(|| Error::Invariant("missing child-pair counts".into()))
    }

    /// Sum of pooled counts over all nodes.
    pub fn totals(&self) -> Counts {
        self.live_slots().fold(Counts::default(), |acc, (_, s)| acc + s.pooled)
    }

    fn fill_cross(&mut self, graph: &Graph, tree: &FragTree, k: usize) {
        self.cross_links.iter_mut().for_each(|x| *x = 0);
        self.cross_masked.iter_mut().for_each(|x| *x = 0);
        let moved = tree.leaves_under_slot(k);
        self.moved_size = moved.len() as u64;
        for &i in &moved {
            for &j in graph.neighbors(i) {
                if !graph.is_masked(i, j) {
                    self.cross_links[j] += 1;
                }
            }
            for &j in graph.masked_neighbors(i) {
                self.cross_masked[j] += 1;
            }
        }
    }

    /// Counts between the moved subtree and the subtree at `d`.
    fn cross(&self, tree: &FragTree, d: usize) -> Counts {
        let mut c = Counts::default();
        tree.for_each_leaf(d, |j| {
            c.links += self.cross_links[j] as u64;
            c.pairs += self.moved_size - self.cross_masked[j] as u64;
        });
        c
    }

    fn node_mut(&mut self, idx: usize) -> &mut NodeStats {
        self.nodes[idx].as_mut().expect("internal node has counts")
    }

    fn ensure_capacity(&mut self, tree: &FragTree) {
        if self.nodes.len() < tree.slot_capacity() {
            self.nodes.resize(tree.slot_capacity(), None);
        }
    }

    /// Applies `edit` to `tree` and updates the counts to match. On error
    /// neither the tree nor the counts change.
    pub fn apply_edit(&mut self, graph: &Graph, tree: &mut FragTree, edit: &SprEdit) -> Result<EditEffect> {
        tree.check_edit(edit)?;
        let k = tree.resolve(edit.detach)?;
        let site = tree.resolve(edit.site.target)?;
        self.fill_cross(graph, tree, k);
        let k_leaf = is_leaf(tree, k);
        let mut touched = Vec::new();

        // remove the moved leaves' pairs along the old path
        let p = tree.node(k).parent.expect("checked non-root");
        let (mut child, mut at) = (k, Some(p));
        while let Some(a) = at {
            let siblings: Vec<usize> = tree.node(a).children.iter().copied().filter(|&d| d != child).collect();
            for d in siblings {
                let c = self.cross(tree, d);
                let d_leaf = is_leaf(tree, d);
                let st = self.node_mut(a);
                st.pooled -= c;
                if a == p {
                    if k_leaf && d_leaf {
                        st.leaf_pairs -= c;
                    } else {
                        let old = st.child_pairs.remove(&key(k, d));
                        debug_assert_eq!(old, Some(c));
                    }
                } else {
                    *st.child_pairs.get_mut(&key(child, d)).expect("child pair present") -= c;
                }
            }
            touched.push(a);
            child = a;
            at = tree.node(a).parent;
        }

        let pruned = tree.prune(edit.detach)?;
        let mut released = None;
        if let Some((_, survivor)) = pruned.contracted {
            let gone = self.nodes[p].take();
            debug_assert!(gone.is_some_and(|s| s.pooled.is_zero() && s.child_pairs.is_empty()));
            touched.retain(|&t| t != p);
            released = Some(p);
            if let Some(x) = tree.node(survivor).parent {
                self.rekey_contracted(tree, x, p, survivor);
            }
        }

        let created = tree.regraft(&pruned, edit.site)?;
        self.ensure_capacity(tree);
        let start = match (edit.site.kind, created) {
            (MoveType::NewParent, Some(y)) => {
                self.nodes[y] = Some(NodeStats::default());
                if let Some(x) = tree.node(y).parent {
                    self.rekey_inserted(graph, tree, x, site, y);
                }
                y
            }
            _ => site,
        };

        // add them back along the new path
        let (mut child, mut at) = (k, Some(start));
        while let Some(a) = at {
            let siblings: Vec<usize> = tree.node(a).children.iter().copied().filter(|&d| d != child).collect();
            for d in siblings {
                let c = self.cross(tree, d);
                let d_leaf = is_leaf(tree, d);
                let st = self.node_mut(a);
                st.pooled += c;
                if a == start {
                    if k_leaf && d_leaf {
                        st.leaf_pairs += c;
                    } else {
                        st.child_pairs.insert(key(k, d), c);
                    }
                } else {
                    *st.child_pairs.get_mut(&key(child, d)).expect("child pair present") += c;
                }
            }
            if !touched.contains(&a) {
                touched.push(a);
            }
            child = a;
            at = tree.node(a).parent;
        }

        let outcome = SprOutcome {
            moved: edit.detach,
            removed: pruned.contracted.map(|(r, _)| r),
            created: created.map(|c| tree.handle(c)),
            inverse: SprEdit {
                detach: edit.detach,
                site: pruned.original_site,
            },
        };
        Ok(EditEffect {
            outcome,
            touched,
            released,
        })
    }

    /// After contraction `survivor` took the place of the removed internal
    /// node `gone` under `x`.
    fn rekey_contracted(&mut self, tree: &FragTree, x: usize, gone: usize, survivor: usize) {
        let survivor_leaf = is_leaf(tree, survivor);
        let siblings: Vec<usize> = tree.node(x).children.iter().copied().filter(|&d| d != survivor).collect();
        let st = self.node_mut(x);
        for d in siblings {
            let c = st.child_pairs.remove(&key(gone, d)).expect("child pair present");
            if survivor_leaf && is_leaf(tree, d) {
                st.leaf_pairs += c;
            } else {
                st.child_pairs.insert(key(survivor, d), c);
            }
        }
    }

    /// After a type-2 insertion the new internal node `y` took the place of
    /// `h` under `x`.
    fn rekey_inserted(&mut self, graph: &Graph, tree: &FragTree, x: usize, h: usize, y: usize) {
        let h_vertex = tree.node(h).vertex;
        let siblings: Vec<usize> = tree.node(x).children.iter().copied().filter(|&d| d != y).collect();
        let st = self.node_mut(x);
        for d in siblings {
            let c = match (h_vertex, tree.node(d).vertex) {
                (Some(i), Some(j)) => {
                    let c = Counts::of_pair(graph, i, j);
                    st.leaf_pairs -= c;
                    c
                }
                _ => st.child_pairs.remove(&key(h, d)).expect("child pair present"),
            };
            st.child_pairs.insert(key(y, d), c);
        }
    }

    /// Compares against counts recomputed from scratch.
    pub fn verify(&self, graph: &Graph, tree: &FragTree) -> Result<()> {
        let fresh = BlockStats::full_stats(graph, tree)?;
        if fresh == *self {
            Ok(())
        } else {
            Err(Error::Invariant("incremental counts differ from a full recount".into()))
        }
    }
}

#[inline]
fn is_leaf(tree: &FragTree, idx: usize) -> bool {
    tree.node(idx).vertex.is_some()
}

/// Block-pair counts of a flat partition: entry `(a, b)` holds pairs with
/// one end in block `a` and the other in block `b` (`a == b` for pairs
/// inside one block).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionStats {
    n_blocks: usize,
    counts: Vec<Counts>,
}

impl PartitionStats {
    pub fn full_stats(graph: &Graph, partition: &FlatPartition) -> Result<Self> {
        if partition.len() != graph.n() {
            return Err(invalid("partition size differs from vertex count"));
        }
        let k = partition.n_blocks();
        let mut counts = vec![Counts::default(); k * k];
        let labels = partition.labels();
        for i in 0..graph.n() {
            for j in i + 1..graph.n() {
                let c = Counts::of_pair(graph, i, j);
                if c.pairs > 0 {
                    let (a, b) = (labels[i], labels[j]);
                    counts[a * k + b] += c;
                    if a != b {
                        counts[b * k + a] += c;
                    }
                }
            }
        }
        Ok(PartitionStats { n_blocks: k, counts })
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn get(&self, a: usize, b: usize) -> Counts {
        self.counts[a * self.n_blocks + b]
    }

    /// Every block pair `a <= b` with its counts.
    pub fn block_pairs(&self) -> impl Iterator<Item = (usize, usize, Counts)> + '_ {
        let k = self.n_blocks;
        (0..k).flat_map(move |a| (a..k).map(move |b| (a, b, self.get(a, b))))
    }
}
