//! Subtree prune-and-regraft edits.

use std::collections::VecDeque;

use super::{FragTree, Node, NodeRef};
use crate::error::{invalid, Result};

/// How a detached subtree is reattached.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MoveType {
    /// Type 1: the subtree becomes an extra child of an internal node.
    AddChild,
    /// Type 2: the subtree and the target become the two children of a new
    /// node that takes the target's place.
    NewParent,
}

impl MoveType {
    pub fn name(self) -> &'static str {
        match self {
            MoveType::AddChild => "type1",
            MoveType::NewParent => "type2",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct InsertSite {
    pub kind: MoveType,
    pub target: NodeRef,
}

/// Detach `detach` and reinsert it at `site`. `site.target` refers to a
/// node of the reduced tree, which shares handles with the original tree
/// except for a contracted parent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SprEdit {
    pub detach: NodeRef,
    pub site: InsertSite,
}

/// State of an in-place prune: the subtree is still in the arena but no
/// longer reachable from the root.
#[derive(Clone, Debug)]
pub struct Pruned {
    pub(crate) node: usize,
    pub(crate) leaf_count: usize,
    /// Node the subtree hung from, if it survived the prune.
    pub(crate) parent: Option<usize>,
    /// `(removed parent handle, surviving sibling slot)` when the parent was
    /// left with a single child and contracted away.
    pub(crate) contracted: Option<(NodeRef, usize)>,
    pub(crate) original_site: InsertSite,
}

impl Pruned {
    /// Site that puts the subtree back where it was.
    pub fn original_site(&self) -> InsertSite {
        self.original_site
    }

    /// Node of the reduced tree that local insertion sets are built around:
    /// the former parent, or the node that replaced it after contraction.
    pub(crate) fn anchor_slot(&self) -> usize {
        match self.contracted {
            Some((_, sibling)) => sibling,
            None => self.parent.expect("parent survives when not contracted"),
        }
    }
}

/// What an applied [`SprEdit`] changed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SprOutcome {
    pub moved: NodeRef,
    /// Parent removed by contraction (now stale).
    pub removed: Option<NodeRef>,
    /// Node created by a type-2 insertion.
    pub created: Option<NodeRef>,
    /// Edit that undoes this one.
    pub inverse: SprEdit,
}

/// Result of [`FragTree::detach`].
#[derive(Clone, Debug)]
pub struct Detached {
    pub subtree: FragTree,
    pub reduced: FragTree,
    /// Anchor for local insertion sets in `reduced`.
    pub anchor: NodeRef,
    /// Site in `reduced` that recreates the original tree.
    pub original_site: InsertSite,
}

impl FragTree {
    /// Detaches the subtree at `k` in place. The tree is left without the
    /// subtree until [`FragTree::regraft`] is called.
    pub(crate) fn prune(&mut self, k: NodeRef) -> Result<Pruned> {
        let idx = self.resolve(k)?;
        let p = self.node(idx).parent.ok_or_else(|| invalid("cannot detach the root"))?;
        let size = self.node(idx).leaf_count;
        {
            let parent = self.node_mut(p);
            let pos = parent.children.iter().position(|&c| c == idx).expect("child link");
            parent.children.remove(pos);
        }
        self.node_mut(idx).parent = None;
        let mut a = Some(p);
        while let Some(i) = a {
            let node = self.node_mut(i);
            node.leaf_count -= size;
            a = node.parent;
        }
        self.set_n_leaves(self.n_leaves() - size);

        if self.node(p).children.len() == 1 {
            let c = self.node(p).children[0];
            let gp = self.node(p).parent;
            self.node_mut(c).parent = gp;
            match gp {
                Some(g) => {
                    let kids = &mut self.node_mut(g).children;
                    let pos = kids.iter().position(|&x| x == p).expect("child link");
                    kids[pos] = c;
                }
                None => self.set_root(c),
            }
            let removed = self.handle(p);
            self.release(p);
            Ok(Pruned {
                node: idx,
                leaf_count: size,
                parent: None,
                contracted: Some((removed, c)),
                original_site: InsertSite {
                    kind: MoveType::NewParent,
                    target: self.handle(c),
                },
            })
        } else {
            Ok(Pruned {
                node: idx,
                leaf_count: size,
                parent: Some(p),
                contracted: None,
                original_site: InsertSite {
                    kind: MoveType::AddChild,
                    target: self.handle(p),
                },
            })
        }
    }

    /// Checks that `site` is usable for a subtree detached from this tree.
    pub(crate) fn check_site(&self, pruned: &Pruned, site: InsertSite) -> Result<usize> {
        let h = self.resolve(site.target)?;
        if self.is_ancestor_slot(pruned.node, h) {
            return Err(invalid("insertion site lies inside the detached subtree"));
        }
        if site.kind == MoveType::AddChild && self.node(h).vertex.is_some() {
            return Err(invalid("type-1 insertion needs an internal node, got a leaf"));
        }
        Ok(h)
    }

    /// Reattaches a pruned subtree. Returns the slot of a newly created node
    /// for type-2 insertions.
    pub(crate) fn regraft(&mut self, pruned: &Pruned, site: InsertSite) -> Result<Option<usize>> {
        let h = self.check_site(pruned, site)?;
        let k = pruned.node;
        let size = pruned.leaf_count;
        let created = match site.kind {
            MoveType::AddChild => {
                self.node_mut(h).children.push(k);
                self.node_mut(k).parent = Some(h);
                self.add_leaf_count_upward(h, size);
                None
            }
            MoveType::NewParent => {
                let gp = self.node(h).parent;
                let y = self.alloc(Node {
                    parent: gp,
                    children: vec![h, k],
                    leaf_count: self.node(h).leaf_count + size,
                    vertex: None,
                });
                match gp {
                    Some(g) => {
                        let kids = &mut self.node_mut(g).children;
                        let pos = kids.iter().position(|&x| x == h).expect("child link");
                        kids[pos] = y;
                        self.add_leaf_count_upward(g, size);
                    }
                    None => self.set_root(y),
                }
                self.node_mut(h).parent = Some(y);
                self.node_mut(k).parent = Some(y);
                Some(y)
            }
        };
        self.set_n_leaves(self.n_leaves() + size);
        Ok(created)
    }

    fn add_leaf_count_upward(&mut self, from: usize, size: usize) {
        let mut a = Some(from);
        while let Some(i) = a {
            let node = self.node_mut(i);
            node.leaf_count += size;
            a = node.parent;
        }
    }

    /// Validates an edit against the current tree without changing it.
    pub fn check_edit(&self, edit: &SprEdit) -> Result<()> {
        let k = self.resolve(edit.detach)?;
        let p = self.node(k).parent.ok_or_else(|| invalid("cannot detach the root"))?;
        let h = self.resolve(edit.site.target)?;
        if self.is_ancestor_slot(k, h) {
            return Err(invalid("insertion site lies inside the detached subtree"));
        }
        if h == p && self.node(p).children.len() == 2 {
            return Err(invalid("insertion site is the parent that the detach contracts away"));
        }
        if edit.site.kind == MoveType::AddChild && self.node(h).vertex.is_some() {
            return Err(invalid("type-1 insertion needs an internal node, got a leaf"));
        }
        Ok(())
    }

    /// Applies a prune-and-regraft edit in place.
    pub fn apply_spr(&mut self, edit: &SprEdit) -> Result<SprOutcome> {
        self.check_edit(edit)?;
        let pruned = self.prune(edit.detach)?;
        let created = self.regraft(&pruned, edit.site)?;
        Ok(SprOutcome {
            moved: edit.detach,
            removed: pruned.contracted.map(|(r, _)| r),
            created: created.map(|c| self.handle(c)),
            inverse: SprEdit {
                detach: edit.detach,
                site: pruned.original_site,
            },
        })
    }

    /// Splits the tree at non-root node `k` into the subtree rooted at `k`
    /// and the projection of the tree onto the remaining leaves. Handles of
    /// untouched nodes stay valid in `reduced`.
    pub fn detach(&self, k: NodeRef) -> Result<Detached> {
        let mut reduced = self.clone();
        let pruned = reduced.prune(k)?;
        let subtree = reduced.extract(pruned.node);
        let anchor = reduced.handle(pruned.anchor_slot());
        Ok(Detached {
            subtree,
            reduced,
            anchor,
            original_site: pruned.original_site,
        })
    }

    /// Moves the detached subtree at `idx` out of this arena.
    fn extract(&mut self, idx: usize) -> FragTree {
        let nested = self.nested_at(idx);
        for i in self.preorder_from(idx) {
            if let Some(v) = self.node(i).vertex {
                self.clear_leaf(v);
            }
            self.release(i);
        }
        FragTree::from_nested(&nested).expect("subtree of a valid tree")
    }

    /// Copies `other` into this arena as a detached subtree.
    fn adopt(&mut self, other: &FragTree) -> Result<Pruned> {
        for v in other.leaves() {
            if self.leaf_slot(v).is_some() {
                return Err(invalid(format!("vertex {v} is already a leaf of the tree")));
            }
        }
        let before = self.n_leaves();
        let root = self.adopt_at(other, other.root_slot(), None);
        self.set_n_leaves(before);
        Ok(Pruned {
            node: root,
            leaf_count: other.n_leaves(),
            parent: None,
            contracted: None,
            original_site: InsertSite {
                kind: MoveType::NewParent,
                target: self.handle(root),
            },
        })
    }

    fn adopt_at(&mut self, other: &FragTree, idx: usize, parent: Option<usize>) -> usize {
        let src = other.node(idx);
        let me = self.alloc(Node {
            parent,
            children: Vec::with_capacity(src.children.len()),
            leaf_count: src.leaf_count,
            vertex: src.vertex,
        });
        if let Some(v) = src.vertex {
            if self.leaf_of.len() <= v {
                self.leaf_of.resize(v + 1, None);
            }
            self.leaf_of[v] = Some(me);
        }
        for &c in &other.node(idx).children {
            let child = self.adopt_at(other, c, Some(me));
            self.node_mut(me).children.push(child);
        }
        me
    }

    /// Inserts `subtree` (leaves disjoint from this tree) at `site`.
    pub fn insert(&self, subtree: &FragTree, site: InsertSite) -> Result<FragTree> {
        let mut out = self.clone();
        out.resolve(site.target)?;
        if site.kind == MoveType::AddChild && out.is_leaf(site.target)? {
            return Err(invalid("type-1 insertion needs an internal node, got a leaf"));
        }
        let pruned = out.adopt(subtree)?;
        out.regraft(&pruned, site)?;
        Ok(out)
    }

    /// Adds `subtree` as an extra child of internal node `h`.
    pub fn insert_type1(&self, subtree: &FragTree, h: NodeRef) -> Result<FragTree> {
        self.insert(subtree, InsertSite { kind: MoveType::AddChild, target: h })
    }

    /// Replaces the subtree at `h` by a new node whose children are the old
    /// subtree at `h` and `subtree`.
    pub fn insert_type2(&self, subtree: &FragTree, h: NodeRef) -> Result<FragTree> {
        self.insert(subtree, InsertSite { kind: MoveType::NewParent, target: h })
    }

    /// Every insertion move at nodes within `radius` edges of `anchor`:
    /// type 1 for internal nodes, type 2 for all.
    pub fn candidate_sites(&self, anchor: NodeRef, radius: usize) -> Result<Vec<InsertSite>> {
        let mut out = Vec::new();
        for r in self.ball(anchor, radius)? {
            if !self.is_leaf(r)? {
                out.push(InsertSite { kind: MoveType::AddChild, target: r });
            }
            out.push(InsertSite { kind: MoveType::NewParent, target: r });
        }
        Ok(out)
    }
}

/// The reduced tree obtained by detaching one node, viewed through the
/// original tree without copying it.
#[derive(Clone, Copy, Debug)]
pub struct PrunedView<'a> {
    tree: &'a FragTree,
    node: usize,
    parent: usize,
    /// Surviving sibling when the parent is contracted away.
    sibling: Option<usize>,
}

impl<'a> PrunedView<'a> {
    pub fn new(tree: &'a FragTree, k: NodeRef) -> Result<Self> {
        let node = tree.resolve(k)?;
        Self::from_slot(tree, node)
    }

    pub(crate) fn from_slot(tree: &'a FragTree, node: usize) -> Result<Self> {
        let parent = tree.node(node).parent.ok_or_else(|| invalid("cannot detach the root"))?;
        let kids = &tree.node(parent).children;
        let sibling = (kids.len() == 2).then(|| if kids[0] == node { kids[1] } else { kids[0] });
        Ok(PrunedView {
            tree,
            node,
            parent,
            sibling,
        })
    }

    pub fn tree(&self) -> &'a FragTree {
        self.tree
    }

    pub(crate) fn anchor_slot(&self) -> usize {
        self.sibling.unwrap_or(self.parent)
    }

    pub fn anchor(&self) -> NodeRef {
        self.tree.handle(self.anchor_slot())
    }

    /// Site in the reduced tree that restores the original tree.
    pub fn original_site(&self) -> InsertSite {
        match self.sibling {
            Some(s) => InsertSite {
                kind: MoveType::NewParent,
                target: self.tree.handle(s),
            },
            None => InsertSite {
                kind: MoveType::AddChild,
                target: self.tree.handle(self.parent),
            },
        }
    }

    pub(crate) fn parent_of(&self, idx: usize) -> Option<usize> {
        let p = self.tree.node(idx).parent;
        if self.sibling.is_some() && p == Some(self.parent) {
            self.tree.node(self.parent).parent
        } else {
            p
        }
    }

    fn for_each_neighbor<F: FnMut(usize)>(&self, idx: usize, mut f: F) {
        if let Some(p) = self.parent_of(idx) {
            f(p);
        }
        for &c in &self.tree.node(idx).children {
            if c == self.node {
                continue;
            }
            if self.sibling.is_some() && c == self.parent {
                f(self.sibling.expect("checked"));
            } else {
                f(c);
            }
        }
    }

    /// Reduced-tree nodes within `radius` edges of the anchor.
    pub(crate) fn ball_slots(&self, radius: usize, seen: &mut Vec<bool>) -> Vec<usize> {
        seen.clear();
        seen.resize(self.tree.slot_capacity(), false);
        let start = self.anchor_slot();
        let mut out = Vec::new();
        let mut queue = VecDeque::from([(start, 0usize)]);
        seen[start] = true;
        while let Some((i, d)) = queue.pop_front() {
            out.push(i);
            if d == radius {
                continue;
            }
            self.for_each_neighbor(i, |nb| {
                if !seen[nb] {
                    seen[nb] = true;
                    queue.push_back((nb, d + 1));
                }
            });
        }
        out
    }

    /// Reduced-tree nodes in preorder.
    pub(crate) fn reduced_slots(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![self.tree.root_slot()];
        while let Some(i) = stack.pop() {
            if i == self.node {
                continue;
            }
            if !(self.sibling.is_some() && i == self.parent) {
                out.push(i);
            }
            stack.extend(self.tree.node(i).children.iter().rev().copied());
        }
        out
    }
}
