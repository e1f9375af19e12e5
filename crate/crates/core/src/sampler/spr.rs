//! Prune-and-regraft proposals over trees and their exact proposal
//! probabilities.
//!
//! A proposal detaches a uniformly chosen non-root node, picks an insertion
//! node either from a ball around the detach point (local) or from the whole
//! reduced tree (global), then a move type. Several (node, site, type)
//! triples can lead to the same tree, so the probability of reaching a tree
//! is summed over all of them. Candidate triples are found by comparing
//! additive clade hashes: detaching clade `S` from `T` and from `T'` must
//! leave the same reduced tree.

use std::collections::HashMap;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::tree::{FragTree, InsertSite, MoveType, PrunedView, SprEdit};

/// Parameters of the proposal distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProposalConfig {
    /// Probability of drawing the insertion node from the local ball.
    pub local_move_prob: f64,
    /// Radius of the local ball, in tree edges.
    pub local_radius: usize,
    /// Probability of a type-1 move when the insertion node is internal.
    pub type1_prob: f64,
}

impl Default for ProposalConfig {
    fn default() -> Self {
        ProposalConfig {
            local_move_prob: 0.5,
            local_radius: 2,
            type1_prob: 0.5,
        }
    }
}

impl ProposalConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("local_move_prob", self.local_move_prob), ("type1_prob", self.type1_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }
}

/// A drawn proposal.
#[derive(Clone, Debug)]
pub struct SprProposal {
    pub edit: SprEdit,
    pub log_forward: f64,
    pub log_backward: f64,
    /// Insertion node drawn from the local ball.
    pub local: bool,
    pub kind: MoveType,
    /// The edit reproduces the current tree.
    pub identity: bool,
    /// Tree after the edit (`None` for identity proposals).
    pub proposed: Option<FragTree>,
}

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn vertex_key(v: usize) -> u64 {
    mix((v as u64).wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Clade hashes of one tree, indexed by arena slot.
#[derive(Clone, Debug, Default)]
struct CladeIndex {
    clade: Vec<u64>,
    /// sum of mixed clade hashes over the subtree
    sub: Vec<u64>,
    /// number of nodes in the subtree
    size: Vec<usize>,
    by_hash: HashMap<u64, usize>,
    total: u64,
    n_nodes: usize,
}

impl CladeIndex {
    fn build(&mut self, tree: &FragTree) {
        let cap = tree.slot_capacity();
        self.clade.clear();
        self.clade.resize(cap, 0);
        self.sub.clear();
        self.sub.resize(cap, 0);
        self.size.clear();
        self.size.resize(cap, 0);
        self.by_hash.clear();
        let order = tree.preorder_slots();
        for &v in order.iter().rev() {
            let node = tree.node(v);
            let (mut h, mut s, mut z) = (0u64, 0u64, 1usize);
            match node.vertex {
                Some(x) => h = vertex_key(x),
                None => {
                    for &c in &node.children {
                        h = h.wrapping_add(self.clade[c]);
                        s = s.wrapping_add(self.sub[c]);
                        z += self.size[c];
                    }
                }
            }
            self.clade[v] = h;
            self.sub[v] = s.wrapping_add(mix(h));
            self.size[v] = z;
            self.by_hash.insert(h, v);
        }
        self.total = self.sub[tree.root_slot()];
        self.n_nodes = order.len();
    }

    /// Hash of the clade set of the tree with the subtree at `k` removed.
    fn reduced_hash(&self, tree: &FragTree, k: usize) -> u64 {
        let s = self.clade[k];
        let mut h = self.total.wrapping_sub(self.sub[k]);
        let p = tree.node(k).parent.expect("non-root");
        let mut a = Some(p);
        while let Some(x) = a {
            h = h.wrapping_sub(mix(self.clade[x])).wrapping_add(mix(self.clade[x].wrapping_sub(s)));
            a = tree.node(x).parent;
        }
        if let Some(sib) = binary_sibling(tree, k) {
            // the contracted parent duplicates its surviving child
            h = h.wrapping_sub(mix(self.clade[sib]));
        }
        h
    }

    /// Node of the reduced tree (detach at `k`) whose clade hashes to
    /// `target`, as the slot that represents it in the unreduced tree.
    fn reduced_node(&self, tree: &FragTree, k: usize, target: u64) -> Option<usize> {
        let s = self.clade[k];
        let p = tree.node(k).parent.expect("non-root");
        let mut a = Some(p);
        while let Some(x) = a {
            if self.clade[x].wrapping_sub(s) == target {
                return Some(match binary_sibling(tree, k) {
                    Some(sib) if x == p => sib,
                    _ => x,
                });
            }
            a = tree.node(x).parent;
        }
        self.by_hash.get(&target).copied()
    }
}

fn binary_sibling(tree: &FragTree, k: usize) -> Option<usize> {
    let p = tree.node(k).parent?;
    let kids = &tree.node(p).children;
    (kids.len() == 2).then(|| if kids[0] == k { kids[1] } else { kids[0] })
}

/// Reusable buffers for proposal probability computations.
#[derive(Clone, Debug, Default)]
pub struct SprScratch {
    from: CladeIndex,
    to: CladeIndex,
    seen: Vec<bool>,
}

/// Probability of choosing insertion node `h` and move type `kind` after
/// detaching `k`.
fn site_prob(view: &PrunedView<'_>, h: usize, kind: MoveType, n_reduced: usize, cfg: &ProposalConfig, seen: &mut Vec<bool>) -> f64 {
    let tree = view.tree();
    let mut p = (1.0 - cfg.local_move_prob) / n_reduced as f64;
    if cfg.local_move_prob > 0.0 {
        let ball = view.ball_slots(cfg.local_radius, seen);
        if ball.contains(&h) {
            p += cfg.local_move_prob / ball.len() as f64;
        }
    }
    let leaf = tree.node(h).vertex.is_some();
    let type_p = match (leaf, kind) {
        (true, MoveType::AddChild) => 0.0,
        (true, MoveType::NewParent) => 1.0,
        (false, MoveType::AddChild) => cfg.type1_prob,
        (false, MoveType::NewParent) => 1.0 - cfg.type1_prob,
    };
    p * type_p
}

/// Sum over all detach/insert triples that turn `from` into `to`, with the
/// clade indices of both trees already built.
fn path_prob(from: &FragTree, fi: &CladeIndex, to: &FragTree, ti: &CladeIndex, cfg: &ProposalConfig, seen: &mut Vec<bool>) -> f64 {
    let m = fi.n_nodes;
    if m < 2 {
        return 0.0;
    }
    let root = from.root_slot();
    let mut total = 0.0;
    for k in from.preorder_slots() {
        if k == root {
            continue;
        }
        let s = fi.clade[k];
        let Some(&k2) = ti.by_hash.get(&s) else { continue };
        // same leaf set is not enough, the moved subtree keeps its shape
        if k2 == to.root_slot() || fi.sub[k] != ti.sub[k2] || fi.reduced_hash(from, k) != ti.reduced_hash(to, k2) {
            continue;
        }
        // where S hangs in `to`, expressed as a node of the common reduced tree
        let p2 = to.node(k2).parent.expect("non-root");
        let kids = &to.node(p2).children;
        let (kind, target) = if kids.len() >= 3 {
            (MoveType::AddChild, ti.clade[p2].wrapping_sub(s))
        } else {
            let x = if kids[0] == k2 { kids[1] } else { kids[0] };
            (MoveType::NewParent, ti.clade[x])
        };
        let Some(h) = fi.reduced_node(from, k, target) else { continue };
        let view = PrunedView::from_slot(from, k).expect("non-root");
        let n_reduced = m - fi.size[k] - usize::from(binary_sibling(from, k).is_some());
        total += site_prob(&view, h, kind, n_reduced, cfg, seen) / (m - 1) as f64;
    }
    total
}

/// Total probability that one proposal from `from` yields `to`.
pub fn proposal_prob(from: &FragTree, to: &FragTree, cfg: &ProposalConfig) -> f64 {
    let mut scratch = SprScratch::default();
    scratch.from.build(from);
    scratch.to.build(to);
    path_prob(from, &scratch.from, to, &scratch.to, cfg, &mut scratch.seen)
}

/// Probability of one specific detach/insert triple.
pub fn triple_prob(tree: &FragTree, edit: &SprEdit, cfg: &ProposalConfig) -> Result<f64> {
    tree.check_edit(edit)?;
    let k = tree.resolve(edit.detach)?;
    let h = tree.resolve(edit.site.target)?;
    let mut idx = CladeIndex::default();
    idx.build(tree);
    let view = PrunedView::from_slot(tree, k)?;
    let n_reduced = idx.n_nodes - idx.size[k] - usize::from(binary_sibling(tree, k).is_some());
    let mut seen = Vec::new();
    Ok(site_prob(&view, h, edit.site.kind, n_reduced, cfg, &mut seen) / (idx.n_nodes - 1) as f64)
}

/// Draws a prune-and-regraft proposal from `tree`.
pub fn propose_spr<R: Rng + ?Sized>(tree: &FragTree, cfg: &ProposalConfig, rng: &mut R, scratch: &mut SprScratch) -> Result<Option<SprProposal>> {
    let slots = tree.preorder_slots();
    if slots.len() < 2 {
        return Ok(None);
    }
    let k = slots[1 + rng.random_range(0..slots.len() - 1)];
    let view = PrunedView::from_slot(tree, k)?;
    let local = rng.random::<f64>() < cfg.local_move_prob;
    let sites = if local {
        view.ball_slots(cfg.local_radius, &mut scratch.seen)
    } else {
        view.reduced_slots()
    };
    let h = sites[rng.random_range(0..sites.len())];
    let kind = if tree.node(h).vertex.is_none() && rng.random::<f64>() < cfg.type1_prob {
        MoveType::AddChild
    } else {
        MoveType::NewParent
    };
    let site = InsertSite {
        kind,
        target: tree.handle(h),
    };
    let edit = SprEdit {
        detach: tree.handle(k),
        site,
    };
    if site == view.original_site() {
        return Ok(Some(SprProposal {
            edit,
            log_forward: 0.0,
            log_backward: 0.0,
            local,
            kind,
            identity: true,
            proposed: None,
        }));
    }
    let mut proposed = tree.clone();
    proposed.apply_spr(&edit)?;
    scratch.from.build(tree);
    scratch.to.build(&proposed);
    let fwd = path_prob(tree, &scratch.from, &proposed, &scratch.to, cfg, &mut scratch.seen);
    let bwd = path_prob(&proposed, &scratch.to, tree, &scratch.from, cfg, &mut scratch.seen);
    if !(fwd > 0.0) || !(bwd > 0.0) {
        return Err(Error::Invariant(format!(
            "proposal probabilities degenerate (forward {fwd}, backward {bwd}) for {} -> {}",
            tree.canonical(),
            proposed.canonical()
        )));
    }
    Ok(Some(SprProposal {
        edit,
        log_forward: fwd.ln(),
        log_backward: bwd.ln(),
        local,
        kind,
        identity: false,
        proposed: Some(proposed),
    }))
}
