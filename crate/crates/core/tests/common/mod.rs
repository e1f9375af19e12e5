//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use fragnet::graphstats::Graph;
use fragnet::models::{log_joint, BetaParams, ModelKind, Structure};
use fragnet::prior::GibbsParams;
use fragnet::sampler::ProposalConfig;
use fragnet::tree::{FragTree, InsertSite, MoveType, Nested};
use fragnet::FlatPartition;

/// Every set partition of `0..n` as a label vector in restricted-growth form.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(i: usize, n: usize, cur: &mut Vec<usize>, max: usize, out: &mut Vec<Vec<usize>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for b in 0..=max {
            cur.push(b);
            rec(i + 1, n, cur, max.max(b + 1), out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return vec![vec![]];
    }
    rec(0, n, &mut Vec::new(), 0, &mut out);
    out
}

/// Block sizes of a label vector.
pub fn block_sizes(labels: &[usize]) -> Vec<usize> {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0; k];
    for &l in labels {
        sizes[l] += 1;
    }
    sizes
}

/// Every fragmentation tree with leaf set `leaves`.
pub fn all_nested(leaves: &[usize]) -> Vec<Nested> {
    if leaves.len() == 1 {
        return vec![Nested::Leaf(leaves[0])];
    }
    let mut out = Vec::new();
    for labels in set_partitions(leaves.len()) {
        let k = labels.iter().max().unwrap() + 1;
        if k < 2 {
            continue;
        }
        let blocks: Vec<Vec<usize>> = (0..k)
            .map(|b| leaves.iter().zip(&labels).filter(|(_, &l)| l == b).map(|(&v, _)| v).collect())
            .collect();
        let options: Vec<Vec<Nested>> = blocks.iter().map(|b| all_nested(b)).collect();
        let mut combos: Vec<Vec<Nested>> = vec![vec![]];
        for opts in &options {
            let mut next = Vec::new();
            for c in &combos {
                for o in opts {
                    let mut c2 = c.clone();
                    c2.push(o.clone());
                    next.push(c2);
                }
            }
            combos = next;
        }
        out.extend(combos.into_iter().map(Nested::Node));
    }
    out
}

pub fn all_trees(n: usize) -> Vec<FragTree> {
    let leaves: Vec<usize> = (0..n).collect();
    all_nested(&leaves).iter().map(|t| FragTree::from_nested(t).unwrap()).collect()
}

/// Every graph on `n` vertices.
pub fn all_graphs(n: usize) -> Vec<Graph> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    (0u64..1 << pairs.len())
        .map(|mask| {
            let edges: Vec<(usize, usize)> = pairs.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &p)| p).collect();
            Graph::from_edges(n, &edges).unwrap()
        })
        .collect()
}

/// Total variation distance between two distributions keyed by name.
pub fn total_variation(p: &BTreeMap<String, f64>, q: &BTreeMap<String, f64>) -> f64 {
    let keys: std::collections::BTreeSet<&String> = p.keys().chain(q.keys()).collect();
    0.5 * keys
        .into_iter()
        .map(|k| (p.get(k).copied().unwrap_or(0.0) - q.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

pub fn normalize(weights: BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    let max = weights.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = weights.values().map(|w| (w - max).exp()).sum();
    weights.into_iter().map(|(k, w)| (k, (w - max).exp() / z)).collect()
}

pub fn empirical<'a>(items: impl Iterator<Item = &'a str>) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<String, f64> = BTreeMap::new();
    let mut total = 0.0;
    for s in items {
        *counts.entry(s.to_string()).or_default() += 1.0;
        total += 1.0;
    }
    counts.values_mut().for_each(|c| *c /= total);
    counts
}

/// Exact posterior over all trees (tree models) or all partitions (irm).
pub fn exact_posterior(graph: &Graph, kind: ModelKind, rho: &BetaParams<f64>, tau: &GibbsParams<f64>) -> BTreeMap<String, f64> {
    let n = graph.n();
    let structures: Vec<Structure> = if kind == ModelKind::Irm {
        set_partitions(n).iter().map(|l| Structure::Partition(FlatPartition::from_labels(l))).collect()
    } else {
        all_trees(n).into_iter().map(Structure::Tree).collect()
    };
    normalize(
        structures
            .iter()
            .map(|s| (s.canonical(), log_joint(graph, s, kind, rho, tau).unwrap()))
            .collect(),
    )
}

/// Probability of reaching each tree in one proposal from `tree`, summed
/// over all detach/insert/type triples by direct construction.
pub fn brute_proposals(tree: &FragTree, cfg: &ProposalConfig) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    let nodes = tree.preorder();
    let m = nodes.len();
    for &k in nodes.iter().skip(1) {
        let d = tree.detach(k).unwrap();
        let reduced_nodes = d.reduced.preorder();
        let ball = d.reduced.ball(d.anchor, cfg.local_radius).unwrap();
        for &h in &reduced_nodes {
            let site_p = cfg.local_move_prob * f64::from(u8::from(ball.contains(&h))) / ball.len() as f64
                + (1.0 - cfg.local_move_prob) / reduced_nodes.len() as f64;
            let leaf = d.reduced.is_leaf(h).unwrap();
            for kind in [MoveType::AddChild, MoveType::NewParent] {
                let type_p = match (leaf, kind) {
                    (true, MoveType::AddChild) => continue,
                    (true, MoveType::NewParent) => 1.0,
                    (false, MoveType::AddChild) => cfg.type1_prob,
                    (false, MoveType::NewParent) => 1.0 - cfg.type1_prob,
                };
                let next = d.reduced.insert(&d.subtree, InsertSite { kind, target: h }).unwrap();
                *out.entry(next.canonical()).or_insert(0.0) += site_p * type_p / (m - 1) as f64;
            }
        }
    }
    out
}
