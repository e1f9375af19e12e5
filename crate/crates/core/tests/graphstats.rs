mod common;

use std::collections::BTreeMap;

use fragnet::graphstats::{emit_edge_list, parse_edge_list, BlockStats, Counts, Graph};
use fragnet::prior::{sample_tree, GibbsParams};
use fragnet::tree::{FragTree, NodeRef, SprEdit};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_graph(n: usize, p: f64, mask_p: f64, rng: &mut ChaCha8Rng) -> Graph {
    let mut g = Graph::empty(n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                g.add_edge(i, j).unwrap();
            }
            if rng.random::<f64>() < mask_p {
                g.mask_pair(i, j).unwrap();
            }
        }
    }
    g
}

fn random_tree(n: usize, rng: &mut ChaCha8Rng) -> FragTree {
    sample_tree(n, &GibbsParams::new(0.3, 0.5).unwrap(), rng).unwrap()
}

/// Pooled counts per internal node (keyed by clade) from a double loop
/// over vertex pairs with explicit lca calls.
fn brute_pooled(g: &Graph, t: &FragTree) -> BTreeMap<Vec<usize>, Counts> {
    let mut out: BTreeMap<Vec<usize>, Counts> = BTreeMap::new();
    for r in t.internal_nodes() {
        out.insert(t.leaves_under(r).unwrap(), Counts::default());
    }
    for i in 0..g.n() {
        for j in i + 1..g.n() {
            if g.is_observed(i, j) {
                let c = out.get_mut(&t.leaves_under(t.lca(i, j).unwrap()).unwrap()).unwrap();
                c.pairs += 1;
                c.links += g.has_edge(i, j) as u64;
            }
        }
    }
    out
}

fn pooled_by_clade(s: &BlockStats, t: &FragTree) -> BTreeMap<Vec<usize>, Counts> {
    t.internal_nodes()
        .into_iter()
        .map(|r| (t.leaves_under(r).unwrap(), s.node(t, r).unwrap().unwrap().pooled))
        .collect()
}

fn random_edit(t: &FragTree, rng: &mut ChaCha8Rng) -> SprEdit {
    let nodes = t.preorder();
    let k: NodeRef = nodes[rng.random_range(1..nodes.len())];
    let d = t.detach(k).unwrap();
    let sites = d.reduced.candidate_sites(d.anchor, usize::MAX).unwrap();
    SprEdit { detach: k, site: sites[rng.random_range(0..sites.len())] }
}

#[test]
fn full_stats_examples() {
    let k3 = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
    let star = FragTree::star(3).unwrap();
    let s = BlockStats::full_stats(&k3, &star).unwrap();
    assert_eq!(s.node(&star, star.root()).unwrap().unwrap().pooled, Counts::new(3, 3));
    let empty = Graph::empty(5);
    let t: FragTree = "[[0,1],[2,3,4]]".parse().unwrap();
    let s = BlockStats::full_stats(&empty, &t).unwrap();
    assert_eq!(s.node(&t, t.root()).unwrap().unwrap().pooled, Counts::new(0, 6));
    assert_eq!(s.totals(), Counts::new(0, 10));
    assert!(BlockStats::full_stats(&empty, &FragTree::star(4).unwrap()).is_err());
}

#[test]
fn unpooled_child_pairs_cover_the_pool() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let g = random_graph(10, 0.4, 0.1, &mut rng);
        let t = random_tree(10, &mut rng);
        let s = BlockStats::full_stats(&g, &t).unwrap();
        for r in t.internal_nodes() {
            let kids = t.children(r).unwrap();
            let mut sum = Counts::default();
            for a in 0..kids.len() {
                for b in a + 1..kids.len() {
                    let c = s.child_pair(&g, &t, kids[a], kids[b]).unwrap();
                    // brute force over the two leaf sets
                    let mut want = Counts::default();
                    for i in t.leaves_under(kids[a]).unwrap() {
                        for j in t.leaves_under(kids[b]).unwrap() {
                            if g.is_observed(i, j) {
                                want.pairs += 1;
                                want.links += g.has_edge(i, j) as u64;
                            }
                        }
                    }
                    assert_eq!(c, want);
                    sum += c;
                }
            }
            assert_eq!(sum, s.node(&t, r).unwrap().unwrap().pooled);
        }
    }
}

#[test]
fn masking_a_pair_decrements_one_counter() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let g = random_graph(9, 0.5, 0.0, &mut rng);
    let t = random_tree(9, &mut rng);
    let before = brute_pooled(&g, &t);
    let masked = g.with_mask(&[(2, 7)]).unwrap();
    let after = pooled_by_clade(&BlockStats::full_stats(&masked, &t).unwrap(), &t);
    let lca = t.leaves_under(t.lca(2, 7).unwrap()).unwrap();
    for (clade, c) in &before {
        if *clade == lca {
            assert_eq!(*c - after[clade], Counts::new(g.has_edge(2, 7) as u64, 1));
        } else {
            assert_eq!(*c, after[clade]);
        }
    }
}

#[test]
fn single_leaf_move_on_four_vertices() {
    let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
    let mut t: FragTree = "[[0,1],[2,3]]".parse().unwrap();
    let mut s = BlockStats::full_stats(&g, &t).unwrap();
    let d = t.detach(t.leaf_node(0).unwrap()).unwrap();
    let site = d.reduced.candidate_sites(d.anchor, 3).unwrap()[1];
    let k0 = t.leaf_node(0).unwrap();
    s.apply_edit(&g, &mut t, &SprEdit { detach: k0, site }).unwrap();
    assert_eq!(s, BlockStats::full_stats(&g, &t).unwrap());
    // identity edit
    let before = s.clone();
    let k = t.leaf_node(3).unwrap();
    let original = t.detach(k).unwrap().original_site;
    s.apply_edit(&g, &mut t, &SprEdit { detach: k, site: original }).unwrap();
    assert_eq!(s, before);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn full_stats_match_brute_force(seed in any::<u64>(), n in 2usize..13) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, 0.4, 0.15, &mut rng);
        let t = random_tree(n, &mut rng);
        let s = BlockStats::full_stats(&g, &t).unwrap();
        prop_assert_eq!(pooled_by_clade(&s, &t), brute_pooled(&g, &t));
        prop_assert_eq!(s.totals(), Counts::new(g.n_observed_links() as u64, g.n_observed_pairs() as u64));
        prop_assert_eq!(s.totals().pairs as usize + g.n_masked(), n * (n - 1) / 2);
    }

    #[test]
    fn incremental_edits_match_recount(seed in any::<u64>(), n in 3usize..16, steps in 1usize..25) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, 0.35, 0.1, &mut rng);
        let mut t = random_tree(n, &mut rng);
        let mut s = BlockStats::full_stats(&g, &t).unwrap();
        for _ in 0..steps {
            let e = random_edit(&t, &mut rng);
            s.apply_edit(&g, &mut t, &e).unwrap();
            t.validate().unwrap();
            prop_assert_eq!(&s, &BlockStats::full_stats(&g, &t).unwrap());
            prop_assert_eq!(s.totals(), Counts::new(g.n_observed_links() as u64, g.n_observed_pairs() as u64));
        }
    }

    #[test]
    fn edge_list_round_trip(seed in any::<u64>(), n in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, 0.2, 0.0, &mut rng);
        prop_assert_eq!(parse_edge_list(&emit_edge_list(&g)).unwrap(), g);
    }
}
