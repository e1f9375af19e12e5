//! Exit criteria. Runs as a plain binary and prints one line per criterion.
//! Pass criterion numbers as arguments to run a subset.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use common::{all_trees, block_sizes, empirical, exact_posterior, set_partitions, total_variation};
use fragnet::evalmetrics::{experiment_grid, predict_network, Averaging, GridGenerator};
use fragnet::graphstats::{BlockStats, Graph};
use fragnet::models::{log_marginal_likelihood, BetaParams, ModelKind, NetworkGenerator, Structure};
use fragnet::prior::{consistency_residual, sample_tree, split_log_prob, tree_log_prior, GibbsParams};
use fragnet::sampler::io::{write_diagnostics, write_samples};
use fragnet::sampler::{run_chain, run_chains, ChainConfig, ProposalConfig, SprScratch, TreeState};
use fragnet::{FlatPartition, FragTree};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn grid() -> Vec<GibbsParams<f64>> {
    let mut out = Vec::new();
    for alpha in [0.1, 0.5, 1.0] {
        for sum in [0.1, 1.0, 10.0] {
            out.push(GibbsParams::new(alpha, sum - alpha).unwrap());
        }
    }
    out
}

fn samples_of(out: &[fragnet::PosteriorSample]) -> BTreeMap<String, f64> {
    let keys: Vec<String> = out.iter().map(|s| s.structure.canonical()).collect();
    empirical(keys.iter().map(String::as_str))
}

fn c1_split_normalization() -> Outcome {
    let mut worst = 0.0f64;
    let parts: Vec<Vec<Vec<usize>>> = (2..=8)
        .map(|n| set_partitions(n).iter().map(|l| block_sizes(l)).filter(|s| s.len() >= 2).collect())
        .collect();
    for p in grid() {
        for sizes in &parts {
            let total: f64 = sizes.iter().map(|s| split_log_prob(s, &p).unwrap().exp()).sum();
            worst = worst.max((total - 1.0).abs());
        }
    }
    check(worst <= 1e-9, format!("max |sum - 1| = {worst:.2e} over n=2..8, 9 grid points"))
}

fn c2_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(2..=12);
        // random composition of n into at least two parts
        let mut sizes = Vec::new();
        let mut left = n;
        while left > 0 {
            let s = rng.random_range(1..=left);
            sizes.push(s);
            left -= s;
        }
        if sizes.len() < 2 {
            sizes = vec![n - 1, 1];
        }
        let alpha = rng.random_range(0.05..0.95);
        let p = GibbsParams::<f64>::new(alpha, rng.random_range(-alpha + 0.01..10.0)).unwrap();
        worst = worst.max(consistency_residual(&sizes, &p).unwrap().abs());
    }
    check(worst < 1e-10, format!("max residual {worst:.2e} on 100 compositions"))
}

fn c3_tree_prior_normalization() -> Outcome {
    let mut worst = 0.0f64;
    let trees: Vec<Vec<FragTree>> = (3..=5).map(all_trees).collect();
    let counts: Vec<usize> = trees.iter().map(Vec::len).collect();
    for p in grid() {
        for ts in &trees {
            let total: f64 = ts.iter().map(|t| tree_log_prior(t, &p).exp()).sum();
            worst = worst.max((total - 1.0).abs());
        }
    }
    check(counts == [4, 26, 236] && worst <= 1e-9, format!("tree counts {counts:?}, max |sum - 1| = {worst:.2e}"))
}

fn c4_likelihood_normalization() -> Outcome {
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let tau = GibbsParams::<f64>::default();
    let rhos = [BetaParams::<f64>::new(1.0, 1.0).unwrap(), BetaParams::new(0.5, 2.0).unwrap()];
    for n in 2..=5 {
        let graphs = common::all_graphs(n);
        for kind in ModelKind::ALL {
            let mut structures: Vec<Structure> = Vec::new();
            for _ in 0..3 {
                structures.push(if kind == ModelKind::Irm {
                    Structure::Partition(fragnet::prior::sample_crp(n, &tau, &mut rng))
                } else {
                    Structure::Tree(sample_tree(n, &tau, &mut rng).unwrap())
                });
            }
            if kind != ModelKind::Irm {
                structures.push(Structure::Tree(FragTree::star(n).unwrap()));
            }
            for s in &structures {
                for rho in &rhos {
                    let total: f64 = graphs.iter().map(|g| log_marginal_likelihood(g, s, kind, rho).unwrap().exp()).sum();
                    worst = worst.max((total - 1.0).abs());
                }
            }
        }
    }
    check(worst <= 1e-8, format!("max |sum - 1| = {worst:.2e} for n=2..5, all model kinds"))
}

fn c5_prior_sampling() -> Outcome {
    let p = GibbsParams::<f64>::new(0.5, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draws: Vec<String> = (0..100_000).map(|_| sample_tree(4, &p, &mut rng).unwrap().canonical()).collect();
    let got = empirical(draws.iter().map(String::as_str));
    let want: BTreeMap<String, f64> = all_trees(4).iter().map(|t| (t.canonical(), tree_log_prior(t, &p).exp())).collect();
    let tv = total_variation(&got, &want);
    check(tv <= 0.02, format!("TV {tv:.4} over 1e5 draws"))
}

fn golden_graph() -> Graph {
    Graph::from_edges(5, &[(0, 1), (0, 2), (1, 2), (2, 3), (3, 4)]).unwrap()
}

fn c6_golden_posterior() -> Outcome {
    let g = golden_graph();
    let tau = GibbsParams::new(0.5, 0.5).unwrap();
    let rho = BetaParams::default();
    let steps = 1_000_000;
    let mut parts = Vec::new();
    let mut ok = true;
    let results: Vec<(ModelKind, usize, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = [ModelKind::Unpooled, ModelKind::Pooled, ModelKind::Irm]
            .into_iter()
            .map(|kind| {
                let g = &g;
                s.spawn(move || {
                    let want = exact_posterior(g, kind, &rho, &tau);
                    let config = ChainConfig { iterations: 20_000 + steps, burn_in: 20_000, thin: 1, kind, tau, rho, seed: 6, ..Default::default() };
                    let out = run_chain(g, &config).unwrap();
                    (kind, want.len(), total_variation(&samples_of(&out.samples), &want))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    for (kind, states, tv) in results {
        ok &= tv <= 0.05;
        parts.push(format!("{kind} TV {tv:.4} over {states} states"));
    }
    check(ok, parts.join(", "))
}

fn c7_prior_recovery() -> Outcome {
    let g = Graph::empty(4).fully_masked();
    let tau = GibbsParams::<f64>::new(0.5, 0.5).unwrap();
    let config = ChainConfig { iterations: 1_010_000, burn_in: 10_000, thin: 1, tau, seed: 7, ..Default::default() };
    let out = run_chain(&g, &config).unwrap();
    let want: BTreeMap<String, f64> = all_trees(4).iter().map(|t| (t.canonical(), tree_log_prior(t, &tau).exp())).collect();
    let tv = total_variation(&samples_of(&out.samples), &want);
    check(tv <= 0.03, format!("TV {tv:.4} over 1e6 steps"))
}

fn c8_cache_integrity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 50;
    let mut g = Graph::empty(n);
    for i in 0..n {
        for j in i + 1..n {
            let p = if i / 10 == j / 10 { 0.5 } else { 0.08 };
            if rng.random::<f64>() < p {
                g.add_edge(i, j).unwrap();
            }
            if rng.random::<f64>() < 0.05 {
                g.mask_pair(i, j).unwrap();
            }
        }
    }
    let tau = GibbsParams::<f64>::default();
    let cfg = ProposalConfig::default();
    let mut scratch = SprScratch::default();
    let mut edits = 0;
    for kind in [ModelKind::Unpooled, ModelKind::Pooled] {
        let tree = sample_tree(n, &tau, &mut rng).unwrap();
        let mut state = TreeState::new(&g, kind, BetaParams::default(), tau, tree).unwrap();
        let mut done = 0;
        while done < 10_000 {
            let prop = state.propose(&cfg, &mut rng, &mut scratch).unwrap().unwrap();
            if prop.identity {
                continue;
            }
            state.apply(&prop.edit).unwrap();
            done += 1;
            if state.stats() != &BlockStats::full_stats(&g, state.tree()).unwrap() {
                return Err(format!("{kind}: stats differ from recount after {done} edits"));
            }
            if let Err(e) = state.check_integrity() {
                return Err(format!("{kind}: {e} after {done} edits"));
            }
        }
        edits += done;
    }
    Ok(format!("{edits} edits, stats exact and log joint within 1e-9 after each"))
}

/// Five planted blocks of 20 vertices.
fn block(v: usize) -> usize {
    v / 20
}

fn planted_tree(text: &str) -> FragTree {
    // block names b0..b4 expand to stars over their vertices
    let mut s = text.to_string();
    for b in 0..5 {
        let members: Vec<String> = (20 * b..20 * b + 20).map(|v| v.to_string()).collect();
        s = s.replace(&format!("b{b}"), &format!("[{}]", members.join(",")));
    }
    s.parse().unwrap()
}

/// Five blocks of four 5-vertex groups.
fn planted_groups() -> FragTree {
    let groups: Vec<String> = (0..5)
        .map(|b| {
            let g: Vec<String> = (0..4)
                .map(|k| {
                    let start = 20 * b + 5 * k;
                    let v: Vec<String> = (start..start + 5).map(|x| x.to_string()).collect();
                    format!("[{}]", v.join(","))
                })
                .collect();
            format!("[{}]", g.join(","))
        })
        .collect();
    format!("[{}]", groups.join(",")).parse().unwrap()
}

fn grid_generators() -> Vec<GridGenerator> {
    // blockmodel: assortative with uneven cross rates
    let within = [0.8, 0.85, 0.75, 0.8, 0.9];
    let cross = [
        [0.0, 0.20, 0.05, 0.12, 0.02],
        [0.20, 0.0, 0.15, 0.02, 0.08],
        [0.05, 0.15, 0.0, 0.20, 0.05],
        [0.12, 0.02, 0.20, 0.0, 0.03],
        [0.02, 0.08, 0.05, 0.03, 0.0],
    ];
    let blocks: Vec<Vec<usize>> = (0..5).map(|b| (20 * b..20 * b + 20).collect()).collect();
    let irm = NetworkGenerator::with_theta(
        Structure::Partition(FlatPartition::from_blocks(&blocks).unwrap()),
        ModelKind::Irm,
        |_, (i, j)| if block(i) == block(j) { within[block(i)] } else { cross[block(i)][block(j)] },
    )
    .unwrap();
    // unpooled: blocks of four 5-vertex groups, linked in a ring at the top
    // and with a different rate for each pair of groups inside a block.
    // Neither a single rate per node nor five flat blocks can express it.
    let ring = |a: usize, b: usize| if (a + 1) % 5 == b || (b + 1) % 5 == a { 0.3 } else { 0.02 };
    let inner = [0.75, 0.1, 0.6, 0.15, 0.65, 0.05];
    let group_pair = |x: usize, y: usize| match (x.min(y), x.max(y)) {
        (0, 1) => 0,
        (0, 2) => 1,
        (0, 3) => 2,
        (1, 2) => 3,
        (1, 3) => 4,
        _ => 5,
    };
    let unpooled = NetworkGenerator::with_theta(
        Structure::Tree(planted_groups()),
        ModelKind::Unpooled,
        |_, (i, j)| {
            let (gi, gj) = (i / 5 % 4, j / 5 % 4);
            if block(i) != block(j) {
                ring(block(i), block(j))
            } else if gi == gj {
                0.9
            } else {
                inner[(block(i) + group_pair(gi, gj)) % 6]
            }
        },
    )
    .unwrap();
    // pooled: two-level hierarchy
    let pooled = NetworkGenerator::with_theta(Structure::Tree(planted_tree("[[b0,b1],[b2,[b3,b4]]]")), ModelKind::Pooled, |_, (i, j)| {
        let (a, b) = (block(i), block(j));
        if a == b {
            return within[a];
        }
        match (a.min(b), a.max(b)) {
            (0, 1) => 0.3,
            (3, 4) => 0.35,
            (2, 3) | (2, 4) => 0.15,
            _ => 0.02,
        }
    })
    .unwrap();
    vec![
        GridGenerator { name: "irm".into(), generator: irm },
        GridGenerator { name: "unpooled".into(), generator: unpooled },
        GridGenerator { name: "pooled".into(), generator: pooled },
    ]
}

const TIE: f64 = 0.01;

fn c9_table_grid() -> Outcome {
    let env = |k: &str| std::env::var(k).ok().and_then(|s| s.parse::<u64>().ok());
    let iterations = env("FRAGNET_GRID_ITERS").unwrap_or(100_000) as usize;
    let seed = env("FRAGNET_GRID_SEED").unwrap_or(9);
    let config = ChainConfig { iterations, burn_in: iterations / 2, thin: iterations / 200, seed, ..Default::default() };
    let fits = [ModelKind::Irm, ModelKind::Unpooled, ModelKind::Pooled];
    let table = experiment_grid(&grid_generators(), &fits, &config, 10, seed).map_err(|e| e.to_string())?;
    eprintln!("{}", table.to_text());
    let auc = |net: &str, m: ModelKind| table.cell(net, m).unwrap().auc_mean;
    let mut notes = Vec::new();
    let mut ok = true;
    for (net, own) in [("irm", ModelKind::Irm), ("unpooled", ModelKind::Unpooled), ("pooled", ModelKind::Pooled)] {
        let best = fits.iter().map(|&m| auc(net, m)).fold(f64::MIN, f64::max);
        let good = auc(net, own) >= best - TIE;
        ok &= good;
        notes.push(format!("(a) {net}: own {:.4} best {best:.4}", auc(net, own)));
    }
    let deficit = auc("unpooled", ModelKind::Unpooled) - auc("unpooled", ModelKind::Pooled);
    ok &= deficit >= 0.03;
    notes.push(format!("(b) pooled deficit {deficit:.4}"));
    let gap = (auc("irm", ModelKind::Unpooled) - auc("irm", ModelKind::Irm)).abs();
    ok &= gap <= 0.02;
    notes.push(format!("(c) |unpooled - irm| {gap:.4}"));
    check(ok, notes.join("; "))
}

fn c10_schedule() -> Outcome {
    let config = ChainConfig::<f64> { seed: 10, ..Default::default() };
    let g = Graph::from_edges(6, &[(0, 1), (1, 2), (3, 4), (4, 5), (2, 3)]).unwrap();
    let out = run_chain(&g, &config).unwrap();
    let first = out.samples.first().map(|s| s.iteration);
    let ok = config.n_retained() == 200 && out.samples.len() == 200 && first == Some(201_000);
    check(ok, format!("{} retained from {} iterations", out.samples.len(), config.iterations))
}

fn structured_graph(rng: &mut ChaCha8Rng) -> Graph {
    // three superblocks of two 10-vertex blocks each
    let n = 60;
    let mut g = Graph::empty(n);
    for i in 0..n {
        for j in i + 1..n {
            let p = if i / 10 == j / 10 {
                0.6
            } else if i / 20 == j / 20 {
                0.25
            } else {
                0.03
            };
            if rng.random::<f64>() < p {
                g.add_edge(i, j).unwrap();
            }
        }
    }
    g
}

fn c11_local_vs_global() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g = structured_graph(&mut rng);
    let config = ChainConfig::<f64> { iterations: 100_000, burn_in: 50_000, thin: 1000, seed: 11, ..Default::default() };
    let d = run_chain(&g, &config).unwrap().diagnostics;
    let (l, gl) = (d.local().acceptance_rate().unwrap_or(0.0), d.global().acceptance_rate().unwrap_or(0.0));
    check(l > gl, format!("local {l:.4} vs global {gl:.4}"))
}

fn c12_determinism() -> Outcome {
    let g = golden_graph();
    let run = || {
        let mut text = String::new();
        for kind in ModelKind::ALL {
            let config = ChainConfig::<f64> { iterations: 20_000, burn_in: 10_000, thin: 100, kind, seed: 12, ..Default::default() };
            for out in run_chains(&g, &config, 3).unwrap() {
                text.push_str(&write_samples(kind, &out.samples));
                text.push_str(&write_diagnostics(&out.diagnostics));
                let r = predict_network(&out.samples, &g, &g, kind, &config.rho, None, Averaging::PerSample).unwrap();
                text.push_str(&r.summary_text());
                text.push_str(&r.pairs_text());
            }
        }
        text
    };
    let (a, b) = (run(), run());
    check(a == b && !a.is_empty(), format!("{} bytes identical across two runs", a.len()))
}

fn main() {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(usize, &str, fn() -> Outcome); 12] = [
        (1, "split normalization", c1_split_normalization),
        (2, "consistency identity", c2_consistency),
        (3, "tree prior normalization", c3_tree_prior_normalization),
        (4, "likelihood normalization", c4_likelihood_normalization),
        (5, "prior sampling", c5_prior_sampling),
        (6, "golden posterior", c6_golden_posterior),
        (7, "prior recovery through the sampler", c7_prior_recovery),
        (8, "cache integrity", c8_cache_integrity),
        (9, "directional model grid", c9_table_grid),
        (10, "sampler schedule", c10_schedule),
        (11, "local vs global acceptance", c11_local_vs_global),
        (12, "determinism", c12_determinism),
    ];
    let selected: Vec<_> = criteria.iter().filter(|c| wanted.is_empty() || wanted.contains(&c.0)).collect();
    let results: Vec<(Outcome, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = selected
            .iter()
            .map(|c| {
                s.spawn(move || {
                    let start = Instant::now();
                    let r = std::panic::catch_unwind(c.2).unwrap_or_else(|_| Err("panicked".to_string()));
                    (r, start.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut failed = 0;
    for (c, (r, secs)) in selected.iter().zip(results) {
        let (tag, detail) = match r {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag}: {} ({detail}; {secs:.1}s)", c.0, c.1);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
