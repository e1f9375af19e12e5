//! Posterior simulation: Metropolis-Hastings over trees for the hierarchical
//! models, collapsed Gibbs over partitions for the blockmodel.

pub mod io;
mod irm;
pub mod mixing;
mod spr;
mod tree_state;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::graphstats::Graph;
use crate::models::{BetaParams, ModelKind, Structure};
use crate::partition::FlatPartition;
use crate::prior::{sample_crp, sample_tree, GibbsParams};
use crate::scalar::Real;
use crate::tree::FragTree;

pub use irm::IrmState;
pub use spr::{proposal_prob, propose_spr, triple_prob, ProposalConfig, SprProposal, SprScratch};
pub use tree_state::{StepResult, TreeState};

/// Starting structure of a chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Init {
    /// Drawn from the prior with the chain's own generator.
    Prior,
    /// Star tree, or a single block for the blockmodel.
    Flat,
    Given(Structure),
}

/// Everything that determines a chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainConfig<T = f64> {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub proposal: ProposalConfig,
    pub seed: u64,
    pub kind: ModelKind,
    pub tau: GibbsParams<T>,
    pub rho: BetaParams<T>,
    pub init: Init,
    /// Recheck every cache against a recomputation this often.
    pub verify_every: Option<usize>,
}

impl<T: Real> Default for ChainConfig<T> {
    fn default() -> Self {
        ChainConfig {
            iterations: 400_000,
            burn_in: 200_000,
            thin: 1000,
            proposal: ProposalConfig::default(),
            seed: 0,
            kind: ModelKind::Unpooled,
            tau: GibbsParams::default(),
            rho: BetaParams::default(),
            init: Init::Prior,
            verify_every: None,
        }
    }
}

impl<T: Real> ChainConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(invalid(format!(
                "burn-in ({}) must be smaller than the number of iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(invalid("thin must be at least 1"));
        }
        if self.verify_every == Some(0) {
            return Err(invalid("verify interval must be at least 1"));
        }
        self.proposal.validate()
    }

    /// Number of states a chain with this schedule retains.
    pub fn n_retained(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}

/// One retained state.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorSample {
    pub iteration: usize,
    pub log_prior: f64,
    pub log_ml: f64,
    pub structure: Structure,
}

impl PosteriorSample {
    pub fn log_joint(&self) -> f64 {
        self.log_prior + self.log_ml
    }
}

/// Proposal and acceptance counts for one move class.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MoveCounter {
    pub name: String,
    /// Proposals that would change the state.
    pub proposed: u64,
    pub accepted: u64,
    /// Proposals that reproduce the current state.
    pub same_state: u64,
}

impl MoveCounter {
    fn named(name: &str) -> Self {
        MoveCounter {
            name: name.to_string(),
            ..Default::default()
        }
    }

    pub fn acceptance_rate(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }
}

/// Per-chain run summary.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    pub kind: ModelKind,
    pub burn_in: usize,
    pub thin: usize,
    pub counters: Vec<MoveCounter>,
    /// `(iteration, log joint)` at every `thin`-th iteration.
    pub trace: Vec<(usize, f64)>,
    /// Not written to files.
    pub wall_seconds: f64,
}

impl Diagnostics {
    fn new(kind: ModelKind, burn_in: usize, thin: usize) -> Self {
        let names: &[&str] = if kind.uses_tree() {
            &["local-type1", "local-type2", "global-type1", "global-type2"]
        } else {
            &["gibbs"]
        };
        Diagnostics {
            kind,
            burn_in,
            thin,
            counters: names.iter().map(|n| MoveCounter::named(n)).collect(),
            trace: Vec::new(),
            wall_seconds: 0.0,
        }
    }

    fn merged(&self, prefix: &str) -> MoveCounter {
        let mut m = MoveCounter::named(prefix);
        for c in self.counters.iter().filter(|c| c.name.starts_with(prefix)) {
            m.proposed += c.proposed;
            m.accepted += c.accepted;
            m.same_state += c.same_state;
        }
        m
    }

    /// Pooled counts of local proposals.
    pub fn local(&self) -> MoveCounter {
        self.merged("local")
    }

    /// Pooled counts of global proposals.
    pub fn global(&self) -> MoveCounter {
        self.merged("global")
    }

    /// Trace entries after burn-in.
    pub fn post_burn_in(&self) -> impl Iterator<Item = f64> + '_ {
        self.trace.iter().filter(move |(t, _)| *t > self.burn_in).map(|&(_, v)| v)
    }
}

/// Output of one chain.
#[derive(Clone, Debug)]
pub struct ChainOutput {
    pub samples: Vec<PosteriorSample>,
    pub diagnostics: Diagnostics,
}

/// Generator for chain `index` under master seed `seed`: ChaCha8 seeded
/// with `seed`, stream `index`.
pub fn chain_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn invariant_at(e: Error, t: usize, state: &str) -> Error {
    match e {
        Error::Invariant(m) => Error::Invariant(format!("{m} (iteration {t}, state {state})")),
        other => other,
    }
}

/// Runs one chain with generator stream 0.
pub fn run_chain<T: Real>(graph: &Graph, config: &ChainConfig<T>) -> Result<ChainOutput> {
    run_chain_on_stream(graph, config, 0)
}

/// Runs `chains` chains concurrently; chain `c` uses generator stream `c`.
pub fn run_chains<T: Real>(graph: &Graph, config: &ChainConfig<T>, chains: usize) -> Result<Vec<ChainOutput>> {
    config.validate()?;
    if chains == 0 {
        return Err(invalid("need at least one chain"));
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..chains)
            .map(|c| s.spawn(move || run_chain_on_stream(graph, config, c as u64)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("chain worker panicked")).collect()
    })
}

/// Runs one chain using generator stream `stream` of the configured seed.
pub fn run_chain_on_stream<T: Real>(graph: &Graph, config: &ChainConfig<T>, stream: u64) -> Result<ChainOutput> {
    config.validate()?;
    let started = Instant::now();
    let mut rng = chain_rng(config.seed, stream);
    let n = graph.n();
    if n == 0 {
        return Err(invalid("graph has no vertices"));
    }
    let mut diag = Diagnostics::new(config.kind, config.burn_in, config.thin);
    let mut samples = Vec::with_capacity(config.n_retained());
    let retain = |t: usize| t > config.burn_in && (t - config.burn_in) % config.thin == 0;

    if config.kind.uses_tree() {
        let tree = match &config.init {
            Init::Prior => sample_tree(n, &config.tau, &mut rng)?,
            Init::Flat => FragTree::star(n)?,
            Init::Given(Structure::Tree(t)) => t.clone(),
            Init::Given(_) => return Err(invalid("initial structure must be a tree")),
        };
        let mut state = TreeState::new(graph, config.kind, config.rho, config.tau, tree)?;
        let mut scratch = SprScratch::default();
        for t in 1..=config.iterations {
            let step = state
                .mh_step(&config.proposal, &mut rng, &mut scratch)
                .map_err(|e| invariant_at(e, t, &state.tree().canonical()))?;
            if let Some(step) = step {
                let idx = usize::from(!step.local) * 2 + usize::from(!step.type1);
                let c = &mut diag.counters[idx];
                if step.identity {
                    c.same_state += 1;
                } else {
                    c.proposed += 1;
                    c.accepted += u64::from(step.accepted);
                }
            }
            if config.verify_every.is_some_and(|k| t % k == 0) {
                state.check_integrity().map_err(|e| invariant_at(e, t, &state.tree().canonical()))?;
            }
            if t % config.thin == 0 {
                diag.trace.push((t, state.log_joint().as_f64()));
            }
            if retain(t) {
                samples.push(PosteriorSample {
                    iteration: t,
                    log_prior: state.log_prior().as_f64(),
                    log_ml: state.log_ml().as_f64(),
                    structure: Structure::Tree(state.tree().clone()),
                });
            }
        }
    } else {
        let partition = match &config.init {
            Init::Prior => sample_crp(n, &config.tau, &mut rng),
            Init::Flat => FlatPartition::single_block(n),
            Init::Given(Structure::Partition(p)) => p.clone(),
            Init::Given(_) => return Err(invalid("initial structure must be a partition")),
        };
        let mut state = IrmState::new(graph, config.rho, config.tau, &partition)?;
        for t in 1..=config.iterations {
            let changed = state.gibbs_update((t - 1) % n, &mut rng);
            let c = &mut diag.counters[0];
            if changed {
                c.proposed += 1;
                c.accepted += 1;
            } else {
                c.same_state += 1;
            }
            if config.verify_every.is_some_and(|k| t % k == 0) {
                state
                    .check_integrity()
                    .map_err(|e| invariant_at(e, t, &state.partition().to_string()))?;
            }
            let record = retain(t);
            if t % config.thin == 0 || record {
                let (lp, lm) = (state.log_prior().as_f64(), state.log_ml().as_f64());
                if t % config.thin == 0 {
                    diag.trace.push((t, lp + lm));
                }
                if record {
                    samples.push(PosteriorSample {
                        iteration: t,
                        log_prior: lp,
                        log_ml: lm,
                        structure: Structure::Partition(state.partition()),
                    });
                }
            }
        }
    }
    diag.wall_seconds = started.elapsed().as_secs_f64();
    Ok(ChainOutput { samples, diagnostics: diag })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_graph() -> Graph {
        Graph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]).unwrap()
    }

    #[test]
    fn default_schedule_retains_200() {
        let c = ChainConfig::<f64>::default();
        c.validate().unwrap();
        assert_eq!(c.n_retained(), 200);
    }

    #[test]
    fn config_errors() {
        let mut c = ChainConfig::<f64>::default();
        c.burn_in = c.iterations;
        assert!(c.validate().is_err());
        let mut c = ChainConfig::<f64>::default();
        c.thin = 0;
        assert!(c.validate().is_err());
        let mut c = ChainConfig::<f64>::default();
        c.proposal.local_move_prob = 1.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn chains_are_reproducible_and_checked() {
        let g = small_graph();
        for kind in ModelKind::ALL {
            let cfg = ChainConfig::<f64> {
                iterations: 600,
                burn_in: 300,
                thin: 50,
                kind,
                seed: 9,
                verify_every: Some(1),
                ..Default::default()
            };
            let a = run_chain(&g, &cfg).unwrap();
            let b = run_chain(&g, &cfg).unwrap();
            assert_eq!(a.samples, b.samples);
            assert_eq!(a.samples.len(), 6);
            assert_eq!(a.diagnostics.trace.len(), 12);
            let multi = run_chains(&g, &cfg, 2).unwrap();
            assert_eq!(multi[0].samples, a.samples);
        }
    }
}
