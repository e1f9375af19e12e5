//! Collapsed network likelihoods, joint scores and predictive link rates.

mod simulate;

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::graphstats::{BlockStats, Counts, Graph, NodeStats, PartitionStats};
use crate::partition::FlatPartition;
use crate::prior::{crp_log_prob, tree_log_prior, GibbsParams};
use crate::scalar::Real;
use crate::tree::FragTree;

pub use simulate::{simulate_network, NetworkGenerator, ThetaDraw, ThetaUnit};

/// Beta prior on link probabilities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaParams<T = f64> {
    rho_plus: T,
    rho_minus: T,
}

impl<T: Real> BetaParams<T> {
    pub fn new(rho_plus: T, rho_minus: T) -> Result<Self> {
        let ok = |x: T| x.is_finite() && x > T::zero();
        if !ok(rho_plus) || !ok(rho_minus) {
            return Err(invalid(format!(
                "Beta parameters must be positive and finite, got ({rho_plus}, {rho_minus})"
            )));
        }
        Ok(BetaParams { rho_plus, rho_minus })
    }

    pub fn rho_plus(&self) -> T {
        self.rho_plus
    }

    pub fn rho_minus(&self) -> T {
        self.rho_minus
    }

    fn log_beta(a: T, b: T) -> T {
        a.log_gamma() + b.log_gamma() - (a + b).log_gamma()
    }

    /// Prior mean link probability.
    pub fn mean(&self) -> T {
        self.rho_plus / (self.rho_plus + self.rho_minus)
    }
}

impl<T: Real> Default for BetaParams<T> {
    fn default() -> Self {
        BetaParams {
            rho_plus: T::one(),
            rho_minus: T::one(),
        }
    }
}

/// Which likelihood ties the link probabilities together.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    /// One link probability per internal tree node.
    Pooled,
    /// One link probability per pair of children of an internal node.
    Unpooled,
    /// Flat blockmodel with a link probability per pair of blocks.
    Irm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Irm, ModelKind::Unpooled, ModelKind::Pooled];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Pooled => "pooled",
            ModelKind::Unpooled => "unpooled",
            ModelKind::Irm => "irm",
        }
    }

    pub fn uses_tree(self) -> bool {
        self != ModelKind::Irm
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pooled" => Ok(ModelKind::Pooled),
            "unpooled" => Ok(ModelKind::Unpooled),
            "irm" => Ok(ModelKind::Irm),
            other => Err(invalid(format!("unknown model {other:?} (expected pooled, unpooled or irm)"))),
        }
    }
}

/// Latent structure of a model: a tree for the hierarchical models, a flat
/// partition for the blockmodel.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Structure {
    Tree(FragTree),
    Partition(FlatPartition),
}

impl Structure {
    pub fn n_vertices(&self) -> usize {
        match self {
            Structure::Tree(t) => t.n_leaves(),
            Structure::Partition(p) => p.len(),
        }
    }

    /// Canonical text form.
    pub fn canonical(&self) -> String {
        match self {
            Structure::Tree(t) => t.canonical(),
            Structure::Partition(p) => p.to_string(),
        }
    }

    /// Parses the canonical form of the structure used by `kind`.
    pub fn parse(kind: ModelKind, s: &str) -> Result<Self> {
        if kind.uses_tree() {
            Ok(Structure::Tree(s.parse()?))
        } else {
            Ok(Structure::Partition(s.parse()?))
        }
    }

    fn check(&self, kind: ModelKind, graph: &Graph) -> Result<()> {
        match (self, kind.uses_tree()) {
            (Structure::Tree(_), true) | (Structure::Partition(_), false) => {}
            _ => return Err(invalid(format!("structure type does not fit the {kind} model"))),
        }
        if self.n_vertices() != graph.n() {
            return Err(invalid(format!(
                "structure covers {} vertices but the graph has {}",
                self.n_vertices(),
                graph.n()
            )));
        }
        if let Structure::Tree(t) = self {
            if !t.covers_vertices(graph.n()) {
                return Err(invalid("tree leaves are not the vertices 0..n"));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

/// `log B(ρ⁺ + L, ρ⁻ + N − L) − log B(ρ⁺, ρ⁻)` for `L` links out of `N` pairs.
pub fn beta_bernoulli_logml<T: Real>(links: u64, pairs: u64, rho: &BetaParams<T>) -> Result<T> {
    if links > pairs {
        return Err(invalid(format!("{links} links out of {pairs} pairs")));
    }
    Ok(logml(Counts::new(links, pairs), rho))
}

#[inline]
pub(crate) fn logml<T: Real>(c: Counts, rho: &BetaParams<T>) -> T {
    if c.pairs == 0 {
        return T::zero();
    }
    let l = T::of(c.links as f64);
    let m = T::of(c.non_links() as f64);
    BetaParams::log_beta(rho.rho_plus + l, rho.rho_minus + m) - BetaParams::log_beta(rho.rho_plus, rho.rho_minus)
}

/// Likelihood contribution of one internal node.
pub(crate) fn node_log_ml<T: Real>(kind: ModelKind, st: &NodeStats, rho: &BetaParams<T>) -> T {
    match kind {
        ModelKind::Pooled => logml(st.pooled, rho),
        _ => {
            let mut total = st.child_pair_counts().map(|c| logml(c, rho)).fold(T::zero(), |a, b| a + b);
            // each leaf-leaf pair has its own parameter: one Bernoulli draw at the prior mean
            if st.leaf_pairs.pairs > 0 {
                let sum = rho.rho_plus + rho.rho_minus;
                let ll = T::of(st.leaf_pairs.links as f64);
                let nl = T::of(st.leaf_pairs.non_links() as f64);
                total = total + ll * (rho.rho_plus / sum).ln() + nl * (rho.rho_minus / sum).ln();
            }
            total
        }
    }
}

pub(crate) fn tree_log_ml<T: Real>(kind: ModelKind, stats: &BlockStats, rho: &BetaParams<T>) -> T {
    stats
        .live_slots()
        .map(|(_, st)| node_log_ml(kind, st, rho))
        .fold(T::zero(), |a, b| a + b)
}

pub(crate) fn partition_log_ml<T: Real>(stats: &PartitionStats, rho: &BetaParams<T>) -> T {
    stats
        .block_pairs()
        .map(|(_, _, c)| logml(c, rho))
        .fold(T::zero(), |a, b| a + b)
}

/// Log probability of the observed pairs of `graph` given the structure,
/// with link probabilities integrated out.
pub fn log_marginal_likelihood<T: Real>(
    graph: &Graph,
    structure: &Structure,
    kind: ModelKind,
    rho: &BetaParams<T>,
) -> Result<T> {
    structure.check(kind, graph)?;
    match structure {
        Structure::Tree(t) => Ok(tree_log_ml(kind, &BlockStats::full_stats(graph, t)?, rho)),
        Structure::Partition(p) => Ok(partition_log_ml(&PartitionStats::full_stats(graph, p)?, rho)),
    }
}

/// Log prior of the structure under its model.
pub fn structure_log_prior<T: Real>(structure: &Structure, tau: &GibbsParams<T>) -> T {
    match structure {
        Structure::Tree(t) => tree_log_prior(t, tau),
        Structure::Partition(p) => crp_log_prob(p, tau),
    }
}

/// Unnormalized log posterior of the structure.
pub fn log_joint<T: Real>(
    graph: &Graph,
    structure: &Structure,
    kind: ModelKind,
    rho: &BetaParams<T>,
    tau: &GibbsParams<T>,
) -> Result<T> {
    let ll = log_marginal_likelihood(graph, structure, kind, rho)?;
    Ok(ll + structure_log_prior(structure, tau))
}

enum PredictorStats {
    Tree(FragTree, BlockStats),
    Partition(FlatPartition, PartitionStats),
}

/// Posterior-predictive link rates for one structure, with counts taken from
/// the observed pairs of a training graph.
pub struct Predictor<'g, T = f64> {
    graph: &'g Graph,
    kind: ModelKind,
    rho: BetaParams<T>,
    stats: PredictorStats,
}

impl<'g, T: Real> Predictor<'g, T> {
    pub fn new(graph: &'g Graph, structure: &Structure, kind: ModelKind, rho: BetaParams<T>) -> Result<Self> {
        structure.check(kind, graph)?;
        let stats = match structure {
            Structure::Tree(t) => PredictorStats::Tree(t.clone(), BlockStats::full_stats(graph, t)?),
            Structure::Partition(p) => PredictorStats::Partition(p.clone(), PartitionStats::full_stats(graph, p)?),
        };
        Ok(Predictor { graph, kind, rho, stats })
    }

    /// Training counts of the unit that governs pair `(i, j)`.
    pub fn governing_counts(&self, i: usize, j: usize) -> Result<Counts> {
        let n = self.graph.n();
        if i == j || i >= n || j >= n {
            return Err(invalid(format!("invalid vertex pair ({i}, {j})")));
        }
        match &self.stats {
            PredictorStats::Partition(p, st) => Ok(st.get(p.block_of(i), p.block_of(j))),
            PredictorStats::Tree(t, st) => {
                let (li, lj) = (t.leaf_slot(i).expect("leaf"), t.leaf_slot(j).expect("leaf"));
                let b = t.lca_slot(li, lj);
                let node = st.slot(b).ok_or_else(|| Error::Invariant("missing node counts".into()))?;
                match self.kind {
                    ModelKind::Pooled => Ok(node.pooled),
                    _ => {
                        let (ci, cj) = (t.child_toward(b, li), t.child_toward(b, lj));
                        st.child_pair(self.graph, t, t.handle(ci), t.handle(cj))
                    }
                }
            }
        }
    }

    /// `(ρ⁺ + L) / (ρ⁺ + ρ⁻ + N)` for the unit governing `(i, j)`.
    pub fn prob(&self, i: usize, j: usize) -> Result<T> {
        let c = self.governing_counts(i, j)?;
        let l = T::of(c.links as f64);
        let nn = T::of(c.pairs as f64);
        Ok((self.rho.rho_plus + l) / (self.rho.rho_plus + self.rho.rho_minus + nn))
    }
}

/// Predictive link probability of pair `(i, j)`.
pub fn predictive_link_prob<T: Real>(
    graph: &Graph,
    structure: &Structure,
    kind: ModelKind,
    rho: &BetaParams<T>,
    i: usize,
    j: usize,
) -> Result<T> {
    Predictor::new(graph, structure, kind, *rho)?.prob(i, j)
}
