use rand::Rng;

use super::spr::{propose_spr, ProposalConfig, SprProposal, SprScratch};
use crate::error::{invalid, Error, Result};
use crate::graphstats::{BlockStats, EditEffect, Graph};
use crate::models::{node_log_ml, BetaParams, ModelKind};
use crate::prior::{split_log_prob, GibbsParams};
use crate::scalar::Real;
use crate::tree::{FragTree, SprEdit};

/// Current tree of a chain together with its cached counts and scores.
#[derive(Clone, Debug)]
pub struct TreeState<'g, T: Real = f64> {
    graph: &'g Graph,
    kind: ModelKind,
    rho: BetaParams<T>,
    tau: GibbsParams<T>,
    tree: FragTree,
    stats: BlockStats,
    node_ml: Vec<T>,
    node_prior: Vec<T>,
    log_ml: T,
    log_prior: T,
}

/// What one Metropolis-Hastings step did.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepResult {
    pub local: bool,
    pub type1: bool,
    pub identity: bool,
    pub accepted: bool,
}

impl<'g, T: Real> TreeState<'g, T> {
    pub fn new(graph: &'g Graph, kind: ModelKind, rho: BetaParams<T>, tau: GibbsParams<T>, tree: FragTree) -> Result<Self> {
        if !kind.uses_tree() {
            return Err(invalid("the irm model has no tree state"));
        }
        let stats = BlockStats::full_stats(graph, &tree)?;
        let mut s = TreeState {
            graph,
            kind,
            rho,
            tau,
            tree,
            stats,
            node_ml: Vec::new(),
            node_prior: Vec::new(),
            log_ml: T::zero(),
            log_prior: T::zero(),
        };
        let internal: Vec<usize> = s.stats.live_slots().map(|(i, _)| i).collect();
        for i in internal {
            s.refresh_node(i)?;
        }
        s.resum();
        Ok(s)
    }

    pub fn tree(&self) -> &FragTree {
        &self.tree
    }

    pub fn stats(&self) -> &BlockStats {
        &self.stats
    }

    pub fn log_ml(&self) -> T {
        self.log_ml
    }

    pub fn log_prior(&self) -> T {
        self.log_prior
    }

    pub fn log_joint(&self) -> T {
        self.log_ml + self.log_prior
    }

    fn refresh_node(&mut self, idx: usize) -> Result<()> {
        if self.node_ml.len() < self.tree.slot_capacity() {
            self.node_ml.resize(self.tree.slot_capacity(), T::zero());
            self.node_prior.resize(self.tree.slot_capacity(), T::zero());
        }
        let st = self.stats.slot(idx).ok_or_else(|| Error::Invariant("missing node counts".into()))?;
        self.node_ml[idx] = node_log_ml(self.kind, st, &self.rho);
        let sizes: Vec<usize> = self.tree.node(idx).children.iter().map(|&c| self.tree.node(c).leaf_count).collect();
        self.node_prior[idx] = split_log_prob(&sizes, &self.tau)?;
        Ok(())
    }

    fn resum(&mut self) {
        let (mut ml, mut pr) = (T::zero(), T::zero());
        for (i, _) in self.stats.live_slots() {
            ml = ml + self.node_ml[i];
            pr = pr + self.node_prior[i];
        }
        self.log_ml = ml;
        self.log_prior = pr;
    }

    /// Applies an edit to the tree and every cache.
    pub fn apply(&mut self, edit: &SprEdit) -> Result<EditEffect> {
        let effect = self.stats.apply_edit(self.graph, &mut self.tree, edit)?;
        if let Some(r) = effect.released {
            self.node_ml[r] = T::zero();
            self.node_prior[r] = T::zero();
        }
        for &i in &effect.touched {
            self.refresh_node(i)?;
        }
        self.resum();
        Ok(effect)
    }

    /// Compares every cache against a recomputation from scratch.
    pub fn check_integrity(&self) -> Result<()> {
        self.tree.validate()?;
        self.stats.verify(self.graph, &self.tree)?;
        let fresh = TreeState::new(self.graph, self.kind, self.rho, self.tau, self.tree.clone())?;
        let diff = (fresh.log_joint() - self.log_joint()).abs().as_f64();
        if !(diff <= 1e-9) {
            return Err(Error::Invariant(format!(
                "cached log joint {} differs from recomputed {}",
                self.log_joint(),
                fresh.log_joint()
            )));
        }
        Ok(())
    }

    /// Draws a proposal from the current tree.
    pub fn propose<R: Rng + ?Sized>(&self, cfg: &ProposalConfig, rng: &mut R, scratch: &mut SprScratch) -> Result<Option<SprProposal>> {
        propose_spr(&self.tree, cfg, rng, scratch)
    }

    /// One Metropolis-Hastings step. Returns `None` when the tree has a
    /// single node and nothing can move.
    pub fn mh_step<R: Rng + ?Sized>(&mut self, cfg: &ProposalConfig, rng: &mut R, scratch: &mut SprScratch) -> Result<Option<StepResult>> {
        let Some(prop) = self.propose(cfg, rng, scratch)? else { return Ok(None) };
        let mut result = StepResult {
            local: prop.local,
            type1: prop.kind == crate::tree::MoveType::AddChild,
            identity: prop.identity,
            accepted: false,
        };
        if prop.identity {
            result.accepted = true;
            return Ok(Some(result));
        }
        let before = self.log_joint();
        let effect = self.apply(&prop.edit)?;
        let delta = (self.log_joint() - before).as_f64();
        let log_ratio = delta + prop.log_backward - prop.log_forward;
        let u: f64 = rng.random();
        if log_ratio >= 0.0 || u.ln() < log_ratio {
            result.accepted = true;
        } else {
            let inverse = effect.outcome.inverse;
            self.apply(&inverse)?;
        }
        Ok(Some(result))
    }
}
