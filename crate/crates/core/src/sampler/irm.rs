use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::graphstats::{Counts, Graph, PartitionStats};
use crate::models::{logml, partition_log_ml, BetaParams};
use crate::partition::FlatPartition;
use crate::prior::{crp_log_prob, GibbsParams};
use crate::scalar::Real;

/// Block assignment of a blockmodel chain with its block-pair counts.
#[derive(Clone, Debug)]
pub struct IrmState<'g, T: Real = f64> {
    graph: &'g Graph,
    rho: BetaParams<T>,
    tau: GibbsParams<T>,
    labels: Vec<usize>,
    sizes: Vec<usize>,
    /// `cap x cap`, symmetric
    counts: Vec<Counts>,
    cap: usize,
    cross: Vec<Counts>,
    weights: Vec<f64>,
}

impl<'g, T: Real> IrmState<'g, T> {
    pub fn new(graph: &'g Graph, rho: BetaParams<T>, tau: GibbsParams<T>, partition: &FlatPartition) -> Result<Self> {
        if partition.len() != graph.n() {
            return Err(invalid("partition size differs from vertex count"));
        }
        let k = partition.n_blocks();
        let cap = (k + 1).max(4);
        let mut s = IrmState {
            graph,
            rho,
            tau,
            labels: partition.labels().to_vec(),
            sizes: partition.sizes(),
            counts: vec![Counts::default(); cap * cap],
            cap,
            cross: Vec::new(),
            weights: Vec::new(),
        };
        let full = PartitionStats::full_stats(graph, partition)?;
        for a in 0..k {
            for b in 0..k {
                s.counts[a * cap + b] = full.get(a, b);
            }
        }
        Ok(s)
    }

    pub fn n_blocks(&self) -> usize {
        self.sizes.len()
    }

    pub fn partition(&self) -> FlatPartition {
        FlatPartition::from_labels(&self.labels)
    }

    fn get(&self, a: usize, b: usize) -> Counts {
        self.counts[a * self.cap + b]
    }

    fn add(&mut self, a: usize, b: usize, c: Counts, sign: bool) {
        let cap = self.cap;
        let apply = |x: &mut Counts| if sign { *x += c } else { *x -= c };
        apply(&mut self.counts[a * cap + b]);
        if a != b {
            apply(&mut self.counts[b * cap + a]);
        }
    }

    fn grow(&mut self) {
        let old = self.cap;
        let cap = old * 2;
        let mut counts = vec![Counts::default(); cap * cap];
        for a in 0..old {
            counts[a * cap..a * cap + old].copy_from_slice(&self.counts[a * old..(a + 1) * old]);
        }
        self.counts = counts;
        self.cap = cap;
    }

    pub fn log_ml(&self) -> T {
        let k = self.n_blocks();
        let mut total = T::zero();
        for a in 0..k {
            for b in a..k {
                total = total + logml(self.get(a, b), &self.rho);
            }
        }
        total
    }

    pub fn log_prior(&self) -> T {
        crp_log_prob(&self.partition(), &self.tau)
    }

    pub fn log_joint(&self) -> T {
        self.log_ml() + self.log_prior()
    }

    /// Counts between vertex `v` and each block.
    fn fill_cross(&mut self, v: usize) {
        let k = self.n_blocks();
        self.cross.clear();
        self.cross.resize(k, Counts::default());
        for (b, &size) in self.sizes.iter().enumerate() {
            self.cross[b].pairs = size as u64;
        }
        self.cross[self.labels[v]].pairs -= 1;
        for &u in self.graph.masked_neighbors(v) {
            self.cross[self.labels[u]].pairs -= 1;
        }
        for &u in self.graph.neighbors(v) {
            if !self.graph.is_masked(u, v) {
                self.cross[self.labels[u]].links += 1;
            }
        }
    }

    /// Resamples the block of vertex `v` from its exact conditional. Returns
    /// whether the block changed.
    pub fn gibbs_update<R: Rng + ?Sized>(&mut self, v: usize, rng: &mut R) -> bool {
        self.fill_cross(v);
        let old = self.labels[v];
        for c in 0..self.n_blocks() {
            let x = self.cross[c];
            self.add(old, c, x, false);
        }
        self.sizes[old] -= 1;
        let mut home = Some(old);
        if self.sizes[old] == 0 {
            // move the last block into the hole
            let last = self.n_blocks() - 1;
            if old != last {
                for c in 0..=last {
                    let moved = self.get(last, c);
                    self.counts[old * self.cap + c] = moved;
                    self.counts[c * self.cap + old] = moved;
                }
                let diag = self.get(last, last);
                self.counts[old * self.cap + old] = diag;
                for l in self.labels.iter_mut() {
                    if *l == last {
                        *l = old;
                    }
                }
                self.sizes[old] = self.sizes[last];
                self.cross.swap(old, last);
            }
            for c in 0..=last {
                self.counts[last * self.cap + c] = Counts::default();
                self.counts[c * self.cap + last] = Counts::default();
            }
            self.sizes.pop();
            self.cross.pop();
            home = None;
        }

        let k = self.n_blocks();
        let (a, b) = (self.tau.alpha().as_f64(), self.tau.beta().as_f64());
        self.weights.clear();
        for blk in 0..k {
            let mut w = (self.sizes[blk] as f64 - a).ln();
            for c in 0..k {
                let cur = self.get(blk, c);
                w += (logml(cur + self.cross[c], &self.rho) - logml(cur, &self.rho)).as_f64();
            }
            self.weights.push(w);
        }
        let mut w_new = (b + k as f64 * a).ln();
        for c in 0..k {
            w_new += logml(self.cross[c], &self.rho).as_f64();
        }
        self.weights.push(w_new);

        let max = self.weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = self.weights.iter().map(|w| (w - max).exp()).sum();
        let mut u = rng.random::<f64>() * total;
        let mut choice = k;
        for (i, w) in self.weights.iter().enumerate() {
            let p = (w - max).exp();
            if u < p {
                choice = i;
                break;
            }
            u -= p;
        }

        if choice == k {
            if k + 1 > self.cap {
                self.grow();
            }
            self.sizes.push(0);
            self.cross.push(Counts::default());
        }
        self.labels[v] = choice;
        self.sizes[choice] += 1;
        for c in 0..self.n_blocks() {
            let x = self.cross[c];
            self.add(choice, c, x, true);
        }
        home != Some(choice)
    }

    pub fn check_integrity(&self) -> Result<()> {
        let p = self.partition();
        let full = PartitionStats::full_stats(self.graph, &p)?;
        // map canonical block ids back to ours
        let mut ours = vec![0usize; p.n_blocks()];
        for (v, &canon) in p.labels().iter().enumerate() {
            ours[canon] = self.labels[v];
        }
        for a in 0..p.n_blocks() {
            for b in 0..p.n_blocks() {
                if full.get(a, b) != self.get(ours[a], ours[b]) {
                    return Err(Error::Invariant(format!("block counts ({a}, {b}) differ from a full recount")));
                }
            }
        }
        let fresh: T = partition_log_ml(&full, &self.rho);
        if !((fresh - self.log_ml()).abs().as_f64() <= 1e-9) {
            return Err(Error::Invariant("cached blockmodel likelihood differs from recomputation".into()));
        }
        Ok(())
    }
}
