//! Link-prediction scores, posterior summaries and the simulation grid.

mod grid;

use crate::error::{invalid, Error, Result};
use crate::graphstats::Graph;
use crate::models::{BetaParams, ModelKind, Predictor, Structure};
use crate::sampler::PosteriorSample;

pub use grid::{experiment_grid, GridCell, GridGenerator, GridTable};

/// Area under the ROC curve: the probability that a random positive scores
/// above a random negative, ties counting one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(invalid("scores and labels differ in length"));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric("AUC needs at least one positive and one negative".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(invalid("NaN score"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // sum of midranks of the positives
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Bernoulli log-likelihood of `labels` under `probs`.
pub fn bernoulli_loglik(probs: &[f64], labels: &[bool]) -> f64 {
    probs
        .iter()
        .zip(labels)
        .map(|(&p, &l)| if l { p.ln() } else { (1.0 - p).ln() })
        .sum()
}

/// How scores from several posterior samples are combined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Averaging {
    /// Score each sample, then average the scores.
    #[default]
    PerSample,
    /// Average the link probabilities, then score once.
    PooledProbability,
}

/// Predictions of a target network from a set of posterior samples.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionReport {
    pub pairs: Vec<(usize, usize)>,
    pub labels: Vec<bool>,
    /// Link probability per pair, averaged over samples.
    pub probs: Vec<f64>,
    /// Log-likelihood of the target per sample (one entry when pooled).
    pub loglik: Vec<f64>,
    /// AUC per sample (one entry when pooled).
    pub auc: Vec<f64>,
    pub loglik_mean: f64,
    pub loglik_sd: f64,
    pub auc_mean: f64,
    pub auc_sd: f64,
}

/// Scores `target` with predictive link probabilities built from the
/// training counts of each sample. Scored pairs are `pairs` if given, else
/// every pair observed in `target`.
pub fn predict_network(
    samples: &[PosteriorSample],
    train: &Graph,
    target: &Graph,
    kind: ModelKind,
    rho: &BetaParams<f64>,
    pairs: Option<&[(usize, usize)]>,
    averaging: Averaging,
) -> Result<PredictionReport> {
    if samples.is_empty() {
        return Err(invalid("no posterior samples"));
    }
    if train.n() != target.n() {
        return Err(invalid(format!(
            "training graph has {} vertices, target has {}",
            train.n(),
            target.n()
        )));
    }
    let pairs: Vec<(usize, usize)> = match pairs {
        Some(p) => {
            for &(i, j) in p {
                if i == j || i >= target.n() || j >= target.n() {
                    return Err(invalid(format!("invalid pair ({i}, {j})")));
                }
            }
            p.to_vec()
        }
        None => (0..target.n())
            .flat_map(|i| (i + 1..target.n()).map(move |j| (i, j)))
            .filter(|&(i, j)| target.is_observed(i, j))
            .collect(),
    };
    let labels: Vec<bool> = pairs.iter().map(|&(i, j)| target.has_edge(i, j)).collect();
    let mut sum_probs = vec![0.0; pairs.len()];
    let mut loglik = Vec::new();
    let mut aucs = Vec::new();
    for s in samples {
        let pred = Predictor::new(train, &s.structure, kind, *rho)?;
        let probs = pairs.iter().map(|&(i, j)| pred.prob(i, j)).collect::<Result<Vec<f64>>>()?;
        for (acc, p) in sum_probs.iter_mut().zip(&probs) {
            *acc += p;
        }
        if averaging == Averaging::PerSample {
            loglik.push(bernoulli_loglik(&probs, &labels));
            aucs.push(auc(&probs, &labels)?);
        }
    }
    let probs: Vec<f64> = sum_probs.iter().map(|p| p / samples.len() as f64).collect();
    if averaging == Averaging::PooledProbability {
        loglik.push(bernoulli_loglik(&probs, &labels));
        aucs.push(auc(&probs, &labels)?);
    }
    let (loglik_mean, loglik_sd) = mean_sd(&loglik);
    let (auc_mean, auc_sd) = mean_sd(&aucs);
    Ok(PredictionReport {
        pairs,
        labels,
        probs,
        loglik,
        auc: aucs,
        loglik_mean,
        loglik_sd,
        auc_mean,
        auc_sd,
    })
}

impl PredictionReport {
    /// Summary as columnar text.
    pub fn summary_text(&self) -> String {
        let mut out = String::from("# fragnet prediction v1\n");
        out.push_str("statistic\tmean\tsd\tcount\n");
        out.push_str(&format!("loglik\t{}\t{}\t{}\n", self.loglik_mean, self.loglik_sd, self.loglik.len()));
        out.push_str(&format!("auc\t{}\t{}\t{}\n", self.auc_mean, self.auc_sd, self.auc.len()));
        out.push_str(&format!("pairs\t{}\t0\t1\n", self.pairs.len()));
        out
    }

    /// Per-pair probabilities and labels.
    pub fn pairs_text(&self) -> String {
        let mut out = String::from("# fragnet pairs v1\ni\tj\tlink\tprob\n");
        for ((&(i, j), &l), &p) in self.pairs.iter().zip(&self.labels).zip(&self.probs) {
            out.push_str(&format!("{i}\t{j}\t{}\t{p}\n", u8::from(l)));
        }
        out
    }
}

/// Posterior co-ancestry of vertex pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct CoancestrySummary {
    n: usize,
    mean_depth: Vec<f64>,
    below_root: Vec<f64>,
}

impl CoancestrySummary {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Posterior mean depth of the lowest common ancestor (root at depth 0).
    /// NaN on the diagonal.
    pub fn mean_depth(&self, i: usize, j: usize) -> f64 {
        self.mean_depth[i * self.n + j]
    }

    /// Posterior probability that the pair meets below the root.
    pub fn prob_below_root(&self, i: usize, j: usize) -> f64 {
        self.below_root[i * self.n + j]
    }

    /// Dense matrix dump; `labels` names the rows and columns.
    pub fn matrix_text(&self, which: CoancestryField, labels: &dyn Fn(usize) -> String) -> String {
        let data = match which {
            CoancestryField::MeanDepth => &self.mean_depth,
            CoancestryField::BelowRoot => &self.below_root,
        };
        let mut out = format!("# fragnet coancestry v1 field={}\n", which.name());
        out.push_str("vertex");
        for j in 0..self.n {
            out.push('\t');
            out.push_str(&labels(j));
        }
        out.push('\n');
        for i in 0..self.n {
            out.push_str(&labels(i));
            for j in 0..self.n {
                let v = data[i * self.n + j];
                if v.is_nan() {
                    out.push_str("\tNA");
                } else {
                    out.push_str(&format!("\t{v}"));
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoancestryField {
    MeanDepth,
    BelowRoot,
}

impl CoancestryField {
    pub fn name(self) -> &'static str {
        match self {
            CoancestryField::MeanDepth => "mean_depth",
            CoancestryField::BelowRoot => "below_root",
        }
    }
}

/// Averages lowest-common-ancestor depths over samples. For partitions a
/// pair in one block counts as depth 1.
pub fn coancestry(samples: &[PosteriorSample], n: usize) -> Result<CoancestrySummary> {
    if samples.is_empty() {
        return Err(invalid("no posterior samples"));
    }
    let mut depth = vec![0.0; n * n];
    let mut below = vec![0.0; n * n];
    let mut per = vec![0usize; n * n];
    for s in samples {
        if s.structure.n_vertices() != n {
            return Err(invalid("sample size differs from vertex count"));
        }
        per.iter_mut().for_each(|x| *x = 0);
        match &s.structure {
            Structure::Partition(p) => {
                for i in 0..n {
                    for j in 0..n {
                        if i != j && p.block_of(i) == p.block_of(j) {
                            per[i * n + j] = 1;
                        }
                    }
                }
            }
            Structure::Tree(t) => {
                let mut stack = vec![(t.root(), 0usize)];
                while let Some((node, d)) = stack.pop() {
                    let kids = t.children(node)?;
                    let leaves: Vec<Vec<usize>> = kids.iter().map(|&c| t.leaves_under(c)).collect::<Result<_>>()?;
                    for a in 0..kids.len() {
                        for b in a + 1..kids.len() {
                            for &i in &leaves[a] {
                                for &j in &leaves[b] {
                                    per[i * n + j] = d;
                                    per[j * n + i] = d;
                                }
                            }
                        }
                    }
                    stack.extend(kids.into_iter().map(|c| (c, d + 1)));
                }
            }
        }
        for (k, &d) in per.iter().enumerate() {
            depth[k] += d as f64;
            below[k] += f64::from(u8::from(d > 0));
        }
    }
    let m = samples.len() as f64;
    for k in 0..n * n {
        if k / n == k % n {
            depth[k] = f64::NAN;
            below[k] = f64::NAN;
        } else {
            depth[k] /= m;
            below[k] /= m;
        }
    }
    Ok(CoancestrySummary {
        n,
        mean_depth: depth,
        below_root: below,
    })
}
