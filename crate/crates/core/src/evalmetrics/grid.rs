use super::{mean_sd, predict_network, Averaging};
use crate::error::{invalid, Result};
use crate::graphstats::Graph;
use crate::models::{ModelKind, NetworkGenerator};
use crate::sampler::{chain_rng, run_chain_on_stream, ChainConfig};

/// A named source of synthetic networks.
#[derive(Clone, Debug)]
pub struct GridGenerator {
    pub name: String,
    pub generator: NetworkGenerator,
}

/// One (network source, fitted model) cell; statistics are across
/// replicate target networks.
#[derive(Clone, Debug, PartialEq)]
pub struct GridCell {
    pub network: String,
    pub model: ModelKind,
    pub loglik_mean: f64,
    pub loglik_sd: f64,
    pub auc_mean: f64,
    pub auc_sd: f64,
    /// Sample-averaged AUC for each replicate.
    pub auc: Vec<f64>,
    /// Sample-averaged log-likelihood for each replicate.
    pub loglik: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridTable {
    pub cells: Vec<GridCell>,
}

impl GridTable {
    pub fn cell(&self, network: &str, model: ModelKind) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.network == network && c.model == model)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# fragnet grid v1\nnetwork\tmodel\tloglik_mean\tloglik_sd\tauc_mean\tauc_sd\treplicates\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                c.network,
                c.model,
                c.loglik_mean,
                c.loglik_sd,
                c.auc_mean,
                c.auc_sd,
                c.auc.len()
            ));
        }
        out
    }
}

/// Trains every model on one network from each generator and scores it on
/// `replicates` further networks from the same generator.
///
/// Networks for generator `g` come from stream `2^32 + g` of `seed`; the
/// chain of cell `(g, f)` runs on stream `g * fits.len() + f` with
/// `config.seed`. Cells run concurrently.
pub fn experiment_grid(
    generators: &[GridGenerator],
    fits: &[ModelKind],
    config: &ChainConfig<f64>,
    replicates: usize,
    seed: u64,
) -> Result<GridTable> {
    config.validate()?;
    if replicates == 0 {
        return Err(invalid("need at least one replicate network"));
    }
    let networks: Vec<(Graph, Vec<Graph>)> = generators
        .iter()
        .enumerate()
        .map(|(g, gen)| {
            let mut rng = chain_rng(seed, (1u64 << 32) + g as u64);
            let train = gen.generator.replicate(&mut rng);
            let targets = (0..replicates).map(|_| gen.generator.replicate(&mut rng)).collect();
            (train, targets)
        })
        .collect();

    let jobs: Vec<(usize, usize)> = (0..generators.len()).flat_map(|g| (0..fits.len()).map(move |f| (g, f))).collect();
    let results: Vec<Result<GridCell>> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(g, f)| {
                let (train, targets) = &networks[g];
                let name = generators[g].name.clone();
                let kind = fits[f];
                s.spawn(move || -> Result<GridCell> {
                    let cfg = ChainConfig { kind, ..config.clone() };
                    let out = run_chain_on_stream(train, &cfg, (g * fits.len() + f) as u64)?;
                    let mut aucs = Vec::with_capacity(targets.len());
                    let mut logliks = Vec::with_capacity(targets.len());
                    for target in targets {
                        let r = predict_network(&out.samples, train, target, kind, &cfg.rho, None, Averaging::PerSample)?;
                        aucs.push(r.auc_mean);
                        logliks.push(r.loglik_mean);
                    }
                    let (loglik_mean, loglik_sd) = mean_sd(&logliks);
                    let (auc_mean, auc_sd) = mean_sd(&aucs);
                    Ok(GridCell {
                        network: name,
                        model: kind,
                        loglik_mean,
                        loglik_sd,
                        auc_mean,
                        auc_sd,
                        auc: aucs,
                        loglik: logliks,
                    })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("grid worker panicked")).collect()
    });
    Ok(GridTable {
        cells: results.into_iter().collect::<Result<_>>()?,
    })
}
