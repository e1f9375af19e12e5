//! Between-chain summaries of log-joint traces.

use super::Diagnostics;
use crate::error::{invalid, Result};

/// Post-burn-in trace of one chain.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceSummary {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixingSummary {
    pub chains: Vec<TraceSummary>,
    pub grand_mean: f64,
    /// Sample sd of the chain means.
    pub sd_of_means: f64,
    /// Root mean within-chain variance.
    pub pooled_sd: f64,
    /// Largest distance of a chain mean from the grand mean, in pooled sds.
    pub max_deviation: f64,
    /// Times two chains swap order between consecutive common trace points.
    pub crossings: usize,
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

pub fn mixing_summary(diags: &[Diagnostics]) -> Result<MixingSummary> {
    if diags.is_empty() {
        return Err(invalid("no diagnostics given"));
    }
    let traces: Vec<Vec<f64>> = diags.iter().map(|d| d.post_burn_in().collect()).collect();
    if traces.iter().any(Vec::is_empty) {
        return Err(invalid("a chain has no trace points after burn-in"));
    }
    let chains: Vec<TraceSummary> = traces
        .iter()
        .map(|t| {
            let (mean, sd) = mean_sd(t);
            TraceSummary { mean, sd, n: t.len() }
        })
        .collect();
    let means: Vec<f64> = chains.iter().map(|c| c.mean).collect();
    let (grand_mean, sd_of_means) = mean_sd(&means);
    let pooled_sd = (chains.iter().map(|c| c.sd * c.sd).sum::<f64>() / chains.len() as f64).sqrt();
    let max_dev = means.iter().map(|m| (m - grand_mean).abs()).fold(0.0, f64::max);
    let max_deviation = if pooled_sd > 0.0 { max_dev / pooled_sd } else { 0.0 };
    let len = traces.iter().map(Vec::len).min().unwrap_or(0);
    let mut crossings = 0;
    for a in 0..traces.len() {
        for b in a + 1..traces.len() {
            for t in 1..len {
                let before = traces[a][t - 1] - traces[b][t - 1];
                let after = traces[a][t] - traces[b][t];
                if before * after < 0.0 {
                    crossings += 1;
                }
            }
        }
    }
    Ok(MixingSummary {
        chains,
        grand_mean,
        sd_of_means,
        pooled_sd,
        max_deviation,
        crossings,
    })
}

impl MixingSummary {
    pub fn to_text(&self) -> String {
        let mut out = String::from("# fragnet mixing v1\nchain\tmean\tsd\tn\n");
        for (c, s) in self.chains.iter().enumerate() {
            out.push_str(&format!("{c}\t{}\t{}\t{}\n", s.mean, s.sd, s.n));
        }
        out.push_str(&format!("grand_mean\t{}\n", self.grand_mean));
        out.push_str(&format!("sd_of_means\t{}\n", self.sd_of_means));
        out.push_str(&format!("pooled_sd\t{}\n", self.pooled_sd));
        out.push_str(&format!("max_deviation\t{}\n", self.max_deviation));
        out.push_str(&format!("crossings\t{}\n", self.crossings));
        out
    }
}
