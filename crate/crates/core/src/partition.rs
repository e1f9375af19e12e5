//! Flat partitions of `0..n` (the latent state of the IRM baseline).

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// Block assignment of vertices, with labels numbered by first appearance so
/// that equal partitions compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FlatPartition {
    labels: Vec<usize>,
    n_blocks: usize,
}

impl FlatPartition {
    /// Canonicalizes an arbitrary labelling.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let canon: Vec<usize> = labels
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        FlatPartition {
            labels: canon,
            n_blocks: map.len(),
        }
    }

    pub fn from_blocks(blocks: &[Vec<usize>]) -> Result<Self> {
        let n: usize = blocks.iter().map(Vec::len).sum();
        let mut labels = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(invalid("empty block"));
            }
            for &v in block {
                match labels.get_mut(v) {
                    Some(slot) if *slot == usize::MAX => *slot = b,
                    Some(_) => return Err(invalid(format!("vertex {v} appears twice"))),
                    None => return Err(invalid(format!("vertex {v} out of range 0..{n}"))),
                }
            }
        }
        Ok(FlatPartition::from_labels(&labels))
    }

    /// Everything in one block.
    pub fn single_block(n: usize) -> Self {
        FlatPartition {
            labels: vec![0; n],
            n_blocks: usize::from(n > 0),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn block_of(&self, v: usize) -> usize {
        self.labels[v]
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_blocks];
        for (v, &b) in self.labels.iter().enumerate() {
            out[b].push(v);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.n_blocks];
        for &b in &self.labels {
            out[b] += 1;
        }
        out
    }
}

/// Text form: blocks separated by `|`, vertices by `,`, e.g. `0,1|2`.
impl fmt::Display for FlatPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let blocks: Vec<String> = self
            .blocks()
            .iter()
            .map(|b| b.iter().map(usize::to_string).collect::<Vec<_>>().join(","))
            .collect();
        f.write_str(&blocks.join("|"))
    }
}

impl FromStr for FlatPartition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: String| Error::Parse { line: 1, msg: m };
        let mut blocks = Vec::new();
        for part in s.trim().split('|') {
            let block: Vec<usize> = part
                .split(',')
                .map(|t| t.trim().parse::<usize>().map_err(|_| bad(format!("bad vertex {t:?}"))))
                .collect::<Result<_>>()?;
            blocks.push(block);
        }
        FlatPartition::from_blocks(&blocks).map_err(|e| bad(e.to_string()))
    }
}
