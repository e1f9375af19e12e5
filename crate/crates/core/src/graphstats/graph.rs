use crate::error::{invalid, Result};

/// Dense symmetric bit matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
struct BitMatrix {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    fn new(n: usize) -> Self {
        let words = n.div_ceil(64);
        BitMatrix {
            n,
            words,
            bits: vec![0; n * words],
        }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
    }
}

/// Undirected simple graph over vertices `0..n` with an optional set of
/// unobserved (masked) vertex pairs.
#[derive(Clone, Debug)]
pub struct Graph {
    adjacency: BitMatrix,
    neighbors: Vec<Vec<usize>>,
    mask: BitMatrix,
    masked_neighbors: Vec<Vec<usize>>,
    n_edges: usize,
    n_masked: usize,
    n_masked_edges: usize,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.adjacency == other.adjacency && self.mask == other.mask
    }
}

impl Eq for Graph {}

fn check_pair(n: usize, i: usize, j: usize) -> Result<()> {
    if i == j {
        return Err(invalid(format!("self-loop at vertex {i}")));
    }
    if i >= n || j >= n {
        return Err(invalid(format!("pair ({i}, {j}) out of range for {n} vertices")));
    }
    Ok(())
}

impl Graph {
    /// Graph without edges.
    pub fn empty(n: usize) -> Self {
        Graph {
            adjacency: BitMatrix::new(n),
            neighbors: vec![Vec::new(); n],
            mask: BitMatrix::new(n),
            masked_neighbors: vec![Vec::new(); n],
            n_edges: 0,
            n_masked: 0,
            n_masked_edges: 0,
        }
    }

    /// Builds a graph from an edge list; duplicate edges are collapsed.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::empty(n);
        for &(i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        check_pair(self.n(), i, j)?;
        if !self.adjacency.get(i, j) {
            self.adjacency.set(i, j);
            self.adjacency.set(j, i);
            self.neighbors[i].push(j);
            self.neighbors[j].push(i);
            self.n_edges += 1;
            if self.mask.get(i, j) {
                self.n_masked_edges += 1;
            }
        }
        Ok(())
    }

    /// Marks a pair as unobserved.
    pub fn mask_pair(&mut self, i: usize, j: usize) -> Result<()> {
        check_pair(self.n(), i, j)?;
        if !self.mask.get(i, j) {
            self.mask.set(i, j);
            self.mask.set(j, i);
            self.masked_neighbors[i].push(j);
            self.masked_neighbors[j].push(i);
            self.n_masked += 1;
            if self.adjacency.get(i, j) {
                self.n_masked_edges += 1;
            }
        }
        Ok(())
    }

    /// Copy of the graph with every pair in `pairs` masked.
    pub fn with_mask(&self, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut g = self.clone();
        for &(i, j) in pairs {
            g.mask_pair(i, j)?;
        }
        Ok(g)
    }

    /// Copy of the graph with every pair masked.
    pub fn fully_masked(&self) -> Self {
        let mut g = self.clone();
        let n = self.n();
        for i in 0..n {
            for j in i + 1..n {
                g.mask_pair(i, j).expect("valid pair");
            }
        }
        g
    }

    /// Same edges, no mask.
    pub fn without_mask(&self) -> Self {
        let mut g = self.clone();
        g.mask = BitMatrix::new(self.n());
        g.masked_neighbors = vec![Vec::new(); self.n()];
        g.n_masked = 0;
        g.n_masked_edges = 0;
        g
    }

    pub fn n(&self) -> usize {
        self.adjacency.n
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.adjacency.get(i, j)
    }

    #[inline]
    pub fn is_masked(&self, i: usize, j: usize) -> bool {
        self.mask.get(i, j)
    }

    /// Distinct pair whose entry counts towards the likelihood.
    #[inline]
    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        i != j && !self.mask.get(i, j)
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn masked_neighbors(&self, i: usize) -> &[usize] {
        &self.masked_neighbors[i]
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn n_masked(&self) -> usize {
        self.n_masked
    }

    /// Number of vertex pairs that are not masked.
    pub fn n_observed_pairs(&self) -> usize {
        let n = self.n();
        n * n.saturating_sub(1) / 2 - self.n_masked
    }

    /// Number of edges on observed pairs.
    pub fn n_observed_links(&self) -> usize {
        self.n_edges - self.n_masked_edges
    }

    /// Edges as `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = (0..self.n())
            .flat_map(|i| self.neighbors[i].iter().filter(move |&&j| i < j).map(move |&j| (i, j)))
            .collect();
        out.sort_unstable();
        out
    }

    /// Masked pairs as `(i, j)` with `i < j`, sorted.
    pub fn masked_pairs(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = (0..self.n())
            .flat_map(|i| self.masked_neighbors[i].iter().filter(move |&&j| i < j).map(move |&j| (i, j)))
            .collect();
        out.sort_unstable();
        out
    }

    /// Relabels vertices: vertex `v` becomes `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n() {
            return Err(invalid("permutation length differs from vertex count"));
        }
        let mut g = Graph::empty(self.n());
        for (i, j) in self.edges() {
            g.add_edge(perm[i], perm[j])?;
        }
        for (i, j) in self.masked_pairs() {
            g.mask_pair(perm[i], perm[j])?;
        }
        Ok(g)
    }
}
