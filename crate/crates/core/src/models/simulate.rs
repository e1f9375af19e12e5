//! Generative side of the models: link probabilities per pooling unit and
//! networks drawn from them.

use rand::Rng;
use rand_distr::{Beta, Distribution};

use super::{BetaParams, ModelKind, Structure};
use crate::error::{invalid, Error, Result};
use crate::graphstats::io::check_version;
use crate::graphstats::Graph;
use crate::scalar::Real;
use crate::tree::Nested;

/// One pooling unit and its link probability. `rep` is a vertex pair the
/// unit governs (smallest vertices of the two sides).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaUnit {
    pub rep: (usize, usize),
    pub theta: f64,
    pub n_pairs: usize,
}

/// Link probabilities for every pooling unit, plus the induced per-pair rate.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaDraw {
    n: usize,
    units: Vec<ThetaUnit>,
    /// index into `units` for each pair, row-major upper triangle
    unit_of_pair: Vec<u32>,
}

struct Builder<'a, F> {
    n: usize,
    units: Vec<ThetaUnit>,
    unit_of_pair: Vec<u32>,
    theta: &'a mut F,
}

impl<F: FnMut(usize, (usize, usize)) -> f64> Builder<'_, F> {
    fn unit(&mut self, rep: (usize, usize), pairs: impl Iterator<Item = (usize, usize)>) {
        let id = self.units.len();
        let theta = (self.theta)(id, rep);
        let mut count = 0;
        for (i, j) in pairs {
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            self.unit_of_pair[a * self.n + b] = id as u32;
            count += 1;
        }
        self.units.push(ThetaUnit { rep, theta, n_pairs: count });
    }

    fn tree(&mut self, node: &Nested, kind: ModelKind) {
        let Nested::Node(kids) = node else { return };
        let leaves: Vec<Vec<usize>> = kids.iter().map(leaves_of).collect();
        match kind {
            ModelKind::Pooled => {
                let rep = (leaves[0][0], leaves[1][0]);
                let mut pairs = Vec::new();
                for a in 0..kids.len() {
                    for b in a + 1..kids.len() {
                        for &i in &leaves[a] {
                            pairs.extend(leaves[b].iter().map(|&j| (i, j)));
                        }
                    }
                }
                self.unit(rep, pairs.into_iter());
            }
            _ => {
                for a in 0..kids.len() {
                    for b in a + 1..kids.len() {
                        let pairs = leaves[a].iter().flat_map(|&i| leaves[b].iter().map(move |&j| (i, j)));
                        let pairs: Vec<_> = pairs.collect();
                        self.unit((leaves[a][0], leaves[b][0]), pairs.into_iter());
                    }
                }
            }
        }
        for kid in kids {
            self.tree(kid, kind);
        }
    }
}

fn leaves_of(node: &Nested) -> Vec<usize> {
    let mut out = Vec::new();
    fn walk(n: &Nested, out: &mut Vec<usize>) {
        match n {
            Nested::Leaf(v) => out.push(*v),
            Nested::Node(k) => k.iter().for_each(|c| walk(c, out)),
        }
    }
    walk(node, &mut out);
    out.sort_unstable();
    out
}

impl ThetaDraw {
    /// Assigns `theta(unit_index, rep)` to every pooling unit of `structure`
    /// under `kind`. Units are visited in a fixed order: tree nodes in
    /// preorder with children sorted by smallest vertex, block pairs in
    /// row-major order.
    pub fn from_fn<F>(structure: &Structure, kind: ModelKind, mut theta: F) -> Result<Self>
    where
        F: FnMut(usize, (usize, usize)) -> f64,
    {
        let n = structure.n_vertices();
        let mut b = Builder {
            n,
            units: Vec::new(),
            unit_of_pair: vec![u32::MAX; n * n],
            theta: &mut theta,
        };
        match (structure, kind.uses_tree()) {
            (Structure::Tree(t), true) => {
                let mut nested = t.to_nested();
                nested.canonicalize();
                b.tree(&nested, kind);
            }
            (Structure::Partition(p), false) => {
                let blocks = p.blocks();
                for a in 0..blocks.len() {
                    for c in a..blocks.len() {
                        let pairs: Vec<(usize, usize)> = if a == c {
                            let blk = &blocks[a];
                            (0..blk.len()).flat_map(|x| (x + 1..blk.len()).map(move |y| (blk[x], blk[y]))).collect()
                        } else {
                            blocks[a].iter().flat_map(|&i| blocks[c].iter().map(move |&j| (i, j))).collect()
                        };
                        if pairs.is_empty() {
                            continue;
                        }
                        let rep = if a == c { (blocks[a][0], blocks[a][1]) } else { (blocks[a][0], blocks[c][0]) };
                        b.unit(rep, pairs.into_iter());
                    }
                }
            }
            _ => return Err(invalid(format!("structure type does not fit the {kind} model"))),
        }
        for u in &b.units {
            if !(0.0..=1.0).contains(&u.theta) {
                return Err(invalid(format!("link probability {} outside [0, 1]", u.theta)));
            }
        }
        Ok(ThetaDraw {
            n,
            units: b.units,
            unit_of_pair: b.unit_of_pair,
        })
    }

    pub fn units(&self) -> &[ThetaUnit] {
        &self.units
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Link probability of pair `(i, j)`.
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.units[self.unit_of_pair[a * self.n + b] as usize].theta
    }

    /// Draws a network: each pair linked independently at its rate, pairs
    /// visited in row-major order.
    pub fn sample_graph<R: Rng + ?Sized>(&self, rng: &mut R) -> Graph {
        let mut g = Graph::empty(self.n);
        for i in 0..self.n {
            for j in i + 1..self.n {
                let u: f64 = rng.random();
                if u < self.rate(i, j) {
                    g.add_edge(i, j).expect("valid pair");
                }
            }
        }
        g
    }
}

/// Draws a link probability per pooling unit from the Beta prior, then a
/// network from those probabilities.
pub fn simulate_network<T: Real, R: Rng + ?Sized>(
    structure: &Structure,
    kind: ModelKind,
    rho: &BetaParams<T>,
    rng: &mut R,
) -> Result<(Graph, ThetaDraw)> {
    let generator = NetworkGenerator::draw(structure.clone(), kind, rho, rng)?;
    let graph = generator.replicate(rng);
    Ok((graph, generator.theta))
}

/// A structure with fixed link probabilities, from which any number of
/// networks can be drawn.
#[derive(Clone, Debug)]
pub struct NetworkGenerator {
    pub structure: Structure,
    pub kind: ModelKind,
    pub theta: ThetaDraw,
}

impl NetworkGenerator {
    /// Link probabilities drawn from the Beta prior.
    pub fn draw<T: Real, R: Rng + ?Sized>(structure: Structure, kind: ModelKind, rho: &BetaParams<T>, rng: &mut R) -> Result<Self> {
        let beta = Beta::new(rho.rho_plus().as_f64(), rho.rho_minus().as_f64())
            .map_err(|e| invalid(format!("Beta distribution: {e}")))?;
        let theta = ThetaDraw::from_fn(&structure, kind, |_, _| beta.sample(rng))?;
        Ok(NetworkGenerator { structure, kind, theta })
    }

    /// Link probabilities chosen by the caller.
    pub fn with_theta<F>(structure: Structure, kind: ModelKind, theta: F) -> Result<Self>
    where
        F: FnMut(usize, (usize, usize)) -> f64,
    {
        let theta = ThetaDraw::from_fn(&structure, kind, theta)?;
        Ok(NetworkGenerator { structure, kind, theta })
    }

    pub fn replicate<R: Rng + ?Sized>(&self, rng: &mut R) -> Graph {
        self.theta.sample_graph(rng)
    }

    /// Text form: a `# fragnet generator v1 model=<kind>` line, the
    /// canonical structure, then one row per unit in visiting order.
    pub fn to_text(&self) -> String {
        let mut out = format!("# fragnet generator v1 model={}\n", self.kind);
        out.push_str(&format!("structure\t{}\n", self.structure.canonical()));
        out.push_str("# unit\trep_i\trep_j\tn_pairs\ttheta\n");
        for (k, u) in self.theta.units().iter().enumerate() {
            out.push_str(&format!("{k}\t{}\t{}\t{}\t{}\n", u.rep.0, u.rep.1, u.n_pairs, u.theta));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let perr = |line: usize, msg: String| Error::Parse { line, msg };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
        let (_, head) = lines.next().ok_or_else(|| perr(1, "empty generator file".into()))?;
        if !check_version(head, "generator", 1)? {
            return Err(Error::Format("missing `# fragnet generator v1` header".into()));
        }
        let kind: ModelKind = head
            .split_whitespace()
            .find_map(|t| t.strip_prefix("model="))
            .ok_or_else(|| perr(1, "header lacks model=".into()))?
            .parse()?;
        let mut structure = None;
        let mut rows = Vec::new();
        for (no, line) in lines {
            if line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f[0] == "structure" && f.len() == 2 {
                structure = Some(Structure::parse(kind, f[1]).map_err(|e| perr(no, e.to_string()))?);
                continue;
            }
            if f.len() != 5 {
                return Err(perr(no, format!("expected 5 fields, found {}", f.len())));
            }
            let num = |s: &str| s.parse::<usize>().map_err(|_| perr(no, format!("bad integer {s:?}")));
            let theta = f[4].parse::<f64>().map_err(|_| perr(no, format!("bad probability {:?}", f[4])))?;
            rows.push((no, num(f[0])?, (num(f[1])?, num(f[2])?), theta));
        }
        let structure = structure.ok_or_else(|| perr(1, "no structure line".into()))?;
        let mut bad = None;
        let theta = ThetaDraw::from_fn(&structure, kind, |k, rep| match rows.get(k) {
            Some(&(_, idx, r, t)) if idx == k && r == rep => t,
            other => {
                bad.get_or_insert((k, other.map(|r| r.0)));
                0.0
            }
        })?;
        if let Some((k, line)) = bad {
            return Err(perr(line.unwrap_or(0), format!("unit {k} does not match the structure")));
        }
        if rows.len() != theta.units().len() {
            return Err(invalid(format!("{} units listed, structure has {}", rows.len(), theta.units().len())));
        }
        Ok(NetworkGenerator { structure, kind, theta })
    }
}
