//! Text formats: edge lists (also used for masks) and label maps.
//!
//! Edge list: one `u<TAB>v` pair per line, `#` comments and blank lines
//! ignored, optional `# n=<count>` header. Files we write start with a
//! `# fragnet edgelist v1` line; a file announcing any other version is
//! rejected.

use std::collections::BTreeMap;

use super::Graph;
use crate::error::{Error, Result};

pub const EDGELIST_HEADER: &str = "# fragnet edgelist v1";

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Checks a `# fragnet <kind> vN` line. Returns `Ok(true)` when the line was
/// a version header for `kind`.
pub(crate) fn check_version(line: &str, kind: &str, lineno: usize) -> Result<bool> {
    let rest = match line.strip_prefix("# fragnet ") {
        Some(r) => r.trim(),
        None => return Ok(false),
    };
    let mut parts = rest.split_whitespace();
    let found_kind = parts.next().unwrap_or("");
    let version = parts.next().unwrap_or("");
    if found_kind != kind {
        return Err(parse_err(lineno, format!("expected a {kind} file, found {found_kind}")));
    }
    if version != "v1" {
        return Err(Error::Format(format!("unsupported {kind} version {version:?}")));
    }
    Ok(true)
}

/// Pairs listed in an edge-list file plus the declared vertex count.
pub fn parse_pairs(text: &str) -> Result<(Option<usize>, Vec<(usize, usize)>)> {
    let mut declared = None;
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if check_version(line, "edgelist", lineno)? {
                continue;
            }
            if let Some(v) = line.trim_start_matches('#').trim().strip_prefix("n=") {
                let n = v.trim().parse::<usize>().map_err(|_| parse_err(lineno, format!("bad vertex count {v:?}")))?;
                declared = Some(n);
            }
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(parse_err(
                lineno,
                format!("expected two vertex ids, found {} fields (weighted or directed input is not supported)", tokens.len()),
            ));
        }
        let parse = |t: &str| t.parse::<usize>().map_err(|_| parse_err(lineno, format!("bad vertex id {t:?}")));
        let (u, v) = (parse(tokens[0])?, parse(tokens[1])?);
        if u == v {
            return Err(parse_err(lineno, format!("self-loop at vertex {u}")));
        }
        pairs.push((u, v));
    }
    Ok((declared, pairs))
}

/// Parses an edge list into a graph.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let (declared, pairs) = parse_pairs(text)?;
    let needed = pairs.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
    let n = match declared {
        Some(n) if n < needed => {
            return Err(parse_err(1, format!("header declares n={n} but vertex {} occurs", needed - 1)));
        }
        Some(n) => n,
        None => needed,
    };
    Graph::from_edges(n, &pairs)
}

/// Parses a mask file (same format) and applies it to `graph`.
pub fn apply_mask_text(graph: &Graph, text: &str) -> Result<Graph> {
    let (_, pairs) = parse_pairs(text)?;
    graph.with_mask(&pairs)
}

fn emit_pairs(n: usize, pairs: &[(usize, usize)]) -> String {
    let mut out = String::new();
    out.push_str(EDGELIST_HEADER);
    out.push('\n');
    out.push_str(&format!("# n={n}\n"));
    for (u, v) in pairs {
        out.push_str(&format!("{u}\t{v}\n"));
    }
    out
}

/// Edge list text with the version and vertex-count headers.
pub fn emit_edge_list(graph: &Graph) -> String {
    emit_pairs(graph.n(), &graph.edges())
}

/// Masked pairs in edge-list form.
pub fn emit_mask(graph: &Graph) -> String {
    emit_pairs(graph.n(), &graph.masked_pairs())
}

/// External names for vertex ids (`id<TAB>name` lines).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabelMap {
    names: BTreeMap<usize, String>,
}

impl LabelMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut names = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (id, name) = line
                .split_once('\t')
                .ok_or_else(|| parse_err(idx + 1, "expected id<TAB>name"))?;
            let id = id.trim().parse::<usize>().map_err(|_| parse_err(idx + 1, format!("bad vertex id {id:?}")))?;
            if names.insert(id, name.to_string()).is_some() {
                return Err(parse_err(idx + 1, format!("vertex {id} named twice")));
            }
        }
        Ok(LabelMap { names })
    }

    /// Name of a vertex, falling back to its id.
    pub fn name(&self, v: usize) -> String {
        self.names.get(&v).cloned().unwrap_or_else(|| v.to_string())
    }

    pub fn id_of(&self, name: &str) -> Option<usize> {
        self.names.iter().find(|(_, n)| n.as_str() == name).map(|(&id, _)| id)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}
