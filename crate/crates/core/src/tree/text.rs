//! Text forms of a tree: the canonical nested list `[[0,1],2]` (the form we
//! read back) and Newick `((0,1),2);`.

use std::fmt;
use std::str::FromStr;

use super::FragTree;
use crate::error::{Error, Result};

/// Plain nested description of a tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Nested {
    Leaf(usize),
    Node(Vec<Nested>),
}

impl Nested {
    pub fn min_leaf(&self) -> usize {
        match self {
            Nested::Leaf(v) => *v,
            Nested::Node(kids) => kids.iter().map(Nested::min_leaf).min().unwrap_or(usize::MAX),
        }
    }

    /// Sorts children recursively by smallest leaf.
    pub fn canonicalize(&mut self) {
        if let Nested::Node(kids) = self {
            kids.iter_mut().for_each(Nested::canonicalize);
            kids.sort_by_key(Nested::min_leaf);
        }
    }

    fn write_list(&self, out: &mut String) {
        match self {
            Nested::Leaf(v) => out.push_str(&v.to_string()),
            Nested::Node(kids) => {
                out.push('[');
                for (i, k) in kids.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    k.write_list(out);
                }
                out.push(']');
            }
        }
    }

    fn write_newick(&self, out: &mut String) {
        match self {
            Nested::Leaf(v) => out.push_str(&v.to_string()),
            Nested::Node(kids) => {
                out.push('(');
                for (i, k) in kids.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    k.write_newick(out);
                }
                out.push(')');
            }
        }
    }

    /// Parses the nested-list form without checking which labels occur.
    pub fn parse_list(s: &str) -> Result<Nested> {
        let mut p = Parser::new(s, b'[', b']');
        let n = p.item()?;
        p.finish(false)?;
        Ok(n)
    }

    /// Parses Newick with integer leaf labels. Branch lengths are rejected.
    pub fn parse_newick(s: &str) -> Result<Nested> {
        let mut p = Parser::new(s, b'(', b')');
        let n = p.item()?;
        p.finish(true)?;
        Ok(n)
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    open: u8,
    close: u8,
}

impl<'a> Parser<'a> {
    fn new(s: &'a str, open: u8, close: u8) -> Self {
        Parser {
            bytes: s.as_bytes(),
            pos: 0,
            open,
            close,
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: 1,
            msg: format!("{} (at byte {})", msg.into(), self.pos),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn item(&mut self) -> Result<Nested> {
        match self.peek() {
            Some(c) if c == self.open => {
                self.pos += 1;
                let mut kids = vec![self.item()?];
                loop {
                    match self.peek() {
                        Some(b',') => {
                            self.pos += 1;
                            kids.push(self.item()?);
                        }
                        Some(c) if c == self.close => {
                            self.pos += 1;
                            break;
                        }
                        _ => return Err(self.err("expected ',' or closing bracket")),
                    }
                }
                if kids.len() < 2 {
                    return Err(self.err("unary node"));
                }
                Ok(Nested::Node(kids))
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let tok = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii");
                tok.parse().map(Nested::Leaf).map_err(|_| self.err(format!("bad leaf label {tok}")))
            }
            Some(b':') => Err(self.err("branch lengths are not supported")),
            _ => Err(self.err("expected a leaf label or an opening bracket")),
        }
    }

    fn finish(&mut self, newick: bool) -> Result<()> {
        if newick {
            match self.peek() {
                Some(b';') => self.pos += 1,
                Some(b':') => return Err(self.err("branch lengths are not supported")),
                _ => return Err(self.err("newick string must end with ';'")),
            }
        }
        if self.peek().is_some() {
            return Err(self.err("trailing characters"));
        }
        Ok(())
    }
}

impl FragTree {
    /// Canonical nested-list text; equal fragmentations give equal strings.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        self.to_nested().write_list(&mut out);
        out
    }

    /// Newick text in canonical child order, e.g. `((0,1),2);`.
    pub fn to_newick(&self) -> String {
        let mut out = String::new();
        self.to_nested().write_newick(&mut out);
        out.push(';');
        out
    }

    /// Parses the nested-list form with arbitrary distinct leaf labels
    /// (projections and detached subtrees).
    pub fn parse_labeled(s: &str) -> Result<FragTree> {
        FragTree::from_nested(&Nested::parse_list(s)?)
    }

    /// Parses a Newick tree whose leaves must be exactly `0..n`.
    pub fn from_newick(s: &str) -> Result<FragTree> {
        build_complete(&Nested::parse_newick(s)?)
    }
}

fn build_complete(nested: &Nested) -> Result<FragTree> {
    let tree = FragTree::from_nested(nested).map_err(|e| match e {
        Error::InvalidArgument(m) => Error::Parse { line: 1, msg: m },
        other => other,
    })?;
    let n = tree.n_leaves();
    if !tree.covers_vertices(n) {
        let missing: Vec<usize> = (0..n).filter(|&v| tree.leaf_node(v).is_none()).collect();
        return Err(Error::Parse {
            line: 1,
            msg: format!("leaves must be 0..{n}; missing {missing:?}"),
        });
    }
    Ok(tree)
}

/// Parses the canonical nested-list form; leaves must be exactly `0..n`.
impl FromStr for FragTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        build_complete(&Nested::parse_list(s)?)
    }
}

impl fmt::Display for FragTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}
