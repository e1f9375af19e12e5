//! Text formats for sample streams and diagnostics.
//!
//! Samples: a `# fragnet samples v1 model=<kind>` line, then one
//! tab-separated record per sample: iteration, log prior, log marginal
//! likelihood, canonical structure.
//!
//! Diagnostics: a `# fragnet diagnostics v1 model=<kind> burn_in=<b>
//! thin=<t>` line, a `counters` section (`class proposed accepted
//! same_state`) and a `trace` section (`iteration log_joint`).

use super::{Diagnostics, MoveCounter, PosteriorSample};
use crate::error::{Error, Result};
use crate::graphstats::io::check_version;
use crate::models::{ModelKind, Structure};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Reads `key=value` fields of a header line.
fn header_field<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    line.split_whitespace().find_map(|tok| tok.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
}

fn read_header<'a>(text: &'a str, kind: &str) -> Result<(&'a str, std::iter::Skip<std::iter::Enumerate<std::str::Lines<'a>>>)> {
    let first = text.lines().next().ok_or_else(|| parse_err(1, format!("empty {kind} file")))?;
    if !check_version(first, kind, 1)? {
        return Err(Error::Format(format!("missing `# fragnet {kind} v1` header")));
    }
    Ok((first, text.lines().enumerate().skip(1)))
}

fn parse_kind(header: &str) -> Result<ModelKind> {
    header_field(header, "model")
        .ok_or_else(|| parse_err(1, "header lacks model="))?
        .parse()
}

pub fn write_samples(kind: ModelKind, samples: &[PosteriorSample]) -> String {
    let mut out = format!("# fragnet samples v1 model={kind}\n");
    out.push_str("# iteration\tlog_prior\tlog_ml\tstructure\n");
    for s in samples {
        out.push_str(&format!("{}\t{}\t{}\t{}\n", s.iteration, s.log_prior, s.log_ml, s.structure));
    }
    out
}

pub fn parse_samples(text: &str) -> Result<(ModelKind, Vec<PosteriorSample>)> {
    let (header, lines) = read_header(text, "samples")?;
    let kind = parse_kind(header)?;
    let mut samples = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(parse_err(lineno, format!("expected 4 fields, found {}", fields.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| parse_err(lineno, format!("bad number {s:?}")));
        let structure = Structure::parse(kind, fields[3]).map_err(|e| parse_err(lineno, e.to_string()))?;
        samples.push(PosteriorSample {
            iteration: fields[0].parse().map_err(|_| parse_err(lineno, "bad iteration"))?,
            log_prior: num(fields[1])?,
            log_ml: num(fields[2])?,
            structure,
        });
    }
    Ok((kind, samples))
}

pub fn write_diagnostics(d: &Diagnostics) -> String {
    let mut out = format!(
        "# fragnet diagnostics v1 model={} burn_in={} thin={}\n",
        d.kind, d.burn_in, d.thin
    );
    out.push_str("# counters\tclass\tproposed\taccepted\tsame_state\n");
    for c in &d.counters {
        out.push_str(&format!("counter\t{}\t{}\t{}\t{}\n", c.name, c.proposed, c.accepted, c.same_state));
    }
    out.push_str("# trace\titeration\tlog_joint\n");
    for (t, v) in &d.trace {
        out.push_str(&format!("trace\t{t}\t{v}\n"));
    }
    out
}

pub fn parse_diagnostics(text: &str) -> Result<Diagnostics> {
    let (header, lines) = read_header(text, "diagnostics")?;
    let kind = parse_kind(header)?;
    let num = |key: &str| -> Result<usize> {
        header_field(header, key)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| parse_err(1, format!("header lacks {key}=")))
    };
    let mut d = Diagnostics {
        kind,
        burn_in: num("burn_in")?,
        thin: num("thin")?,
        counters: Vec::new(),
        trace: Vec::new(),
        wall_seconds: 0.0,
    };
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let int = |s: &str| s.parse::<u64>().map_err(|_| parse_err(lineno, format!("bad count {s:?}")));
        match f.as_slice() {
            ["counter", name, p, a, s] => {
                let c = MoveCounter {
                    name: name.to_string(),
                    proposed: int(p)?,
                    accepted: int(a)?,
                    same_state: int(s)?,
                };
                if c.accepted > c.proposed {
                    return Err(parse_err(lineno, "more acceptances than proposals"));
                }
                d.counters.push(c);
            }
            ["trace", t, v] => {
                let v = v.parse::<f64>().map_err(|_| parse_err(lineno, format!("bad value {v:?}")))?;
                d.trace.push((int(t)? as usize, v));
            }
            _ => return Err(parse_err(lineno, "unrecognized record")),
        }
    }
    Ok(d)
}
