//! Text formats: instance files, outcome dumps, edge-arrival traces and trial
//! logs.
//!
//! Instance file:
//!
//! ```text
//! fom 1 <n> <m_edges>
//! bipartition 0110...      (optional)
//! A <id> | D <id>          (one per event, timeline order)
//! E <u> <v>                (one per edge)
//! ```
//!
//! Blank lines and lines starting with `#` are ignored by the parser.

use std::fmt::Write as _;

use fomatch_core::ranking::TrialRecord;
use fomatch_core::wf_hardness::{EdgeArrivalTrace, TraceItem};
use fomatch_core::{Event, EventKind, FractionalOutcome, Instance, VertexId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, field {field}: {message}")]
pub struct ParseError {
    /// 1-based line number.
    pub line: usize,
    /// 1-based whitespace-separated field, 0 for the whole line.
    pub field: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FormatError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid instance: {0}")]
    Invalid(#[from] fomatch_core::Error),
}

fn parse_err(line: usize, field: usize, message: impl Into<String>) -> ParseError {
    ParseError { line, field, message: message.into() }
}

/// Serializes an instance. `comments` are written as `#` lines right after
/// the header.
pub fn write_instance(instance: &Instance, comments: &[String]) -> String {
    let mut out = String::with_capacity(16 * (instance.edge_count() + 2 * instance.vertex_count()) + 64);
    let _ = writeln!(out, "fom 1 {} {}", instance.vertex_count(), instance.edge_count());
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    if let Some(side) = instance.bipartition() {
        out.push_str("bipartition ");
        out.extend(side.iter().map(|&s| if s { '1' } else { '0' }));
        out.push('\n');
    }
    for ev in instance.timeline() {
        let tag = match ev.kind {
            EventKind::Arrival => 'A',
            EventKind::Deadline => 'D',
        };
        let _ = writeln!(out, "{tag} {}", ev.vertex.0);
    }
    for &(u, v) in instance.edges() {
        let _ = writeln!(out, "E {} {}", u.0, v.0);
    }
    out
}

fn parse_count(tok: &str, line: usize, field: usize, what: &str) -> Result<usize, ParseError> {
    tok.parse::<usize>().map_err(|_| parse_err(line, field, format!("expected {what}, found `{tok}`")))
}

fn parse_vertex(tok: Option<&str>, n: usize, line: usize, field: usize) -> Result<VertexId, ParseError> {
    let tok = tok.ok_or_else(|| parse_err(line, field, "missing vertex id"))?;
    let id = parse_count(tok, line, field, "a vertex id")?;
    if id >= n {
        return Err(parse_err(line, field, format!("vertex {id} is out of range for n = {n}")));
    }
    Ok(VertexId::new(id))
}

fn parse_bipartition<'a>(rest: impl Iterator<Item = &'a str>, n: usize, line: usize) -> Result<Vec<bool>, ParseError> {
    let mut side = Vec::with_capacity(n);
    for (f, tok) in rest.enumerate() {
        for ch in tok.chars() {
            match ch {
                '0' => side.push(false),
                '1' => side.push(true),
                other => return Err(parse_err(line, f + 2, format!("bipartition flag `{other}` is not 0 or 1"))),
            }
        }
    }
    if side.len() != n {
        return Err(parse_err(line, 2, format!("bipartition has {} flags for {n} vertices", side.len())));
    }
    Ok(side)
}

/// Parses and validates an instance file.
pub fn parse_instance(text: &str) -> Result<Instance, FormatError> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut bipartition = None;
    let mut timeline = Vec::new();
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut toks = trimmed.split_whitespace();
        let tag = toks.next().expect("non-empty line");
        let Some((n, _, _)) = header else {
            if tag != "fom" {
                return Err(parse_err(line, 1, "expected header `fom 1 <n> <m>`").into());
            }
            let version = toks.next().ok_or_else(|| parse_err(line, 2, "missing format version"))?;
            if version != "1" {
                return Err(parse_err(line, 2, format!("unsupported format version `{version}`")).into());
            }
            let n = parse_count(toks.next().ok_or_else(|| parse_err(line, 3, "missing vertex count"))?, line, 3, "a vertex count")?;
            let m = parse_count(toks.next().ok_or_else(|| parse_err(line, 4, "missing edge count"))?, line, 4, "an edge count")?;
            if toks.next().is_some() {
                return Err(parse_err(line, 5, "unexpected field after header").into());
            }
            header = Some((n, m, line));
            continue;
        };
        let trailing = |mut toks: std::str::SplitWhitespace<'_>, field: usize| -> Result<(), ParseError> {
            match toks.next() {
                Some(_) => Err(parse_err(line, field, "unexpected extra field")),
                None => Ok(()),
            }
        };
        match tag {
            "bipartition" => {
                if bipartition.is_some() {
                    return Err(parse_err(line, 1, "duplicate bipartition line").into());
                }
                bipartition = Some(parse_bipartition(toks, n, line)?);
            }
            "A" | "D" => {
                let v = parse_vertex(toks.next(), n, line, 2)?;
                trailing(toks, 3)?;
                let step = timeline.len() as u64;
                timeline.push(if tag == "A" { Event::arrival(v, step) } else { Event::deadline(v, step) });
            }
            "E" => {
                let u = parse_vertex(toks.next(), n, line, 2)?;
                let v = parse_vertex(toks.next(), n, line, 3)?;
                trailing(toks, 4)?;
                edges.push((u, v));
            }
            other => return Err(parse_err(line, 1, format!("unknown record `{other}`")).into()),
        }
    }
    let (n, m, header_line) = header.ok_or_else(|| parse_err(1, 0, "empty instance file"))?;
    if edges.len() != m {
        return Err(parse_err(header_line, 4, format!("header declares {m} edges, file has {}", edges.len())).into());
    }
    Ok(Instance::new(n, edges, timeline, bipartition)?)
}

/// Writes `vertex,x,p,alpha` rows followed by `edge,u,v,x_uv` rows.
pub fn write_outcome_csv(instance: &Instance, outcome: &FractionalOutcome, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    out.push_str("vertex,x,p,alpha\n");
    for v in 0..instance.vertex_count() {
        let _ = writeln!(out, "{v},{},{},{}", outcome.level[v], outcome.passive[v], outcome.alpha[v]);
    }
    out.push_str("edge,u,v,x_uv\n");
    for (e, &(u, v)) in instance.edges().iter().enumerate() {
        let _ = writeln!(out, "{e},{},{},{}", u.0, v.0, outcome.edge_fraction[e]);
    }
    out
}

/// `eat 1 <n> <m>` followed by `E u v` and `D u` lines in revelation order.
pub fn write_trace(trace: &EdgeArrivalTrace, comments: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "eat 1 {} {}", trace.n, trace.edge_count());
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    for item in &trace.items {
        let _ = match item {
            TraceItem::Edge(u, v) => writeln!(out, "E {} {}", u.0, v.0),
            TraceItem::Deadline(u) => writeln!(out, "D {}", u.0),
        };
    }
    out
}

pub fn parse_trace(text: &str) -> Result<EdgeArrivalTrace, ParseError> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut items = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        let Some((n, _, _)) = header else {
            if toks.len() != 4 || toks[0] != "eat" || toks[1] != "1" {
                return Err(parse_err(line, 1, "expected header `eat 1 <n> <m>`"));
            }
            header = Some((parse_count(toks[2], line, 3, "a vertex count")?, parse_count(toks[3], line, 4, "an edge count")?, line));
            continue;
        };
        match (toks[0], toks.len()) {
            ("E", 3) => items.push(TraceItem::Edge(parse_vertex(Some(toks[1]), n, line, 2)?, parse_vertex(Some(toks[2]), n, line, 3)?)),
            ("D", 2) => items.push(TraceItem::Deadline(parse_vertex(Some(toks[1]), n, line, 2)?)),
            _ => return Err(parse_err(line, 1, format!("malformed trace record `{trimmed}`"))),
        }
    }
    let (n, m, header_line) = header.ok_or_else(|| parse_err(1, 0, "empty trace file"))?;
    let trace = EdgeArrivalTrace { n, items };
    if trace.edge_count() != m {
        return Err(parse_err(header_line, 4, format!("header declares {m} edges, trace has {}", trace.edge_count())));
    }
    Ok(trace)
}

/// `trial,seed,matched,opt,ratio` rows.
pub fn write_trial_log(records: &[TrialRecord], comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    out.push_str("trial,seed,matched,opt,ratio\n");
    for r in records {
        let _ = writeln!(out, "{},{},{},{},{}", r.trial, r.seed, r.matched, r.opt, r.ratio);
    }
    out
}
