//! Hyperedge-list text format.
//!
//! One hyperedge per line: space-separated node indices, optionally followed by a
//! TAB and a positive integer weight. Lines starting with `#` are comments, except
//! a leading `#N=<int>` which declares the node count (to include isolated nodes).

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::Hypergraph;
use crate::error::{Error, Result};

pub fn load_hyperedge_list(path: impl AsRef<Path>, weight_default: u64) -> Result<Hypergraph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_hyperedge_list(&text, weight_default)
}

pub fn parse_hyperedge_list(text: &str, weight_default: u64) -> Result<Hypergraph> {
    if weight_default == 0 {
        return Err(Error::Domain("default weight must be positive".to_string()));
    }
    let mut declared_nodes = None;
    let mut edges = Vec::new();
    let mut seen_content = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        let err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        if line.trim().is_empty() {
            continue;
        }
        if let Some(comment) = line.trim_start().strip_prefix('#') {
            if !seen_content {
                if let Some(n) = comment.trim().strip_prefix("N=") {
                    let n = n
                        .trim()
                        .parse::<usize>()
                        .map_err(|_| err(format!("invalid node count {n:?}")))?;
                    declared_nodes = Some(n);
                }
            }
            seen_content = true;
            continue;
        }
        seen_content = true;

        let (nodes_part, weight) = match line.split_once('\t') {
            Some((nodes, w)) => {
                let w = w.trim();
                let weight = w
                    .parse::<i64>()
                    .map_err(|_| err(format!("invalid weight {w:?}")))?;
                if weight <= 0 {
                    return Err(err(format!("weight must be positive, got {weight}")));
                }
                (nodes, weight as u64)
            }
            None => (line, weight_default),
        };
        let mut nodes = nodes_part
            .split_whitespace()
            .map(|tok| {
                tok.parse::<usize>()
                    .map_err(|_| err(format!("invalid node index {tok:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        nodes.sort_unstable();
        if let Some(p) = nodes.windows(2).find(|p| p[0] == p[1]) {
            return Err(err(format!("node {} repeated", p[0])));
        }
        if nodes.len() < 2 {
            return Err(err(format!(
                "hyperedge needs at least 2 nodes, got {}",
                nodes.len()
            )));
        }
        edges.push((nodes, weight));
    }
    if edges.is_empty() {
        return Err(Error::NoHyperedges);
    }
    Hypergraph::from_edges(declared_nodes, edges)
}

/// Canonical serialization: node-count header, sorted nodes, explicit weights.
pub fn write_hyperedge_list<W: Write>(h: &Hypergraph, mut out: W) -> std::io::Result<()> {
    let mut line = String::new();
    writeln!(out, "#N={}", h.num_nodes())?;
    for (nodes, weight) in h.iter() {
        line.clear();
        for (pos, i) in nodes.iter().enumerate() {
            if pos > 0 {
                line.push(' ');
            }
            write!(line, "{i}").unwrap();
        }
        writeln!(out, "{line}\t{weight}")?;
    }
    Ok(())
}

impl Hypergraph {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut buf = std::io::BufWriter::new(file);
        write_hyperedge_list(self, &mut buf)
            .and_then(|_| buf.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn to_text(&self) -> String {
        let mut out = Vec::new();
        write_hyperedge_list(self, &mut out).expect("writing to memory");
        String::from_utf8(out).expect("ascii output")
    }
}
