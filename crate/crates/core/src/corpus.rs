//! Graph corpora and their text format.
//!
//! ```text
//! gtm-corpus 1
//! vocab 5c1f0e0a9d3b7e21
//! symbols A B C D E
//! edge-types right left
//! graph 3 1
//! n 0 B
//! n 1 A
//! n 2
//! e 0 1 right
//! e 1 0 left
//! end
//! ```
//!
//! `vocab` is a hash of the two name lists and must match them. Each graph
//! lists its nodes in order (a node may have no symbols) and then its
//! directed edges. The label is a class index or `-`. Lines starting with
//! `#` are ignored.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{GraphRecord, InputGraph};
use crate::hypervector::{vocabulary_hash, SymbolSpace};

const HEADER: &str = "gtm-corpus 1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Corpus {
    pub symbols: Vec<String>,
    pub edge_types: Vec<String>,
    pub graphs: Vec<GraphRecord>,
}

impl Corpus {
    pub fn new(symbols: Vec<String>, edge_types: Vec<String>) -> Self {
        Self {
            symbols,
            edge_types,
            graphs: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn vocabulary_hash(&self) -> u64 {
        vocabulary_hash(&self.symbols, &self.edge_types)
    }

    /// Number of classes implied by the largest label.
    pub fn num_classes(&self) -> usize {
        self.graphs.iter().filter_map(|g| g.label).max().map_or(0, |m| m + 1)
    }

    /// A symbol space holding this corpus' vocabulary.
    pub fn symbol_space(&self, hv_size: usize, bits_per_symbol: usize, seed: u64) -> Result<SymbolSpace> {
        SymbolSpace::from_vocabulary(hv_size, bits_per_symbol, seed, &self.symbols, &self.edge_types)
    }

    /// Binds every graph to `space`, which must carry the same vocabulary.
    pub fn bind(&self, space: &SymbolSpace) -> Result<Vec<InputGraph>> {
        if space.vocabulary_hash() != self.vocabulary_hash() {
            return Err(Error::SpaceMismatch {
                model: space.vocabulary_hash(),
                corpus: self.vocabulary_hash(),
            });
        }
        self.graphs.iter().map(|g| g.bind(space)).collect()
    }

    /// Splits off the last `n` graphs.
    pub fn split_off(&mut self, n: usize) -> Corpus {
        let at = self.graphs.len().saturating_sub(n);
        Corpus {
            symbols: self.symbols.clone(),
            edge_types: self.edge_types.clone(),
            graphs: self.graphs.split_off(at),
        }
    }

    pub fn to_text(&self) -> Result<String> {
        let check = |name: &str| {
            if name.is_empty() || name.chars().any(char::is_whitespace) || name == "-" {
                Err(Error::Config(format!("name `{name}` cannot be written to a corpus file")))
            } else {
                Ok(())
            }
        };
        self.symbols.iter().chain(&self.edge_types).try_for_each(|s| check(s))?;
        let mut out = String::new();
        out.push_str(HEADER);
        out.push('\n');
        out.push_str(&format!("vocab {:016x}\n", self.vocabulary_hash()));
        out.push_str(&format!("symbols {}\n", self.symbols.join(" ")).replace(" \n", "\n"));
        out.push_str(&format!("edge-types {}\n", self.edge_types.join(" ")).replace(" \n", "\n"));
        for g in &self.graphs {
            let label = g.label.map_or("-".to_string(), |l| l.to_string());
            out.push_str(&format!("graph {} {label}\n", g.num_nodes()));
            for (i, syms) in g.node_symbols.iter().enumerate() {
                out.push_str(&format!("n {i}"));
                for s in syms {
                    out.push(' ');
                    out.push_str(s);
                }
                out.push('\n');
            }
            for (s, d, t) in &g.edges {
                out.push_str(&format!("e {s} {d} {t}\n"));
            }
            out.push_str("end\n");
        }
        Ok(out)
    }

    pub fn from_text(text: &str) -> Result<Corpus> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let perr = |line: usize, msg: String| Error::Parse { line, msg };
        let mut next = |what: &str| lines.next().ok_or_else(|| perr(0, format!("unexpected end of file, expected {what}")));

        let (ln, l) = next("header")?;
        if l != HEADER {
            return Err(perr(ln, format!("expected `{HEADER}`")));
        }
        let (ln, l) = next("vocab")?;
        let hash = l
            .strip_prefix("vocab ")
            .and_then(|h| u64::from_str_radix(h.trim(), 16).ok())
            .ok_or_else(|| perr(ln, "expected `vocab <hex>`".into()))?;
        let (ln, l) = next("symbols")?;
        let symbols = list_after(l, "symbols").ok_or_else(|| perr(ln, "expected `symbols ...`".into()))?;
        let (ln, l) = next("edge-types")?;
        let edge_types = list_after(l, "edge-types").ok_or_else(|| perr(ln, "expected `edge-types ...`".into()))?;
        let mut corpus = Corpus::new(symbols, edge_types);
        if corpus.vocabulary_hash() != hash {
            return Err(perr(ln, "vocabulary hash does not match the listed names".into()));
        }
        let known_sym: std::collections::HashSet<&str> = corpus.symbols.iter().map(String::as_str).collect();
        let known_edge: std::collections::HashSet<&str> = corpus.edge_types.iter().map(String::as_str).collect();

        let mut graphs = Vec::new();
        let mut current: Option<(GraphRecord, usize)> = None;
        for (ln, l) in lines {
            let mut parts = l.split_whitespace();
            let head = parts.next().unwrap_or_default();
            match (head, current.as_mut()) {
                ("graph", None) => {
                    let n: usize = parse_num(parts.next(), ln, "node count")?;
                    let label = match parts.next() {
                        Some("-") => None,
                        other => Some(parse_num(other, ln, "label")?),
                    };
                    current = Some((
                        GraphRecord {
                            node_symbols: Vec::with_capacity(n),
                            edges: Vec::new(),
                            label,
                        },
                        n,
                    ));
                }
                ("n", Some((g, n))) => {
                    let i: usize = parse_num(parts.next(), ln, "node index")?;
                    if i != g.node_symbols.len() || i >= *n || !g.edges.is_empty() {
                        return Err(perr(ln, format!("node {i} out of order")));
                    }
                    let syms: Vec<String> = parts.map(str::to_string).collect();
                    if let Some(bad) = syms.iter().find(|s| !known_sym.contains(s.as_str())) {
                        return Err(perr(ln, format!("symbol `{bad}` is not in the vocabulary")));
                    }
                    g.node_symbols.push(syms);
                }
                ("e", Some((g, n))) => {
                    let s: usize = parse_num(parts.next(), ln, "edge source")?;
                    let d: usize = parse_num(parts.next(), ln, "edge target")?;
                    let t = parts.next().ok_or_else(|| perr(ln, "missing edge type".into()))?;
                    if s >= *n || d >= *n {
                        return Err(perr(ln, format!("edge {s} -> {d} leaves a {n}-node graph")));
                    }
                    if !known_edge.contains(t) {
                        return Err(perr(ln, format!("edge type `{t}` is not in the vocabulary")));
                    }
                    g.edges.push((s, d, t.to_string()));
                }
                ("end", Some(_)) => {
                    let (g, n) = current.take().unwrap();
                    if g.node_symbols.len() != n {
                        return Err(perr(ln, format!("{} of {n} nodes listed", g.node_symbols.len())));
                    }
                    graphs.push(g);
                }
                (other, _) => return Err(perr(ln, format!("unexpected `{other}`"))),
            }
        }
        if current.is_some() {
            return Err(perr(0, "last graph has no `end`".into()));
        }
        corpus.graphs = graphs;
        Ok(corpus)
    }

    pub fn load(path: &Path) -> Result<Corpus> {
        Corpus::from_text(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()?)?;
        Ok(())
    }
}

fn list_after(line: &str, key: &str) -> Option<Vec<String>> {
    let mut parts = line.split_whitespace();
    (parts.next()? == key).then(|| parts.map(str::to_string).collect())
}

fn parse_num(tok: Option<&str>, line: usize, what: &str) -> Result<usize> {
    tok.and_then(|t| t.parse().ok()).ok_or_else(|| Error::Parse {
        line,
        msg: format!("expected {what}"),
    })
}
