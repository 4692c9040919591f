//! Reading clauses back as symbols, and tracing message literals down to
//! node-level patterns.
//!
//! Literal notation: `A`, `¬A` for symbols; `r1:2` for "clause 2 matched at
//! layer 0 on the node across a `right` edge, seen by the layer-1
//! component"; `l1:0` likewise for `left`. Other edge types render as
//! `e<t>@<layer>:<clause>`. Bits that no symbol fully covers render as
//! `b<k>` (node layer) or `m<k>` (message layers).

use std::collections::BTreeSet;
use std::fmt;

use crate::engine::GraphTm;
use crate::error::{Error, Result};
use crate::hypervector::{Hypervector, SymbolSpace};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    Symbol { name: String, negated: bool },
    /// Message from `clause` over `edge_type`, read by the layer-`layer`
    /// component.
    Message { layer: usize, clause: usize, edge_type: u32, negated: bool },
    Raw { layer: usize, bit: usize, negated: bool },
}

impl Literal {
    pub fn negated(&self) -> bool {
        match self {
            Literal::Symbol { negated, .. } | Literal::Message { negated, .. } | Literal::Raw { negated, .. } => *negated,
        }
    }

    pub fn render(&self, edge_names: &[String]) -> String {
        let neg = if self.negated() { "¬" } else { "" };
        match self {
            Literal::Symbol { name, .. } => format!("{neg}{name}"),
            Literal::Message {
                layer,
                clause,
                edge_type,
                ..
            } => match chain_letter(edge_names, *edge_type) {
                Some(c) => format!("{neg}{c}{layer}:{clause}"),
                None => format!("{neg}e{edge_type}@{layer}:{clause}"),
            },
            Literal::Raw { layer: 0, bit, .. } => format!("{neg}b{bit}"),
            Literal::Raw { bit, .. } => format!("{neg}m{bit}"),
        }
    }
}

fn chain_letter(edge_names: &[String], edge_type: u32) -> Option<char> {
    if !is_chain(edge_names) {
        return None;
    }
    match edge_names.get(edge_type as usize).map(String::as_str) {
        Some("right") => Some('r'),
        Some("left") => Some('l'),
        _ => None,
    }
}

/// Chain notation applies when every edge type is `left` or `right`.
fn is_chain(edge_names: &[String]) -> bool {
    !edge_names.is_empty() && edge_names.iter().all(|n| n == "left" || n == "right")
}

/// Node offset of the sender of a message arriving over `edge_type`.
fn chain_offset(edge_names: &[String], edge_type: u32) -> Option<isize> {
    match chain_letter(edge_names, edge_type)? {
        'r' => Some(-1),
        _ => Some(1),
    }
}

fn edge_names(space: &SymbolSpace) -> Vec<String> {
    space.edge_types().map(str::to_string).collect()
}

/// A clause's components in symbolic form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolicClause {
    pub clause: usize,
    pub layers: Vec<Vec<Literal>>,
    /// Message literals whose bits are shared with another clause or edge.
    pub ambiguous: Vec<Literal>,
    pub weights: Vec<i32>,
    pub edge_names: Vec<String>,
}

impl SymbolicClause {
    pub fn is_empty(&self) -> bool {
        self.layers.iter().all(Vec::is_empty)
    }

    pub fn render_layer(&self, layer: usize) -> String {
        render_conj(&self.layers[layer], &self.edge_names)
    }

    /// Single-line form, layers joined by `∧`, e.g. `A ∧ r1:2 ∧ ¬l1:0`.
    pub fn render_flat(&self) -> String {
        let all: Vec<Literal> = self.layers.iter().flatten().cloned().collect();
        render_conj(&all, &self.edge_names)
    }
}

fn render_conj(lits: &[Literal], edge_names: &[String]) -> String {
    if lits.is_empty() {
        return "φ".to_string();
    }
    lits.iter().map(|l| l.render(edge_names)).collect::<Vec<_>>().join(" ∧ ")
}

fn render_weights(w: &[i32]) -> String {
    let parts: Vec<String> = w.iter().map(i32::to_string).collect();
    format!("[{}]", parts.join(","))
}

impl fmt::Display for SymbolicClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "clause={} weights={}", self.clause, render_weights(&self.weights))?;
        if self.is_empty() {
            return writeln!(f, "  φ (matches everything)");
        }
        for layer in 0..self.layers.len() {
            writeln!(f, "  layer{layer}: {}", self.render_layer(layer))?;
        }
        for a in &self.ambiguous {
            writeln!(f, "  ambiguous: {}", a.render(&self.edge_names))?;
        }
        Ok(())
    }
}

/// Index sets that can be claimed in one component, with the literal each
/// stands for when fully included.
fn layer_sets(model: &GraphTm, layer: usize) -> Vec<(Vec<usize>, Literal)> {
    if layer == 0 {
        model
            .symbols()
            .symbols()
            .map(|(name, idx)| {
                (
                    idx.to_vec(),
                    Literal::Symbol {
                        name: name.to_string(),
                        negated: false,
                    },
                )
            })
            .collect()
    } else {
        let ms = model.messages().expect("message layers have a message space");
        let edges = model.symbols().num_edge_types().max(1) as u32;
        (0..model.num_clauses())
            .flat_map(|j| {
                (0..edges).map(move |e| {
                    (
                        ms.bound(j, e).to_vec(),
                        Literal::Message {
                            layer,
                            clause: j,
                            edge_type: e,
                            negated: false,
                        },
                    )
                })
            })
            .collect()
    }
}

fn with_negation(lit: &Literal, negated: bool) -> Literal {
    let mut l = lit.clone();
    match &mut l {
        Literal::Symbol { negated: n, .. } | Literal::Message { negated: n, .. } | Literal::Raw { negated: n, .. } => {
            *n = negated
        }
    }
    l
}

fn width(model: &GraphTm, layer: usize) -> usize {
    if layer == 0 {
        model.config().hv_size
    } else {
        model.config().msg_size
    }
}

/// Decodes one clause. A symbol (or clause message) is reported when all of
/// its bits are included; `¬symbol` when all of its negation literals are.
/// Other included literals are reported bit by bit, except negations of
/// bits that nothing ever sets, which always hold and are dropped.
pub fn decode_clause(model: &GraphTm, clause: usize) -> Result<SymbolicClause> {
    let mut layers = Vec::with_capacity(model.depth());
    let mut ambiguous = Vec::new();
    for layer in 0..model.depth() {
        let comp = model.team().component(clause, layer)?;
        let h = width(model, layer);
        let inc: Vec<bool> = (0..2 * h).map(|k| comp.is_included(k)).collect();
        let sets = layer_sets(model, layer);
        let mut owners = vec![0usize; h];
        for (idx, _) in &sets {
            for &k in idx {
                owners[k] += 1;
            }
        }
        let mut covered = vec![false; 2 * h];
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (idx, lit) in &sets {
            for (negated, out) in [(false, &mut pos), (true, &mut neg)] {
                let off = if negated { h } else { 0 };
                if idx.iter().all(|&k| inc[k + off]) {
                    idx.iter().for_each(|&k| covered[k + off] = true);
                    let l = with_negation(lit, negated);
                    if layer > 0 && idx.iter().any(|&k| owners[k] > 1) {
                        ambiguous.push(l.clone());
                    }
                    out.push(l);
                }
            }
        }
        let mut lits = pos;
        lits.extend(neg);
        for k in 0..2 * h {
            if inc[k] && !covered[k] {
                let bit = k % h;
                let negated = k >= h;
                if negated && owners[bit] == 0 {
                    continue;
                }
                lits.push(Literal::Raw { layer, bit, negated });
            }
        }
        layers.push(lits);
    }
    Ok(SymbolicClause {
        clause,
        layers,
        ambiguous,
        weights: model.weights().row(clause).to_vec(),
        edge_names: edge_names(model.symbols()),
    })
}

/// Literal indices of one layer's literals, the inverse of decoding.
pub fn encode_literals(model: &GraphTm, layer: usize, lits: &[Literal]) -> Result<Vec<usize>> {
    let h = width(model, layer);
    let mut out = BTreeSet::new();
    for lit in lits {
        let off = if lit.negated() { h } else { 0 };
        let bits: Vec<usize> = match lit {
            Literal::Symbol { name, .. } => {
                if layer != 0 {
                    return Err(Error::Config(format!("symbol `{name}` outside the node layer")));
                }
                model
                    .symbols()
                    .indices(name)
                    .ok_or_else(|| Error::UnknownSymbol(name.clone()))?
                    .to_vec()
            }
            Literal::Message {
                layer: l,
                clause,
                edge_type,
                ..
            } => {
                if *l != layer || layer == 0 {
                    return Err(Error::Config(format!("message literal for layer {l} used at layer {layer}")));
                }
                if *clause >= model.num_clauses() {
                    return Err(Error::OutOfRange {
                        index: *clause,
                        bound: model.num_clauses(),
                    });
                }
                let ms = model.messages().expect("depth > 1");
                if *edge_type as usize >= ms.num_edge_types() {
                    return Err(Error::OutOfRange {
                        index: *edge_type as usize,
                        bound: ms.num_edge_types(),
                    });
                }
                ms.bound(*clause, *edge_type).to_vec()
            }
            Literal::Raw { layer: l, bit, .. } => {
                if *l != layer {
                    return Err(Error::Config(format!("raw literal for layer {l} used at layer {layer}")));
                }
                if *bit >= h {
                    return Err(Error::OutOfRange { index: *bit, bound: h });
                }
                vec![*bit]
            }
        };
        out.extend(bits.into_iter().map(|k| k + off));
    }
    Ok(out.into_iter().collect())
}

fn parse_index(s: &str, line: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::Parse {
        line: 1,
        msg: format!("bad index `{s}` in `{line}`"),
    })
}

/// Parses one literal. Message and raw-bit forms carry their own layer;
/// anything else is a symbol name.
pub fn parse_literal(token: &str, space: &SymbolSpace) -> Result<Literal> {
    let t = token.trim();
    let (negated, body) = match t.chars().next() {
        Some(c @ ('¬' | '!' | '~')) => (true, t[c.len_utf8()..].trim()),
        _ => (false, t),
    };
    if body.is_empty() {
        return Err(Error::Parse {
            line: 1,
            msg: format!("empty literal in `{token}`"),
        });
    }
    if space.indices(body).is_some() {
        return Ok(Literal::Symbol {
            name: body.to_string(),
            negated,
        });
    }
    let names = edge_names(space);
    let msg = |edge: Option<u32>, rest: &str| -> Result<Option<Literal>> {
        let Some((l, c)) = rest.split_once(':') else {
            return Ok(None);
        };
        let (Ok(layer), Ok(clause)) = (l.parse::<usize>(), c.parse::<usize>()) else {
            return Ok(None);
        };
        let edge_type = edge.ok_or_else(|| Error::Parse {
            line: 1,
            msg: format!("`{body}` names an edge type this space does not have"),
        })?;
        if layer == 0 {
            return Err(Error::Parse {
                line: 1,
                msg: format!("message literal `{body}` at layer 0"),
            });
        }
        Ok(Some(Literal::Message {
            layer,
            clause,
            edge_type,
            negated,
        }))
    };
    let dir = |name: &str| is_chain(&names).then(|| space.edge_type(name)).flatten();
    if let Some(rest) = body.strip_prefix('r') {
        if let Some(l) = msg(dir("right"), rest)? {
            return Ok(l);
        }
    }
    if let Some(rest) = body.strip_prefix('l') {
        if let Some(l) = msg(dir("left"), rest)? {
            return Ok(l);
        }
    }
    if let Some((e, rest)) = body.strip_prefix('e').and_then(|r| r.split_once('@')) {
        if let Ok(code) = e.parse::<u32>() {
            let known = (code as usize) < names.len();
            if let Some(l) = msg(known.then_some(code), rest)? {
                return Ok(l);
            }
        }
    }
    if let Some(k) = body.strip_prefix('b') {
        if let Ok(bit) = k.parse() {
            return Ok(Literal::Raw { layer: 0, bit, negated });
        }
    }
    Err(Error::UnknownSymbol(body.to_string()))
}

/// Parses a clause. With `;` the text lists components layer by layer
/// (`¬A ; r1:0 ∧ r1:1`); without, literals are routed to their layer
/// (`A ∧ r1:2 ∧ ¬l1:0`). `φ` stands for an empty component. Raw message
/// bits are written `m<k>@<layer>`.
pub fn parse_clause(text: &str, space: &SymbolSpace, depth: usize) -> Result<Vec<Vec<Literal>>> {
    let mut layers = vec![Vec::new(); depth];
    let split = |s: &str| -> Vec<String> {
        s.split(['∧', '&'])
            .map(|t| t.trim().to_string())
            .filter(|t| !t.is_empty() && t != "φ" && t != "phi")
            .collect()
    };
    let place = |tok: &str| -> Result<(usize, Literal)> {
        let body = tok.trim_start_matches(['¬', '!', '~']).trim();
        if let Some((bit, layer)) = body.strip_prefix('m').and_then(|r| r.split_once('@')) {
            let lit = Literal::Raw {
                layer: parse_index(layer, tok)?,
                bit: parse_index(bit, tok)?,
                negated: body.len() != tok.trim().len(),
            };
            let Literal::Raw { layer, .. } = lit else { unreachable!() };
            return Ok((layer, lit));
        }
        let lit = parse_literal(tok, space)?;
        let layer = match &lit {
            Literal::Message { layer, .. } => *layer,
            _ => 0,
        };
        Ok((layer, lit))
    };
    if text.contains(';') {
        let parts: Vec<&str> = text.split(';').collect();
        if parts.len() != depth {
            return Err(Error::Parse {
                line: 1,
                msg: format!("{} components for depth {depth}", parts.len()),
            });
        }
        for (i, part) in parts.iter().enumerate() {
            for tok in split(part) {
                let (layer, lit) = place(&tok)?;
                if layer != i {
                    return Err(Error::Parse {
                        line: 1,
                        msg: format!("`{tok}` belongs to layer {layer}, found in component {i}"),
                    });
                }
                layers[i].push(lit);
            }
        }
    } else {
        for tok in split(text) {
            let (layer, lit) = place(&tok)?;
            if layer >= depth {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("`{tok}` needs depth > {layer}"),
                });
            }
            layers[layer].push(lit);
        }
    }
    Ok(layers)
}

/// Sets clause `clause` of a model from text, see [`parse_clause`].
pub fn set_clause(model: &mut GraphTm, clause: usize, text: &str) -> Result<()> {
    let layers = parse_clause(text, model.symbols(), model.depth())?;
    for (layer, lits) in layers.iter().enumerate() {
        let idx = encode_literals(model, layer, lits)?;
        model.set_component_literals(clause, layer, &idx)?;
    }
    Ok(())
}

/// Where a pattern is matched, relative to the anchor node `Xₙ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Site {
    /// Chain position `n + k`.
    Offset(isize),
    /// Some node reached from `Xₙ` by walking incoming edges of these
    /// types, nearest first.
    Path(Vec<u32>),
}

impl Site {
    fn step(&self, edge_names: &[String], edge_type: u32) -> Site {
        match (self, chain_offset(edge_names, edge_type)) {
            (Site::Offset(k), Some(d)) => Site::Offset(k + d),
            (Site::Path(p), _) => {
                let mut p = p.clone();
                p.push(edge_type);
                Site::Path(p)
            }
            (Site::Offset(_), None) => Site::Path(vec![edge_type]),
        }
    }

    fn distance(&self) -> usize {
        match self {
            Site::Offset(k) => k.unsigned_abs(),
            Site::Path(p) => p.len(),
        }
    }
}

const SUB_DIGITS: [char; 10] = ['₀', '₁', '₂', '₃', '₄', '₅', '₆', '₇', '₈', '₉'];

fn subscript(n: usize) -> String {
    n.to_string().chars().map(|c| SUB_DIGITS[c as usize - '0' as usize]).collect()
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Site::Offset(0) => write!(f, "Xₙ"),
            Site::Offset(k) if *k > 0 => write!(f, "Xₙ₊{}", subscript(*k as usize)),
            Site::Offset(k) => write!(f, "Xₙ₋{}", subscript(k.unsigned_abs())),
            Site::Path(p) => {
                write!(f, "Xₙ")?;
                for e in p {
                    write!(f, "←e{e}")?;
                }
                Ok(())
            }
        }
    }
}

/// Node-level formula over pattern matches. `Match` with an empty pattern
/// (`φ`) holds iff the site exists.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Match { pattern: Vec<Literal>, site: Site },
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    fn is_match(&self) -> bool {
        matches!(self, Formula::Match { .. })
    }

    fn sort_key(&self) -> (u8, usize, isize) {
        let site_key = |s: &Site| match s {
            Site::Offset(k) => (s.distance(), *k),
            Site::Path(_) => (s.distance(), 0),
        };
        match self {
            Formula::Match { site, .. } => {
                let (d, k) = site_key(site);
                (0, d, k)
            }
            Formula::Not(inner) => match inner.as_ref() {
                Formula::Match { site, .. } => {
                    let (d, k) = site_key(site);
                    (1, d, k)
                }
                _ => (2, 0, 0),
            },
            _ => (2, 0, 0),
        }
    }

    /// Flattens, drops neutral elements, removes duplicates and `φ` matches
    /// implied by another match at the same site, and orders conjuncts
    /// positive-first by distance from `Xₙ`.
    pub fn simplify(self) -> Formula {
        match self {
            Formula::Match { pattern, site } if pattern.is_empty() && site == Site::Offset(0) => Formula::True,
            Formula::Not(inner) => match inner.simplify() {
                Formula::True => Formula::False,
                Formula::False => Formula::True,
                Formula::Not(x) => *x,
                x => Formula::Not(Box::new(x)),
            },
            Formula::And(parts) => {
                let mut flat = Vec::new();
                for p in parts {
                    match p.simplify() {
                        Formula::True => {}
                        Formula::False => return Formula::False,
                        Formula::And(inner) => flat.extend(inner),
                        x => flat.push(x),
                    }
                }
                let mut out: Vec<Formula> = Vec::new();
                for f in flat {
                    if !out.contains(&f) {
                        out.push(f);
                    }
                }
                let snapshot = out.clone();
                out.retain(|f| match f {
                    Formula::Match { pattern, site } if pattern.is_empty() => !snapshot
                        .iter()
                        .any(|g| matches!(g, Formula::Match { pattern: p, site: s } if !p.is_empty() && s == site)),
                    Formula::Or(alts) => !alts.iter().any(|a| snapshot.contains(a)),
                    _ => true,
                });
                out.sort_by_key(Formula::sort_key);
                match out.len() {
                    0 => Formula::True,
                    1 => out.pop().unwrap(),
                    _ => Formula::And(out),
                }
            }
            Formula::Or(parts) => {
                let mut out: Vec<Formula> = Vec::new();
                for p in parts {
                    match p.simplify() {
                        Formula::False => {}
                        Formula::True => return Formula::True,
                        Formula::Or(inner) => {
                            for f in inner {
                                if !out.contains(&f) {
                                    out.push(f);
                                }
                            }
                        }
                        x => {
                            if !out.contains(&x) {
                                out.push(x);
                            }
                        }
                    }
                }
                match out.len() {
                    0 => Formula::False,
                    1 => out.pop().unwrap(),
                    _ => Formula::Or(out),
                }
            }
            x => x,
        }
    }

    pub fn render(&self, edge_names: &[String]) -> String {
        match self {
            Formula::True => "True".into(),
            Formula::False => "False".into(),
            Formula::Match { pattern, site } => format!("𝓜({}, {site})", render_conj(pattern, edge_names)),
            Formula::Not(inner) => {
                if inner.is_match() {
                    format!("¬{}", inner.render(edge_names))
                } else {
                    format!("¬({})", inner.render(edge_names))
                }
            }
            Formula::And(parts) => parts
                .iter()
                .map(|p| match p {
                    Formula::Or(_) => format!("({})", p.render(edge_names)),
                    _ => p.render(edge_names),
                })
                .collect::<Vec<_>>()
                .join(" ∧ "),
            Formula::Or(parts) => parts
                .iter()
                .map(|p| match p {
                    Formula::And(_) => format!("({})", p.render(edge_names)),
                    _ => p.render(edge_names),
                })
                .collect::<Vec<_>>()
                .join(" ∨ "),
        }
    }
}

/// A message literal of a traced component and what it resolves to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEdge {
    pub literal: Literal,
    /// Senders the literal can stand for. One entry unless message bits
    /// are shared; several entries are alternatives.
    pub targets: Vec<TraceTree>,
    /// For shared bits: per bit, the indices into `targets` that set it.
    pub bit_owners: Option<Vec<Vec<usize>>>,
}

/// Clause `clause` matched through layer `layer` at `site`: the node-layer
/// pattern there, plus one edge per message literal of layers `1..=layer`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceTree {
    pub clause: usize,
    pub layer: usize,
    pub site: Site,
    pub pattern: Vec<Literal>,
    pub children: Vec<TraceEdge>,
}

impl TraceTree {
    pub fn depth(&self) -> usize {
        1 + self
            .children
            .iter()
            .flat_map(|c| c.targets.iter().map(TraceTree::depth))
            .max()
            .unwrap_or(0)
    }

    pub fn formula(&self) -> Formula {
        let mut parts = vec![Formula::Match {
            pattern: self.pattern.clone(),
            site: self.site.clone(),
        }];
        for edge in &self.children {
            let negated = edge.literal.negated();
            let f = match &edge.bit_owners {
                None if negated => Formula::Not(Box::new(edge.targets[0].formula())),
                None => edge.targets[0].formula(),
                // a negated literal needs every one of its bits clear
                Some(bits) => Formula::And(
                    bits.iter()
                        .map(|owners| {
                            let any = Formula::Or(owners.iter().map(|&t| edge.targets[t].formula()).collect());
                            if negated {
                                Formula::Not(Box::new(any))
                            } else {
                                any
                            }
                        })
                        .collect(),
                ),
            };
            parts.push(f);
        }
        Formula::And(parts)
    }

    fn render_into(&self, out: &mut String, indent: usize, edge_names: &[String]) {
        out.push_str(&format!(
            "C{} layer{} @ {}: {}\n",
            self.clause,
            self.layer,
            self.site,
            render_conj(&self.pattern, edge_names)
        ));
        for edge in &self.children {
            for t in &edge.targets {
                out.push_str(&"  ".repeat(indent + 1));
                out.push_str(&format!("{} -> ", edge.literal.render(edge_names)));
                t.render_into(out, indent + 1, edge_names);
            }
        }
    }
}

/// Result of tracing one clause.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub tree: TraceTree,
    pub formula: Formula,
    pub edge_names: Vec<String>,
}

impl Trace {
    /// The node-level formula; a clause with no constraints renders as
    /// `True everywhere`.
    pub fn render_formula(&self) -> String {
        match &self.formula {
            Formula::True => "True everywhere".into(),
            Formula::False => "False everywhere".into(),
            f => f.render(&self.edge_names),
        }
    }

    pub fn render_tree(&self) -> String {
        let mut s = String::new();
        self.tree.render_into(&mut s, 0, &self.edge_names);
        s
    }
}

struct Tracer<'a> {
    model: &'a GraphTm,
    decoded: Vec<SymbolicClause>,
    edge_names: Vec<String>,
    // per message bit: the (clause, edge type) pairs whose sets contain it
    owners: Vec<Vec<(usize, u32)>>,
}

impl Tracer<'_> {
    fn tree(&self, clause: usize, layer: usize, site: Site) -> TraceTree {
        let d = &self.decoded[clause];
        let mut children = Vec::new();
        for comp in 1..=layer {
            for lit in &d.layers[comp] {
                children.push(self.edge(lit, comp, &site));
            }
        }
        TraceTree {
            clause,
            layer,
            site,
            pattern: d.layers[0].clone(),
            children,
        }
    }

    fn edge(&self, lit: &Literal, comp: usize, site: &Site) -> TraceEdge {
        let ms = self.model.messages().expect("depth > 1");
        let bits: Vec<usize> = match lit {
            Literal::Message { clause, edge_type, .. } => ms.bound(*clause, *edge_type).to_vec(),
            Literal::Raw { bit, .. } => vec![*bit],
            Literal::Symbol { .. } => unreachable!("symbols only appear at layer 0"),
        };
        let mut senders: Vec<(usize, u32)> = Vec::new();
        for &b in &bits {
            for &o in &self.owners[b] {
                if !senders.contains(&o) {
                    senders.push(o);
                }
            }
        }
        let unique = matches!(lit, Literal::Message { clause, edge_type, .. }
            if bits.iter().all(|&b| self.owners[b] == [(*clause, *edge_type)]));
        let targets: Vec<TraceTree> = senders
            .iter()
            .map(|&(j, e)| self.tree(j, comp - 1, site.step(&self.edge_names, e)))
            .collect();
        let bit_owners = (!unique).then(|| {
            bits.iter()
                .map(|b| {
                    self.owners[*b]
                        .iter()
                        .map(|o| senders.iter().position(|s| s == o).unwrap())
                        .collect()
                })
                .collect()
        });
        TraceEdge {
            literal: lit.clone(),
            targets,
            bit_owners,
        }
    }
}

/// Replaces every message literal of `clause` by the sending clause's match
/// one layer down at the neighbour the edge comes from, recursively, and
/// returns the tree together with the simplified node-level formula.
pub fn trace_to_nodes(model: &GraphTm, clause: usize) -> Result<Trace> {
    if clause >= model.num_clauses() {
        return Err(Error::OutOfRange {
            index: clause,
            bound: model.num_clauses(),
        });
    }
    let decoded = (0..model.num_clauses())
        .map(|j| decode_clause(model, j))
        .collect::<Result<Vec<_>>>()?;
    let mut owners = Vec::new();
    if let Some(ms) = model.messages() {
        owners = vec![Vec::new(); ms.msg_size()];
        for j in 0..model.num_clauses() {
            for e in 0..ms.num_edge_types() as u32 {
                for &b in ms.bound(j, e) {
                    owners[b].push((j, e));
                }
            }
        }
    }
    let tracer = Tracer {
        model,
        decoded,
        edge_names: edge_names(model.symbols()),
        owners,
    };
    let tree = tracer.tree(clause, model.depth() - 1, Site::Offset(0));
    let formula = tree.formula().simplify();
    Ok(Trace {
        tree,
        formula,
        edge_names: tracer.edge_names,
    })
}

/// Truth value of `formula` anchored at each node of a chain whose nodes
/// carry the given symbols. Sites outside the chain never match, `φ`
/// included.
pub fn evaluate_symbolic<S: AsRef<str>>(formula: &Formula, nodes: &[Vec<S>], space: &SymbolSpace) -> Result<Vec<bool>> {
    let hvs = nodes.iter().map(|n| space.encode(n)).collect::<Result<Vec<_>>>()?;
    (0..hvs.len() as isize).map(|n| eval_at(formula, &hvs, n, space)).collect()
}

fn eval_at(f: &Formula, hvs: &[Hypervector], n: isize, space: &SymbolSpace) -> Result<bool> {
    Ok(match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Match { pattern, site } => {
            let Site::Offset(k) = site else {
                return Err(Error::Config("only chain offsets can be evaluated symbolically".into()));
            };
            let at = n + k;
            if at < 0 || at as usize >= hvs.len() {
                return Ok(false);
            }
            let hv = &hvs[at as usize];
            let h = space.hv_size();
            let mut ok = true;
            for lit in pattern {
                let bits: Vec<usize> = match lit {
                    Literal::Symbol { name, .. } => space
                        .indices(name)
                        .ok_or_else(|| Error::UnknownSymbol(name.clone()))?
                        .to_vec(),
                    Literal::Raw { layer: 0, bit, .. } => vec![*bit],
                    other => return Err(Error::Config(format!("{other:?} is not a node-layer literal"))),
                };
                let off = if lit.negated() { h } else { 0 };
                ok &= bits.iter().all(|&b| hv.get(b + off));
            }
            ok
        }
        Formula::Not(inner) => !eval_at(inner, hvs, n, space)?,
        Formula::And(parts) => {
            for p in parts {
                if !eval_at(p, hvs, n, space)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Or(parts) => {
            for p in parts {
                if eval_at(p, hvs, n, space)? {
                    return Ok(true);
                }
            }
            false
        }
    })
}
