//! Input multigraphs and the per-evaluation layer state.

use crate::error::{Error, Result};
use crate::hypervector::{Hypervector, SymbolSpace};

/// A directed, typed edge. Undirected links are two edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub edge_type: u32,
}

/// A graph described by symbol names, not yet bound to a [`SymbolSpace`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphRecord {
    pub node_symbols: Vec<Vec<String>>,
    pub edges: Vec<(usize, usize, String)>,
    pub label: Option<usize>,
}

impl GraphRecord {
    pub fn num_nodes(&self) -> usize {
        self.node_symbols.len()
    }

    pub fn bind(&self, space: &SymbolSpace) -> Result<InputGraph> {
        let mut g = build_graph(self.num_nodes(), &self.node_symbols, &self.edges, space)?;
        g.label = self.label;
        Ok(g)
    }
}

/// A validated multigraph with layer-0 node hypervectors computed from a
/// symbol space. Immutable once built.
#[derive(Clone, Debug)]
pub struct InputGraph {
    node_symbols: Vec<Vec<String>>,
    node_hvs: Vec<Hypervector>,
    edges: Vec<Edge>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    pub label: Option<usize>,
    space_fingerprint: u64,
}

/// Builds a graph: each node's hypervector is the bundle of its property
/// symbols' bits. Edge types are given by name.
pub fn build_graph<S: AsRef<str>, E: AsRef<str>>(
    num_nodes: usize,
    properties: &[Vec<S>],
    edges: &[(usize, usize, E)],
    space: &SymbolSpace,
) -> Result<InputGraph> {
    if properties.len() != num_nodes {
        return Err(Error::Config(format!(
            "{} property lists for {num_nodes} nodes",
            properties.len()
        )));
    }
    let node_hvs = properties
        .iter()
        .map(|p| space.encode(p))
        .collect::<Result<Vec<_>>>()?;
    let mut typed = Vec::with_capacity(edges.len());
    for (src, dst, ty) in edges {
        for &end in [src, dst] {
            if end >= num_nodes {
                return Err(Error::OutOfRange {
                    index: end,
                    bound: num_nodes,
                });
            }
        }
        let edge_type = space
            .edge_type(ty.as_ref())
            .ok_or_else(|| Error::UnknownEdgeType(ty.as_ref().to_string()))?;
        typed.push(Edge {
            src: *src,
            dst: *dst,
            edge_type,
        });
    }
    let mut out_edges = vec![Vec::new(); num_nodes];
    let mut in_edges = vec![Vec::new(); num_nodes];
    for (i, e) in typed.iter().enumerate() {
        out_edges[e.src].push(i);
        in_edges[e.dst].push(i);
    }
    Ok(InputGraph {
        node_symbols: properties
            .iter()
            .map(|p| p.iter().map(|s| s.as_ref().to_string()).collect())
            .collect(),
        node_hvs,
        edges: typed,
        out_edges,
        in_edges,
        label: None,
        space_fingerprint: space.fingerprint(),
    })
}

impl InputGraph {
    pub fn num_nodes(&self) -> usize {
        self.node_hvs.len()
    }

    pub fn node_hv(&self, node: usize) -> &Hypervector {
        &self.node_hvs[node]
    }

    pub fn node_hvs(&self) -> &[Hypervector] {
        &self.node_hvs
    }

    pub fn node_symbols(&self, node: usize) -> &[String] {
        &self.node_symbols[node]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn space_fingerprint(&self) -> u64 {
        self.space_fingerprint
    }

    /// Outgoing `(dst, edge_type)` pairs in insertion order.
    pub fn neighbors_out(&self, node: usize) -> Result<Vec<(usize, u32)>> {
        let list = self.out_edges.get(node).ok_or(Error::OutOfRange {
            index: node,
            bound: self.num_nodes(),
        })?;
        Ok(list
            .iter()
            .map(|&i| (self.edges[i].dst, self.edges[i].edge_type))
            .collect())
    }

    /// Incoming edges of `node`, as indices into [`InputGraph::edges`].
    pub fn in_edges(&self, node: usize) -> &[usize] {
        &self.in_edges[node]
    }
}

/// Everything computed while evaluating one graph: message hypervectors for
/// layers `1..depth` and the running conjunctive match bits for every layer.
#[derive(Clone, Debug)]
pub struct LayerState {
    num_nodes: usize,
    num_clauses: usize,
    // msg_hv[i - 1][node] is H^i_node
    msg_hv: Vec<Vec<Hypervector>>,
    // matches[i][clause * num_nodes + node]
    matches: Vec<Vec<bool>>,
}

impl LayerState {
    pub(crate) fn new(num_nodes: usize, num_clauses: usize) -> Self {
        Self {
            num_nodes,
            num_clauses,
            msg_hv: Vec::new(),
            matches: Vec::new(),
        }
    }

    pub(crate) fn push_layer(&mut self, msgs: Option<Vec<Hypervector>>, matches: Vec<bool>) {
        debug_assert_eq!(matches.len(), self.num_nodes * self.num_clauses);
        if let Some(m) = msgs {
            self.msg_hv.push(m);
        }
        self.matches.push(matches);
    }

    pub fn depth(&self) -> usize {
        self.matches.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_clauses(&self) -> usize {
        self.num_clauses
    }

    /// `H^layer_node` for a message layer (`layer >= 1`).
    pub fn message(&self, layer: usize, node: usize) -> &Hypervector {
        &self.msg_hv[layer - 1][node]
    }

    /// `M^layer_{clause,node}`.
    pub fn matched(&self, layer: usize, clause: usize, node: usize) -> bool {
        self.matches[layer][clause * self.num_nodes + node]
    }

    /// Match bits of one clause over all nodes at `layer`.
    pub fn clause_matches(&self, layer: usize, clause: usize) -> &[bool] {
        let start = clause * self.num_nodes;
        &self.matches[layer][start..start + self.num_nodes]
    }

    /// Last-layer match bits of `clause`.
    pub fn final_matches(&self, clause: usize) -> &[bool] {
        self.clause_matches(self.depth() - 1, clause)
    }
}
