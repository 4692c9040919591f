//! Hand-set models shared by the integration tests.
#![allow(dead_code)]

use graphtm::datasets::chain_graph;
use graphtm::engine::{GraphTm, TrainConfig};
use graphtm::graph::{build_graph, InputGraph};
use graphtm::hypervector::{MessageSpace, SymbolSpace};
use graphtm::interpret::set_clause;

pub fn golden() -> (GraphTm, InputGraph) {
    let mut space = SymbolSpace::new(8, 2, 0).unwrap();
    space.register_symbol_with("A", &[0, 1]).unwrap();
    space.register_edge_type("right").unwrap();
    space.register_edge_type("left").unwrap();
    let cfg = TrainConfig {
        num_clauses: 1,
        depth: 2,
        hv_size: 8,
        msg_size: 8,
        ..TrainConfig::default()
    };
    let ms = MessageSpace::with_indices(8, 2, vec![vec![4, 5]]).unwrap();
    let mut tm = GraphTm::blank(cfg, space.clone(), Some(ms), 2).unwrap();
    tm.set_component_literals(0, 0, &[0, 1]).unwrap();
    tm.set_component_literals(0, 1, &[4, 5, 6]).unwrap();
    let props: Vec<Vec<&str>> = "BAAAE"
        .chars()
        .map(|c| if c == 'A' { vec!["A"] } else { vec![] })
        .collect();
    let mut edges = Vec::new();
    for n in 0..4 {
        edges.push((n, n + 1, "right"));
        edges.push((n + 1, n, "left"));
    }
    let g = build_graph(5, &props, &edges, &space).unwrap();
    (tm, g)
}

/// Chain model with hand-placed bits: A, B, E own two bits each and clause
/// `j` sends bits `4j, 4j+2`.
pub fn seq_model(depth: usize, clauses: usize, classes: usize) -> GraphTm {
    let mut space = SymbolSpace::new(8, 2, 0).unwrap();
    space.register_symbol_with("A", &[0, 1]).unwrap();
    space.register_symbol_with("B", &[2, 3]).unwrap();
    space.register_symbol_with("E", &[4, 5]).unwrap();
    space.register_edge_type("right").unwrap();
    space.register_edge_type("left").unwrap();
    let cfg = TrainConfig {
        num_clauses: clauses,
        depth,
        hv_size: 8,
        msg_size: 16,
        ..TrainConfig::default()
    };
    let ms = MessageSpace::with_indices(16, 2, (0..clauses).map(|j| vec![4 * j, 4 * j + 2]).collect()).unwrap();
    GraphTm::blank(cfg, space, (depth > 1).then_some(ms), classes).unwrap()
}

pub fn experiment_1() -> GraphTm {
    let mut m = seq_model(2, 4, 2);
    let clauses: [(&str, [i32; 2]); 4] = [
        ("¬A ∧ r1:0 ∧ r1:1", [3, -3]),
        ("l1:0 ∧ l1:1 ∧ l1:3 ∧ ¬r1:0", [3, -2]),
        ("A ∧ r1:2 ∧ r1:3 ∧ ¬r1:0 ∧ ¬l1:0", [-5, 6]),
        ("A ∧ l1:2 ∧ l1:3 ∧ ¬r1:0 ∧ ¬l1:0 ∧ ¬r1:1 ∧ ¬r1:2", [-2, 2]),
    ];
    for (j, (text, w)) in clauses.iter().enumerate() {
        set_clause(&mut m, j, text).unwrap();
        m.set_weights(j, w).unwrap();
    }
    m
}

pub fn experiment_2() -> GraphTm {
    let mut m = seq_model(3, 4, 3);
    let clauses: [(&str, [i32; 3]); 4] = [
        ("A ; r1:1 ∧ r1:2 ; r2:1", [-6, 8, -2]),
        ("φ ; l1:2 ; l2:0 ∧ l2:1", [0, -8, 6]),
        ("A ; φ ; l2:0 ∧ l2:1", [-1, -3, 1]),
        ("¬A ; φ ; φ", [3, -3, -5]),
    ];
    for (j, (text, w)) in clauses.iter().enumerate() {
        set_clause(&mut m, j, text).unwrap();
        m.set_weights(j, w).unwrap();
    }
    m
}

pub fn chain(model: &GraphTm, seq: &str) -> InputGraph {
    let letters: Vec<String> = seq.chars().map(|c| c.to_string()).collect();
    chain_graph(&letters, None).bind(model.symbols()).unwrap()
}
