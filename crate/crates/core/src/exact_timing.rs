//! Exact timeability: information-set contraction, cycle detection, exact
//! deterministic timings and the layered drawing.
//!
//! A game is exactly timeable iff contracting every information set yields an
//! acyclic graph; a topological numbering of the contraction is then an exact
//! timing, and perturbing it by `i/q` per vertex gives a drawing in which
//! information sets are exactly the horizontal levels.

use crate::game::{Game, NodeIdx, NodeKind};
use crate::rational::{fmt_q, is_integer, parse_q, q, qu, Q};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimingError {
    #[error("timing has {found} entries for a game of {expected} nodes")]
    Shape { expected: usize, found: usize },
    #[error("node {child}: time {} is less than parent {parent} time plus one", fmt_q(.child_time))]
    Gap {
        parent: u64,
        child: u64,
        child_time: Q,
    },
    #[error("node {0} has a negative time")]
    Negative(u64),
    #[error("infoset {0:?} has members at different times")]
    NotExact(String),
    #[error("node {0} has a non-integer time")]
    NotInteger(u64),
    #[error("timing document: {0}")]
    Document(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VertexKind {
    Chance(NodeIdx),
    InfoSet(usize),
}

/// The game tree minus its leaves, with each information set merged into one vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractedGraph {
    pub vertices: Vec<VertexKind>,
    pub labels: Vec<String>,
    /// Vertex of each non-leaf node.
    pub vertex_of: Vec<Option<usize>>,
    /// Deduplicated successor lists, each sorted ascending.
    pub succ: Vec<Vec<usize>>,
}

impl ContractedGraph {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn num_edges(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.succ[u].binary_search(&v).is_ok()
    }

    pub fn vertex_by_label(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// Vertices are numbered in order of first appearance in the game's preorder,
/// so the root's vertex is 0.
pub fn contract_infosets(g: &Game) -> ContractedGraph {
    let n = g.len();
    let mut vertex_of: Vec<Option<usize>> = vec![None; n];
    let mut infoset_vertex: Vec<Option<usize>> = vec![None; g.infosets().len()];
    let mut vertices = Vec::new();
    let mut labels = Vec::new();
    for &v in g.preorder() {
        match g.node(v).kind {
            NodeKind::Leaf { .. } => {}
            NodeKind::Chance => {
                vertex_of[v] = Some(vertices.len());
                labels.push(format!("chance:{}", g.node(v).id));
                vertices.push(VertexKind::Chance(v));
            }
            NodeKind::Decision { infoset, .. } => {
                let id = *infoset_vertex[infoset].get_or_insert_with(|| {
                    labels.push(g.infoset(infoset).name.clone());
                    vertices.push(VertexKind::InfoSet(infoset));
                    vertices.len() - 1
                });
                vertex_of[v] = Some(id);
            }
        }
    }

    // Bucket raw edges by source (counting sort), then drop repeats with a
    // per-source stamp: linear overall.
    let nv = vertices.len();
    let mut count = vec![0usize; nv + 1];
    for (v, node) in g.nodes().iter().enumerate() {
        if let Some(s) = vertex_of[v] {
            count[s + 1] += node
                .children
                .iter()
                .filter(|c| vertex_of[c.node].is_some())
                .count();
        }
    }
    for i in 0..nv {
        count[i + 1] += count[i];
    }
    let mut targets = vec![0usize; count[nv]];
    let mut fill = count.clone();
    for (v, node) in g.nodes().iter().enumerate() {
        if let Some(s) = vertex_of[v] {
            for c in &node.children {
                if let Some(t) = vertex_of[c.node] {
                    targets[fill[s]] = t;
                    fill[s] += 1;
                }
            }
        }
    }
    let mut stamp = vec![usize::MAX; nv];
    let mut succ = Vec::with_capacity(nv);
    for s in 0..nv {
        let mut out = Vec::new();
        for &t in &targets[count[s]..count[s + 1]] {
            if stamp[t] != s {
                stamp[t] = s;
                out.push(t);
            }
        }
        out.sort_unstable();
        succ.push(out);
    }
    ContractedGraph {
        vertices,
        labels,
        vertex_of,
        succ,
    }
}

/// A directed cycle `[v0, v1, …, vk]` (edges `vi → vi+1` and `vk → v0`), or `None`.
///
/// Depth-first search from each unvisited vertex in ascending order, successors
/// in ascending order; the witness is the cycle closed by the first back edge.
pub fn find_cycle(cg: &ContractedGraph) -> Option<Vec<usize>> {
    const WHITE: u8 = 0;
    const GRAY: u8 = 1;
    const BLACK: u8 = 2;
    let n = cg.len();
    let mut color = vec![WHITE; n];
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for start in 0..n {
        if color[start] != WHITE {
            continue;
        }
        color[start] = GRAY;
        stack.push((start, 0));
        while let Some(&mut (u, ref mut next)) = stack.last_mut() {
            if let Some(&w) = cg.succ[u].get(*next) {
                *next += 1;
                match color[w] {
                    WHITE => {
                        color[w] = GRAY;
                        stack.push((w, 0));
                    }
                    GRAY => {
                        let from = stack.iter().position(|&(x, _)| x == w).expect("gray on stack");
                        return Some(stack[from..].iter().map(|&(x, _)| x).collect());
                    }
                    _ => {}
                }
            } else {
                color[u] = BLACK;
                stack.pop();
            }
        }
    }
    None
}

/// Topological order with the smallest available vertex first, or `None` on a cycle.
pub fn topological_order(cg: &ContractedGraph) -> Option<Vec<usize>> {
    let n = cg.len();
    let mut indeg = vec![0usize; n];
    for out in &cg.succ {
        for &t in out {
            indeg[t] += 1;
        }
    }
    let mut heap: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&v| indeg[v] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(u)) = heap.pop() {
        order.push(u);
        for &t in &cg.succ[u] {
            indeg[t] -= 1;
            if indeg[t] == 0 {
                heap.push(Reverse(t));
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// Node times indexed by [`NodeIdx`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeterministicTiming {
    pub times: Vec<Q>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TimingDoc {
    times: BTreeMap<u64, String>,
}

impl DeterministicTiming {
    pub fn new(times: Vec<Q>) -> Self {
        DeterministicTiming { times }
    }

    pub fn time(&self, v: NodeIdx) -> &Q {
        &self.times[v]
    }

    /// Nonnegative times with every child at least one after its parent.
    pub fn check(&self, g: &Game) -> Result<(), TimingError> {
        if self.times.len() != g.len() {
            return Err(TimingError::Shape {
                expected: g.len(),
                found: self.times.len(),
            });
        }
        for (v, node) in g.nodes().iter().enumerate() {
            if self.times[v].is_negative() {
                return Err(TimingError::Negative(node.id));
            }
            let floor = &self.times[v] + Q::one();
            for c in &node.children {
                if self.times[c.node] < floor {
                    return Err(TimingError::Gap {
                        parent: node.id,
                        child: g.node(c.node).id,
                        child_time: self.times[c.node].clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn is_valid(&self, g: &Game) -> bool {
        self.check(g).is_ok()
    }

    /// Valid, and constant on every information set.
    pub fn check_exact(&self, g: &Game) -> Result<(), TimingError> {
        self.check(g)?;
        for set in g.infosets() {
            let t = &self.times[set.members[0]];
            if set.members.iter().any(|&v| &self.times[v] != t) {
                return Err(TimingError::NotExact(set.name.clone()));
            }
        }
        Ok(())
    }

    pub fn is_exact(&self, g: &Game) -> bool {
        self.check_exact(g).is_ok()
    }

    pub fn to_json(&self, g: &Game) -> String {
        let times = g
            .nodes()
            .iter()
            .zip(&self.times)
            .map(|(n, t)| (n.id, fmt_q(t)))
            .collect();
        serde_json::to_string_pretty(&TimingDoc { times }).expect("timing documents serialize")
    }

    /// Reads a timing document; every node of `g` must be present.
    pub fn from_json(g: &Game, text: &str) -> Result<Self, TimingError> {
        let doc: TimingDoc =
            serde_json::from_str(text).map_err(|e| TimingError::Document(e.to_string()))?;
        Self::from_id_map(g, &doc.times)
    }

    pub(crate) fn from_id_map(g: &Game, map: &BTreeMap<u64, String>) -> Result<Self, TimingError> {
        if map.len() != g.len() {
            return Err(TimingError::Shape {
                expected: g.len(),
                found: map.len(),
            });
        }
        let mut times = vec![Q::zero(); g.len()];
        for (id, text) in map {
            let v = g
                .index_of(*id)
                .map_err(|e| TimingError::Document(e.to_string()))?;
            times[v] = parse_q(text).map_err(|e| TimingError::Document(e.to_string()))?;
        }
        Ok(DeterministicTiming { times })
    }
}

/// Exact timing from a topological numbering of the contraction: each
/// information set's time is its vertex's position in the order, leaves sit one
/// after their parent. `None` iff the contraction has a cycle.
pub fn exact_deterministic_timing(g: &Game) -> Option<DeterministicTiming> {
    let cg = contract_infosets(g);
    timing_from_contraction(g, &cg)
}

pub fn timing_from_contraction(g: &Game, cg: &ContractedGraph) -> Option<DeterministicTiming> {
    let order = topological_order(cg)?;
    let mut rank = vec![0usize; cg.len()];
    for (i, &u) in order.iter().enumerate() {
        rank[u] = i;
    }
    let mut times = vec![Q::zero(); g.len()];
    for &v in g.preorder() {
        times[v] = match cg.vertex_of[v] {
            Some(u) => qu(rank[u]),
            None => match g.parent(v) {
                Some(p) => &times[p] + Q::one(),
                None => Q::zero(),
            },
        };
    }
    Some(DeterministicTiming { times })
}

/// Outcome of the timeability test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Timeable(DeterministicTiming),
    /// Labels of the contraction vertices on a directed cycle.
    Cycle(Vec<String>),
}

pub fn check(g: &Game) -> Verdict {
    let cg = contract_infosets(g);
    match find_cycle(&cg) {
        Some(cycle) => Verdict::Cycle(cycle.into_iter().map(|u| cg.labels[u].clone()).collect()),
        None => Verdict::Timeable(timing_from_contraction(g, &cg).expect("acyclic")),
    }
}

pub fn floor_timing(t: &DeterministicTiming) -> DeterministicTiming {
    DeterministicTiming {
        times: t.times.iter().map(Q::floor).collect(),
    }
}

/// Drawing coordinates: `y = −(time − i/q)` for the `i`-th of `q` contraction
/// vertices (ordinals from 1), so that decision nodes share a height exactly
/// when they share an information set. Leaves go to `−(time + 1/(2q))`, strictly
/// below their parent and off every vertex level. `x` is the in-order position.
pub fn layout(g: &Game, t: &DeterministicTiming) -> Result<Vec<(Q, Q)>, TimingError> {
    t.check_exact(g)?;
    if let Some(v) = t.times.iter().position(|x| !is_integer(x)) {
        return Err(TimingError::NotInteger(g.node(v).id));
    }
    let cg = contract_infosets(g);
    let qn = cg.len().max(1) as i64;
    let y: Vec<Q> = (0..g.len())
        .map(|v| match cg.vertex_of[v] {
            Some(u) => -(&t.times[v] - q(u as i64 + 1, qn)),
            None => -(&t.times[v] + q(1, 2 * qn)),
        })
        .collect();

    // In-order: the first half of the children, the node, then the rest.
    let mut x = vec![Q::zero(); g.len()];
    let mut next = 0usize;
    let mut stack: Vec<(NodeIdx, usize)> = vec![(g.root(), 0)];
    while let Some((v, i)) = stack.pop() {
        let children = &g.node(v).children;
        let half = children.len().div_ceil(2);
        if i == half {
            x[v] = qu(next);
            next += 1;
        }
        if i < children.len() {
            stack.push((v, i + 1));
            stack.push((children[i].node, 0));
        }
    }
    Ok(x.into_iter().zip(y).collect())
}

/// Graphviz rendering of a layout; each node carries its time and height.
pub fn to_dot(g: &Game, t: &DeterministicTiming, coords: &[(Q, Q)]) -> String {
    let to_f = |v: &Q| -> f64 {
        use num_traits::ToPrimitive;
        v.to_f64().unwrap_or(0.0)
    };
    let mut out = String::from("digraph game {\n  node [shape=circle];\n");
    for (v, node) in g.nodes().iter().enumerate() {
        let label = match &node.kind {
            NodeKind::Chance => "C".to_string(),
            NodeKind::Decision { player, .. } => format!("P{player}"),
            NodeKind::Leaf { payoffs } => payoffs
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(","),
        };
        let (x, y) = &coords[v];
        let _ = writeln!(
            out,
            "  n{} [label=\"{}\", pos=\"{:.4},{:.4}!\", time=\"{}\", rank_y=\"{}\"];",
            node.id,
            label,
            to_f(x),
            to_f(y),
            fmt_q(&t.times[v]),
            fmt_q(y)
        );
    }
    for node in g.nodes() {
        for c in &node.children {
            let _ = writeln!(
                out,
                "  n{} -> n{} [label=\"{}\"];",
                node.id,
                g.node(c.node).id,
                c.action
            );
        }
    }
    for set in g.infosets().iter().filter(|s| s.members.len() > 1) {
        for pair in set.members.windows(2) {
            let _ = writeln!(
                out,
                "  n{} -> n{} [style=dashed, dir=none, constraint=false];",
                g.node(pair[0]).id,
                g.node(pair[1]).id
            );
        }
    }
    out.push_str("}\n");
    out
}
