//! Sensing graphs, their orientation and incidence structure, and the
//! reachability classifications the controllers depend on.
//!
//! Vertices are 0-based internally. An edge `(i, j)` means agent `i` measures
//! the bearing towards agent `j`, so `j` is an out-neighbor of `i`.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An immutable directed graph without self-loops or duplicate edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    edge_set: BTreeSet<(usize, usize)>,
    orientation: Vec<(usize, usize)>,
    out: Vec<Vec<usize>>,
    inc: Vec<Vec<usize>>,
}

impl DirectedGraph {
    pub fn new<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n == 0 {
            return Err(Error::InvalidGraph("graph needs at least one vertex".into()));
        }
        let mut list = Vec::new();
        let mut edge_set = BTreeSet::new();
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) references a vertex outside 1..={n}",
                    i + 1,
                    j + 1
                )));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {}", i + 1)));
            }
            if !edge_set.insert((i, j)) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge ({}, {})",
                    i + 1,
                    j + 1
                )));
            }
            list.push((i, j));
        }

        let orientation: BTreeSet<(usize, usize)> =
            list.iter().map(|&(i, j)| (i.min(j), i.max(j))).collect();

        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        for &(i, j) in &list {
            out[i].push(j);
            inc[j].push(i);
        }
        for nbrs in out.iter_mut().chain(inc.iter_mut()) {
            nbrs.sort_unstable();
        }

        Ok(Self {
            n,
            edges: list,
            edge_set,
            orientation: orientation.into_iter().collect(),
            out,
            inc,
        })
    }

    /// Builds an undirected graph: every pair is inserted in both directions.
    pub fn undirected<I>(n: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut set = BTreeSet::new();
        for (i, j) in pairs {
            set.insert((i, j));
            set.insert((j, i));
        }
        Self::new(n, set)
    }

    /// Builds a graph from 1-based vertex labels.
    pub fn from_one_based(n: usize, edges: &[[usize; 2]]) -> Result<Self> {
        let mut zero_based = Vec::with_capacity(edges.len());
        for &[i, j] in edges {
            if i == 0 || j == 0 {
                return Err(Error::InvalidGraph("vertex labels are 1-based".into()));
            }
            zero_based.push((i - 1, j - 1));
        }
        Self::new(n, zero_based)
    }

    /// The graph with every edge present in both directions.
    pub fn symmetrized(&self) -> Self {
        Self::undirected(self.n, self.edges.iter().copied()).expect("valid graph stays valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Directed edges in insertion order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Orientation representatives `(i, j)` with `i < j`, lexicographically ordered.
    pub fn orientation(&self) -> &[(usize, usize)] {
        &self.orientation
    }

    /// Number of undirected edges `m`.
    pub fn m(&self) -> usize {
        self.orientation.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edge_set.contains(&(i, j))
    }

    pub fn out_neighbors(&self, i: usize) -> &[usize] {
        &self.out[i]
    }

    pub fn in_neighbors(&self, i: usize) -> &[usize] {
        &self.inc[i]
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.out[i].len()
    }

    /// Neighbors in the undirected sense (union of in- and out-neighbors).
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let mut all: Vec<usize> = self.out[i].iter().chain(&self.inc[i]).copied().collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    /// True when every edge has its reverse.
    pub fn is_undirected(&self) -> bool {
        self.edges.iter().all(|&(i, j)| self.has_edge(j, i))
    }

    /// Column index of the orientation edge joining `i` and `j`, in either direction.
    pub fn orientation_index(&self, i: usize, j: usize) -> Option<usize> {
        let key = (i.min(j), i.max(j));
        self.orientation.binary_search(&key).ok()
    }

    pub fn incidence(&self) -> IncidenceMatrices {
        incidence(self)
    }

    pub fn connectivity(&self) -> ConnectivityReport {
        classify_connectivity(self)
    }
}

/// Fragment of a scenario document: `{"n": 4, "edges": [[1, 2], ...]}`, 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

impl GraphSpec {
    pub fn build(&self) -> Result<DirectedGraph> {
        DirectedGraph::from_one_based(self.n, &self.edges)
    }
}

impl From<&DirectedGraph> for GraphSpec {
    fn from(g: &DirectedGraph) -> Self {
        Self {
            n: g.n(),
            edges: g.edges().iter().map(|&(i, j)| [i + 1, j + 1]).collect(),
        }
    }
}

/// Oriented (`h`) and directed oriented (`h_plus`) incidence matrices, `n x m`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrices {
    pub h: DMatrix<i32>,
    pub h_plus: DMatrix<i32>,
}

impl IncidenceMatrices {
    /// `H ⊗ I_d` as a dense `dn x dm` matrix.
    pub fn inflated_h(&self, d: usize) -> DMatrix<f64> {
        inflate(&self.h, d)
    }

    /// `H₊ ⊗ I_d` as a dense `dn x dm` matrix.
    pub fn inflated_h_plus(&self, d: usize) -> DMatrix<f64> {
        inflate(&self.h_plus, d)
    }
}

fn inflate(m: &DMatrix<i32>, d: usize) -> DMatrix<f64> {
    let mut big = DMatrix::zeros(m.nrows() * d, m.ncols() * d);
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let v = m[(r, c)];
            if v != 0 {
                for a in 0..d {
                    big[(r * d + a, c * d + a)] = v as f64;
                }
            }
        }
    }
    big
}

pub fn incidence(graph: &DirectedGraph) -> IncidenceMatrices {
    let (n, m) = (graph.n(), graph.m());
    let mut h = DMatrix::zeros(n, m);
    let mut h_plus = DMatrix::zeros(n, m);
    for (k, &(i, j)) in graph.orientation().iter().enumerate() {
        h[(i, k)] = 1;
        h[(j, k)] = -1;
        if graph.has_edge(i, j) {
            h_plus[(i, k)] = 1;
        }
        if graph.has_edge(j, i) {
            h_plus[(j, k)] = -1;
        }
    }
    IncidenceMatrices { h, h_plus }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConnectivityReport {
    /// Vertices reachable by a directed path from every other vertex.
    pub globally_reachable: Vec<usize>,
    /// Strongly connected components, each sorted, listed by smallest member.
    pub sccs: Vec<Vec<usize>>,
    pub is_dag: bool,
    /// The graph is one directed cycle through every vertex.
    pub is_cycle: bool,
    pub strongly_connected: bool,
    /// Connected when edge directions are ignored.
    pub weakly_connected: bool,
}

impl ConnectivityReport {
    pub fn has_globally_reachable_node(&self) -> bool {
        !self.globally_reachable.is_empty()
    }
}

fn reachable_from(start: usize, adjacency: impl Fn(usize) -> Vec<usize>, n: usize) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(v) = stack.pop() {
        for w in adjacency(v) {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

pub fn classify_connectivity(graph: &DirectedGraph) -> ConnectivityReport {
    let n = graph.n();

    // v is globally reachable iff a search from v over reversed edges visits everything.
    let globally_reachable: Vec<usize> = (0..n)
        .filter(|&v| {
            reachable_from(v, |w| graph.in_neighbors(w).to_vec(), n)
                .iter()
                .all(|&s| s)
        })
        .collect();

    let sccs = strongly_connected_components(graph);
    let is_dag = sccs.len() == n;
    let strongly_connected = sccs.len() == 1;
    let is_cycle = n >= 2
        && strongly_connected
        && (0..n).all(|v| graph.out_degree(v) == 1 && graph.in_neighbors(v).len() == 1);
    let weakly_connected = reachable_from(0, |w| graph.neighbors(w), n)
        .iter()
        .all(|&s| s);

    ConnectivityReport {
        globally_reachable,
        sccs,
        is_dag,
        is_cycle,
        strongly_connected,
        weakly_connected,
    }
}

/// Tarjan's algorithm. Components are returned sorted internally and ordered
/// by their smallest vertex.
pub fn strongly_connected_components(graph: &DirectedGraph) -> Vec<Vec<usize>> {
    struct State<'a> {
        graph: &'a DirectedGraph,
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        out: Vec<Vec<usize>>,
    }

    fn visit(s: &mut State<'_>, v: usize) {
        s.index[v] = Some(s.next);
        s.low[v] = s.next;
        s.next += 1;
        s.stack.push(v);
        s.on_stack[v] = true;
        for &w in s.graph.out_neighbors(v) {
            match s.index[w] {
                None => {
                    visit(s, w);
                    s.low[v] = s.low[v].min(s.low[w]);
                }
                Some(iw) if s.on_stack[w] => s.low[v] = s.low[v].min(iw),
                Some(_) => {}
            }
        }
        if Some(s.low[v]) == s.index[v] {
            let mut comp = Vec::new();
            loop {
                let w = s.stack.pop().expect("tarjan stack underflow");
                s.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            comp.sort_unstable();
            s.out.push(comp);
        }
    }

    let n = graph.n();
    let mut s = State {
        graph,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for v in 0..n {
        if s.index[v].is_none() {
            visit(&mut s, v);
        }
    }
    let mut comps = s.out;
    comps.sort_by_key(|c| c[0]);
    comps
}

/// Longest-path distance from each vertex to a leaf (out-degree zero) of a DAG.
pub fn cascade_degrees(graph: &DirectedGraph) -> Result<Vec<usize>> {
    if !classify_connectivity(graph).is_dag {
        return Err(Error::NotADag);
    }
    fn degree(graph: &DirectedGraph, v: usize, memo: &mut [Option<usize>]) -> usize {
        if let Some(d) = memo[v] {
            return d;
        }
        let d = graph
            .out_neighbors(v)
            .iter()
            .map(|&w| 1 + degree(graph, w, memo))
            .max()
            .unwrap_or(0);
        memo[v] = Some(d);
        d
    }
    let mut memo = vec![None; graph.n()];
    Ok((0..graph.n()).map(|v| degree(graph, v, &mut memo)).collect())
}
