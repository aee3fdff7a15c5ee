//! The four bearing-only control laws as velocity fields over formations.
//!
//! Each agent sums `u_ij - u*_ij` over the neighbors it senses: every neighbor
//! for the undirected kinds, out-neighbors only for the directed kinds. For
//! consensus `u* = 0`. Coincident neighbors contribute the zero bearing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{bearing_into, distance, point, BearingTarget, Formation};
use crate::graph::DirectedGraph;

#[derive(Debug, Clone, PartialEq)]
pub enum ControllerKind {
    ConsensusUndirected,
    ConsensusDirected,
    FormationUndirected(BearingTarget),
    FormationDirected(BearingTarget),
}

/// Controller family without the target, as selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerFamily {
    Consensus,
    Formation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Undirected,
    Directed,
}

impl ControllerKind {
    pub fn new(family: ControllerFamily, topology: Topology, target: Option<BearingTarget>) -> Result<Self> {
        match (family, topology, target) {
            (ControllerFamily::Consensus, Topology::Undirected, _) => Ok(Self::ConsensusUndirected),
            (ControllerFamily::Consensus, Topology::Directed, _) => Ok(Self::ConsensusDirected),
            (ControllerFamily::Formation, Topology::Undirected, Some(t)) => Ok(Self::FormationUndirected(t)),
            (ControllerFamily::Formation, Topology::Directed, Some(t)) => Ok(Self::FormationDirected(t)),
            (ControllerFamily::Formation, _, None) => Err(Error::MissingTarget),
        }
    }

    pub fn is_directed(&self) -> bool {
        matches!(self, Self::ConsensusDirected | Self::FormationDirected(_))
    }

    pub fn is_formation(&self) -> bool {
        self.target().is_some()
    }

    pub fn target(&self) -> Option<&BearingTarget> {
        match self {
            Self::FormationUndirected(t) | Self::FormationDirected(t) => Some(t),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::ConsensusUndirected => "consensus/undirected",
            Self::ConsensusDirected => "consensus/directed",
            Self::FormationUndirected(_) => "formation/undirected",
            Self::FormationDirected(_) => "formation/directed",
        }
    }
}

/// One sensed pair: `agent` measures `other` and wants bearing `desired`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub agent: usize,
    pub other: usize,
    pub desired: Vec<f64>,
}

/// A controller compiled against a graph.
#[derive(Debug, Clone)]
pub struct VelocityField {
    d: usize,
    n: usize,
    directed: bool,
    formation: bool,
    terms: Vec<Term>,
    /// Orientation pairs with the desired bearing of `(i, j)`, for `ψ`.
    pairs: Vec<Term>,
}

impl VelocityField {
    pub fn new(kind: &ControllerKind, graph: &DirectedGraph, d: usize) -> Result<Self> {
        let zero = vec![0.0; d];
        let desired = |i: usize, j: usize| -> Result<Vec<f64>> {
            match kind.target() {
                None => Ok(zero.clone()),
                Some(t) => {
                    if t.d() != d {
                        return Err(Error::InvalidTarget(format!(
                            "target dimension {} does not match formation dimension {d}",
                            t.d()
                        )));
                    }
                    t.bearing(i, j).ok_or(Error::TargetMissingEdge(i, j))
                }
            }
        };

        let mut terms = Vec::new();
        if kind.is_directed() {
            for &(i, j) in graph.edges() {
                terms.push(Term { agent: i, other: j, desired: desired(i, j)? });
            }
        } else {
            for &(i, j) in graph.orientation() {
                let u = desired(i, j)?;
                let back = u.iter().map(|v| -v).collect();
                terms.push(Term { agent: i, other: j, desired: u });
                terms.push(Term { agent: j, other: i, desired: back });
            }
            terms.sort_by_key(|t| (t.agent, t.other));
        }

        let pairs = graph
            .orientation()
            .iter()
            .map(|&(i, j)| {
                let u = if kind.is_directed() && !graph.has_edge(i, j) {
                    desired(j, i)?.iter().map(|v| -v).collect()
                } else {
                    desired(i, j)?
                };
                Ok(Term { agent: i, other: j, desired: u })
            })
            .collect::<Result<_>>()?;

        Ok(Self {
            d,
            n: graph.n(),
            directed: kind.is_directed(),
            formation: kind.is_formation(),
            terms,
            pairs,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn is_formation(&self) -> bool {
        self.formation
    }

    /// Sensed pairs sorted by agent.
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn velocity_into(&self, x: &[f64], eps: f64, out: &mut [f64]) {
        let d = self.d;
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut u = vec![0.0; d];
        for t in &self.terms {
            bearing_into(point(x, d, t.agent), point(x, d, t.other), eps, &mut u);
            let o = &mut out[t.agent * d..(t.agent + 1) * d];
            for a in 0..d {
                o[a] += u[a] - t.desired[a];
            }
        }
    }

    pub fn velocity(&self, x: &[f64], eps: f64) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.velocity_into(x, eps, &mut out);
        out
    }

    /// `Σ ½ d_ij ‖u_ij - u*_ij‖²` over orientation pairs (`u* = 0` for consensus).
    pub fn psi(&self, x: &[f64], eps: f64) -> f64 {
        let d = self.d;
        let mut u = vec![0.0; d];
        self.pairs
            .iter()
            .map(|t| {
                let dist = bearing_into(point(x, d, t.agent), point(x, d, t.other), eps, &mut u);
                let err: f64 = u.iter().zip(&t.desired).map(|(a, b)| (a - b) * (a - b)).sum();
                0.5 * dist * err
            })
            .sum()
    }

    /// Largest `‖u_ij - u*_ij‖` over the sensed pairs.
    pub fn max_bearing_error(&self, x: &[f64], eps: f64) -> f64 {
        let d = self.d;
        let mut u = vec![0.0; d];
        self.terms
            .iter()
            .map(|t| {
                bearing_into(point(x, d, t.agent), point(x, d, t.other), eps, &mut u);
                u.iter()
                    .zip(&t.desired)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Agent `i`'s private objective: `Σ_j d_ij` for consensus, `Σ_j ½ d_ij ‖u_ij - u*_ij‖²`
    /// for formation, over the neighbors `i` senses.
    pub fn private_potential(&self, x: &[f64], eps: f64, i: usize) -> f64 {
        let d = self.d;
        let mut u = vec![0.0; d];
        self.terms
            .iter()
            .filter(|t| t.agent == i)
            .map(|t| {
                if self.formation {
                    let dist = bearing_into(point(x, d, i), point(x, d, t.other), eps, &mut u);
                    let err: f64 = u.iter().zip(&t.desired).map(|(a, b)| (a - b) * (a - b)).sum();
                    0.5 * dist * err
                } else {
                    distance(point(x, d, i), point(x, d, t.other))
                }
            })
            .sum()
    }
}

/// Stacked velocity `ẋ` of every agent.
pub fn velocity(kind: &ControllerKind, f: &Formation) -> Result<Vec<f64>> {
    let field = VelocityField::new(kind, f.graph(), f.d())?;
    Ok(field.velocity(f.positions(), f.eps_c()))
}

pub fn private_potential(kind: &ControllerKind, f: &Formation, i: usize) -> Result<f64> {
    let field = VelocityField::new(kind, f.graph(), f.d())?;
    Ok(field.private_potential(f.positions(), f.eps_c(), i))
}

/// `φ̃ = Σ d_ij` over undirected edges.
pub fn phi_tilde(f: &Formation) -> f64 {
    f.graph()
        .orientation()
        .iter()
        .map(|&(i, j)| f.distance(i, j))
        .sum()
}
