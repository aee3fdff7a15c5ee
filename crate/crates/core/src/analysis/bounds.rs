use serde::{Deserialize, Serialize};

use crate::controllers::phi_tilde;
use crate::error::{Error, Result};
use crate::geometry::Formation;

/// Upper bound `φ̃(x₀) / ν²` on the undirected consensus time.
pub fn finite_time_bound(f0: &Formation, nu: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::NonPositiveNu(nu));
    }
    Ok(phi_tilde(f0) / (nu * nu))
}

/// Which cycles count as Hamiltonian when measuring `l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HamiltonianMetric {
    /// Directed cycles along graph edges.
    #[default]
    GraphCycle,
    /// Any cyclic ordering of the agents, measured in the complete geometric graph.
    CompleteGeometric,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConjectureBound {
    pub metric: HamiltonianMetric,
    /// Length of the longest Hamiltonian cycle.
    pub l: f64,
    /// The cycle achieving `l`, as 0-based agents starting at agent 0.
    pub cycle: Vec<usize>,
    /// `(l / 2n) sec²(π/n)`.
    pub bound: f64,
    /// `(l / n) sec²(π/n)`, twice `bound`.
    pub doubled_bound: f64,
}

pub const MAX_HAMILTONIAN_AGENTS: usize = 10;

/// Directed-consensus conjecture bound from the longest Hamiltonian cycle of the
/// initial formation.
pub fn conjecture_bound(f0: &Formation, metric: HamiltonianMetric) -> Result<ConjectureBound> {
    let g = f0.graph();
    let n = g.n();
    if n > MAX_HAMILTONIAN_AGENTS {
        return Err(Error::TooLarge(n, MAX_HAMILTONIAN_AGENTS));
    }
    if !g.connectivity().strongly_connected {
        return Err(Error::NotStronglyConnected);
    }
    if n <= 2 {
        return Err(Error::UndefinedBound("sec(π/n) has a pole at n = 2".into()));
    }
    let allowed = |i: usize, j: usize| match metric {
        HamiltonianMetric::GraphCycle => g.has_edge(i, j),
        HamiltonianMetric::CompleteGeometric => i != j,
    };
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut path = vec![0];
    let mut used = vec![false; n];
    used[0] = true;
    search(f0, &allowed, &mut path, &mut used, 0.0, &mut best);
    let (l, cycle) = best.ok_or(Error::NoHamiltonianCycle)?;
    let sec2 = 1.0 / (std::f64::consts::PI / n as f64).cos().powi(2);
    Ok(ConjectureBound {
        metric,
        l,
        cycle,
        bound: l / (2.0 * n as f64) * sec2,
        doubled_bound: l / n as f64 * sec2,
    })
}

fn search(
    f: &Formation,
    allowed: &dyn Fn(usize, usize) -> bool,
    path: &mut Vec<usize>,
    used: &mut [bool],
    length: f64,
    best: &mut Option<(f64, Vec<usize>)>,
) {
    let n = used.len();
    let last = *path.last().unwrap();
    if path.len() == n {
        if allowed(last, 0) {
            let total = length + f.distance(last, 0);
            if best.as_ref().is_none_or(|b| total > b.0) {
                *best = Some((total, path.clone()));
            }
        }
        return;
    }
    for next in 1..n {
        if !used[next] && allowed(last, next) {
            used[next] = true;
            path.push(next);
            search(f, allowed, path, used, length + f.distance(last, next), best);
            path.pop();
            used[next] = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DirectedGraph;
    use std::sync::Arc;

    fn square(edges: &[(usize, usize)]) -> Formation {
        let g = Arc::new(DirectedGraph::new(4, edges.iter().copied()).unwrap());
        Formation::from_points(g, &[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap()
    }

    #[test]
    fn unit_square_cycle() {
        let f = square(&[(0, 1), (1, 2), (2, 3), (3, 0)]);
        let b = conjecture_bound(&f, HamiltonianMetric::GraphCycle).unwrap();
        assert!((b.l - 4.0).abs() < 1e-12);
        assert!((b.bound - 1.0).abs() < 1e-12);
        assert!((b.doubled_bound - 2.0).abs() < 1e-12);
        let c = conjecture_bound(&f, HamiltonianMetric::CompleteGeometric).unwrap();
        assert!((c.l - (2.0 + 2.0 * 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn error_paths() {
        let f = square(&[(0, 1), (1, 2), (2, 3)]);
        assert!(matches!(conjecture_bound(&f, HamiltonianMetric::GraphCycle), Err(Error::NotStronglyConnected)));
        let g = Arc::new(DirectedGraph::undirected(2, [(0, 1)]).unwrap());
        let pair = Formation::from_points(g, &[[0.0, 0.0], [2.0, 0.0]]).unwrap();
        assert!(matches!(conjecture_bound(&pair, HamiltonianMetric::GraphCycle), Err(Error::UndefinedBound(_))));
        // Two triangles sharing agent 0 are strongly connected without a Hamiltonian cycle.
        let g = Arc::new(DirectedGraph::new(5, [(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 0)]).unwrap());
        let bow = Formation::from_points(g, &[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [-1.0, 0.0], [-1.0, 1.0]]).unwrap();
        assert!(matches!(conjecture_bound(&bow, HamiltonianMetric::GraphCycle), Err(Error::NoHamiltonianCycle)));
        assert!(conjecture_bound(&bow, HamiltonianMetric::CompleteGeometric).is_ok());
    }

    #[test]
    fn finite_time_bound_values() {
        let g = Arc::new(DirectedGraph::undirected(2, [(0, 1)]).unwrap());
        let f = Formation::from_points(g.clone(), &[[0.0, 0.0], [2.0, 0.0]]).unwrap();
        assert!((finite_time_bound(&f, 2f64.sqrt()).unwrap() - 1.0).abs() < 1e-12);
        let at_rest = Formation::from_points(g, &[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert_eq!(finite_time_bound(&at_rest, 1.0).unwrap(), 0.0);
        assert!(matches!(finite_time_bound(&f, 0.0), Err(Error::NonPositiveNu(_))));
    }
}
