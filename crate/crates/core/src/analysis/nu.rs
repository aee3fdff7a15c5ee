//! Estimation of `ν = inf { ‖L̆x‖ : ‖Jx‖ = 1 }`.
//!
//! The infimum is not always attained at configurations with distinct
//! positions: collapsing a connected group of agents onto one point can give a
//! smaller field (a triangle with two coincident agents gives `√6`, while every
//! non-degenerate triangle gives `√8`). The search therefore runs over
//! *coincidence patterns*, partitions of the agents into blocks that each
//! induce a connected subgraph, and minimizes over the block positions of each
//! pattern. Within a block the field is averaged, which is the minimum-norm
//! velocity the merged agents can share.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{bearing_into, point};
use crate::graph::DirectedGraph;
use crate::parallel::{map_range, Execution};

#[derive(Debug, Clone)]
pub struct NuOptions {
    /// Restarts on the pattern with all agents distinct. Coarser patterns get
    /// fewer, see [`restarts_for_blocks`].
    pub restarts: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub step_tol: f64,
    /// Also search configurations where connected groups of agents coincide.
    /// Without this only distinct positions are searched, which can overestimate
    /// the rate seen by trajectories that merge.
    pub coincident_patterns: bool,
    /// Patterns are enumerated only up to this many agents; larger graphs
    /// search the all-distinct pattern alone.
    pub max_pattern_agents: usize,
    pub exec: Execution,
}

impl Default for NuOptions {
    fn default() -> Self {
        Self {
            restarts: 64,
            seed: 0,
            max_iter: 400,
            step_tol: 1e-10,
            coincident_patterns: true,
            max_pattern_agents: 8,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NuEstimate {
    /// Best value found. An upper bound on the true `ν`.
    pub value: f64,
    /// Stacked positions of the best configuration, centred with `‖Jx‖ = 1`.
    pub minimizer: Vec<f64>,
    /// Blocks of coincident agents in the best configuration.
    pub pattern: Vec<Vec<usize>>,
    pub restarts: usize,
    pub patterns_searched: usize,
    pub runs: usize,
    /// Runs that met the step tolerance before the iteration cap.
    pub converged_runs: usize,
}

/// `‖H u(x)‖`, the norm of the undirected consensus field.
pub fn gradient_norm(graph: &DirectedGraph, x: &[f64], d: usize, eps: f64) -> f64 {
    let mut g = vec![0.0; x.len()];
    let mut u = vec![0.0; d];
    for &(i, j) in graph.orientation() {
        bearing_into(point(x, d, i), point(x, d, j), eps, &mut u);
        for a in 0..d {
            g[i * d + a] += u[a];
            g[j * d + a] -= u[a];
        }
    }
    g.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Partitions of the agents into at least two blocks, each inducing a connected
/// subgraph of the undirected graph. The all-singletons partition comes first.
pub fn coincidence_patterns(graph: &DirectedGraph) -> Vec<Vec<Vec<usize>>> {
    let n = graph.n();
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    let mut labels = vec![0usize; n];
    fn rec(k: usize, max: usize, labels: &mut Vec<usize>, graph: &DirectedGraph, out: &mut Vec<Vec<Vec<usize>>>) {
        let n = labels.len();
        if k == n {
            let blocks = max + 1;
            if blocks < 2 {
                return;
            }
            let mut parts = vec![Vec::new(); blocks];
            for (i, &l) in labels.iter().enumerate() {
                parts[l].push(i);
            }
            if parts.iter().all(|p| induces_connected(graph, p)) {
                out.push(parts);
            }
            return;
        }
        for l in 0..=max + 1 {
            labels[k] = l;
            rec(k + 1, max.max(l), labels, graph, out);
        }
    }
    rec(1, 0, &mut labels, graph, &mut out);
    out.sort_by_key(|p| std::cmp::Reverse(p.len()));
    out
}

fn induces_connected(graph: &DirectedGraph, block: &[usize]) -> bool {
    if block.len() <= 1 {
        return true;
    }
    let mut seen = vec![block[0]];
    let mut stack = vec![block[0]];
    while let Some(v) = stack.pop() {
        for w in graph.neighbors(v) {
            if block.contains(&w) && !seen.contains(&w) {
                seen.push(w);
                stack.push(w);
            }
        }
    }
    seen.len() == block.len()
}

/// Restarts spent on a pattern with `blocks` blocks out of `n` agents: the full
/// budget for all-distinct, a quarter for each block removed, at least two
/// whenever the shape space is non-trivial.
pub fn restarts_for_blocks(restarts: usize, blocks: usize, n: usize) -> usize {
    if blocks <= 2 {
        return 1;
    }
    let shrink = 4f64.powi((n - blocks) as i32);
    ((restarts as f64 / shrink).ceil() as usize).max(2).min(restarts.max(1))
}

/// Checks connectivity, then runs [`estimate_nu_unchecked`].
pub fn estimate_nu(graph: &DirectedGraph, d: usize, opts: &NuOptions) -> Result<NuEstimate> {
    if !graph.connectivity().weakly_connected {
        return Err(Error::DisconnectedGraph);
    }
    estimate_nu_unchecked(graph, d, opts)
}

/// Searches without the connectivity precondition. On a disconnected graph the
/// components can be placed apart at rest, so the value is `0`.
pub fn estimate_nu_unchecked(graph: &DirectedGraph, d: usize, opts: &NuOptions) -> Result<NuEstimate> {
    let n = graph.n();
    if d == 0 || n < 2 {
        return Err(Error::InvalidGraph("need at least two agents in dimension >= 1".into()));
    }
    let patterns = if opts.coincident_patterns && n <= opts.max_pattern_agents {
        coincidence_patterns(graph)
    } else {
        vec![(0..n).map(|i| vec![i]).collect()]
    };
    let mut jobs = Vec::new();
    for (p, pattern) in patterns.iter().enumerate() {
        for r in 0..restarts_for_blocks(opts.restarts, pattern.len(), n) {
            jobs.push((p, r));
        }
    }
    let results = map_range(opts.exec, jobs.len(), |k| {
        let (p, r) = jobs[k];
        let problem = PatternProblem::new(graph, d, &patterns[p]);
        let seed = opts.seed ^ (p as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (r as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        problem.descend(&mut rng, opts)
    });
    let converged_runs = results.iter().filter(|r| r.converged).count();
    let (best_job, best) = results
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value).then(a.0.cmp(&b.0)))
        .expect("at least one pattern");
    let pattern = patterns[jobs[best_job].0].clone();
    let mut minimizer = vec![0.0; n * d];
    for (b, block) in pattern.iter().enumerate() {
        for &i in block {
            minimizer[i * d..(i + 1) * d].copy_from_slice(&best.y[b * d..(b + 1) * d]);
        }
    }
    Ok(NuEstimate {
        value: best.value,
        minimizer,
        pattern,
        restarts: opts.restarts,
        patterns_searched: patterns.len(),
        runs: jobs.len(),
        converged_runs,
    })
}

struct RunResult {
    value: f64,
    y: Vec<f64>,
    converged: bool,
}

/// Block-level objective `F(y) = Σ_C ‖s_C‖² / |C|`, with `s_C` the sum of the
/// bearings on edges leaving block `C`.
struct PatternProblem {
    d: usize,
    sizes: Vec<f64>,
    /// Block-level edges `(a, b, multiplicity)` with `a < b`.
    edges: Vec<(usize, usize, f64)>,
}

impl PatternProblem {
    fn new(graph: &DirectedGraph, d: usize, pattern: &[Vec<usize>]) -> Self {
        let mut block_of = vec![0; graph.n()];
        for (b, block) in pattern.iter().enumerate() {
            for &i in block {
                block_of[i] = b;
            }
        }
        let mut edges: Vec<(usize, usize, f64)> = Vec::new();
        for &(i, j) in graph.orientation() {
            let (a, b) = (block_of[i], block_of[j]);
            if a == b {
                continue;
            }
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            match edges.iter_mut().find(|e| e.0 == a && e.1 == b) {
                Some(e) => e.2 += 1.0,
                None => edges.push((a, b, 1.0)),
            }
        }
        Self {
            d,
            sizes: pattern.iter().map(|b| b.len() as f64).collect(),
            edges,
        }
    }

    fn blocks(&self) -> usize {
        self.sizes.len()
    }

    /// Returns `F` and fills `grad` unless the configuration has coincident blocks.
    fn eval(&self, y: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let d = self.d;
        let c = self.blocks();
        let mut s = vec![0.0; c * d];
        let mut units = Vec::with_capacity(self.edges.len());
        let mut u = vec![0.0; d];
        for &(a, b, m) in &self.edges {
            let dist = bearing_into(point(y, d, a), point(y, d, b), 0.0, &mut u);
            if dist == 0.0 {
                return f64::INFINITY;
            }
            for k in 0..d {
                s[a * d + k] += m * u[k];
                s[b * d + k] -= m * u[k];
            }
            units.push((u.clone(), dist));
        }
        let value: f64 = (0..c)
            .map(|b| point(&s, d, b).iter().map(|v| v * v).sum::<f64>() / self.sizes[b])
            .sum();
        if let Some(grad) = grad {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for (&(a, b, m), (u, dist)) in self.edges.iter().zip(&units) {
                let q: Vec<f64> = (0..d)
                    .map(|k| 2.0 * m * (s[a * d + k] / self.sizes[a] - s[b * d + k] / self.sizes[b]))
                    .collect();
                let uq: f64 = u.iter().zip(&q).map(|(p, r)| p * r).sum();
                for k in 0..d {
                    let pq = (q[k] - u[k] * uq) / dist;
                    grad[b * d + k] += pq;
                    grad[a * d + k] -= pq;
                }
            }
        }
        value
    }

    /// Weighted centring and scaling to `Σ |C| ‖y_C - ȳ‖² = 1`.
    fn normalize(&self, y: &mut [f64]) {
        let d = self.d;
        let total: f64 = self.sizes.iter().sum();
        let mut mean = vec![0.0; d];
        for (b, w) in self.sizes.iter().enumerate() {
            for k in 0..d {
                mean[k] += w * y[b * d + k] / total;
            }
        }
        for b in 0..self.blocks() {
            for k in 0..d {
                y[b * d + k] -= mean[k];
            }
        }
        let scale: f64 = self
            .sizes
            .iter()
            .enumerate()
            .map(|(b, w)| w * point(y, d, b).iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt();
        if scale > 0.0 {
            y.iter_mut().for_each(|v| *v /= scale);
        }
    }

    fn descend(&self, rng: &mut ChaCha8Rng, opts: &NuOptions) -> RunResult {
        let dim = self.blocks() * self.d;
        let mut y: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        self.normalize(&mut y);
        let mut grad = vec![0.0; dim];
        let mut f = self.eval(&y, Some(&mut grad));
        if self.blocks() <= 2 {
            return RunResult { value: f.sqrt(), y, converged: true };
        }
        let mut alpha = 0.1;
        let mut converged = false;
        let mut trial = vec![0.0; dim];
        for _ in 0..opts.max_iter {
            let g2: f64 = grad.iter().map(|g| g * g).sum();
            if g2 < 1e-28 {
                converged = true;
                break;
            }
            let mut accepted = None;
            alpha *= 2.0;
            while alpha > 1e-16 {
                for k in 0..dim {
                    trial[k] = y[k] - alpha * grad[k];
                }
                self.normalize(&mut trial);
                let ft = self.eval(&trial, None);
                if ft <= f - 1e-4 * alpha * g2 {
                    accepted = Some(ft);
                    break;
                }
                alpha *= 0.5;
            }
            let Some(ft) = accepted else {
                converged = true;
                break;
            };
            let step: f64 = trial.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            std::mem::swap(&mut y, &mut trial);
            f = self.eval(&y, Some(&mut grad));
            debug_assert!((f - ft).abs() <= 1e-12 * (1.0 + f));
            if step < opts.step_tol {
                converged = true;
                break;
            }
        }
        RunResult { value: f.max(0.0).sqrt(), y, converged }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> NuOptions {
        NuOptions { restarts: 16, ..NuOptions::default() }
    }

    #[test]
    fn single_edge_is_root_two() {
        let g = DirectedGraph::undirected(2, [(0, 1)]).unwrap();
        let est = estimate_nu(&g, 2, &quick()).unwrap();
        assert!((est.value - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn disconnected_pair() {
        let g = DirectedGraph::new(2, []).unwrap();
        assert!(matches!(estimate_nu(&g, 2, &quick()), Err(Error::DisconnectedGraph)));
        assert_eq!(estimate_nu_unchecked(&g, 2, &quick()).unwrap().value, 0.0);
    }

    #[test]
    fn triangle_minimum_is_a_coincident_pair() {
        let g = DirectedGraph::undirected(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let est = estimate_nu(&g, 2, &quick()).unwrap();
        assert!((est.value - 6f64.sqrt()).abs() < 1e-9, "{}", est.value);
        assert_eq!(est.pattern.len(), 2);
    }

    #[test]
    fn patterns_are_connected_partitions() {
        let path = DirectedGraph::undirected(3, [(0, 1), (1, 2)]).unwrap();
        // {0}{1}{2}, {01}{2}, {0}{12}; {02}{1} is not connected.
        assert_eq!(coincidence_patterns(&path).len(), 3);
        let k4 = DirectedGraph::undirected(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        // Bell(4) minus the single-block partition.
        assert_eq!(coincidence_patterns(&k4).len(), 14);
    }

    #[test]
    fn pattern_gradient_matches_finite_differences() {
        let g = DirectedGraph::undirected(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 2), (1, 4)]).unwrap();
        let pattern = vec![vec![0], vec![1, 2], vec![3], vec![4]];
        let prob = PatternProblem::new(&g, 2, &pattern);
        let y = [0.3, -0.2, 1.1, 0.4, -0.7, 0.9, 0.2, -1.3];
        let mut grad = vec![0.0; 8];
        prob.eval(&y, Some(&mut grad));
        for k in 0..8 {
            let h = 1e-6;
            let mut yp = y;
            let mut ym = y;
            yp[k] += h;
            ym[k] -= h;
            let fd = (prob.eval(&yp, None) - prob.eval(&ym, None)) / (2.0 * h);
            assert!((fd - grad[k]).abs() < 1e-6, "{k}: {fd} vs {}", grad[k]);
        }
    }

    #[test]
    fn seeded_runs_are_reproducible() {
        let g = DirectedGraph::undirected(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let a = estimate_nu(&g, 2, &quick()).unwrap();
        let b = estimate_nu(&g, 2, &NuOptions { exec: Execution::Sequential, ..quick() }).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.minimizer, b.minimizer);
    }
}
