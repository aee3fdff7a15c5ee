//! Generators and brute-force oracles shared by the integration tests. None of
//! them call into the library's numerics.

#![allow(dead_code)]

use std::sync::Arc;

use bearing_flows::{DirectedGraph, Formation};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn random_points<R: Rng>(rng: &mut R, n: usize, d: usize) -> Vec<f64> {
    (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// Points whose pairwise distances are all at least `min_gap`.
pub fn spread_points<R: Rng>(rng: &mut R, n: usize, d: usize, min_gap: f64) -> Vec<f64> {
    loop {
        let x = random_points(rng, n, d);
        let ok = (0..n).all(|i| (i + 1..n).all(|j| dist(&x[i * d..(i + 1) * d], &x[j * d..(j + 1) * d]) >= min_gap));
        if ok {
            return x;
        }
    }
}

/// Random spanning tree plus each remaining pair with probability `p`.
pub fn random_connected_pairs<R: Rng>(rng: &mut R, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut pairs = Vec::new();
    for k in 1..n {
        let parent = order[rng.random_range(0..k)];
        let child = order[k];
        pairs.push((parent.min(child), parent.max(child)));
    }
    for i in 0..n {
        for j in i + 1..n {
            if !pairs.contains(&(i, j)) && rng.random_bool(p) {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

pub fn random_connected_undirected<R: Rng>(rng: &mut R, n: usize, p: f64) -> DirectedGraph {
    DirectedGraph::undirected(n, random_connected_pairs(rng, n, p)).unwrap()
}

/// Directed graph in which `root` is reachable from every vertex: a random
/// in-tree towards `root` plus extra random edges with probability `p`.
pub fn random_rooted_digraph<R: Rng>(rng: &mut R, n: usize, p: f64, root_is_leader: bool) -> DirectedGraph {
    let root = 0;
    let mut edges = Vec::new();
    for k in 1..n {
        let parent = rng.random_range(0..k);
        edges.push((k, parent));
    }
    for i in 0..n {
        for j in 0..n {
            if i == j || edges.contains(&(i, j)) || (root_is_leader && i == root) {
                continue;
            }
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    DirectedGraph::new(n, edges).unwrap()
}

pub fn formation(graph: DirectedGraph, x: Vec<f64>, d: usize) -> Formation {
    Formation::new(Arc::new(graph), d, x).unwrap()
}

/// Transitive closure by repeated squaring of the boolean adjacency matrix.
pub fn reachability(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut r = vec![vec![false; n]; n];
    for i in 0..n {
        r[i][i] = true;
    }
    for &(i, j) in edges {
        r[i][j] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if r[i][k] && r[k][j] {
                    r[i][j] = true;
                }
            }
        }
    }
    r
}

/// Minimizer of `Σ‖p_i - y‖ + v*ᵀy` in the plane: dense grid over a box around
/// the foci, then compass search with shrinking steps from the best cells and
/// from every focus.
pub fn fermat_grid_oracle(foci: &[[f64; 2]], v: [f64; 2]) -> [f64; 2] {
    let g = |y: [f64; 2]| foci.iter().map(|p| ((p[0] - y[0]).powi(2) + (p[1] - y[1]).powi(2)).sqrt()).sum::<f64>() + v[0] * y[0] + v[1] * y[1];
    let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
    for p in foci {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1.0);
    let k = foci.len() as f64;
    let margin = span * (2.0 + 4.0 * k / (k - (v[0] * v[0] + v[1] * v[1]).sqrt()).max(1e-3));
    let m = 400;
    let mut cells: Vec<(f64, [f64; 2])> = Vec::new();
    for i in 0..=m {
        for j in 0..=m {
            let y = [
                lo[0] - margin + (hi[0] - lo[0] + 2.0 * margin) * i as f64 / m as f64,
                lo[1] - margin + (hi[1] - lo[1] + 2.0 * margin) * j as f64 / m as f64,
            ];
            cells.push((g(y), y));
        }
    }
    cells.sort_by(|a, b| a.0.total_cmp(&b.0));
    let step0 = (hi[0] - lo[0] + 2.0 * margin) / m as f64;
    let mut starts: Vec<[f64; 2]> = cells.iter().take(5).map(|c| c.1).collect();
    starts.extend(foci.iter().copied());
    let dirs: Vec<[f64; 2]> = (0..16)
        .map(|t| {
            let a = t as f64 * std::f64::consts::PI / 8.0;
            [a.cos(), a.sin()]
        })
        .collect();
    let mut best = (f64::MAX, [0.0; 2]);
    for s in starts {
        let mut y = s;
        let mut fy = g(y);
        let mut h = step0;
        while h > 1e-13 {
            let mut moved = false;
            for d in &dirs {
                let t = [y[0] + h * d[0], y[1] + h * d[1]];
                let ft = g(t);
                if ft < fy {
                    y = t;
                    fy = ft;
                    moved = true;
                }
            }
            if !moved {
                h *= 0.5;
            }
        }
        if fy < best.0 {
            best = (fy, y);
        }
    }
    best.1
}
