//! Positions, bearings, projection matrices and the formation-level matrices.
//!
//! Positions are stacked as `x = (x_1, ..., x_n)` with each `x_i ∈ ℝ^d`.
//! A bearing between two agents closer than the coincidence threshold is the
//! zero vector.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;

/// Relative coincidence threshold, scaled by the formation diameter.
pub const COINCIDENCE_RELATIVE: f64 = 1e-9;
/// Absolute floor on the coincidence threshold.
pub const COINCIDENCE_FLOOR: f64 = 1e-12;
/// Default tolerance on bearing differences for [`classify_pair`].
pub const EQUIVALENCE_TOL: f64 = 1e-6;
/// Relative singular-value cutoff for numerical rank.
pub const RANK_RTOL: f64 = 1e-10;

pub(crate) fn point(x: &[f64], d: usize, i: usize) -> &[f64] {
    &x[i * d..(i + 1) * d]
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (q - p) * (q - p))
        .sum::<f64>()
        .sqrt()
}

/// Largest pairwise distance among the `n` stacked points.
pub fn diameter(x: &[f64], d: usize) -> f64 {
    let n = x.len() / d;
    let mut best = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            best = best.max(distance(point(x, d, i), point(x, d, j)));
        }
    }
    best
}

pub fn coincidence_threshold(x: &[f64], d: usize) -> f64 {
    (COINCIDENCE_RELATIVE * diameter(x, d)).max(COINCIDENCE_FLOOR)
}

/// Writes the bearing from `xi` to `xj` into `out` and returns the distance.
/// Writes zeros when the points are within `eps`.
pub(crate) fn bearing_into(xi: &[f64], xj: &[f64], eps: f64, out: &mut [f64]) -> f64 {
    let mut dist = 0.0;
    for ((o, a), b) in out.iter_mut().zip(xi).zip(xj) {
        *o = b - a;
        dist += *o * *o;
    }
    let dist = dist.sqrt();
    if dist <= eps {
        out.iter_mut().for_each(|o| *o = 0.0);
    } else {
        out.iter_mut().for_each(|o| *o /= dist);
    }
    dist
}

/// Unit vector from `xi` towards `xj`, or zero when they are within `eps`.
pub fn bearing(xi: &[f64], xj: &[f64], eps: f64) -> Vec<f64> {
    let mut out = vec![0.0; xi.len()];
    bearing_into(xi, xj, eps, &mut out);
    out
}

/// `P(v) = I - v vᵀ / ‖v‖²`.
pub fn projection_matrix(v: &[f64]) -> Result<DMatrix<f64>> {
    let nrm2: f64 = v.iter().map(|a| a * a).sum();
    if nrm2.sqrt() <= COINCIDENCE_FLOOR {
        return Err(Error::ZeroVector);
    }
    let d = v.len();
    Ok(DMatrix::from_fn(d, d, |r, c| {
        let id = if r == c { 1.0 } else { 0.0 };
        id - v[r] * v[c] / nrm2
    }))
}

/// Kronecker product `m ⊗ I_d`.
pub fn inflate(m: &DMatrix<f64>, d: usize) -> DMatrix<f64> {
    m.kronecker(&DMatrix::identity(d, d))
}

/// A sensing graph paired with stacked positions.
#[derive(Debug, Clone)]
pub struct Formation {
    graph: Arc<DirectedGraph>,
    d: usize,
    x: Vec<f64>,
    eps_c: f64,
}

impl Formation {
    pub fn new(graph: Arc<DirectedGraph>, d: usize, x: Vec<f64>) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidFormation(format!("dimension must be at least 2, got {d}")));
        }
        if x.len() != d * graph.n() {
            return Err(Error::InvalidFormation(format!(
                "expected {} coordinates for {} agents in dimension {d}, got {}",
                d * graph.n(),
                graph.n(),
                x.len()
            )));
        }
        if let Some(k) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidFormation(format!(
                "coordinate {} of agent {} is not finite",
                k % d + 1,
                k / d + 1
            )));
        }
        let eps_c = coincidence_threshold(&x, d);
        Ok(Self { graph, d, x, eps_c })
    }

    pub fn from_points<P: AsRef<[f64]>>(graph: Arc<DirectedGraph>, points: &[P]) -> Result<Self> {
        let d = points.first().map(|p| p.as_ref().len()).unwrap_or(0);
        if points.iter().any(|p| p.as_ref().len() != d) {
            return Err(Error::InvalidFormation("points have differing dimensions".into()));
        }
        let x = points.iter().flat_map(|p| p.as_ref().iter().copied()).collect();
        Self::new(graph, d, x)
    }

    /// Same graph and coincidence threshold, new positions.
    pub fn with_positions(&self, x: Vec<f64>) -> Result<Self> {
        let mut f = Self::new(self.graph.clone(), self.d, x)?;
        f.eps_c = self.eps_c;
        Ok(f)
    }

    pub fn with_eps(mut self, eps_c: f64) -> Self {
        self.eps_c = eps_c;
        self
    }

    pub fn graph(&self) -> &DirectedGraph {
        &self.graph
    }

    pub fn graph_arc(&self) -> &Arc<DirectedGraph> {
        &self.graph
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn positions(&self) -> &[f64] {
        &self.x
    }

    pub fn point(&self, i: usize) -> &[f64] {
        point(&self.x, self.d, i)
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.x.chunks(self.d).map(<[f64]>::to_vec).collect()
    }

    /// Coincidence threshold `ε_c` fixed when the formation was first built.
    pub fn eps_c(&self) -> f64 {
        self.eps_c
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        distance(self.point(i), self.point(j))
    }

    pub fn bearing(&self, i: usize, j: usize) -> Vec<f64> {
        bearing(self.point(i), self.point(j), self.eps_c)
    }

    pub fn centroid(&self) -> Vec<f64> {
        centroid(&self.x, self.d)
    }

    pub fn diameter(&self) -> f64 {
        diameter(&self.x, self.d)
    }

    /// First graph edge whose endpoints coincide, if any.
    pub fn coincident_edge(&self) -> Option<(usize, usize)> {
        self.graph
            .orientation()
            .iter()
            .copied()
            .find(|&(i, j)| self.distance(i, j) <= self.eps_c)
    }

    pub fn to_spec(&self) -> FormationSpec {
        FormationSpec {
            d: self.d,
            positions: self.points(),
        }
    }
}

pub(crate) fn centroid(x: &[f64], d: usize) -> Vec<f64> {
    let n = x.len() / d;
    let mut c = vec![0.0; d];
    for p in x.chunks(d) {
        for (ci, pi) in c.iter_mut().zip(p) {
            *ci += pi;
        }
    }
    c.iter_mut().for_each(|v| *v /= n as f64);
    c
}

/// Fragment of a scenario document: `{"d": 2, "positions": [[x, y], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormationSpec {
    pub d: usize,
    pub positions: Vec<Vec<f64>>,
}

impl FormationSpec {
    pub fn build(&self, graph: Arc<DirectedGraph>) -> Result<Formation> {
        if self.positions.len() != graph.n() {
            return Err(Error::InvalidFormation(format!(
                "graph has {} vertices but {} positions were given",
                graph.n(),
                self.positions.len()
            )));
        }
        if let Some(k) = self.positions.iter().position(|p| p.len() != self.d) {
            return Err(Error::InvalidFormation(format!(
                "position {} has {} coordinates, expected d = {}",
                k + 1,
                self.positions[k].len(),
                self.d
            )));
        }
        Formation::new(graph, self.d, self.positions.concat())
    }
}

/// Desired unit bearings `u*_ij` per directed edge, optionally with the target
/// distances `d*_ij` when derived from a target formation.
#[derive(Debug, Clone, PartialEq)]
pub struct BearingTarget {
    d: usize,
    bearings: BTreeMap<(usize, usize), Vec<f64>>,
    distances: Option<BTreeMap<(usize, usize), f64>>,
}

const UNIT_TOL: f64 = 1e-12;

impl BearingTarget {
    /// Explicit unit vectors. Vectors must have unit norm and reversed pairs
    /// must be antiparallel, both within 1e-12.
    pub fn from_bearings(d: usize, bearings: BTreeMap<(usize, usize), Vec<f64>>) -> Result<Self> {
        for (&(i, j), u) in &bearings {
            if u.len() != d {
                return Err(Error::InvalidTarget(format!(
                    "bearing for ({}, {}) has dimension {}, expected {d}",
                    i + 1,
                    j + 1,
                    u.len()
                )));
            }
            if (norm(u) - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidTarget(format!(
                    "bearing for ({}, {}) is not a unit vector",
                    i + 1,
                    j + 1
                )));
            }
            if let Some(r) = bearings.get(&(j, i)) {
                if u.iter().zip(r).any(|(a, b)| (a + b).abs() > UNIT_TOL) {
                    return Err(Error::InvalidTarget(format!(
                        "bearings for ({0}, {1}) and ({1}, {0}) are not opposite",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self {
            d,
            bearings,
            distances: None,
        })
    }

    /// Bearings and distances of a target formation, for every directed edge
    /// of its graph.
    pub fn from_formation(target: &Formation) -> Result<Self> {
        let mut bearings = BTreeMap::new();
        let mut distances = BTreeMap::new();
        for &(i, j) in target.graph().edges() {
            let dist = target.distance(i, j);
            if dist <= target.eps_c() {
                return Err(Error::DegenerateFormation(i, j));
            }
            bearings.insert((i, j), target.bearing(i, j));
            distances.insert((i, j), dist);
        }
        Ok(Self {
            d: target.d(),
            bearings,
            distances: Some(distances),
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn bearings(&self) -> &BTreeMap<(usize, usize), Vec<f64>> {
        &self.bearings
    }

    pub fn has_distances(&self) -> bool {
        self.distances.is_some()
    }

    /// `u*_ij`, falling back to `-u*_ji` when only the reverse is stored.
    pub fn bearing(&self, i: usize, j: usize) -> Option<Vec<f64>> {
        if let Some(u) = self.bearings.get(&(i, j)) {
            return Some(u.clone());
        }
        self.bearings
            .get(&(j, i))
            .map(|u| u.iter().map(|v| -v).collect())
    }

    /// `d*_ij` in either direction.
    pub fn distance(&self, i: usize, j: usize) -> Option<f64> {
        let dist = self.distances.as_ref()?;
        dist.get(&(i, j)).or_else(|| dist.get(&(j, i))).copied()
    }

    /// Checks that every directed edge has a desired bearing (directly or via
    /// its reverse when `allow_reverse`).
    pub fn covers(&self, graph: &DirectedGraph, allow_reverse: bool) -> Result<()> {
        for &(i, j) in graph.edges() {
            let ok = self.bearings.contains_key(&(i, j))
                || (allow_reverse && self.bearings.contains_key(&(j, i)));
            if !ok {
                return Err(Error::TargetMissingEdge(i, j));
            }
        }
        Ok(())
    }
}

/// Fragment of a scenario document describing a bearing target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSpec {
    /// Derive bearings from target positions.
    FromPositions { targets_from: Vec<Vec<f64>> },
    /// Explicit bearings; vectors are normalized on ingestion.
    Explicit { bearings: Vec<EdgeBearing> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeBearing {
    pub edge: [usize; 2],
    pub u: Vec<f64>,
}

impl TargetSpec {
    pub fn build(&self, graph: &Arc<DirectedGraph>, d: usize) -> Result<BearingTarget> {
        match self {
            TargetSpec::FromPositions { targets_from } => {
                let spec = FormationSpec {
                    d,
                    positions: targets_from.clone(),
                };
                BearingTarget::from_formation(&spec.build(graph.clone())?)
            }
            TargetSpec::Explicit { bearings } => {
                let mut map = BTreeMap::new();
                for eb in bearings {
                    let [i, j] = eb.edge;
                    if i == 0 || j == 0 || i > graph.n() || j > graph.n() {
                        return Err(Error::InvalidTarget(format!(
                            "edge [{i}, {j}] is outside 1..={}",
                            graph.n()
                        )));
                    }
                    let len = norm(&eb.u);
                    if len <= COINCIDENCE_FLOOR {
                        return Err(Error::InvalidTarget(format!("bearing for [{i}, {j}] is zero")));
                    }
                    map.insert((i - 1, j - 1), eb.u.iter().map(|v| v / len).collect::<Vec<f64>>());
                }
                // Reverse entries are re-derived so antisymmetry holds exactly.
                let keys: Vec<_> = map.keys().copied().collect();
                for (i, j) in keys {
                    if i > j && map.contains_key(&(j, i)) {
                        let rev: Vec<f64> = map[&(j, i)].iter().map(|v| -v).collect();
                        let cur = &map[&(i, j)];
                        if cur.iter().zip(&rev).any(|(a, b)| (a - b).abs() > 1e-6) {
                            return Err(Error::InvalidTarget(format!(
                                "bearings for [{0}, {1}] and [{1}, {0}] are not opposite",
                                j + 1,
                                i + 1
                            )));
                        }
                        map.insert((i, j), rev);
                    }
                }
                BearingTarget::from_bearings(d, map)
            }
        }
    }
}

/// Bearings of the orientation edges stacked in orientation order (`dm` entries).
pub fn stacked_bearings(f: &Formation) -> Vec<f64> {
    let d = f.d();
    let mut u = vec![0.0; d * f.graph().m()];
    for (k, &(i, j)) in f.graph().orientation().iter().enumerate() {
        bearing_into(f.point(i), f.point(j), f.eps_c(), &mut u[k * d..(k + 1) * d]);
    }
    u
}

/// Edge weights `w_k = 1/d_k`, or zero for coincident endpoints.
pub fn edge_weights(f: &Formation) -> Vec<f64> {
    f.graph()
        .orientation()
        .iter()
        .map(|&(i, j)| {
            let dist = f.distance(i, j);
            if dist > f.eps_c() {
                1.0 / dist
            } else {
                0.0
            }
        })
        .collect()
}

/// `L̆ = H diag(w) Hᵀ`, `n x n`.
pub fn weighted_laplacian(f: &Formation) -> DMatrix<f64> {
    let n = f.n();
    let mut l = DMatrix::zeros(n, n);
    for (&(i, j), w) in f.graph().orientation().iter().zip(edge_weights(f)) {
        l[(i, i)] += w;
        l[(j, j)] += w;
        l[(i, j)] -= w;
        l[(j, i)] -= w;
    }
    l
}

fn rigidity_with(f: &Formation, scaled: bool) -> DMatrix<f64> {
    let (d, n, m) = (f.d(), f.n(), f.graph().m());
    let mut r = DMatrix::zeros(d * m, d * n);
    let mut u = vec![0.0; d];
    for (k, &(i, j)) in f.graph().orientation().iter().enumerate() {
        let dist = bearing_into(f.point(i), f.point(j), f.eps_c(), &mut u);
        if dist <= f.eps_c() {
            continue;
        }
        let s = if scaled { 1.0 / dist } else { 1.0 };
        for a in 0..d {
            for b in 0..d {
                let id = if a == b { 1.0 } else { 0.0 };
                let p = s * (id - u[a] * u[b]);
                r[(k * d + a, i * d + b)] = p;
                r[(k * d + a, j * d + b)] = -p;
            }
        }
    }
    r
}

/// Bearing rigidity matrix `diag(P(u_k)/d_k) Hᵀ`, `dm x dn`, the negated
/// Jacobian of the stacked bearings.
pub fn rigidity_matrix(f: &Formation) -> DMatrix<f64> {
    rigidity_with(f, true)
}

/// `diag(P(u_k)) Hᵀ`, the rigidity matrix without distance scaling.
pub fn rigidity_matrix_unscaled(f: &Formation) -> DMatrix<f64> {
    rigidity_with(f, false)
}

/// `H₊ diag(M_k) Hᵀ` with one `d x d` block per orientation edge.
fn directed_block_product(graph: &DirectedGraph, d: usize, blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let n = graph.n();
    let inc = graph.incidence();
    let mut out = DMatrix::zeros(d * n, d * n);
    for (k, &(i, j)) in graph.orientation().iter().enumerate() {
        for &a in &[i, j] {
            let ga = inc.h_plus[(a, k)] as f64;
            if ga == 0.0 {
                continue;
            }
            for &b in &[i, j] {
                let hb = inc.h[(b, k)] as f64;
                let mut view = out.view_mut((a * d, b * d), (d, d));
                view += &blocks[k] * (ga * hb);
            }
        }
    }
    out
}

fn target_blocks(graph: &DirectedGraph, target: &BearingTarget, scaled: bool) -> Result<Vec<DMatrix<f64>>> {
    graph
        .orientation()
        .iter()
        .map(|&(i, j)| {
            let u = target.bearing(i, j).ok_or(Error::TargetMissingEdge(i, j))?;
            let p = projection_matrix(&u)?;
            if scaled {
                let dist = target.distance(i, j).ok_or(Error::MissingTarget)?;
                Ok(p / dist)
            } else {
                Ok(p)
            }
        })
        .collect()
}

/// Directed bearing Laplacian `L_B = H₊ diag(P(u*_k)) Hᵀ`, `dn x dn`.
pub fn bearing_laplacian(graph: &DirectedGraph, target: &BearingTarget) -> Result<DMatrix<f64>> {
    let blocks = target_blocks(graph, target, false)?;
    Ok(directed_block_product(graph, target.d(), &blocks))
}

/// Jacobian of `ẋ = H₊(u - u*)` at the target: `-H₊ diag(P(u*_k)/d*_k) Hᵀ`.
/// Needs target distances, i.e. a target built from positions.
pub fn directed_jacobian(graph: &DirectedGraph, target: &BearingTarget) -> Result<DMatrix<f64>> {
    if !target.has_distances() {
        return Err(Error::MissingTarget);
    }
    let blocks = target_blocks(graph, target, true)?;
    Ok(-directed_block_product(graph, target.d(), &blocks))
}

#[derive(Debug, Clone)]
pub struct FormationMatrices {
    /// `L̆`, `n x n`.
    pub weighted_laplacian: DMatrix<f64>,
    /// `L̆ ⊗ I_d`.
    pub inflated_laplacian: DMatrix<f64>,
    /// Distance-scaled bearing rigidity matrix, `dm x dn`.
    pub rigidity: DMatrix<f64>,
    /// Unscaled variant `diag(P(u_k)) Hᵀ`.
    pub rigidity_unscaled: DMatrix<f64>,
    bearing_laplacian: Option<DMatrix<f64>>,
    jacobian: Option<DMatrix<f64>>,
}

impl FormationMatrices {
    pub fn bearing_laplacian(&self) -> Result<&DMatrix<f64>> {
        self.bearing_laplacian.as_ref().ok_or(Error::MissingTarget)
    }

    pub fn directed_jacobian(&self) -> Result<&DMatrix<f64>> {
        self.jacobian.as_ref().ok_or(Error::MissingTarget)
    }
}

/// All formation-level matrices. `L_B` needs a target; `J_dir` additionally
/// needs target distances.
pub fn formation_matrices(f: &Formation, target: Option<&BearingTarget>) -> Result<FormationMatrices> {
    let weighted = weighted_laplacian(f);
    let (bearing_laplacian, jacobian) = match target {
        Some(t) => {
            let lb = bearing_laplacian(f.graph(), t)?;
            let jac = if t.has_distances() {
                Some(directed_jacobian(f.graph(), t)?)
            } else {
                None
            };
            (Some(lb), jac)
        }
        None => (None, None),
    };
    Ok(FormationMatrices {
        inflated_laplacian: inflate(&weighted, f.d()),
        weighted_laplacian: weighted,
        rigidity: rigidity_matrix(f),
        rigidity_unscaled: rigidity_matrix_unscaled(f),
        bearing_laplacian,
        jacobian,
    })
}

/// Strongest relation between two formations on the same graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairRelation {
    Identical,
    Congruent,
    Similar,
    Equivalent,
    Unrelated,
}

pub fn classify_pair(f: &Formation, g: &Formation) -> Result<PairRelation> {
    classify_pair_with_tol(f, g, EQUIVALENCE_TOL)
}

/// Bearing differences between two formations on the same graph, max over
/// directed edges of the infinity norm.
pub fn max_bearing_difference(f: &Formation, g: &Formation) -> Result<f64> {
    if f.graph() != g.graph() || f.d() != g.d() {
        return Err(Error::GraphMismatch);
    }
    let mut worst = 0.0f64;
    for &(i, j) in f.graph().edges() {
        let a = f.bearing(i, j);
        let b = g.bearing(i, j);
        for (p, q) in a.iter().zip(&b) {
            worst = worst.max((p - q).abs());
        }
    }
    Ok(worst)
}

/// Tests Identical, Congruent, Similar and Equivalent in that order. Position
/// tests use `tol` relative to the formation spread; the bearing test uses
/// `tol` absolutely.
pub fn classify_pair_with_tol(f: &Formation, g: &Formation, tol: f64) -> Result<PairRelation> {
    if f.graph() != g.graph() || f.d() != g.d() {
        return Err(Error::GraphMismatch);
    }
    let (d, x, y) = (f.d(), f.positions(), g.positions());
    let scale = x
        .iter()
        .chain(y)
        .fold(1.0f64, |acc, v| acc.max(v.abs()));
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(p, q)| (p - q).abs() <= tol * scale);

    if close(x, y) {
        return Ok(PairRelation::Identical);
    }

    let cx = centroid(x, d);
    let cy = centroid(y, d);
    let dx: Vec<f64> = x.iter().enumerate().map(|(k, v)| v - cx[k % d]).collect();
    let dy: Vec<f64> = y.iter().enumerate().map(|(k, v)| v - cy[k % d]).collect();
    if close(&dx, &dy) {
        return Ok(PairRelation::Congruent);
    }

    let yy: f64 = dy.iter().map(|v| v * v).sum();
    if yy > 0.0 {
        let s = dx.iter().zip(&dy).map(|(a, b)| a * b).sum::<f64>() / yy;
        if s > 0.0 {
            let scaled: Vec<f64> = dy.iter().map(|v| s * v).collect();
            if close(&dx, &scaled) {
                return Ok(PairRelation::Similar);
            }
        }
    }

    if max_bearing_difference(f, g)? <= tol {
        return Ok(PairRelation::Equivalent);
    }
    Ok(PairRelation::Unrelated)
}

#[derive(Debug, Clone, Serialize)]
pub struct RigidityReport {
    pub rigid: bool,
    pub rank: usize,
    /// `dn - d - 1`.
    pub expected_rank: usize,
    /// Absolute singular-value cutoff used for the rank.
    pub threshold: f64,
    pub singular_values: Vec<f64>,
}

/// Numerical rank of a matrix with the relative cutoff [`RANK_RTOL`].
pub fn numerical_rank(m: &DMatrix<f64>) -> (usize, f64, Vec<f64>) {
    if m.is_empty() {
        return (0, 0.0, Vec::new());
    }
    let sv = m.clone().svd(false, false).singular_values;
    let mut values: Vec<f64> = sv.iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    let smax = values.first().copied().unwrap_or(0.0);
    let threshold = RANK_RTOL * smax;
    let rank = values.iter().filter(|&&s| s > threshold).count();
    (rank, threshold, values)
}

/// Infinitesimal bearing rigidity via `rank(R_B) = dn - d - 1` over the
/// undirected edge set.
pub fn is_bearing_rigid(f: &Formation) -> Result<RigidityReport> {
    if let Some((i, j)) = f.coincident_edge() {
        return Err(Error::DegenerateFormation(i, j));
    }
    let (rank, threshold, singular_values) = numerical_rank(&rigidity_matrix(f));
    let expected_rank = f.d() * f.n() - f.d() - 1;
    Ok(RigidityReport {
        rigid: rank == expected_rank,
        rank,
        expected_rank,
        threshold,
        singular_values,
    })
}
