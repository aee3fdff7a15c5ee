//! Fixed-step integration of the discontinuous closed loops.
//!
//! Explicit Euler with the zero-bearing convention for coincident neighbors.
//! For the consensus laws, neighbors that would pass through each other within
//! a step are merged into a cluster that slides as one point, which emulates
//! the Filippov solution on the coincidence set instead of chattering around it.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::controllers::{ControllerKind, VelocityField};
use crate::error::{Error, Result};
use crate::geometry::{centroid, diameter, distance, norm, point, Formation};
use crate::graph::DirectedGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub t_max: f64,
    /// Threshold on the stop metric.
    pub stop_tol: f64,
    /// Coincidence threshold; `None` takes the initial formation's `ε_c`.
    pub eps_c: Option<f64>,
    pub merge_clusters: bool,
    /// Record every k-th step (the first and last steps are always recorded).
    pub record_every: usize,
    /// Stop at the first step where the stop metric falls below `stop_tol`.
    pub stop_on_converge: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_max: 10.0,
            stop_tol: 1e-6,
            eps_c: None,
            merge_clusters: true,
            record_every: 1,
            stop_on_converge: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Scenario(msg));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_max > self.dt && self.t_max.is_finite()) {
            return bad(format!("t_max ({}) must exceed dt ({})", self.t_max, self.dt));
        }
        if !(self.stop_tol > 0.0) {
            return bad(format!("stop_tol must be positive, got {}", self.stop_tol));
        }
        if let Some(eps) = self.eps_c {
            if !(eps > 0.0) {
                return bad(format!("eps_c must be positive, got {eps}"));
            }
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Converged,
    TimeLimit,
}

/// Lyapunov and bookkeeping quantities at one instant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorRecord {
    /// `Σ d_ij` over undirected edges.
    pub phi_tilde: f64,
    /// `Σ ½ d_ij ‖u_ij - u*_ij‖²` over undirected edges (`u* = 0` for consensus).
    pub psi: f64,
    /// Largest distance between any two agents.
    pub v_max_dist: f64,
    /// `‖H₊(u - u*)‖`, the norm of the stacked velocity.
    pub grad_norm: f64,
    pub centroid: Vec<f64>,
}

fn phi_tilde_raw(graph: &DirectedGraph, x: &[f64], d: usize) -> f64 {
    graph
        .orientation()
        .iter()
        .map(|&(i, j)| distance(point(x, d, i), point(x, d, j)))
        .sum()
}

fn monitor(field: &VelocityField, graph: &DirectedGraph, x: &[f64], eps: f64, v: &[f64]) -> MonitorRecord {
    let d = field.d();
    MonitorRecord {
        phi_tilde: phi_tilde_raw(graph, x, d),
        psi: field.psi(x, eps),
        v_max_dist: diameter(x, d),
        grad_norm: norm(v),
        centroid: centroid(x, d),
    }
}

pub fn monitor_step(f: &Formation, kind: &ControllerKind) -> Result<MonitorRecord> {
    let field = VelocityField::new(kind, f.graph(), f.d())?;
    let v = field.velocity(f.positions(), f.eps_c());
    Ok(monitor(&field, f.graph(), f.positions(), f.eps_c(), &v))
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub d: usize,
    pub n: usize,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub monitors: Vec<MonitorRecord>,
    pub stop_reason: StopReason,
    pub t_converge: Option<f64>,
    /// Number of steps in which at least one cluster was merged.
    pub merge_steps: usize,
    pub steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least one state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one time")
    }

    /// Monitor series by name: `phi_tilde`, `psi`, `V`, `grad_norm`.
    pub fn series(&self, name: &str) -> Option<Vec<f64>> {
        let pick: fn(&MonitorRecord) -> f64 = match name {
            "phi_tilde" => |m| m.phi_tilde,
            "psi" => |m| m.psi,
            "V" | "v_max_dist" => |m| m.v_max_dist,
            "grad_norm" => |m| m.grad_norm,
            _ => return None,
        };
        Some(self.monitors.iter().map(pick).collect())
    }

    /// Largest centroid displacement from the initial centroid.
    pub fn max_centroid_drift(&self) -> f64 {
        let c0 = &self.monitors[0].centroid;
        self.monitors
            .iter()
            .map(|m| distance(c0, &m.centroid))
            .fold(0.0, f64::max)
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        for i in 1..=self.n {
            for a in 1..=self.d {
                h.push(format!("x_{i}_{a}"));
            }
        }
        h.extend(["phi_tilde", "psi", "V", "grad_norm"].map(String::from));
        for a in 1..=self.d {
            h.push(format!("cx_{a}"));
        }
        h
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.csv_header())?;
        for ((t, x), m) in self.times.iter().zip(&self.states).zip(&self.monitors) {
            let mut row = Vec::with_capacity(x.len() + 5 + self.d);
            row.push(t.to_string());
            row.extend(x.iter().map(f64::to_string));
            row.extend([m.phi_tilde, m.psi, m.v_max_dist, m.grad_norm].map(|v| v.to_string()));
            row.extend(m.centroid.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Collapses clusters of neighbors that coincide or would cross during the
/// step `x -> x_new`. Returns the number of clusters collapsed.
///
/// A cluster moves with one common velocity `w`. Members whose sensed
/// neighbors all lie outside the cluster (anchors, directed laws only) cannot
/// adjust and fix `w` and the cluster position; otherwise the cluster takes
/// the mean position and mean external velocity. A member stays only if
/// `‖w - ext_i‖` is within its number of in-cluster neighbors, the largest
/// sum its unit-ball bearing selections can produce; the worst violator is
/// released until the rest is consistent.
fn merge_clusters(field: &VelocityField, x: &[f64], x_new: &mut [f64], dt: f64, eps: f64) -> usize {
    let (d, n) = (field.d(), field.n());
    let mut uf = UnionFind::new(n);
    for t in field.terms() {
        let (i, j) = (t.agent, t.other);
        let mut dot = 0.0;
        let mut len2 = 0.0;
        for a in 0..d {
            let before = x[j * d + a] - x[i * d + a];
            let after = x_new[j * d + a] - x_new[i * d + a];
            dot += before * after;
            len2 += after * after;
        }
        if len2.sqrt() <= eps || dot <= 0.0 {
            uf.union(i, j);
        }
    }

    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = uf.find(i);
        groups[r].push(i);
    }

    let mut merged = 0;
    let mut u = vec![0.0; d];
    for mut members in groups.into_iter().filter(|g| g.len() > 1) {
        loop {
            let inside = |k: usize| members.binary_search(&k).is_ok();
            let mut ext = vec![0.0; members.len() * d];
            let mut internal = vec![0usize; members.len()];
            for (slot, &i) in members.iter().enumerate() {
                for t in field.terms().iter().filter(|t| t.agent == i) {
                    if inside(t.other) {
                        internal[slot] += 1;
                    } else {
                        crate::geometry::bearing_into(point(x, d, i), point(x, d, t.other), eps, &mut u);
                        for a in 0..d {
                            ext[slot * d + a] += u[a] - t.desired[a];
                        }
                    }
                }
            }

            let anchors: Vec<usize> = if field.is_directed() {
                (0..members.len()).filter(|&s| internal[s] == 0).collect()
            } else {
                Vec::new()
            };
            let reference: Vec<usize> = if anchors.is_empty() {
                (0..members.len()).collect()
            } else {
                anchors.clone()
            };

            let mut w = vec![0.0; d];
            for &s in &reference {
                for a in 0..d {
                    w[a] += ext[s * d + a] / reference.len() as f64;
                }
            }

            let mut worst: Option<(usize, f64)> = None;
            for s in 0..members.len() {
                let gap = (0..d)
                    .map(|a| (w[a] - ext[s * d + a]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let violation = gap - internal[s] as f64;
                if violation > 1e-9 && worst.is_none_or(|(_, v)| violation > v) {
                    worst = Some((s, violation));
                }
            }

            if let Some((s, _)) = worst {
                members.remove(s);
                if members.len() < 2 {
                    break;
                }
                continue;
            }

            let mut p = vec![0.0; d];
            if field.is_directed() {
                let base = if anchors.is_empty() { &reference } else { &anchors };
                for &s in base {
                    let i = members[s];
                    for a in 0..d {
                        p[a] += x[i * d + a] / base.len() as f64;
                    }
                }
                for a in 0..d {
                    p[a] += dt * w[a];
                }
            } else {
                // Mean of the stepped positions keeps the centroid fixed.
                for &i in &members {
                    for a in 0..d {
                        p[a] += x_new[i * d + a] / members.len() as f64;
                    }
                }
            }
            for &i in &members {
                x_new[i * d..(i + 1) * d].copy_from_slice(&p);
            }
            merged += 1;
            break;
        }
    }
    merged
}

/// Integrates `ẋ = velocity(x)` from `f0` with explicit Euler steps.
pub fn simulate(f0: &Formation, kind: &ControllerKind, cfg: &SimConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let field = VelocityField::new(kind, f0.graph(), f0.d())?;
    let graph = f0.graph();
    let (d, n) = (f0.d(), f0.n());
    let eps = cfg.eps_c.unwrap_or_else(|| f0.eps_c());
    let merge = cfg.merge_clusters && !kind.is_formation();

    let stop_metric = |x: &[f64]| {
        if kind.is_formation() {
            field.max_bearing_error(x, eps)
        } else {
            diameter(x, d)
        }
    };

    let mut x = f0.positions().to_vec();
    let mut v = field.velocity(&x, eps);
    let mut traj = Trajectory {
        d,
        n,
        times: vec![0.0],
        states: vec![x.clone()],
        monitors: vec![monitor(&field, graph, &x, eps, &v)],
        stop_reason: StopReason::TimeLimit,
        t_converge: None,
        merge_steps: 0,
        steps: 0,
    };
    if stop_metric(&x) < cfg.stop_tol {
        traj.t_converge = Some(0.0);
        if cfg.stop_on_converge {
            traj.stop_reason = StopReason::Converged;
            return Ok(traj);
        }
    }

    let total = (cfg.t_max / cfg.dt - 1e-9).ceil() as usize;
    let mut x_new = vec![0.0; x.len()];
    for k in 1..=total {
        for ((xn, xi), vi) in x_new.iter_mut().zip(&x).zip(&v) {
            *xn = xi + cfg.dt * vi;
        }
        if merge && merge_clusters(&field, &x, &mut x_new, cfg.dt, eps) > 0 {
            traj.merge_steps += 1;
        }
        let t = k as f64 * cfg.dt;
        if x_new.iter().any(|a| !a.is_finite()) {
            return Err(Error::NumericalFailure(t));
        }
        std::mem::swap(&mut x, &mut x_new);
        field.velocity_into(&x, eps, &mut v);
        traj.steps = k;

        let converged = traj.t_converge.is_none() && stop_metric(&x) < cfg.stop_tol;
        if converged {
            traj.t_converge = Some(t);
        }
        let last = k == total || (converged && cfg.stop_on_converge);
        if k % cfg.record_every == 0 || last || converged {
            traj.times.push(t);
            traj.states.push(x.clone());
            traj.monitors.push(monitor(&field, graph, &x, eps, &v));
        }
        if converged && cfg.stop_on_converge {
            traj.stop_reason = StopReason::Converged;
            return Ok(traj);
        }
    }
    if traj.t_converge.is_some() {
        traj.stop_reason = StopReason::Converged;
    }
    Ok(traj)
}
