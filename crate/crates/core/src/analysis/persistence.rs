//! Randomized search for bearing-persistence counterexamples: formations whose
//! per-agent bearing sums match a target's while the bearings themselves differ.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::fermat::fermat_equilibrium;
use crate::controllers::{ControllerKind, VelocityField};
use crate::error::Result;
use crate::geometry::{
    bearing_into, classify_pair, diameter, max_bearing_difference, norm, point, BearingTarget, Formation,
    FormationSpec, PairRelation,
};
use crate::graph::{cascade_degrees, DirectedGraph};
use crate::parallel::{map_range, Execution};
use crate::sim::{simulate, SimConfig};

/// Residual below which a candidate counts as an equilibrium.
pub const WITNESS_RESIDUAL: f64 = 1e-8;
/// Bearing gap a flow-found candidate must exceed to be reported.
pub const WITNESS_GAP: f64 = 1e-3;
/// Shortest admissible edge in a sampled target.
pub const MIN_TARGET_EDGE: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct PersistenceOptions {
    pub trials: usize,
    pub seed: u64,
    /// Random starts of the directed formation flow per trial, for graphs with cycles.
    pub flow_starts: usize,
    pub flow_t_max: f64,
    pub flow_dt: f64,
    pub exec: Execution,
}

impl Default for PersistenceOptions {
    fn default() -> Self {
        Self {
            trials: 20,
            seed: 0,
            flow_starts: 2,
            flow_t_max: 20.0,
            flow_dt: 5e-3,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub x: FormationSpec,
    pub x_star: FormationSpec,
    pub residual: f64,
    pub bearing_gap: f64,
    pub trial: usize,
    pub method: String,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "verdict")]
pub enum PersistenceVerdict {
    PersistentUpToSampling { trials: usize },
    NonPersistentWitness(Box<Witness>),
}

impl PersistenceVerdict {
    pub fn witness(&self) -> Option<&Witness> {
        match self {
            PersistenceVerdict::NonPersistentWitness(w) => Some(w),
            _ => None,
        }
    }
}

/// `max_i ‖Σ_{j ∈ N_i⁺} (u_ij - u*_ij)‖` with `u*` taken from `x_star`.
pub fn per_node_residual(x: &Formation, x_star: &Formation) -> Result<f64> {
    let target = BearingTarget::from_formation(x_star)?;
    let field = VelocityField::new(&ControllerKind::FormationDirected(target), x.graph(), x.d())?;
    Ok(node_residual(&field, x.positions(), x.eps_c()))
}

fn node_residual(field: &VelocityField, x: &[f64], eps: f64) -> f64 {
    let v = field.velocity(x, eps);
    v.chunks(field.d()).map(norm).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessCheck {
    pub residual: f64,
    pub relation: PairRelation,
    pub bearing_gap: f64,
    pub valid: bool,
}

/// Checks that `x` balances every agent's bearing sum against `x_star` to
/// within `tol` while not being bearing-equivalent to it.
pub fn validate_witness(x: &Formation, x_star: &Formation, tol: f64) -> Result<WitnessCheck> {
    let residual = per_node_residual(x, x_star)?;
    let relation = classify_pair(x, x_star)?;
    let bearing_gap = max_bearing_difference(x, x_star)?;
    Ok(WitnessCheck {
        residual,
        relation,
        bearing_gap,
        valid: residual < tol && relation == PairRelation::Unrelated,
    })
}

/// Samples targets and searches each for a non-equivalent equilibrium. Returns
/// the witness of the lowest-numbered successful trial.
pub fn persistence_check(graph: &DirectedGraph, d: usize, opts: &PersistenceOptions) -> Result<PersistenceVerdict> {
    let graph = Arc::new(graph.clone());
    let levels = cascade_degrees(&graph).ok();
    let found = map_range(opts.exec, opts.trials, |trial| {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let target = sample_target(&graph, d, &mut rng)?;
        let candidate = match &levels {
            Some(levels) => cascade_candidate(&target, levels, &mut rng).map(|x| (x, "cascade")),
            None => flow_candidate(&target, opts, &mut rng).map(|x| (x, "flow")),
        }?;
        let (x, method) = candidate;
        let x = target.with_positions(x).ok()?;
        accept(&x, &target, method, trial)
    });
    Ok(match found.into_iter().flatten().next() {
        Some(w) => PersistenceVerdict::NonPersistentWitness(Box::new(w)),
        None => PersistenceVerdict::PersistentUpToSampling { trials: opts.trials },
    })
}

fn accept(x: &Formation, target: &Formation, method: &str, trial: usize) -> Option<Witness> {
    let diam = x.diameter();
    let degenerate = x
        .graph()
        .edges()
        .iter()
        .any(|&(i, j)| x.distance(i, j) <= 1e-6 * diam);
    if degenerate {
        return None;
    }
    // Fresh threshold so the residual recheck uses real bearings.
    let x = x.clone().with_eps(x.eps_c().min(1e-12));
    let check = validate_witness(&x, target, WITNESS_RESIDUAL).ok()?;
    let gap_needed = if method == "flow" { WITNESS_GAP } else { 0.0 };
    if !check.valid || check.bearing_gap <= gap_needed {
        return None;
    }
    Some(Witness {
        x: x.to_spec(),
        x_star: target.to_spec(),
        residual: check.residual,
        bearing_gap: check.bearing_gap,
        trial,
        method: method.to_string(),
    })
}

fn sample_target(graph: &Arc<DirectedGraph>, d: usize, rng: &mut ChaCha8Rng) -> Option<Formation> {
    let n = graph.n();
    for _ in 0..1000 {
        let x: Vec<f64> = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ok = graph
            .edges()
            .iter()
            .all(|&(i, j)| crate::geometry::distance(point(&x, d, i), point(&x, d, j)) >= MIN_TARGET_EDGE);
        if ok {
            return Formation::new(graph.clone(), d, x).ok();
        }
    }
    None
}

/// Places agents in cascade order: leaves stay at their targets, agents with one
/// out-neighbor go anywhere on the target ray behind it, and agents with more
/// sit at the generalized Fermat point of their out-neighbors.
fn cascade_candidate(target: &Formation, levels: &[usize], rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    let g = target.graph();
    let d = target.d();
    let mut order: Vec<usize> = (0..g.n()).collect();
    order.sort_by_key(|&i| (levels[i], i));
    let mut x = target.positions().to_vec();
    for &i in &order {
        let outs = g.out_neighbors(i);
        match outs.len() {
            0 => {}
            1 => {
                let j = outs[0];
                let u = target.bearing(i, j);
                let s = target.distance(i, j) * rng.random_range(-1.0f64..1.0).exp();
                for a in 0..d {
                    x[i * d + a] = x[j * d + a] - s * u[a];
                }
            }
            _ => {
                let foci: Vec<Vec<f64>> = outs.iter().map(|&j| point(&x, d, j).to_vec()).collect();
                let mut v_star = vec![0.0; d];
                for &j in outs {
                    for (v, u) in v_star.iter_mut().zip(target.bearing(i, j)) {
                        *v += u;
                    }
                }
                let sol = fermat_equilibrium(&foci, &v_star).ok()?;
                if sol.at_focus.is_some() {
                    return None;
                }
                x[i * d..(i + 1) * d].copy_from_slice(&sol.point);
            }
        }
    }
    Some(x)
}

/// Runs the directed formation flow from a random start, then polishes the end
/// state with Levenberg-Marquardt on the per-agent residual.
fn flow_candidate(target: &Formation, opts: &PersistenceOptions, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    let bt = BearingTarget::from_formation(target).ok()?;
    let kind = ControllerKind::FormationDirected(bt);
    let field = VelocityField::new(&kind, target.graph(), target.d()).ok()?;
    let cfg = SimConfig {
        dt: opts.flow_dt,
        t_max: opts.flow_t_max,
        stop_tol: 1e-9,
        record_every: usize::MAX,
        ..SimConfig::default()
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..opts.flow_starts.max(1) {
        let x0: Vec<f64> = (0..target.positions().len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let Ok(f0) = target.with_positions(x0) else { continue };
        let Ok(traj) = simulate(&f0, &kind, &cfg) else { continue };
        let x = levenberg_marquardt(&field, traj.final_state().to_vec());
        let r = node_residual(&field, &x, 1e-12 * diameter(&x, target.d()).max(1e-300));
        let Ok(fx) = target.with_positions(x.clone()) else { continue };
        let gap = max_bearing_difference(&fx, target).unwrap_or(0.0);
        if r < WITNESS_RESIDUAL && gap > WITNESS_GAP {
            return Some(x);
        }
        if best.as_ref().is_none_or(|b| r < b.0) {
            best = Some((r, x));
        }
    }
    best.map(|b| b.1)
}

fn levenberg_marquardt(field: &VelocityField, mut x: Vec<f64>) -> Vec<f64> {
    let d = field.d();
    let dim = x.len();
    let cost = |x: &[f64]| field.velocity(x, 0.0).iter().map(|v| v * v).sum::<f64>();
    let mut lambda = 1e-3;
    let mut c = cost(&x);
    for _ in 0..100 {
        if c < 1e-24 {
            break;
        }
        let r = DVector::from_vec(field.velocity(&x, 0.0));
        let mut jac = DMatrix::zeros(dim, dim);
        let mut u = vec![0.0; d];
        for t in field.terms() {
            let (i, j) = (t.agent, t.other);
            let dist = bearing_into(point(&x, d, i), point(&x, d, j), 0.0, &mut u);
            if dist == 0.0 {
                return x;
            }
            for a in 0..d {
                for b in 0..d {
                    let id = if a == b { 1.0 } else { 0.0 };
                    let m = (id - u[a] * u[b]) / dist;
                    jac[(i * d + a, j * d + b)] += m;
                    jac[(i * d + a, i * d + b)] -= m;
                }
            }
        }
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r;
        let mut improved = false;
        for _ in 0..30 {
            let mut sys = jtj.clone();
            for k in 0..dim {
                sys[(k, k)] += lambda * (1.0 + jtj[(k, k)]);
            }
            let Some(step) = sys.lu().solve(&jtr) else { break };
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - s).collect();
            let ct = cost(&trial);
            if ct < c {
                x = trial;
                c = ct;
                lambda = (lambda * 0.3).max(1e-15);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    x
}
