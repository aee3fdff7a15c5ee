//! Minimizer of `G(y) = Σ_i ‖p_i - y‖ + v*ᵀy`, the point where the unit vectors
//! towards the foci sum to `v*`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{distance, norm};

#[derive(Debug, Clone, PartialEq)]
pub struct FermatSolution {
    pub point: Vec<f64>,
    /// Distance from zero to the subdifferential of `G` at `point`.
    pub residual: f64,
    /// Set when the minimizer sits on a focus.
    pub at_focus: Option<usize>,
    pub iterations: usize,
}

const FOCUS_TOL: f64 = 1e-8;

/// `Σ_i ‖p_i - y‖ + v*ᵀy`.
pub fn fermat_objective(foci: &[Vec<f64>], v_star: &[f64], y: &[f64]) -> f64 {
    foci.iter().map(|p| distance(p, y)).sum::<f64>() + dot(v_star, y)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Distance from zero to the subdifferential of `G` at `y`. Off the foci this is
/// `‖Σ v_i - v*‖` with `v_i` the unit vector from `y` to `p_i`; at a focus of
/// multiplicity `m` it is `max(0, ‖Σ_{others} v_j - v*‖ - m)`.
pub fn stationarity_residual(foci: &[Vec<f64>], v_star: &[f64], y: &[f64]) -> f64 {
    let d = y.len();
    let mut s = vec![0.0; d];
    let mut m = 0.0;
    for p in foci {
        let r = distance(y, p);
        if r <= FOCUS_TOL * (1.0 + norm(p)) {
            m += 1.0;
            continue;
        }
        for k in 0..d {
            s[k] += (p[k] - y[k]) / r;
        }
    }
    let gap: Vec<f64> = s.iter().zip(v_star).map(|(a, b)| a - b).collect();
    (norm(&gap) - m).max(0.0)
}

fn validate(foci: &[Vec<f64>], v_star: &[f64]) -> Result<usize> {
    let k = foci.len();
    if k == 0 {
        return Err(Error::InvalidFormation("no foci".into()));
    }
    let d = v_star.len();
    if d == 0 || foci.iter().any(|p| p.len() != d) {
        return Err(Error::InvalidFormation("foci and v* must share one dimension".into()));
    }
    if foci.iter().flatten().chain(v_star).any(|v| !v.is_finite()) {
        return Err(Error::InvalidFormation("non-finite input".into()));
    }
    let nv = norm(v_star);
    if nv >= k as f64 {
        return Err(Error::Infeasible { norm: nv, k });
    }
    Ok(d)
}

/// Solves for the generalized Fermat point.
pub fn fermat_equilibrium(foci: &[Vec<f64>], v_star: &[f64]) -> Result<FermatSolution> {
    let d = validate(foci, v_star)?;
    let k = foci.len();
    let scale = foci.iter().map(|p| norm(p)).fold(1.0, f64::max);

    if let Some(err) = collinear_segment(foci, v_star) {
        return Err(err);
    }

    for (i, p) in foci.iter().enumerate() {
        let r = stationarity_residual(foci, v_star, p);
        if r <= 1e-12 {
            return Ok(FermatSolution { point: p.clone(), residual: r, at_focus: Some(i), iterations: 0 });
        }
    }

    // Interior minimizer: damped Newton from the centroid.
    let mut y = vec![0.0; d];
    for p in foci {
        for a in 0..d {
            y[a] += p[a] / k as f64;
        }
    }
    if foci.iter().any(|p| distance(p, &y) <= FOCUS_TOL * scale) {
        y[0] += 1e-3 * scale;
    }
    let mut iterations = 0;
    for it in 0..500 {
        iterations = it + 1;
        let (g, h) = gradient_hessian(foci, v_star, &y);
        let gn = norm(&g);
        if gn < 1e-14 * k as f64 {
            break;
        }
        let newton = h
            .clone()
            .cholesky()
            .map(|c| c.solve(&DVector::from_column_slice(&g)))
            .map(|s| s.iter().map(|v| -v).collect::<Vec<f64>>())
            .filter(|s| dot(s, &g) < 0.0);
        let g0 = fermat_objective(foci, v_star, &y);
        let mut step = None;
        for dir in [newton, Some(g.iter().map(|v| -v).collect())].into_iter().flatten() {
            let slope = dot(&dir, &g);
            let mut alpha = 1.0;
            while alpha > 1e-20 {
                let mut trial: Vec<f64> = y.iter().zip(&dir).map(|(a, b)| a + alpha * b).collect();
                let mut sufficient = g0 + 1e-4 * alpha * slope;
                // The gradient blows up at a focus; hop over it along its steepest
                // descent direction instead.
                if let Some(p) = foci.iter().find(|p| distance(p, &trial) <= FOCUS_TOL * scale) {
                    trial = hop_from_focus(foci, v_star, p, 1e-6 * scale);
                    sufficient = g0;
                }
                let gt = fermat_objective(foci, v_star, &trial);
                // Near the optimum the decrease drops below rounding; fall back
                // to the gradient norm there.
                let flat = (gt - g0).abs() <= 1e-12 * (1.0 + g0.abs())
                    && norm(&gradient_hessian(foci, v_star, &trial).0) < gn;
                if gt < sufficient || flat {
                    step = Some(trial);
                    break;
                }
                alpha *= 0.5;
            }
            if step.is_some() {
                break;
            }
        }
        let Some(next) = step else { break };
        let moved = distance(&next, &y);
        y = next;
        if moved <= 1e-16 * scale {
            break;
        }
    }
    let residual = stationarity_residual(foci, v_star, &y);
    if !residual.is_finite() {
        return Err(Error::NumericalFailure(residual));
    }
    Ok(FermatSolution { point: y, residual, at_focus: None, iterations })
}

/// Point at distance `h` from the non-optimal focus `p` along the direction in
/// which `G` decreases fastest, `(Σ_{others} v_j - v*) / ‖·‖`.
fn hop_from_focus(foci: &[Vec<f64>], v_star: &[f64], p: &[f64], h: f64) -> Vec<f64> {
    let d = p.len();
    let mut s: Vec<f64> = v_star.iter().map(|v| -v).collect();
    for q in foci {
        let r = distance(p, q);
        if r > FOCUS_TOL * (1.0 + norm(q)) {
            for a in 0..d {
                s[a] += (q[a] - p[a]) / r;
            }
        }
    }
    let len = norm(&s);
    (0..d).map(|a| p[a] + h * s[a] / len).collect()
}

fn gradient_hessian(foci: &[Vec<f64>], v_star: &[f64], y: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let d = y.len();
    let mut g = v_star.to_vec();
    let mut h = DMatrix::zeros(d, d);
    for p in foci {
        let r = distance(p, y);
        let v: Vec<f64> = (0..d).map(|a| (p[a] - y[a]) / r).collect();
        for a in 0..d {
            g[a] -= v[a];
            for b in 0..d {
                let id = if a == b { 1.0 } else { 0.0 };
                h[(a, b)] += (id - v[a] * v[b]) / r;
            }
        }
    }
    (g, h)
}

/// Detects the case where all foci lie on a line, `v*` is parallel to it, and
/// `G` is flat on a segment between two consecutive foci.
fn collinear_segment(foci: &[Vec<f64>], v_star: &[f64]) -> Option<Error> {
    let d = v_star.len();
    let k = foci.len();
    let origin = &foci[0];
    let far = foci.iter().max_by(|a, b| distance(a, origin).total_cmp(&distance(b, origin)))?;
    let len = distance(far, origin);
    if len == 0.0 {
        return None;
    }
    let e: Vec<f64> = (0..d).map(|a| (far[a] - origin[a]) / len).collect();
    let tol = 1e-12 * len.max(1.0);
    let mut ts = Vec::with_capacity(k);
    for p in foci {
        let rel: Vec<f64> = (0..d).map(|a| p[a] - origin[a]).collect();
        let t = dot(&rel, &e);
        let off: Vec<f64> = (0..d).map(|a| rel[a] - t * e[a]).collect();
        if norm(&off) > tol {
            return None;
        }
        ts.push(t);
    }
    let c = dot(v_star, &e);
    let perp: Vec<f64> = (0..d).map(|a| v_star[a] - c * e[a]).collect();
    if norm(&perp) > 1e-12 {
        return None;
    }
    ts.sort_by(f64::total_cmp);
    // On the open interval after the r-th sorted focus the slope is 2r - k + c.
    for r in 1..k {
        if (2.0 * r as f64 - k as f64 + c).abs() <= 1e-12 && ts[r] - ts[r - 1] > tol {
            let at = |t: f64| (0..d).map(|a| origin[a] + t * e[a]).collect::<Vec<f64>>();
            let (a, b) = (at(ts[r - 1]), at(ts[r]));
            let mean = ts.iter().sum::<f64>() / k as f64;
            let endpoint = if (ts[r - 1] - mean).abs() <= (ts[r] - mean).abs() { a.clone() } else { b.clone() };
            return Some(Error::CollinearDegenerate { endpoint, segment: (a, b) });
        }
    }
    None
}
