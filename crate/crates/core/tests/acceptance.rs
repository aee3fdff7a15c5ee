//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any criterion fails.

mod common;

use std::sync::Arc;
use std::time::Instant;

use bearing_flows::analysis::{
    conjecture_bound, estimate_nu, fermat_equilibrium, finite_time_bound, jacobian_spectrum, persistence_check,
    stationarity_residual, validate_witness, HamiltonianMetric, NuOptions, PersistenceOptions,
};
use bearing_flows::controllers::phi_tilde;
use bearing_flows::experiments::{bundled_scenario, BUNDLED};
use bearing_flows::geometry::{is_bearing_rigid, PairRelation};
use bearing_flows::{simulate, BearingTarget, ControllerKind, DirectedGraph, Formation, SimConfig, VelocityField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

type Outcome = (bool, String);

fn four_agent_graph(edges: &[[usize; 2]]) -> Arc<DirectedGraph> {
    Arc::new(DirectedGraph::from_one_based(4, edges).unwrap())
}

fn counterexample() -> Outcome {
    let start = Instant::now();
    let g = four_agent_graph(&[[1, 2], [2, 4], [4, 3], [3, 1], [1, 4]]);
    let f = Formation::from_points(g, &[[0.0, 0.0], [2.0, 0.0], [3.0, -4.0], [2.0, -2.0]]).unwrap();
    let s = jacobian_spectrum(&f).unwrap();
    let (a, b) = (s.max_real_jacobian(), s.max_real_neg_laplacian());
    let secs = start.elapsed().as_secs_f64();
    (
        a > 1e-8 && b > 1e-8 && secs < 1.0,
        format!("max Re eig(J_dir) = {a:.3e}, max Re eig(-L_B) = {b:.3e}, {secs:.3}s"),
    )
}

fn two_body() -> Outcome {
    let g = Arc::new(DirectedGraph::undirected(2, [(0, 1)]).unwrap());
    let f = Formation::from_points(g.clone(), &[[0.0, 0.0], [2.0, 0.0]]).unwrap();
    let cfg = SimConfig { dt: 1e-4, ..SimConfig::default() };
    let t = simulate(&f, &ControllerKind::ConsensusUndirected, &cfg).unwrap().t_converge.unwrap_or(f64::NAN);
    let nu = estimate_nu(&g, 2, &NuOptions::default()).unwrap().value;
    let bound = finite_time_bound(&f, nu).unwrap();
    (
        (t - 1.0).abs() <= 0.01 && (nu - 2f64.sqrt()).abs() < 1e-12 && (t - bound).abs() <= 0.01,
        format!("t_converge = {t:.5}, nu = {nu:.12}, bound = {bound:.5}"),
    )
}

fn bound_soundness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_ratio = 0.0f64;
    let mut failures = 0;
    for trial in 0..100 {
        let n = rng.random_range(2..=6);
        let g = random_connected_undirected(&mut rng, n, 0.4);
        let x = spread_points(&mut rng, n, 2, 0.05);
        let f = formation(g.clone(), x, 2);
        let nu = estimate_nu(&g, 2, &NuOptions { seed: trial, ..NuOptions::default() }).unwrap().value;
        let bound = finite_time_bound(&f, nu).unwrap();
        let cfg = SimConfig { dt: 1e-3, t_max: bound * 1.5 + 1.0, record_every: usize::MAX, ..SimConfig::default() };
        let t = simulate(&f, &ControllerKind::ConsensusUndirected, &cfg).unwrap().t_converge;
        // The reported time is the first grid step after the meeting, so one
        // step of quantization is allowed.
        match t {
            Some(t) if t <= bound + cfg.dt => worst_ratio = worst_ratio.max(t / bound),
            _ => failures += 1,
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        failures == 0 && secs < 120.0,
        format!("100 trials, {failures} violations of t <= bound + dt, max t/bound = {worst_ratio:.4}, {secs:.1}s"),
    )
}

fn centroid_invariance() -> Outcome {
    let mut worst = 0.0f64;
    let mut runs = 0;
    for (name, _) in BUNDLED {
        let s = bundled_scenario(name).unwrap();
        if s.kind.is_directed() {
            continue;
        }
        let t = simulate(&s.formation, &s.kind, &s.scenario.sim).unwrap();
        worst = worst.max(t.max_centroid_drift());
        runs += 1;
    }
    (worst < 1e-6 && runs > 0, format!("{runs} undirected runs, max drift = {worst:.2e}"))
}

fn monotone(series: &[f64], slack: f64) -> bool {
    series.windows(2).all(|w| w[1] <= w[0] + slack)
}

fn lyapunov_suite() -> Outcome {
    let dt = 1e-3;
    let cfg = SimConfig { dt, t_max: 4.0, ..SimConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut bad = [0usize; 4];
    for _ in 0..50 {
        let n = rng.random_range(3..=6);
        let g = random_connected_undirected(&mut rng, n, 0.4);
        let f = formation(g, spread_points(&mut rng, n, 2, 0.05), 2);
        let t = simulate(&f, &ControllerKind::ConsensusUndirected, &cfg).unwrap();
        bad[0] += !monotone(&t.series("phi_tilde").unwrap(), 2.0 * dt) as usize;

        let g = random_rooted_digraph(&mut rng, n, 0.3, false);
        let f = formation(g, spread_points(&mut rng, n, 2, 0.05), 2);
        let t = simulate(&f, &ControllerKind::ConsensusDirected, &cfg).unwrap();
        bad[1] += !monotone(&t.series("V").unwrap(), 2.0 * dt) as usize;

        let g = Arc::new(random_connected_undirected(&mut rng, n, 0.4));
        let target = Formation::new(g.clone(), 2, spread_points(&mut rng, n, 2, 0.1)).unwrap();
        let kind = ControllerKind::FormationUndirected(BearingTarget::from_formation(&target).unwrap());
        let f = Formation::new(g, 2, spread_points(&mut rng, n, 2, 0.05)).unwrap();
        let t = simulate(&f, &kind, &cfg).unwrap();
        bad[2] += !monotone(&t.series("psi").unwrap(), 2.0 * dt) as usize;

        let cycle = Arc::new(DirectedGraph::new(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap());
        let target = Formation::new(cycle.clone(), 2, spread_points(&mut rng, n, 2, 0.1)).unwrap();
        let kind = ControllerKind::FormationDirected(BearingTarget::from_formation(&target).unwrap());
        let f = Formation::new(cycle, 2, spread_points(&mut rng, n, 2, 0.05)).unwrap();
        let t = simulate(&f, &kind, &cfg).unwrap();
        bad[3] += !monotone(&t.series("psi").unwrap(), 2.0 * dt) as usize;
    }
    (
        bad.iter().all(|&b| b == 0),
        format!(
            "violations out of 50: phi (undirected consensus) {}, V (directed consensus) {}, psi (undirected formation) {}, psi (directed cycle formation) {}",
            bad[0], bad[1], bad[2], bad[3]
        ),
    )
}

fn leader_convergence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = SimConfig { dt: 1e-3, t_max: 40.0, record_every: usize::MAX, ..SimConfig::default() };
    let mut worst = 0.0f64;
    let mut ok = 0;
    for _ in 0..20 {
        let n = rng.random_range(3..=7);
        let g = random_rooted_digraph(&mut rng, n, 0.3, true);
        let f = formation(g, spread_points(&mut rng, n, 2, 0.05), 2);
        let t = simulate(&f, &ControllerKind::ConsensusDirected, &cfg).unwrap();
        let leader = f.point(0);
        let err = t
            .final_state()
            .chunks(2)
            .map(|p| ((p[0] - leader[0]).powi(2) + (p[1] - leader[1]).powi(2)).sqrt())
            .fold(0.0, f64::max);
        worst = worst.max(err);
        if t.t_converge.is_some() && err <= cfg.stop_tol {
            ok += 1;
        }
    }
    (ok == 20, format!("{ok}/20 converged onto the leader, max distance = {worst:.2e}"))
}

fn conjecture_square() -> Outcome {
    let s = bundled_scenario("unit_square_cycle").unwrap();
    let b = conjecture_bound(&s.formation, HamiltonianMetric::GraphCycle).unwrap();
    let t = simulate(&s.formation, &s.kind, &s.scenario.sim).unwrap().t_converge.unwrap_or(f64::NAN);
    (
        t <= b.bound * 1.02 && (b.l - 4.0).abs() < 1e-12,
        format!("t_converge = {t:.4}, l = {}, (l/2n)sec^2(pi/n) = {:.4}, doubled (l/4)sec^2(pi/4) = {:.4}", b.l, b.bound, b.doubled_bound),
    )
}

fn rigidity() -> Outcome {
    let pts = [[0.0, 2.0], [2.0, 2.0], [0.0, 0.0], [2.0, 0.0]];
    let c = Formation::from_points(four_agent_graph(&[[1, 2], [2, 4], [4, 3], [3, 1], [1, 4]]), &pts).unwrap();
    let d = Formation::from_points(four_agent_graph(&[[1, 2], [2, 4], [4, 3], [3, 1]]), &pts).unwrap();
    let rc = is_bearing_rigid(&c).unwrap();
    let rd = is_bearing_rigid(&d).unwrap();
    (
        rc.rigid && !rd.rigid && rc.expected_rank == 5,
        format!("(c) rank {} rigid = {}, (d) rank {} rigid = {}", rc.rank, rc.rigid, rd.rank, rd.rigid),
    )
}

fn persistence() -> Outcome {
    let g = four_agent_graph(&[[1, 2], [1, 3], [3, 4], [2, 4], [1, 4]]);
    let verdict = persistence_check(&g, 2, &PersistenceOptions::default()).unwrap();
    let a = Formation::from_points(g.clone(), &[[0.0, 2.0], [2.0, 2.0], [0.0, 0.0], [2.0, 0.0]]).unwrap();
    let b = Formation::from_points(g, &[[0.1632, 2.25], [3.0, 2.0], [0.0, 0.0], [3.0, 0.0]]).unwrap();
    let check = validate_witness(&b, &a, 1e-2).unwrap();
    (
        verdict.witness().is_some() && check.valid && check.relation != PairRelation::Equivalent,
        format!(
            "search found witness = {}, reference pair residual = {:.2e}, relation = {:?}",
            verdict.witness().is_some(),
            check.residual,
            check.relation
        ),
    )
}

fn gradient_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(2..=6);
        let g = Arc::new(random_connected_undirected(&mut rng, n, 0.5));
        let x = spread_points(&mut rng, n, 2, 0.1);
        let target = Formation::new(g.clone(), 2, spread_points(&mut rng, n, 2, 0.1)).unwrap();
        let bt = BearingTarget::from_formation(&target).unwrap();
        for kind in [ControllerKind::ConsensusUndirected, ControllerKind::FormationUndirected(bt)] {
            let field = VelocityField::new(&kind, &g, 2).unwrap();
            let v = field.velocity(&x, 1e-12);
            let potential = |y: &[f64]| match kind {
                ControllerKind::ConsensusUndirected => phi_tilde(&Formation::new(g.clone(), 2, y.to_vec()).unwrap()),
                _ => field.psi(y, 1e-12),
            };
            for k in 0..x.len() {
                let h = 1e-6;
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += h;
                xm[k] -= h;
                let fd = -(potential(&xp) - potential(&xm)) / (2.0 * h);
                worst = worst.max((fd - v[k]).abs());
            }
        }
    }
    (worst < 1e-5, format!("200 formations, max |v + grad| = {worst:.2e}"))
}

fn fermat() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut worst_res, mut worst_dist) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let k = rng.random_range(3..=5);
        let foci: Vec<[f64; 2]> = (0..k).map(|_| [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
        let r = rng.random_range(0.0..0.8 * k as f64);
        let a = rng.random_range(0.0..std::f64::consts::TAU);
        let v = [r * a.cos(), r * a.sin()];
        let fv: Vec<Vec<f64>> = foci.iter().map(|p| p.to_vec()).collect();
        let sol = fermat_equilibrium(&fv, &v).unwrap();
        worst_res = worst_res.max(stationarity_residual(&fv, &v, &sol.point));
        let oracle = fermat_grid_oracle(&foci, v);
        worst_dist = worst_dist.max(((sol.point[0] - oracle[0]).powi(2) + (sol.point[1] - oracle[1]).powi(2)).sqrt());
    }
    (
        worst_res < 1e-8 && worst_dist < 1e-4,
        format!("50 instances, max residual = {worst_res:.2e}, max distance to grid oracle = {worst_dist:.2e}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("counterexample spectra", counterexample),
        ("two-body finite-time tightness", two_body),
        ("finite-time bound soundness", bound_soundness),
        ("centroid invariance", centroid_invariance),
        ("Lyapunov monotonicity", lyapunov_suite),
        ("directed consensus onto the leader", leader_convergence),
        ("conjecture bound on the unit square", conjecture_square),
        ("rigidity classification", rigidity),
        ("persistence witness", persistence),
        ("gradient consistency", gradient_consistency),
        ("Fermat solver optimality", fermat),
    ];
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != k + 1) {
            continue;
        }
        let start = Instant::now();
        let (ok, detail) = check();
        let detail = format!("{detail} [{:.1}s]", start.elapsed().as_secs_f64());
        println!("criterion {:>2} {:<38} {}  {}", k + 1, name, if ok { "PASS" } else { "FAIL" }, detail);
        failed += (!ok) as usize;
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
