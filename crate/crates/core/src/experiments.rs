//! Running scenarios end to end, canned reproductions and batch runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use crate::analysis::{
    conjecture_bound, estimate_nu, finite_time_bound, jacobian_spectrum, persistence_check, validate_witness,
    CertificateReport, HamiltonianMetric, NuOptions, NuReport, PersistenceOptions, SpectrumReport,
};
use crate::controllers::{ControllerFamily, Topology};
use crate::error::{Error, Result};
use crate::geometry::{is_bearing_rigid, Formation};
use crate::graph::DirectedGraph;
use crate::parallel::{map_range, with_thread_cap, Execution};
use crate::scenario::{load_scenario, load_scenario_str, CertName, LoadedScenario};
use crate::sim::{simulate, StopReason, Trajectory};

/// Environment variable capping the number of batch workers.
pub const THREADS_ENV: &str = "BEARING_FLOWS_THREADS";

/// Scenario files shipped with the crate, by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("two_body", include_str!("../scenarios/two_body.json")),
    ("unit_square_cycle", include_str!("../scenarios/unit_square_cycle.json")),
    ("fig3_directed", include_str!("../scenarios/fig3_directed.json")),
    ("fig3_undirected", include_str!("../scenarios/fig3_undirected.json")),
    ("fig4_undirected", include_str!("../scenarios/fig4_undirected.json")),
    ("fig4_directed", include_str!("../scenarios/fig4_directed.json")),
    ("fig4_cycle", include_str!("../scenarios/fig4_cycle.json")),
    ("counterexample", include_str!("../scenarios/counterexample.json")),
    ("persistence_fig1", include_str!("../scenarios/persistence_fig1.json")),
    ("leader_follower", include_str!("../scenarios/leader_follower.json")),
];

pub fn bundled_scenario(name: &str) -> Result<LoadedScenario> {
    let text = BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| Error::UnknownName(name.to_string()))?;
    load_scenario_str(text, name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Command-line overrides applied on top of a scenario.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    pub seed: Option<u64>,
    /// Replaces the scenario's `analysis` list.
    pub certs: Option<Vec<CertName>>,
    pub out_dir: Option<PathBuf>,
    pub format: OutputFormat,
    pub exec: Execution,
    /// Replaces the scenario's controller family. Switching to consensus drops the target.
    pub controller: Option<ControllerFamily>,
    pub topology: Option<Topology>,
}

impl RunOptions {
    fn apply(&self, s: &mut LoadedScenario) -> Result<()> {
        if self.controller.is_some() || self.topology.is_some() {
            let mut sc = s.scenario.clone();
            if let Some(family) = self.controller {
                sc.controller.family = family;
                if family == ControllerFamily::Consensus {
                    sc.controller.target = None;
                }
            }
            if let Some(t) = self.topology {
                sc.controller.topology = t;
            }
            *s = sc.load(&s.name)?;
        }
        if let Some(dt) = self.dt {
            s.scenario.sim.dt = dt;
        }
        if let Some(t) = self.t_max {
            s.scenario.sim.t_max = t;
        }
        if let Some(seed) = self.seed {
            s.scenario.seed = Some(seed);
        }
        if let Some(certs) = &self.certs {
            s.scenario.analysis = certs.clone();
        }
        s.scenario.sim.validate()
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub name: String,
    pub trajectory: Trajectory,
    pub report: CertificateReport,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    /// `0` when the run converged, `2` when it hit the time limit.
    pub fn exit_code(&self) -> i32 {
        match self.trajectory.stop_reason {
            StopReason::Converged => 0,
            StopReason::TimeLimit => 2,
        }
    }
}

/// Computes the requested certificates. Certificates whose preconditions fail
/// are listed under `skipped` with the reason.
pub fn analyze(s: &LoadedScenario, certs: &[CertName], exec: Execution) -> CertificateReport {
    let mut report = CertificateReport {
        connectivity: Some(s.graph.connectivity()),
        ..CertificateReport::default()
    };
    let seed = s.scenario.seed.unwrap_or(0);
    let d = s.formation.d();
    let mut certs = certs.to_vec();
    certs.sort();
    certs.dedup();
    for cert in certs {
        let outcome: Result<()> = (|| {
            match cert {
                CertName::Nu => {
                    let undirected = s.graph.symmetrized();
                    let opts = NuOptions { seed, exec, ..NuOptions::default() };
                    let est = estimate_nu(&undirected, d, &opts)?;
                    report.nu = Some(NuReport::new(&est, d));
                    if est.value > 0.0 {
                        report.t_reach_bound = Some(finite_time_bound(&s.formation, est.value)?);
                    }
                }
                CertName::Conjecture => {
                    report.conjecture = Some(conjecture_bound(&s.formation, HamiltonianMetric::GraphCycle)?);
                }
                CertName::Spectrum => {
                    let target = s.target_formation.as_ref().unwrap_or(&s.formation);
                    report.spectrum = Some(SpectrumReport::from(&jacobian_spectrum(target)?));
                }
                CertName::Persistence => {
                    let opts = PersistenceOptions { seed, exec, ..PersistenceOptions::default() };
                    report.persistence = Some(persistence_check(&s.graph, d, &opts)?);
                }
                CertName::Rigidity => {
                    let target = s.target_formation.as_ref().unwrap_or(&s.formation);
                    report.rigidity = Some(is_bearing_rigid(target)?);
                }
            }
            Ok(())
        })();
        if let Err(e) = outcome {
            report.skipped.push((cert.to_string(), e.to_string()));
        }
    }
    report
}

#[derive(Serialize)]
struct TrajectoryJson<'a> {
    name: &'a str,
    d: usize,
    n: usize,
    stop_reason: StopReason,
    t_converge: Option<f64>,
    times: &'a [f64],
    states: &'a [Vec<f64>],
    monitors: &'a [crate::sim::MonitorRecord],
}

fn render_trajectory(name: &str, traj: &Trajectory, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => traj.to_csv_string(),
        OutputFormat::Json => Ok(serde_json::to_string_pretty(&TrajectoryJson {
            name,
            d: traj.d,
            n: traj.n,
            stop_reason: traj.stop_reason,
            t_converge: traj.t_converge,
            times: &traj.times,
            states: &traj.states,
            monitors: &traj.monitors,
        })?),
    }
}

/// Writes all `(path, contents)` pairs, or none: on failure the files already
/// written are removed.
pub fn write_all(files: &[(PathBuf, String)]) -> Result<()> {
    let mut done: Vec<&Path> = Vec::new();
    for (path, contents) in files {
        let tmp = path.with_extension("partial");
        let res = std::fs::write(&tmp, contents).and_then(|_| std::fs::rename(&tmp, path));
        if let Err(e) = res {
            let _ = std::fs::remove_file(&tmp);
            for p in done {
                let _ = std::fs::remove_file(p);
            }
            return Err(e.into());
        }
        done.push(path);
    }
    Ok(())
}

/// Simulates and analyzes a loaded scenario. Writes outputs when `out_dir` is set.
pub fn run_loaded(mut s: LoadedScenario, opts: &RunOptions) -> Result<RunOutcome> {
    opts.apply(&mut s)?;
    let trajectory = simulate(&s.formation, &s.kind, &s.scenario.sim)?;
    let report = analyze(&s, &s.scenario.analysis, opts.exec);
    let mut files = Vec::new();
    if let Some(dir) = &opts.out_dir {
        std::fs::create_dir_all(dir)?;
        let ext = match opts.format {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        };
        let traj_name = s
            .scenario
            .output
            .trajectory
            .clone()
            .unwrap_or_else(|| format!("{}_trajectory.{ext}", s.name));
        let report_name = s
            .scenario
            .output
            .report
            .clone()
            .unwrap_or_else(|| format!("{}_report.json", s.name));
        let contents = vec![
            (dir.join(traj_name), render_trajectory(&s.name, &trajectory, opts.format)?),
            (dir.join(report_name), report.to_json()),
        ];
        write_all(&contents)?;
        files = contents.into_iter().map(|(p, _)| p).collect();
    }
    Ok(RunOutcome { name: s.name, trajectory, report, files })
}

/// Loads, simulates, analyzes and writes one scenario file.
pub fn run_scenario(path: &Path, opts: &RunOptions) -> Result<RunOutcome> {
    run_loaded(load_scenario(path)?, opts)
}

/// Computes certificates only; writes the report when `out_dir` is set.
pub fn analyze_scenario(path: &Path, opts: &RunOptions) -> Result<(CertificateReport, Vec<PathBuf>)> {
    let mut s = load_scenario(path)?;
    opts.apply(&mut s)?;
    if s.scenario.seed.is_none() {
        if let Some(c) = s.scenario.analysis.iter().find(|c| c.randomized()) {
            return Err(Error::Scenario(format!("a seed is required for `{c}`; pass --seed")));
        }
    }
    let report = analyze(&s, &s.scenario.analysis, opts.exec);
    let mut files = Vec::new();
    if let Some(dir) = &opts.out_dir {
        std::fs::create_dir_all(dir)?;
        let name = s.scenario.output.report.clone().unwrap_or_else(|| format!("{}_report.json", s.name));
        let path = dir.join(name);
        write_all(&[(path.clone(), report.to_json())])?;
        files.push(path);
    }
    Ok((report, files))
}

/// Number of batch workers: `BEARING_FLOWS_THREADS` when set to a positive integer.
pub fn thread_cap_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&t| t > 0)
}

/// Runs scenario files concurrently, one worker per file, results in input order.
pub fn run_batch(paths: &[PathBuf], opts: &RunOptions) -> Vec<Result<RunOutcome>> {
    let inner = RunOptions { exec: Execution::Sequential, ..opts.clone() };
    with_thread_cap(thread_cap_from_env(), || {
        map_range(opts.exec, paths.len(), |k| run_scenario(&paths[k], &inner))
    })
}

#[derive(Debug, Clone)]
pub struct Reproduction {
    pub name: String,
    pub passed: bool,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

pub const REPRODUCTIONS: [&str; 4] = ["counterexample", "fig3", "fig4", "persistence-fig1"];

/// Runs one of the canned reproductions. CSV outputs go to `out_dir` when set.
pub fn reproduce(name: &str, out_dir: Option<&Path>) -> Result<Reproduction> {
    let mut summary = String::new();
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    let passed = match name {
        "counterexample" => {
            let s = bundled_scenario("counterexample")?;
            let target = s.target_formation.as_ref().expect("bundled target");
            let spec = jacobian_spectrum(target)?;
            let fmt = |v: &[nalgebra::Complex<f64>]| {
                v.iter().map(|z| format!("{:.6}{:+.6}i", z.re, z.im)).collect::<Vec<_>>().join(", ")
            };
            let (a, b) = (spec.max_real_jacobian(), spec.max_real_neg_laplacian());
            writeln!(summary, "eig(J_dir):  {}", fmt(&spec.jacobian_eigenvalues)).ok();
            writeln!(summary, "eig(-L_B):   {}", fmt(&spec.neg_laplacian_eigenvalues)).ok();
            writeln!(summary, "max Re eig(J_dir) = {a:.6e}").ok();
            writeln!(summary, "max Re eig(-L_B)  = {b:.6e}").ok();
            a > 1e-8 && b > 1e-8
        }
        "fig3" => {
            let dir = bundled_scenario("fig3_directed")?;
            let und = bundled_scenario("fig3_undirected")?;
            let td = simulate(&dir.formation, &dir.kind, &dir.scenario.sim)?;
            let tu = simulate(&und.formation, &und.kind, &und.scenario.sim)?;
            let scc = [0usize, 1, 2, 3];
            let scc_time = first_time(&td, |x| subset_diameter(x, 2, &scc) < dir.scenario.sim.stop_tol);
            let square = Formation::new(
                Arc::new(DirectedGraph::new(4, [(0, 1), (1, 2), (2, 3), (3, 0)])?),
                2,
                scc.iter().flat_map(|&i| dir.formation.point(i).to_vec()).collect(),
            )?;
            let bound = conjecture_bound(&square, HamiltonianMetric::GraphCycle)?;
            let v_dir = td.series("V").expect("V series");
            let phi_und = tu.series("phi_tilde").expect("phi series");
            let slack = 2.0 * dir.scenario.sim.dt;
            let mono = |s: &[f64]| s.windows(2).all(|w| w[1] <= w[0] + slack);
            writeln!(summary, "directed:   t_converge = {:?}, V monotone = {}", td.t_converge, mono(&v_dir)).ok();
            writeln!(summary, "undirected: t_converge = {:?}, phi monotone = {}", tu.t_converge, mono(&phi_und)).ok();
            writeln!(
                summary,
                "component 1-2-3-4: meets at t = {:?}; (l/2n)sec^2(pi/n) = {:.6}, (l/n)sec^2(pi/n) = {:.6}",
                scc_time, bound.bound, bound.doubled_bound
            )
            .ok();
            files.push((PathBuf::from("fig3_directed.csv"), td.to_csv_string()?));
            files.push((PathBuf::from("fig3_undirected.csv"), tu.to_csv_string()?));
            td.t_converge.is_some()
                && tu.t_converge.is_some()
                && mono(&v_dir)
                && mono(&phi_und)
                && scc_time.is_some_and(|t| t <= bound.bound * 1.02)
        }
        "fig4" => {
            let names = ["fig4_undirected", "fig4_directed", "fig4_cycle"];
            let mut series = Vec::new();
            let mut times = Vec::new();
            for n in names {
                let s = bundled_scenario(n)?;
                let t = simulate(&s.formation, &s.kind, &s.scenario.sim)?;
                let psi = t.series("psi").expect("psi series");
                writeln!(summary, "{n}: psi(0) = {:.6}, psi(end) = {:.6} at t = {:.3}", psi[0], psi[psi.len() - 1], t.final_time()).ok();
                times = t.times.clone();
                series.push(psi);
            }
            let mut csv = String::from("t,psi,psi_d,psi_c\n");
            let len = series.iter().map(|s| s.len()).min().unwrap_or(0);
            for k in 0..len {
                writeln!(csv, "{},{},{},{}", times[k], series[0][k], series[1][k], series[2][k]).ok();
            }
            files.push((PathBuf::from("fig4_psi.csv"), csv));
            series.iter().all(|s| s.last().is_some_and(|&v| v < 0.05))
        }
        "persistence-fig1" => {
            let s = bundled_scenario("persistence_fig1")?;
            let target = s.target_formation.as_ref().expect("bundled target");
            let check = validate_witness(&s.formation, target, 1e-2)?;
            writeln!(
                summary,
                "reference pair: per-node residual = {:.3e}, relation = {:?}, bearing gap = {:.3}",
                check.residual, check.relation, check.bearing_gap
            )
            .ok();
            let opts = PersistenceOptions { seed: s.scenario.seed.unwrap_or(0), ..PersistenceOptions::default() };
            let verdict = persistence_check(&s.graph, 2, &opts)?;
            match verdict.witness() {
                Some(w) => writeln!(summary, "search: NonPersistentWitness (trial {}, residual {:.3e})", w.trial, w.residual),
                None => writeln!(summary, "search: PersistentUpToSampling"),
            }
            .ok();
            check.valid && verdict.witness().is_some()
        }
        other => return Err(Error::UnknownName(other.to_string())),
    };
    writeln!(summary, "{}", if passed { "PASS" } else { "FAIL" }).ok();
    let mut written = Vec::new();
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let files: Vec<(PathBuf, String)> = files.into_iter().map(|(p, c)| (dir.join(p), c)).collect();
        write_all(&files)?;
        written = files.into_iter().map(|(p, _)| p).collect();
    }
    Ok(Reproduction { name: name.to_string(), passed, summary, files: written })
}

fn subset_diameter(x: &[f64], d: usize, agents: &[usize]) -> f64 {
    let pts: Vec<f64> = agents.iter().flat_map(|&i| x[i * d..(i + 1) * d].to_vec()).collect();
    crate::geometry::diameter(&pts, d)
}

fn first_time(t: &Trajectory, pred: impl Fn(&[f64]) -> bool) -> Option<f64> {
    t.states.iter().zip(&t.times).find(|(x, _)| pred(x)).map(|(_, &t)| t)
}
