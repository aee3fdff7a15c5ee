use serde::Serialize;

use super::bounds::ConjectureBound;
use super::nu::NuEstimate;
use super::persistence::PersistenceVerdict;
use super::spectrum::JacobianSpectrum;
use crate::geometry::RigidityReport;
use crate::graph::ConnectivityReport;

#[derive(Debug, Clone, Serialize)]
pub struct NuReport {
    pub estimate: f64,
    pub method: &'static str,
    pub restarts: usize,
    pub patterns_searched: usize,
    pub runs: usize,
    pub converged_runs: usize,
    /// Best configuration found, one point per agent.
    pub best_minimizer: Vec<Vec<f64>>,
    /// Blocks of coincident agents in the best configuration, 1-based.
    pub coincident_blocks: Vec<Vec<usize>>,
}

impl NuReport {
    pub fn new(est: &NuEstimate, d: usize) -> Self {
        Self {
            estimate: est.value,
            method: "multi-start projected gradient descent over coincidence patterns (estimate)",
            restarts: est.restarts,
            patterns_searched: est.patterns_searched,
            runs: est.runs,
            converged_runs: est.converged_runs,
            best_minimizer: est.minimizer.chunks(d).map(|c| c.to_vec()).collect(),
            coincident_blocks: est
                .pattern
                .iter()
                .map(|b| b.iter().map(|i| i + 1).collect())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    /// Eigenvalues of `J_dir` as `[re, im]`.
    pub jacobian: Vec<[f64; 2]>,
    /// Eigenvalues of `-L_B` as `[re, im]`.
    pub neg_bearing_laplacian: Vec<[f64; 2]>,
    pub max_real_jacobian: f64,
    pub max_real_neg_bearing_laplacian: f64,
}

impl From<&JacobianSpectrum> for SpectrumReport {
    fn from(s: &JacobianSpectrum) -> Self {
        let pairs = |v: &[nalgebra::Complex<f64>]| v.iter().map(|z| [z.re, z.im]).collect();
        Self {
            jacobian: pairs(&s.jacobian_eigenvalues),
            neg_bearing_laplacian: pairs(&s.neg_laplacian_eigenvalues),
            max_real_jacobian: s.max_real_jacobian(),
            max_real_neg_bearing_laplacian: s.max_real_neg_laplacian(),
        }
    }
}

/// Everything `analyze` computes for one scenario. Absent sections were not
/// requested or did not apply.
#[derive(Debug, Clone, Default, Serialize)]
pub struct CertificateReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub connectivity: Option<ConnectivityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<NuReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_reach_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conjecture: Option<ConjectureBound>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rigidity: Option<RigidityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub persistence: Option<PersistenceVerdict>,
    /// Certificates that were requested but could not be computed, with the reason.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<(String, String)>,
}

impl CertificateReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
