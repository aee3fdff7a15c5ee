//! Certificates around the closed loops: the `ν` constant and time bounds,
//! Jacobian spectra, Fermat-point equilibria and bearing persistence.

mod bounds;
mod fermat;
mod nu;
mod persistence;
mod report;
mod spectrum;

use nalgebra::DMatrix;

pub use bounds::{conjecture_bound, finite_time_bound, ConjectureBound, HamiltonianMetric};
pub use fermat::{fermat_equilibrium, fermat_objective, stationarity_residual, FermatSolution};
pub use nu::{
    coincidence_patterns, estimate_nu, estimate_nu_unchecked, gradient_norm, NuEstimate, NuOptions,
};
pub use persistence::{
    per_node_residual, persistence_check, validate_witness, PersistenceOptions, PersistenceVerdict,
    Witness, WitnessCheck,
};
pub use report::{CertificateReport, NuReport, SpectrumReport};
pub use spectrum::{jacobian_spectrum, JacobianSpectrum};

/// `J = (I_n - 11ᵀ/n) ⊗ I_d`, removing the common translation from stacked positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DisagreementProjector {
    pub n: usize,
    pub d: usize,
}

impl DisagreementProjector {
    pub fn new(n: usize, d: usize) -> Self {
        Self { n, d }
    }

    /// `δ = Jx`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let c = crate::geometry::centroid(x, self.d);
        x.iter().enumerate().map(|(k, v)| v - c[k % self.d]).collect()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.n as f64;
        let base = DMatrix::from_fn(self.n, self.n, |r, c| if r == c { 1.0 - 1.0 / n } else { -1.0 / n });
        crate::geometry::inflate(&base, self.d)
    }
}
