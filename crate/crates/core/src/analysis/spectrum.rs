use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::geometry::{bearing_laplacian, directed_jacobian, BearingTarget, Formation};

#[derive(Debug, Clone)]
pub struct JacobianSpectrum {
    pub jacobian: DMatrix<f64>,
    pub neg_bearing_laplacian: DMatrix<f64>,
    /// Eigenvalues of `J_dir`, sorted by decreasing real part.
    pub jacobian_eigenvalues: Vec<Complex<f64>>,
    /// Eigenvalues of `-L_B`, sorted by decreasing real part.
    pub neg_laplacian_eigenvalues: Vec<Complex<f64>>,
}

impl JacobianSpectrum {
    pub fn max_real_jacobian(&self) -> f64 {
        max_real(&self.jacobian_eigenvalues)
    }

    pub fn max_real_neg_laplacian(&self) -> f64 {
        max_real(&self.neg_laplacian_eigenvalues)
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.jacobian_eigenvalues
            .iter()
            .chain(&self.neg_laplacian_eigenvalues)
            .map(|z| z.im.abs())
            .fold(0.0, f64::max)
    }
}

fn max_real(eigs: &[Complex<f64>]) -> f64 {
    eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

pub(crate) fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    let mut eigs: Vec<Complex<f64>> = m.complex_eigenvalues().iter().copied().collect();
    eigs.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    eigs
}

/// Spectra of the directed formation Jacobian and of `-L_B` at the target formation.
pub fn jacobian_spectrum(target: &Formation) -> Result<JacobianSpectrum> {
    if let Some((i, j)) = target.coincident_edge() {
        return Err(Error::DegenerateFormation(i, j));
    }
    let t = BearingTarget::from_formation(target)?;
    let jacobian = directed_jacobian(target.graph(), &t)?;
    let neg_bearing_laplacian = -bearing_laplacian(target.graph(), &t)?;
    Ok(JacobianSpectrum {
        jacobian_eigenvalues: sorted_eigenvalues(&jacobian),
        neg_laplacian_eigenvalues: sorted_eigenvalues(&neg_bearing_laplacian),
        jacobian,
        neg_bearing_laplacian,
    })
}
