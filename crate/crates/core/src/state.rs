//! Density matrices in the occupation eigenbasis.

use std::ops::Deref;

use nalgebra::DMatrix;
use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::secular::thermal_occupation;
use crate::spectrum::ChainParams;

/// Hermitian, unit-trace `2^N × 2^N` matrix. Positivity is not enforced.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Array2<Complex64>);

impl DensityMatrix {
    pub const HERMITICITY_TOL: f64 = 1e-10;
    pub const TRACE_TOL: f64 = 1e-8;

    pub fn new(m: Array2<Complex64>) -> Result<Self> {
        let (r, c) = m.dim();
        if r != c || !r.is_power_of_two() {
            return Err(Error::arg(format!("density matrix must be 2^N square, got {r}x{c}")));
        }
        let rho = DensityMatrix(m);
        if rho.hermiticity_defect() > Self::HERMITICITY_TOL {
            return Err(Error::arg("density matrix is not Hermitian"));
        }
        if rho.trace_error() > Self::TRACE_TOL {
            return Err(Error::arg("density matrix does not have unit trace"));
        }
        Ok(rho)
    }

    /// `I / 2^N`.
    pub fn maximally_mixed(p: &ChainParams) -> Self {
        let dim = p.dim();
        DensityMatrix(Array2::from_diag_elem(dim, Complex64::new(1.0 / dim as f64, 0.0)))
    }

    /// Canonical product state `Π_a e^{β k_a ω_a}/(1 + e^{β ω_a})`.
    pub fn thermal(p: &ChainParams, beta: f64) -> Self {
        let occ: Vec<f64> = p.omegas().iter().map(|&w| thermal_occupation(beta, w)).collect();
        DensityMatrix::diagonal_product(p, &occ)
    }

    /// Diagonal product state with mode occupations `occ[a-1]`.
    pub fn diagonal_product(p: &ChainParams, occ: &[f64]) -> Self {
        let dim = p.dim();
        let diag = (0..dim).map(|k| {
            let w: f64 = occ
                .iter()
                .enumerate()
                .map(|(a, &o)| if (k >> a) & 1 == 1 { o } else { 1.0 - o })
                .product();
            Complex64::new(w, 0.0)
        });
        let mut m = Array2::zeros((dim, dim));
        for (k, v) in diag.enumerate() {
            m[[k, k]] = v;
        }
        DensityMatrix(m)
    }

    pub(crate) fn from_raw(m: Array2<Complex64>) -> Self {
        DensityMatrix(m)
    }

    pub fn into_inner(self) -> Array2<Complex64> {
        self.0
    }

    pub fn trace(&self) -> Complex64 {
        self.0.diag().sum()
    }

    pub fn trace_error(&self) -> f64 {
        (self.trace() - Complex64::new(1.0, 0.0)).norm()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.0)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let n = self.0.nrows();
        let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (self.0[[i, j]] + self.0[[j, i]].conj()));
        m.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

impl Deref for DensityMatrix {
    type Target = Array2<Complex64>;
    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

pub fn hermiticity_defect(m: &Array2<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..=i {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    worst
}
