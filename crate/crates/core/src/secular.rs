//! Secular (strong coarse-graining, Markovian) limit.
//!
//! Diagonal populations obey classical rate equations that factorise over
//! modes: each mode relaxes exponentially to `γ(ω_a)/(γ(ω_a) + γ(-ω_a))` with
//! time constant `τ_a = (N+1)/(2(γ(ω_a)+γ(-ω_a)) sin²(πa/(N+1)))`. The exact
//! Gaussian spectrum is used throughout, so the steady state is exactly the
//! bath-temperature Gibbs state.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::bath::{spectral_density, BathParams};
use crate::error::{Error, Result};
use crate::spectrum::{site_mode_coeff, ChainParams};

/// Fermi occupation `1/(1 + e^{-βω})` of a mode with `H = -ω ψ̃†ψ̃`.
pub fn thermal_occupation(beta: f64, omega: f64) -> f64 {
    1.0 / (1.0 + (-beta * omega).exp())
}

/// Per-mode closed-form relaxation data.
#[derive(Debug, Clone, PartialEq)]
pub struct SecularSolution {
    pub omegas: Vec<f64>,
    pub occ0: Vec<f64>,
    pub occ_inf: Vec<f64>,
    pub tau: Vec<f64>,
}

impl SecularSolution {
    pub fn new(p: &ChainParams, b: &BathParams, occ0: &[f64]) -> Result<Self> {
        if occ0.len() != p.n {
            return Err(Error::arg(format!("need {} initial occupations, got {}", p.n, occ0.len())));
        }
        if occ0.iter().any(|o| !(0.0..=1.0).contains(o)) {
            return Err(Error::arg("initial occupations must lie in [0, 1]"));
        }
        let scale = p.n as f64 + 1.0;
        let omegas = p.omegas();
        let mut occ_inf = Vec::with_capacity(p.n);
        let mut tau = Vec::with_capacity(p.n);
        for (i, &w) in omegas.iter().enumerate() {
            let (up, down) = (spectral_density(b, w), spectral_density(b, -w));
            let sin2 = (PI * (i + 1) as f64 / scale).sin().powi(2);
            occ_inf.push(up / (up + down));
            tau.push(scale / (2.0 * (up + down) * sin2));
        }
        Ok(SecularSolution { omegas, occ0: occ0.to_vec(), occ_inf, tau })
    }

    /// Initial state thermal at inverse temperature `beta_sys0` (0: maximally mixed).
    pub fn thermal_start(p: &ChainParams, b: &BathParams, beta_sys0: f64) -> Result<Self> {
        let occ0: Vec<f64> = p.omegas().iter().map(|&w| thermal_occupation(beta_sys0, w)).collect();
        Self::new(p, b, &occ0)
    }

    /// Occupation of the 1-based mode `a` at time `t`.
    pub fn occupation(&self, t: f64, a: usize) -> f64 {
        let i = a - 1;
        self.occ_inf[i] + (self.occ0[i] - self.occ_inf[i]) * (-t / self.tau[i]).exp()
    }

    /// `⟨H⟩(t) = -Σ_a ω_a ρ^a_11(t)`.
    pub fn energy(&self, t: f64) -> f64 {
        -(1..=self.omegas.len())
            .map(|a| self.omegas[a - 1] * self.occupation(t, a))
            .sum::<f64>()
    }

    /// `J(t) = -Σ_a (ω_a/τ_a)(ρ^a_11(0) - ρ^a_11(∞)) e^{-t/τ_a}`.
    pub fn flux(&self, t: f64) -> f64 {
        -(0..self.omegas.len())
            .map(|i| self.omegas[i] / self.tau[i] * (self.occ0[i] - self.occ_inf[i]) * (-t / self.tau[i]).exp())
            .sum::<f64>()
    }

    /// `⟨σ^z_n⟩(t) = 2 Σ_a u_{na}² ρ^a_11(t) - 1`.
    pub fn magnetization(&self, t: f64, site: usize) -> f64 {
        let n = self.omegas.len();
        let filled: f64 = (1..=n)
            .map(|a| site_mode_coeff(n, site, a).powi(2) * self.occupation(t, a))
            .sum();
        2.0 * filled - 1.0
    }

    /// Slowest relaxation time.
    pub fn max_tau(&self) -> f64 {
        self.tau.iter().cloned().fold(0.0, f64::max)
    }
}

/// Occupation of mode `a` (1-based) at time `t`.
pub fn occupation(t: f64, sol: &SecularSolution, a: usize) -> Result<f64> {
    if a == 0 || a > sol.omegas.len() {
        return Err(Error::arg(format!("mode index {a} out of range")));
    }
    if t < 0.0 {
        return Err(Error::arg("time must be non-negative"));
    }
    Ok(sol.occupation(t, a))
}

pub fn secular_flux(t: f64, p: &ChainParams, b: &BathParams, occ0: &[f64]) -> Result<f64> {
    Ok(SecularSolution::new(p, b, occ0)?.flux(t))
}

/// Rate-equation generator on the `2^N` populations: `d p/dt = M p`.
pub fn rate_matrix(p: &ChainParams, b: &BathParams) -> Result<Array2<f64>> {
    p.require_dense(16)?;
    let n = p.n;
    let dim = p.dim();
    let omegas = p.omegas();
    let weight: Vec<f64> = (1..=n).map(|a| site_mode_coeff(n, 1, a).powi(2)).collect();
    let mut m = Array2::<f64>::zeros((dim, dim));
    for k in 0..dim {
        for a in 0..n {
            let s = if (k >> a) & 1 == 1 { 1.0 } else { -1.0 };
            let w = s * omegas[a];
            m[[k, k ^ (1 << a)]] += weight[a] * spectral_density(b, w);
            m[[k, k]] -= weight[a] * spectral_density(b, -w);
        }
    }
    Ok(m)
}

/// Exponential envelopes `(lower, upper)` for `|J(t)/J(0)|` set by the
/// central (`ω = h`) and outermost (`ω = h + j`, small-wavenumber) modes.
pub fn flux_bounds(t: f64, p: &ChainParams, b: &BathParams) -> (f64, f64) {
    let scale = p.n as f64 + 1.0;
    let center = spectral_density(b, p.h) + spectral_density(b, -p.h);
    let edge = spectral_density(b, p.h + p.j) + spectral_density(b, -p.h - p.j);
    let lower = (-2.0 * t * center / scale).exp();
    let upper = (-2.0 * t * PI * PI * edge / scale.powi(3)).exp();
    (lower, upper)
}
