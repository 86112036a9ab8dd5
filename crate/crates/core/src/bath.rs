//! Gaussian bath spectrum and the finite-time (incomplete) spectral function.
//!
//! The bath is characterised by `γ(ω) = λ² exp(-½(ω/σ - βσ/2)²)`. The
//! half-sided transform `Γ_t(ω) = ∫_0^t dτ C(τ) e^{iωτ}` is evaluated in closed
//! form for the order-`n` rational approximant
//! `γ_n(ω) = λ² (1 + (ω/σ - βσ/2)²/(2n))^{-n}`, whose only lower-half-plane
//! pole `ω_0 = σ(βσ/2 - i√(2n))` yields a finite sum of regularized gamma
//! functions.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DEFAULT_TRUNCATION: usize = 2;
pub const MAX_TRUNCATION: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathParams {
    /// Coupling strength `λ`.
    pub lambda: f64,
    /// Inverse bath temperature.
    pub beta: f64,
    /// Inverse correlation time `σ`.
    pub sigma: f64,
    /// Truncation order `n` of the rational approximant.
    pub n_trunc: usize,
}

impl BathParams {
    pub fn new(lambda: f64, beta: f64, sigma: f64, n_trunc: usize) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::arg("lambda must be finite and non-negative"));
        }
        if !beta.is_finite() {
            return Err(Error::arg("beta_bath must be finite"));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::arg("sigma must be positive"));
        }
        if n_trunc == 0 || n_trunc > MAX_TRUNCATION {
            return Err(Error::arg(format!("n_trunc must lie in 1..={MAX_TRUNCATION}")));
        }
        Ok(BathParams { lambda, beta, sigma, n_trunc })
    }

    /// Lower-half-plane pole `ω_0` of the rational approximant.
    pub fn pole(&self) -> Complex64 {
        let n = self.n_trunc as f64;
        Complex64::new(self.beta * self.sigma / 2.0, -(2.0 * n).sqrt()) * self.sigma
    }

    /// Frequency at which `γ` peaks, `βσ²/2`.
    pub fn peak_frequency(&self) -> f64 {
        0.5 * self.beta * self.sigma * self.sigma
    }

    #[inline]
    fn detuning(&self, omega: f64) -> f64 {
        omega / self.sigma - 0.5 * self.beta * self.sigma
    }
}

/// Exact Gaussian spectrum `γ(ω)`.
pub fn spectral_density(b: &BathParams, omega: f64) -> f64 {
    let u = b.detuning(omega);
    b.lambda * b.lambda * (-0.5 * u * u).exp()
}

/// Order-`n` rational approximant `γ_n(ω)` used inside `Γ_t`.
pub fn truncated_spectral_density(b: &BathParams, omega: f64) -> f64 {
    let u = b.detuning(omega);
    let n = b.n_trunc as f64;
    b.lambda * b.lambda * (1.0 + u * u / (2.0 * n)).powi(-(b.n_trunc as i32))
}

fn ln_factorial(m: usize) -> f64 {
    (2..=m).map(|i| (i as f64).ln()).sum()
}

/// Lower regularized gamma function `P(s, z) = 1 - e^{-z} Σ_{m<s} z^m/m!`
/// for integer order `s ≥ 1` and complex `z` (`P(0, z) = 1`).
pub fn regularized_gamma_p(s: usize, z: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    if s == 0 {
        return one;
    }
    if z == Complex64::new(0.0, 0.0) {
        return Complex64::new(0.0, 0.0);
    }
    let abs = z.norm();
    if abs < s as f64 + 1.0 {
        // Tail series e^{-z} Σ_{m≥s} z^m/m!: no cancellation for small |z|.
        let lead = (-z + z.ln() * s as f64 - ln_factorial(s)).exp();
        let mut term = one;
        let mut sum = one;
        let mut m = s;
        loop {
            m += 1;
            term = term * z / m as f64;
            sum += term;
            if term.norm() <= 1e-17 * sum.norm() || m > s + 500 {
                break;
            }
        }
        return lead * sum;
    }
    let log_z = z.ln();
    let mut head = Complex64::new(0.0, 0.0);
    for m in 0..s {
        head += (-z + log_z * m as f64 - ln_factorial(m)).exp();
    }
    one - head
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `(λ²/4^n) C(2n-2-k, n-1) (√(8n) iσ/(ω-ω_0))^{k+1}` for `k = 0..n`.
fn residue_terms(b: &BathParams, omega: f64) -> (Complex64, Vec<Complex64>) {
    let n = b.n_trunc;
    let shift = Complex64::new(omega, 0.0) - b.pole();
    let ratio = Complex64::new(0.0, (8.0 * n as f64).sqrt() * b.sigma) / shift;
    let scale = b.lambda * b.lambda / 4f64.powi(n as i32);
    let mut power = ratio;
    let mut terms = Vec::with_capacity(n);
    for k in 0..n {
        terms.push(power * (scale * binomial(2 * n - 2 - k, n - 1)));
        power *= ratio;
    }
    (shift, terms)
}

/// Incomplete spectral function `Γ_t(ω)`; vanishes identically at `t = 0`.
pub fn incomplete_spectral(b: &BathParams, omega: f64, t: f64) -> Complex64 {
    if t <= 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let (shift, terms) = residue_terms(b, omega);
    let z = Complex64::new(0.0, -t) * shift;
    terms
        .iter()
        .enumerate()
        .map(|(k, c)| c * regularized_gamma_p(k + 1, z))
        .sum()
}

/// Markov limit `Γ_∞(ω)`: the residue sum with every gamma factor at its limit 1.
pub fn markov_spectral(b: &BathParams, omega: f64) -> Complex64 {
    residue_terms(b, omega).1.iter().sum()
}
