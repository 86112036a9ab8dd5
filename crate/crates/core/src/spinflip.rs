//! Unitary response of the local magnetization to a spin flip at site 1.
//!
//! `Δ^z(n, t) = ⟨σ^x_1 e^{itH} σ^z_n e^{-itH} σ^x_1⟩ - ⟨σ^z_n⟩` for an
//! isolated chain, either in an eigenstate, a canonical ensemble, the
//! thermodynamic limit, or the high/low temperature asymptotics.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::sync::{OnceLock, RwLock};

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadOptions};
use crate::secular::thermal_occupation;
use crate::spectrum::{boundary_flip_matrix, energies, number_operator_matrix, ChainParams, OccupationConfig};

/// Largest chain for the dense oracle.
pub const BRUTE_FORCE_SITE_CAP: usize = 8;

const THERMO_TOL: f64 = 1e-10;
const FOURIER_TOL: f64 = 1e-13;
const CACHE_GRANULARITY: f64 = 1e12;

fn mode_phase(t: f64, omega: f64) -> Complex64 {
    Complex64::new(0.0, t * omega).exp()
}

/// `f(β) - f(-β)` with `f(β) = 1/(1 + e^{βω})`, odd in `β` by construction.
fn occupation_contrast(beta: f64, omega: f64) -> f64 {
    -(0.5 * beta * omega).tanh()
}

fn check_site(n: usize, sites: usize) -> Result<()> {
    if n == 0 || n > sites {
        return Err(Error::arg(format!("site index {n} outside 1..={sites}")));
    }
    Ok(())
}

/// Response in the eigenstate `k`, from the double mode sum.
pub fn eigenstate_response(p: &ChainParams, k: &OccupationConfig, n: usize, t: f64) -> Result<f64> {
    check_site(n, p.n)?;
    if k.len() != p.n {
        return Err(Error::arg(format!("configuration has {} modes, chain has {}", k.len(), p.n)));
    }
    let scale = p.n as f64 + 1.0;
    let omegas = p.omegas();
    let v: Vec<Complex64> = (1..=p.n)
        .map(|a| {
            let q = PI * a as f64 / scale;
            mode_phase(-t, omegas[a - 1]) * (q.sin() * (n as f64 * q).sin())
        })
        .collect();
    let occ: Vec<f64> = (1..=p.n).map(|a| if k.occupied(a) { 1.0 } else { 0.0 }).collect();
    let mut sum = Complex64::new(0.0, 0.0);
    for a in 0..p.n {
        for b in 0..p.n {
            sum += v[a] * v[b].conj() * (1.0 - occ[a] - occ[b]);
        }
    }
    let pref = 2.0 / scale;
    debug_assert!(sum.im.abs() < 1e-10);
    Ok(2.0 * pref * pref * sum.re)
}

/// Canonical-ensemble response at inverse temperature `beta`.
///
/// With `S = Σ_a v_a` and `D = Σ_a v_a (f_a(β) - f_a(-β))` the difference of
/// squared moduli collapses to `2 Re(D S̄)`, because `f(β) + f(-β) = 1`.
pub fn thermal_response(p: &ChainParams, beta: f64, n: usize, t: f64) -> Result<f64> {
    check_site(n, p.n)?;
    if !beta.is_finite() {
        return Err(Error::arg("beta must be finite"));
    }
    let scale = p.n as f64 + 1.0;
    let mut s = Complex64::new(0.0, 0.0);
    let mut d = Complex64::new(0.0, 0.0);
    for (i, w) in p.omegas().into_iter().enumerate() {
        let q = PI * (i + 1) as f64 / scale;
        let v = mode_phase(t, w) * (q.sin() * (n as f64 * q).sin());
        s += v;
        d += v * occupation_contrast(beta, w);
    }
    let pref = 2.0 / scale;
    Ok(2.0 * pref * pref * (d * s.conj()).re)
}

/// Thermodynamic-limit response, integrating over `x = cos a` on `[0, π]`.
pub fn thermo_integral_response(j: f64, h: f64, beta: f64, n: usize, t: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::arg("site index must be at least 1"));
    }
    if !beta.is_finite() {
        return Err(Error::arg("beta must be finite"));
    }
    let opts = QuadOptions { abs_tol: THERMO_TOL, ..QuadOptions::default() };
    let weight = |a: f64| mode_phase(t * j, a.cos()) * (a.sin() * (n as f64 * a).sin());
    let s = integrate(weight, 0.0, PI, opts)?.value * (2.0 / PI);
    let d = integrate(|a: f64| weight(a) * occupation_contrast(beta, h + j * a.cos()), 0.0, PI, opts)?.value
        * (2.0 / PI);
    Ok(2.0 * (d * s.conj()).re)
}

fn fourier_cache() -> &'static RwLock<HashMap<(usize, i64), f64>> {
    static CACHE: OnceLock<RwLock<HashMap<(usize, i64), f64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn fourier_coeff_uncached(n: usize, z: f64) -> Result<f64> {
    let opts = QuadOptions { abs_tol: FOURIER_TOL, max_intervals: 20_000, ..QuadOptions::default() };
    let q = integrate(|a: f64| (z * a.cos() - FRAC_PI_4).sin() * (n as f64 * a).cos(), 0.0, PI, opts)?;
    Ok(q.value * 2.0 / PI)
}

/// Cosine-series coefficient `b_n(z) = (2/π)∫_0^π sin(z cos a - π/4) cos(na) da`.
pub fn fourier_coeff_b(n: usize, z: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::arg("harmonic index must be at least 1"));
    }
    if !z.is_finite() {
        return Err(Error::arg("argument must be finite"));
    }
    let scaled = (z * CACHE_GRANULARITY).round();
    if scaled.abs() >= i64::MAX as f64 {
        return fourier_coeff_uncached(n, z);
    }
    let key = (n, scaled as i64);
    if let Some(&v) = fourier_cache().read().expect("cache poisoned").get(&key) {
        return Ok(v);
    }
    let v = fourier_coeff_uncached(n, z)?;
    fourier_cache().write().expect("cache poisoned").insert(key, v);
    Ok(v)
}

fn asymptotic_argument(j: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("asymptotic response needs t > 0, got {t}")));
    }
    if j == 0.0 {
        return Err(Error::Domain("asymptotic response needs j != 0".into()));
    }
    Ok(t * j)
}

/// `Δ/(βh) = -2 (n b_n(tj)/(tj))²`, the temperature-free shape of the
/// high-temperature response.
pub fn high_temp_normalized(j: f64, n: usize, t: f64) -> Result<f64> {
    let z = asymptotic_argument(j, t)?;
    let r = n as f64 * fourier_coeff_b(n, z)? / z;
    Ok(-2.0 * r * r)
}

/// Leading order in `β` of the thermodynamic-limit response.
pub fn high_temp_response(j: f64, h: f64, beta: f64, n: usize, t: f64) -> Result<f64> {
    Ok(beta * h * high_temp_normalized(j, n, t)?)
}

/// Low-temperature response; only modes with `|x| < |h/j|` contribute.
pub fn low_temp_response(j: f64, h: f64, n: usize, t: f64) -> Result<f64> {
    let z = asymptotic_argument(j, t)?;
    if h == 0.0 {
        return Ok(0.0);
    }
    let zeta = (h / j).abs().min(1.0).asin();
    let opts = QuadOptions { abs_tol: FOURIER_TOL, max_intervals: 20_000, ..QuadOptions::default() };
    let band = integrate(
        |a: f64| (z * a.cos() - FRAC_PI_4).cos() * a.sin() * (n as f64 * a).sin(),
        FRAC_PI_2 - zeta,
        FRAC_PI_2 + zeta,
        opts,
    )?
    .value;
    let b = fourier_coeff_b(n, z)?;
    Ok(-8.0 * h.signum() * n as f64 * b / (PI * z) * band)
}

/// State over which the brute-force response is averaged.
#[derive(Debug, Clone, PartialEq)]
pub enum ResponseState {
    Eigenstate(OccupationConfig),
    Thermal(f64),
}

/// Dense `σ^x_1 e^{itH} σ^z_n e^{-itH} σ^x_1 - σ^z_n` in the occupation basis.
pub fn brute_force_operator(p: &ChainParams, n: usize, t: f64) -> Result<Array2<Complex64>> {
    p.require_dense(BRUTE_FORCE_SITE_CAP)?;
    check_site(n, p.n)?;
    let dim = p.dim();
    let x = boundary_flip_matrix(p)?.mapv(|v| Complex64::new(v, 0.0));
    let z = (number_operator_matrix(p, n)? * 2.0 - Array2::<f64>::eye(dim)).mapv(|v| Complex64::new(v, 0.0));
    let e = energies(p);
    let forward = Array2::from_diag(&ndarray::Array1::from_iter(e.iter().map(|&w| mode_phase(t, w))));
    let backward = forward.mapv(|v| v.conj());
    let heisenberg = forward.dot(&z).dot(&backward);
    Ok(x.dot(&heisenberg).dot(&x) - z)
}

/// Oracle: evaluates the response with dense matrices, `N ≤ 8`.
pub fn brute_force_response(p: &ChainParams, state: &ResponseState, n: usize, t: f64) -> Result<f64> {
    let op = brute_force_operator(p, n, t)?;
    let value = match state {
        ResponseState::Eigenstate(k) => {
            if k.len() != p.n {
                return Err(Error::arg("configuration length does not match chain"));
            }
            op[[k.index() as usize, k.index() as usize]]
        }
        ResponseState::Thermal(beta) => {
            let occ: Vec<f64> = p.omegas().iter().map(|&w| thermal_occupation(*beta, w)).collect();
            (0..p.dim())
                .map(|k| {
                    let w: f64 = occ
                        .iter()
                        .enumerate()
                        .map(|(a, &o)| if (k >> a) & 1 == 1 { o } else { 1.0 - o })
                        .product();
                    op[[k, k]] * w
                })
                .sum()
        }
    };
    debug_assert!(value.im.abs() < 1e-10);
    Ok(value.re)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Regime {
    Eigenstate(OccupationConfig),
    Thermal,
    ThermoIntegral,
    HighTemp,
    LowTemp,
}

/// One evaluation point of the response; `sites = None` is the infinite chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseQuery {
    pub j: f64,
    pub h: f64,
    pub sites: Option<usize>,
    pub n: usize,
    pub t: f64,
    pub beta: f64,
    pub regime: Regime,
}

impl ResponseQuery {
    pub fn validate(&self) -> Result<()> {
        if !(self.t >= 0.0) || !self.t.is_finite() {
            return Err(Error::arg("time must be finite and non-negative"));
        }
        match (&self.regime, self.sites) {
            (Regime::Eigenstate(_) | Regime::Thermal, None) => {
                Err(Error::arg("finite-chain regimes need a chain length"))
            }
            (Regime::Eigenstate(_) | Regime::Thermal, Some(sites)) => check_site(self.n, sites),
            _ if self.n == 0 => Err(Error::arg("site index must be at least 1")),
            _ => Ok(()),
        }
    }

    pub fn evaluate(&self) -> Result<f64> {
        self.validate()?;
        let chain = || ChainParams::new(self.sites.unwrap_or(0), self.j, self.h);
        match &self.regime {
            Regime::Eigenstate(k) => eigenstate_response(&chain()?, k, self.n, self.t),
            Regime::Thermal => thermal_response(&chain()?, self.beta, self.n, self.t),
            Regime::ThermoIntegral => thermo_integral_response(self.j, self.h, self.beta, self.n, self.t),
            Regime::HighTemp => high_temp_response(self.j, self.h, self.beta, self.n, self.t),
            Regime::LowTemp => low_temp_response(self.j, self.h, self.n, self.t),
        }
    }

    /// `Δ/(βh)`.
    pub fn evaluate_normalized(&self) -> Result<f64> {
        let scale = self.beta * self.h;
        if scale == 0.0 {
            return Err(Error::Domain("normalization by beta*h needs both non-zero".into()));
        }
        Ok(self.evaluate()? / scale)
    }
}
