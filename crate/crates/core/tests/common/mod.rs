#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use spinheat::bath::{truncated_spectral_density, BathParams};
use spinheat::quad::{integrate, QuadOptions};

/// `Γ_t(ω) = (1/2π) ∫ dω' γ_n(ω') ∫_0^t dτ e^{i(ω-ω')τ}`, with the inner
/// integral done exactly and the outer one by quadrature after mapping the
/// real line onto `(-π/2, π/2)` through `ω' = ω_peak + σ√(2n) tan θ`.
pub fn gamma_t_by_quadrature(b: &BathParams, omega: f64, t: f64) -> Complex64 {
    let width = b.sigma * (2.0 * b.n_trunc as f64).sqrt();
    let inner = |x: f64| {
        if (x * t).abs() < 1e-6 {
            let xt = x * t;
            Complex64::new(t * (1.0 - xt * xt / 6.0), t * xt / 2.0)
        } else {
            Complex64::new((x * t).sin() / x, (1.0 - (x * t).cos()) / x)
        }
    };
    let integrand = |theta: f64| {
        let w = b.peak_frequency() + width * theta.tan();
        let jac = width / theta.cos().powi(2);
        inner(omega - w) * (truncated_spectral_density(b, w) * jac)
    };
    let opts = QuadOptions { abs_tol: 1e-10, rel_tol: 0.0, max_intervals: 200_000 };
    let eps = 1e-9;
    integrate(integrand, -FRAC_PI_2 + eps, FRAC_PI_2 - eps, opts).unwrap().value / (2.0 * PI)
}

/// `J_0..=J_max` by Miller's backward recurrence.
pub fn bessel_j(max: usize, z: f64) -> Vec<f64> {
    if z == 0.0 {
        return (0..=max).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect();
    }
    let start = 2 * ((max.max(z.abs() as usize) + 40) / 2);
    let mut vals = vec![0.0; start + 2];
    vals[start] = 1e-300;
    for k in (1..=start).rev() {
        vals[k - 1] = 2.0 * k as f64 / z * vals[k] - vals[k + 1];
        if vals[k - 1].abs() > 1e250 {
            for v in vals.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let norm = vals[0] + 2.0 * (1..=start / 2).map(|k| vals[2 * k]).sum::<f64>();
    vals.truncate(max + 1);
    vals.iter().map(|v| v / norm).collect()
}

/// Least-squares slope and intercept.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let (xm, ym) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, ym - slope * xm)
}
