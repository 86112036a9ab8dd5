//! Time integration of the master equation and trajectory observables.
//!
//! Classic RK4 with step-doubling error control. The step grid is forced onto
//! every output sample time and onto the switching time of the concatenation
//! scheme, so the memory kernel only changes between steps.

use std::fmt;

use ndarray::Array2;
use num_complex::Complex64;

use crate::bath::BathParams;
use crate::error::{Error, Result};
use crate::liouvillian::{reference_rhs, KernelTable, Liouvillian, Matrix, Memory, WindowMode, REFERENCE_SITE_CAP};
use crate::spectrum::{number_operator_matrix, ChainParams};
use crate::state::{hermiticity_defect, DensityMatrix};

pub const DEFAULT_SITE_CAP: usize = 10;
/// Steps shorter than this abort the integration.
pub const MIN_STEP: f64 = 1e-12;
/// Trace drift that aborts the integration.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub t_max: f64,
    pub t_switch: f64,
    pub sample_dt: f64,
    pub max_step: f64,
    /// Largest chain the dense engine accepts.
    pub site_cap: usize,
}

impl IntegratorConfig {
    /// Defaults with `t_switch = 3.5/σ`.
    pub fn new(t_max: f64, sigma: f64) -> Self {
        IntegratorConfig {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            t_max,
            t_switch: (3.5 / sigma).min(t_max),
            sample_dt: 0.05,
            max_step: 0.1,
            site_cap: DEFAULT_SITE_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::arg("tolerances must be positive"));
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return Err(Error::arg("t_max must be finite and non-negative"));
        }
        if !(0.0..=self.t_max).contains(&self.t_switch) {
            return Err(Error::arg("t_switch must lie in [0, t_max]"));
        }
        if !(self.sample_dt > 0.0 && self.max_step > 0.0) {
            return Err(Error::arg("sample_dt and max_step must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// `Γ_t` before the switching time, `Γ_∞` after.
    Concatenation,
    /// Markovian with the Kronecker-delta coarse-graining window.
    SecularDelta,
    /// Dense literal assembly (oracle), with the same switching as `Concatenation`.
    Reference,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Concatenation => "concatenation",
            Scheme::SecularDelta => "secular-delta",
            Scheme::Reference => "reference",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    /// Heat flux `-Tr(H dρ/dt)`.
    pub flux: f64,
    /// `⟨σ^z_n⟩` for `n = 1..N`.
    pub magnetization: Vec<f64>,
    pub energy: f64,
    pub trace_error: f64,
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
    /// Imaginary residue of the flux trace.
    pub flux_imag: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn fluxes(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.flux).collect()
    }
}

/// Integration stopped early; carries everything computed up to the failure.
#[derive(Debug, Clone)]
pub struct Failure {
    pub error: Error,
    pub partial: Trajectory,
    pub last_state: Matrix,
}

impl From<Failure> for Error {
    fn from(f: Failure) -> Self {
        f.error
    }
}

/// Linear-space operations needed by the stepper.
pub trait OdeState: Clone {
    /// `self + a·x`
    fn axpy(&self, a: f64, x: &Self) -> Self;
    fn max_abs(&self) -> f64;
    fn max_abs_diff(&self, other: &Self) -> f64;
}

impl OdeState for f64 {
    fn axpy(&self, a: f64, x: &Self) -> Self {
        self + a * x
    }
    fn max_abs(&self) -> f64 {
        self.abs()
    }
    fn max_abs_diff(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
}

impl OdeState for Array2<Complex64> {
    fn axpy(&self, a: f64, x: &Self) -> Self {
        let mut out = self.clone();
        out.scaled_add(Complex64::new(a, 0.0), x);
        out
    }
    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
    fn max_abs_diff(&self, other: &Self) -> f64 {
        self.iter().zip(other.iter()).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }
}

fn rk4_with_k1<Y: OdeState>(
    f: &mut impl FnMut(f64, &Y) -> Result<Y>,
    t: f64,
    y: &Y,
    k1: &Y,
    h: f64,
) -> Result<Y> {
    let k2 = f(t + 0.5 * h, &y.axpy(0.5 * h, k1))?;
    let k3 = f(t + 0.5 * h, &y.axpy(0.5 * h, &k2))?;
    let k4 = f(t + h, &y.axpy(h, &k3))?;
    let incr = k1.axpy(2.0, &k2).axpy(2.0, &k3).axpy(1.0, &k4);
    Ok(y.axpy(h / 6.0, &incr))
}

/// Outcome of one controlled step attempt.
pub struct StepAttempt<Y> {
    pub accepted: bool,
    pub state: Y,
    pub error: f64,
    /// Suggested next step size.
    pub next_h: f64,
}

/// One RK4 step of size `h` checked against two half steps; the error is
/// `|y_half - y_full|/15` compared with `abs_tol + rel_tol·max|y|`, and the
/// accepted state is the Richardson-extrapolated combination.
pub fn rk4_doubling_step<Y: OdeState>(
    f: &mut impl FnMut(f64, &Y) -> Result<Y>,
    t: f64,
    y: &Y,
    h: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<StepAttempt<Y>> {
    let k1 = f(t, y)?;
    let full = rk4_with_k1(f, t, y, &k1, h)?;
    let mid = rk4_with_k1(f, t, y, &k1, 0.5 * h)?;
    let k1_mid = f(t + 0.5 * h, &mid)?;
    let half = rk4_with_k1(f, t + 0.5 * h, &mid, &k1_mid, 0.5 * h)?;
    let error = half.max_abs_diff(&full) / 15.0;
    let tol = abs_tol + rel_tol * y.max_abs();
    let factor = if error == 0.0 { 5.0 } else { (0.9 * (tol / error).powf(0.2)).clamp(0.2, 5.0) };
    // Local extrapolation: the two estimates combine to fifth order.
    let state = half.axpy(1.0 / 15.0, &half.axpy(-1.0, &full));
    Ok(StepAttempt {
        accepted: error <= tol,
        state,
        error,
        next_h: h * factor,
    })
}

/// Integrates a generic ODE over `[t0, t1]` with the step-doubling controller.
pub fn integrate_ode<Y: OdeState>(
    mut f: impl FnMut(f64, &Y) -> Result<Y>,
    y0: Y,
    t0: f64,
    t1: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Y> {
    let mut t = t0;
    let mut y = y0;
    let mut h = ((t1 - t0) * 1e-3).max(MIN_STEP);
    while t < t1 {
        let step = h.min(t1 - t);
        let at = rk4_doubling_step(&mut f, t, &y, step, rel_tol, abs_tol)?;
        if at.accepted {
            t = if step == t1 - t { t1 } else { t + step };
            y = at.state;
        } else if at.next_h < MIN_STEP {
            return Err(Error::Integration { t, reason: "step size underflow".into() });
        }
        h = at.next_h;
    }
    Ok(y)
}

/// Heat flux `J = -Tr(H·dρ/dt)` for `H = diag(E_k)`.
pub fn heat_flux(p: &ChainParams, rhs_value: &Matrix) -> f64 {
    heat_flux_complex(&crate::spectrum::energies(p), rhs_value).re
}

fn heat_flux_complex(energies: &[f64], rhs: &Matrix) -> Complex64 {
    -energies.iter().enumerate().map(|(k, e)| rhs[[k, k]] * e).sum::<Complex64>()
}

fn trace_product(op: &Array2<f64>, rho: &Matrix) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for ((i, j), &v) in op.indexed_iter() {
        if v != 0.0 {
            acc += rho[[j, i]] * v;
        }
    }
    acc
}

/// `⟨σ^z_n⟩ = 2 Tr(σ^+_n σ^-_n ρ) - 1`.
pub fn magnetization(p: &ChainParams, rho: &Matrix, site: usize) -> Result<f64> {
    let op = number_operator_matrix(p, site)?;
    if rho.dim() != op.dim() {
        return Err(Error::arg("density matrix dimension mismatch"));
    }
    Ok(2.0 * trace_product(&op, rho).re - 1.0)
}

/// Evaluates `dρ/dt` for one scheme, caching time-independent kernels.
struct Engine<'a> {
    chain: ChainParams,
    bath: &'a BathParams,
    scheme: Scheme,
    t_switch: f64,
    liouvillian: Liouvillian,
    markov: KernelTable,
    secular: KernelTable,
}

impl<'a> Engine<'a> {
    fn new(p: &ChainParams, b: &'a BathParams, scheme: Scheme, t_switch: f64) -> Result<Self> {
        Ok(Engine {
            chain: *p,
            bath: b,
            scheme,
            t_switch,
            liouvillian: Liouvillian::new(p)?,
            markov: KernelTable::for_memory(p, b, 0.0, Memory::Markovian),
            secular: KernelTable::secular(p, b),
        })
    }

    fn memory_for_step(&self, step_start: f64) -> Memory {
        if step_start < self.t_switch {
            Memory::NonMarkovian
        } else {
            Memory::Markovian
        }
    }

    fn rhs(&self, t: f64, memory: Memory, rho: &Matrix) -> Result<Matrix> {
        match self.scheme {
            Scheme::SecularDelta => self.liouvillian.rhs(&self.secular, rho, WindowMode::kronecker()),
            Scheme::Concatenation => match memory {
                Memory::Markovian => self.liouvillian.rhs(&self.markov, rho, WindowMode::None),
                Memory::NonMarkovian => {
                    let kernel = KernelTable::for_memory(&self.chain, self.bath, t, memory);
                    self.liouvillian.rhs(&kernel, rho, WindowMode::None)
                }
            },
            Scheme::Reference => reference_rhs(&self.chain, self.bath, t, rho, memory),
        }
    }
}

struct Observer {
    energies: Vec<f64>,
    number_ops: Vec<Array2<f64>>,
}

impl Observer {
    fn new(p: &ChainParams) -> Result<Self> {
        Ok(Observer {
            energies: crate::spectrum::energies(p),
            number_ops: (1..=p.n).map(|n| number_operator_matrix(p, n)).collect::<Result<_>>()?,
        })
    }

    fn sample(&self, t: f64, rho: &Matrix, rhs: &Matrix) -> Sample {
        let flux = heat_flux_complex(&self.energies, rhs);
        let energy: f64 = self.energies.iter().enumerate().map(|(k, e)| e * rho[[k, k]].re).sum();
        let trace: Complex64 = rho.diag().sum();
        Sample {
            t,
            flux: flux.re,
            flux_imag: flux.im,
            magnetization: self.number_ops.iter().map(|op| 2.0 * trace_product(op, rho).re - 1.0).collect(),
            energy,
            trace_error: (trace - Complex64::new(1.0, 0.0)).norm(),
            hermiticity_defect: hermiticity_defect(rho),
            min_eigenvalue: DensityMatrix::from_raw(rho.clone()).min_eigenvalue(),
        }
    }
}

/// Integrates the master equation from `rho0`, sampling every `sample_dt`.
pub fn integrate(
    p: &ChainParams,
    b: &BathParams,
    rho0: &DensityMatrix,
    cfg: &IntegratorConfig,
    scheme: Scheme,
) -> std::result::Result<Trajectory, Failure> {
    let fail = |error: Error| Failure {
        error,
        partial: Trajectory::default(),
        last_state: rho0.to_owned().into_inner(),
    };
    cfg.validate().map_err(fail)?;
    p.require_dense(cfg.site_cap).map_err(fail)?;
    if scheme == Scheme::Reference {
        p.require_dense(REFERENCE_SITE_CAP).map_err(fail)?;
    }
    if rho0.nrows() != p.dim() {
        return Err(fail(Error::arg("initial state dimension does not match the chain")));
    }
    let engine = Engine::new(p, b, scheme, cfg.t_switch).map_err(fail)?;
    let observer = Observer::new(p).map_err(fail)?;

    let mut traj = Trajectory::default();
    let mut rho: Matrix = (**rho0).clone();
    let mut t = 0.0;
    let mut h = cfg.max_step.min(cfg.sample_dt).min(1e-3);
    let mut sample_times: Vec<f64> = (0..)
        .map(|i| i as f64 * cfg.sample_dt)
        .take_while(|&ts| ts < cfg.t_max - 1e-9 * cfg.sample_dt)
        .collect();
    sample_times.push(cfg.t_max);
    let mut next_sample = 0usize;

    macro_rules! bail {
        ($err:expr) => {
            return Err(Failure { error: $err, partial: traj, last_state: rho })
        };
    }

    loop {
        if t == sample_times[next_sample] {
            let rhs = match engine.rhs(t, engine.memory_for_step(t), &rho) {
                Ok(r) => r,
                Err(e) => bail!(e),
            };
            let s = observer.sample(t, &rho, &rhs);
            if s.trace_error > TRACE_DRIFT_LIMIT {
                bail!(Error::Integrity { t, reason: format!("trace drift {:e}", s.trace_error) });
            }
            traj.samples.push(s);
            next_sample += 1;
            if next_sample == sample_times.len() {
                break;
            }
        }

        let mut target = sample_times[next_sample];
        if t < cfg.t_switch && cfg.t_switch < target {
            target = cfg.t_switch;
        }
        let natural = h.min(cfg.max_step);
        let (step, lands) = if t + natural >= target - 1e-12 * (1.0 + t) {
            (target - t, true)
        } else {
            (natural, false)
        };
        let memory = engine.memory_for_step(t);
        let mut f = |tt: f64, y: &Matrix| engine.rhs(tt, memory, y);
        let attempt = match rk4_doubling_step(&mut f, t, &rho, step, cfg.rel_tol, cfg.abs_tol) {
            Ok(a) => a,
            Err(e) => bail!(e),
        };
        if attempt.accepted {
            rho = attempt.state;
            t = if lands { target } else { t + step };
            traj.accepted_steps += 1;
            // A clipped step says nothing about the natural step size.
            if !lands || attempt.next_h < h {
                h = attempt.next_h;
            }
        } else {
            traj.rejected_steps += 1;
            h = attempt.next_h;
            if h < MIN_STEP {
                bail!(Error::Integration { t, reason: format!("step size underflow (h = {h:e})") });
            }
        }
    }
    Ok(traj)
}

/// A time interval on which the flux is approximately constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plateau {
    pub t_start: f64,
    pub t_end: f64,
    /// Mean flux over the interval.
    pub level: f64,
}

impl Plateau {
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

/// Maximal runs of samples with `|dJ/dt| < slope_tol·|J|` (central
/// differences) lasting at least `window`.
pub fn plateau_metrics(times: &[f64], flux: &[f64], window: f64, slope_tol: f64) -> Vec<Plateau> {
    let n = times.len().min(flux.len());
    if n < 3 {
        return Vec::new();
    }
    let flat: Vec<bool> = (0..n)
        .map(|i| {
            let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
            let slope = (flux[hi] - flux[lo]) / (times[hi] - times[lo]);
            flux[i] != 0.0 && slope.abs() < slope_tol * flux[i].abs()
        })
        .collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        if !flat[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && flat[i] {
            i += 1;
        }
        let (t0, t1) = (times[start], times[i - 1]);
        if t1 - t0 >= window {
            let level = flux[start..i].iter().sum::<f64>() / (i - start) as f64;
            out.push(Plateau { t_start: t0, t_end: t1, level });
        }
    }
    out
}

/// Plateaus of a sampled trajectory.
pub fn trajectory_plateaus(traj: &Trajectory, window: f64, slope_tol: f64) -> Vec<Plateau> {
    plateau_metrics(&traj.times(), &traj.fluxes(), window, slope_tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::secular::SecularSolution;

    fn base(n: usize) -> (ChainParams, BathParams) {
        (ChainParams::new(n, 2.0, 1.0).unwrap(), BathParams::new(0.4, 0.8, 2.5, 2).unwrap())
    }

    #[test]
    fn scalar_decay_self_test() {
        let y = integrate_ode(|_, y: &f64| Ok(-y), 1.0, 0.0, 10.0, 1e-8, 1e-14).unwrap();
        assert!((y / (-10f64).exp() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn closed_system_is_stationary_for_diagonal_states() {
        let p = ChainParams::new(3, 2.0, 1.0).unwrap();
        let b = BathParams::new(0.0, 0.8, 2.5, 2).unwrap();
        let rho0 = DensityMatrix::thermal(&p, 0.5);
        let mut cfg = IntegratorConfig::new(5.0, b.sigma);
        cfg.sample_dt = 0.5;
        let traj = integrate(&p, &b, &rho0, &cfg, Scheme::Concatenation).unwrap();
        assert_eq!(traj.samples.len(), 11);
        let first = &traj.samples[0];
        for s in &traj.samples {
            assert_eq!(s.flux, 0.0);
            assert!((s.energy - first.energy).abs() < 1e-14);
            for (m, m0) in s.magnetization.iter().zip(&first.magnetization) {
                assert!((m - m0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn samples_land_on_grid() {
        let (p, b) = base(2);
        let mut cfg = IntegratorConfig::new(2.0, b.sigma);
        cfg.sample_dt = 0.3;
        let traj = integrate(&p, &b, &DensityMatrix::maximally_mixed(&p), &cfg, Scheme::Concatenation).unwrap();
        let ts = traj.times();
        assert_eq!(ts.len(), 8);
        for (i, t) in ts.iter().take(7).enumerate() {
            assert!((t - 0.3 * i as f64).abs() < 1e-12);
        }
        assert_eq!(*ts.last().unwrap(), 2.0);
        assert!(ts.windows(2).all(|w| w[1] > w[0]));
        assert!(traj.samples[0].flux.abs() < 1e-10);
    }

    #[test]
    fn secular_delta_matches_closed_form() {
        let (p, b) = base(3);
        let occ = [0.3, 0.5, 0.8];
        let rho0 = DensityMatrix::diagonal_product(&p, &occ);
        let mut cfg = IntegratorConfig::new(20.0, b.sigma);
        cfg.sample_dt = 1.0;
        let traj = integrate(&p, &b, &rho0, &cfg, Scheme::SecularDelta).unwrap();
        let sol = SecularSolution::new(&p, &b, &occ).unwrap();
        for s in &traj.samples {
            assert!((s.energy - sol.energy(s.t)).abs() < 1e-7, "t={}", s.t);
            assert!((s.flux - sol.flux(s.t)).abs() < 1e-7);
            for site in 1..=3 {
                assert!((s.magnetization[site - 1] - sol.magnetization(s.t, site)).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn unitary_part_carries_no_flux() {
        let (p, _) = base(3);
        let rho = crate::random::random_density_matrix(8, &mut rand::rng());
        let e = crate::spectrum::energies(&p);
        let comm = Matrix::from_shape_fn((8, 8), |(k, m)| Complex64::new(0.0, -1.0) * (e[k] - e[m]) * rho[[k, m]]);
        assert!(heat_flux(&p, &comm).abs() < 1e-15);
    }

    #[test]
    fn magnetization_of_mixed_and_thermal_states() {
        let (p, _) = base(4);
        let mixed = DensityMatrix::maximally_mixed(&p);
        for n in 1..=4 {
            assert!(magnetization(&p, &mixed, n).unwrap().abs() < 1e-14);
        }
        let beta = 0.8;
        let thermal = DensityMatrix::thermal(&p, beta);
        for n in 1..=4 {
            let op = number_operator_matrix(&p, n).unwrap();
            let direct: f64 = (0..16).map(|k| thermal[[k, k]].re * (2.0 * op[[k, k]] - 1.0)).sum();
            assert!((magnetization(&p, &thermal, n).unwrap() - direct).abs() < 1e-12);
        }
        assert!(magnetization(&p, &thermal, 5).is_err());
    }

    #[test]
    fn plateau_detection_on_synthetic_signals() {
        let ts: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
        let flat = vec![2.0; ts.len()];
        let found = plateau_metrics(&ts, &flat, 1.0, 0.02);
        assert_eq!(found.len(), 1);
        assert_eq!((found[0].t_start, found[0].t_end, found[0].level), (0.0, 10.0, 2.0));

        let decay: Vec<f64> = ts.iter().map(|t| (-0.1 * t).exp()).collect();
        assert!(plateau_metrics(&ts, &decay, 1.0, 0.02).is_empty());
        assert!(plateau_metrics(&ts[..2], &flat[..2], 1.0, 0.02).is_empty());
    }

    #[test]
    fn rejects_oversized_chains() {
        let (p, b) = base(7);
        let mut cfg = IntegratorConfig::new(1.0, b.sigma);
        cfg.site_cap = 6;
        let err = integrate(&p, &b, &DensityMatrix::maximally_mixed(&p), &cfg, Scheme::Concatenation).unwrap_err();
        assert!(matches!(err.error, Error::Capability(_)));
    }
}
