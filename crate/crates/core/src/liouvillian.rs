//! Right-hand side of the second-order master equation in the energy eigenbasis,
//!
//! ```text
//! ∂_t ρ = -i[H + H_LS^-, ρ] - {H_LS^+, ρ} + G[ρ]
//! ```
//!
//! The boundary spin flip `X = σ^x_1` connects `k` to `k^(a)` with amplitude
//! `c_a s^(a)_k`. Writing `X_Γ` for the same pattern weighted by
//! `Γ(s_{k_a} ω_a)` (row index `k`), the generator is `G[ρ] = X_Γ ρ X + X ρ X_Γ†`
//! and the Lamb shifts follow from `A = X X_Γ` as `H_LS^+ = (A + A†)/2`,
//! `H_LS^- = (A - A†)/(2i)`. Both factors have `N` entries per row, so the
//! full right-hand side costs `O(N 4^N)` without forming any superoperator.
//!
//! With a Kronecker-delta coarse-graining window the summands no longer
//! factorise and the quadruple sum is evaluated literally.

use ndarray::{Array2, Zip};
use num_complex::Complex64;

use crate::bath::{incomplete_spectral, markov_spectral, spectral_density, BathParams};
use crate::error::{Error, Result};
use crate::spectrum::{boundary_flip_matrix, energies, prefix_sign, ChainParams};

pub type Matrix = Array2<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Largest chain accepted by the dense reference assembly.
pub const REFERENCE_SITE_CAP: usize = 6;
pub const DEFAULT_WINDOW_TOL: f64 = 1e-9;

/// Coarse-graining window applied to each summand.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum WindowMode {
    #[default]
    None,
    /// Strong coarse-graining limit: keep a summand only when its two
    /// transition frequencies agree within `tol`.
    KroneckerDelta { tol: f64 },
}

impl WindowMode {
    pub fn kronecker() -> Self {
        WindowMode::KroneckerDelta { tol: DEFAULT_WINDOW_TOL }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            WindowMode::KroneckerDelta { tol } if !(tol > 0.0) => {
                Err(Error::arg("window tolerance must be positive"))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    fn passes(&self, w1: f64, w2: f64) -> bool {
        match *self {
            WindowMode::None => true,
            WindowMode::KroneckerDelta { tol } => (w1 - w2).abs() <= tol,
        }
    }
}

/// Which spectral function feeds the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Memory {
    /// Finite-time `Γ_t`.
    NonMarkovian,
    /// `Γ_∞` (Redfield).
    Markovian,
}

/// `Γ` tabulated at the `2N` frequencies `±ω_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    /// `Γ(ω_a)`, used when mode `a` is occupied in the row pattern.
    pub plus: Vec<Complex64>,
    /// `Γ(-ω_a)`.
    pub minus: Vec<Complex64>,
}

impl KernelTable {
    pub fn from_fn(p: &ChainParams, mut gamma: impl FnMut(f64) -> Complex64) -> Self {
        let omegas = p.omegas();
        KernelTable {
            plus: omegas.iter().map(|&w| gamma(w)).collect(),
            minus: omegas.iter().map(|&w| gamma(-w)).collect(),
        }
    }

    pub fn for_memory(p: &ChainParams, b: &BathParams, t: f64, mode: Memory) -> Self {
        match mode {
            Memory::NonMarkovian => Self::from_fn(p, |w| incomplete_spectral(b, w, t)),
            Memory::Markovian => Self::from_fn(p, |w| markov_spectral(b, w)),
        }
    }

    /// Markov kernel whose real part is half the exact Gaussian, so that
    /// secular rates reproduce the closed-form relaxation exactly.
    pub fn secular(p: &ChainParams, b: &BathParams) -> Self {
        Self::from_fn(p, |w| Complex64::new(0.5 * spectral_density(b, w), markov_spectral(b, w).im))
    }

    pub fn zeros(n: usize) -> Self {
        KernelTable { plus: vec![ZERO; n], minus: vec![ZERO; n] }
    }

    #[inline]
    fn at(&self, k: usize, a: usize) -> Complex64 {
        if (k >> a) & 1 == 1 {
            self.plus[a]
        } else {
            self.minus[a]
        }
    }
}

/// Row-sparse operator with a fixed number of entries per row.
struct Sparse {
    rows: Vec<Vec<(usize, Complex64)>>,
}

/// Precomputed index and sign tables for one chain.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    chain: ChainParams,
    n: usize,
    dim: usize,
    omegas: Vec<f64>,
    energies: Vec<f64>,
    /// `coef[k·N + a] = c_a s^(a)_k = ⟨k^(a)|σ^x_1|k⟩`.
    coef: Vec<f64>,
}

impl Liouvillian {
    pub fn new(p: &ChainParams) -> Result<Self> {
        p.require_dense(crate::spectrum::MAX_ENCODED_SITES.min(16))?;
        let n = p.n;
        let dim = p.dim();
        let c = p.boundary_weights();
        let mut coef = vec![0.0; dim * n];
        for k in 0..dim {
            for a in 0..n {
                coef[k * n + a] = c[a] * prefix_sign(k, a);
            }
        }
        Ok(Liouvillian {
            chain: *p,
            n,
            dim,
            omegas: p.omegas(),
            energies: energies(p),
            coef,
        })
    }

    pub fn chain(&self) -> &ChainParams {
        &self.chain
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    fn check(&self, rho: &Matrix) -> Result<()> {
        if rho.dim() != (self.dim, self.dim) {
            return Err(Error::arg(format!(
                "matrix is {:?}, expected {}x{}",
                rho.dim(),
                self.dim,
                self.dim
            )));
        }
        Ok(())
    }

    /// Transition frequency `s_{k_a} ω_a` carried by the `(k, a)` summand.
    #[inline]
    fn freq(&self, k: usize, a: usize) -> f64 {
        if (k >> a) & 1 == 1 {
            self.omegas[a]
        } else {
            -self.omegas[a]
        }
    }

    /// `out[k, :] = Σ_a w[k, a] ρ[k^(a), :]`.
    fn left(&self, w: &[Complex64], rho: &Matrix) -> Matrix {
        let (n, dim) = (self.n, self.dim);
        let mut out = Matrix::zeros((dim, dim));
        for k in 0..dim {
            let mut row = out.row_mut(k);
            for a in 0..n {
                let wk = w[k * n + a];
                let src = rho.row(k ^ (1 << a));
                Zip::from(&mut row).and(&src).for_each(|o, &s| *o += wk * s);
            }
        }
        out
    }

    /// `out[:, m] = Σ_a ρ[:, m^(a)] w[m, a]`.
    fn right(&self, rho: &Matrix, w: &[Complex64]) -> Matrix {
        let (n, dim) = (self.n, self.dim);
        let mut out = Matrix::zeros((dim, dim));
        for k in 0..dim {
            let src = rho.row(k);
            let mut dst = out.row_mut(k);
            for m in 0..dim {
                let mut acc = ZERO;
                for a in 0..n {
                    acc += src[m ^ (1 << a)] * w[m * n + a];
                }
                dst[m] = acc;
            }
        }
        out
    }

    fn weights(&self, kernel: &KernelTable) -> (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) {
        let (n, dim) = (self.n, self.dim);
        let x: Vec<Complex64> = self.coef.iter().map(|&c| Complex64::new(c, 0.0)).collect();
        let mut xg = vec![ZERO; dim * n];
        let mut xg_conj = vec![ZERO; dim * n];
        for k in 0..dim {
            for a in 0..n {
                let v = kernel.at(k, a) * self.coef[k * n + a];
                xg[k * n + a] = v;
                xg_conj[k * n + a] = v.conj();
            }
        }
        (x, xg, xg_conj)
    }

    fn commutator_h(&self, rho: &Matrix) -> Matrix {
        let e = &self.energies;
        Matrix::from_shape_fn((self.dim, self.dim), |(k, m)| -I * (e[k] - e[m]) * rho[[k, m]])
    }

    /// `A = X X_Γ` with the window applied to each `(a, b, k)` summand.
    fn lamb_core(&self, kernel: &KernelTable, window: WindowMode) -> Sparse {
        let (n, dim) = (self.n, self.dim);
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); dim];
        for k in 0..dim {
            for a in 0..n {
                let ga = kernel.at(k, a) * self.coef[k * n + a];
                let wa = self.freq(k, a);
                for b in 0..n {
                    if !window.passes(wa, self.freq(k, b)) {
                        continue;
                    }
                    let row = k ^ (1 << b);
                    let col = k ^ (1 << a);
                    let v = ga * self.coef[k * n + b];
                    match rows[row].iter_mut().find(|(c, _)| *c == col) {
                        Some(entry) => entry.1 += v,
                        None => rows[row].push((col, v)),
                    }
                }
            }
        }
        Sparse { rows }
    }

    fn dense(&self, s: &Sparse) -> Matrix {
        let mut out = Matrix::zeros((self.dim, self.dim));
        for (r, row) in s.rows.iter().enumerate() {
            for &(c, v) in row {
                out[[r, c]] += v;
            }
        }
        out
    }

    /// Relaxation generator `G[ρ]`.
    pub fn generator(&self, kernel: &KernelTable, rho: &Matrix, window: WindowMode) -> Result<Matrix> {
        self.check(rho)?;
        window.validate()?;
        Ok(match window {
            WindowMode::None => {
                let (x, xg, xg_conj) = self.weights(kernel);
                let p = self.left(&xg, rho);
                let q = self.left(&x, rho);
                self.right(&p, &x) + self.right(&q, &xg_conj)
            }
            WindowMode::KroneckerDelta { .. } => self.generator_literal(kernel, rho, window),
        })
    }

    /// Term-by-term quadruple sum over `(a, b, k, m)`.
    pub(crate) fn generator_literal(&self, kernel: &KernelTable, rho: &Matrix, window: WindowMode) -> Matrix {
        let (n, dim) = (self.n, self.dim);
        let mut out = Matrix::zeros((dim, dim));
        for k in 0..dim {
            for m in 0..dim {
                let mut acc = ZERO;
                for a in 0..n {
                    let ca = self.coef[k * n + a];
                    let ga = kernel.at(k, a);
                    let wa = self.freq(k, a);
                    let ka = k ^ (1 << a);
                    for b in 0..n {
                        if !window.passes(wa, self.freq(m, b)) {
                            continue;
                        }
                        let cb = self.coef[m * n + b];
                        let gb = kernel.at(m, b).conj();
                        acc += (ga + gb) * (ca * cb) * rho[[ka, m ^ (1 << b)]];
                    }
                }
                out[[k, m]] = acc;
            }
        }
        out
    }

    /// Lamb-shift Hamiltonian `H_LS^+` (`Plus`) or `H_LS^-` (`Minus`).
    pub fn lamb_shift(&self, kernel: &KernelTable, sign: LambSign, window: WindowMode) -> Result<Matrix> {
        window.validate()?;
        let a = self.dense(&self.lamb_core(kernel, window));
        let a_dag = a.t().mapv(|v| v.conj());
        Ok(match sign {
            LambSign::Plus => (a + a_dag) * 0.5,
            LambSign::Minus => (a - a_dag) * (-0.5 * I),
        })
    }

    /// `dρ/dt` for a given kernel table.
    pub fn rhs(&self, kernel: &KernelTable, rho: &Matrix, window: WindowMode) -> Result<Matrix> {
        self.check(rho)?;
        window.validate()?;
        let mut out = self.commutator_h(rho);
        match window {
            WindowMode::None => {
                let (x, xg, xg_conj) = self.weights(kernel);
                let p = self.left(&xg, rho); // X_Γ ρ
                out -= &self.left(&x, &p); // A ρ
                out += &self.right(&p, &x); // X_Γ ρ X
                let q = self.left(&x, rho);
                out += &self.right(&q, &xg_conj); // X ρ X_Γ†
                let r = self.right(rho, &xg_conj);
                out -= &self.right(&r, &x); // ρ A†
            }
            WindowMode::KroneckerDelta { .. } => {
                let a = self.lamb_core(kernel, window);
                for (row, entries) in a.rows.iter().enumerate() {
                    for &(col, v) in entries {
                        // A ρ and ρ A†
                        for m in 0..self.dim {
                            out[[row, m]] -= v * rho[[col, m]];
                            out[[m, row]] -= rho[[m, col]] * v.conj();
                        }
                    }
                }
                out += &self.generator_literal(kernel, rho, window);
            }
        }
        Ok(out)
    }

    /// Same right-hand side assembled from the explicit Lamb-shift matrices.
    pub fn rhs_assembled(&self, kernel: &KernelTable, rho: &Matrix, window: WindowMode) -> Result<Matrix> {
        let hp = self.lamb_shift(kernel, LambSign::Plus, window)?;
        let hm = self.lamb_shift(kernel, LambSign::Minus, window)?;
        let g = self.generator(kernel, rho, window)?;
        let comm = &hm.dot(rho) - &rho.dot(&hm);
        let acomm = &hp.dot(rho) + &rho.dot(&hp);
        Ok(self.commutator_h(rho) - comm * I - acomm + g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambSign {
    Plus,
    Minus,
}

/// Applies the relaxation generator for an arbitrary `Γ` evaluator.
pub fn generator_apply(
    p: &ChainParams,
    gamma_eval: impl FnMut(f64) -> Complex64,
    rho: &Matrix,
    window: WindowMode,
) -> Result<Matrix> {
    let l = Liouvillian::new(p)?;
    l.generator(&KernelTable::from_fn(p, gamma_eval), rho, window)
}

pub fn lamb_shift(
    p: &ChainParams,
    gamma_eval: impl FnMut(f64) -> Complex64,
    sign: LambSign,
    window: WindowMode,
) -> Result<Matrix> {
    let l = Liouvillian::new(p)?;
    l.lamb_shift(&KernelTable::from_fn(p, gamma_eval), sign, window)
}

/// `dρ/dt` at time `t` with `Γ_t` (`NonMarkovian`) or `Γ_∞` (`Markovian`).
pub fn master_rhs(
    p: &ChainParams,
    b: &BathParams,
    t: f64,
    rho: &Matrix,
    mode: Memory,
    window: WindowMode,
) -> Result<Matrix> {
    let l = Liouvillian::new(p)?;
    l.rhs(&KernelTable::for_memory(p, b, t, mode), rho, window)
}

/// Literal assembly of `-i[H,ρ] - ([σ^x_1, S ρ] + h.c.)` with dense matrices,
/// where `⟨n|S|m⟩ = ⟨n|σ^x_1|m⟩ Γ(E_m - E_n)`.
pub fn reference_rhs(p: &ChainParams, b: &BathParams, t: f64, rho: &Matrix, mode: Memory) -> Result<Matrix> {
    if p.n > REFERENCE_SITE_CAP {
        return Err(Error::Capability(format!(
            "reference assembly needs N <= {REFERENCE_SITE_CAP}, got N = {}",
            p.n
        )));
    }
    let dim = p.dim();
    if rho.dim() != (dim, dim) {
        return Err(Error::arg("density matrix dimension mismatch"));
    }
    let e = energies(p);
    let x = boundary_flip_matrix(p)?.mapv(|v| Complex64::new(v, 0.0));
    let gamma = |w: f64| match mode {
        Memory::NonMarkovian => incomplete_spectral(b, w, t),
        Memory::Markovian => markov_spectral(b, w),
    };
    let mut filtered = Matrix::zeros((dim, dim));
    for ((nn, m), v) in x.indexed_iter() {
        if v.norm() != 0.0 {
            filtered[[nn, m]] = v * gamma(e[m] - e[nn]);
        }
    }
    let s_rho = filtered.dot(rho);
    let inner = &x.dot(&s_rho) - &s_rho.dot(&x);
    let hc = inner.t().mapv(|v| v.conj());
    let unitary = Matrix::from_shape_fn((dim, dim), |(k, m)| -I * (e[k] - e[m]) * rho[[k, m]]);
    Ok(unitary - inner - hc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_density_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn max_abs(m: &Matrix) -> f64 {
        m.iter().fold(0.0, |acc, v| acc.max(v.norm()))
    }

    fn herm_defect(m: &Matrix) -> f64 {
        max_abs(&(m - &m.t().mapv(|v| v.conj())))
    }

    fn trace(m: &Matrix) -> Complex64 {
        m.diag().sum()
    }

    fn setup(n: usize) -> (ChainParams, BathParams) {
        (ChainParams::new(n, 2.0, 1.0).unwrap(), BathParams::new(0.4, 0.8, 2.5, 2).unwrap())
    }

    #[test]
    fn zero_inputs_give_zero() {
        let (p, _) = setup(3);
        let rho = Matrix::zeros((8, 8));
        let g = generator_apply(&p, |_| Complex64::new(0.3, 0.1), &rho, WindowMode::None).unwrap();
        assert_eq!(max_abs(&g), 0.0);
        for sign in [LambSign::Plus, LambSign::Minus] {
            for w in [WindowMode::None, WindowMode::kronecker()] {
                let h = lamb_shift(&p, |_| ZERO, sign, w).unwrap();
                assert_eq!(max_abs(&h), 0.0);
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let (p, b) = setup(3);
        let rho = Matrix::zeros((4, 4));
        assert!(generator_apply(&p, |_| ZERO, &rho, WindowMode::None).is_err());
        assert!(master_rhs(&p, &b, 1.0, &rho, Memory::Markovian, WindowMode::None).is_err());
        let bad = WindowMode::KroneckerDelta { tol: 0.0 };
        assert!(generator_apply(&p, |_| ZERO, &Matrix::zeros((8, 8)), bad).is_err());
    }

    #[test]
    fn factorised_generator_matches_literal_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=4 {
            let (p, b) = setup(n);
            let l = Liouvillian::new(&p).unwrap();
            let kernel = KernelTable::for_memory(&p, &b, 0.7, Memory::NonMarkovian);
            let rho = random_density_matrix(p.dim(), &mut rng);
            let fast = l.generator(&kernel, &rho, WindowMode::None).unwrap();
            let slow = l.generator_literal(&kernel, &rho, WindowMode::None);
            assert!(max_abs(&(&fast - &slow)) < 1e-13);
            // A window wide enough to admit everything is the identity.
            let wide = WindowMode::KroneckerDelta { tol: 1e9 };
            let rhs_wide = l.rhs(&kernel, &rho, wide).unwrap();
            let rhs = l.rhs(&kernel, &rho, WindowMode::None).unwrap();
            assert!(max_abs(&(&rhs_wide - &rhs)) < 1e-13);
        }
    }

    #[test]
    fn fast_rhs_matches_lamb_shift_assembly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=4 {
            let (p, b) = setup(n);
            let l = Liouvillian::new(&p).unwrap();
            for mode in [Memory::NonMarkovian, Memory::Markovian] {
                for window in [WindowMode::None, WindowMode::kronecker()] {
                    let kernel = KernelTable::for_memory(&p, &b, 1.3, mode);
                    let rho = random_density_matrix(p.dim(), &mut rng);
                    let a = l.rhs(&kernel, &rho, window).unwrap();
                    let c = l.rhs_assembled(&kernel, &rho, window).unwrap();
                    assert!(max_abs(&(&a - &c)) < 1e-13, "N={n} {mode:?} {window:?}");
                }
            }
        }
    }

    #[test]
    fn hermiticity_and_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=4 {
            let (p, b) = setup(n);
            let l = Liouvillian::new(&p).unwrap();
            for &t in &[0.0, 0.1, 1.0, 5.0] {
                for mode in [Memory::NonMarkovian, Memory::Markovian] {
                    let kernel = KernelTable::for_memory(&p, &b, t, mode);
                    for window in [WindowMode::None, WindowMode::kronecker()] {
                        let rho = random_density_matrix(p.dim(), &mut rng);
                        let g = l.generator(&kernel, &rho, window).unwrap();
                        assert!(herm_defect(&g) < 1e-12);
                        for sign in [LambSign::Plus, LambSign::Minus] {
                            assert!(herm_defect(&l.lamb_shift(&kernel, sign, window).unwrap()) < 1e-12);
                        }
                        let r = l.rhs(&kernel, &rho, window).unwrap();
                        assert!(herm_defect(&r) < 1e-12);
                        assert!(trace(&r).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_time_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (p, b) = setup(3);
        let rho = random_density_matrix(8, &mut rng);
        let r = master_rhs(&p, &b, 0.0, &rho, Memory::NonMarkovian, WindowMode::None).unwrap();
        let e = energies(&p);
        let unitary = Matrix::from_shape_fn((8, 8), |(k, m)| -I * (e[k] - e[m]) * rho[[k, m]]);
        assert_eq!(max_abs(&(&r - &unitary)), 0.0);
        let energy_rate: Complex64 = (0..8).map(|k| e[k] * r[[k, k]]).sum();
        assert!(energy_rate.norm() < 1e-15);
    }

    #[test]
    fn reference_matches_generator_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for n in 2..=3 {
            let (p, b) = setup(n);
            for &t in &[0.1, 1.0, 5.0] {
                let rho = random_density_matrix(p.dim(), &mut rng);
                for mode in [Memory::NonMarkovian, Memory::Markovian] {
                    let a = master_rhs(&p, &b, t, &rho, mode, WindowMode::None).unwrap();
                    let r = reference_rhs(&p, &b, t, &rho, mode).unwrap();
                    assert!(max_abs(&(&a - &r)) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn reference_closed_system_and_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let p = ChainParams::new(3, 2.0, 1.0).unwrap();
        let b = BathParams::new(0.0, 0.8, 2.5, 2).unwrap();
        let rho = random_density_matrix(8, &mut rng);
        let r = reference_rhs(&p, &b, 2.0, &rho, Memory::NonMarkovian).unwrap();
        let e = energies(&p);
        let unitary = Matrix::from_shape_fn((8, 8), |(k, m)| -I * (e[k] - e[m]) * rho[[k, m]]);
        assert!(max_abs(&(&r - &unitary)) < 1e-15);
        let big = ChainParams::new(7, 2.0, 1.0).unwrap();
        let err = reference_rhs(&big, &b, 1.0, &Matrix::zeros((128, 128)), Memory::Markovian).unwrap_err();
        assert!(matches!(err, Error::Capability(_)));
    }

    #[test]
    fn linearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let (p, b) = setup(3);
        let r1 = random_density_matrix(8, &mut rng);
        let r2 = random_density_matrix(8, &mut rng);
        let (al, be) = (0.37, -1.9);
        for window in [WindowMode::None, WindowMode::kronecker()] {
            let f = |r: &Matrix| master_rhs(&p, &b, 0.8, r, Memory::NonMarkovian, window).unwrap();
            let combo = &r1 * Complex64::new(al, 0.0) + &r2 * Complex64::new(be, 0.0);
            let lhs = f(&combo);
            let rhs = f(&r1) * Complex64::new(al, 0.0) + f(&r2) * Complex64::new(be, 0.0);
            assert!(max_abs(&(&lhs - &rhs)) < 1e-12);
        }
    }
}
