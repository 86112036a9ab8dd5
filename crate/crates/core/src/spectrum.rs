//! Free-fermion representation of the open isotropic XY chain.
//!
//! After the Jordan–Wigner and sine transforms the chain Hamiltonian is
//! `H = -Σ_a ω_a ψ̃†_a ψ̃_a` with `ω_a = h + j cos(πa/(N+1))`. Energy
//! eigenstates are labelled by occupation patterns `k ∈ {0,1}^N`; the
//! integer `k` stores mode `a` (1-based) in bit `a-1`, so basis index and
//! occupation pattern coincide everywhere downstream.
//!
//! The additive constant of the Hamiltonian is fixed to zero, i.e. the
//! all-empty pattern has energy 0.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Largest chain for which occupation patterns fit the integer encoding.
pub const MAX_ENCODED_SITES: usize = 63;

/// Chain length `N`, hopping `j` and field `h` (natural units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainParams {
    pub n: usize,
    pub j: f64,
    pub h: f64,
}

impl ChainParams {
    pub fn new(n: usize, j: f64, h: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("chain length must be at least 1"));
        }
        if !j.is_finite() || !h.is_finite() {
            return Err(Error::arg("coupling and field must be finite"));
        }
        let p = ChainParams { n, j, h };
        if j != 0.0 {
            let mut w = p.omegas();
            w.sort_by(f64::total_cmp);
            if w.windows(2).any(|pair| pair[0] == pair[1]) {
                return Err(Error::arg("degenerate dispersion"));
            }
        }
        Ok(p)
    }

    /// Hilbert space dimension `2^N`.
    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    /// `ω_a` for all modes, index `a-1`.
    pub fn omegas(&self) -> Vec<f64> {
        (1..=self.n).map(|a| self.omega(a)).collect()
    }

    #[inline]
    pub(crate) fn omega(&self, a: usize) -> f64 {
        self.h + self.j * (PI * a as f64 / (self.n as f64 + 1.0)).cos()
    }

    /// Amplitude of mode `a` on the first site, `√(2/(N+1)) sin(πa/(N+1))`.
    pub fn boundary_weights(&self) -> Vec<f64> {
        (1..=self.n).map(|a| site_mode_coeff(self.n, 1, a)).collect()
    }

    /// Fails when `2^N` exceeds `cap` sites' worth of states.
    pub fn require_dense(&self, cap: usize) -> Result<()> {
        if self.n > cap {
            return Err(Error::Capability(format!(
                "dense state space needs N <= {cap}, got N = {}",
                self.n
            )));
        }
        Ok(())
    }
}

/// `√(2/(N+1)) sin(π n a/(N+1))`, the orthogonal sine-transform kernel.
#[inline]
pub fn site_mode_coeff(n_sites: usize, site: usize, mode: usize) -> f64 {
    let scale = n_sites as f64 + 1.0;
    (2.0 / scale).sqrt() * (PI * (site * mode) as f64 / scale).sin()
}

/// Dispersion relation and site/mode transform.
#[derive(Debug, Clone)]
pub struct ModeTable {
    pub omegas: Vec<f64>,
    /// Row-major `N × N`, entry `(n-1, a-1)` is the site `n`, mode `a` coefficient.
    pub site_mode_coeffs: Array2<f64>,
}

impl ModeTable {
    pub fn new(p: &ChainParams) -> Self {
        let n = p.n;
        let coeffs = Array2::from_shape_fn((n, n), |(s, a)| site_mode_coeff(n, s + 1, a + 1));
        ModeTable {
            omegas: p.omegas(),
            site_mode_coeffs: coeffs,
        }
    }
}

/// `ω_a = h + j cos(πa/(N+1))` for a 1-based mode index.
pub fn dispersion(p: &ChainParams, a: usize) -> Result<f64> {
    if a == 0 || a > p.n {
        return Err(Error::arg(format!("mode index {a} outside 1..={}", p.n)));
    }
    Ok(p.omega(a))
}

/// Occupation pattern of the fermionic modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OccupationConfig {
    bits: u64,
    n: usize,
}

impl OccupationConfig {
    pub fn from_index(index: u64, n: usize) -> Result<Self> {
        if n == 0 || n > MAX_ENCODED_SITES {
            return Err(Error::Capability(format!(
                "occupation patterns are limited to N <= {MAX_ENCODED_SITES}"
            )));
        }
        if index >> n != 0 {
            return Err(Error::arg(format!("index {index} has bits beyond N = {n}")));
        }
        Ok(OccupationConfig { bits: index, n })
    }

    /// Builds from `k_1..k_N` given as 0/1 values.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let mut index = 0u64;
        for (i, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => {
                    if i >= MAX_ENCODED_SITES {
                        return Err(Error::Capability("pattern too long".into()));
                    }
                    index |= 1 << i
                }
                _ => return Err(Error::arg(format!("occupation must be 0 or 1, got {b}"))),
            }
        }
        Self::from_index(index, bits.len())
    }

    pub fn index(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn bits(&self) -> Vec<u8> {
        (0..self.n).map(|i| ((self.bits >> i) & 1) as u8).collect()
    }

    /// `k_a` for a 1-based mode.
    pub fn occupied(&self, a: usize) -> bool {
        debug_assert!(a >= 1 && a <= self.n);
        (self.bits >> (a - 1)) & 1 == 1
    }

    /// `k^(a)`: the pattern with mode `a` toggled.
    pub fn flip(&self, a: usize) -> Self {
        debug_assert!(a >= 1 && a <= self.n);
        OccupationConfig {
            bits: self.bits ^ (1 << (a - 1)),
            n: self.n,
        }
    }

    pub fn complement(&self) -> Self {
        let mask = if self.n == 64 { u64::MAX } else { (1u64 << self.n) - 1 };
        OccupationConfig {
            bits: !self.bits & mask,
            n: self.n,
        }
    }

    /// `(s_{k_a}, s^(a)_k)` for a 1-based mode, see [`sign_factors`].
    pub fn sign_factors(&self, a: usize) -> (f64, f64) {
        let s = if self.occupied(a) { 1.0 } else { -1.0 };
        (s, prefix_sign(self.bits as usize, a - 1))
    }
}

/// `(-1)^(number of occupied modes below the 0-based mode `a`)`.
#[inline]
pub(crate) fn prefix_sign(k: usize, a: usize) -> f64 {
    let below = k & ((1usize << a) - 1);
    if below.count_ones() & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `s_{k_a} = 2k_a - 1` and the Jordan–Wigner string sign
/// `s^(a)_k = Π_{c<a} (-s_{k_c})`.
pub fn sign_factors(k: &OccupationConfig, a: usize) -> Result<(f64, f64)> {
    if a == 0 || a > k.len() {
        return Err(Error::arg(format!("mode index {a} outside 1..={}", k.len())));
    }
    Ok(k.sign_factors(a))
}

/// `E_k = -Σ_a k_a ω_a`.
pub fn config_energy(p: &ChainParams, k: &OccupationConfig) -> f64 {
    debug_assert_eq!(p.n, k.len());
    energy_of_index(&p.omegas(), k.index() as usize)
}

#[inline]
pub(crate) fn energy_of_index(omegas: &[f64], k: usize) -> f64 {
    let mut e = 0.0;
    for (a, w) in omegas.iter().enumerate() {
        if (k >> a) & 1 == 1 {
            e -= w;
        }
    }
    e
}

/// Diagonal of `H` in the occupation basis.
pub fn energies(p: &ChainParams) -> Vec<f64> {
    let omegas = p.omegas();
    (0..p.dim()).map(|k| energy_of_index(&omegas, k)).collect()
}

/// `σ^+_n σ^-_n = Σ_ab u_{na} u_{nb} ψ̃†_a ψ̃_b` in the occupation basis.
pub fn number_operator_matrix(p: &ChainParams, site: usize) -> Result<Array2<f64>> {
    if site == 0 || site > p.n {
        return Err(Error::arg(format!("site index {site} outside 1..={}", p.n)));
    }
    p.require_dense(MAX_ENCODED_SITES.min(24))?;
    let n = p.n;
    let dim = p.dim();
    let u: Vec<f64> = (1..=n).map(|a| site_mode_coeff(n, site, a)).collect();
    let mut out = Array2::<f64>::zeros((dim, dim));
    for m in 0..dim {
        for b in 0..n {
            if (m >> b) & 1 == 0 {
                continue;
            }
            // ψ̃_b |m⟩
            let sign_b = prefix_sign(m, b);
            let removed = m ^ (1 << b);
            for a in 0..n {
                if a == b {
                    out[[m, m]] += u[a] * u[a];
                    continue;
                }
                if (removed >> a) & 1 == 1 {
                    continue;
                }
                let k = removed ^ (1 << a);
                out[[k, m]] += u[a] * u[b] * sign_b * prefix_sign(removed, a);
            }
        }
    }
    Ok(out)
}

/// `σ^x_1 = Σ_r c_r (ψ̃†_r + ψ̃_r)` as a dense real symmetric matrix.
pub fn boundary_flip_matrix(p: &ChainParams) -> Result<Array2<f64>> {
    p.require_dense(MAX_ENCODED_SITES.min(24))?;
    let c = p.boundary_weights();
    let dim = p.dim();
    let mut out = Array2::<f64>::zeros((dim, dim));
    for l in 0..dim {
        for (r, &cr) in c.iter().enumerate() {
            out[[l ^ (1 << r), l]] += cr * prefix_sign(l, r);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(n: usize) -> ChainParams {
        ChainParams::new(n, 2.0, 1.0).unwrap()
    }

    #[test]
    fn dispersion_examples() {
        let p = base(3);
        assert!((dispersion(&p, 2).unwrap() - 1.0).abs() < 1e-15);
        assert!((dispersion(&p, 1).unwrap() - (1.0 + 2f64.sqrt())).abs() < 1e-12);
        assert!(dispersion(&p, 0).is_err());
        assert!(dispersion(&p, 4).is_err());
    }

    #[test]
    fn dispersion_pairs_sum_to_twice_field() {
        for n in 1..=12 {
            let p = ChainParams::new(n, -0.7, 0.3).unwrap();
            for a in 1..=n {
                let s = dispersion(&p, a).unwrap() + dispersion(&p, n + 1 - a).unwrap();
                assert!((s - 0.6).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mode_table_is_orthogonal() {
        for n in 1..=32 {
            let t = ModeTable::new(&ChainParams::new(n, 1.0, 0.0).unwrap());
            let c = &t.site_mode_coeffs;
            let prod = c.t().dot(c);
            for ((i, j), v) in prod.indexed_iter() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-12, "N={n} ({i},{j}) {v}");
            }
        }
    }

    #[test]
    fn energies_and_signs() {
        let p = base(3);
        let vac = OccupationConfig::from_bits(&[0, 0, 0]).unwrap();
        assert_eq!(config_energy(&p, &vac), 0.0);
        let k = OccupationConfig::from_bits(&[1, 0, 1]).unwrap();
        assert!((config_energy(&p, &k) + 2.0).abs() < 1e-12);
        let single = OccupationConfig::from_bits(&[0, 1, 0]).unwrap();
        assert!((config_energy(&p, &single) + p.omega(2)).abs() < 1e-15);

        for a in 1..=3 {
            assert_eq!(sign_factors(&vac, a).unwrap(), (-1.0, 1.0));
        }
        let k = OccupationConfig::from_bits(&[1, 0]).unwrap();
        assert_eq!(sign_factors(&k, 2).unwrap(), (-1.0, -1.0));
        let k = OccupationConfig::from_bits(&[1, 1, 0]).unwrap();
        assert_eq!(sign_factors(&k, 3).unwrap(), (-1.0, 1.0));
        assert!(sign_factors(&k, 4).is_err());
    }

    #[test]
    fn energy_of_complement_adds_up() {
        let p = ChainParams::new(6, 1.3, -0.4).unwrap();
        let total: f64 = p.omegas().iter().sum();
        for idx in 0..64 {
            let k = OccupationConfig::from_index(idx, 6).unwrap();
            let s = config_energy(&p, &k) + config_energy(&p, &k.complement());
            assert!((s + total).abs() < 1e-12);
        }
    }

    #[test]
    fn number_operator_small_cases() {
        let p = ChainParams::new(1, 2.0, 1.0).unwrap();
        let m = number_operator_matrix(&p, 1).unwrap();
        assert_eq!(m[[0, 0]], 0.0);
        assert!((m[[1, 1]] - 1.0).abs() < 1e-15);
        assert_eq!(m[[0, 1]], 0.0);

        let p = base(3);
        let m = number_operator_matrix(&p, 2).unwrap();
        assert!(m[[0b010, 0b010]].abs() < 1e-15);
        assert!(number_operator_matrix(&p, 4).is_err());
    }

    #[test]
    fn number_operator_trace_and_symmetry() {
        for n in 1..=6 {
            let p = ChainParams::new(n, 2.0, 1.0).unwrap();
            for site in 1..=n {
                let m = number_operator_matrix(&p, site).unwrap();
                let tr: f64 = m.diag().sum();
                assert!((tr - (1 << (n - 1)) as f64).abs() < 1e-10);
                let defect = (&m - &m.t()).iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
                assert!(defect < 1e-14);
            }
        }
    }

    #[test]
    fn boundary_flip_is_an_involution() {
        for n in 1..=6 {
            let x = boundary_flip_matrix(&base(n)).unwrap();
            let sq = x.dot(&x);
            for ((i, j), v) in sq.indexed_iter() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-12);
            }
        }
    }
}
