//! Oracle suites: the generator form against the literal spin-basis master
//! equation, and the analytic spin-flip responses against dense evolution.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bath::{BathParams, MAX_TRUNCATION};
use crate::error::Result;
use crate::liouvillian::{master_rhs, reference_rhs, Memory, WindowMode};
use crate::random::random_density_matrix;
use crate::spectrum::{ChainParams, OccupationConfig};
use crate::spinflip::{brute_force_operator, eigenstate_response, thermal_response};
use crate::secular::thermal_occupation;

pub const MASTER_EQUATION_TOL: f64 = 1e-10;
pub const SPIN_FLIP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {} cases, max error {:.3e} (tolerance {:.0e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.max_error,
            self.tolerance
        )
    }
}

#[derive(Debug, Clone)]
pub struct MasterEquationSuite {
    pub sizes: Vec<usize>,
    pub states_per_size: usize,
    pub times: Vec<f64>,
    pub seed: u64,
}

impl Default for MasterEquationSuite {
    fn default() -> Self {
        MasterEquationSuite { sizes: vec![2, 3, 4], states_per_size: 20, times: vec![0.1, 1.0, 5.0], seed: 2024 }
    }
}

fn random_setup(rng: &mut ChaCha8Rng, n: usize) -> Result<(ChainParams, BathParams)> {
    let chain = ChainParams::new(n, rng.random_range(0.5..3.0), rng.random_range(-2.0..2.0))?;
    let bath = BathParams::new(
        rng.random_range(0.1..1.0),
        rng.random_range(-1.0..2.0),
        rng.random_range(0.5..3.0),
        rng.random_range(1..=MAX_TRUNCATION),
    )?;
    Ok((chain, bath))
}

impl MasterEquationSuite {
    /// Elementwise agreement of the factorised right-hand side with the
    /// dense spin-basis assembly, for random states and parameters.
    pub fn run(&self) -> Result<SuiteReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut worst = 0.0f64;
        let mut cases = 0;
        for &n in &self.sizes {
            for _ in 0..self.states_per_size {
                let (chain, bath) = random_setup(&mut rng, n)?;
                let rho = random_density_matrix(chain.dim(), &mut rng);
                for &t in &self.times {
                    let fast = master_rhs(&chain, &bath, t, &rho, Memory::NonMarkovian, WindowMode::None)?;
                    let slow = reference_rhs(&chain, &bath, t, &rho, Memory::NonMarkovian)?;
                    let err = (&fast - &slow).iter().fold(0.0f64, |acc, v| acc.max(v.norm()));
                    worst = worst.max(err);
                    cases += 1;
                }
            }
        }
        Ok(SuiteReport { name: "master equation", cases, max_error: worst, tolerance: MASTER_EQUATION_TOL })
    }
}

#[derive(Debug, Clone)]
pub struct SpinFlipSuite {
    pub sizes: Vec<usize>,
    pub eigenstates: usize,
    pub betas: Vec<f64>,
    pub grid_points: usize,
    pub t_max: f64,
    pub seed: u64,
}

impl Default for SpinFlipSuite {
    fn default() -> Self {
        SpinFlipSuite {
            sizes: vec![3, 4, 5],
            eigenstates: 10,
            betas: vec![-0.7, 0.3, 2.0],
            grid_points: 50,
            t_max: 10.0,
            seed: 4048,
        }
    }
}

impl SpinFlipSuite {
    /// Eigenstate and canonical responses against dense Heisenberg evolution.
    pub fn run(&self) -> Result<SuiteReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut worst = 0.0f64;
        let mut cases = 0;
        for &n_sites in &self.sizes {
            let chain = ChainParams::new(n_sites, rng.random_range(0.5..3.0), rng.random_range(-2.0..2.0))?;
            let states: Vec<OccupationConfig> = (0..self.eigenstates)
                .map(|_| OccupationConfig::from_index(rng.random_range(0..chain.dim() as u64), n_sites))
                .collect::<Result<_>>()?;
            for _ in 0..self.grid_points {
                let site = rng.random_range(1..=n_sites);
                let t = rng.random_range(0.0..self.t_max);
                let op = brute_force_operator(&chain, site, t)?;
                for k in &states {
                    let i = k.index() as usize;
                    let err = (eigenstate_response(&chain, k, site, t)? - op[[i, i]].re).abs();
                    worst = worst.max(err);
                    cases += 1;
                }
                for &beta in &self.betas {
                    let occ: Vec<f64> = chain.omegas().iter().map(|&w| thermal_occupation(beta, w)).collect();
                    let dense: f64 = (0..chain.dim())
                        .map(|k| {
                            let w: f64 = occ
                                .iter()
                                .enumerate()
                                .map(|(a, &o)| if (k >> a) & 1 == 1 { o } else { 1.0 - o })
                                .product();
                            w * op[[k, k]].re
                        })
                        .sum();
                    let err = (thermal_response(&chain, beta, site, t)? - dense).abs();
                    worst = worst.max(err);
                    cases += 1;
                }
            }
        }
        Ok(SuiteReport { name: "spin flip", cases, max_error: worst, tolerance: SPIN_FLIP_TOL })
    }
}

/// Both suites with their default sizes.
pub fn run_all() -> Result<Vec<SuiteReport>> {
    Ok(vec![MasterEquationSuite::default().run()?, SpinFlipSuite::default().run()?])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        let a = MasterEquationSuite { sizes: vec![2], states_per_size: 3, ..Default::default() }.run().unwrap();
        assert_eq!(a.cases, 9);
        assert!(a.passed(), "{a}");
        let b = SpinFlipSuite { sizes: vec![3], eigenstates: 2, grid_points: 5, ..Default::default() }.run().unwrap();
        assert_eq!(b.cases, 25);
        assert!(b.passed(), "{b}");
    }

    #[test]
    fn report_formatting() {
        let r = SuiteReport { name: "x", cases: 2, max_error: 2e-9, tolerance: 1e-10 };
        assert!(!r.passed());
        assert!(r.to_string().starts_with("FAIL x"));
    }
}
