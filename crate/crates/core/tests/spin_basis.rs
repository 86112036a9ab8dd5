//! The occupation-basis operators against an explicit spin-basis construction.
//!
//! Traces of arbitrary operator words are basis independent; if every word in
//! `{H, σ^x_1, σ^z_n}` has the same trace in both representations, the two
//! tuples are simultaneously unitarily equivalent.

use nalgebra::DMatrix;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spinheat::spectrum::{boundary_flip_matrix, energies, number_operator_matrix};
use spinheat::ChainParams;

type Dense = Array2<f64>;

fn kron(a: &Dense, b: &Dense) -> Dense {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    Array2::from_shape_fn((ar * br, ac * bc), |(i, j)| a[[i / br, j / bc]] * b[[i % br, j % bc]])
}

/// `op` on `site` (1-based) of an `n`-site chain.
fn embed(op: &Dense, site: usize, n: usize) -> Dense {
    let id = Array2::eye(2);
    (1..=n).fold(Array2::eye(1), |acc, s| kron(&acc, if s == site { op } else { &id }))
}

struct Spin {
    h: Dense,
    x1: Dense,
    z: Vec<Dense>,
}

/// Real representation: `σ^y σ^y` is real, so the XY coupling stays real.
fn spin_basis(p: &ChainParams) -> Spin {
    let n = p.n;
    let sx = Array2::from_shape_vec((2, 2), vec![0.0, 1.0, 1.0, 0.0]).unwrap();
    let sz = Array2::from_shape_vec((2, 2), vec![1.0, 0.0, 0.0, -1.0]).unwrap();
    // iσ^y is real; σ^y σ^y = -(iσ^y)(iσ^y).
    let isy = Array2::from_shape_vec((2, 2), vec![0.0, 1.0, -1.0, 0.0]).unwrap();
    let dim = 1 << n;
    let mut h = Array2::<f64>::zeros((dim, dim));
    for s in 1..n {
        let xx = embed(&sx, s, n).dot(&embed(&sx, s + 1, n));
        let yy = -embed(&isy, s, n).dot(&embed(&isy, s + 1, n));
        h = h - (xx + yy) * (p.j / 4.0);
    }
    let z: Vec<Dense> = (1..=n).map(|s| embed(&sz, s, n)).collect();
    for zs in &z {
        h = h - zs * (p.h / 2.0);
    }
    Spin { h, x1: embed(&sx, 1, n), z }
}

fn eigen_basis(p: &ChainParams) -> Spin {
    let dim = p.dim();
    let shift = p.n as f64 * p.h / 2.0;
    let h = Array2::from_diag(&ndarray::Array1::from_iter(energies(p).into_iter().map(|e| e + shift)));
    let z = (1..=p.n)
        .map(|s| number_operator_matrix(p, s).unwrap() * 2.0 - Array2::<f64>::eye(dim))
        .collect();
    Spin { h, x1: boundary_flip_matrix(p).unwrap(), z }
}

fn letters(s: &Spin) -> Vec<&Dense> {
    std::iter::once(&s.h).chain(std::iter::once(&s.x1)).chain(s.z.iter()).collect()
}

fn word_trace(ops: &[&Dense], word: &[usize]) -> f64 {
    let dim = ops[0].nrows();
    word.iter().fold(Array2::<f64>::eye(dim), |acc, &w| acc.dot(ops[w])).diag().sum()
}

fn spectrum(m: &Dense) -> Vec<f64> {
    let n = m.nrows();
    let mut ev: Vec<f64> = DMatrix::from_fn(n, n, |i, j| m[[i, j]]).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[test]
fn operator_words_have_equal_traces() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for n in 1..=5 {
        let p = ChainParams::new(n, rng.random_range(0.5..3.0), rng.random_range(-2.0..2.0)).unwrap();
        let (spin, eig) = (spin_basis(&p), eigen_basis(&p));
        let (a, b) = (letters(&spin), letters(&eig));
        for _ in 0..200 {
            let len = rng.random_range(1..=6);
            let word: Vec<usize> = (0..len).map(|_| rng.random_range(0..a.len())).collect();
            let (ta, tb) = (word_trace(&a, &word), word_trace(&b, &word));
            assert!((ta - tb).abs() < 1e-9 * (1.0 + ta.abs()), "N={n} word={word:?}: {ta} vs {tb}");
        }
    }
}

#[test]
fn hamiltonian_is_diagonal_energies_plus_constant() {
    for n in 1..=6 {
        let p = ChainParams::new(n, 2.0, 1.0).unwrap();
        let got = spectrum(&spin_basis(&p).h);
        let want = spectrum(&eigen_basis(&p).h);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12, "N={n}");
        }
    }
}

#[test]
fn joint_combinations_are_isospectral() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for n in 2..=5 {
        let p = ChainParams::new(n, 1.5, -0.4).unwrap();
        let (spin, eig) = (spin_basis(&p), eigen_basis(&p));
        for _ in 0..10 {
            let coeffs: Vec<f64> = (0..n + 2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let combine = |s: &Spin| {
                letters(s).iter().zip(&coeffs).fold(Array2::<f64>::zeros(s.h.dim()), |acc, (m, c)| acc + *m * *c)
            };
            for (x, y) in spectrum(&combine(&spin)).iter().zip(spectrum(&combine(&eig))) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }
}
