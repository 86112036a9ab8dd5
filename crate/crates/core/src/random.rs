//! Seeded random states for oracle checks.

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;

/// `G G† / Tr(G G†)` for a matrix `G` with uniform entries in the unit square.
pub fn random_density_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Array2<Complex64> {
    let g = Array2::from_shape_fn((dim, dim), |_| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let gg = g.dot(&g.t().mapv(|v| v.conj()));
    let tr = gg.diag().sum().re;
    let mut rho = gg / Complex64::new(tr, 0.0);
    // Remove rounding asymmetry so the input is Hermitian to the last bit.
    for i in 0..dim {
        rho[[i, i]].im = 0.0;
        for j in 0..i {
            let v = rho[[i, j]];
            rho[[j, i]] = v.conj();
        }
    }
    rho
}
