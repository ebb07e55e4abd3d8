//! Dense complex linear-algebra helpers on top of nalgebra: sorted Hermitian
//! eigendecompositions, sorted singular values, and seeded random matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Eigenvalues of a Hermitian matrix, ascending. The input is symmetrized first so
/// callers can pass matrices that are Hermitian only up to rounding.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let sym = (m + m.adjoint()).scale(0.5);
    let mut vals: Vec<f64> = nalgebra::SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals
}

/// Eigenvalues (ascending) and matching eigenvector columns of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let sym = (m + m.adjoint()).scale(0.5);
    let se = nalgebra::SymmetricEigen::new(sym);
    let n = se.eigenvalues.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let vals = idx.iter().map(|&i| se.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, c| se.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    hermitian_eigenvalues(m)[0]
}

/// Singular values, descending.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut vals: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    vals
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn is_unitary(m: &CMat, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let n = m.nrows();
    let gram = m.adjoint() * m;
    let eye = CMat::identity(n, n);
    max_abs_diff(&gram, &eye) <= tol
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

/// Matrix of iid complex standard normals.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    let data: Vec<Complex64> = (0..rows * cols).map(|_| complex_normal(rng)).collect();
    CMat::from_vec(rows, cols, data)
}

/// Haar-distributed unitary via QR of a Ginibre matrix with the R-diagonal phase fix,
/// so the distribution is exactly left and right invariant.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let g = ginibre(n, n, rng);
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let phases: Vec<Complex64> = (0..n)
        .map(|i| {
            let d = r[(i, i)];
            if d.norm() == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                d / d.norm()
            }
        })
        .collect();
    CMat::from_fn(n, n, |i, j| q[(i, j)] * phases[j])
}

/// Random full-rank density matrix G G^dag / tr(G G^dag).
pub fn random_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    let g = ginibre(d, d, rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    m.scale(1.0 / tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eigenvalues_sorted_and_correct() {
        // [[0.5, 0.6], [0.6, 0.5]] has eigenvalues -0.1 and 1.1
        let m = CMat::from_fn(2, 2, |i, j| {
            Complex64::new(if i == j { 0.5 } else { 0.6 }, 0.0)
        });
        let vals = hermitian_eigenvalues(&m);
        assert!((vals[0] - (-0.1)).abs() < 1e-12);
        assert!((vals[1] - 1.1).abs() < 1e-12);
    }

    #[test]
    fn eigenvectors_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_density(5, &mut rng);
        let (vals, vecs) = hermitian_eigen(&m);
        let lambda = CMat::from_fn(5, 5, |i, j| {
            if i == j {
                Complex64::new(vals[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let rebuilt = &vecs * lambda * vecs.adjoint();
        assert!(max_abs_diff(&rebuilt, &m) < 1e-10);
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1, 2, 7, 16] {
            let u = haar_unitary(n, &mut rng);
            assert!(is_unitary(&u, 1e-10), "n = {n}");
        }
    }

    #[test]
    fn random_density_is_a_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = random_density(4, &mut rng);
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        assert!(min_eigenvalue(&rho) > 0.0);
    }

    #[test]
    fn singular_values_descending() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = ginibre(6, 6, &mut rng);
        let sv = singular_values(&m);
        for w in sv.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }
}
