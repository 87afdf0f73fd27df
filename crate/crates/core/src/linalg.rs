//! Small dense linear-algebra helpers shared by the modules.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::seed::Rng;
use crate::{CMatrix, CVector, RMatrix, RVector};

/// Draws one sample of a circularly-symmetric complex Gaussian CN(0, var).
pub fn complex_gaussian(rng: &mut Rng, var: f64) -> Complex64 {
    let scale = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Column-major stacking of the columns of `m`.
pub fn vectorize(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vectorize`].
pub fn unvectorize(v: &CVector, rows: usize, cols: usize) -> CMatrix {
    assert_eq!(v.len(), rows * cols, "vector length must equal rows*cols");
    CMatrix::from_column_slice(rows, cols, v.as_slice())
}

/// Real lift `[[Re A, −Im A], [Im A, Re A]]`.
pub fn lift_matrix(a: &CMatrix) -> RMatrix {
    let (r, c) = a.shape();
    DMatrix::from_fn(2 * r, 2 * c, |i, j| {
        let z = a[(i % r, j % c)];
        match (i < r, j < c) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Real lift `[Re x; Im x]`.
pub fn lift_vector(x: &CVector) -> RVector {
    let n = x.len();
    RVector::from_fn(2 * n, |i, _| if i < n { x[i].re } else { x[i - n].im })
}

/// Inverse of [`lift_vector`].
pub fn unlift_vector(x: &RVector) -> CVector {
    assert!(x.len() % 2 == 0, "lifted vector must have even length");
    let n = x.len() / 2;
    CVector::from_fn(n, |i, _| Complex64::new(x[i], x[i + n]))
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration from a fixed pseudo-random start.
pub fn max_eigenvalue_psd(g: &RMatrix, iters: usize) -> f64 {
    use rand::SeedableRng;
    let n = g.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut rng = Rng::seed_from_u64(0x5eed);
    let mut v = RVector::from_fn(n, |_, _| rng.random::<f64>() + 0.5);
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..iters {
        let w = g * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = v.dot(&w);
        v = w / norm;
    }
    // Rayleigh quotient of the final iterate.
    lambda.max(v.dot(&(g * &v)))
}

/// Singular values of a complex matrix, sorted descending.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `rel_tol · σ₁`.
pub fn numerical_rank(m: &CMatrix, rel_tol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().filter(|&&x| x > rel_tol * top).count(),
        _ => 0,
    }
}

/// `‖est − truth‖² / ‖truth‖²` over complex vectors.
pub fn nmse_complex(est: &CVector, truth: &CVector) -> f64 {
    (est - truth).norm_squared() / truth.norm_squared()
}
