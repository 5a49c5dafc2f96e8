//! Independent oracles shared by the integration tests. Nothing here calls
//! the library's own factorisations.

#![allow(dead_code)]

use fdiab::{Complex64, ComplexMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Box-Muller draw of CN(0, 1).
pub fn cn<R: Rng>(rng: &mut R) -> Complex64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    let r = (-u1.ln()).sqrt();
    Complex64::from_polar(r, 2.0 * std::f64::consts::PI * u2)
}

pub fn gaussian<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| cn(rng))
}

/// Random constant-amplitude matrix with entries of modulus `1/√rows`.
pub fn random_ca<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let a = 1.0 / (rows as f64).sqrt();
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        Complex64::from_polar(a, rng.random_range(0.0..2.0 * std::f64::consts::PI))
    })
}

/// Modified Gram-Schmidt, twice for stability.
pub fn orthonormalize(x: &ComplexMatrix) -> ComplexMatrix {
    let mut q = x.clone();
    for _pass in 0..2 {
        for j in 0..q.ncols() {
            for k in 0..j {
                let proj = q.column(k).dotc(&q.column(j));
                let qk = q.column(k).into_owned();
                q.column_mut(j).axpy(-proj, &qk, Complex64::new(1.0, 0.0));
            }
            let n = q.column(j).norm();
            q.column_mut(j).unscale_mut(n);
        }
    }
    q
}

pub fn random_semi_unitary<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    orthonormalize(&gaussian(rows, cols, rng))
}

/// `log2 det(M)` for Hermitian positive definite `M`, via LU.
pub fn log2_det(m: &ComplexMatrix) -> f64 {
    m.clone().determinant().norm().log2()
}

/// `log2 det(I + ρ X^H A A^H X)`.
pub fn log_det_objective(x: &ComplexMatrix, a: &ComplexMatrix, rho: f64) -> f64 {
    let g = x.adjoint() * a;
    let m = ComplexMatrix::identity(g.nrows(), g.nrows())
        + (&g * g.adjoint()) * Complex64::new(rho, 0.0);
    log2_det(&m)
}

/// `Tr(W^H R W)`.
pub fn quad_trace(w: &ComplexMatrix, r: &ComplexMatrix) -> f64 {
    (w.adjoint() * r * w).trace().re
}

/// Eigenvalues of a 2x2 Hermitian matrix, descending, by the quadratic formula.
pub fn eig2(m: &ComplexMatrix) -> [f64; 2] {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = m[(0, 1)].norm();
    let mid = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    [mid + rad, mid - rad]
}

/// Unit eigenvector of a 2x2 Hermitian matrix for eigenvalue `lambda`.
pub fn eigvec2(m: &ComplexMatrix, lambda: f64) -> ComplexMatrix {
    let b = m[(0, 1)];
    let v = if b.norm() > 1e-14 {
        ComplexMatrix::from_column_slice(2, 1, &[b, Complex64::new(lambda - m[(0, 0)].re, 0.0)])
    } else if (m[(0, 0)].re - lambda).abs() < (m[(1, 1)].re - lambda).abs() {
        ComplexMatrix::from_column_slice(
            2,
            1,
            &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        )
    } else {
        ComplexMatrix::from_column_slice(
            2,
            1,
            &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        )
    };
    let n = v.norm();
    v.unscale(n)
}

/// Singular values and left singular vectors of an `M x 2` matrix from the
/// closed-form eigen-decomposition of `A^H A`.
pub fn svd_m_by_2(a: &ComplexMatrix) -> ([f64; 2], ComplexMatrix) {
    assert_eq!(a.ncols(), 2);
    let gram = a.adjoint() * a;
    let lambdas = eig2(&gram);
    let mut u = ComplexMatrix::zeros(a.nrows(), 2);
    let mut sigma = [0.0; 2];
    for (k, &l) in lambdas.iter().enumerate() {
        let v = eigvec2(&gram, l);
        sigma[k] = l.max(0.0).sqrt();
        let col = (a * v).unscale(sigma[k]);
        u.set_column(k, &col.column(0));
    }
    (sigma, u)
}

/// Projector onto the orthogonal complement of the columns of `b`.
pub fn complement_projector(b: &ComplexMatrix) -> ComplexMatrix {
    let q = orthonormalize(b);
    ComplexMatrix::identity(b.nrows(), b.nrows()) - &q * q.adjoint()
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
