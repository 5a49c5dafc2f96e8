//! Small dense complex linear-algebra helpers on top of `nalgebra`.
//!
//! Every routine here is deterministic: decompositions are sorted with a
//! stable index tie-break so that reruns produce bit-identical results.

use nalgebra::linalg::Cholesky;
use nalgebra::Dyn;
use num_complex::Complex64;

use crate::{ComplexMatrix, Error, Result};

/// Thin singular value decomposition `X = U diag(s) V^H` with `s` descending.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

impl ThinSvd {
    /// Ratio of the smallest to the largest singular value (0 for a zero matrix).
    pub fn inverse_condition(&self) -> f64 {
        match (self.singular_values.first(), self.singular_values.last()) {
            (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
            _ => 0.0,
        }
    }
}

pub fn thin_svd(x: &ComplexMatrix) -> ThinSvd {
    let svd = x.clone().svd(true, true);
    let u = svd.u.expect("U requested");
    let v_t = svd.v_t.expect("V^H requested");
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();

    let order = descending_order(&s);
    let k = order.len();
    let mut u_sorted = ComplexMatrix::zeros(x.nrows(), k);
    let mut v_sorted = ComplexMatrix::zeros(x.ncols(), k);
    let mut s_sorted = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        u_sorted.set_column(dst, &u.column(src));
        // v_t holds V^H, so row `src` conjugated is column `src` of V.
        v_sorted.set_column(dst, &v_t.row(src).adjoint());
        s_sorted.push(s[src]);
    }
    ThinSvd {
        u: u_sorted,
        singular_values: s_sorted,
        v: v_sorted,
    }
}

pub fn singular_values(x: &ComplexMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = x.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Eigen-decomposition of the Hermitian part of `a`, eigenvalues descending.
pub fn hermitian_eigen(a: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let h = hermitian_part(a);
    let eig = h.symmetric_eigen();
    let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let order = descending_order(&vals);
    let mut vecs = ComplexMatrix::zeros(a.nrows(), a.ncols());
    let mut sorted = Vec::with_capacity(vals.len());
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
        sorted.push(vals[src]);
    }
    (sorted, vecs)
}

pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Vec<f64> {
    let mut vals: Vec<f64> = hermitian_part(a)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    vals
}

pub fn hermitian_part(a: &ComplexMatrix) -> ComplexMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// The `n` dominant left singular vectors of `b` as an orthonormal `rows × n`
/// matrix. When `b` has fewer than `n` columns the basis is completed from
/// the eigenvectors of `b b^H`.
pub fn dominant_left_singular_vectors(b: &ComplexMatrix, n: usize) -> ComplexMatrix {
    assert!(
        n <= b.nrows(),
        "cannot take {n} vectors from {} rows",
        b.nrows()
    );
    if b.ncols() >= n {
        thin_svd(b).u.columns(0, n).into_owned()
    } else {
        let (_, vecs) = hermitian_eigen(&(b * b.adjoint()));
        vecs.columns(0, n).into_owned()
    }
}

/// Cholesky factor of a Hermitian positive definite matrix.
pub fn cholesky(a: &ComplexMatrix, what: &'static str) -> Result<Cholesky<Complex64, Dyn>> {
    let chol = hermitian_part(a)
        .cholesky()
        .ok_or(Error::NotPositiveDefinite(what))?;
    // complex square roots never fail, so an indefinite input shows up as a
    // non-real or non-positive pivot instead of a `None`
    let l = chol.l_dirty();
    let pivots_ok = (0..l.nrows()).all(|i| {
        let d = l[(i, i)];
        d.re.is_finite() && d.re > 0.0 && d.im.abs() <= 1e-12 * d.re
    });
    if pivots_ok {
        Ok(chol)
    } else {
        Err(Error::NotPositiveDefinite(what))
    }
}

/// Solves `A X = B` for Hermitian positive definite `A`.
pub fn hermitian_solve(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    what: &'static str,
) -> Result<ComplexMatrix> {
    if a.nrows() != a.ncols() || a.nrows() != b.nrows() {
        return Err(Error::shape(
            "hermitian_solve",
            format!("{}x{} vs {}x{}", a.nrows(), a.ncols(), b.nrows(), b.ncols()),
        ));
    }
    Ok(cholesky(a, what)?.solve(b))
}

/// `log2 det(I + B^H B)` evaluated from the eigenvalues of the Gram matrix.
/// Tiny negative eigenvalues from round-off are clipped to zero.
pub fn log2_det_identity_plus_gram(b: &ComplexMatrix) -> f64 {
    if b.ncols() == 0 {
        return 0.0;
    }
    hermitian_eigenvalues(&(b.adjoint() * b))
        .into_iter()
        .map(|lambda| (1.0 + clip_nonnegative(lambda)).log2())
        .sum()
}

pub(crate) fn clip_nonnegative(x: f64) -> f64 {
    if x < 1e-12 {
        0.0
    } else {
        x
    }
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// `n × k` matrix whose top `k × k` block is the identity.
pub fn identity_padded(n: usize, k: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, k)
}

pub fn frobenius_sq(x: &ComplexMatrix) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

/// Largest absolute deviation of `x^H x` from the identity, in Frobenius norm.
pub fn semi_unitary_residual(x: &ComplexMatrix) -> f64 {
    (x.adjoint() * x - identity(x.ncols())).norm()
}

pub fn trace_real(x: &ComplexMatrix) -> f64 {
    x.trace().re
}

fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    order
}
