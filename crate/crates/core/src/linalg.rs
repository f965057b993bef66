//! Small dense complex linear algebra used throughout the crate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// `tr(M^{-1})` for Hermitian positive-definite `M`, via Cholesky.
pub fn trace_of_inverse_hpd(m: &CMatrix) -> Result<f64> {
    let n = m.nrows();
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("matrix is not positive definite".into()))?;
    // complex sqrt never fails, so indefiniteness shows up as a non-real pivot
    if (0..n).any(|i| {
        let d = chol.l_dirty()[(i, i)];
        !(d.re > 0.0) || d.im.abs() > 1e-12 * d.re
    }) {
        return Err(Error::Numerical("matrix is not positive definite".into()));
    }
    // tr(M^{-1}) = ||L^{-1}||_F^2
    let l_inv = chol
        .l()
        .solve_lower_triangular(&CMatrix::identity(n, n))
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    Ok(l_inv.iter().map(|z| z.norm_sqr()).sum())
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m)[0]
}

/// Spectral norm of a Hermitian matrix from its full eigendecomposition.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m)
        .into_iter()
        .fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Spectral norm by power iteration on `M^H M`, accelerated by repeated
/// squaring: after `k` rounds the iterate is `(M^H M)^(2^k)`, so near-equal
/// leading eigenvalues (common for these sums) still separate quickly.
///
/// Independent of the eigensolver path. Stops when the Rayleigh estimate
/// moves by at most `rel_tol` or after `max_iter` squarings.
pub fn spectral_norm_power(m: &CMatrix, rel_tol: f64, max_iter: usize) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    let scale = m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
    if scale == 0.0 {
        return 0.0;
    }
    let a = m / Complex64::new(scale, 0.0);
    let sq = a.adjoint() * &a;
    let rayleigh = |p: &CMatrix| -> f64 {
        // dominant column of the power, normalized
        let (j, _) = (0..n)
            .map(|j| (j, p.column(j).norm()))
            .fold((0, -1.0), |best, c| if c.1 > best.1 { c } else { best });
        let v = p.column(j).into_owned();
        let vn = v.norm();
        if vn == 0.0 {
            return 0.0;
        }
        let v = v / Complex64::new(vn, 0.0);
        v.dotc(&(&sq * &v)).re
    };
    let mut p = sq.clone();
    let mut lambda = rayleigh(&p);
    for _ in 0..max_iter.min(64) {
        let next_p = &p * &p;
        let f = next_p.norm();
        if f == 0.0 || !f.is_finite() {
            break;
        }
        p = next_p / Complex64::new(f, 0.0);
        let next = rayleigh(&p);
        let converged = (next - lambda).abs() <= rel_tol * next.abs();
        lambda = next;
        if converged {
            break;
        }
    }
    lambda.max(0.0).sqrt() * scale
}

/// Largest entry of `|U^H U - I|`.
pub fn orthonormality_defect(u: &CMatrix) -> f64 {
    let gram = u.adjoint() * u;
    let mut worst = 0.0_f64;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}
