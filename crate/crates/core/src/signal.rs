//! Gaussian signal families `x ~ CN(0, K_x)` with `K_x = U_s (P_x/s) U_s^H`.
//!
//! The reduced eigenbasis `U_s` (N x s, orthonormal columns) fixes the
//! geometry every other module needs: per-sample variances
//! `sigma_t^2 = (P_x/s) ||u_t||^2`, where `u_t^H` is row `t` of `U_s`, and the
//! coherence range `eta_L = min_t ||u_t||^2`, `eta_U = max_t ||u_t||^2`.
//!
//! DFT convention, shared crate-wide: `[F]_{tk} = exp(-j 2 pi t k / N) / sqrt(N)`
//! with zero-based `t, k`. The low-pass family keeps frequencies `0..s`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{orthonormality_defect, CMatrix, CVector};
use crate::rng::{complex_normal, stream};

/// Columns passed to [`SignalModel::from_unitary_columns`] must be
/// orthonormal to this tolerance.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// Rows whose squared norm falls at or below this are treated as zero.
const ZERO_ROW_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    LowPassDft,
    ExplicitUnitaryColumns,
}

/// Immutable after construction; share freely across threads.
#[derive(Debug, Clone)]
pub struct SignalModel {
    n: usize,
    s: usize,
    power: f64,
    noise_var: f64,
    basis_kind: BasisKind,
    basis: CMatrix,
    row_norms: Vec<f64>,
    component_variances: Vec<f64>,
    eta_lower: f64,
    eta_upper: f64,
    // exp(+j 2 pi m / N), m in 0..N; only populated for the DFT family
    twiddles: Vec<Complex64>,
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be positive and finite, got {v}")))
    }
}

impl SignalModel {
    /// Low-pass circularly wide-sense stationary family: `U_s` is the first
    /// `s` columns of the unitary `N`-point DFT.
    pub fn build_lowpass_cwss(n: usize, s: usize, power: f64, noise_var: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        if s == 0 || s > n {
            return Err(Error::invalid("s", format!("need 1 <= s <= N = {n}, got {s}")));
        }
        check_positive("power", power)?;
        check_positive("noise_var", noise_var)?;

        let basis = dft_columns(n, s);
        let eta = s as f64 / n as f64;
        let twiddles = (0..n)
            .map(|m| Complex64::from_polar(1.0, 2.0 * PI * m as f64 / n as f64))
            .collect();
        Ok(Self {
            n,
            s,
            power,
            noise_var,
            basis_kind: BasisKind::LowPassDft,
            basis,
            row_norms: vec![eta; n],
            component_variances: vec![power / n as f64; n],
            eta_lower: eta,
            eta_upper: eta,
            twiddles,
        })
    }

    /// Arbitrary reduced eigenbasis. Rejects non-orthonormal columns and
    /// bases with a zero row (every bound divides by `eta_L`).
    pub fn from_unitary_columns(columns: CMatrix, power: f64, noise_var: f64) -> Result<Self> {
        let (n, s) = columns.shape();
        if n == 0 || s == 0 || s > n {
            return Err(Error::invalid(
                "columns",
                format!("need an N x s matrix with 1 <= s <= N, got {n} x {s}"),
            ));
        }
        check_positive("power", power)?;
        check_positive("noise_var", noise_var)?;
        if columns.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("columns", "entries must be finite"));
        }
        let defect = orthonormality_defect(&columns);
        if defect > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal {
                max_deviation: defect,
            });
        }
        let row_norms: Vec<f64> = columns
            .row_iter()
            .map(|row| row.iter().map(|z| z.norm_sqr()).sum())
            .collect();
        let eta_lower = row_norms.iter().copied().fold(f64::INFINITY, f64::min);
        let eta_upper = row_norms.iter().copied().fold(0.0, f64::max);
        if eta_lower <= ZERO_ROW_TOL {
            return Err(Error::DegenerateRow { eta_lower });
        }
        let lambda = power / s as f64;
        let component_variances = row_norms.iter().map(|r| lambda * r).collect();
        Ok(Self {
            n,
            s,
            power,
            noise_var,
            basis_kind: BasisKind::ExplicitUnitaryColumns,
            basis: columns,
            row_norms,
            component_variances,
            eta_lower,
            eta_upper,
            twiddles: Vec::new(),
        })
    }

    /// First `s` columns of the Sylvester-Hadamard matrix scaled by `1/sqrt(N)`.
    /// `N` must be a power of two.
    pub fn build_hadamard(n: usize, s: usize, power: f64, noise_var: f64) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::invalid("n", format!("Hadamard basis needs a power of two, got {n}")));
        }
        if s == 0 || s > n {
            return Err(Error::invalid("s", format!("need 1 <= s <= N = {n}, got {s}")));
        }
        let scale = 1.0 / (n as f64).sqrt();
        let cols = CMatrix::from_fn(n, s, |t, k| {
            // Sylvester construction: H[t][k] = (-1)^{popcount(t & k)}
            let sign = if (t & k).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            Complex64::new(sign * scale, 0.0)
        });
        Self::from_unitary_columns(cols, power, noise_var)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// Total power `P_x = tr K_x`.
    pub fn power(&self) -> f64 {
        self.power
    }

    /// Channel noise variance `sigma_w^2`.
    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn basis_kind(&self) -> BasisKind {
        self.basis_kind
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    /// Common eigenvalue `P_x / s` of `Lambda_{x,s}`.
    pub fn eigenvalue(&self) -> f64 {
        self.power / self.s as f64
    }

    /// `||u_t||^2` for every row `t`.
    pub fn row_norms(&self) -> &[f64] {
        &self.row_norms
    }

    pub fn component_variances(&self) -> &[f64] {
        &self.component_variances
    }

    pub fn eta_lower(&self) -> f64 {
        self.eta_lower
    }

    pub fn eta_upper(&self) -> f64 {
        self.eta_upper
    }

    /// All component variances equal (to 1e-12 relative).
    pub fn is_stationary(&self) -> bool {
        let v0 = self.component_variances[0];
        self.component_variances
            .iter()
            .all(|v| (v - v0).abs() <= 1e-12 * v0)
    }

    pub fn is_lowpass_dft(&self) -> bool {
        self.basis_kind == BasisKind::LowPassDft
    }

    /// `K_x = U_s (P_x/s) U_s^H`.
    pub fn covariance(&self) -> CMatrix {
        let lambda = Complex64::new(self.eigenvalue(), 0.0);
        (&self.basis * self.basis.adjoint()) * lambda
    }

    /// One draw `x = U_s Lambda^{1/2} z`, `z` standard complex Gaussian.
    pub fn sample_signal(&self, seed: u64) -> CVector {
        let mut rng = stream(seed);
        self.sample_with(&mut rng)
    }

    pub(crate) fn sample_with<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> CVector {
        let amp = self.eigenvalue().sqrt();
        let z = CVector::from_fn(self.s, |_, _| complex_normal(rng) * amp);
        &self.basis * z
    }

    /// `U_s^H diag(d) U_s` for a real diagonal `d` of length `N`.
    ///
    /// The DFT family takes an O(N s) Toeplitz route: entry `(k, l)` equals
    /// `(1/N) sum_t d_t exp(+j 2 pi t (k - l) / N)`.
    pub fn information_matrix(&self, diag: &[f64]) -> CMatrix {
        assert_eq!(diag.len(), self.n, "diagonal length must equal N");
        if self.basis_kind == BasisKind::LowPassDft {
            self.information_matrix_toeplitz(diag)
        } else {
            self.information_matrix_dense(diag)
        }
    }

    /// Reference route: `sum_t d_t u_t u_t^H`, valid for any basis.
    pub fn information_matrix_dense(&self, diag: &[f64]) -> CMatrix {
        assert_eq!(diag.len(), self.n, "diagonal length must equal N");
        let s = self.s;
        let mut m = CMatrix::zeros(s, s);
        for (t, &d) in diag.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let row = self.basis.row(t);
            for k in 0..s {
                let a = row[k].conj() * d;
                for l in k..s {
                    m[(k, l)] += a * row[l];
                }
            }
        }
        for k in 0..s {
            m[(k, k)].im = 0.0;
            for l in (k + 1)..s {
                m[(l, k)] = m[(k, l)].conj();
            }
        }
        m
    }

    fn information_matrix_toeplitz(&self, diag: &[f64]) -> CMatrix {
        let (n, s) = (self.n, self.s);
        let inv_n = 1.0 / n as f64;
        let mut lags = vec![Complex64::new(0.0, 0.0); s];
        for (t, &d) in diag.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let mut idx = 0usize;
            for lag in lags.iter_mut() {
                *lag += self.twiddles[idx] * d;
                idx += t;
                if idx >= n {
                    idx %= n;
                }
            }
        }
        for lag in lags.iter_mut() {
            *lag *= inv_n;
        }
        lags[0].im = 0.0;
        CMatrix::from_fn(s, s, |k, l| {
            if k >= l {
                lags[k - l]
            } else {
                lags[l - k].conj()
            }
        })
    }
}

/// First `s` columns of the unitary `N`-point DFT.
pub fn dft_columns(n: usize, s: usize) -> CMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, s, |t, k| {
        // reduce t*k mod n before the trig call to keep the phase exact-ish
        let m = (t * k) % n;
        Complex64::from_polar(scale, -2.0 * PI * m as f64 / n as f64)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_eigenvalues;

    #[test]
    fn full_rank_dft_is_white() {
        let m = SignalModel::build_lowpass_cwss(4, 4, 4.0, 1.0).unwrap();
        assert_eq!(m.component_variances(), &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(m.eta_lower(), 1.0);
        assert_eq!(m.eta_upper(), 1.0);
        let k = m.covariance();
        for i in 0..4 {
            for j in 0..4 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((k[(i, j)] - Complex64::new(target, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn full_scale_lowpass_geometry() {
        let m = SignalModel::build_lowpass_cwss(256, 4, 256.0, 1e-4 * 256.0).unwrap();
        assert_eq!(m.eta_lower(), 0.015625);
        assert_eq!(m.eta_upper(), 0.015625);
        assert!(m.component_variances().iter().all(|&v| v == 1.0));
        assert!(orthonormality_defect(m.basis()) < 1e-12);
    }

    #[test]
    fn row_norms_of_partial_dft() {
        let m = SignalModel::build_lowpass_cwss(8, 3, 8.0, 1.0).unwrap();
        // direct row-norm computation from the DFT definition
        let u = dft_columns(8, 3);
        let mut total = 0.0;
        for t in 0..8 {
            let r: f64 = (0..3).map(|k| u[(t, k)].norm_sqr()).sum();
            assert!((r - 3.0 / 8.0).abs() < 1e-14);
            total += r;
        }
        assert!((total - 3.0).abs() < 1e-13);
        assert_eq!(m.eta_lower(), 3.0 / 8.0);
    }

    #[test]
    fn identity_columns_are_rejected() {
        let mut cols = CMatrix::zeros(4, 2);
        cols[(0, 0)] = Complex64::new(1.0, 0.0);
        cols[(1, 1)] = Complex64::new(1.0, 0.0);
        let err = SignalModel::from_unitary_columns(cols, 1.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::DegenerateRow { .. }));
    }

    #[test]
    fn hadamard_columns_have_flat_rows() {
        let m = SignalModel::build_hadamard(4, 2, 4.0, 1.0).unwrap();
        assert!((m.eta_lower() - 0.5).abs() < 1e-15);
        assert!((m.eta_upper() - 0.5).abs() < 1e-15);
        assert!(m.is_stationary());
    }

    #[test]
    fn full_dft_via_explicit_columns() {
        let m = SignalModel::from_unitary_columns(dft_columns(8, 8), 8.0, 1.0).unwrap();
        assert!((m.eta_lower() - 1.0).abs() < 1e-12);
        assert!((m.eta_upper() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_orthonormal_columns_report_deviation() {
        let mut cols = dft_columns(4, 2);
        cols[(0, 0)] *= Complex64::new(1.1, 0.0);
        match SignalModel::from_unitary_columns(cols, 1.0, 1.0) {
            Err(Error::NotOrthonormal { max_deviation }) => assert!(max_deviation > 0.01),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn construction_errors() {
        assert!(SignalModel::build_lowpass_cwss(4, 5, 1.0, 1.0).is_err());
        assert!(SignalModel::build_lowpass_cwss(0, 0, 1.0, 1.0).is_err());
        assert!(SignalModel::build_lowpass_cwss(4, 0, 1.0, 1.0).is_err());
        assert!(SignalModel::build_lowpass_cwss(4, 2, 0.0, 1.0).is_err());
        assert!(SignalModel::build_lowpass_cwss(4, 2, 1.0, -1.0).is_err());
        assert!(SignalModel::build_hadamard(6, 2, 1.0, 1.0).is_err());
    }

    #[test]
    fn lowpass_covariance_is_circulant_and_matches_brute_force() {
        let (n, s, p) = (4usize, 2usize, 4.0);
        let m = SignalModel::build_lowpass_cwss(n, s, p, 1.0).unwrap();
        let k = m.covariance();
        // brute force: K[row][col] = (P/s)/N * sum_{f in 0..s} exp(-j 2 pi f (row - col) / N)
        for row in 0..n {
            for col in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for f in 0..s {
                    let ph = -2.0 * PI * (f as f64) * (row as f64 - col as f64) / n as f64;
                    acc += Complex64::from_polar(1.0, ph);
                }
                acc *= (p / s as f64) / n as f64;
                assert!((k[(row, col)] - acc).norm() < 1e-14);
                // circulant: depends only on (col - row) mod n
                let shifted = k[((row + 1) % n, (col + 1) % n)];
                assert!((k[(row, col)] - shifted).norm() < 1e-14);
            }
        }
        let trace: f64 = (0..n).map(|i| k[(i, i)].re).sum();
        assert!((trace - p).abs() < 1e-12);
    }

    #[test]
    fn covariance_spectrum_has_s_equal_eigenvalues() {
        let m = SignalModel::build_lowpass_cwss(16, 5, 10.0, 1.0).unwrap();
        let ev = hermitian_eigenvalues(&m.covariance());
        let nonzero: Vec<f64> = ev.iter().copied().filter(|v| v.abs() > 1e-8).collect();
        assert_eq!(nonzero.len(), 5);
        for v in nonzero {
            assert!((v - 2.0).abs() < 1e-8);
        }
    }

    #[test]
    fn toeplitz_route_matches_dense_route() {
        let m = SignalModel::build_lowpass_cwss(24, 7, 24.0, 1.0).unwrap();
        let d: Vec<f64> = (0..24).map(|t| ((t * 7919) % 13) as f64 * 0.3 - 1.0).collect();
        let a = m.information_matrix(&d);
        let b = m.information_matrix_dense(&d);
        assert!((a - b).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = SignalModel::build_lowpass_cwss(8, 3, 8.0, 1.0).unwrap();
        assert_eq!(m.sample_signal(42), m.sample_signal(42));
        assert_ne!(m.sample_signal(42), m.sample_signal(43));
    }
}
