//! Small dense complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

/// Relative tolerance below which negative eigenvalues are treated as round-off.
pub const PSD_CLIP_TOL: f64 = 1e-10;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

/// Scaled identity as a complex matrix.
pub fn scaled_identity(n: usize, s: f64) -> CMat {
    CMat::from_diagonal_element(n, n, c(s))
}

pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * c(0.5)
}

/// `max |A - A^H|`.
pub fn hermitian_defect(a: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest absolute entry; a cheap norm used for relative tolerances.
pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn spectral_norm_bound(a: &CMat) -> f64 {
    // Frobenius norm bounds the spectral norm from above.
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Real part of `Tr(A B)` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> Complex64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn trace(a: &CMat) -> Complex64 {
    a.diagonal().iter().sum()
}

/// Eigen-decomposition of a Hermitian matrix (the input is symmetrized first).
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: CMat,
}

impl HermitianEigen {
    pub fn new(a: &CMat) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "eigen-decomposition needs a square matrix");
        if a.nrows() == 0 {
            return Self {
                values: DVector::zeros(0),
                vectors: zeros(0, 0),
            };
        }
        let eig = SymmetricEigen::new(hermitian_part(a));
        Self {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `U f(Λ) U^H`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let s = f(self.values[j]);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        scaled * self.vectors.adjoint()
    }

    /// Checks the PSD contract and returns the eigenvalues clipped at zero.
    pub fn clipped_values(&self, what: &str) -> Result<Vec<f64>> {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if self.min() < -PSD_CLIP_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Model(format!(
                "{what} is not positive semidefinite (min eigenvalue {:e}, scale {:e})",
                self.min(),
                scale
            )));
        }
        Ok(self.values.iter().map(|v| v.max(0.0)).collect())
    }
}

/// Hermitian PSD square root with round-off clipping.
pub fn psd_sqrt(a: &CMat, what: &str) -> Result<CMat> {
    let eig = HermitianEigen::new(a);
    eig.clipped_values(what)?;
    Ok(eig.apply(|v| v.max(0.0).sqrt()))
}

/// Validates PSD-ness of a Hermitian matrix.
pub fn check_psd(a: &CMat, what: &str) -> Result<()> {
    if hermitian_defect(a) > 1e-8 * max_abs(a).max(1.0) {
        return Err(Error::Model(format!("{what} is not Hermitian")));
    }
    HermitianEigen::new(a).clipped_values(what).map(|_| ())
}

/// `log det A` for Hermitian positive definite `A`.
pub fn logdet_hpd(a: &CMat) -> Result<f64> {
    let eig = HermitianEigen::new(a);
    if eig.dim() > 0 && !(eig.min() > 0.0) {
        return Err(Error::Model(format!("matrix is not positive definite (min eigenvalue {:e})", eig.min())));
    }
    Ok(eig.values.iter().map(|v| v.ln()).sum())
}

/// Inverse of a Hermitian positive definite matrix.
pub fn inverse_hpd(a: &CMat) -> Result<CMat> {
    let eig = HermitianEigen::new(a);
    if eig.dim() > 0 && !(eig.min() > 0.0) {
        return Err(Error::Model("matrix is not positive definite".into()));
    }
    Ok(eig.apply(|v| 1.0 / v))
}

/// `A P A^H`, symmetrized.
pub fn congruence(a: &CMat, p: &CMat) -> CMat {
    hermitian_part(&(a * p * a.adjoint()))
}

pub fn real_inner(a: &CMat, b: &CMat) -> f64 {
    // Re Tr(A^H B)
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn all_finite(a: &CMat) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `y^H A x` for column vectors stored as single-column matrices.
pub fn bilinear(y: &CMat, a: &CMat, x: &CMat) -> Complex64 {
    let ax = a * x;
    y.iter().zip(ax.iter()).map(|(u, v)| u.conj() * v).sum()
}
