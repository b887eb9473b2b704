use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

use super::matrix::{CMatrix, CVector, HermitianMatrix, C64, ZERO};

/// Relative ridge added to a covariance whose factorization fails.
pub const CHOLESKY_RIDGE: f64 = 1e-10;

/// Lower-triangular `L` with `L Lᴴ = A` for Hermitian positive-semidefinite `A`.
///
/// Pivots below `1e-14·max diag` are treated as exact zeros: the column is
/// dropped, which is exact for a PSD input with a null direction. A clearly
/// negative pivot is reported as a numerical error.
pub fn cholesky_psd(a: &HermitianMatrix) -> Result<CMatrix> {
    let n = a.dim();
    let m = a.as_matrix();
    let max_diag = (0..n).map(|i| m[(i, i)].re).fold(0.0, f64::max);
    let zero_tol = 1e-14 * max_diag;
    let neg_tol = 1e-10 * max_diag;
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d < -neg_tol || !d.is_finite() {
            return Err(Error::Numerical(format!("negative pivot {d:e} at column {j}")));
        }
        if d <= zero_tol {
            continue;
        }
        let ljj = d.sqrt();
        l[(j, j)] = C64::new(ljj, 0.0);
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Strict Cholesky for positive-definite matrices; `None` if any pivot is not
/// strictly positive.
pub fn cholesky_pd(a: &CMatrix) -> Option<CMatrix> {
    let n = a.rows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        {
            let row = l.row(j);
            for z in &row[..j] {
                d -= z.norm_sqr();
            }
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let ljj = d.sqrt();
        l[(j, j)] = C64::new(ljj, 0.0);
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            let (ri, rj) = (l.row(i), l.row(j));
            for k in 0..j {
                s -= ri[k] * rj[k].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Some(l)
}

/// Inverse of a positive-definite matrix from its Cholesky factor.
pub fn cholesky_inverse(l: &CMatrix) -> CMatrix {
    let n = l.rows();
    // L⁻¹ by forward substitution, column by column
    let mut linv = CMatrix::zeros(n, n);
    for j in 0..n {
        linv[(j, j)] = C64::new(1.0 / l[(j, j)].re, 0.0);
        for i in (j + 1)..n {
            let mut s = ZERO;
            for k in j..i {
                s -= l[(i, k)] * linv[(k, j)];
            }
            linv[(i, j)] = s / l[(i, i)].re;
        }
    }
    let inv = linv.adjoint_matmul(&linv);
    HermitianMatrix::symmetrize(inv).into_matrix()
}

/// Sampler for `CN(0, cov)` that factors the covariance once.
#[derive(Clone, Debug)]
pub struct ComplexGaussianSampler {
    factor: CMatrix,
}

impl ComplexGaussianSampler {
    pub fn new(cov: &HermitianMatrix) -> Result<Self> {
        if !cov.as_matrix().is_finite() {
            return Err(Error::InvalidInput("covariance has non-finite entries".into()));
        }
        let factor = match cholesky_psd(cov) {
            Ok(l) => l,
            Err(_) => {
                let n = cov.dim();
                let ridge = CHOLESKY_RIDGE * cov.trace().abs() / n as f64;
                let mut ridged = cov.clone();
                ridged.axpy(ridge, &HermitianMatrix::identity(n));
                cholesky_psd(&ridged)
                    .map_err(|e| Error::Numerical(format!("covariance factorization failed after ridging: {e}")))?
            }
        };
        Ok(Self { factor })
    }

    pub fn dim(&self) -> usize {
        self.factor.rows()
    }

    /// Draws `L g` with `g` i.i.d. standard circularly-symmetric complex normal.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CVector {
        let n = self.dim();
        let g: CVector = (0..n).map(|_| standard_complex_normal(rng)).collect();
        (0..n)
            .map(|i| {
                let row = self.factor.row(i);
                row[..=i].iter().zip(&g).map(|(a, b)| a * b).sum()
            })
            .collect()
    }
}

/// One draw of `CN(0, 1)`: real and imaginary parts each `N(0, 1/2)`.
pub fn standard_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws one vector from `CN(0, cov)`.
pub fn sample_complex_gaussian<R: Rng + ?Sized>(cov: &HermitianMatrix, rng: &mut R) -> Result<CVector> {
    Ok(ComplexGaussianSampler::new(cov)?.sample(rng))
}
