//! Hermitian eigen-solvers.
//!
//! Full decompositions use cyclic complex Jacobi rotations. The largest
//! eigenpair of big matrices (dim > [`JACOBI_MAX_DIM`]) is tracked with a
//! shifted, explicitly restarted Krylov iteration so memory stays `O(dim·k)`
//! beyond the matrix itself.

use crate::error::{invalid, Error, Result};

use super::matrix::{dot, norm, norm_inf, scale_vec, CMatrix, CVector, HermitianMatrix, C64, ZERO};

/// Largest dimension handled by Jacobi inside [`principal_eigpair`].
pub const JACOBI_MAX_DIM: usize = 64;

const JACOBI_MAX_SWEEPS: usize = 100;
const KRYLOV_DIM: usize = 24;
const KRYLOV_MAX_RESTARTS: usize = 400;

/// Eigenvalues sorted in descending order, eigenvectors as matching columns.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> CVector {
        self.vectors.column(k)
    }
}

fn check_finite(a: &HermitianMatrix) -> Result<()> {
    if a.as_matrix().is_finite() {
        Ok(())
    } else {
        Err(invalid("matrix has non-finite entries"))
    }
}

/// Rotates `u` so its first non-negligible component is real and nonnegative.
pub fn normalize_phase(u: &mut [C64]) {
    let cutoff = 1e-12 * norm_inf(u);
    if let Some(first) = u.iter().find(|z| z.norm() > cutoff).copied() {
        let rot = first.conj() / first.norm();
        for z in u.iter_mut() {
            *z *= rot;
        }
    }
}

/// Full eigendecomposition by cyclic Jacobi rotations.
pub fn eigh(a: &HermitianMatrix) -> Result<HermitianEigen> {
    check_finite(a)?;
    let n = a.dim();
    let mut m = a.as_matrix().as_slice().to_vec();
    let mut v = CMatrix::identity(n);
    let scale = a.frobenius_norm();

    let mut converged = n == 1 || scale == 0.0;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| m[p * n + q].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut m, v.as_mut_slice(), n, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::Numerical("Jacobi eigen-solver did not converge".into()));
    }

    let diag: Vec<f64> = (0..n).map(|i| m[i * n + i].re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // stable: ties keep the lower index first
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap_or(std::cmp::Ordering::Equal));

    let values = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        let mut col = v.column(i);
        normalize_phase(&mut col);
        vectors.set_column(k, &col);
    }
    Ok(HermitianEigen { values, vectors })
}

/// One Jacobi rotation annihilating `m[p][q]`; accumulates into `v`.
fn rotate(m: &mut [C64], v: &mut [C64], n: usize, p: usize, q: usize) {
    let apq = m[p * n + q];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = m[p * n + p].re;
    let aqq = m[q * n + q].re;
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau.abs() > 1e150 {
        0.5 / tau
    } else {
        let sgn = if tau >= 0.0 { 1.0 } else { -1.0 };
        sgn / (tau.abs() + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let e = apq / r; // e^{jφ}
    let s_e = e * s;
    let s_ec = e.conj() * s;

    // A ← A J, with J_pp = J_qq = c, J_pq = s e^{jφ}, J_qp = −s e^{−jφ}
    for k in 0..n {
        let akp = m[k * n + p];
        let akq = m[k * n + q];
        m[k * n + p] = akp * c - s_ec * akq;
        m[k * n + q] = s_e * akp + akq * c;
    }
    // A ← Jᴴ A
    for k in 0..n {
        let apk = m[p * n + k];
        let aqk = m[q * n + k];
        m[p * n + k] = apk * c - s_e * aqk;
        m[q * n + k] = s_ec * apk + aqk * c;
    }
    m[p * n + q] = ZERO;
    m[q * n + p] = ZERO;
    m[p * n + p].im = 0.0;
    m[q * n + q].im = 0.0;

    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = vkp * c - s_ec * vkq;
        v[k * n + q] = s_e * vkp + vkq * c;
    }
}

/// Algebraically largest eigenvalue and its unit eigenvector.
///
/// The eigenvector's first component with modulus above `1e-12·‖u‖∞` is
/// real and nonnegative.
pub fn principal_eigpair(a: &HermitianMatrix) -> Result<(f64, CVector)> {
    check_finite(a)?;
    if a.dim() <= JACOBI_MAX_DIM {
        let eig = eigh(a)?;
        return Ok((eig.values[0], eig.vector(0)));
    }
    match krylov_largest(a) {
        Some(pair) => Ok(pair),
        None => {
            log::debug!("restarted Krylov stalled at dim {}; using Jacobi", a.dim());
            let eig = eigh(a)?;
            Ok((eig.values[0], eig.vector(0)))
        }
    }
}

/// Largest eigenpair by an explicitly restarted Krylov (Lanczos-type) iteration
/// on the shifted matrix `A + σI`, with `σ` from a Gershgorin bound so the
/// wanted eigenvalue is also the one of largest magnitude.
fn krylov_largest(a: &HermitianMatrix) -> Option<(f64, CVector)> {
    let n = a.dim();
    let m = a.as_matrix();
    let fro = a.frobenius_norm();
    let tol = 1e-10 * fro.max(1.0);
    if fro == 0.0 {
        let mut u = vec![ZERO; n];
        u[0] = C64::new(1.0, 0.0);
        return Some((0.0, u));
    }
    let gersh_low = (0..n)
        .map(|i| {
            let radius: f64 = m
                .row(i)
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, z)| z.norm())
                .sum();
            m[(i, i)].re - radius
        })
        .fold(f64::INFINITY, f64::min);
    let shift = (-gersh_low).max(0.0);
    let k = KRYLOV_DIM.min(n);

    // deterministic, generic start vector
    let mut x: CVector = (0..n)
        .map(|i| C64::new(1.0 + (i as f64 + 1.0).sqrt().fract(), 0.0))
        .collect();
    let nx = norm(&x);
    scale_vec(&mut x, 1.0 / nx);

    for _ in 0..KRYLOV_MAX_RESTARTS {
        // Krylov basis with full reorthogonalization
        let mut basis: Vec<CVector> = Vec::with_capacity(k);
        let mut images: Vec<CVector> = Vec::with_capacity(k);
        let mut q = x.clone();
        for _ in 0..k {
            let aq = m.matvec(&q);
            let mut w: CVector = aq.iter().zip(&q).map(|(y, z)| y + z * shift).collect();
            basis.push(q);
            images.push(aq);
            for _ in 0..2 {
                for b in &basis {
                    let h = dot(b, &w);
                    for (wi, bi) in w.iter_mut().zip(b) {
                        *wi -= h * bi;
                    }
                }
            }
            let nw = norm(&w);
            if nw <= 1e-14 * fro.max(shift) {
                break;
            }
            scale_vec(&mut w, 1.0 / nw);
            q = w;
        }
        let dim = basis.len();
        // Rayleigh-Ritz on the unshifted matrix
        let t = CMatrix::from_fn(dim, dim, |i, j| dot(&basis[i], &images[j]));
        let t = HermitianMatrix::symmetrize(t);
        let eig = eigh(&t).ok()?;
        let y = eig.vector(0);
        let mut u = vec![ZERO; n];
        let mut au = vec![ZERO; n];
        for (j, yj) in y.iter().enumerate() {
            for i in 0..n {
                u[i] += basis[j][i] * yj;
                au[i] += images[j][i] * yj;
            }
        }
        let nu = norm(&u);
        scale_vec(&mut u, 1.0 / nu);
        scale_vec(&mut au, 1.0 / nu);
        let lambda = dot(&u, &au).re;
        let resid = norm(&au.iter().zip(&u).map(|(y, z)| y - z * lambda).collect::<Vec<_>>());
        if resid <= 0.5 * tol {
            normalize_phase(&mut u);
            return Some((lambda, u));
        }
        x = u;
    }
    None
}

/// Nearest positive-semidefinite matrix in Frobenius norm.
pub fn psd_project(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    let eig = eigh(a)?;
    let n = a.dim();
    let mut out = CMatrix::zeros(n, n);
    for (k, &lambda) in eig.values.iter().enumerate() {
        if lambda <= 0.0 {
            break;
        }
        let u = eig.vector(k);
        for i in 0..n {
            let ui = u[i] * lambda;
            for j in 0..n {
                out[(i, j)] += ui * u[j].conj();
            }
        }
    }
    Ok(HermitianMatrix::symmetrize(out))
}

/// Smallest eigenvalue, via the full decomposition.
pub fn min_eigenvalue(a: &HermitianMatrix) -> Result<f64> {
    Ok(*eigh(a)?.values.last().expect("dim >= 1"))
}
