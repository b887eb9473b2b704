//! Primal-dual interior-point method for the max-min SDP in linear form
//!
//! ```text
//! max  s
//! s.t. Θ_ii = 1,  tr(K_S Θ) − s − u_S = 0,  tr(K_D Θ) − s − u_D = 0,
//!      Θ ⪰ 0,  s, u_S, u_D ≥ 0
//! ```
//!
//! with `K_X = F_Xᴴ F_X` given by (possibly low-rank) factors. Infeasible
//! start, HKM search direction, Mehrotra predictor-corrector.

use crate::error::{Error, Result};
use crate::numerics::{cholesky_inverse, cholesky_pd, CMatrix, HermitianMatrix, C64};

const MAX_ITERS: usize = 100;
const TOL: f64 = 1e-9;
/// Accepted when the Newton system breaks down before `TOL` is reached.
const LOOSE_TOL: f64 = 1e-7;
const STEP_FRACTION: f64 = 0.95;

#[derive(Clone, Debug)]
pub(crate) struct IpmOutcome {
    pub x: HermitianMatrix,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
    pub primal_infeasibility: f64,
}

struct Problem<'a> {
    n: usize,
    f_s: &'a CMatrix,
    f_d: &'a CMatrix,
    /// Multiplier applied to both `K` matrices.
    scale: f64,
}

/// Point of the primal-dual pair. `lp = [s, u_S, u_D]`.
#[derive(Clone)]
struct Iterate {
    x: CMatrix,
    lp: [f64; 3],
    y: Vec<f64>,
    z: CMatrix,
    zlp: [f64; 3],
}

const A_S: [f64; 3] = [-1.0, -1.0, 0.0];
const A_D: [f64; 3] = [-1.0, 0.0, -1.0];
const C_LP: [f64; 3] = [1.0, 0.0, 0.0];

impl Problem<'_> {
    /// `Re tr(K G)` for `K = scale·FᴴF`.
    fn k_trace(&self, f: &CMatrix, g: &CMatrix) -> f64 {
        // tr(Fᴴ F G) = tr(F G Fᴴ)
        let fg = f.matmul(g);
        let mut acc = 0.0;
        for m in 0..f.rows() {
            acc += fg
                .row(m)
                .iter()
                .zip(f.row(m))
                .map(|(a, b)| (a * b.conj()).re)
                .sum::<f64>();
        }
        acc * self.scale
    }

    fn k_dense(&self, f: &CMatrix) -> CMatrix {
        f.adjoint_matmul(f).scale(self.scale)
    }

    /// `A(G, g)`; only the real part of the SDP traces is kept.
    fn apply_a(&self, g: &CMatrix, glp: &[f64; 3]) -> Vec<f64> {
        let n = self.n;
        let mut out = Vec::with_capacity(n + 2);
        for i in 0..n {
            out.push(g[(i, i)].re);
        }
        out.push(self.k_trace(self.f_s, g) + dot3(&A_S, glp));
        out.push(self.k_trace(self.f_d, g) + dot3(&A_D, glp));
        out
    }

    /// SDP part of `Aᵀ(y)`.
    fn apply_at_sdp(&self, y: &[f64], k_s: &CMatrix, k_d: &CMatrix) -> CMatrix {
        let n = self.n;
        let mut out = k_s.scale(y[n]);
        out.axpy(y[n + 1], k_d);
        for i in 0..n {
            out[(i, i)] += C64::new(y[i], 0.0);
        }
        out
    }

    fn apply_at_lp(&self, y: &[f64]) -> [f64; 3] {
        let n = self.n;
        [
            A_S[0] * y[n] + A_D[0] * y[n + 1],
            A_S[1] * y[n] + A_D[1] * y[n + 1],
            A_S[2] * y[n] + A_D[2] * y[n + 1],
        ]
    }
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x * y.conj()).re)
        .sum()
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    HermitianMatrix::symmetrize(m.clone()).into_matrix()
}

/// `X·Diag(d)·Zi`.
fn x_diag_zi(x: &CMatrix, d: &[f64], zi: &CMatrix) -> CMatrix {
    let n = x.rows();
    let xd = CMatrix::from_fn(n, n, |i, j| x[(i, j)] * d[j]);
    xd.matmul(zi)
}

/// Largest `α ≤ 1` (times a safety fraction) keeping `M + α dM ≻ 0`.
fn sdp_step(m: &CMatrix, dm: &CMatrix, probes: usize) -> f64 {
    let pd = |a: f64| {
        let mut t = m.clone();
        t.axpy(a, dm);
        cholesky_pd(&t).is_some()
    };
    let full = 1.0 / STEP_FRACTION;
    if pd(full) {
        return 1.0;
    }
    // halve until definite, then refine inside the last bracket
    let (mut lo, mut hi) = (0.5 * full, full);
    while !pd(lo) {
        hi = lo;
        lo *= 0.5;
        if lo < 1e-14 {
            return 0.0;
        }
    }
    for _ in 0..probes {
        let mid = 0.5 * (lo + hi);
        if pd(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    STEP_FRACTION * lo
}

fn lp_step(v: &[f64; 3], dv: &[f64; 3]) -> f64 {
    let mut alpha = f64::INFINITY;
    for k in 0..3 {
        if dv[k] < 0.0 {
            alpha = alpha.min(-v[k] / dv[k]);
        }
    }
    (STEP_FRACTION * alpha).min(1.0)
}

struct Direction {
    dx: CMatrix,
    dlp: [f64; 3],
    dy: Vec<f64>,
    dz: CMatrix,
    dzlp: [f64; 3],
}

/// Solves `max s` for `K_X = scale·F_XᴴF_X`; both factors have `n` columns.
pub(crate) fn solve(f_s: &CMatrix, f_d: &CMatrix, scale: f64) -> Result<IpmOutcome> {
    let n = f_s.cols();
    let prob = Problem { n, f_s, f_d, scale };
    let k_s = prob.k_dense(f_s);
    let k_d = prob.k_dense(f_d);
    let m = n + 2;

    let mut b = vec![1.0; n];
    b.extend([0.0, 0.0]);

    // dual start: y_S = y_D = −1, diagonal large enough for Z ≻ 0
    let k_sum = k_s.add(&k_d);
    let mut y: Vec<f64> = (0..n)
        .map(|i| 1.0 + k_sum.row(i).iter().map(|z| z.norm()).sum::<f64>())
        .collect();
    y.extend([-1.0, -1.0]);
    let (tr_s, tr_d) = (k_s.trace().re, k_d.trace().re);
    // Θ̄ = I is feasible, so the optimum is at least this; it keeps the
    // relative gap meaningful when one user is much weaker than the other
    let s_floor = tr_s.min(tr_d);
    let mut it = Iterate {
        x: CMatrix::identity(n),
        lp: {
            // primal feasible start: Θ̄ = I, s at half the smaller trace
            let s0 = 0.5 * s_floor;
            [s0, tr_s - s0, tr_d - s0]
        },
        z: prob.apply_at_sdp(&y, &k_s, &k_d),
        zlp: {
            let at = prob.apply_at_lp(&y);
            [at[0] - C_LP[0], at[1] - C_LP[1], at[2] - C_LP[2]]
        },
        y,
    };

    let b_norm = (n as f64).sqrt();
    let mut acceptable = None;
    for iter in 0..MAX_ITERS {
        // residuals
        let ax = prob.apply_a(&it.x, &it.lp);
        let r_p: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let at_sdp = prob.apply_at_sdp(&it.y, &k_s, &k_d);
        let at_lp = prob.apply_at_lp(&it.y);
        // R_d = C − Aᵀy + Z
        let r_d = it.z.sub(&at_sdp);
        let r_dlp = [
            C_LP[0] - at_lp[0] + it.zlp[0],
            C_LP[1] - at_lp[1] + it.zlp[1],
            C_LP[2] - at_lp[2] + it.zlp[2],
        ];
        let p_inf = r_p.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + b_norm);
        let d_inf = (r_d.frobenius_norm().powi(2) + r_dlp.iter().map(|v| v * v).sum::<f64>()).sqrt() / 2.0;
        let pobj = it.lp[0];
        let dobj: f64 = it.y[..n].iter().sum();
        let gap = inner(&it.x, &it.z) + dot3(&it.lp, &it.zlp);
        let rel_gap = gap / (s_floor + pobj.abs() + dobj.abs());
        let outcome = |x: &CMatrix| IpmOutcome {
            x: HermitianMatrix::symmetrize(x.clone()),
            primal_objective: pobj,
            dual_objective: dobj,
            iterations: iter,
            primal_infeasibility: p_inf,
        };
        if p_inf < TOL && d_inf < TOL && rel_gap < TOL {
            return Ok(outcome(&it.x));
        }
        if p_inf < LOOSE_TOL && d_inf < LOOSE_TOL && rel_gap < LOOSE_TOL {
            acceptable = Some(outcome(&it.x));
        }
        let mu = gap / (n + 3) as f64;

        let lz = cholesky_pd(&it.z).ok_or_else(|| Error::Numerical("dual iterate lost definiteness".into()))?;
        let zi = cholesky_inverse(&lz);

        // Schur complement O_ij = Re tr(A_i X A_j Z⁻¹) + LP block
        let xfs = it.x.matmul(&f_s.adjoint()); // n × r
        let xfd = it.x.matmul(&f_d.adjoint());
        let fszi = f_s.matmul(&zi); // r × n
        let fdzi = f_d.matmul(&zi);
        let mut schur = vec![0.0; m * m];
        for i in 0..n {
            for j in 0..n {
                schur[i * m + j] = (it.x[(i, j)] * zi[(j, i)]).re;
            }
            let os: f64 = (0..f_s.rows()).map(|r| (xfs[(i, r)] * fszi[(r, i)]).re).sum::<f64>() * scale;
            let od: f64 = (0..f_d.rows()).map(|r| (xfd[(i, r)] * fdzi[(r, i)]).re).sum::<f64>() * scale;
            schur[i * m + n] = os;
            schur[n * m + i] = os;
            schur[i * m + n + 1] = od;
            schur[(n + 1) * m + i] = od;
        }
        let pair = |fa: &CMatrix, xfb: &CMatrix, fbzi: &CMatrix, fa_zi_src: &CMatrix| -> f64 {
            // tr(K_a X K_b Zi) = tr((F_a X F_bᴴ)(F_b Zi F_aᴴ))
            let left = fa.matmul(xfb); // r_a × r_b
            let right = fbzi.matmul(&fa_zi_src.adjoint()); // r_b × r_a
            let mut acc = 0.0;
            for p in 0..left.rows() {
                for q in 0..left.cols() {
                    acc += (left[(p, q)] * right[(q, p)]).re;
                }
            }
            acc * scale * scale
        };
        let lp_w = [it.lp[0] / it.zlp[0], it.lp[1] / it.zlp[1], it.lp[2] / it.zlp[2]];
        let lp_pair = |a: &[f64; 3], c: &[f64; 3]| (0..3).map(|k| a[k] * c[k] * lp_w[k]).sum::<f64>();
        schur[n * m + n] = pair(f_s, &xfs, &fszi, f_s) + lp_pair(&A_S, &A_S);
        let sd = pair(f_s, &xfd, &fdzi, f_s) + lp_pair(&A_S, &A_D);
        schur[n * m + n + 1] = sd;
        schur[(n + 1) * m + n] = sd;
        schur[(n + 1) * m + n + 1] = pair(f_d, &xfd, &fdzi, f_d) + lp_pair(&A_D, &A_D);
        let Some(schur_l) = regularized_cholesky(&mut schur, m) else {
            return breakdown(
                acceptable,
                &it.x,
                format!("Schur complement is numerically singular at iteration {iter}"),
            );
        };

        // rounding-level dual residuals are not worth two extra products
        let dual_infeasible = r_d.frobenius_norm() > 1e-13 * (1.0 + it.z.frobenius_norm());
        // −X + X R_d Z⁻¹, shared by predictor and corrector
        let mut g_base = it.x.scale(-1.0);
        if dual_infeasible {
            g_base = g_base.add(&it.x.matmul(&r_d).matmul(&zi));
        }
        let glp_base: [f64; 3] = std::array::from_fn(|k| -it.lp[k] + it.lp[k] * r_dlp[k] / it.zlp[k]);

        let w_s = xfs.matmul(&fszi).scale(scale);
        let w_d = xfd.matmul(&fdzi).scale(scale);
        // dX = G − X Aᵀ(dy) Z⁻¹ and its LP counterpart
        let primal_step = |g: &CMatrix, glp: &[f64; 3], dy: &[f64]| -> (CMatrix, [f64; 3]) {
            let mut x_at_zi = x_diag_zi(&it.x, &dy[..n], &zi);
            x_at_zi.axpy(dy[n], &w_s);
            x_at_zi.axpy(dy[n + 1], &w_d);
            let at_dy = prob.apply_at_lp(dy);
            let dlp = std::array::from_fn(|k| glp[k] - it.lp[k] * at_dy[k] / it.zlp[k]);
            (hermitian_part(&g.sub(&x_at_zi)), dlp)
        };
        let direction = |target: f64, corr: Option<(&CMatrix, &[f64; 3])>| -> Direction {
            let mut g = g_base.clone();
            let mut glp = glp_base;
            if target != 0.0 {
                g.axpy(target, &zi);
                for (g, z) in glp.iter_mut().zip(&it.zlp) {
                    *g += target / z;
                }
            }
            if let Some((c, clp)) = corr {
                g = g.sub(&c.matmul(&zi));
                for k in 0..3 {
                    glp[k] -= clp[k] / it.zlp[k];
                }
            }
            let ag = prob.apply_a(&g, &glp);
            let rhs: Vec<f64> = ag.iter().zip(&r_p).map(|(a, r)| a - r).collect();
            let mut dy = real_cholesky_solve(&schur_l, m, &rhs);
            let (mut dx, mut dlp) = primal_step(&g, &glp, &dy);
            // one round of iterative refinement: G and X Aᵀ(dy) Z⁻¹ nearly
            // cancel close to a rank-deficient optimum
            let mismatch: Vec<f64> = prob.apply_a(&dx, &dlp).iter().zip(&r_p).map(|(a, r)| a - r).collect();
            if mismatch.iter().any(|v| v.abs() > 1e-11) {
                let delta = real_cholesky_solve(&schur_l, m, &mismatch);
                for (a, b) in dy.iter_mut().zip(&delta) {
                    *a += b;
                }
                (dx, dlp) = primal_step(&g, &glp, &dy);
            }
            let at_dy = prob.apply_at_lp(&dy);
            let dz = prob.apply_at_sdp(&dy, &k_s, &k_d).sub(&r_d);
            let dzlp: [f64; 3] = std::array::from_fn(|k| at_dy[k] - r_dlp[k]);
            Direction { dx, dlp, dy, dz, dzlp }
        };

        // predictor
        let aff = direction(0.0, None);
        let ap = sdp_step(&it.x, &aff.dx, 3).min(lp_step(&it.lp, &aff.dlp));
        let ad = sdp_step(&it.z, &aff.dz, 3).min(lp_step(&it.zlp, &aff.dzlp));
        let mut x_aff = it.x.clone();
        x_aff.axpy(ap, &aff.dx);
        let mut z_aff = it.z.clone();
        z_aff.axpy(ad, &aff.dz);
        let lp_aff: [f64; 3] = std::array::from_fn(|k| it.lp[k] + ap * aff.dlp[k]);
        let zlp_aff: [f64; 3] = std::array::from_fn(|k| it.zlp[k] + ad * aff.dzlp[k]);
        let mu_aff = (inner(&x_aff, &z_aff) + dot3(&lp_aff, &zlp_aff)) / (n + 3) as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector
        let corr = aff.dx.matmul(&aff.dz);
        let corr_lp: [f64; 3] = std::array::from_fn(|k| aff.dlp[k] * aff.dzlp[k]);
        let dir = direction(sigma * mu, Some((&corr, &corr_lp)));
        let ap = sdp_step(&it.x, &dir.dx, 5).min(lp_step(&it.lp, &dir.dlp));
        let ad = sdp_step(&it.z, &dir.dz, 5).min(lp_step(&it.zlp, &dir.dzlp));
        if !(ap > 0.0 && ad > 0.0) {
            return breakdown(
                acceptable,
                &it.x,
                format!("interior-point step collapsed at iteration {iter}"),
            );
        }
        it.x.axpy(ap, &dir.dx);
        it.x = hermitian_part(&it.x);
        for k in 0..3 {
            it.lp[k] += ap * dir.dlp[k];
            it.zlp[k] += ad * dir.dzlp[k];
        }
        for (yi, dyi) in it.y.iter_mut().zip(&dir.dy) {
            *yi += ad * dyi;
        }
        it.z.axpy(ad, &dir.dz);
        it.z = hermitian_part(&it.z);
    }
    breakdown(
        acceptable,
        &it.x,
        format!("interior-point method did not converge in {MAX_ITERS} iterations"),
    )
}

/// Near a rank-deficient optimum the Newton systems lose accuracy before
/// `TOL` is met; fall back to the last iterate that met `LOOSE_TOL`.
fn breakdown(acceptable: Option<IpmOutcome>, x: &CMatrix, message: String) -> Result<IpmOutcome> {
    match acceptable {
        Some(out) => {
            log::trace!("{message}; returning iterate {}", out.iterations);
            Ok(out)
        }
        None => Err(Error::Solver {
            message,
            last_iterate: x.as_slice().to_vec(),
        }),
    }
}

/// Cholesky of the Schur complement, adding a growing multiple of the
/// largest diagonal entry when it is not numerically positive definite.
fn regularized_cholesky(a: &mut [f64], m: usize) -> Option<Vec<f64>> {
    if let Some(l) = real_cholesky(a, m) {
        return Some(l);
    }
    let max_diag = (0..m).map(|i| a[i * m + i]).fold(0.0, f64::max);
    let mut added = 0.0;
    for k in [1e-14, 1e-13, 1e-12, 1e-11, 1e-10] {
        let delta = k * max_diag - added;
        for i in 0..m {
            a[i * m + i] += delta;
        }
        added += delta;
        if let Some(l) = real_cholesky(a, m) {
            return Some(l);
        }
    }
    None
}

fn real_cholesky(a: &[f64], m: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; m * m];
    for j in 0..m {
        let mut d = a[j * m + j];
        for k in 0..j {
            d -= l[j * m + k] * l[j * m + k];
        }
        if !(d > 0.0) {
            return None;
        }
        let ljj = d.sqrt();
        l[j * m + j] = ljj;
        for i in (j + 1)..m {
            let mut s = a[i * m + j];
            for k in 0..j {
                s -= l[i * m + k] * l[j * m + k];
            }
            l[i * m + j] = s / ljj;
        }
    }
    Some(l)
}

fn real_cholesky_solve(l: &[f64], m: usize, rhs: &[f64]) -> Vec<f64> {
    let mut w = rhs.to_vec();
    for i in 0..m {
        let mut s = w[i];
        for k in 0..i {
            s -= l[i * m + k] * w[k];
        }
        w[i] = s / l[i * m + i];
    }
    for i in (0..m).rev() {
        let mut s = w[i];
        for k in (i + 1)..m {
            s -= l[k * m + i] * w[k];
        }
        w[i] = s / l[i * m + i];
    }
    w
}
