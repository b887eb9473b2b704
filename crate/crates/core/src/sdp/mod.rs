//! The rank-relaxed max-min program
//!
//! ```text
//! max t  s.t.  log2(1 + p_X·tr(Θ̄ M_X)/σ_R²) ≥ t  (X = S, D),  diag(Θ̄) = 1,  Θ̄ ⪰ 0
//! ```
//!
//! and the Gaussian randomization step that turns its solution back into
//! unit-modulus phases.
//!
//! Two solvers are provided. [`solve_maxmin_sdp`] is a primal-dual
//! interior-point method on the equivalent linear program in `s = 2^t − 1`;
//! it is accurate to ~1e-10 and is what the optimizers use.
//! [`solve_maxmin_sdp_bisection`] bisects on `t` and classifies each level
//! with Dykstra alternating projections; it is slower and only resolves `t`
//! to the bracket width, but shares no code with the interior-point path and
//! serves as a cross-check.

mod dykstra;
mod ipm;
mod randomization;

use crate::channel::{ChannelSet, LinkBudget};
use crate::error::{invalid, shape, Error, Result};
use crate::numerics::{cholesky_pd, cholesky_psd, eigh, min_eigenvalue, CMatrix, HermitianMatrix, C64};
use crate::optimizers::{build_augmented_channels, AugmentedChannels};
use crate::rate::rate_from_channel_power;

pub use dykstra::{
    feasibility_project, feasibility_project_from, solve_maxmin_sdp_bisection, BisectionOptions, FeasibilityOutcome,
    DEFAULT_MAX_SWEEPS, FEASIBILITY_TOL,
};
pub use randomization::gaussian_randomization;

/// `γ(t) = (2^t − 1)·noise/power`: the trace `tr(Θ̄M)` needed for rate `t`.
pub fn rate_threshold(t: f64, power_w: f64, noise_w: f64) -> f64 {
    (t * std::f64::consts::LN_2).exp_m1() * noise_w / power_w
}

/// One max-min program: `M_X = H̄_XIRᴴH̄_XIR` plus powers and relay noise.
#[derive(Clone, Debug)]
pub struct MaxMinSdpInstance {
    m_s: HermitianMatrix,
    m_d: HermitianMatrix,
    p_s_w: f64,
    p_d_w: f64,
    sigma2_r_w: f64,
    // M_X = F_Xᴴ F_X
    f_s: CMatrix,
    f_d: CMatrix,
}

fn factor_of(m: &HermitianMatrix, label: &str) -> Result<CMatrix> {
    let l = cholesky_psd(m).map_err(|e| invalid(format!("M_{label} is not positive semidefinite: {e}")))?;
    // Lᴴ, keeping only the rows that carry weight
    let n = m.dim();
    let rows: Vec<usize> = (0..n)
        .filter(|&j| (0..n).any(|i| l[(i, j)] != C64::new(0.0, 0.0)))
        .collect();
    let rows = if rows.is_empty() { vec![0] } else { rows };
    Ok(CMatrix::from_fn(rows.len(), n, |r, i| l[(i, rows[r])].conj()))
}

impl MaxMinSdpInstance {
    /// Validates dimensions, powers (≥ 0), noise (> 0) and positive
    /// semidefiniteness of `M_S`, `M_D`.
    pub fn new(m_s: HermitianMatrix, m_d: HermitianMatrix, p_s_w: f64, p_d_w: f64, sigma2_r_w: f64) -> Result<Self> {
        check_scalars(m_s.dim(), m_d.dim(), p_s_w, p_d_w, sigma2_r_w)?;
        let f_s = factor_of(&m_s, "S")?;
        let f_d = factor_of(&m_d, "D")?;
        Ok(Self {
            m_s,
            m_d,
            p_s_w,
            p_d_w,
            sigma2_r_w,
            f_s,
            f_d,
        })
    }

    /// Instance with `M_X = H̄_XIRᴴH̄_XIR`.
    pub fn from_augmented(aug: &AugmentedChannels, budget: &LinkBudget) -> Result<Self> {
        let (f_s, f_d) = (aug.hbar_sir.clone(), aug.hbar_dir.clone());
        check_scalars(f_s.cols(), f_d.cols(), budget.p_s_w, budget.p_d_w, budget.sigma2_r_w)?;
        Ok(Self {
            m_s: HermitianMatrix::gram(&f_s),
            m_d: HermitianMatrix::gram(&f_d),
            p_s_w: budget.p_s_w,
            p_d_w: budget.p_d_w,
            sigma2_r_w: budget.sigma2_r_w,
            f_s,
            f_d,
        })
    }

    pub fn from_channels(chans: &ChannelSet) -> Result<Self> {
        Self::from_augmented(&build_augmented_channels(chans), &chans.budget)
    }

    /// `N + 1`.
    pub fn dim(&self) -> usize {
        self.m_s.dim()
    }

    pub fn m_s(&self) -> &HermitianMatrix {
        &self.m_s
    }

    pub fn m_d(&self) -> &HermitianMatrix {
        &self.m_d
    }

    pub fn p_s_w(&self) -> f64 {
        self.p_s_w
    }

    pub fn p_d_w(&self) -> f64 {
        self.p_d_w
    }

    pub fn sigma2_r_w(&self) -> f64 {
        self.sigma2_r_w
    }

    /// `(θ̄ᴴM_Sθ̄, θ̄ᴴM_Dθ̄)`.
    fn received_powers(&self, theta_bar: &[C64]) -> (f64, f64) {
        let q = |f: &CMatrix| f.matvec(theta_bar).iter().map(|z| z.norm_sqr()).sum::<f64>();
        (q(&self.f_s), q(&self.f_d))
    }

    /// `(R_SIR, R_DIR)` for an augmented vector `θ̄`.
    pub fn link_rates(&self, theta_bar: &[C64]) -> Result<(f64, f64)> {
        if theta_bar.len() != self.dim() {
            return Err(shape(format!(
                "θ̄ has length {}, expected {}",
                theta_bar.len(),
                self.dim()
            )));
        }
        let (g_s, g_d) = self.received_powers(theta_bar);
        Ok((
            rate_from_channel_power(self.p_s_w, g_s, self.sigma2_r_w)?,
            rate_from_channel_power(self.p_d_w, g_d, self.sigma2_r_w)?,
        ))
    }

    pub fn min_rate(&self, theta_bar: &[C64]) -> Result<f64> {
        let (a, b) = self.link_rates(theta_bar)?;
        Ok(a.min(b))
    }

    /// `(tr(Θ̄M_S), tr(Θ̄M_D))`.
    pub fn traces(&self, theta_bar: &HermitianMatrix) -> (f64, f64) {
        (theta_bar.trace_product(&self.m_s), theta_bar.trace_product(&self.m_d))
    }

    /// `min_X log2(1 + p_X·tr(Θ̄M_X)/σ_R²)`.
    pub fn relaxed_min_rate(&self, theta_bar: &HermitianMatrix) -> f64 {
        let (a, b) = self.traces(theta_bar);
        let snr = (self.p_s_w * a).min(self.p_d_w * b) / self.sigma2_r_w;
        snr.max(0.0).ln_1p() / std::f64::consts::LN_2
    }

    /// `max_X log2(1 + p_X(N+1)λ_max(M_X)/σ_R²)`, which no feasible `Θ̄` beats.
    pub fn rate_upper_bound(&self) -> Result<f64> {
        let lam = |f: &CMatrix| -> Result<f64> {
            // λ_max(FᴴF) = λ_max(FFᴴ), which is much smaller
            let g = HermitianMatrix::gram(&f.adjoint());
            Ok(eigh(&g)?.values[0].max(0.0))
        };
        let n1 = self.dim() as f64;
        let snr_s = self.p_s_w * n1 * lam(&self.f_s)? / self.sigma2_r_w;
        let snr_d = self.p_d_w * n1 * lam(&self.f_d)? / self.sigma2_r_w;
        Ok(snr_s.max(snr_d).ln_1p() / std::f64::consts::LN_2)
    }

    /// Largest constraint violation of `Θ̄` at level `t`: diagonal error,
    /// negative eigenvalue, and the trace shortfall relative to `γ_X(t)`.
    pub fn residual(&self, theta_bar: &HermitianMatrix, t: f64) -> Result<f64> {
        let psd_violation = if cholesky_pd(theta_bar.as_matrix()).is_some() {
            0.0
        } else {
            (-min_eigenvalue(theta_bar)?).max(0.0)
        };
        Ok(self.cheap_residual(theta_bar, t).max(psd_violation))
    }

    /// [`residual`](Self::residual) without the eigenvalue part.
    pub(crate) fn cheap_residual(&self, theta_bar: &HermitianMatrix, t: f64) -> f64 {
        let diag = theta_bar
            .diagonal_real()
            .iter()
            .map(|d| (d - 1.0).abs())
            .fold(0.0, f64::max);
        let (tr_s, tr_d) = self.traces(theta_bar);
        let short = |tr: f64, p: f64, m: &HermitianMatrix| -> f64 {
            let gamma = rate_threshold(t, p, self.sigma2_r_w);
            if t <= 0.0 {
                0.0
            } else if !gamma.is_finite() || m.frobenius_norm() == 0.0 {
                1.0
            } else {
                ((gamma - tr) / gamma).max(0.0)
            }
        };
        diag.max(short(tr_s, self.p_s_w, &self.m_s))
            .max(short(tr_d, self.p_d_w, &self.m_d))
    }
}

fn check_scalars(n_s: usize, n_d: usize, p_s: f64, p_d: f64, sigma2: f64) -> Result<()> {
    if n_s != n_d || n_s == 0 {
        return Err(shape(format!("M_S is {n_s}-dimensional but M_D is {n_d}-dimensional")));
    }
    for (name, v) in [("p_s_w", p_s), ("p_d_w", p_d)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(invalid(format!("{name} must be finite and nonnegative, got {v}")));
        }
    }
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(invalid(format!("sigma2_r_w must be finite and positive, got {sigma2}")));
    }
    Ok(())
}

/// Which solver produced an [`SdpSolution`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdpRoute {
    InteriorPoint,
    Bisection,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    /// Optimal relaxed matrix with unit diagonal.
    pub theta_bar: HermitianMatrix,
    /// Relaxed optimum in bits/s/Hz, evaluated at `theta_bar`.
    pub t_star: f64,
    /// Upper end of the solver's uncertainty about the optimum: the dual
    /// objective for the interior-point route, the bracket top for bisection.
    /// The bracket top is the lowest level the projections failed to certify
    /// within the sweep budget, which is not a proof of infeasibility.
    pub t_upper: f64,
    /// [`MaxMinSdpInstance::residual`] of `theta_bar` at `t_star`.
    pub feasibility_residual: f64,
    /// Interior-point iterations or bisection steps.
    pub iterations: usize,
    pub route: SdpRoute,
}

/// Solves the relaxed program with a primal-dual interior-point method.
///
/// The program is rewritten as `max s` subject to `diag(Θ̄) = 1`,
/// `p_X·tr(Θ̄M_X)/σ_R² ≥ s`, `Θ̄ ⪰ 0`, and `t* = log2(1 + s*)`.
pub fn solve_maxmin_sdp(inst: &MaxMinSdpInstance) -> Result<SdpSolution> {
    let n = inst.dim();
    let c_s = inst.p_s_w / inst.sigma2_r_w;
    let c_d = inst.p_d_w / inst.sigma2_r_w;
    let tr_s = c_s * inst.m_s.trace();
    let tr_d = c_d * inst.m_d.trace();
    if !(tr_s > 0.0 && tr_d > 0.0) {
        // one side receives nothing whatever Θ̄ is
        let theta_bar = HermitianMatrix::identity(n);
        return Ok(SdpSolution {
            t_star: inst.relaxed_min_rate(&theta_bar),
            t_upper: inst.relaxed_min_rate(&theta_bar),
            feasibility_residual: 0.0,
            theta_bar,
            iterations: 0,
            route: SdpRoute::InteriorPoint,
        });
    }
    // normalize so that the average diagonal of K_S + K_D is O(1)
    let nu = tr_s.max(tr_d) / n as f64;
    let f_s = inst.f_s.scale((c_s / nu).sqrt());
    let f_d = inst.f_d.scale((c_d / nu).sqrt());
    let out = ipm::solve(&f_s, &f_d, 1.0)?;

    let x = out.x.as_matrix();
    let d: Vec<f64> = (0..n).map(|i| x[(i, i)].re).collect();
    if d.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Solver {
            message: "interior-point solution has a nonpositive diagonal".into(),
            last_iterate: x.as_slice().to_vec(),
        });
    }
    let theta_bar = HermitianMatrix::symmetrize(CMatrix::from_fn(n, n, |i, j| x[(i, j)] / (d[i] * d[j]).sqrt()));
    let t_star = inst.relaxed_min_rate(&theta_bar);
    let t_upper = (nu * out.dual_objective).max(0.0).ln_1p() / std::f64::consts::LN_2;
    log::trace!(
        "interior point: {} iterations, s = {:.6e}, dual = {:.6e}, primal infeasibility {:.1e}",
        out.iterations,
        out.primal_objective * nu,
        out.dual_objective * nu,
        out.primal_infeasibility
    );
    Ok(SdpSolution {
        feasibility_residual: inst.residual(&theta_bar, t_star)?,
        theta_bar,
        t_star,
        t_upper: t_upper.max(t_star),
        iterations: out.iterations,
        route: SdpRoute::InteriorPoint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ONE;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(rate_threshold(0.0, 1.0, 1.0), 0.0);
        assert!(approx(rate_threshold(1.0, 1.0, 1.0), 1.0, 1e-15));
        assert!(approx(rate_threshold(3.0, 2.0, 4.0), 14.0, 1e-13));
    }

    #[test]
    fn zero_channels_give_zero_rate() {
        let z = HermitianMatrix::zeros(4);
        let inst = MaxMinSdpInstance::new(z.clone(), z, 1.0, 1.0, 1e-3).unwrap();
        let sol = solve_maxmin_sdp(&inst).unwrap();
        assert_eq!(sol.t_star, 0.0);
        assert!(sol.theta_bar.diagonal_real().iter().all(|&d| d == 1.0));
    }

    #[test]
    fn symmetric_instance_matches_single_constraint() {
        // M_S = M_D = ffᴴ: single-constraint optimum is (Σ|f_i|)² on the elliptope
        let f = CMatrix::from_row_slice(1, 3, &[C64::new(0.3, 0.1), C64::new(-0.2, 0.4), ONE]).unwrap();
        let m = HermitianMatrix::gram(&f);
        let inst = MaxMinSdpInstance::new(m.clone(), m, 2.0, 2.0, 0.5).unwrap();
        let sol = solve_maxmin_sdp(&inst).unwrap();
        let best: f64 = f.as_slice().iter().map(|z| z.norm()).sum::<f64>().powi(2);
        let expected = (1.0 + 2.0 * best / 0.5).log2();
        assert!(approx(sol.t_star, expected, 1e-8), "{} vs {expected}", sol.t_star);
        assert!(sol.feasibility_residual <= 1e-7);
        assert!(sol.t_upper >= sol.t_star && sol.t_upper - sol.t_star < 1e-8);
    }

    #[test]
    fn rejects_bad_instances() {
        let m = HermitianMatrix::identity(2);
        assert!(MaxMinSdpInstance::new(m.clone(), HermitianMatrix::identity(3), 1.0, 1.0, 1.0).is_err());
        assert!(MaxMinSdpInstance::new(m.clone(), m.clone(), -1.0, 1.0, 1.0).is_err());
        assert!(MaxMinSdpInstance::new(m.clone(), m.clone(), 1.0, 1.0, 0.0).is_err());
        let indefinite = HermitianMatrix::from_real_diag(&[1.0, -1.0]);
        assert!(MaxMinSdpInstance::new(indefinite, m, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn upper_bound_dominates_any_feasible_point() {
        let f = CMatrix::from_fn(2, 4, |i, j| C64::new((i + j) as f64 * 0.1, i as f64 - 0.5 * j as f64));
        let m = HermitianMatrix::gram(&f);
        let inst = MaxMinSdpInstance::new(m.clone(), m, 1.0, 1.0, 1.0).unwrap();
        let sol = solve_maxmin_sdp(&inst).unwrap();
        assert!(sol.t_star <= inst.rate_upper_bound().unwrap() + 1e-12);
    }
}
