//! Bisection on `t` with Dykstra alternating projections as the feasibility
//! oracle.

use crate::error::{invalid, Error, Result};
use crate::numerics::{psd_project, CMatrix, HermitianMatrix};

use super::{rate_threshold, MaxMinSdpInstance, SdpRoute, SdpSolution};

/// Residual at or below which a level `t` counts as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_SWEEPS: usize = 2000;

/// Result of one projection run.
#[derive(Clone, Debug)]
pub struct FeasibilityOutcome {
    pub theta_bar: HermitianMatrix,
    /// [`MaxMinSdpInstance::residual`] of `theta_bar`.
    pub residual: f64,
    pub sweeps: usize,
}

/// Dykstra projections from `Θ̄₀ = I`, stopping once the residual is at most
/// `1e-9` or after `max_sweeps`.
pub fn feasibility_project(inst: &MaxMinSdpInstance, t: f64, max_sweeps: usize) -> Result<(HermitianMatrix, f64)> {
    let out = feasibility_project_from(inst, t, &HermitianMatrix::identity(inst.dim()), max_sweeps, 1e-9)?;
    Ok((out.theta_bar, out.residual))
}

/// Dykstra projections from `start`.
///
/// Each sweep projects onto `diag = 1`, the two trace half-spaces (written
/// with the off-diagonal part of `M_X`) and then
/// the PSD cone, each with its own correction term. Stops when the residual
/// (evaluated after the PSD step) is at most `stop_tol`.
pub fn feasibility_project_from(
    inst: &MaxMinSdpInstance,
    t: f64,
    start: &HermitianMatrix,
    max_sweeps: usize,
    stop_tol: f64,
) -> Result<FeasibilityOutcome> {
    if !(t >= 0.0) {
        return Err(invalid(format!("rate level must be nonnegative, got {t}")));
    }
    let n = inst.dim();
    if start.dim() != n {
        return Err(invalid(format!(
            "start point is {}-dimensional, expected {n}",
            start.dim()
        )));
    }
    // On diag(Θ̄) = 1, tr(Θ̄M) ≥ γ is tr(Θ̄M̃) ≥ γ − tr(M) with M̃ = M − Diag(M).
    // The half-spaces use M̃: same intersection, but their projections leave
    // the diagonal alone instead of fighting the diagonal constraint.
    let off_diagonal = |m: &HermitianMatrix, gamma: f64| {
        let mut mt = m.as_matrix().clone();
        for i in 0..n {
            mt[(i, i)] = crate::numerics::ZERO;
        }
        (mt, gamma - m.trace())
    };
    let halfspaces = [
        off_diagonal(inst.m_s(), rate_threshold(t, inst.p_s_w(), inst.sigma2_r_w())),
        off_diagonal(inst.m_d(), rate_threshold(t, inst.p_d_w(), inst.sigma2_r_w())),
    ];
    let mut x = start.clone().into_matrix();
    let mut corrections = vec![CMatrix::zeros(n, n); 4];
    let mut residual = inst.cheap_residual(start, t);
    let mut sweeps = 0;
    if residual <= stop_tol {
        return finish(inst, t, HermitianMatrix::symmetrize(x), 0);
    }

    while sweeps < max_sweeps {
        sweeps += 1;
        // diag = 1
        let y = x.add(&corrections[0]);
        let mut p = y.clone();
        for i in 0..n {
            p[(i, i)] = crate::numerics::ONE;
        }
        corrections[0] = y.sub(&p);
        x = p;
        // tr(Θ̄M) ≥ γ
        for (k, (m, gamma)) in halfspaces.iter().enumerate() {
            let y = x.add(&corrections[k + 1]);
            let m_norm_sq = m.frobenius_norm().powi(2);
            let mut p = y.clone();
            if gamma.is_finite() && m_norm_sq > 0.0 {
                let tr: f64 = y
                    .as_slice()
                    .iter()
                    .zip(m.as_slice())
                    .map(|(a, b)| (a * b.conj()).re)
                    .sum();
                let shortfall = gamma - tr;
                if shortfall > 0.0 {
                    p.axpy(shortfall / m_norm_sq, m);
                }
            }
            corrections[k + 1] = y.sub(&p);
            x = p;
        }
        // PSD cone
        let y = x.add(&corrections[3]);
        let p = psd_project(&HermitianMatrix::symmetrize(y.clone()))?.into_matrix();
        corrections[3] = y.sub(&p);
        x = p;
        if !x.is_finite() {
            return Err(Error::Numerical("Dykstra iterate became non-finite".into()));
        }
        residual = inst.cheap_residual(&HermitianMatrix::symmetrize(x.clone()), t);
        if residual <= stop_tol {
            break;
        }
    }
    log::trace!("dykstra at t = {t:.6}: residual {residual:.3e} after {sweeps} sweeps");
    finish(inst, t, HermitianMatrix::symmetrize(x), sweeps)
}

fn finish(inst: &MaxMinSdpInstance, t: f64, theta_bar: HermitianMatrix, sweeps: usize) -> Result<FeasibilityOutcome> {
    Ok(FeasibilityOutcome {
        residual: inst.residual(&theta_bar, t)?,
        theta_bar,
        sweeps,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BisectionOptions {
    /// Residual threshold for classifying a level as feasible.
    pub feasibility_tol: f64,
    /// Stop once the bracket is narrower than this (bits/s/Hz).
    pub width: f64,
    pub max_sweeps: usize,
}

impl Default for BisectionOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: FEASIBILITY_TOL,
            width: 1e-4,
            max_sweeps: DEFAULT_MAX_SWEEPS,
        }
    }
}

/// Bisection on `t ∈ [0, t_ub]`; each level is classified by
/// [`feasibility_project_from`], warm-started from the last feasible iterate.
///
/// `t_star` is the lower bracket end and `t_upper` the upper one.
pub fn solve_maxmin_sdp_bisection(inst: &MaxMinSdpInstance, opts: &BisectionOptions) -> Result<SdpSolution> {
    if !(opts.width > 0.0) || !(opts.feasibility_tol > 0.0) {
        return Err(invalid("bisection width and tolerance must be positive"));
    }
    let start = HermitianMatrix::identity(inst.dim());
    let base = feasibility_project_from(inst, 0.0, &start, opts.max_sweeps, opts.feasibility_tol)?;
    if base.residual > opts.feasibility_tol {
        return Err(Error::Internal(format!(
            "t = 0 classified infeasible (residual {:.3e})",
            base.residual
        )));
    }
    let (mut lo, mut hi) = (0.0, inst.rate_upper_bound()?);
    let mut best = base;
    let mut iterations = 0;
    while hi - lo >= opts.width {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let out = feasibility_project_from(inst, mid, &best.theta_bar, opts.max_sweeps, opts.feasibility_tol)?;
        if out.residual <= opts.feasibility_tol {
            lo = mid;
            best = out;
        } else {
            hi = mid;
        }
    }
    Ok(SdpSolution {
        theta_bar: best.theta_bar,
        t_star: lo,
        t_upper: hi,
        feasibility_residual: best.residual,
        iterations,
        route: SdpRoute::Bisection,
    })
}
