//! Sum-rate maximization by generalized power iteration.
//!
//! With `θ̄ = [θ; 1]` and `‖θ̄‖² = N+1`, the slot-1 sum rate satisfies
//! `2^{R_SIR + R_DIR} = (θ̄ᴴA_Sθ̄)(θ̄ᴴA_Dθ̄)`. The iteration maximizes this
//! product on the sphere `‖θ̄‖² = N+1` and then projects onto unit modulus.

use crate::channel::ChannelSet;
use crate::error::{invalid, Error, Result};
use crate::numerics::{dot, norm, norm_sqr, CVector, HermitianMatrix, C64, ONE};

use super::{build_augmented_channels, extract_or_fallback, Method, OptResult};

/// Halvings tried before giving up on a non-improving step.
const SAFEGUARD_HALVINGS: usize = 10;
/// Relative slack below which a step counts as non-decreasing.
const MONOTONE_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct GpiConfig {
    /// Stop once `‖θ̄_k − θ̄_{k−1}‖ < kappa`.
    pub kappa: f64,
    pub max_iter: usize,
}

impl Default for GpiConfig {
    fn default() -> Self {
        Self {
            kappa: 1e-6,
            max_iter: 100,
        }
    }
}

impl GpiConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0) {
            return Err(invalid(format!("gpi kappa must be positive, got {}", self.kappa)));
        }
        if self.max_iter == 0 {
            return Err(invalid("gpi max_iter must be at least 1"));
        }
        Ok(())
    }
}

/// `A_X = I/(N+1) + P_X·H̄_XIRᴴH̄_XIR/σ_R²` for `X ∈ {S, D}`.
pub fn build_gpi_matrices(chans: &ChannelSet) -> (HermitianMatrix, HermitianMatrix) {
    let aug = build_augmented_channels(chans);
    let b = &chans.budget;
    let n1 = chans.n_elements() + 1;
    let ident = HermitianMatrix::identity(n1).scale(1.0 / n1 as f64);
    let mut a_s = ident.clone();
    a_s.axpy(b.p_s_w / b.sigma2_r_w, &HermitianMatrix::gram(&aug.hbar_sir));
    let mut a_d = ident;
    a_d.axpy(b.p_d_w / b.sigma2_r_w, &HermitianMatrix::gram(&aug.hbar_dir));
    (a_s, a_d)
}

/// `(θ̄ᴴA_Sθ̄)·(θ̄ᴴA_Dθ̄)`.
pub fn gpi_objective(a_s: &HermitianMatrix, a_d: &HermitianMatrix, theta_bar: &[C64]) -> f64 {
    a_s.quad_form(theta_bar) * a_d.quad_form(theta_bar)
}

fn rescale(v: &mut [C64], radius_sq: f64) {
    let nv = norm(v);
    let s = radius_sq.sqrt() / nv;
    for z in v {
        *z *= s;
    }
}

/// One power step `y = B(θ̄)†·A(θ̄)·θ̄`, rescaled to `‖y‖² = dim`.
///
/// `A(θ̄) = (θ̄ᴴA_Sθ̄)A_D + (θ̄ᴴA_Dθ̄)A_S` and `B(θ̄) = 2‖θ̄‖²I`, whose
/// pseudo-inverse is `I/(2‖θ̄‖²)`.
pub fn gpi_step(a_s: &HermitianMatrix, a_d: &HermitianMatrix, theta_bar: &[C64]) -> Result<CVector> {
    let as_t = a_s.matvec(theta_bar);
    let ad_t = a_d.matvec(theta_bar);
    step_from_images(theta_bar, &as_t, &ad_t)
}

fn step_from_images(theta_bar: &[C64], as_t: &[C64], ad_t: &[C64]) -> Result<CVector> {
    let nsq = norm_sqr(theta_bar);
    if !(nsq > 0.0) {
        return Err(invalid("GPI step needs a nonzero vector"));
    }
    let a = dot(theta_bar, as_t).re;
    let b = dot(theta_bar, ad_t).re;
    let inv_b = 1.0 / (2.0 * nsq);
    let mut y: CVector = ad_t.iter().zip(as_t).map(|(d, s)| (d * a + s * b) * inv_b).collect();
    if !(norm_sqr(&y) > 0.0) || y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("GPI step produced a zero or non-finite vector".into()));
    }
    rescale(&mut y, theta_bar.len() as f64);
    Ok(y)
}

/// GPI run with its iterates kept.
#[derive(Clone, Debug)]
pub struct GpiTrace {
    pub result: OptResult,
    /// `θ̄_0, θ̄_1, …`, one entry per value of `objective_trace`.
    pub iterates: Vec<CVector>,
}

/// Max-SR-GPI from `θ̄₀ = 1`.
///
/// `objective_trace[0]` is the product objective at the start point and
/// `objective_trace[k]` the value after accepted step `k`. A step that would
/// decrease the objective is pulled halfway back toward the previous iterate
/// up to ten times; if that never helps the iteration stops.
pub fn max_sr_gpi(chans: &ChannelSet, cfg: &GpiConfig) -> Result<OptResult> {
    Ok(run(chans, cfg, false)?.result)
}

pub fn max_sr_gpi_traced(chans: &ChannelSet, cfg: &GpiConfig) -> Result<GpiTrace> {
    run(chans, cfg, true)
}

fn run(chans: &ChannelSet, cfg: &GpiConfig, keep: bool) -> Result<GpiTrace> {
    cfg.validate()?;
    let (a_s, a_d) = build_gpi_matrices(chans);
    let dim = chans.n_elements() + 1;
    let radius_sq = dim as f64;

    let mut theta = vec![ONE; dim];
    let mut as_t = a_s.matvec(&theta);
    let mut ad_t = a_d.matvec(&theta);
    let mut f = dot(&theta, &as_t).re * dot(&theta, &ad_t).re;
    let mut trace = vec![f];
    let mut iterates = if keep { vec![theta.clone()] } else { Vec::new() };
    let mut converged = false;

    for _ in 0..cfg.max_iter {
        let mut y = step_from_images(&theta, &as_t, &ad_t)?;
        let step_len = dist(&y, &theta);
        let mut as_y = a_s.matvec(&y);
        let mut ad_y = a_d.matvec(&y);
        let mut f_y = dot(&y, &as_y).re * dot(&y, &ad_y).re;

        if f_y < f * (1.0 - MONOTONE_SLACK) {
            let mut accepted = false;
            for _ in 0..SAFEGUARD_HALVINGS {
                y = theta.iter().zip(&y).map(|(t, c)| t + (c - t) * 0.5).collect();
                rescale(&mut y, radius_sq);
                as_y = a_s.matvec(&y);
                ad_y = a_d.matvec(&y);
                f_y = dot(&y, &as_y).re * dot(&y, &ad_y).re;
                if f_y >= f * (1.0 - MONOTONE_SLACK) {
                    accepted = true;
                    break;
                }
            }
            if !accepted {
                converged = step_len < cfg.kappa;
                break;
            }
        }

        let diff = dist(&y, &theta);
        theta = y;
        as_t = as_y;
        ad_t = ad_y;
        f = f_y;
        trace.push(f);
        if keep {
            iterates.push(theta.clone());
        }
        if diff < cfg.kappa {
            converged = true;
            break;
        }
    }

    let result = OptResult {
        theta: extract_or_fallback(&theta)?,
        iterations: trace.len() - 1,
        objective_trace: trace,
        method: Method::Gpi,
        converged,
        relaxation_bound: None,
    };
    Ok(GpiTrace { result, iterates })
}

fn dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}
