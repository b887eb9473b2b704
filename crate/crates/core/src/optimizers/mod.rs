//! IRS phase optimizers and baselines.
//!
//! All optimizers work on the first slot. The second slot reuses them through
//! [`optimize_second_slot`], which maps the downlink onto a first-slot-shaped
//! surrogate problem.

mod evd;
mod gpi;
mod maxmin;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSet, LinkBudget};
use crate::error::{invalid, Error, Result};
use crate::numerics::{norm_inf, phase, CMatrix, CVector, C64};
use crate::rate::PhaseVector;

pub use evd::{build_receive_power_matrix, max_rps_evd, max_rps_evd_from_matrix};
pub use gpi::{build_gpi_matrices, gpi_objective, gpi_step, max_sr_gpi, max_sr_gpi_traced, GpiConfig, GpiTrace};
pub use maxmin::{max_min_r, DEFAULT_SDP_DRAWS};

/// Phase-selection strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Maximize the reflected receive-power sum via the principal eigenvector.
    Evd,
    /// Maximize the minimum slot-1 rate via semidefinite relaxation.
    #[serde(rename = "maxmin")]
    MaxMin,
    /// Maximize the slot-1 sum rate via generalized power iteration.
    Gpi,
    /// Uniformly random phases.
    Random,
    /// No IRS at all; the relay sees only the direct links.
    OnlyRs,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Gpi, Method::MaxMin, Method::Evd, Method::Random, Method::OnlyRs];

    pub fn label(self) -> &'static str {
        match self {
            Method::Evd => "evd",
            Method::MaxMin => "maxmin",
            Method::Gpi => "gpi",
            Method::Random => "random",
            Method::OnlyRs => "only_rs",
        }
    }

    /// Stable index used to derive per-method random streams.
    pub fn stream_id(self) -> u64 {
        match self {
            Method::Evd => 1,
            Method::MaxMin => 2,
            Method::Gpi => 3,
            Method::Random => 4,
            Method::OnlyRs => 5,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.label() == s).ok_or_else(|| {
            invalid(format!(
                "unknown method '{s}' (expected evd, maxmin, gpi, random or only_rs)"
            ))
        })
    }
}

/// Outcome of one optimizer run.
#[derive(Clone, Debug)]
pub struct OptResult {
    pub theta: PhaseVector,
    /// Method-specific objective values; one per iteration for GPI.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub method: Method,
    /// False when an iterative method stopped before meeting its tolerance.
    pub converged: bool,
    /// Upper bound from a relaxation, when the method computes one (bits/s/Hz
    /// for Max-Min-R).
    pub relaxation_bound: Option<f64>,
}

/// Knobs shared by every optimizer call in a simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerSettings {
    pub gpi: GpiConfig,
    pub sdp_draws: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            gpi: GpiConfig::default(),
            sdp_draws: DEFAULT_SDP_DRAWS,
        }
    }
}

/// Channels stacked so that `h_SIR = H̄_SIR·[θ; 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedChannels {
    /// `[H_IR·diag(h_SI), h_SR]`, `M × (N+1)`.
    pub hbar_sir: CMatrix,
    /// `[H_IR·diag(h_DI), h_DR]`, `M × (N+1)`.
    pub hbar_dir: CMatrix,
}

fn augment(h_ir: &CMatrix, h_ui: &[C64], h_direct: &[C64]) -> CMatrix {
    let (m, n) = (h_ir.rows(), h_ir.cols());
    CMatrix::from_fn(
        m,
        n + 1,
        |i, j| if j < n { h_ir[(i, j)] * h_ui[j] } else { h_direct[i] },
    )
}

pub fn build_augmented_channels(chans: &ChannelSet) -> AugmentedChannels {
    AugmentedChannels {
        hbar_sir: augment(&chans.h_ir, &chans.h_si, &chans.h_sr),
        hbar_dir: augment(&chans.h_ir, &chans.h_di, &chans.h_dr),
    }
}

/// `[θ; 1]`.
pub fn augment_phases(theta: &PhaseVector) -> CVector {
    let mut v = theta.coeffs().to_vec();
    v.push(C64::new(1.0, 0.0));
    v
}

/// Unit-modulus phases relative to the last (reference) component:
/// `θᵢ = e^{j(arg θ̄ᵢ − arg θ̄_{N+1})}`.
pub fn extract_unit_modulus(theta_bar: &[C64]) -> Result<PhaseVector> {
    if theta_bar.len() < 2 {
        return Err(invalid("augmented vector needs at least two components"));
    }
    let (head, last) = theta_bar.split_at(theta_bar.len() - 1);
    let reference = last[0];
    if !(reference.norm() > 1e-12 * norm_inf(theta_bar)) {
        return Err(Error::DegenerateExtraction);
    }
    let ref_phase = reference.arg();
    PhaseVector::new(
        head.iter()
            .map(|&z| C64::from_polar(1.0, phase(z) - ref_phase))
            .collect(),
    )
}

/// [`extract_unit_modulus`], falling back to `arg θ̄_{N+1} := 0` when the
/// reference component vanishes.
pub fn extract_or_fallback(theta_bar: &[C64]) -> Result<PhaseVector> {
    match extract_unit_modulus(theta_bar) {
        Err(Error::DegenerateExtraction) => PhaseVector::from_phases_of(&theta_bar[..theta_bar.len() - 1]),
        other => other,
    }
}

/// I.i.d. uniform phases on `[0, 2π)`.
pub fn random_phase<R: Rng + ?Sized>(n: usize, rng: &mut R) -> PhaseVector {
    assert!(n >= 1, "random_phase needs n >= 1");
    let angles: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    PhaseVector::from_angles(&angles).expect("polar form is unit modulus")
}

/// Runs `method` on the slot-1 problem of `chans`.
pub fn optimize_first_slot<R: Rng + ?Sized>(
    chans: &ChannelSet,
    method: Method,
    settings: &OptimizerSettings,
    rng: &mut R,
) -> Result<OptResult> {
    let n = chans.n_elements();
    match method {
        Method::Evd => max_rps_evd(chans),
        Method::MaxMin => max_min_r(chans, settings.sdp_draws, rng),
        Method::Gpi => max_sr_gpi(chans, &settings.gpi),
        Method::Random | Method::OnlyRs => Ok(OptResult {
            theta: if method == Method::Random {
                random_phase(n, rng)
            } else {
                PhaseVector::ones(n)
            },
            objective_trace: Vec::new(),
            iterations: 0,
            method,
            converged: true,
            relaxation_bound: None,
        }),
    }
}

/// Slot-1-shaped surrogate of the downlink.
///
/// With `φ = −ψ` the downlink channels read `h_X + H_IR·diag(e^{jφ})·h_XI`.
/// Powers become `P_R/σ_S²` and `P_R/σ_D²` over unit noise so the surrogate
/// "S" and "D" rates equal `R_RIS` and `R_RID`.
pub fn second_slot_surrogate(chans: &ChannelSet) -> ChannelSet {
    let b = &chans.budget;
    let budget = LinkBudget {
        p_s_w: b.p_r_w / b.sigma2_s_w,
        p_d_w: b.p_r_w / b.sigma2_d_w,
        sigma2_r_w: 1.0,
        ..b.clone()
    };
    ChannelSet {
        budget,
        ..chans.clone()
    }
}

/// Chooses the slot-2 reflection `ψ` by running a slot-1 optimizer on the
/// downlink surrogate and negating the resulting phases.
pub fn optimize_second_slot<R: Rng + ?Sized>(
    chans: &ChannelSet,
    method: Method,
    settings: &OptimizerSettings,
    rng: &mut R,
) -> Result<PhaseVector> {
    let surrogate = second_slot_surrogate(chans);
    let phi = optimize_first_slot(&surrogate, method, settings, rng)?.theta;
    Ok(phi.conj())
}
