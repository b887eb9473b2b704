use crate::channel::ChannelSet;
use crate::error::Result;
use crate::numerics::{principal_eigpair, CMatrix, HermitianMatrix};
use crate::rate::PhaseVector;

use super::{Method, OptResult};

/// `P_S·diag(h_SI)ᴴ H_IRᴴ H_IR diag(h_SI) + P_D·diag(h_DI)ᴴ H_IRᴴ H_IR diag(h_DI)`.
///
/// `θᴴHθ` is the reflected receive power summed over both users.
pub fn build_receive_power_matrix(chans: &ChannelSet) -> HermitianMatrix {
    let (m, n) = (chans.m_antennas(), chans.n_elements());
    let b = &chans.budget;
    let g_s = CMatrix::from_fn(m, n, |i, j| chans.h_ir[(i, j)] * chans.h_si[j]);
    let g_d = CMatrix::from_fn(m, n, |i, j| chans.h_ir[(i, j)] * chans.h_di[j]);
    let mut h = HermitianMatrix::gram(&g_s).scale(b.p_s_w);
    h.axpy(b.p_d_w, &HermitianMatrix::gram(&g_d));
    h
}

/// Max-RPS-EVD: phases of the principal eigenvector of the receive-power matrix.
pub fn max_rps_evd(chans: &ChannelSet) -> Result<OptResult> {
    max_rps_evd_from_matrix(&build_receive_power_matrix(chans))
}

/// [`max_rps_evd`] for an explicit receive-power matrix.
pub fn max_rps_evd_from_matrix(h: &HermitianMatrix) -> Result<OptResult> {
    let (_, u) = principal_eigpair(h)?;
    let theta = PhaseVector::from_phases_of(&u)?;
    let power = h.quad_form(theta.coeffs());
    Ok(OptResult {
        theta,
        objective_trace: vec![power],
        iterations: 1,
        method: Method::Evd,
        converged: true,
        relaxation_bound: None,
    })
}
