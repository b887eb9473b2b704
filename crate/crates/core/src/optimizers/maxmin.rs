use rand::Rng;

use crate::channel::ChannelSet;
use crate::error::{invalid, Result};
use crate::rate::{first_slot_rates, PhaseVector};
use crate::sdp::{gaussian_randomization, solve_maxmin_sdp, MaxMinSdpInstance};

use super::{build_augmented_channels, extract_or_fallback, Method, OptResult};

pub const DEFAULT_SDP_DRAWS: usize = 1000;

/// Max-Min-R: semidefinite relaxation of `max min(R_SIR, R_DIR)`, then
/// Gaussian randomization and phase extraction.
///
/// `relaxation_bound` carries the relaxed optimum `t*`; the achieved min-rate
/// in `objective_trace[0]` never exceeds it.
pub fn max_min_r<R: Rng + ?Sized>(chans: &ChannelSet, draws: usize, rng: &mut R) -> Result<OptResult> {
    if draws == 0 {
        return Err(invalid("Max-Min-R needs at least one randomization draw"));
    }
    let n = chans.n_elements();
    let aug = build_augmented_channels(chans);
    let inst = MaxMinSdpInstance::from_augmented(&aug, &chans.budget)?;

    let reflected_zero = [&aug.hbar_sir, &aug.hbar_dir]
        .iter()
        .all(|h| (0..h.rows()).all(|i| h.row(i)[..n].iter().all(|z| z.norm_sqr() == 0.0)));
    let (theta, bound, iterations) = if reflected_zero {
        // every θ gives the same rates
        let theta = PhaseVector::ones(n);
        let (a, b) = first_slot_rates(chans, &theta)?;
        (theta, a.min(b), 0)
    } else {
        let sol = solve_maxmin_sdp(&inst)?;
        let best = gaussian_randomization(&sol.theta_bar, &inst, draws, rng)?;
        (extract_or_fallback(&best)?, sol.t_star, sol.iterations)
    };
    let (r_s, r_d) = first_slot_rates(chans, &theta)?;
    Ok(OptResult {
        theta,
        objective_trace: vec![r_s.min(r_d)],
        iterations,
        method: Method::MaxMin,
        converged: true,
        relaxation_bound: Some(bound),
    })
}
