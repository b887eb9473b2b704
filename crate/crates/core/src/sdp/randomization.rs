use rand::Rng;

use crate::error::{invalid, Result};
use crate::numerics::{principal_eigpair, unit_phase, CVector, ComplexGaussianSampler, HermitianMatrix};
use crate::optimizers::{augment_phases, extract_or_fallback};

use super::MaxMinSdpInstance;

fn score(inst: &MaxMinSdpInstance, candidate: &[crate::numerics::C64]) -> Result<f64> {
    let theta = extract_or_fallback(candidate)?;
    inst.min_rate(&augment_phases(&theta))
}

/// Best unit-modulus `θ̄` among the phase-projected principal eigenvector of
/// `theta_bar` and `draws` samples `e^{j·arg ξ}`, `ξ ~ CN(0, Θ̄)`.
///
/// Candidates are scored by `min(R_SIR, R_DIR)` after phase extraction. The
/// eigenvector goes first and ties keep the earlier candidate, so the result
/// for `k` draws is never worse than for fewer draws from the same stream.
pub fn gaussian_randomization<R: Rng + ?Sized>(
    theta_bar: &HermitianMatrix,
    inst: &MaxMinSdpInstance,
    draws: usize,
    rng: &mut R,
) -> Result<CVector> {
    if draws == 0 {
        return Err(invalid("gaussian randomization needs at least one draw"));
    }
    if theta_bar.dim() != inst.dim() {
        return Err(invalid(format!(
            "Θ̄ is {}-dimensional, instance is {}-dimensional",
            theta_bar.dim(),
            inst.dim()
        )));
    }
    let (_, u) = principal_eigpair(theta_bar)?;
    let mut best: CVector = u.iter().map(|&z| unit_phase(z)).collect();
    let mut best_score = score(inst, &best)?;

    let sampler = ComplexGaussianSampler::new(theta_bar)?;
    for _ in 0..draws {
        let cand: CVector = sampler.sample(rng).into_iter().map(unit_phase).collect();
        let s = score(inst, &cand)?;
        if s > best_score {
            best_score = s;
            best = cand;
        }
    }
    Ok(best)
}
