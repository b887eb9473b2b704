//! Effective channels and achievable rates of the two-way relay link.
//!
//! Slot 1: S and D transmit simultaneously to the relay through the direct
//! links and the IRS reflection `Θ`. Slot 2: the relay broadcasts network-coded
//! symbols back through the reciprocal channels and the reflection `Ψ`. The
//! relay uses maximum-ratio transmission with unit total power in slot 2, so
//! each downlink rate depends only on the squared norm of its effective
//! channel.

use crate::channel::ChannelSet;
use crate::error::{invalid, shape, Error, Result};
use crate::numerics::{norm_sqr, unit_phase, CMatrix, CVector, C64, ONE};

/// Tolerance on `| |c| − 1 |` for reflection coefficients.
pub const UNIT_MODULUS_TOL: f64 = 1e-12;

/// Unit-modulus reflection coefficients, the diagonal of `Θ` or `Ψ`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseVector(CVector);

impl PhaseVector {
    pub fn new(coeffs: CVector) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(invalid("phase vector must be non-empty"));
        }
        if let Some((i, c)) = coeffs
            .iter()
            .enumerate()
            .find(|(_, c)| !((c.norm() - 1.0).abs() <= UNIT_MODULUS_TOL))
        {
            return Err(invalid(format!("coefficient {i} has modulus {} (not unit)", c.norm())));
        }
        Ok(Self(coeffs))
    }

    pub fn from_angles(angles: &[f64]) -> Result<Self> {
        Self::new(angles.iter().map(|&a| C64::from_polar(1.0, a)).collect())
    }

    /// Projects arbitrary complex values onto the unit circle, `arg(0) := 0`.
    pub fn from_phases_of(values: &[C64]) -> Result<Self> {
        Self::new(values.iter().map(|&z| unit_phase(z)).collect())
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![ONE; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.0
    }

    pub fn angles(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.arg()).collect()
    }

    /// Element-wise conjugate, i.e. negated phases.
    pub fn conj(&self) -> Self {
        Self(self.0.iter().map(|c| c.conj()).collect())
    }

    /// Multiplies every coefficient by the common factor `e^{jφ}`.
    pub fn rotated(&self, phi: f64) -> Self {
        let r = C64::from_polar(1.0, phi);
        Self(self.0.iter().map(|c| c * r).collect())
    }

    pub fn into_inner(self) -> CVector {
        self.0
    }
}

/// The four link rates and derived figures for one realization, bits/s/Hz.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateReport {
    pub r_sir: f64,
    pub r_dir: f64,
    pub r_rid: f64,
    pub r_ris: f64,
    pub sum_first_slot: f64,
    pub min_first_slot: f64,
    pub system_rate: f64,
}

impl RateReport {
    pub fn from_link_rates(r_sir: f64, r_dir: f64, r_rid: f64, r_ris: f64) -> Self {
        Self {
            r_sir,
            r_dir,
            r_rid,
            r_ris,
            sum_first_slot: r_sir + r_dir,
            min_first_slot: r_sir.min(r_dir),
            system_rate: 0.5 * (r_sir.min(r_rid) + r_dir.min(r_ris)),
        }
    }
}

fn check_dims(h_direct: &[C64], h_ir: &CMatrix, h_ui: &[C64], phases: &PhaseVector) -> Result<()> {
    let (m, n) = (h_ir.rows(), h_ir.cols());
    if h_direct.len() != m {
        return Err(shape(format!(
            "direct channel has length {}, expected M={m}",
            h_direct.len()
        )));
    }
    if h_ui.len() != n || phases.len() != n {
        return Err(shape(format!(
            "IRS channel length {} and phase count {} must both equal N={n}",
            h_ui.len(),
            phases.len()
        )));
    }
    Ok(())
}

fn cascade(h_direct: &[C64], h_ir: &CMatrix, h_ui: &[C64], coeffs: impl Iterator<Item = C64>) -> CVector {
    let scaled: CVector = coeffs.zip(h_ui).map(|(c, h)| c * h).collect();
    let reflected = h_ir.matvec(&scaled);
    h_direct.iter().zip(&reflected).map(|(a, b)| a + b).collect()
}

/// Slot-1 effective channel `h_direct + H_IR·diag(θ)·h_ui`.
pub fn effective_channel(h_direct: &[C64], h_ir: &CMatrix, h_ui: &[C64], theta: &PhaseVector) -> Result<CVector> {
    check_dims(h_direct, h_ir, h_ui, theta)?;
    Ok(cascade(h_direct, h_ir, h_ui, theta.coeffs().iter().copied()))
}

/// Slot-2 effective channel in column form, `h_direct + H_IR·diag(conj ψ)·h_ui`.
///
/// The downlink row channel is `h_directᴴ + h_uiᴴ Ψ H_IRᴴ`; this returns its
/// conjugate transpose, whose squared norm is the same.
pub fn second_slot_channel(h_direct: &[C64], h_ir: &CMatrix, h_ui: &[C64], psi: &PhaseVector) -> Result<CVector> {
    check_dims(h_direct, h_ir, h_ui, psi)?;
    Ok(cascade(h_direct, h_ir, h_ui, psi.coeffs().iter().map(|c| c.conj())))
}

/// `log₂(1 + P·g/σ²)` for a channel power `g`.
pub fn rate_from_channel_power(power_w: f64, channel_power: f64, noise_w: f64) -> Result<f64> {
    if !(noise_w > 0.0) {
        return Err(invalid(format!("noise power must be positive, got {noise_w}")));
    }
    if !(power_w >= 0.0) || !channel_power.is_finite() {
        return Err(invalid(format!(
            "transmit power {power_w} and channel power {channel_power} must be finite and nonnegative"
        )));
    }
    Ok((power_w * channel_power / noise_w).ln_1p() / std::f64::consts::LN_2)
}

/// `log₂(1 + P‖h‖²/σ²)`.
pub fn link_rate(power_w: f64, h: &[C64], noise_w: f64) -> Result<f64> {
    rate_from_channel_power(power_w, norm_sqr(h), noise_w)
}

/// Slot-1 rates `(R_SIR, R_DIR)` for a given `Θ`.
pub fn first_slot_rates(chans: &ChannelSet, theta: &PhaseVector) -> Result<(f64, f64)> {
    let b = &chans.budget;
    let h_sir = effective_channel(&chans.h_sr, &chans.h_ir, &chans.h_si, theta)?;
    let h_dir = effective_channel(&chans.h_dr, &chans.h_ir, &chans.h_di, theta)?;
    Ok((
        link_rate(b.p_s_w, &h_sir, b.sigma2_r_w)?,
        link_rate(b.p_d_w, &h_dir, b.sigma2_r_w)?,
    ))
}

/// Slot-2 rates `(R_RIS, R_RID)` for a given `Ψ`.
pub fn second_slot_rates(chans: &ChannelSet, psi: &PhaseVector) -> Result<(f64, f64)> {
    let b = &chans.budget;
    let h_ris = second_slot_channel(&chans.h_sr, &chans.h_ir, &chans.h_si, psi)?;
    let h_rid = second_slot_channel(&chans.h_dr, &chans.h_ir, &chans.h_di, psi)?;
    Ok((
        link_rate(b.p_r_w, &h_ris, b.sigma2_s_w)?,
        link_rate(b.p_r_w, &h_rid, b.sigma2_d_w)?,
    ))
}

/// All rates for slot-1 reflection `theta` and slot-2 reflection `psi`.
pub fn full_report(chans: &ChannelSet, theta: &PhaseVector, psi: &PhaseVector) -> Result<RateReport> {
    let (r_sir, r_dir) = first_slot_rates(chans, theta)?;
    let (r_ris, r_rid) = second_slot_rates(chans, psi)?;
    let report = RateReport::from_link_rates(r_sir, r_dir, r_rid, r_ris);
    if [r_sir, r_dir, r_rid, r_ris].iter().any(|r| !r.is_finite()) {
        return Err(Error::Numerical("non-finite rate".into()));
    }
    Ok(report)
}

/// Rates with the IRS absent: every effective channel is the direct channel.
pub fn direct_only_report(chans: &ChannelSet) -> Result<RateReport> {
    let n = chans.n_elements();
    full_report(&chans.without_irs(), &PhaseVector::ones(n), &PhaseVector::ones(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{zero_channel_set, LinkBudget};
    use crate::numerics::ZERO;
    use std::f64::consts::FRAC_PI_2;

    const J: C64 = C64::new(0.0, 1.0);

    #[test]
    fn no_reflection_returns_direct() {
        let h = vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.0)];
        let h_ir = CMatrix::zeros(2, 3);
        let out = effective_channel(&h, &h_ir, &[ONE; 3], &PhaseVector::ones(3)).unwrap();
        assert_eq!(out, h);
        let out = second_slot_channel(
            &h,
            &h_ir,
            &[ONE; 3],
            &PhaseVector::from_angles(&[1.0, 2.0, 3.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(out, h);
    }

    #[test]
    fn phases_cancel() {
        let h_ir = CMatrix::from_real_rows(&[&[2.0]]).unwrap();
        let theta = PhaseVector::from_angles(&[-FRAC_PI_2]).unwrap();
        let out = effective_channel(&[ONE], &h_ir, &[J], &theta).unwrap();
        assert!((out[0] - C64::new(3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn destructive_sum() {
        let h_ir = CMatrix::from_real_rows(&[&[1.0, 1.0]]).unwrap();
        let out = effective_channel(&[ZERO], &h_ir, &[ONE, -ONE], &PhaseVector::ones(2)).unwrap();
        assert_eq!(out, vec![ZERO]);
    }

    #[test]
    fn shape_errors() {
        let h_ir = CMatrix::zeros(2, 3);
        assert!(matches!(
            effective_channel(&[ONE], &h_ir, &[ONE; 3], &PhaseVector::ones(3)),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            second_slot_channel(&[ONE; 2], &h_ir, &[ONE; 3], &PhaseVector::ones(2)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn link_rate_examples() {
        assert_eq!(link_rate(1.0, &[ONE], 1.0).unwrap(), 1.0);
        assert_eq!(link_rate(1.0, &[ZERO, ZERO], 1.0).unwrap(), 0.0);
        // log₂(1 + 1e-10/3.981e-12), 40-digit reference 4.707045253346...
        let h = [C64::new(1e-5, 0.0)];
        let r = link_rate(1.0, &h, 3.981e-12).unwrap();
        assert!((r - 4.707_045_253_346_54).abs() < 1e-3);
        assert!(link_rate(1.0, &[ONE], 0.0).is_err());
        assert!(link_rate(1.0, &[ONE], -1.0).is_err());
    }

    #[test]
    fn second_slot_is_conjugated_first_slot() {
        let h_ir = CMatrix::from_fn(2, 3, |i, j| C64::new(i as f64 + 0.5, j as f64 - 1.0));
        let h_ui = vec![C64::new(0.3, -0.2), C64::new(1.0, 0.1), C64::new(-0.7, 0.4)];
        let h_d = vec![C64::new(0.1, 0.2), C64::new(-0.3, 0.0)];
        let psi = PhaseVector::from_angles(&[0.3, -1.2, 2.5]).unwrap();
        let a = second_slot_channel(&h_d, &h_ir, &h_ui, &psi).unwrap();
        let b = effective_channel(&h_d, &h_ir, &h_ui, &psi.conj()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() <= 1e-14);
        }
        let ones = PhaseVector::ones(3);
        assert_eq!(
            second_slot_channel(&h_d, &h_ir, &h_ui, &ones).unwrap(),
            effective_channel(&h_d, &h_ir, &h_ui, &ones).unwrap()
        );
    }

    #[test]
    fn system_rate_from_link_rates() {
        let r = RateReport::from_link_rates(4.0, 2.0, 3.0, 5.0);
        assert_eq!(r.system_rate, 2.5);
        assert_eq!(r.sum_first_slot, 6.0);
        assert_eq!(r.min_first_slot, 2.0);
    }

    #[test]
    fn zero_channels_give_zero_rates() {
        let c = zero_channel_set(4, 2, LinkBudget::default());
        let r = full_report(&c, &PhaseVector::ones(4), &PhaseVector::ones(4)).unwrap();
        assert_eq!(r, RateReport::from_link_rates(0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn phase_vector_rejects_non_unit() {
        assert!(PhaseVector::new(vec![C64::new(1.0, 1e-3)]).is_err());
        assert!(PhaseVector::new(vec![]).is_err());
        assert!(PhaseVector::new(vec![C64::new(f64::NAN, 0.0)]).is_err());
        let p = PhaseVector::from_phases_of(&[ZERO, C64::new(0.0, 2.0)]).unwrap();
        assert_eq!(p.coeffs()[0], ONE);
        assert!((p.coeffs()[1] - J).norm() < 1e-15);
    }
}
