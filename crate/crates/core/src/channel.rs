//! Geometry, log-distance path loss and Rayleigh-fading channel draws.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{standard_complex_normal, CMatrix, CVector, ZERO};

/// Cartesian position in meters.
pub type Position = [f64; 3];

/// Offset keeping sweep distances away from the segment endpoints.
pub const D_EPS: f64 = 0.5;

pub fn distance(a: &Position, b: &Position) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Node placement and array sizes.
#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    pub pos_s: Position,
    pub pos_d: Position,
    pub pos_irs: Position,
    pub pos_rs: Position,
    /// IRS elements `N`.
    pub n_elements: usize,
    /// Relay antennas `M`.
    pub m_antennas: usize,
}

impl Geometry {
    /// Default layout: S at the origin, D at 100 m on the x-axis, the IRS and
    /// the relay at horizontal offset `d` above and below the S-D line.
    pub fn with_offset(d: f64, n_elements: usize, m_antennas: usize) -> Self {
        Self {
            pos_s: [0.0, 0.0, 0.0],
            pos_d: [100.0, 0.0, 0.0],
            pos_irs: [d, 10.0, 30.0],
            pos_rs: [d, -10.0, 10.0],
            n_elements,
            m_antennas,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_elements == 0 || self.m_antennas == 0 {
            return Err(Error::Geometry(format!(
                "need N >= 1 and M >= 1, got N={} M={}",
                self.n_elements, self.m_antennas
            )));
        }
        let named = [
            ("S", &self.pos_s),
            ("D", &self.pos_d),
            ("IRS", &self.pos_irs),
            ("RS", &self.pos_rs),
        ];
        for (i, (na, a)) in named.iter().enumerate() {
            if a.iter().any(|x| !x.is_finite()) {
                return Err(Error::Geometry(format!("position of {na} is not finite")));
            }
            for (nb, b) in &named[i + 1..] {
                if distance(a, b) <= 0.0 {
                    return Err(Error::Geometry(format!("{na} and {nb} coincide")));
                }
            }
        }
        Ok(())
    }
}

/// Path-loss, transmit-power and noise parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkBudget {
    pub pl0_db: f64,
    pub d0_m: f64,
    pub alpha_sr: f64,
    pub alpha_dr: f64,
    pub alpha_si: f64,
    pub alpha_di: f64,
    pub alpha_ir: f64,
    pub p_s_w: f64,
    pub p_d_w: f64,
    pub p_r_w: f64,
    pub sigma2_s_w: f64,
    pub sigma2_d_w: f64,
    pub sigma2_r_w: f64,
}

/// Noise floor used by default, in dBm.
pub const DEFAULT_NOISE_DBM: f64 = -84.0;

impl Default for LinkBudget {
    fn default() -> Self {
        let noise = dbm_to_watt(DEFAULT_NOISE_DBM);
        Self {
            pl0_db: -30.0,
            d0_m: 1.0,
            alpha_sr: 3.5,
            alpha_dr: 3.5,
            alpha_si: 2.5,
            alpha_di: 2.5,
            alpha_ir: 2.5,
            p_s_w: 1.0,
            p_d_w: 1.0,
            p_r_w: 1.0,
            sigma2_s_w: noise,
            sigma2_d_w: noise,
            sigma2_r_w: noise,
        }
    }
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d0_m", self.d0_m),
            ("alpha_sr", self.alpha_sr),
            ("alpha_dr", self.alpha_dr),
            ("alpha_si", self.alpha_si),
            ("alpha_di", self.alpha_di),
            ("alpha_ir", self.alpha_ir),
            ("p_s_w", self.p_s_w),
            ("p_d_w", self.p_d_w),
            ("p_r_w", self.p_r_w),
            ("sigma2_s_w", self.sigma2_s_w),
            ("sigma2_d_w", self.sigma2_d_w),
            ("sigma2_r_w", self.sigma2_r_w),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !self.pl0_db.is_finite() {
            return Err(Error::InvalidInput("pl0_db must be finite".into()));
        }
        Ok(())
    }
}

/// Log-distance path loss `PL₀ − 10α·log₁₀(d/d₀)` in dB (a gain, so negative).
pub fn path_loss_db(d_m: f64, alpha: f64, budget: &LinkBudget) -> Result<f64> {
    if !(d_m > 0.0) || !d_m.is_finite() {
        return Err(Error::Geometry(format!("distance must be positive, got {d_m}")));
    }
    Ok(budget.pl0_db - 10.0 * alpha * (d_m / budget.d0_m).log10())
}

pub fn dbm_to_watt(x_dbm: f64) -> f64 {
    10f64.powf((x_dbm - 30.0) / 10.0)
}

pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

/// Linear per-entry channel power between two positions.
pub fn link_gain_linear(a: &Position, b: &Position, alpha: f64, budget: &LinkBudget) -> Result<f64> {
    let d = distance(a, b);
    if d <= 0.0 {
        return Err(Error::Geometry(format!("coincident positions {a:?}")));
    }
    Ok(db_to_linear(path_loss_db(d, alpha, budget)?))
}

/// One realization of every first-slot channel.
///
/// Second-slot channels are not stored: by reciprocity they are the conjugate
/// transposes of these.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    /// S → RS, length `M`.
    pub h_sr: CVector,
    /// D → RS, length `M`.
    pub h_dr: CVector,
    /// S → IRS, length `N`.
    pub h_si: CVector,
    /// D → IRS, length `N`.
    pub h_di: CVector,
    /// IRS → RS, `M × N`.
    pub h_ir: CMatrix,
    pub budget: LinkBudget,
}

impl ChannelSet {
    /// Builds a channel set, checking that all dimensions agree.
    pub fn new(
        h_sr: CVector,
        h_dr: CVector,
        h_si: CVector,
        h_di: CVector,
        h_ir: CMatrix,
        budget: LinkBudget,
    ) -> Result<Self> {
        let (m, n) = (h_ir.rows(), h_ir.cols());
        if h_sr.len() != m || h_dr.len() != m {
            return Err(Error::Shape(format!(
                "direct channels must have length M={m}, got {} and {}",
                h_sr.len(),
                h_dr.len()
            )));
        }
        if h_si.len() != n || h_di.len() != n {
            return Err(Error::Shape(format!(
                "IRS channels must have length N={n}, got {} and {}",
                h_si.len(),
                h_di.len()
            )));
        }
        if n == 0 || m == 0 {
            return Err(Error::Shape("need N >= 1 and M >= 1".into()));
        }
        Ok(Self {
            h_sr,
            h_dr,
            h_si,
            h_di,
            h_ir,
            budget,
        })
    }

    pub fn n_elements(&self) -> usize {
        self.h_ir.cols()
    }

    pub fn m_antennas(&self) -> usize {
        self.h_ir.rows()
    }

    /// The same realization with the roles of S and D exchanged.
    pub fn swapped(&self) -> Self {
        let mut budget = self.budget.clone();
        std::mem::swap(&mut budget.p_s_w, &mut budget.p_d_w);
        std::mem::swap(&mut budget.sigma2_s_w, &mut budget.sigma2_d_w);
        std::mem::swap(&mut budget.alpha_sr, &mut budget.alpha_dr);
        std::mem::swap(&mut budget.alpha_si, &mut budget.alpha_di);
        Self {
            h_sr: self.h_dr.clone(),
            h_dr: self.h_sr.clone(),
            h_si: self.h_di.clone(),
            h_di: self.h_si.clone(),
            h_ir: self.h_ir.clone(),
            budget,
        }
    }

    /// The same realization with the reflected path removed.
    pub fn without_irs(&self) -> Self {
        let mut out = self.clone();
        out.h_ir = CMatrix::zeros(self.m_antennas(), self.n_elements());
        out
    }
}

fn draw_vector<R: Rng + ?Sized>(len: usize, amplitude: f64, rng: &mut R) -> CVector {
    (0..len).map(|_| standard_complex_normal(rng) * amplitude).collect()
}

/// Draws an i.i.d. Rayleigh realization scaled by each link's path loss.
///
/// Entries are consumed from `rng` in the fixed order `h_SR`, `h_DR`, `h_SI`,
/// `h_DI`, then `H_IR` column by column, one complex draw per entry.
pub fn generate_channel_set<R: Rng + ?Sized>(geom: &Geometry, budget: &LinkBudget, rng: &mut R) -> Result<ChannelSet> {
    geom.validate()?;
    let (m, n) = (geom.m_antennas, geom.n_elements);
    let amp = |a: &Position, b: &Position, alpha: f64| link_gain_linear(a, b, alpha, budget).map(f64::sqrt);
    let a_sr = amp(&geom.pos_s, &geom.pos_rs, budget.alpha_sr)?;
    let a_dr = amp(&geom.pos_d, &geom.pos_rs, budget.alpha_dr)?;
    let a_si = amp(&geom.pos_s, &geom.pos_irs, budget.alpha_si)?;
    let a_di = amp(&geom.pos_d, &geom.pos_irs, budget.alpha_di)?;
    let a_ir = amp(&geom.pos_irs, &geom.pos_rs, budget.alpha_ir)?;

    let h_sr = draw_vector(m, a_sr, rng);
    let h_dr = draw_vector(m, a_dr, rng);
    let h_si = draw_vector(n, a_si, rng);
    let h_di = draw_vector(n, a_di, rng);
    let mut h_ir = CMatrix::zeros(m, n);
    for j in 0..n {
        for i in 0..m {
            h_ir[(i, j)] = standard_complex_normal(rng) * a_ir;
        }
    }
    ChannelSet::new(h_sr, h_dr, h_si, h_di, h_ir, budget.clone())
}

/// A channel set with every entry zero, used for degenerate-case checks.
pub fn zero_channel_set(n: usize, m: usize, budget: LinkBudget) -> ChannelSet {
    ChannelSet {
        h_sr: vec![ZERO; m],
        h_dr: vec![ZERO; m],
        h_si: vec![ZERO; n],
        h_di: vec![ZERO; n],
        h_ir: CMatrix::zeros(m, n),
        budget,
    }
}
