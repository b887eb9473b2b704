use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{LinkBudget, D_EPS};
use crate::error::{Error, Result};
use crate::optimizers::{GpiConfig, Method, OptimizerSettings, DEFAULT_SDP_DRAWS};

/// Which rate a sweep aggregates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMetric {
    /// `½(min(R_SIR, R_RID) + min(R_DIR, R_RIS))`.
    #[default]
    System,
    /// `R_SIR + R_DIR`.
    Slot1Sum,
    /// `min(R_SIR, R_DIR)`.
    Slot1Min,
}

impl RateMetric {
    pub fn label(self) -> &'static str {
        match self {
            RateMetric::System => "system",
            RateMetric::Slot1Sum => "slot1_sum",
            RateMetric::Slot1Min => "slot1_min",
        }
    }
}

impl fmt::Display for RateMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for RateMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "system" => Ok(RateMetric::System),
            "slot1_sum" => Ok(RateMetric::Slot1Sum),
            "slot1_min" => Ok(RateMetric::Slot1Min),
            other => Err(Error::Config(format!(
                "unknown metric \"{other}\" (expected system, slot1_sum or slot1_min)"
            ))),
        }
    }
}

pub const DEFAULT_SIZE_GRID: [usize; 9] = [8, 16, 32, 48, 64, 80, 96, 112, 128];
pub const DEFAULT_CONVERGENCE_GRID: [usize; 3] = [16, 128, 1024];

/// Flat experiment configuration; every key is optional in the TOML file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// `N` for the distance sweep.
    pub n_elements: usize,
    /// `N` grid for the size sweep and the convergence study. Unset means
    /// [`DEFAULT_SIZE_GRID`] or [`DEFAULT_CONVERGENCE_GRID`] respectively.
    pub element_counts: Option<Vec<usize>>,
    pub m_antennas: usize,
    pub d_min: f64,
    pub d_max: f64,
    pub d_step: f64,
    /// Horizontal offset used by the size sweep and the convergence study.
    pub d_fixed: f64,
    pub trials: usize,
    /// Unset means every method for sweeps and `[gpi]` for convergence.
    pub methods: Option<Vec<Method>>,
    pub rate_metric: RateMetric,
    /// Max-Min-R is skipped for larger `N`.
    pub maxmin_max_n: usize,
    pub sdp_draws: usize,
    pub gpi_kappa: f64,
    pub gpi_max_iter: usize,
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

impl Default for ExperimentConfig {
    fn default() -> Self {
        let b = LinkBudget::default();
        let g = GpiConfig::default();
        Self {
            seed: 1,
            n_elements: 80,
            element_counts: None,
            m_antennas: 2,
            d_min: 0.0,
            d_max: 100.0,
            d_step: 10.0,
            d_fixed: 50.0,
            trials: 500,
            methods: None,
            rate_metric: RateMetric::System,
            maxmin_max_n: 128,
            sdp_draws: DEFAULT_SDP_DRAWS,
            gpi_kappa: g.kappa,
            gpi_max_iter: g.max_iter,
            pl0_db: b.pl0_db,
            d0_m: b.d0_m,
            alpha_sr: b.alpha_sr,
            alpha_dr: b.alpha_dr,
            alpha_si: b.alpha_si,
            alpha_di: b.alpha_di,
            alpha_ir: b.alpha_ir,
            p_s_w: b.p_s_w,
            p_d_w: b.p_d_w,
            p_r_w: b.p_r_w,
            sigma2_s_w: b.sigma2_s_w,
            sigma2_d_w: b.sigma2_d_w,
            sigma2_r_w: b.sigma2_r_w,
        }
    }
}

fn config_err(field: &str, msg: impl fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

impl ExperimentConfig {
    pub fn budget(&self) -> LinkBudget {
        LinkBudget {
            pl0_db: self.pl0_db,
            d0_m: self.d0_m,
            alpha_sr: self.alpha_sr,
            alpha_dr: self.alpha_dr,
            alpha_si: self.alpha_si,
            alpha_di: self.alpha_di,
            alpha_ir: self.alpha_ir,
            p_s_w: self.p_s_w,
            p_d_w: self.p_d_w,
            p_r_w: self.p_r_w,
            sigma2_s_w: self.sigma2_s_w,
            sigma2_d_w: self.sigma2_d_w,
            sigma2_r_w: self.sigma2_r_w,
        }
    }

    pub fn settings(&self) -> OptimizerSettings {
        OptimizerSettings {
            gpi: GpiConfig {
                kappa: self.gpi_kappa,
                max_iter: self.gpi_max_iter,
            },
            sdp_draws: self.sdp_draws,
        }
    }

    pub fn sweep_methods(&self) -> Vec<Method> {
        self.methods.clone().unwrap_or_else(|| Method::ALL.to_vec())
    }

    pub fn size_grid(&self) -> Vec<usize> {
        self.element_counts
            .clone()
            .unwrap_or_else(|| DEFAULT_SIZE_GRID.to_vec())
    }

    pub fn convergence_grid(&self) -> Vec<usize> {
        self.element_counts
            .clone()
            .unwrap_or_else(|| DEFAULT_CONVERGENCE_GRID.to_vec())
    }

    /// `d_min, d_min + d_step, …` up to `d_max`, each clamped to
    /// `[D_EPS, 100 − D_EPS]`.
    pub fn distance_grid(&self) -> Vec<f64> {
        let count = ((self.d_max - self.d_min) / self.d_step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| (self.d_min + k as f64 * self.d_step).clamp(D_EPS, 100.0 - D_EPS))
            .collect()
    }

    /// Checks every field, naming the first offending one.
    pub fn validate(&self) -> Result<()> {
        if self.n_elements == 0 {
            return Err(config_err("n_elements", "must be at least 1"));
        }
        if let Some(counts) = &self.element_counts {
            if counts.is_empty() {
                return Err(config_err("element_counts", "must not be empty"));
            }
            if counts.contains(&0) {
                return Err(config_err("element_counts", "entries must be at least 1"));
            }
        }
        if self.m_antennas == 0 {
            return Err(config_err("m_antennas", "must be at least 1"));
        }
        if self.trials == 0 {
            return Err(config_err("trials", "must be at least 1"));
        }
        for (name, v) in [("d_min", self.d_min), ("d_max", self.d_max), ("d_fixed", self.d_fixed)] {
            if !(0.0..=100.0).contains(&v) {
                return Err(config_err(name, format!("must lie in [0, 100], got {v}")));
            }
        }
        if self.d_min > self.d_max {
            return Err(config_err(
                "d_min",
                format!("exceeds d_max ({} > {})", self.d_min, self.d_max),
            ));
        }
        if !(self.d_step > 0.0 && self.d_step.is_finite()) {
            return Err(config_err("d_step", format!("must be positive, got {}", self.d_step)));
        }
        if let Some(methods) = &self.methods {
            if methods.is_empty() {
                return Err(config_err("methods", "must not be empty"));
            }
        }
        if self.sdp_draws == 0 {
            return Err(config_err("sdp_draws", "must be at least 1"));
        }
        self.settings()
            .gpi
            .validate()
            .map_err(|e| config_err("gpi_kappa/gpi_max_iter", e))?;
        self.budget().validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}

/// Parses a TOML document; missing keys keep their defaults, unknown keys
/// are errors.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
