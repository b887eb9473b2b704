use serde::{Deserialize, Serialize};

use crate::channel::{generate_channel_set, ChannelSet, Geometry, D_EPS};
use crate::error::{Error, Result};
use crate::optimizers::{
    extract_or_fallback, max_sr_gpi_traced, optimize_first_slot, optimize_second_slot, Method, OptResult,
    OptimizerSettings,
};
use crate::rate::{direct_only_report, first_slot_rates, full_report, RateReport};

use super::config::{ExperimentConfig, RateMetric};
use super::seed::{channel_rng, method_rng, trial_seed};

/// How trials within a sweep point are scheduled. Results do not depend on
/// the choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon data parallelism over trials; sequential when the crate is
    /// built without the `parallel` feature.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

fn map_trials<T, F>(trials: usize, exec: Execution, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..trials as u64).into_par_iter().map(f).collect()
        }
        _ => (0..trials as u64).map(f).collect(),
    }
}

/// The three aggregatable rates of one trial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialRates {
    pub system: f64,
    pub slot1_sum: f64,
    pub slot1_min: f64,
}

impl TrialRates {
    pub fn get(&self, metric: RateMetric) -> f64 {
        match metric {
            RateMetric::System => self.system,
            RateMetric::Slot1Sum => self.slot1_sum,
            RateMetric::Slot1Min => self.slot1_min,
        }
    }
}

impl From<&RateReport> for TrialRates {
    fn from(r: &RateReport) -> Self {
        Self {
            system: r.system_rate,
            slot1_sum: r.sum_first_slot,
            slot1_min: r.min_first_slot,
        }
    }
}

/// Rates of `method` on one channel realization.
///
/// `θ` comes from the slot-1 optimizer and `ψ` from
/// [`optimize_second_slot`] with the same method; the random baseline draws
/// both at random and `only_rs` removes the IRS entirely. Randomness comes
/// from the method's own stream of `seed`.
pub fn evaluate_trial(
    chans: &ChannelSet,
    method: Method,
    settings: &OptimizerSettings,
    seed: u64,
) -> Result<RateReport> {
    if method == Method::OnlyRs {
        return direct_only_report(chans);
    }
    let mut rng = method_rng(seed, method);
    let theta = optimize_first_slot(chans, method, settings, &mut rng)?.theta;
    let psi = optimize_second_slot(chans, method, settings, &mut rng)?;
    full_report(chans, &theta, &psi)
}

/// One aggregated (sweep point, method) result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: Method,
    pub sweep_name: String,
    pub sweep_value: f64,
    pub n_elements: usize,
    pub m_antennas: usize,
    pub trials: usize,
    /// The metric behind `mean_rate`, `std_rate` and `ci95_halfwidth`.
    pub metric: RateMetric,
    pub mean_rate: f64,
    pub std_rate: f64,
    pub ci95_halfwidth: f64,
    pub mean_system: f64,
    pub mean_slot1_sum: f64,
    pub mean_slot1_min: f64,
}

/// `(mean, sample std, 1.96·std/√n)`; the std of a single value is 0.
pub fn summarize(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std, 1.96 * std / n.sqrt())
}

fn mean_of(rates: &[TrialRates], metric: RateMetric) -> f64 {
    rates.iter().map(|r| r.get(metric)).sum::<f64>() / rates.len() as f64
}

struct Point<'a> {
    sweep_name: &'a str,
    sweep_value: f64,
    sweep_index: u64,
    geometry: Geometry,
}

fn active_methods(cfg: &ExperimentConfig, n: usize) -> Vec<Method> {
    cfg.sweep_methods()
        .into_iter()
        .filter(|&m| {
            let keep = m != Method::MaxMin || n <= cfg.maxmin_max_n;
            if !keep {
                log::info!("skipping maxmin at N = {n} (above maxmin_max_n = {})", cfg.maxmin_max_n);
            }
            keep
        })
        .collect()
}

fn run_point(cfg: &ExperimentConfig, point: &Point<'_>, exec: Execution) -> Result<Vec<SweepRow>> {
    let methods = active_methods(cfg, point.geometry.n_elements);
    let budget = cfg.budget();
    let settings = cfg.settings();
    let per_trial = map_trials(cfg.trials, exec, |t| {
        let seed = trial_seed(cfg.seed, point.sweep_index, t);
        let chans = generate_channel_set(&point.geometry, &budget, &mut channel_rng(seed))?;
        methods
            .iter()
            .map(|&m| {
                evaluate_trial(&chans, m, &settings, seed)
                    .map(|r| TrialRates::from(&r))
                    .map_err(|e| annotate(e, m, point, t))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let rows = methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let rates: Vec<TrialRates> = per_trial.iter().map(|v| v[k]).collect();
            let values: Vec<f64> = rates.iter().map(|r| r.get(cfg.rate_metric)).collect();
            let (mean, std, ci) = summarize(&values);
            SweepRow {
                method,
                sweep_name: point.sweep_name.to_string(),
                sweep_value: point.sweep_value,
                n_elements: point.geometry.n_elements,
                m_antennas: point.geometry.m_antennas,
                trials: cfg.trials,
                metric: cfg.rate_metric,
                mean_rate: mean,
                std_rate: std,
                ci95_halfwidth: ci,
                mean_system: mean_of(&rates, RateMetric::System),
                mean_slot1_sum: mean_of(&rates, RateMetric::Slot1Sum),
                mean_slot1_min: mean_of(&rates, RateMetric::Slot1Min),
            }
        })
        .collect();
    Ok(rows)
}

fn annotate(e: Error, method: Method, point: &Point<'_>, trial: u64) -> Error {
    let context = format!(
        "{method} at {} = {}, trial {trial}",
        point.sweep_name, point.sweep_value
    );
    match e {
        Error::Solver { message, last_iterate } => Error::Solver {
            message: format!("{context}: {message}"),
            last_iterate,
        },
        Error::Numerical(msg) => Error::Numerical(format!("{context}: {msg}")),
        Error::Internal(msg) => Error::Internal(format!("{context}: {msg}")),
        other => other,
    }
}

/// Rate versus the horizontal IRS/relay offset `d` at fixed `N`.
pub fn run_distance_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    run_distance_sweep_with(cfg, Execution::default())
}

pub fn run_distance_sweep_with(cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for (i, d) in cfg.distance_grid().into_iter().enumerate() {
        log::info!("distance sweep: d = {d} m ({} trials)", cfg.trials);
        let point = Point {
            sweep_name: "distance",
            sweep_value: d,
            sweep_index: i as u64,
            geometry: Geometry::with_offset(d, cfg.n_elements, cfg.m_antennas),
        };
        rows.extend(run_point(cfg, &point, exec)?);
    }
    Ok(rows)
}

fn fixed_offset(cfg: &ExperimentConfig) -> f64 {
    cfg.d_fixed.clamp(D_EPS, 100.0 - D_EPS)
}

/// Rate versus `N` at offset `d_fixed`.
///
/// Every `N` uses sweep index 0, so trial `t` draws the same direct
/// channels (and a common prefix of the IRS channels) for every `N`.
pub fn run_size_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    run_size_sweep_with(cfg, Execution::default())
}

pub fn run_size_sweep_with(cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let d = fixed_offset(cfg);
    let mut rows = Vec::new();
    for n in cfg.size_grid() {
        log::info!("size sweep: N = {n} ({} trials)", cfg.trials);
        let point = Point {
            sweep_name: "size",
            sweep_value: n as f64,
            sweep_index: 0,
            geometry: Geometry::with_offset(d, n, cfg.m_antennas),
        };
        rows.extend(run_point(cfg, &point, exec)?);
    }
    Ok(rows)
}

/// One GPI run with the slot-1 sum rate of every iterate.
#[derive(Clone, Debug)]
pub struct ConvergenceRun {
    pub n: usize,
    pub trial: usize,
    pub result: OptResult,
    /// `R_SIR + R_DIR` of the phases extracted from each iterate; aligned
    /// with `result.objective_trace`.
    pub rates: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub method: Method,
    pub n: usize,
    pub trial: usize,
    pub iteration: usize,
    pub objective: f64,
    pub rate: f64,
}

/// GPI traces at offset `d_fixed` for every `N` of the convergence grid.
pub fn run_convergence(cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<ConvergenceRun>> {
    cfg.validate()?;
    if let Some(methods) = &cfg.methods {
        if methods.as_slice() != [Method::Gpi] {
            return Err(Error::Config(
                "methods: the convergence study supports only [gpi]".into(),
            ));
        }
    }
    let d = fixed_offset(cfg);
    let budget = cfg.budget();
    let gpi = cfg.settings().gpi;
    let mut runs = Vec::new();
    for n in cfg.convergence_grid() {
        log::info!("convergence: N = {n} ({} trials)", cfg.trials);
        let geometry = Geometry::with_offset(d, n, cfg.m_antennas);
        runs.extend(map_trials(cfg.trials, exec, |t| {
            let seed = trial_seed(cfg.seed, 0, t);
            let chans = generate_channel_set(&geometry, &budget, &mut channel_rng(seed))?;
            let traced = max_sr_gpi_traced(&chans, &gpi)?;
            let rates = traced
                .iterates
                .iter()
                .map(|it| {
                    let theta = extract_or_fallback(it)?;
                    let (a, b) = first_slot_rates(&chans, &theta)?;
                    Ok(a + b)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(ConvergenceRun {
                n,
                trial: t as usize,
                result: traced.result,
                rates,
            })
        })?);
    }
    Ok(runs)
}

/// [`run_convergence`] flattened to one row per iteration.
pub fn run_convergence_trace(cfg: &ExperimentConfig) -> Result<Vec<ConvergenceRow>> {
    let runs = run_convergence(cfg, Execution::default())?;
    Ok(runs
        .iter()
        .flat_map(|run| {
            run.result
                .objective_trace
                .iter()
                .zip(&run.rates)
                .enumerate()
                .map(move |(k, (&objective, &rate))| ConvergenceRow {
                    method: Method::Gpi,
                    n: run.n,
                    trial: run.trial,
                    iteration: k,
                    objective,
                    rate,
                })
        })
        .collect())
}
