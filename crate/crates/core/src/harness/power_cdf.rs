use rayon::prelude::*;

use super::stats::{ecdf, ks_two_sample};
use super::{noise_std_for, DataDistribution, ExperimentConfig, ExperimentResult};
use crate::channel::{db_to_linear, sample_rayleigh, RngStream, StreamPurpose};
use crate::dsb::calibrate_dsb_gain;
use crate::error::{LogFskError, Result};
use crate::functions::{encode, FunctionKind, FunctionSpec};
use crate::theory::{power_control, PowerBudget};
use crate::transform::RealSignal;
use crate::waveform::{logfsk_modulate, logfsk_power, waveform_power};

/// Per-user transmitted power samples for one scheme and data/function cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerCell {
    pub scheme: &'static str,
    pub distribution: &'static str,
    pub function: &'static str,
    /// One entry per user per trial; silent users contribute 0.
    pub powers: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerCdfReport {
    pub cells: Vec<PowerCell>,
    /// Smallest pairwise two-sample KS p-value among the Log-FSK cells.
    pub logfsk_min_ks_p: f64,
    pub dsb_min_ks_p: f64,
    pub silent_rate: f64,
    /// `P(|h|^2 < P_R / P_k)` for unit-variance Rayleigh fading.
    pub silent_rate_theory: f64,
    /// Users whose silence disagreed with `P_R / |h|^2 > P_k`.
    pub cutoff_violations: usize,
    pub trials: usize,
}

/// Data models crossed with the functions in the power study, over `[1, hi]`.
pub fn power_cells(hi: f64) -> Vec<(&'static str, DataDistribution, &'static str, FunctionSpec)> {
    let lo = 1.0;
    let dists = [
        ("uniform", DataDistribution::Uniform { lo, hi }),
        ("gaussian", DataDistribution::Gaussian { mean: 0.5 * (lo + hi), std: (hi - lo) / 6.3, lo, hi }),
    ];
    let funcs = [
        ("sum", FunctionSpec::sum()),
        ("product", FunctionSpec::new(FunctionKind::Product)),
        ("max", FunctionSpec::max_log_sum_exp(hi)),
    ];
    let mut out = Vec::new();
    for (dn, d) in dists {
        for (fname, f) in funcs {
            out.push((dn, d, fname, f));
        }
    }
    out
}

fn min_pairwise_ks(cells: &[&PowerCell]) -> f64 {
    let mut p = 1.0f64;
    for i in 0..cells.len() {
        for j in i + 1..cells.len() {
            p = p.min(ks_two_sample(&cells[i].powers, &cells[j].powers).p_value);
        }
    }
    p
}

/// Transmit-power distributions under Rayleigh fading with threshold power control.
///
/// Channel draws are shared across cells, so differences between cells come
/// from the data alone.
pub fn run_power_cdf(cfg: &ExperimentConfig) -> Result<PowerCdfReport> {
    cfg.validate()?;
    let budget: PowerBudget =
        cfg.channel.budget().ok_or_else(|| LogFskError::Config("power_cdf needs the rayleigh channel model".into()))?;
    let params = cfg.modulation()?;
    let k = params.n_users;
    let snr_db = cfg.snr_db[0];
    let rx_scale = budget.p_r.sqrt();
    let p_log = logfsk_power(&params)?;
    let noise_std = noise_std_for(p_log, rx_scale, snr_db);
    let symbol_power: Vec<f64> = (0..=params.max_symbol())
        .map(|m| logfsk_modulate(m, &params).map(|x: RealSignal| waveform_power(&x)))
        .collect::<Result<_>>()?;

    // Transmit amplitude |A_k| per trial and user; None for silent users.
    let amplitudes: Vec<Vec<(f64, Option<f64>)>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = RngStream::for_trial(cfg.seed, StreamPurpose::Channel, 0, t).rng();
            (0..k)
                .map(|_| {
                    let h = sample_rayleigh(&mut rng).norm();
                    (h, power_control(h, &budget))
                })
                .collect()
        })
        .collect();

    let mut cells = Vec::new();
    for (idx, (dname, dist, fname, f)) in power_cells(params.max_symbol() as f64).into_iter().enumerate() {
        dist.validate(&f)?;
        let (lo, hi) = dist.range(&params);
        let q = f.quantizer(lo, hi, &params)?;
        let moment = dist.second_moment(|v| f.preprocess(v).unwrap_or(0.0), &params);
        let dsb_gain = calibrate_dsb_gain(moment, db_to_linear(snr_db), noise_std, rx_scale, params.n_samples)?;
        let per_trial: Vec<(Vec<f64>, Vec<f64>)> = amplitudes
            .par_iter()
            .enumerate()
            .map(|(t, users)| {
                let mut rng = RngStream::for_trial(cfg.seed, StreamPurpose::Data, idx, t).rng();
                let mut log = Vec::with_capacity(k);
                let mut dsb = Vec::with_capacity(k);
                for &(_, a) in users {
                    let v = dist.sample(&mut rng, &params);
                    let a2 = a.map_or(0.0, |a| a * a);
                    log.push(a2 * symbol_power[encode(v, &f, &q)?]);
                    let phi = f.preprocess(v)?;
                    dsb.push(a2 * dsb_gain * dsb_gain * phi * phi / params.n_samples as f64);
                }
                Ok((log, dsb))
            })
            .collect::<Result<_>>()?;
        let (log, dsb): (Vec<_>, Vec<_>) = per_trial.into_iter().unzip();
        cells.push(PowerCell { scheme: "logfsk", distribution: dname, function: fname, powers: log.concat() });
        cells.push(PowerCell { scheme: "dsb", distribution: dname, function: fname, powers: dsb.concat() });
    }

    let mut silent = 0;
    let mut violations = 0;
    for &(h, a) in amplitudes.iter().flatten() {
        silent += a.is_none() as usize;
        let should_be_silent = budget.p_r / (h * h) > budget.p_k;
        violations += (a.is_none() != should_be_silent) as usize;
    }
    let by = |s: &str| cells.iter().filter(|c| c.scheme == s).collect::<Vec<_>>();
    Ok(PowerCdfReport {
        logfsk_min_ks_p: min_pairwise_ks(&by("logfsk")),
        dsb_min_ks_p: min_pairwise_ks(&by("dsb")),
        silent_rate: silent as f64 / (cfg.trials * k) as f64,
        silent_rate_theory: budget.rayleigh_silence_probability(),
        cutoff_violations: violations,
        trials: cfg.trials,
        cells,
    })
}

const CDF_POINTS: usize = 200;

pub(super) fn table(cfg: &ExperimentConfig, report: &PowerCdfReport) -> ExperimentResult {
    let mut r = ExperimentResult::new(cfg, &["scheme", "distribution", "function", "power", "cdf"]);
    for cell in &report.cells {
        let points = ecdf(&cell.powers);
        let stride = (points.len() / CDF_POINTS).max(1);
        let last = points.len().saturating_sub(1);
        for (i, (v, p)) in points.iter().enumerate() {
            if i % stride == 0 || i == last {
                r.push(vec![
                    cell.scheme.into(),
                    cell.distribution.into(),
                    cell.function.into(),
                    (*v).into(),
                    (*p).into(),
                ]);
            }
        }
    }
    r.note("logfsk_min_ks_p", report.logfsk_min_ks_p);
    r.note("dsb_min_ks_p", report.dsb_min_ks_p);
    r.note("silent_rate", report.silent_rate);
    r.note("silent_rate_theory", report.silent_rate_theory);
    r.note("cutoff_violations", report.cutoff_violations);
    r
}
