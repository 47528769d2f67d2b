use rayon::prelude::*;

use super::stats::{mean, slope, variance};
use super::{noise_std_for, Cell, ExperimentConfig, ExperimentResult, SymbolBank};
use crate::channel::{linear_to_db, ChannelRealization, RngStream, StreamPurpose};
use crate::error::Result;
use crate::receiver::received_spectrum;
use crate::theory::{
    amplitude_at_sum, p_p_exact, snr_destination, snr_destination_closed_form, snr_destination_first_order,
    snr_destination_high,
};
use crate::waveform::{logfsk_power, ModulationParams};

#[derive(Debug, Clone, PartialEq)]
pub struct SnrCurvePoint {
    pub snr_db: f64,
    /// Mean bias-corrected basis amplitude of the sum bin.
    pub bin_mean: f64,
    pub bin_var: f64,
    /// `bin_mean^2 / bin_var` in dB.
    pub empirical_db: f64,
    pub theory_db: f64,
    /// Theory scaled by the observation gain of the symbol window.
    pub observed_db: f64,
    pub closed_form_db: f64,
    pub high_db: f64,
    pub first_order_db: f64,
    pub trials: usize,
}

/// Fixed tuple from the config, or every user at the middle of its alphabet.
pub(super) fn probe_symbols(cfg: &ExperimentConfig, params: &ModulationParams) -> Vec<usize> {
    cfg.symbols.clone().unwrap_or_else(|| vec![params.max_symbol() / 2; params.n_users])
}

/// Empirical SNR of the sum bin against average predetection SNR.
pub fn run_snr_curve(cfg: &ExperimentConfig) -> Result<Vec<SnrCurvePoint>> {
    cfg.validate()?;
    let params = cfg.modulation()?;
    let symbols = probe_symbols(cfg, &params);
    let g_sum = 2 * symbols.iter().sum::<usize>() + params.n_users;
    let bank = SymbolBank::new(&params)?;
    let p_log = logfsk_power(&params)?;
    let p_p = p_p_exact(&symbols, &params)?;
    let rx_scale = 1.0;
    cfg.snr_db
        .iter()
        .enumerate()
        .map(|(point, &snr_db)| {
            let noise_std = noise_std_for(p_log, rx_scale, snr_db);
            let ch = ChannelRealization::awgn(params.n_users, rx_scale, noise_std);
            let bins: Vec<f64> = (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = RngStream::for_trial(cfg.seed, StreamPurpose::Noise, point, t).rng();
                    let y = bank.transmit(&symbols, &ch, &mut rng);
                    Ok(received_spectrum(&y, &ch, &params, &cfg.receiver)?.basis_amplitude(g_sum))
                })
                .collect::<Result<_>>()?;
            let (m, v) = (mean(&bins), variance(&bins));
            let theory = snr_destination(&params, noise_std, rx_scale, p_p)?;
            Ok(SnrCurvePoint {
                snr_db,
                bin_mean: m,
                bin_var: v,
                empirical_db: if v > 0.0 { linear_to_db(m * m / v) } else { f64::INFINITY },
                theory_db: linear_to_db(theory),
                observed_db: linear_to_db(theory * params.observation_gain()),
                closed_form_db: linear_to_db(snr_destination_closed_form(&params, noise_std, rx_scale)?),
                high_db: linear_to_db(snr_destination_high(&params, noise_std, rx_scale)?),
                first_order_db: linear_to_db(snr_destination_first_order(&params, noise_std, rx_scale)?),
                trials: cfg.trials,
            })
        })
        .collect()
}

/// Least-squares dB/dB slope of the empirical curve over points whose empirical SNR is at least `floor_db`.
pub fn empirical_slope(points: &[SnrCurvePoint], floor_db: f64) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| p.empirical_db.is_finite() && p.empirical_db >= floor_db)
        .map(|p| (p.snr_db, p.empirical_db))
        .unzip();
    (x.len() >= 2).then(|| slope(&x, &y))
}

pub(super) fn table(cfg: &ExperimentConfig, points: &[SnrCurvePoint]) -> ExperimentResult {
    let mut r = ExperimentResult::new(
        cfg,
        &[
            "snr_db",
            "empirical_snr_sigma_db",
            "theory_snr_sigma_db",
            "observed_theory_db",
            "closed_form_db",
            "high_snr_db",
            "first_order_db",
            "bin_mean",
            "bin_var",
            "trials",
        ],
    );
    for p in points {
        r.push(vec![
            Cell::from(p.snr_db),
            p.empirical_db.into(),
            p.theory_db.into(),
            p.observed_db.into(),
            p.closed_form_db.into(),
            p.high_db.into(),
            p.first_order_db.into(),
            p.bin_mean.into(),
            p.bin_var.into(),
            p.trials.into(),
        ]);
    }
    if let Ok(params) = cfg.modulation() {
        r.note("a_sigma", amplitude_at_sum(&params));
    }
    r.note("slope_above_10db", empirical_slope(points, 10.0));
    r
}
