use rayon::prelude::*;

use super::snr_curve::probe_symbols;
use super::stats::{mean, qq_correlation, qq_pairs, variance, Histogram};
use super::{noise_std_for, Cell, ExperimentConfig, ExperimentResult, SymbolBank};
use crate::channel::{ChannelRealization, RngStream, StreamPurpose};
use crate::error::{LogFskError, Result};
use crate::receiver::{received_spectrum, ReceiverConfig};
use crate::theory::{amplitude_at_sum, bin_noise_variance, lognormal_params, p_p_exact};
use crate::waveform::{logfsk_power, ModulationParams};

const HISTOGRAM_BINS: usize = 40;
const QQ_ROWS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDiagPoint {
    pub snr_db: f64,
    pub noise_std: f64,
    pub a_sigma: f64,
    pub mu_z: f64,
    pub sigma2_z: f64,
    pub p_p_exact: f64,
    /// `A_S (mu_z - 1)`.
    pub predicted_mean: f64,
    /// Mean of the sum-bin noise in basis units.
    pub measured_mean: f64,
    pub mean_standard_error: f64,
    /// `sigma_z^2 P_p` for a unit-norm bin.
    pub predicted_var: f64,
    /// Unit-norm variance of the first bin above the sum tone.
    pub measured_var: f64,
    /// Unit-norm variance of the sum bin itself, with its exact prediction.
    pub sum_bin_var: f64,
    pub sum_bin_var_exact: f64,
    pub qq_correlation: f64,
    pub histogram: Histogram,
    /// Sum-bin noise samples in basis units.
    pub samples: Vec<f64>,
}

/// Sum-bin noise `b(g_S) - b_clean(g_S)` in basis units and the unit-norm value of bin `g_S + 2`, per trial.
///
/// The spectrum is not bias corrected, so the first series carries the
/// multiplicative-noise bias.
pub fn bin_noise_samples(
    params: &ModulationParams,
    symbols: &[usize],
    noise_std: f64,
    trials: usize,
    seed: u64,
    point: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let g_sum = 2 * symbols.iter().sum::<usize>() + params.n_users;
    let g_off = g_sum + 2;
    if g_off >= params.grid_size() {
        return Err(LogFskError::Config(format!(
            "sum bin {g_sum} leaves no free bin above it below {}",
            params.grid_size()
        )));
    }
    let raw = ReceiverConfig { bias_correct: false, ..ReceiverConfig::default() };
    let bank = SymbolBank::new(params)?;
    let clean_ch = ChannelRealization::awgn(params.n_users, 1.0, 0.0);
    let mut unused = RngStream::new(seed, 0).rng();
    let clean = received_spectrum(&bank.transmit(symbols, &clean_ch, &mut unused), &clean_ch, params, &raw)?
        .basis_amplitude(g_sum);
    let ch = ChannelRealization::awgn(params.n_users, 1.0, noise_std);
    let pairs: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = RngStream::for_trial(seed, StreamPurpose::Noise, point, t).rng();
            let spec = received_spectrum(&bank.transmit(symbols, &ch, &mut rng), &ch, params, &raw)?;
            Ok((spec.basis_amplitude(g_sum) - clean, spec.unit_norm(g_off)))
        })
        .collect::<Result<_>>()?;
    Ok(pairs.into_iter().unzip())
}

/// Statistics of the bin noise after the exponential transform.
pub fn run_noise_diagnostics(cfg: &ExperimentConfig) -> Result<Vec<NoiseDiagPoint>> {
    cfg.validate()?;
    let params = cfg.modulation()?;
    let symbols = probe_symbols(cfg, &params);
    let p_log = logfsk_power(&params)?;
    let pp = p_p_exact(&symbols, &params)?;
    let a_sigma = amplitude_at_sum(&params);
    let g_sum = 2 * symbols.iter().sum::<usize>() + params.n_users;
    cfg.snr_db
        .iter()
        .enumerate()
        .map(|(point, &snr_db)| {
            let noise_std = noise_std_for(p_log, 1.0, snr_db);
            let (on, off) = bin_noise_samples(&params, &symbols, noise_std, cfg.trials, cfg.seed, point)?;
            let (mu_z, sigma2_z) = lognormal_params(noise_std, 1.0)?;
            let unit = (2.0f64).sqrt(); // basis -> unit-norm
            let on_unit: Vec<f64> = on.iter().map(|e| e * unit).collect();
            let gaussian_like = variance(&on) > 0.0;
            Ok(NoiseDiagPoint {
                snr_db,
                noise_std,
                a_sigma,
                mu_z,
                sigma2_z,
                p_p_exact: pp,
                predicted_mean: a_sigma * (mu_z - 1.0),
                measured_mean: mean(&on),
                mean_standard_error: (variance(&on) / on.len() as f64).sqrt(),
                predicted_var: sigma2_z * pp,
                measured_var: variance(&off),
                sum_bin_var: variance(&on_unit),
                sum_bin_var_exact: bin_noise_variance(&params, &symbols, g_sum, noise_std, 1.0)?,
                qq_correlation: if gaussian_like { qq_correlation(&on) } else { f64::NAN },
                histogram: Histogram::new(&on, HISTOGRAM_BINS),
                samples: on,
            })
        })
        .collect()
}

pub(super) fn table(cfg: &ExperimentConfig, points: &[NoiseDiagPoint]) -> ExperimentResult {
    let mut r = ExperimentResult::new(cfg, &["snr_db", "section", "label", "x", "y"]);
    for p in points {
        let stats = [
            ("mean", p.measured_mean, p.predicted_mean),
            ("mean_standard_error", p.mean_standard_error, p.mean_standard_error),
            ("variance", p.measured_var, p.predicted_var),
            ("sum_bin_variance", p.sum_bin_var, p.sum_bin_var_exact),
            ("qq_correlation", p.qq_correlation, 1.0),
        ];
        for (label, measured, predicted) in stats {
            r.push(vec![Cell::from(p.snr_db), "stat".into(), label.into(), measured.into(), predicted.into()]);
        }
        for (c, d) in p.histogram.centers().into_iter().zip(p.histogram.density()) {
            r.push(vec![Cell::from(p.snr_db), "histogram".into(), "density".into(), c.into(), d.into()]);
        }
        let qq = qq_pairs(&p.samples);
        let stride = (qq.len() / QQ_ROWS).max(1);
        for (i, (theo, sample)) in qq.into_iter().enumerate() {
            if i % stride == 0 {
                r.push(vec![Cell::from(p.snr_db), "qq".into(), "normal_quantile".into(), theo.into(), sample.into()]);
            }
        }
        r.note(&format!("qq_correlation_{}db", p.snr_db), p.qq_correlation);
        r.note(&format!("variance_ratio_{}db", p.snr_db), p.measured_var / p.predicted_var);
        let z = (p.measured_mean - p.predicted_mean) / p.mean_standard_error;
        r.note(&format!("mean_z_score_{}db", p.snr_db), z);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_noise_is_exactly_zero() {
        let p = ModulationParams::with_default_beta(64, 2).unwrap();
        let (on, off) = bin_noise_samples(&p, &[10, 12], 0.0, 8, 3, 0).unwrap();
        assert!(on.iter().all(|&e| e == 0.0));
        assert!(off.iter().all(|&e| e.abs() < 1e-9));
    }

    #[test]
    fn off_bin_variance_matches_flat_level() {
        let p = ModulationParams::with_default_beta(64, 2).unwrap();
        let ms = [10, 12];
        let std = 0.05;
        let (_, off) = bin_noise_samples(&p, &ms, std, 4000, 5, 0).unwrap();
        let (_, s2) = lognormal_params(std, 1.0).unwrap();
        let want = s2 * p_p_exact(&ms, &p).unwrap();
        let exact = bin_noise_variance(&p, &ms, 2 * 22 + 2 + 2, std, 1.0).unwrap();
        assert!((exact / want - 1.0).abs() < 0.05, "{exact} vs {want}");
        assert!((variance(&off) / want - 1.0).abs() < 0.1);
    }
}
