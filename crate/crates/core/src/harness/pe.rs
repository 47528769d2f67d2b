use rayon::prelude::*;

use super::{noise_std_for, Cell, ExperimentConfig, ExperimentResult, SymbolBank};
use crate::channel::{ChannelRealization, RngStream, StreamPurpose};
use crate::error::{LogFskError, Result};
use crate::receiver::{detect_sum, received_spectrum};
use crate::theory::{error_probability, mse_prediction, p_p_exact, snr_destination};
use crate::waveform::{logfsk_power, ModulationParams};

#[derive(Debug, Clone, PartialEq)]
pub struct PeRow {
    pub sum: usize,
    pub symbols: Vec<usize>,
    pub snr_db: f64,
    pub pe_measured: f64,
    pub pe_theory: f64,
    pub mse_measured: f64,
    pub mse_theory: f64,
    /// Rate at which some eligible bin above the sum tone outgrew the sum bin.
    pub pe_peak_event: f64,
    /// Prediction with the SNR scaled by the observation gain.
    pub pe_theory_observed: f64,
    pub erasure_rate: f64,
    pub trials: usize,
}

/// Symbol tuple with the given sum, spread as evenly as the alphabet allows.
pub fn tuple_for_sum(sum: usize, params: &ModulationParams) -> Result<Vec<usize>> {
    let k = params.n_users;
    if sum > params.max_symbol() * k {
        return Err(LogFskError::Config(format!(
            "sum {sum} is not reachable with {k} users of alphabet 0..={}",
            params.max_symbol()
        )));
    }
    Ok((0..k).map(|i| sum / k + usize::from(i < sum % k)).collect())
}

/// Measured symbol error rate and MSE against the closed-form predictors.
pub fn run_pe_vs_theory(cfg: &ExperimentConfig) -> Result<Vec<PeRow>> {
    cfg.validate()?;
    let params = cfg.modulation()?;
    let bank = SymbolBank::new(&params)?;
    let p_log = logfsk_power(&params)?;
    let sums = if cfg.sums.is_empty() { vec![params.max_sum() / 2] } else { cfg.sums.clone() };
    let mut rows = Vec::new();
    for (si, &sum) in sums.iter().enumerate() {
        let symbols = tuple_for_sum(sum, &params)?;
        let g_sum = 2 * sum + params.n_users;
        let pp = p_p_exact(&symbols, &params)?;
        for (pi, &snr_db) in cfg.snr_db.iter().enumerate() {
            let point = si * cfg.snr_db.len() + pi;
            let noise_std = noise_std_for(p_log, 1.0, snr_db);
            let ch = ChannelRealization::awgn(params.n_users, 1.0, noise_std);
            let outcomes: Vec<(bool, bool, f64, bool)> = (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = RngStream::for_trial(cfg.seed, StreamPurpose::Noise, point, t).rng();
                    let y = bank.transmit(&symbols, &ch, &mut rng);
                    let spec = match received_spectrum(&y, &ch, &params, &cfg.receiver) {
                        Ok(s) => s,
                        Err(LogFskError::Saturation { .. }) => {
                            let e = (params.max_sum() - sum) as f64;
                            return Ok((true, true, e * e, true));
                        }
                        Err(e) => return Err(e),
                    };
                    let det = detect_sum(&spec, &params, &cfg.receiver)?;
                    let sum_hat = if det.erasure { params.max_sum() } else { det.detected_sum };
                    let err = sum_hat as f64 - sum as f64;
                    let peak = spec.basis_amplitude(g_sum);
                    let overtaken = (g_sum + 2..spec.grid_size()).step_by(2).any(|g| spec.basis_amplitude(g) >= peak);
                    Ok((det.erasure || sum_hat != sum, det.erasure, err * err, overtaken))
                })
                .collect::<Result<_>>()?;
            let n = cfg.trials as f64;
            let count = |f: fn(&(bool, bool, f64, bool)) -> bool| outcomes.iter().filter(|o| f(o)).count() as f64 / n;
            let snr = snr_destination(&params, noise_std, 1.0, pp)?;
            rows.push(PeRow {
                sum,
                symbols: symbols.clone(),
                snr_db,
                pe_measured: count(|o| o.0),
                pe_theory: error_probability(&params, sum, snr)?,
                mse_measured: outcomes.iter().map(|o| o.2).sum::<f64>() / n,
                mse_theory: mse_prediction(&params, sum, snr)?,
                pe_peak_event: count(|o| o.3),
                pe_theory_observed: error_probability(&params, sum, snr * params.observation_gain())?,
                erasure_rate: count(|o| o.1),
                trials: cfg.trials,
            });
        }
    }
    Ok(rows)
}

/// Rows with predicted `P_e` in `[lo, hi]`, as `(measured / predicted)` for P_e and MSE.
pub fn band_ratios(rows: &[PeRow], lo: f64, hi: f64) -> Vec<(f64, f64)> {
    rows.iter()
        .filter(|r| r.pe_theory >= lo && r.pe_theory <= hi)
        .map(|r| (r.pe_measured / r.pe_theory, r.mse_measured / r.mse_theory))
        .collect()
}

pub(super) fn table(cfg: &ExperimentConfig, rows: &[PeRow]) -> ExperimentResult {
    let mut r = ExperimentResult::new(
        cfg,
        &[
            "sum",
            "snr_db",
            "pe_measured",
            "pe_theory",
            "mse_measured",
            "mse_theory",
            "pe_peak_event",
            "pe_theory_observed",
            "erasure_rate",
            "trials",
        ],
    );
    for row in rows {
        r.push(vec![
            Cell::from(row.sum),
            row.snr_db.into(),
            row.pe_measured.into(),
            row.pe_theory.into(),
            row.mse_measured.into(),
            row.mse_theory.into(),
            row.pe_peak_event.into(),
            row.pe_theory_observed.into(),
            row.erasure_rate.into(),
            row.trials.into(),
        ]);
    }
    let ratios = band_ratios(rows, 1e-3, 0.3);
    let worst = |f: fn(&(f64, f64)) -> f64| ratios.iter().map(f).map(|v| v.max(1.0 / v)).fold(1.0, f64::max);
    r.note("band_points", ratios.len());
    r.note("worst_pe_factor", worst(|x| x.0));
    r.note("worst_mse_factor", worst(|x| x.1));
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{ExperimentKind, ParamsConfig};

    #[test]
    fn tuples_hit_the_sum() {
        let p = ModulationParams::with_default_beta(256, 3).unwrap();
        for s in [0, 1, 100, 252] {
            let t = tuple_for_sum(s, &p).unwrap();
            assert_eq!(t.iter().sum::<usize>(), s);
            assert!(t.iter().all(|&m| m <= p.max_symbol()));
        }
        assert!(tuple_for_sum(253, &p).is_err());
    }

    #[test]
    fn clean_channel_has_no_errors() {
        let mut cfg = ExperimentConfig::preset(ExperimentKind::PeVsTheory);
        cfg.params = ParamsConfig::new(64, 2);
        cfg.snr_db = vec![80.0];
        cfg.sums = vec![5, 40];
        cfg.trials = 50;
        let rows = run_pe_vs_theory(&cfg).unwrap();
        assert!(rows.iter().all(|r| r.pe_measured == 0.0 && r.mse_measured == 0.0));
    }
}
