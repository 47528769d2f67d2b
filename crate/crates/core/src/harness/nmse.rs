use rayon::prelude::*;

use super::{noise_std_for, Cell, ExperimentConfig, ExperimentResult, SymbolBank};
use crate::channel::{db_to_linear, sample_rayleigh, ChannelRealization, RngStream, StreamPurpose};
use crate::dsb::{calibrate_dsb_gain, dsb_estimate_sum, DsbParams};
use crate::error::{LogFskError, Result};
use crate::functions::{decode, encode, FunctionKind, FunctionSpec, Quantizer};
use crate::receiver::{demodulate_pipeline, DemodMode};
use crate::theory::{mse_prediction, p_p_exact, snr_destination};
use crate::transform::RealSignal;
use crate::waveform::{cosine_basis, logfsk_power, ModulationParams};

#[derive(Debug, Clone, PartialEq)]
pub struct NmsePoint {
    pub snr_db: f64,
    pub nmse_logfsk: f64,
    /// NaN for functions the linear baseline cannot compute.
    pub nmse_dsb: f64,
    /// Fraction of trials whose detected symbol statistic was wrong (erasures included).
    pub ser: f64,
    pub erasure_rate: f64,
    pub silent_rate: f64,
    /// Mean predicted symbol-domain MSE over the trials.
    pub theory_mse: f64,
    pub trials: usize,
    pub symbol_errors: usize,
    pub saturations: usize,
    pub all_silent_trials: usize,
}

struct Outcome {
    err_logfsk: f64,
    err_dsb: f64,
    truth_sq: f64,
    symbol_error: bool,
    erasure: bool,
    saturated: bool,
    silent: usize,
    all_silent: bool,
    theory_mse: f64,
}

struct Setup<'a> {
    cfg: &'a ExperimentConfig,
    params: ModulationParams,
    bank: SymbolBank,
    function: FunctionSpec,
    quantizer: Quantizer,
    p_log: f64,
    rx_scale: f64,
    dsb_carrier: RealSignal,
    dsb_carrier_index: usize,
    dsb_moment: f64,
    dsb_capable: bool,
}

impl<'a> Setup<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        let params = cfg.modulation()?;
        let mut function = cfg.function;
        let (lo, hi) = cfg.distribution.range(&params);
        if function.kind == FunctionKind::MaxLogSumExp {
            function.offset = hi;
        }
        let quantizer = if cfg.distribution.is_symbols() {
            Quantizer::new(0.0, params.max_symbol() as f64, params.max_symbol() + 1)
        } else {
            function.quantizer(lo, hi, &params)?
        };
        let dsb_carrier_index = params.n_samples / 4;
        let carrier_params = ModulationParams { beta: 0.0, n_users: 1, ..params };
        let f = function;
        Ok(Self {
            cfg,
            bank: SymbolBank::new(&params)?,
            p_log: logfsk_power(&params)?,
            rx_scale: cfg.channel.rx_scale(),
            dsb_carrier: cosine_basis(dsb_carrier_index, &carrier_params)?,
            dsb_carrier_index,
            dsb_moment: cfg.distribution.second_moment(|v| f.preprocess(v).unwrap_or(0.0), &params),
            dsb_capable: matches!(
                function.kind,
                FunctionKind::Sum | FunctionKind::Product | FunctionKind::MaxLogSumExp
            ),
            params,
            function,
            quantizer,
        })
    }

    fn channel(&self, point: usize, trial: usize, noise_std: f64) -> ChannelRealization {
        let k = self.params.n_users;
        match self.cfg.channel.budget() {
            None => ChannelRealization::awgn(k, 1.0, noise_std),
            Some(budget) => {
                let mut rng = RngStream::for_trial(self.cfg.seed, StreamPurpose::Channel, point, trial).rng();
                let gains = (0..k).map(|_| sample_rayleigh(&mut rng)).collect();
                ChannelRealization::with_power_control(gains, &budget, noise_std)
            }
        }
    }

    fn trial(&self, point: usize, trial: usize, snr_db: f64) -> Result<Outcome> {
        let cfg = self.cfg;
        let params = &self.params;
        let noise_std = noise_std_for(self.p_log, self.rx_scale, snr_db);
        let mut data_rng = RngStream::for_trial(cfg.seed, StreamPurpose::Data, point, trial).rng();
        let values: Vec<f64> = (0..params.n_users).map(|_| cfg.distribution.sample(&mut data_rng, params)).collect();
        let symbols: Vec<usize> = if cfg.distribution.is_symbols() {
            values.iter().map(|&v| v as usize).collect()
        } else {
            values.iter().map(|&v| encode(v, &self.function, &self.quantizer)).collect::<Result<_>>()?
        };
        let truth = self.function.evaluate(&values);
        let ch = self.channel(point, trial, noise_std);
        let active: Vec<usize> = (0..params.n_users).filter(|&k| ch.is_active(k)).map(|k| symbols[k]).collect();
        let k_active = active.len();
        let silent = params.n_users - k_active;

        let mut noise_rng = RngStream::for_trial(cfg.seed, StreamPurpose::Noise, point, trial).rng();
        let y = self.bank.transmit(&symbols, &ch, &mut noise_rng);

        let mut out = Outcome {
            err_logfsk: 0.0,
            err_dsb: f64::NAN,
            truth_sq: truth * truth,
            symbol_error: false,
            erasure: false,
            saturated: false,
            silent,
            all_silent: k_active == 0,
            theory_mse: 0.0,
        };

        if k_active == 0 {
            out.symbol_error = true;
            out.err_logfsk = truth * truth;
        } else {
            let eff = params.with_users(k_active);
            let true_sum: usize = active.iter().sum();
            let true_diff = (k_active == 2).then(|| active[0].abs_diff(active[1]));
            let mode = if k_active == 2 { self.function.demod_mode() } else { DemodMode::Sum };
            let detection = match demodulate_pipeline(&y, &ch, params, &cfg.receiver, mode) {
                Ok(d) => Some(d),
                Err(LogFskError::Saturation { .. }) => {
                    out.saturated = true;
                    None
                }
                Err(e) => return Err(e),
            };
            let (sum_hat, diff_hat) = match &detection {
                Some(d) if !d.erasure => (d.detected_sum, d.detected_difference),
                _ => {
                    out.erasure = true;
                    // Read as the top admissible sum: squared error (N-K-S)^2.
                    (eff.max_sum(), (mode != DemodMode::Sum).then_some(0))
                }
            };
            let needs_diff = self.function.needs_two_users();
            let diff_for_decode = if needs_diff { Some(diff_hat.unwrap_or(0)) } else { diff_hat };
            let estimate = decode(sum_hat, diff_for_decode, &self.function, &self.quantizer, k_active)?;
            out.err_logfsk = (estimate - truth).powi(2);
            out.symbol_error =
                out.erasure || sum_hat != true_sum || (needs_diff && (true_diff.is_none() || diff_hat != true_diff));
            let snr_sigma = snr_destination(&eff, noise_std, ch.rx_scale, p_p_exact(&active, &eff)?)?;
            out.theory_mse = mse_prediction(&eff, true_sum, snr_sigma)?;
        }

        if self.dsb_capable {
            out.err_dsb = self.dsb_trial(point, trial, &values, &ch, snr_db, noise_std)? - truth;
            out.err_dsb *= out.err_dsb;
        }
        Ok(out)
    }

    fn dsb_trial(
        &self,
        point: usize,
        trial: usize,
        values: &[f64],
        ch: &ChannelRealization,
        snr_db: f64,
        noise_std: f64,
    ) -> Result<f64> {
        let n = self.params.n_samples;
        let gain = calibrate_dsb_gain(self.dsb_moment, db_to_linear(snr_db), noise_std, ch.rx_scale, n)?;
        let p = DsbParams::new(self.dsb_carrier_index, gain, n)?;
        let mut amplitude = 0.0;
        for (k, &v) in values.iter().enumerate() {
            amplitude += ch.effective_gain(k) * gain * self.function.preprocess(v)?;
        }
        let mut y: Vec<f64> = self.dsb_carrier.samples().iter().map(|c| amplitude * c).collect();
        let mut rng = RngStream::for_trial(self.cfg.seed, StreamPurpose::Auxiliary, point, trial).rng();
        crate::channel::add_noise(&mut y, noise_std, &mut rng);
        let s = dsb_estimate_sum(&RealSignal::from_finite(y), &p, ch)?;
        Ok(self.function.postprocess(s))
    }
}

/// NMSE of Log-FSK and the DSB baseline against average predetection SNR.
pub fn run_nmse_sweep(cfg: &ExperimentConfig) -> Result<Vec<NmsePoint>> {
    cfg.validate()?;
    let setup = Setup::new(cfg)?;
    cfg.snr_db
        .iter()
        .enumerate()
        .map(|(point, &snr_db)| {
            let outcomes: Vec<Outcome> =
                (0..cfg.trials).into_par_iter().map(|t| setup.trial(point, t, snr_db)).collect::<Result<_>>()?;
            Ok(summarise(snr_db, &outcomes, setup.params.n_users))
        })
        .collect()
}

fn summarise(snr_db: f64, outcomes: &[Outcome], n_users: usize) -> NmsePoint {
    let n = outcomes.len();
    let mut acc = [0.0f64; 4];
    let (mut errors, mut erasures, mut saturations, mut silent, mut all_silent) = (0, 0, 0, 0, 0);
    for o in outcomes {
        acc[0] += o.err_logfsk;
        acc[1] += o.err_dsb;
        acc[2] += o.truth_sq;
        acc[3] += o.theory_mse;
        errors += o.symbol_error as usize;
        erasures += o.erasure as usize;
        saturations += o.saturated as usize;
        silent += o.silent;
        all_silent += o.all_silent as usize;
    }
    NmsePoint {
        snr_db,
        nmse_logfsk: acc[0] / acc[2],
        nmse_dsb: acc[1] / acc[2],
        ser: errors as f64 / n as f64,
        erasure_rate: erasures as f64 / n as f64,
        silent_rate: silent as f64 / (n * n_users) as f64,
        theory_mse: acc[3] / n as f64,
        trials: n,
        symbol_errors: errors,
        saturations,
        all_silent_trials: all_silent,
    }
}

/// Smallest grid SNR from which every point (inclusive) has zero Log-FSK error.
pub fn error_free_threshold(points: &[NmsePoint]) -> Option<f64> {
    let mut threshold = None;
    for p in points.iter().rev() {
        if p.symbol_errors == 0 && p.nmse_logfsk == 0.0 {
            threshold = Some(p.snr_db);
        } else {
            break;
        }
    }
    threshold
}

pub(super) fn table(cfg: &ExperimentConfig, points: &[NmsePoint]) -> ExperimentResult {
    let mut r = ExperimentResult::new(
        cfg,
        &["snr_db", "nmse_logfsk", "nmse_dsb", "ser", "erasure_rate", "silent_rate", "theory_mse", "trials"],
    );
    for p in points {
        r.push(vec![
            Cell::from(p.snr_db),
            p.nmse_logfsk.into(),
            p.nmse_dsb.into(),
            p.ser.into(),
            p.erasure_rate.into(),
            p.silent_rate.into(),
            p.theory_mse.into(),
            p.trials.into(),
        ]);
    }
    r.note("error_free_threshold_db", error_free_threshold(points));
    let flagged: Vec<f64> = points.iter().filter(|p| p.all_silent_trials > 0).map(|p| p.snr_db).collect();
    r.note("points_with_all_silent_trials", flagged);
    r.note("saturations", points.iter().map(|p| p.saturations).sum::<usize>());
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{ExperimentKind, ParamsConfig};

    fn small(kind_fn: FunctionSpec) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::preset(ExperimentKind::NmseSweep);
        cfg.params = ParamsConfig::new(64, 2);
        cfg.snr_db = vec![60.0];
        cfg.trials = 50;
        cfg.function = kind_fn;
        cfg
    }

    #[test]
    fn high_snr_is_error_free() {
        let pts = run_nmse_sweep(&small(FunctionSpec::sum())).unwrap();
        assert_eq!(pts[0].symbol_errors, 0);
        assert_eq!(pts[0].nmse_logfsk, 0.0);
        assert!(pts[0].nmse_dsb < 1e-6);
        let pts = run_nmse_sweep(&small(FunctionSpec::new(FunctionKind::MaxExact2User))).unwrap();
        assert_eq!(pts[0].nmse_logfsk, 0.0);
        assert!(pts[0].nmse_dsb.is_nan());
    }

    #[test]
    fn deterministic() {
        let mut cfg = small(FunctionSpec::sum());
        cfg.snr_db = vec![4.0, 8.0];
        let a = run_nmse_sweep(&cfg).unwrap();
        let b = run_nmse_sweep(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn threshold_helper() {
        let mk = |snr_db, errs| NmsePoint {
            snr_db,
            nmse_logfsk: if errs > 0 { 0.1 } else { 0.0 },
            nmse_dsb: 0.0,
            ser: 0.0,
            erasure_rate: 0.0,
            silent_rate: 0.0,
            theory_mse: 0.0,
            trials: 1,
            symbol_errors: errs,
            saturations: 0,
            all_silent_trials: 0,
        };
        let pts = [mk(1.0, 3), mk(2.0, 0), mk(3.0, 1), mk(4.0, 0), mk(5.0, 0)];
        assert_eq!(error_free_threshold(&pts), Some(4.0));
        assert_eq!(error_free_threshold(&pts[..3]), None);
    }
}
