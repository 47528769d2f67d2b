//! Exponential postprocessing, bias correction and top-tone detection.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{LogFskError, Result};
use crate::theory::{amplitude_at_sum, lognormal_params};
use crate::transform::{halfgrid_analysis, window_mean, HalfGridSpectrum, RealSignal};
use crate::waveform::{signal_mean, ModulationParams};

/// How the detection threshold `gamma` is chosen, in units of basis amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThresholdPolicy {
    /// `gamma = A_S/2 + sigma^2 ln(N/2) / A_S`, clamped to `[0.5, 0.8] A_S`.
    ///
    /// Balances one miss event against about `N/2` false-alarm bins for
    /// Gaussian bin noise of variance `sigma^2`, which the receiver estimates
    /// from the received power each symbol. Falls back to `A_S/2` without an
    /// estimate.
    Balanced,
    /// `gamma = fraction * A_S`.
    Fraction { fraction: f64 },
    /// A fixed `gamma`.
    Absolute { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReceiverConfig {
    pub threshold: ThresholdPolicy,
    /// Divide the spectrum by `mu_z`.
    pub bias_correct: bool,
    /// Multiply by `exp(K * mean)` to undo transmit-side mean removal.
    pub dc_restore: bool,
    /// Largest tolerated `y / A_r` before the exponential.
    pub saturation_cap: f64,
    /// Only consider bins whose parity matches the sum tone (`g = K mod 2`).
    pub parity_gate: bool,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        Self {
            threshold: ThresholdPolicy::Balanced,
            bias_correct: true,
            dc_restore: true,
            saturation_cap: 700.0,
            parity_gate: true,
        }
    }
}

impl ReceiverConfig {
    /// The plain midpoint rule `gamma = A_S / 2`.
    pub fn midpoint() -> Self {
        Self { threshold: ThresholdPolicy::Fraction { fraction: 0.5 }, ..Self::default() }
    }

    /// Threshold for this spectrum.
    pub fn threshold_for(&self, params: &ModulationParams, noise_var: Option<f64>) -> Result<f64> {
        let a = amplitude_at_sum(params);
        let gamma = match self.threshold {
            ThresholdPolicy::Fraction { fraction } => fraction * a,
            ThresholdPolicy::Absolute { value } => value,
            ThresholdPolicy::Balanced => match noise_var {
                Some(var) if a > 0.0 => {
                    let competitors = (params.n_samples as f64 / 2.0).max(1.0);
                    (0.5 * a + var * competitors.ln() / a).clamp(0.5 * a, 0.8 * a)
                }
                _ => 0.5 * a,
            },
        };
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(LogFskError::Config(format!("threshold must be positive, got {gamma}")));
        }
        Ok(gamma)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionResult {
    /// Highest eligible bin above threshold; 0 on erasure.
    pub grid_index: usize,
    pub detected_sum: usize,
    pub detected_difference: Option<usize>,
    pub detected_max: Option<usize>,
    /// Eligible bins at or above threshold with their basis amplitudes, ascending in `g`.
    pub above_threshold: Vec<(usize, f64)>,
    pub threshold: f64,
    pub erasure: bool,
}

impl DetectionResult {
    fn erased(threshold: f64) -> Self {
        Self {
            grid_index: 0,
            detected_sum: 0,
            detected_difference: None,
            detected_max: None,
            above_threshold: Vec::new(),
            threshold,
            erasure: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemodMode {
    Sum,
    Difference,
    Max,
}

/// `r[n] = exp(y[n] / A_r)`, times `exp(K * mean)` when restoring the removed mean.
pub fn exp_postprocess(
    y: &RealSignal,
    rx_scale: f64,
    params: &ModulationParams,
    cfg: &ReceiverConfig,
) -> Result<RealSignal> {
    if rx_scale <= 0.0 {
        return Err(LogFskError::Domain(format!("A_r must be positive, got {rx_scale}")));
    }
    let offset =
        if cfg.dc_restore && params.mean_subtract { params.n_users as f64 * signal_mean(params)? } else { 0.0 };
    let mut out = Vec::with_capacity(y.n_samples());
    for &v in y.samples() {
        let u = v / rx_scale;
        if u > cfg.saturation_cap {
            return Err(LogFskError::Saturation { value: u, cap: cfg.saturation_cap });
        }
        out.push((u + offset).exp());
    }
    RealSignal::new(out)
}

/// Divides every bin by `mu_z`.
pub fn bias_correction(spec: &HalfGridSpectrum, mu_z: f64) -> HalfGridSpectrum {
    spec.scaled(1.0 / mu_z)
}

fn eligible(g: usize, params: &ModulationParams, cfg: &ReceiverConfig) -> bool {
    g >= 1 && (!cfg.parity_gate || g % 2 == params.n_users % 2)
}

/// Nearest admissible sum for grid index `g`; half-integers round down.
fn sum_from_grid(g: usize, params: &ModulationParams) -> usize {
    (g.saturating_sub(params.n_users) / 2).min(params.max_sum())
}

/// Detects the highest tone above threshold and maps it to the symbol sum.
pub fn detect_sum(spec: &HalfGridSpectrum, params: &ModulationParams, cfg: &ReceiverConfig) -> Result<DetectionResult> {
    let gamma = cfg.threshold_for(params, spec.noise_var)?;
    let above: Vec<(usize, f64)> = (1..spec.grid_size())
        .filter(|&g| eligible(g, params, cfg))
        .map(|g| (g, spec.basis_amplitude(g)))
        .filter(|&(_, b)| b >= gamma)
        .collect();
    let Some(&(g_hat, _)) = above.last() else {
        return Ok(DetectionResult::erased(gamma));
    };
    Ok(DetectionResult {
        grid_index: g_hat,
        detected_sum: sum_from_grid(g_hat, params),
        detected_difference: None,
        detected_max: None,
        above_threshold: above,
        threshold: gamma,
        erasure: false,
    })
}

fn difference_below(spec: &HalfGridSpectrum, upper: usize, gamma: f64) -> usize {
    (1..upper.min(spec.grid_size()))
        .filter(|g| g % 2 == 0)
        .find(|&g| spec.basis_amplitude(g) >= gamma)
        .map_or(0, |g| g / 2)
}

/// `|m1 - m2|` from the lowest nonzero even tone below the sum tone (two users).
pub fn detect_difference(spec: &HalfGridSpectrum, params: &ModulationParams, cfg: &ReceiverConfig) -> Result<usize> {
    require_two_users(params)?;
    let sum = detect_sum(spec, params, cfg)?;
    let upper = if sum.erasure { spec.grid_size() } else { sum.grid_index };
    Ok(difference_below(spec, upper, sum.threshold))
}

/// `max(m1, m2) = (sum + difference) / 2`.
pub fn detect_max_two_user(spec: &HalfGridSpectrum, params: &ModulationParams, cfg: &ReceiverConfig) -> Result<usize> {
    require_two_users(params)?;
    let sum = detect_sum(spec, params, cfg)?.detected_sum;
    Ok((sum + detect_difference(spec, params, cfg)?) / 2)
}

fn require_two_users(params: &ModulationParams) -> Result<()> {
    if params.n_users != 2 {
        return Err(LogFskError::Unsupported(format!(
            "difference and max detection need K = 2, got K = {}",
            params.n_users
        )));
    }
    Ok(())
}

/// Half-grid spectrum of the received symbol after exponentiation and bias correction.
///
/// `params` must describe the users that actually transmitted. The spectrum
/// carries the receiver's per-bin noise variance estimate.
pub fn received_spectrum(
    y: &RealSignal,
    channel: &ChannelRealization,
    params: &ModulationParams,
    cfg: &ReceiverConfig,
) -> Result<HalfGridSpectrum> {
    let r = exp_postprocess(y, channel.rx_scale, params, cfg)?;
    let mut spec = halfgrid_analysis(&r, params.grid_size())?;
    let (mu_z, s2_z) = lognormal_params(channel.noise_std, channel.rx_scale)?;
    let second_moment = s2_z + mu_z * mu_z;
    let sq: Vec<f64> = r.samples().iter().map(|v| v * v).collect();
    let p_p_hat = window_mean(&sq) / second_moment;
    spec.noise_var = Some(s2_z * p_p_hat / params.observation_gain());
    if cfg.bias_correct {
        spec = bias_correction(&spec, mu_z);
    }
    Ok(spec)
}

/// exp -> half-grid bank -> bias correction -> detector.
///
/// Detection uses the users the channel marks active; an all-silent symbol is an erasure.
pub fn demodulate_pipeline(
    y: &RealSignal,
    channel: &ChannelRealization,
    params: &ModulationParams,
    cfg: &ReceiverConfig,
    mode: DemodMode,
) -> Result<DetectionResult> {
    let active = channel.active_users();
    if active == 0 {
        return Ok(DetectionResult::erased(f64::INFINITY));
    }
    let eff = params.with_users(active);
    let spec = received_spectrum(y, channel, &eff, cfg)?;
    let mut det = detect_sum(&spec, &eff, cfg)?;
    if mode != DemodMode::Sum {
        require_two_users(&eff)?;
        let upper = if det.erasure { spec.grid_size() } else { det.grid_index };
        let diff = difference_below(&spec, upper, det.threshold);
        det.detected_difference = Some(diff);
        if mode == DemodMode::Max {
            det.detected_max = Some((det.detected_sum + diff) / 2);
        }
    }
    Ok(det)
}
