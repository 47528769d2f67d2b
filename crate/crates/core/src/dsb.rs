//! Double-sideband amplitude modulation: the linear analog baseline.
//!
//! Each user scales a shared carrier `cos_{m0}` by its value; the receiver
//! correlates against the carrier bin and divides out the known gains.

use crate::channel::ChannelRealization;
use crate::error::{LogFskError, Result};
use crate::transform::{halfgrid_bin, symbol_len, RealSignal};
use crate::waveform::{cosine_basis, ModulationParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsbParams {
    /// Carrier symbol `m0`; the carrier sits in half-grid bin `2 m0 + 1`.
    pub carrier: usize,
    /// Common amplitude gain applied by every user.
    pub gain: f64,
    pub n_samples: usize,
}

impl DsbParams {
    pub fn new(carrier: usize, gain: f64, n_samples: usize) -> Result<Self> {
        if carrier >= n_samples {
            return Err(LogFskError::InvalidSymbol { symbol: carrier, max: n_samples - 1 });
        }
        Ok(Self { carrier, gain, n_samples })
    }

    fn carrier_params(&self) -> ModulationParams {
        ModulationParams { n_samples: self.n_samples, beta: 0.0, n_users: 1, mean_subtract: false }
    }

    /// Transmit power of a value `v`: `gain^2 v^2 / N`.
    pub fn power(&self, v: f64) -> f64 {
        self.gain * self.gain * v * v / self.n_samples as f64
    }
}

/// `gain * v * cos_{m0}[n]`.
pub fn dsb_modulate(value: f64, p: &DsbParams) -> Result<RealSignal> {
    if !value.is_finite() {
        return Err(LogFskError::Domain(format!("DSB value must be finite, got {value}")));
    }
    let carrier = cosine_basis(p.carrier, &p.carrier_params())?;
    Ok(carrier.scaled(p.gain * value))
}

/// Coherent correlator estimate of the sum of transmitted values.
pub fn dsb_estimate_sum(y: &RealSignal, p: &DsbParams, channel: &ChannelRealization) -> Result<f64> {
    if y.n_samples() != symbol_len(p.n_samples) {
        return Err(LogFskError::InvalidSize(format!(
            "expected {} samples, got {}",
            symbol_len(p.n_samples),
            y.n_samples()
        )));
    }
    let c = halfgrid_bin(y, 2 * p.carrier + 1)?;
    let amplitude = channel.rx_scale * p.gain * (2.0 / p.n_samples as f64).sqrt();
    Ok(c / amplitude)
}

/// Gain giving average predetection SNR `target` (linear) for data with `E[v^2] = second_moment`.
///
/// Solves `A_r^2 gain^2 E[v^2] / (N sigma_w^2) = target`.
pub fn calibrate_dsb_gain(
    second_moment: f64,
    target_snr: f64,
    noise_std: f64,
    rx_scale: f64,
    n_samples: usize,
) -> Result<f64> {
    if !(second_moment > 0.0) {
        return Err(LogFskError::Domain("degenerate data distribution: E[v^2] = 0".into()));
    }
    if !(rx_scale > 0.0 && target_snr >= 0.0) {
        return Err(LogFskError::Domain("DSB calibration needs A_r > 0 and SNR >= 0".into()));
    }
    Ok(noise_std * (n_samples as f64 * target_snr / second_moment).sqrt() / rx_scale)
}
