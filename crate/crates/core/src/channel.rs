//! Block flat-fading multiple-access channel with receiver AWGN.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{LogFskError, Result};
use crate::theory::{power_control, PowerBudget};
use crate::transform::RealSignal;
use crate::waveform::{logfsk_power, ModulationParams};

/// A reproducible random stream: equal `(seed, stream)` pairs replay equal samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

/// Stream namespaces, kept disjoint so e.g. channel draws can be shared across cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum StreamPurpose {
    Data = 1,
    Channel = 2,
    Noise = 3,
    Auxiliary = 4,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Stream id packing `purpose` (8 bits), `point` (16 bits) and `trial` (40 bits).
    pub fn for_trial(seed: u64, purpose: StreamPurpose, point: usize, trial: usize) -> Self {
        let id = ((purpose as u64) << 56) | (((point as u64) & 0xFFFF) << 40) | (trial as u64 & 0xFF_FFFF_FFFF);
        Self::new(seed, id)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// One Rayleigh gain: in-phase and quadrature parts are independent `N(0, 1)`.
pub fn sample_rayleigh<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// Per-user gains, transmit scales and receiver scale for one symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub gains: Vec<Complex64>,
    /// Complex transmit scales `A_k`; zero marks a silent user.
    pub tx_scales: Vec<Complex64>,
    /// Receiver scale `A_r > 0`.
    pub rx_scale: f64,
    pub noise_std: f64,
}

impl ChannelRealization {
    /// Unit gains, every user compensated to `A_r`.
    pub fn awgn(n_users: usize, rx_scale: f64, noise_std: f64) -> Self {
        Self {
            gains: vec![Complex64::new(1.0, 0.0); n_users],
            tx_scales: vec![Complex64::new(rx_scale, 0.0); n_users],
            rx_scale,
            noise_std,
        }
    }

    /// Threshold power control with phase pre-compensation; `A_r = sqrt(P_R)`.
    pub fn with_power_control(gains: Vec<Complex64>, budget: &PowerBudget, noise_std: f64) -> Self {
        let tx_scales = gains
            .iter()
            .map(|h| match power_control(h.norm(), budget) {
                Some(mag) => Complex64::from_polar(mag, -h.arg()),
                None => Complex64::new(0.0, 0.0),
            })
            .collect();
        Self { gains, tx_scales, rx_scale: budget.p_r.sqrt(), noise_std }
    }

    pub fn n_users(&self) -> usize {
        self.gains.len()
    }

    pub fn is_active(&self, k: usize) -> bool {
        self.tx_scales[k].norm() > 0.0
    }

    pub fn active_users(&self) -> usize {
        (0..self.n_users()).filter(|&k| self.is_active(k)).count()
    }

    pub fn silent_users(&self) -> usize {
        self.n_users() - self.active_users()
    }

    /// Real-baseband gain `Re{A_k h_k}` seen by user `k`.
    pub fn effective_gain(&self, k: usize) -> f64 {
        (self.tx_scales[k] * self.gains[k]).re
    }

    /// Transmit power scale `|A_k|^2`.
    pub fn tx_power_scale(&self, k: usize) -> f64 {
        self.tx_scales[k].norm_sqr()
    }
}

/// `y[n] = sum_k Re{A_k h_k} x_k[n] + w[n]`, `w ~ N(0, sigma_w^2)`.
pub fn mac_superpose<R: Rng + ?Sized>(
    waveforms: &[RealSignal],
    channel: &ChannelRealization,
    rng: &mut R,
) -> Result<RealSignal> {
    if waveforms.len() != channel.n_users() {
        return Err(LogFskError::InvalidSize(format!(
            "{} waveforms for {} channel gains",
            waveforms.len(),
            channel.n_users()
        )));
    }
    let len = waveforms.first().map(RealSignal::n_samples).unwrap_or(0);
    if len == 0 || waveforms.iter().any(|w| w.n_samples() != len) {
        return Err(LogFskError::InvalidSize("waveform lengths differ".into()));
    }
    let mut y = vec![0.0; len];
    for (k, w) in waveforms.iter().enumerate() {
        let g = channel.effective_gain(k);
        if g != 0.0 {
            y.iter_mut().zip(w.samples()).for_each(|(acc, x)| *acc += g * x);
        }
    }
    add_noise(&mut y, channel.noise_std, rng);
    RealSignal::new(y)
}

pub(crate) fn add_noise<R: Rng + ?Sized>(y: &mut [f64], std: f64, rng: &mut R) {
    if std > 0.0 {
        for v in y.iter_mut() {
            let w: f64 = rng.sample(StandardNormal);
            *v += std * w;
        }
    }
}

/// Predetection SNR `P_log |A_k|^2 |h_k|^2 / sigma_w^2` in dB; `+inf` when noiseless.
pub fn received_snr(params: &ModulationParams, tx_scale: Complex64, gain: Complex64, noise_std: f64) -> Result<f64> {
    let p_log = logfsk_power(params)?;
    if noise_std == 0.0 {
        return Ok(f64::INFINITY);
    }
    let snr = p_log * tx_scale.norm_sqr() * gain.norm_sqr() / (noise_std * noise_std);
    Ok(10.0 * snr.log10())
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_is_deterministic() {
        let s = RngStream::new(7, 3);
        let a = sample_rayleigh(&mut s.rng());
        let b = sample_rayleigh(&mut s.rng());
        assert_eq!(a, b);
        let c = sample_rayleigh(&mut RngStream::new(7, 4).rng());
        assert_ne!(a, c);
    }

    #[test]
    fn rayleigh_power_moments() {
        let mut rng = RngStream::new(1, 0).rng();
        let mut p: Vec<f64> = (0..100_000).map(|_| sample_rayleigh(&mut rng).norm_sqr()).collect();
        let mean = p.iter().sum::<f64>() / p.len() as f64;
        assert!((mean - 2.0).abs() < 0.04, "mean {mean}");
        p.sort_by(f64::total_cmp);
        let median = p[p.len() / 2];
        assert!((median / (2.0 * 2f64.ln()) - 1.0).abs() < 0.03, "median {median}");
    }

    #[test]
    fn single_noiseless_user_passes_through() {
        let x = RealSignal::new(vec![0.5, -1.0, 2.0]).unwrap();
        let ch = ChannelRealization::awgn(1, 1.0, 0.0);
        let y = mac_superpose(std::slice::from_ref(&x), &ch, &mut RngStream::new(0, 0).rng()).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn noise_variance_matches() {
        let ch = ChannelRealization::awgn(1, 1.0, 0.7);
        let x = RealSignal::zeros(100_001);
        let y = mac_superpose(&[x], &ch, &mut RngStream::new(2, 0).rng()).unwrap();
        let v = y.samples().iter().map(|s| s * s).sum::<f64>() / y.n_samples() as f64;
        assert!((v / 0.49 - 1.0).abs() < 0.02, "variance {v}");
    }

    #[test]
    fn length_mismatch_rejected() {
        let ch = ChannelRealization::awgn(2, 1.0, 0.0);
        let a = RealSignal::zeros(5);
        let b = RealSignal::zeros(7);
        let mut rng = RngStream::new(0, 0).rng();
        assert!(mac_superpose(std::slice::from_ref(&a), &ch, &mut rng).is_err());
        assert!(mac_superpose(&[a, b], &ch, &mut rng).is_err());
    }

    #[test]
    fn power_control_compensates_phase() {
        let gains = vec![Complex64::new(0.3, -1.2), Complex64::new(0.01, 0.0)];
        let budget = PowerBudget { p_k: 10.0, p_r: 1.0 };
        let ch = ChannelRealization::with_power_control(gains, &budget, 0.1);
        let prod = ch.tx_scales[0] * ch.gains[0];
        assert!((prod - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(!ch.is_active(1));
        assert_eq!(ch.active_users(), 1);
    }

    #[test]
    fn snr_definition() {
        let p = ModulationParams::with_default_beta(256, 1).unwrap();
        let p_log = logfsk_power(&p).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let s0 = received_snr(&p, one, one, p_log.sqrt()).unwrap();
        assert!(s0.abs() < 1e-12);
        let s1 = received_snr(&p, Complex64::new(2f64.sqrt(), 0.0), one, p_log.sqrt()).unwrap();
        assert!((s1 - 3.0103).abs() < 1e-4);
        assert_eq!(received_snr(&p, one, one, 0.0).unwrap(), f64::INFINITY);
    }
}
