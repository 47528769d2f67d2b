//! Log-FSK waveform generation and measurements.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{LogFskError, Result};
use crate::transform::{
    halfgrid_decompose, halfgrid_energies, halfgrid_synthesize, largest_indices, symbol_len, window_mean, RealSignal,
    Truncation,
};

/// Static system description shared by every stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationParams {
    /// `N`: alphabet size and grid base.
    pub n_samples: usize,
    /// Cosine scaling, `0 <= beta < sqrt(N/2)`.
    pub beta: f64,
    /// `K`: number of simultaneously transmitting users.
    pub n_users: usize,
    /// Remove the known mean before transmission.
    pub mean_subtract: bool,
}

/// Default scaling relative to the `sqrt(N/2)` limit.
pub const DEFAULT_BETA_SCALE: f64 = 0.99;

impl ModulationParams {
    pub fn new(n_samples: usize, beta: f64, n_users: usize) -> Result<Self> {
        let p = Self { n_samples, beta, n_users, mean_subtract: true };
        p.validate()?;
        Ok(p)
    }

    /// `beta = 0.99 * sqrt(N/2)`.
    pub fn with_default_beta(n_samples: usize, n_users: usize) -> Result<Self> {
        Self::new(n_samples, DEFAULT_BETA_SCALE * (n_samples as f64 / 2.0).sqrt(), n_users)
    }

    /// `beta = scale * sqrt(N/2)`.
    pub fn with_beta_scale(n_samples: usize, scale: f64, n_users: usize) -> Result<Self> {
        Self::new(n_samples, scale * (n_samples as f64 / 2.0).sqrt(), n_users)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 {
            return Err(LogFskError::InvalidSize(format!("N must be >= 2, got {}", self.n_samples)));
        }
        if self.n_users == 0 || self.n_users > self.n_samples {
            return Err(LogFskError::Domain(format!(
                "K must lie in [1, N], got K={} with N={}",
                self.n_users, self.n_samples
            )));
        }
        if !(self.beta >= 0.0 && self.depth() < 1.0) {
            return Err(LogFskError::Domain(format!(
                "beta must satisfy 0 <= beta < sqrt(N/2) = {:.6}, got {}",
                (self.n_samples as f64 / 2.0).sqrt(),
                self.beta
            )));
        }
        Ok(())
    }

    pub fn with_users(&self, n_users: usize) -> Self {
        Self { n_users, ..*self }
    }

    /// Modulation depth `a = beta * sqrt(2/N)`, the peak of `beta * cos_m`.
    pub fn depth(&self) -> f64 {
        self.beta * (2.0 / self.n_samples as f64).sqrt()
    }

    pub fn symbol_len(&self) -> usize {
        symbol_len(self.n_samples)
    }

    /// Half-grid bins below the fold-over frequency.
    pub fn grid_size(&self) -> usize {
        2 * self.n_samples
    }

    /// Largest per-user symbol, `floor((N - K) / K)`.
    pub fn max_symbol(&self) -> usize {
        (self.n_samples - self.n_users) / self.n_users
    }

    /// Largest admissible sum, `N - K`.
    pub fn max_sum(&self) -> usize {
        self.n_samples - self.n_users
    }

    /// Ratio of the symbol window span (`2N`) to `N`.
    ///
    /// Unit-norm bin coefficients carry `sqrt(gain)` times the signal of an
    /// `N`-sample observation while the noise variance is unchanged.
    pub fn observation_gain(&self) -> f64 {
        2.0
    }

    pub fn check_symbol(&self, m: usize) -> Result<()> {
        if m > self.max_symbol() {
            return Err(LogFskError::InvalidSymbol { symbol: m, max: self.max_symbol() });
        }
        Ok(())
    }
}

/// `cos_m[n] = sqrt(2/N) cos(pi (2m+1) n / (2N))` over the symbol window.
pub fn cosine_basis(m: usize, params: &ModulationParams) -> Result<RealSignal> {
    let n = params.n_samples;
    if m >= n {
        return Err(LogFskError::InvalidSymbol { symbol: m, max: n - 1 });
    }
    Ok(RealSignal::from_finite(basis_samples(m, n)))
}

fn basis_samples(m: usize, n: usize) -> Vec<f64> {
    let scale = (2.0 / n as f64).sqrt();
    let g = 2 * m + 1;
    (0..symbol_len(n)).map(|i| scale * (PI * ((g * i) % (4 * n)) as f64 / (2 * n) as f64).cos()).collect()
}

/// Log-FSK symbol `log(beta cos_m[n] + 1)`, minus its mean when enabled.
pub fn logfsk_modulate(m: usize, params: &ModulationParams) -> Result<RealSignal> {
    params.validate()?;
    params.check_symbol(m)?;
    let offset = if params.mean_subtract { signal_mean(params)? } else { 0.0 };
    let samples = basis_samples(m, params.n_samples).into_iter().map(|c| (params.beta * c).ln_1p() - offset).collect();
    Ok(RealSignal::from_finite(samples))
}

/// Closed-form mean `log((1 + sqrt(1 - a^2)) / 2)` of the Log-FSK symbol.
pub fn signal_mean(params: &ModulationParams) -> Result<f64> {
    mean_for_depth(params.depth())
}

/// [`signal_mean`] expressed through the depth `a`; valid up to and including `a = 1`.
pub fn mean_for_depth(a: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) {
        return Err(LogFskError::Domain(format!("depth a = {a} outside [0, 1]")));
    }
    Ok(((1.0 + (1.0 - a * a).sqrt()) / 2.0).ln())
}

/// One harmonic of the Log-FSK line spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralLine {
    pub harmonic: usize,
    /// Half-grid index `i (2m+1)`, folded into `[0, 2N]`.
    pub grid_index: usize,
    /// Exact coefficient `2 (-1)^(i+1) r^i / i` with `r = a / (1 + sqrt(1 - a^2))`.
    pub amplitude: f64,
    /// Leading-order coefficient `2 (-1)^(i+1) (beta / sqrt(2N))^i / i`.
    pub leading_order: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSpectrum {
    pub symbol: usize,
    pub dc: f64,
    pub lines: Vec<SpectralLine>,
}

fn fold_index(g: usize, n: usize) -> usize {
    let r = g % (4 * n);
    if r > 2 * n {
        4 * n - r
    } else {
        r
    }
}

/// Harmonic lines of `log(1 + a cos(theta))`, raw amplitude units.
pub fn theoretical_spectrum(m: usize, params: &ModulationParams, max_harmonic: usize) -> Result<LineSpectrum> {
    params.validate()?;
    if m >= params.n_samples {
        return Err(LogFskError::InvalidSymbol { symbol: m, max: params.n_samples - 1 });
    }
    if max_harmonic == 0 {
        return Err(LogFskError::InvalidSize("max_harmonic must be >= 1".into()));
    }
    let a = params.depth();
    let dc = signal_mean(params)?;
    if params.beta == 0.0 {
        return Ok(LineSpectrum { symbol: m, dc, lines: Vec::new() });
    }
    let r = a / (1.0 + (1.0 - a * a).sqrt());
    let half = params.beta / (2.0 * params.n_samples as f64).sqrt();
    let lines = (1..=max_harmonic)
        .map(|i| {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            SpectralLine {
                harmonic: i,
                grid_index: fold_index(i * (2 * m + 1), params.n_samples),
                amplitude: 2.0 * sign * r.powi(i as i32) / i as f64,
                leading_order: 2.0 * sign * half.powi(i as i32) / i as f64,
            }
        })
        .collect();
    Ok(LineSpectrum { symbol: m, dc, lines })
}

/// Rebuilds `logfsk_modulate(m)` from its `l` strongest half-grid tones.
///
/// Each kept tone is one linear oscillator. `l` ranges over `1..=2N+1`.
pub fn oscillator_synthesize(m: usize, params: &ModulationParams, l: usize) -> Result<Truncation> {
    let len = params.symbol_len();
    if l == 0 || l > len {
        return Err(LogFskError::InvalidSize(format!("L must lie in [1, {len}], got {l}")));
    }
    let x = logfsk_modulate(m, params)?;
    let coeffs = halfgrid_decompose(&x)?;
    let energies = halfgrid_energies(&coeffs);
    let total: f64 = energies.iter().sum();
    let kept = largest_indices(&energies, l);
    let mut masked = vec![0.0; coeffs.len()];
    let mut kept_energy = 0.0;
    for &g in &kept {
        masked[g] = coeffs[g];
        kept_energy += energies[g];
    }
    Ok(Truncation {
        signal: halfgrid_synthesize(&masked)?,
        retained_energy: if total > 0.0 { kept_energy / total } else { 0.0 },
        kept,
    })
}

/// Time-averaged power over the symbol window (trapezoid weights).
pub fn waveform_power(x: &RealSignal) -> f64 {
    let sq: Vec<f64> = x.samples().iter().map(|v| v * v).collect();
    window_mean(&sq)
}

/// Peak-to-average power ratio in dB.
pub fn papr(x: &RealSignal) -> Result<f64> {
    let power = waveform_power(x);
    if power <= 0.0 {
        return Err(LogFskError::ZeroSignal);
    }
    let peak = x.samples().iter().map(|v| v * v).fold(0.0, f64::max);
    Ok(10.0 * (peak / power).log10())
}

/// Transmit power of a Log-FSK symbol; identical for every symbol.
pub fn logfsk_power(params: &ModulationParams) -> Result<f64> {
    Ok(waveform_power(&logfsk_modulate(0, params)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::halfgrid_analysis;

    fn params(n: usize, beta: f64) -> ModulationParams {
        ModulationParams::new(n, beta, 1).unwrap()
    }

    #[test]
    fn basis_starts_at_sqrt_two_over_n() {
        let c = cosine_basis(0, &params(8, 1.0)).unwrap();
        assert!((c.samples()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn basis_is_a_single_tone() {
        let c = cosine_basis(5, &params(64, 1.0)).unwrap();
        let spec = halfgrid_analysis(&c, 128).unwrap();
        for g in 0..128 {
            let want = if g == 11 { (2.0f64 / 64.0).sqrt() } else { 0.0 };
            assert!((spec.bin(g) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn basis_power_is_one_over_n() {
        for n in [8, 64] {
            for m in 0..n {
                let c = cosine_basis(m, &params(n, 1.0)).unwrap();
                assert!((waveform_power(&c) - 1.0 / n as f64).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_beta_gives_zero_waveform() {
        let mut p = params(16, 0.0);
        p.mean_subtract = false;
        let x = logfsk_modulate(3, &p).unwrap();
        assert!(x.samples().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn first_sample_without_mean_subtraction() {
        let mut p = params(256, 5.0);
        p.mean_subtract = false;
        let x = logfsk_modulate(7, &p).unwrap();
        assert!((x.samples()[0] - (p.depth() + 1.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn beta_at_limit_is_rejected() {
        let p = ModulationParams { n_samples: 8, beta: 2.0, n_users: 1, mean_subtract: true };
        assert!(matches!(logfsk_modulate(0, &p), Err(LogFskError::Domain(_))));
    }

    #[test]
    fn mean_closed_form_values() {
        assert_eq!(mean_for_depth(0.0).unwrap(), 0.0);
        assert!((mean_for_depth(1.0).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        assert!((mean_for_depth(0.6).unwrap() - 0.9f64.ln()).abs() < 1e-15);
        assert!(mean_for_depth(1.01).is_err());
    }

    #[test]
    fn asymmetric_range() {
        let p = ModulationParams::with_default_beta(256, 1).unwrap();
        let x = logfsk_modulate(5, &p).unwrap();
        let max = x.samples().iter().cloned().fold(f64::MIN, f64::max);
        let min = x.samples().iter().cloned().fold(f64::MAX, f64::min);
        assert!((max + min).abs() > 0.5);
    }

    #[test]
    fn symbol_outside_alphabet() {
        let p = ModulationParams::with_default_beta(64, 2).unwrap();
        assert_eq!(p.max_symbol(), 31);
        assert!(logfsk_modulate(31, &p).is_ok());
        assert!(matches!(logfsk_modulate(32, &p), Err(LogFskError::InvalidSymbol { .. })));
    }

    #[test]
    fn spectrum_first_harmonic_and_decay() {
        let p = params(256, 0.3 * 128f64.sqrt());
        let s = theoretical_spectrum(4, &p, 4).unwrap();
        assert!((s.lines[0].leading_order - p.depth()).abs() < 1e-15);
        assert_eq!(s.lines[1].grid_index, 18);
        for w in s.lines.windows(2) {
            assert!(w[1].amplitude.abs() < w[0].amplitude.abs());
        }
        let empty = theoretical_spectrum(4, &params(256, 0.0), 3).unwrap();
        assert!(empty.lines.is_empty());
    }

    #[test]
    fn full_oscillator_bank_is_exact() {
        let p = ModulationParams::with_default_beta(32, 1).unwrap();
        let x = logfsk_modulate(3, &p).unwrap();
        let t = oscillator_synthesize(3, &p, p.symbol_len()).unwrap();
        assert!((t.retained_energy - 1.0).abs() < 1e-12);
        for (a, b) in t.signal.samples().iter().zip(x.samples()) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(oscillator_synthesize(3, &p, 0).is_err());
    }

    #[test]
    fn papr_reference_values() {
        let c = cosine_basis(9, &params(256, 1.0)).unwrap();
        assert!((papr(&c).unwrap() - 10.0 * 2f64.log10()).abs() < 0.01);
        let flat = RealSignal::new(vec![2.0; 9]).unwrap();
        assert!(papr(&flat).unwrap().abs() < 1e-12);
        assert_eq!(papr(&RealSignal::zeros(9)), Err(LogFskError::ZeroSignal));
    }
}
