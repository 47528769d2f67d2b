//! Closed-form predictors: sum-tone amplitude, log-normal noise moments,
//! destination SNR, error probability, MSE and the power-control rule.
//!
//! SNR and noise quantities here refer to an `N`-sample observation with
//! unit-norm bins. The receiver observes `2N` sample spans, which multiplies the
//! destination SNR by [`ModulationParams::observation_gain`]; both figures are
//! reported side by side.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{LogFskError, Result};
use crate::transform::{symbol_len, trapezoid_weight, window_mean};
use crate::waveform::{cosine_basis, ModulationParams};

/// Per-user transmit cap `P_k` and receive target `P_R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerBudget {
    pub p_k: f64,
    pub p_r: f64,
}

impl PowerBudget {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_k > 0.0 && self.p_r > 0.0) {
            return Err(LogFskError::Domain(format!(
                "power caps must be positive, got P_k={} P_R={}",
                self.p_k, self.p_r
            )));
        }
        Ok(())
    }

    /// Probability that a Rayleigh user (`|h|^2 ~ Exp(mean 2)`) stays silent.
    pub fn rayleigh_silence_probability(&self) -> f64 {
        -(-self.p_r / (2.0 * self.p_k)).exp_m1()
    }
}

/// Transmit magnitude `sqrt(P_R) / |h|`, or `None` when that would exceed `P_k`.
pub fn power_control(h_abs: f64, budget: &PowerBudget) -> Option<f64> {
    if h_abs <= 0.0 {
        return None;
    }
    let required = budget.p_r / (h_abs * h_abs);
    (required <= budget.p_k).then(|| budget.p_r.sqrt() / h_abs)
}

/// Noiseless sum-tone amplitude `A_S = sqrt(2N) (beta / sqrt(2N))^K`.
pub fn amplitude_at_sum(params: &ModulationParams) -> f64 {
    let two_n = 2.0 * params.n_samples as f64;
    two_n.sqrt() * (params.beta / two_n.sqrt()).powi(params.n_users as i32)
}

/// `(mu_z, sigma_z^2)` of `z = exp(w / A_r)`.
pub fn lognormal_params(noise_std: f64, rx_scale: f64) -> Result<(f64, f64)> {
    if rx_scale <= 0.0 {
        return Err(LogFskError::Domain(format!("A_r must be positive, got {rx_scale}")));
    }
    let s = (noise_std / rx_scale).powi(2);
    Ok(((0.5 * s).exp(), s.exp() * s.exp_m1()))
}

/// Noiseless received product `prod_k (beta cos_{m_k}[n] + 1)` over the symbol window.
pub fn noiseless_product(measurements: &[usize], params: &ModulationParams) -> Result<Vec<f64>> {
    let mut p = vec![1.0; symbol_len(params.n_samples)];
    for &m in measurements {
        let c = cosine_basis(m, params)?;
        p.iter_mut().zip(c.samples()).for_each(|(acc, v)| *acc *= 1.0 + params.beta * v);
    }
    Ok(p)
}

/// Time-average power of the noiseless product.
pub fn p_p_exact(measurements: &[usize], params: &ModulationParams) -> Result<f64> {
    let p = noiseless_product(measurements, params)?;
    let sq: Vec<f64> = p.iter().map(|v| v * v).collect();
    Ok(window_mean(&sq))
}

/// `(beta^2 + 1)^K`, a coarse approximation used by the closed-form SNR.
pub fn p_p_quadratic(params: &ModulationParams) -> f64 {
    (params.beta * params.beta + 1.0).powi(params.n_users as i32)
}

/// `(beta + 1)^K`, an alternative coarse approximation.
pub fn p_p_linear(params: &ModulationParams) -> f64 {
    (params.beta + 1.0).powi(params.n_users as i32)
}

/// `(1 + beta^2 / N)^K`: exact for `K = 1`, and for `K > 1` when the users' tones do not interact.
pub fn p_p_independent(params: &ModulationParams) -> f64 {
    (1.0 + params.beta * params.beta / params.n_samples as f64).powi(params.n_users as i32)
}

/// Bias `mu_eps = A_S (mu_z - 1)` and variance `sigma_eps^2 = sigma_z^2 P_p` of the sum-bin noise.
pub fn noise_stats(
    params: &ModulationParams,
    noise_std: f64,
    rx_scale: f64,
    measurements: &[usize],
) -> Result<(f64, f64)> {
    let (mu_z, s2_z) = lognormal_params(noise_std, rx_scale)?;
    let pp = p_p_exact(measurements, params)?;
    Ok((amplitude_at_sum(params) * (mu_z - 1.0), s2_z * pp))
}

/// Exact variance of the unit-norm coefficient of bin `g` (`1 <= g < 2N`).
///
/// Equals `sigma_z^2 / N * sum_n w_n^2 p[n]^2 cos^2(pi g n / 2N)`; on the signal
/// bins it exceeds the flat `sigma_z^2 P_p` level because `p^2` carries a
/// component at twice the bin frequency.
pub fn bin_noise_variance(
    params: &ModulationParams,
    measurements: &[usize],
    g: usize,
    noise_std: f64,
    rx_scale: f64,
) -> Result<f64> {
    let n = params.n_samples;
    if g == 0 || g >= 2 * n {
        return Err(LogFskError::InvalidIndex { index: g, bound: 2 * n });
    }
    let (_, s2_z) = lognormal_params(noise_std, rx_scale)?;
    let p = noiseless_product(measurements, params)?;
    let len = p.len();
    let sum: f64 = p
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let w = trapezoid_weight(i, len);
            let c = (std::f64::consts::PI * ((g * i) % (4 * n)) as f64 / (2 * n) as f64).cos();
            w * w * v * v * c * c
        })
        .sum();
    Ok(s2_z * sum / n as f64)
}

/// `A_S^2 / (sigma_z^2 P_p)`; `+inf` when noiseless.
pub fn snr_destination(params: &ModulationParams, noise_std: f64, rx_scale: f64, p_p: f64) -> Result<f64> {
    let (_, s2_z) = lognormal_params(noise_std, rx_scale)?;
    if s2_z == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(amplitude_at_sum(params).powi(2) / (s2_z * p_p))
}

fn closed_form_prefactor(params: &ModulationParams) -> f64 {
    let k = params.n_users as i32;
    params.beta.powi(2 * k) / ((2.0 * params.n_samples as f64).powi(k - 1) * (params.beta * params.beta + 1.0).powi(k))
}

/// Closed form with `P_p = (beta^2+1)^K`: prefactor times `exp(-s) / (exp(s) - 1)`, `s = sigma_w^2 / A_r^2`.
pub fn snr_destination_closed_form(params: &ModulationParams, noise_std: f64, rx_scale: f64) -> Result<f64> {
    let s = noise_ratio(noise_std, rx_scale)?;
    if s == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(closed_form_prefactor(params) * (-s).exp() / s.exp_m1())
}

/// High-SNR form of the closed form, with the noise factor replaced by `(A_r^2 / sigma_w^2)^2`.
pub fn snr_destination_high(params: &ModulationParams, noise_std: f64, rx_scale: f64) -> Result<f64> {
    let s = noise_ratio(noise_std, rx_scale)?;
    if s == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(closed_form_prefactor(params) / (s * s))
}

/// First-order expansion of the closed form: the noise factor becomes `A_r^2 / sigma_w^2`.
pub fn snr_destination_first_order(params: &ModulationParams, noise_std: f64, rx_scale: f64) -> Result<f64> {
    let s = noise_ratio(noise_std, rx_scale)?;
    if s == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(closed_form_prefactor(params) / s)
}

fn noise_ratio(noise_std: f64, rx_scale: f64) -> Result<f64> {
    if rx_scale <= 0.0 {
        return Err(LogFskError::Domain(format!("A_r must be positive, got {rx_scale}")));
    }
    Ok((noise_std / rx_scale).powi(2))
}

/// Standard normal tail `Q(x) = erfc(x / sqrt 2) / 2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

fn check_sum(params: &ModulationParams, sum: usize) -> Result<usize> {
    let n = params.n_samples;
    if sum >= n {
        return Err(LogFskError::InvalidIndex { index: sum, bound: n });
    }
    Ok(n - sum)
}

/// `P_e = (N - S) Q(sqrt(SNR_S))`, clamped to `[0, 1]`.
pub fn error_probability(params: &ModulationParams, sum: usize, snr_sigma: f64) -> Result<f64> {
    let competitors = check_sum(params, sum)? as f64;
    Ok((competitors * q_function(snr_sigma.sqrt())).clamp(0.0, 1.0))
}

/// `MSE = (N-S)(N-S-1)(2(N-S)-1)/6 * Q(sqrt(SNR_S))`.
pub fn mse_prediction(params: &ModulationParams, sum: usize, snr_sigma: f64) -> Result<f64> {
    let c = check_sum(params, sum)? as f64;
    Ok(c * (c - 1.0) * (2.0 * c - 1.0) / 6.0 * q_function(snr_sigma.sqrt()))
}

/// All predictions for one operating point and symbol tuple.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryReport {
    pub a_sigma: f64,
    pub mu_z: f64,
    pub sigma2_z: f64,
    pub mu_eps: f64,
    pub sigma2_eps: f64,
    pub p_p_exact: f64,
    pub p_p_quadratic: f64,
    pub p_p_linear: f64,
    pub p_p_independent: f64,
    /// `A_S^2 / sigma_eps^2` with the exact `P_p`.
    pub snr_sigma: f64,
    pub snr_sigma_closed_form: f64,
    pub snr_sigma_high: f64,
    pub snr_sigma_first_order: f64,
    pub observation_gain: f64,
    /// `snr_sigma` scaled by the observation gain of the symbol window.
    pub snr_sigma_observed: f64,
    pub pe: f64,
    pub mse: f64,
}

impl TheoryReport {
    pub fn compute(params: &ModulationParams, noise_std: f64, rx_scale: f64, measurements: &[usize]) -> Result<Self> {
        params.validate()?;
        if measurements.len() != params.n_users {
            return Err(LogFskError::InvalidSize(format!(
                "{} measurements for K={}",
                measurements.len(),
                params.n_users
            )));
        }
        let sum: usize = measurements.iter().sum();
        let (mu_z, sigma2_z) = lognormal_params(noise_std, rx_scale)?;
        let pp = p_p_exact(measurements, params)?;
        let a_sigma = amplitude_at_sum(params);
        let snr_sigma = snr_destination(params, noise_std, rx_scale, pp)?;
        Ok(Self {
            a_sigma,
            mu_z,
            sigma2_z,
            mu_eps: a_sigma * (mu_z - 1.0),
            sigma2_eps: sigma2_z * pp,
            p_p_exact: pp,
            p_p_quadratic: p_p_quadratic(params),
            p_p_linear: p_p_linear(params),
            p_p_independent: p_p_independent(params),
            snr_sigma,
            snr_sigma_closed_form: snr_destination_closed_form(params, noise_std, rx_scale)?,
            snr_sigma_high: snr_destination_high(params, noise_std, rx_scale)?,
            snr_sigma_first_order: snr_destination_first_order(params, noise_std, rx_scale)?,
            observation_gain: params.observation_gain(),
            snr_sigma_observed: params.observation_gain() * snr_sigma,
            pe: error_probability(params, sum, snr_sigma)?,
            mse: mse_prediction(params, sum, snr_sigma)?,
        })
    }
}
