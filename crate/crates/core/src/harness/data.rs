use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::channel::{add_noise, ChannelRealization};
use crate::error::{LogFskError, Result};
use crate::functions::{FunctionKind, FunctionSpec};
use crate::transform::RealSignal;
use crate::waveform::{logfsk_modulate, ModulationParams};

/// Per-user data model.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataDistribution {
    /// Integer symbols drawn uniformly from the per-user alphabet and sent as-is.
    #[default]
    Symbols,
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Normal draws clipped to `[lo, hi]`.
    Gaussian {
        mean: f64,
        std: f64,
        lo: f64,
        hi: f64,
    },
}

impl DataDistribution {
    pub fn validate(&self, function: &FunctionSpec) -> Result<()> {
        let err = |m: String| Err(LogFskError::Config(m));
        match *self {
            DataDistribution::Symbols => {
                if matches!(function.kind, FunctionKind::Product | FunctionKind::MaxLogSumExp) {
                    return err(format!("{:?} needs a real-valued distribution", function.kind));
                }
            }
            DataDistribution::Uniform { lo, hi } | DataDistribution::Gaussian { lo, hi, .. } => {
                if !(lo < hi) {
                    return err(format!("distribution range needs lo < hi, got [{lo}, {hi}]"));
                }
                if function.kind == FunctionKind::Product && lo <= 0.0 {
                    return err("product needs a strictly positive data range".into());
                }
                if let DataDistribution::Gaussian { std, .. } = *self {
                    if !(std > 0.0) {
                        return err(format!("gaussian std must be positive, got {std}"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_symbols(&self) -> bool {
        matches!(self, DataDistribution::Symbols)
    }

    /// Support `[lo, hi]` of the data.
    pub fn range(&self, params: &ModulationParams) -> (f64, f64) {
        match *self {
            DataDistribution::Symbols => (0.0, params.max_symbol() as f64),
            DataDistribution::Uniform { lo, hi } | DataDistribution::Gaussian { lo, hi, .. } => (lo, hi),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, params: &ModulationParams) -> f64 {
        match *self {
            DataDistribution::Symbols => rng.random_range(0..=params.max_symbol()) as f64,
            DataDistribution::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            DataDistribution::Gaussian { mean, std, lo, hi } => {
                let z: f64 = rng.sample(StandardNormal);
                (mean + std * z).clamp(lo, hi)
            }
        }
    }

    /// `E[f(v)^2]` under this distribution, by exact sum or quadrature.
    pub fn second_moment<F: Fn(f64) -> f64>(&self, f: F, params: &ModulationParams) -> f64 {
        let sq = |v: f64| f(v).powi(2);
        match *self {
            DataDistribution::Symbols => {
                let m = params.max_symbol();
                (0..=m).map(|s| sq(s as f64)).sum::<f64>() / (m + 1) as f64
            }
            DataDistribution::Uniform { lo, hi } => simpson(&sq, lo, hi) / (hi - lo),
            DataDistribution::Gaussian { mean, std, lo, hi } => {
                let nd = Normal::new(mean, std).expect("validated std");
                simpson(&|v| sq(v) * nd.pdf(v), lo, hi) + sq(lo) * nd.cdf(lo) + sq(hi) * (1.0 - nd.cdf(hi))
            }
        }
    }
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let n = 4000;
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + f(b) + inner) * h / 3.0
}

/// Precomputed Log-FSK symbols for one parameter set.
#[derive(Debug, Clone)]
pub struct SymbolBank {
    params: ModulationParams,
    waves: Vec<Vec<f64>>,
}

impl SymbolBank {
    /// Covers symbols `0..=max_symbol` for `params`.
    pub fn new(params: &ModulationParams) -> Result<Self> {
        let waves = (0..=params.max_symbol())
            .map(|m| logfsk_modulate(m, params).map(RealSignal::into_vec))
            .collect::<Result<_>>()?;
        Ok(Self { params: *params, waves })
    }

    pub fn params(&self) -> &ModulationParams {
        &self.params
    }

    pub fn wave(&self, m: usize) -> &[f64] {
        &self.waves[m]
    }

    /// Channel output for one symbol tuple, noise drawn from `rng`.
    pub fn transmit<R: Rng + ?Sized>(
        &self,
        symbols: &[usize],
        channel: &ChannelRealization,
        rng: &mut R,
    ) -> RealSignal {
        let mut y = vec![0.0; self.params.symbol_len()];
        for (k, &m) in symbols.iter().enumerate() {
            let g = channel.effective_gain(k);
            if g != 0.0 {
                y.iter_mut().zip(&self.waves[m]).for_each(|(acc, x)| *acc += g * x);
            }
        }
        add_noise(&mut y, channel.noise_std, rng);
        RealSignal::from_finite(y)
    }
}
