//! Nomographic pre/post-processing around the channel sum.
//!
//! A function `f(v_1..v_K) = psi(sum_k phi(v_k))` is computed by quantising
//! `phi(v_k)` onto the per-user alphabet, letting the receiver detect the symbol
//! sum, and applying `psi` to the dequantised sum.

use serde::{Deserialize, Serialize};

use crate::error::{LogFskError, Result};
use crate::receiver::DemodMode;
use crate::waveform::ModulationParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionKind {
    Sum,
    Product,
    MaxExact2User,
    MaxLogSumExp,
    Difference,
    DetectEvent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub kind: FunctionKind,
    /// Event threshold for `detect_event`.
    #[serde(default)]
    pub theta: f64,
    /// Shift applied before `exp` in `max_log_sum_exp`; usually the top of the data range.
    #[serde(default)]
    pub offset: f64,
}

impl FunctionSpec {
    pub fn new(kind: FunctionKind) -> Self {
        Self { kind, theta: 0.0, offset: 0.0 }
    }

    pub fn sum() -> Self {
        Self::new(FunctionKind::Sum)
    }

    pub fn detect_event(theta: f64) -> Self {
        Self { theta, ..Self::new(FunctionKind::DetectEvent) }
    }

    pub fn max_log_sum_exp(offset: f64) -> Self {
        Self { offset, ..Self::new(FunctionKind::MaxLogSumExp) }
    }

    /// Inner function `phi`.
    pub fn preprocess(&self, v: f64) -> Result<f64> {
        match self.kind {
            FunctionKind::Product => {
                if v <= 0.0 {
                    return Err(LogFskError::Domain(format!("product needs v > 0, got {v}")));
                }
                Ok(v.ln())
            }
            FunctionKind::MaxLogSumExp => Ok((v - self.offset).exp()),
            _ => Ok(v),
        }
    }

    /// Outer function `psi`.
    pub fn postprocess(&self, s: f64) -> f64 {
        match self.kind {
            FunctionKind::Product => s.exp(),
            FunctionKind::MaxLogSumExp => s.max(f64::MIN_POSITIVE).ln() + self.offset,
            _ => s,
        }
    }

    /// Ground-truth function value of real inputs.
    pub fn evaluate(&self, values: &[f64]) -> f64 {
        match self.kind {
            FunctionKind::Sum => values.iter().sum(),
            FunctionKind::Product => values.iter().product(),
            FunctionKind::MaxExact2User | FunctionKind::MaxLogSumExp => {
                values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            }
            FunctionKind::Difference | FunctionKind::DetectEvent => match values {
                [a, b] => (a - b).abs(),
                _ => f64::NAN,
            },
        }
    }

    /// Receiver detector the function needs.
    pub fn demod_mode(&self) -> DemodMode {
        match self.kind {
            FunctionKind::MaxExact2User => DemodMode::Max,
            FunctionKind::Difference | FunctionKind::DetectEvent => DemodMode::Difference,
            _ => DemodMode::Sum,
        }
    }

    pub fn needs_two_users(&self) -> bool {
        matches!(self.kind, FunctionKind::MaxExact2User | FunctionKind::Difference | FunctionKind::DetectEvent)
    }

    /// Quantiser over `phi([lo, hi])` sized to the per-user alphabet.
    pub fn quantizer(&self, lo: f64, hi: f64, params: &ModulationParams) -> Result<Quantizer> {
        let (a, b) = (self.preprocess(lo)?, self.preprocess(hi)?);
        Ok(Quantizer::new(a.min(b), a.max(b), params.max_symbol() + 1))
    }
}

/// Uniform quantiser with `levels` symbols spanning `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantizer {
    pub lo: f64,
    pub hi: f64,
    pub levels: usize,
}

impl Quantizer {
    pub fn new(lo: f64, hi: f64, levels: usize) -> Self {
        Self { lo, hi, levels: levels.max(1) }
    }

    /// Per-user alphabet of `params`: `floor((N-K)/K) + 1` levels.
    pub fn for_params(lo: f64, hi: f64, params: &ModulationParams) -> Self {
        Self::new(lo, hi, params.max_symbol() + 1)
    }

    pub fn step(&self) -> f64 {
        if self.levels < 2 || self.hi <= self.lo {
            0.0
        } else {
            (self.hi - self.lo) / (self.levels - 1) as f64
        }
    }

    pub fn max_symbol(&self) -> usize {
        self.levels - 1
    }
}

/// Nearest level, halves rounding up; inputs are clamped to the range.
pub fn quantize(v: f64, q: &Quantizer) -> usize {
    let step = q.step();
    if step == 0.0 {
        return 0;
    }
    let t = (v.clamp(q.lo, q.hi) - q.lo) / step;
    ((t + 0.5).floor() as usize).min(q.max_symbol())
}

pub fn dequantize(symbol: usize, q: &Quantizer) -> f64 {
    q.lo + symbol as f64 * q.step()
}

/// Transmitter side: `quantize(phi(v))`.
pub fn encode(v: f64, spec: &FunctionSpec, q: &Quantizer) -> Result<usize> {
    Ok(quantize(spec.preprocess(v)?, q))
}

/// Receiver side: function value from the detected symbol sum (and difference for two-user tasks).
pub fn decode(
    sum_hat: usize,
    difference_hat: Option<usize>,
    spec: &FunctionSpec,
    q: &Quantizer,
    n_users: usize,
) -> Result<f64> {
    let need_diff = || {
        difference_hat.ok_or_else(|| LogFskError::Unsupported(format!("{:?} needs a detected difference", spec.kind)))
    };
    Ok(match spec.kind {
        FunctionKind::MaxExact2User => dequantize((sum_hat + need_diff()?) / 2, q),
        FunctionKind::Difference | FunctionKind::DetectEvent => need_diff()? as f64 * q.step(),
        _ => spec.postprocess(n_users as f64 * q.lo + sum_hat as f64 * q.step()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Hypothesis {
    H0,
    H1,
}

/// `H1` iff the detected difference exceeds `theta`.
pub fn detect_event(difference_hat: usize, theta: f64) -> Hypothesis {
    if difference_hat as f64 > theta {
        Hypothesis::H1
    } else {
        Hypothesis::H0
    }
}
