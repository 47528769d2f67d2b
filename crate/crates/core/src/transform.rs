//! Orthonormal DCT and the half-grid correlator bank.
//!
//! The half-grid bank works on a symbol window of `2N + 1` samples
//! (`n = 0..=2N`) with trapezoid weights (`1/2` at both ends). On that window
//! the tones `cos(pi * g * n / (2N))`, `g = 0..=2N`, are exactly orthogonal, so
//! every product of Log-FSK cosines decomposes without leakage.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{LogFskError, Result};

/// A finite real sample vector.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSignal {
    samples: Vec<f64>,
}

impl RealSignal {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(LogFskError::InvalidSize("empty signal".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(LogFskError::Domain(format!("non-finite sample at n={i}")));
        }
        Ok(Self { samples })
    }

    pub fn zeros(len: usize) -> Self {
        Self { samples: vec![0.0; len.max(1)] }
    }

    /// Builds a signal from values already known to be finite.
    pub(crate) fn from_finite(samples: Vec<f64>) -> Self {
        debug_assert!(samples.iter().all(|v| v.is_finite()));
        Self { samples }
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.samples
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_finite(self.samples.iter().map(|v| v * factor).collect())
    }
}

/// Orthonormal DCT-II coefficients `F[l] = g_l * sum x[n] cos(pi l (2n+1) / 2N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DctCoefficients {
    pub coeffs: Vec<f64>,
}

impl DctCoefficients {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// Indices of the `count` largest-magnitude coefficients, largest first.
    pub fn largest(&self, count: usize) -> Vec<usize> {
        largest_indices(&self.coeffs, count)
    }
}

/// A reconstruction from a subset of coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub signal: RealSignal,
    /// Kept energy over total energy, in `[0, 1]`.
    pub retained_energy: f64,
    pub kept: Vec<usize>,
}

/// `g_l` scaling of the orthonormal DCT.
fn dct_scale(l: usize, n: usize) -> f64 {
    if l == 0 {
        (1.0 / n as f64).sqrt()
    } else {
        (2.0 / n as f64).sqrt()
    }
}

/// `cos(pi * k / (2N))` for `k` in `0..4N`.
fn quarter_cos_table(n: usize) -> Vec<f64> {
    let m = 4 * n;
    (0..m).map(|k| (PI * k as f64 / (2 * n) as f64).cos()).collect()
}

pub fn dct_forward(x: &RealSignal) -> Result<DctCoefficients> {
    let n = x.n_samples();
    if n < 2 {
        return Err(LogFskError::InvalidSize(format!("DCT needs N >= 2, got {n}")));
    }
    let table = quarter_cos_table(n);
    let m = 4 * n;
    let coeffs = (0..n)
        .map(|l| {
            let acc: f64 = x.samples().iter().enumerate().map(|(i, v)| v * table[(l * (2 * i + 1)) % m]).sum();
            dct_scale(l, n) * acc
        })
        .collect();
    Ok(DctCoefficients { coeffs })
}

pub fn dct_inverse(f: &DctCoefficients) -> Result<RealSignal> {
    let n = f.len();
    if n < 2 {
        return Err(LogFskError::InvalidSize(format!("DCT needs N >= 2, got {n}")));
    }
    let table = quarter_cos_table(n);
    let m = 4 * n;
    let samples = (0..n)
        .map(|i| f.coeffs.iter().enumerate().map(|(l, c)| dct_scale(l, n) * c * table[(l * (2 * i + 1)) % m]).sum())
        .collect();
    Ok(RealSignal::from_finite(samples))
}

/// Inverse DCT using only the coefficients listed in `keep`.
pub fn truncated_synthesis(f: &DctCoefficients, keep: &[usize]) -> Result<Truncation> {
    let n = f.len();
    let mut masked = vec![0.0; n];
    for &l in keep {
        if l >= n {
            return Err(LogFskError::InvalidIndex { index: l, bound: n });
        }
        masked[l] = f.coeffs[l];
    }
    let total = f.energy();
    let kept_energy: f64 = masked.iter().map(|c| c * c).sum();
    let signal = dct_inverse(&DctCoefficients { coeffs: masked })?;
    Ok(Truncation { signal, retained_energy: if total > 0.0 { kept_energy / total } else { 0.0 }, kept: keep.to_vec() })
}

/// Number of samples in a symbol window for grid base `n`.
pub fn symbol_len(n: usize) -> usize {
    2 * n + 1
}

/// Trapezoid weight of sample `i` on a window of `len` samples.
#[inline]
pub fn trapezoid_weight(i: usize, len: usize) -> f64 {
    if i == 0 || i + 1 == len {
        0.5
    } else {
        1.0
    }
}

/// Trapezoid-weighted time average over a symbol window.
pub fn window_mean(samples: &[f64]) -> f64 {
    let len = samples.len();
    if len < 2 {
        return samples.first().copied().unwrap_or(0.0);
    }
    let sum: f64 = samples.iter().enumerate().map(|(i, v)| trapezoid_weight(i, len) * v).sum();
    sum / (len - 1) as f64
}

/// Grid base `N` of a symbol window, i.e. `(len - 1) / 2`.
pub fn grid_base(len: usize) -> Result<usize> {
    if len < 3 || len % 2 == 0 {
        return Err(LogFskError::InvalidSize(format!("half-grid analysis needs a window of 2N+1 samples, got {len}")));
    }
    Ok((len - 1) / 2)
}

/// Correlator outputs on the half grid: bin `g` is angular frequency `pi g / (2N)`.
///
/// A tone `A cos(pi g n / (2N))` with `1 <= g < 2N` reads `A` in bin `g`;
/// bin 0 holds the window mean.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfGridSpectrum {
    pub bins: Vec<f64>,
    /// Grid base `N`.
    pub n: usize,
    /// Per-bin noise variance in basis-amplitude units, when the receiver has an estimate.
    pub noise_var: Option<f64>,
}

impl HalfGridSpectrum {
    pub fn grid_size(&self) -> usize {
        self.bins.len()
    }

    pub fn bin(&self, g: usize) -> f64 {
        self.bins[g]
    }

    /// Bin value measured against the `sqrt(2/N)`-normalised cosine basis.
    pub fn basis_amplitude(&self, g: usize) -> f64 {
        self.bins[g] * basis_scale(self.n)
    }

    /// Bin value as the coefficient on a unit-norm half-grid tone (`g >= 1`).
    pub fn unit_norm(&self, g: usize) -> f64 {
        self.bins[g] * (self.n as f64).sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            bins: self.bins.iter().map(|b| b * factor).collect(),
            n: self.n,
            noise_var: self.noise_var.map(|v| v * factor * factor),
        }
    }
}

/// Converts a raw tone amplitude into `sqrt(2/N)`-basis units.
pub fn basis_scale(n: usize) -> f64 {
    (n as f64 / 2.0).sqrt()
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_for(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

/// Weighted correlations `sum_n w_n x_n cos(pi g n / (2N))` for `g = 0..=2N`.
fn raw_correlations(x: &[f64], n: usize) -> Vec<f64> {
    // Even extension to 4N points turns the weighted cosine sums into one DFT.
    let m = 4 * n;
    let mut buf: Vec<Complex64> = Vec::with_capacity(m);
    buf.extend(x.iter().map(|&v| Complex64::new(v, 0.0)));
    buf.extend((2 * n + 1..m).map(|k| Complex64::new(x[m - k], 0.0)));
    fft_for(m).process(&mut buf);
    buf[..=2 * n].iter().map(|c| 0.5 * c.re).collect()
}

fn raw_correlations_direct(x: &[f64], n: usize, upto: usize) -> Vec<f64> {
    let table = quarter_cos_table(n);
    let m = 4 * n;
    let len = x.len();
    (0..upto)
        .map(|g| x.iter().enumerate().map(|(i, v)| trapezoid_weight(i, len) * v * table[(g * i) % m]).sum())
        .collect()
}

fn normalise(raw: Vec<f64>, n: usize, grid: usize) -> Vec<f64> {
    let nf = n as f64;
    raw.into_iter()
        .take(grid)
        .enumerate()
        .map(|(g, s)| if g == 0 || g == 2 * n { s / (2.0 * nf) } else { s / nf })
        .collect()
}

fn check_grid(len: usize, grid: usize) -> Result<usize> {
    let n = grid_base(len)?;
    if grid > 2 * n {
        return Err(LogFskError::FoldOver { grid, limit: 2 * n });
    }
    Ok(n)
}

/// Half-grid correlator bank with `grid` bins (at most `2N`), FFT evaluated.
pub fn halfgrid_analysis(x: &RealSignal, grid: usize) -> Result<HalfGridSpectrum> {
    let n = check_grid(x.n_samples(), grid)?;
    let bins = normalise(raw_correlations(x.samples(), n), n, grid);
    Ok(HalfGridSpectrum { bins, n, noise_var: None })
}

/// Direct O(N^2) evaluation of [`halfgrid_analysis`]; the reference for the FFT path.
pub fn halfgrid_analysis_direct(x: &RealSignal, grid: usize) -> Result<HalfGridSpectrum> {
    let n = check_grid(x.n_samples(), grid)?;
    let bins = normalise(raw_correlations_direct(x.samples(), n, grid), n, grid);
    Ok(HalfGridSpectrum { bins, n, noise_var: None })
}

/// Direct correlation of a single bin `g` in raw amplitude units.
pub fn halfgrid_bin(x: &RealSignal, g: usize) -> Result<f64> {
    let n = grid_base(x.n_samples())?;
    if g > 2 * n {
        return Err(LogFskError::FoldOver { grid: g, limit: 2 * n });
    }
    let len = x.n_samples();
    let s: f64 = x
        .samples()
        .iter()
        .enumerate()
        .map(|(i, v)| trapezoid_weight(i, len) * v * (PI * (g * i) as f64 / (2 * n) as f64).cos())
        .sum();
    let nf = n as f64;
    Ok(if g == 0 || g == 2 * n { s / (2.0 * nf) } else { s / nf })
}

/// Complete half-grid expansion: `x[n] = sum_g a[g] cos(pi g n / (2N))`, `g = 0..=2N`.
pub fn halfgrid_decompose(x: &RealSignal) -> Result<Vec<f64>> {
    let n = grid_base(x.n_samples())?;
    Ok(normalise(raw_correlations(x.samples(), n), n, 2 * n + 1))
}

/// Inverse of [`halfgrid_decompose`].
pub fn halfgrid_synthesize(coeffs: &[f64]) -> Result<RealSignal> {
    let len = coeffs.len();
    let n = grid_base(len)?;
    let table = quarter_cos_table(n);
    let m = 4 * n;
    let samples = (0..len).map(|i| coeffs.iter().enumerate().map(|(g, a)| a * table[(g * i) % m]).sum()).collect();
    Ok(RealSignal::from_finite(samples))
}

/// Weighted energy `sum_n w_n x_n^2` carried by each half-grid coefficient.
pub fn halfgrid_energies(coeffs: &[f64]) -> Vec<f64> {
    let last = coeffs.len().saturating_sub(1);
    let n = last as f64 / 2.0;
    coeffs
        .iter()
        .enumerate()
        .map(|(g, a)| {
            let norm = if g == 0 || g == last { 2.0 * n } else { n };
            a * a * norm
        })
        .collect()
}

pub(crate) fn largest_indices(values: &[f64], count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));
    idx.truncate(count);
    idx
}
