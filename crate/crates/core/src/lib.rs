//! Log-FSK: a logarithmic frequency-shift-keying waveform for over-the-air
//! computation.
//!
//! Each user sends `log(1 + beta * cos_m[n])`. The multiple-access channel adds
//! the logs, the receiver exponentiates, and the resulting product of cosines
//! carries a tone at half-grid index `2 * sum(m) + K`. Detecting the highest
//! tone above a threshold recovers the sum of the transmitted symbols.
//!
//! Signals live on a symbol window of `2N + 1` samples (`n = 0..=2N`) and are
//! analysed with trapezoid weights, which makes every half-grid tone exactly
//! orthogonal to every other.
//!
//! ```
//! use logfsk::harness::SymbolBank;
//! use logfsk::{demodulate_pipeline, ChannelRealization, DemodMode, ModulationParams, ReceiverConfig, RngStream};
//!
//! let params = ModulationParams::with_default_beta(256, 2)?;
//! let bank = SymbolBank::new(&params)?;
//! let channel = ChannelRealization::awgn(2, 1.0, 0.05);
//! let y = bank.transmit(&[40, 71], &channel, &mut RngStream::new(7, 0).rng());
//! let det = demodulate_pipeline(&y, &channel, &params, &ReceiverConfig::default(), DemodMode::Max)?;
//! assert_eq!((det.detected_sum, det.detected_max), (111, Some(71)));
//! # Ok::<(), logfsk::LogFskError>(())
//! ```

pub mod channel;
pub mod dsb;
pub mod error;
pub mod functions;
pub mod harness;
pub mod receiver;
pub mod theory;
pub mod transform;
pub mod waveform;

pub use channel::{mac_superpose, received_snr, sample_rayleigh, ChannelRealization, RngStream};
pub use dsb::{calibrate_dsb_gain, dsb_estimate_sum, dsb_modulate, DsbParams};
pub use error::{LogFskError, Result};
pub use functions::{decode, detect_event, encode, FunctionKind, FunctionSpec, Hypothesis, Quantizer};
pub use harness::{ChannelModel, DataDistribution, ExperimentConfig, ExperimentKind, ExperimentResult};
pub use receiver::{
    bias_correction, demodulate_pipeline, detect_difference, detect_max_two_user, detect_sum, exp_postprocess,
    DemodMode, DetectionResult, ReceiverConfig, ThresholdPolicy,
};
pub use theory::{PowerBudget, TheoryReport};
pub use transform::{
    dct_forward, dct_inverse, halfgrid_analysis, truncated_synthesis, DctCoefficients, HalfGridSpectrum, RealSignal,
};
pub use waveform::{
    cosine_basis, logfsk_modulate, oscillator_synthesize, papr, signal_mean, theoretical_spectrum, waveform_power,
    LineSpectrum, ModulationParams,
};
