//! Seeded Monte Carlo experiments and their configuration/output formats.
//!
//! Every trial draws from its own [`RngStream`](crate::channel::RngStream)
//! keyed by `(seed, purpose, point, trial)`, and per-trial outcomes are reduced
//! in trial order, so results do not depend on the worker count.

mod data;
mod exhaustive;
mod nmse;
mod noise_diag;
mod pe;
mod power_cdf;
mod snr_curve;
pub mod stats;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LogFskError, Result};
use crate::functions::FunctionSpec;
use crate::receiver::ReceiverConfig;
use crate::theory::PowerBudget;
use crate::waveform::{ModulationParams, DEFAULT_BETA_SCALE};

pub use data::{DataDistribution, SymbolBank};
pub use exhaustive::{exhaustive_check, run_noiseless_exhaustive, ExhaustiveRow};
pub use nmse::{error_free_threshold, run_nmse_sweep, NmsePoint};
pub use noise_diag::{bin_noise_samples, run_noise_diagnostics, NoiseDiagPoint};
pub use pe::{band_ratios, run_pe_vs_theory, tuple_for_sum, PeRow};
pub use power_cdf::{power_cells, run_power_cdf, PowerCdfReport, PowerCell};
pub use snr_curve::{empirical_slope, run_snr_curve, SnrCurvePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    NmseSweep,
    SnrCurve,
    PowerCdf,
    NoiseDiag,
    PeVsTheory,
    NoiselessExhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelModel {
    /// Unit gains, `A_k = A_r = 1`.
    Awgn,
    /// Rayleigh block fading with threshold power control.
    Rayleigh { p_k: f64, p_r: f64 },
}

impl ChannelModel {
    pub fn rx_scale(&self) -> f64 {
        match self {
            ChannelModel::Awgn => 1.0,
            ChannelModel::Rayleigh { p_r, .. } => p_r.sqrt(),
        }
    }

    pub fn budget(&self) -> Option<PowerBudget> {
        match *self {
            ChannelModel::Awgn => None,
            ChannelModel::Rayleigh { p_k, p_r } => Some(PowerBudget { p_k, p_r }),
        }
    }
}

/// Modulation parameters as written in a config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub n_samples: usize,
    pub n_users: usize,
    /// `beta = beta_scale * sqrt(N/2)`.
    #[serde(default = "default_beta_scale")]
    pub beta_scale: f64,
    #[serde(default = "default_true")]
    pub mean_subtract: bool,
}

fn default_beta_scale() -> f64 {
    DEFAULT_BETA_SCALE
}

fn default_true() -> bool {
    true
}

impl ParamsConfig {
    pub fn new(n_samples: usize, n_users: usize) -> Self {
        Self { n_samples, n_users, beta_scale: DEFAULT_BETA_SCALE, mean_subtract: true }
    }

    pub fn to_params(&self) -> Result<ModulationParams> {
        let mut p = ModulationParams::with_beta_scale(self.n_samples, self.beta_scale, self.n_users)?;
        p.mean_subtract = self.mean_subtract;
        Ok(p)
    }
}

/// Full description of one experiment; JSON field names mirror these fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub params: ParamsConfig,
    #[serde(default = "default_channel")]
    pub channel: ChannelModel,
    /// Average predetection SNR points in dB, ascending.
    #[serde(default)]
    pub snr_db: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "FunctionSpec::sum")]
    pub function: FunctionSpec,
    /// Data model; `symbols` draws integers uniformly over the per-user alphabet.
    #[serde(default)]
    pub distribution: DataDistribution,
    #[serde(default)]
    pub receiver: ReceiverConfig,
    /// Fixed symbol tuple for experiments that probe one operating point.
    #[serde(default)]
    pub symbols: Option<Vec<usize>>,
    /// Target sums for the error-probability check.
    #[serde(default)]
    pub sums: Vec<usize>,
    #[serde(default)]
    pub output: Option<String>,
}

fn default_channel() -> ChannelModel {
    ChannelModel::Awgn
}

fn default_trials() -> usize {
    10_000
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

impl ExperimentConfig {
    /// Reference setup for each experiment kind.
    pub fn preset(kind: ExperimentKind) -> Self {
        let base = Self {
            kind,
            params: ParamsConfig::new(256, 2),
            channel: ChannelModel::Awgn,
            snr_db: Vec::new(),
            trials: default_trials(),
            seed: 1,
            function: FunctionSpec::sum(),
            distribution: DataDistribution::Symbols,
            receiver: ReceiverConfig::default(),
            symbols: None,
            sums: Vec::new(),
            output: None,
        };
        match kind {
            ExperimentKind::NmseSweep => Self { snr_db: grid(0.0, 16.0, 1.0), ..base },
            ExperimentKind::SnrCurve => Self { snr_db: grid(0.0, 40.0, 2.0), trials: 2_000, ..base },
            ExperimentKind::PowerCdf => {
                Self { channel: ChannelModel::Rayleigh { p_k: 5.0, p_r: 1.0 }, snr_db: vec![10.0], ..base }
            }
            ExperimentKind::NoiseDiag => Self {
                params: ParamsConfig::new(512, 2),
                snr_db: vec![7.0, 20.0],
                symbols: Some(vec![100, 150]),
                ..base
            },
            ExperimentKind::PeVsTheory => Self { snr_db: grid(0.0, 14.0, 1.0), sums: vec![20, 100, 200], ..base },
            ExperimentKind::NoiselessExhaustive => Self { params: ParamsConfig::new(64, 3), trials: 1, ..base },
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| LogFskError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let params = self.params.to_params().map_err(|e| LogFskError::Config(e.to_string()))?;
        if self.trials == 0 {
            return Err(LogFskError::Config("trials must be >= 1".into()));
        }
        if self.snr_db.windows(2).any(|w| !(w[0] <= w[1])) || self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(LogFskError::Config("snr_db must be finite and sorted ascending".into()));
        }
        if let Some(b) = self.channel.budget() {
            b.validate().map_err(|e| LogFskError::Config(e.to_string()))?;
        }
        if self.function.needs_two_users() && params.n_users != 2 {
            return Err(LogFskError::Config(format!("{:?} needs n_users = 2", self.function.kind)));
        }
        if let Some(s) = &self.symbols {
            if s.len() != params.n_users {
                return Err(LogFskError::Config(format!(
                    "symbols has {} entries for n_users = {}",
                    s.len(),
                    params.n_users
                )));
            }
            for &m in s {
                params.check_symbol(m).map_err(|e| LogFskError::Config(e.to_string()))?;
            }
        }
        if let Some(&bad) = self.sums.iter().find(|&&s| s > params.max_sum()) {
            return Err(LogFskError::Config(format!("sum {bad} exceeds N - K = {}", params.max_sum())));
        }
        self.distribution.validate(&self.function)?;
        let needs_snr = !matches!(self.kind, ExperimentKind::NoiselessExhaustive);
        if needs_snr && self.snr_db.is_empty() {
            return Err(LogFskError::Config("snr_db must not be empty".into()));
        }
        if self.kind == ExperimentKind::PowerCdf && self.channel.budget().is_none() {
            return Err(LogFskError::Config("power_cdf needs the rayleigh channel model".into()));
        }
        Ok(())
    }

    pub fn modulation(&self) -> Result<ModulationParams> {
        self.params.to_params()
    }
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Num(v) => write!(f, "{v:e}"),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Text(s) => write!(f, "{s}"),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Tabular output plus summary statistics and provenance metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub kind: ExperimentKind,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: BTreeMap<String, serde_json::Value>,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub version: String,
    /// Wall-clock seconds; kept out of the CSV so that file stays reproducible.
    pub runtime_s: f64,
}

impl ExperimentResult {
    fn new(config: &ExperimentConfig, columns: &[&str]) -> Self {
        Self {
            kind: config.kind,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: BTreeMap::new(),
            config: config.clone(),
            seed: config.seed,
            version: concat!("logfsk ", env!("CARGO_PKG_VERSION")).to_string(),
            runtime_s: 0.0,
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn note(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    pub fn summary_f64(&self, key: &str) -> Option<f64> {
        self.summary.get(key).and_then(|v| v.as_f64())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| LogFskError::Io(e.to_string());
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_string())).map_err(io)?;
        }
        w.flush().map_err(|e| LogFskError::Io(e.to_string()))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| LogFskError::Io(e.to_string()))
    }

    /// Sidecar JSON: config echo, seed, version, runtime and summary.
    pub fn metadata_json(&self) -> Result<String> {
        let meta = serde_json::json!({
            "kind": self.kind,
            "config": self.config,
            "seed": self.seed,
            "version": self.version,
            "runtime_s": self.runtime_s,
            "columns": self.columns,
            "rows": self.rows.len(),
            "summary": self.summary,
        });
        serde_json::to_string_pretty(&meta).map_err(|e| LogFskError::Io(e.to_string()))
    }

    /// Writes `path` (CSV) and `path.meta.json`.
    pub fn write_files(&self, path: &Path) -> Result<()> {
        let io = |e: std::io::Error| LogFskError::Io(format!("{}: {e}", path.display()));
        let file = std::fs::File::create(path).map_err(io)?;
        self.write_csv(std::io::BufWriter::new(file))?;
        let mut meta_path = path.as_os_str().to_owned();
        meta_path.push(".meta.json");
        std::fs::write(&meta_path, self.metadata_json()?).map_err(io)
    }
}

/// Runs the experiment named by `cfg.kind`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let start = std::time::Instant::now();
    let mut result = match cfg.kind {
        ExperimentKind::NmseSweep => nmse::table(cfg, &run_nmse_sweep(cfg)?),
        ExperimentKind::SnrCurve => snr_curve::table(cfg, &run_snr_curve(cfg)?),
        ExperimentKind::PowerCdf => power_cdf::table(cfg, &run_power_cdf(cfg)?),
        ExperimentKind::NoiseDiag => noise_diag::table(cfg, &run_noise_diagnostics(cfg)?),
        ExperimentKind::PeVsTheory => pe::table(cfg, &run_pe_vs_theory(cfg)?),
        ExperimentKind::NoiselessExhaustive => exhaustive::table(cfg, &run_noiseless_exhaustive(cfg)?),
    };
    result.runtime_s = start.elapsed().as_secs_f64();
    Ok(result)
}

/// Noise standard deviation giving predetection SNR `snr_db` at receiver scale `rx_scale`.
pub fn noise_std_for(p_log: f64, rx_scale: f64, snr_db: f64) -> f64 {
    (p_log * rx_scale * rx_scale / crate::channel::db_to_linear(snr_db)).sqrt()
}
