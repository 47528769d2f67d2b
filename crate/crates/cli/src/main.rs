//! `logfsk` command-line front end.
//!
//! Exit codes: 0 success, 1 configuration error, 2 assertion failure, 3 I/O error.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use logfsk::channel::{db_to_linear, ChannelRealization, RngStream};
use logfsk::harness::{noise_std_for, run_experiment, ExperimentConfig, ExperimentKind, ExperimentResult};
use logfsk::waveform::logfsk_power;
use logfsk::{
    demodulate_pipeline, logfsk_modulate, mac_superpose, oscillator_synthesize, DemodMode, LogFskError,
    ModulationParams, RealSignal, ReceiverConfig, TheoryReport,
};

#[derive(Parser, Debug)]
#[command(name = "logfsk", version, about = "Log-FSK over-the-air computation simulator")]
struct Cli {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path; CSV experiments also write `<path>.meta.json`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
struct ParamArgs {
    /// Samples per symbol, N.
    #[arg(long = "n", default_value_t = 256)]
    n_samples: usize,
    /// Number of users, K.
    #[arg(long, default_value_t = 2)]
    users: usize,
    /// beta as a fraction of sqrt(N/2).
    #[arg(long, default_value_t = 0.99)]
    beta_scale: f64,
}

impl ParamArgs {
    fn params(&self) -> Result<ModulationParams, CliError> {
        Ok(ModulationParams::with_beta_scale(self.n_samples, self.beta_scale, self.users)?)
    }
}

#[derive(Args, Debug, Clone, Copy, Default)]
struct Overrides {
    /// Overrides the number of trials per point.
    #[arg(long)]
    trials: Option<usize>,
    /// Overrides N.
    #[arg(long = "n")]
    n_samples: Option<usize>,
    /// Overrides K.
    #[arg(long)]
    users: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ModeArg {
    Sum,
    Difference,
    Max,
}

impl From<ModeArg> for DemodMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Sum => DemodMode::Sum,
            ModeArg::Difference => DemodMode::Difference,
            ModeArg::Max => DemodMode::Max,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Writes one Log-FSK symbol as CSV (`n,x`), optionally with its L-oscillator approximation.
    Modulate {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        symbol: usize,
        /// Keep the L strongest half-grid tones.
        #[arg(long)]
        oscillators: Option<usize>,
    },
    /// Demodulates either a sample file or a synthesised MAC output; prints JSON.
    Demod {
        #[command(flatten)]
        params: ParamArgs,
        /// Comma-separated symbols to synthesise.
        #[arg(long, value_delimiter = ',')]
        symbols: Vec<usize>,
        /// Received samples, one per line (alternative to --symbols).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Predetection SNR in dB; noiseless when absent.
        #[arg(long)]
        snr_db: Option<f64>,
        /// Noise standard deviation assumed for --input.
        #[arg(long, default_value_t = 0.0)]
        noise_std: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::Sum)]
        mode: ModeArg,
    },
    /// Prints the closed-form predictions for one operating point as JSON.
    Theory {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        symbols: Vec<usize>,
        #[arg(long)]
        snr_db: f64,
    },
    /// NMSE, symbol error and erasure rates of Log-FSK and DSB against SNR
    NmseSweep(#[command(flatten)] Overrides),
    /// Measured destination SNR of the sum bin against the closed forms
    SnrCurve(#[command(flatten)] Overrides),
    /// Per-user transmit power CDFs under Rayleigh fading and power control
    PowerCdf(#[command(flatten)] Overrides),
    /// Sum-bin noise statistics, histogram and normal QQ points
    NoiseDiag(#[command(flatten)] Overrides),
    /// Measured error probability and MSE against the predictors
    PeCheck(#[command(flatten)] Overrides),
    /// Noiseless brute force; exits 2 on any mismatch.
    Exhaustive(#[command(flatten)] Overrides),
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Assertion(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Assertion(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Assertion(m) => write!(f, "assertion failed: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<LogFskError> for CliError {
    fn from(e: LogFskError) -> Self {
        match e {
            LogFskError::Io(m) => CliError::Io(m),
            LogFskError::Assertion(m) => CliError::Assertion(m),
            other => CliError::Config(other.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(io_err(p)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

fn to_json(v: serde_json::Result<serde_json::Value>) -> Result<String, CliError> {
    v.and_then(|v| serde_json::to_string_pretty(&v)).map(|s| s + "\n").map_err(|e| CliError::Io(e.to_string()))
}

fn modulate(cli: &Cli, params: &ParamArgs, symbol: usize, oscillators: Option<usize>) -> Result<(), CliError> {
    let p = params.params()?;
    let x = logfsk_modulate(symbol, &p)?;
    let approx = oscillators.map(|l| oscillator_synthesize(symbol, &p, l)).transpose()?;
    let mut text = String::from(if approx.is_some() { "n,x,x_approx\n" } else { "n,x\n" });
    for (i, v) in x.samples().iter().enumerate() {
        match &approx {
            Some(t) => text.push_str(&format!("{i},{v:e},{:e}\n", t.signal.samples()[i])),
            None => text.push_str(&format!("{i},{v:e}\n")),
        }
    }
    if let Some(t) = &approx {
        eprintln!("retained energy {:.6} with bins {:?}", t.retained_energy, t.kept);
    }
    emit(cli.out.as_deref(), &text)
}

fn read_samples(path: &Path) -> Result<RealSignal, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let samples = text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| CliError::Config(format!("{}: bad sample {t:?}: {e}", path.display()))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RealSignal::new(samples)?)
}

fn demod(
    cli: &Cli,
    params: &ParamArgs,
    symbols: &[usize],
    input: Option<&Path>,
    snr_db: Option<f64>,
    noise_std: f64,
    mode: ModeArg,
) -> Result<(), CliError> {
    let p = params.params()?;
    let (y, ch) = match input {
        Some(path) => (read_samples(path)?, ChannelRealization::awgn(p.n_users, 1.0, noise_std)),
        None => {
            if symbols.len() != p.n_users {
                return Err(CliError::Config(format!("--symbols needs {} entries", p.n_users)));
            }
            let std = snr_db.map_or(Ok(0.0), |s| logfsk_power(&p).map(|pl| noise_std_for(pl, 1.0, s)))?;
            let ch = ChannelRealization::awgn(p.n_users, 1.0, std);
            let waves = symbols.iter().map(|&m| logfsk_modulate(m, &p)).collect::<Result<Vec<_>, _>>()?;
            let mut rng = RngStream::new(cli.seed.unwrap_or(0), 0).rng();
            (mac_superpose(&waves, &ch, &mut rng)?, ch)
        }
    };
    let det = demodulate_pipeline(&y, &ch, &p, &ReceiverConfig::default(), mode.into())?;
    emit(cli.out.as_deref(), &to_json(serde_json::to_value(&det))?)
}

fn theory(cli: &Cli, params: &ParamArgs, symbols: &[usize], snr_db: f64) -> Result<(), CliError> {
    let p = params.params()?;
    let std = noise_std_for(logfsk_power(&p)?, 1.0, snr_db);
    let report = TheoryReport::compute(&p, std, 1.0, symbols)?;
    let out = serde_json::json!({
        "snr_r_db": snr_db,
        "snr_r_linear": db_to_linear(snr_db),
        "noise_std": std,
        "report": report,
    });
    emit(cli.out.as_deref(), &to_json(Ok(out))?)
}

fn load_config(cli: &Cli, kind: ExperimentKind, ov: &Overrides) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(io_err(path))?;
            let cfg = ExperimentConfig::from_json(&text)?;
            if cfg.kind != kind {
                return Err(CliError::Config(format!(
                    "config describes {:?} but the subcommand runs {kind:?}",
                    cfg.kind
                )));
            }
            cfg
        }
        None => ExperimentConfig::preset(kind),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = ov.trials {
        cfg.trials = t;
    }
    if let Some(n) = ov.n_samples {
        cfg.params.n_samples = n;
    }
    if let Some(k) = ov.users {
        cfg.params.n_users = k;
    }
    if let Some(out) = &cli.out {
        cfg.output = Some(out.display().to_string());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_result(cfg: &ExperimentConfig, result: &ExperimentResult) -> Result<(), CliError> {
    match &cfg.output {
        Some(path) => result.write_files(Path::new(path))?,
        None => emit(None, &result.to_csv_string()?)?,
    }
    eprintln!("{}", serde_json::Value::from(serde_json::Map::from_iter(result.summary.clone())));
    Ok(())
}

fn experiment(cli: &Cli, kind: ExperimentKind, ov: &Overrides) -> Result<(), CliError> {
    let cfg = load_config(cli, kind, ov)?;
    let result = run_experiment(&cfg)?;
    write_result(&cfg, &result)?;
    if kind == ExperimentKind::NoiselessExhaustive {
        let failures = result.summary.get("total_failures").and_then(|v| v.as_u64()).unwrap_or(0);
        if failures > 0 {
            let firsts: Vec<String> = result
                .summary
                .iter()
                .filter(|(k, _)| k.starts_with("first_failure"))
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            return Err(CliError::Assertion(format!("{failures} tuples mis-detected ({})", firsts.join(", "))));
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    match &cli.command {
        Command::Modulate { params, symbol, oscillators } => modulate(cli, params, *symbol, *oscillators),
        Command::Demod { params, symbols, input, snr_db, noise_std, mode } => {
            demod(cli, params, symbols, input.as_deref(), *snr_db, *noise_std, *mode)
        }
        Command::Theory { params, symbols, snr_db } => theory(cli, params, symbols, *snr_db),
        Command::NmseSweep(ov) => experiment(cli, ExperimentKind::NmseSweep, ov),
        Command::SnrCurve(ov) => experiment(cli, ExperimentKind::SnrCurve, ov),
        Command::PowerCdf(ov) => experiment(cli, ExperimentKind::PowerCdf, ov),
        Command::NoiseDiag(ov) => experiment(cli, ExperimentKind::NoiseDiag, ov),
        Command::PeCheck(ov) => experiment(cli, ExperimentKind::PeVsTheory, ov),
        Command::Exhaustive(ov) => experiment(cli, ExperimentKind::NoiselessExhaustive, ov),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("logfsk: {e}");
            ExitCode::from(e.code())
        }
    }
}
