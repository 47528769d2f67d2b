//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so every criterion reports even when an
//! earlier one fails. The process exits non-zero if any criterion fails.

use std::time::Instant;

use logfsk::harness::{
    band_ratios, error_free_threshold, exhaustive_check, run_nmse_sweep, run_noise_diagnostics, run_pe_vs_theory,
    run_power_cdf, ChannelModel, ExperimentConfig, ExperimentKind, NmsePoint, ParamsConfig,
};
use logfsk::theory::{power_control, snr_destination_closed_form, snr_destination_high};
use logfsk::transform::halfgrid_analysis;
use logfsk::waveform::mean_for_depth;
use logfsk::{
    cosine_basis, dct_forward, dct_inverse, logfsk_modulate, oscillator_synthesize, papr, ModulationParams,
    PowerBudget, RealSignal, ReceiverConfig, RngStream,
};
use rand::Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn ac1() -> Verdict {
    let rc = ReceiverConfig::default();
    let mut notes = Vec::new();
    let mut pass = true;
    for (n, k) in [(64, 1), (64, 2), (32, 3)] {
        let p = ModulationParams::with_default_beta(n, k).unwrap();
        let row = exhaustive_check(&p, &rc).unwrap();
        pass &= row.failures == 0;
        notes.push(format!("N={n} K={k}: {}/{} exact", row.tuples - row.failures, row.tuples));
        if let Some(t) = row.first_failure {
            notes.push(format!("first failure {t:?}"));
        }
    }
    verdict(pass, notes.join("; "))
}

fn ac2() -> Verdict {
    let mut rng = RngStream::new(2024, 0).rng();
    let (mut worst_rt, mut worst_parseval, mut worst_leak) = (0.0f64, 0.0f64, 0.0f64);
    for n in [4usize, 64, 256] {
        for _ in 0..1000 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let sig = RealSignal::new(x.clone()).unwrap();
            let f = dct_forward(&sig).unwrap();
            let back = dct_inverse(&f).unwrap();
            let rt = back.samples().iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let ex: f64 = x.iter().map(|v| v * v).sum();
            worst_rt = worst_rt.max(rt);
            worst_parseval = worst_parseval.max((ex - f.energy()).abs() / ex);
        }
        // Orthonormal DCT-II basis vectors land in a single coefficient.
        for m in 0..n {
            let tone: Vec<f64> = (0..n)
                .map(|i| {
                    let g = if m == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
                    g * (std::f64::consts::PI * m as f64 * (2 * i + 1) as f64 / (2 * n) as f64).cos()
                })
                .collect();
            let f = dct_forward(&RealSignal::new(tone).unwrap()).unwrap();
            for (l, c) in f.coeffs.iter().enumerate() {
                let want = if l == m { 1.0 } else { 0.0 };
                worst_leak = worst_leak.max((c - want).abs());
            }
        }
        // Half-grid bank on the symbol window.
        let p = ModulationParams::with_default_beta(n, 1).unwrap();
        for m in 0..n {
            let spec = halfgrid_analysis(&cosine_basis(m, &p).unwrap(), 2 * n).unwrap();
            for g in 0..2 * n {
                let want = if g == 2 * m + 1 { 1.0 } else { 0.0 };
                worst_leak = worst_leak.max((spec.basis_amplitude(g) - want).abs());
            }
        }
    }
    verdict(
        worst_rt <= 1e-10 && worst_parseval <= 1e-10 && worst_leak <= 1e-9,
        format!("round-trip {worst_rt:.2e}, Parseval rel {worst_parseval:.2e}, tone leakage {worst_leak:.2e}"),
    )
}

fn ac3() -> Verdict {
    let n = 256;
    let half = (n as f64 / 2.0).sqrt();
    let at = |beta: f64| oscillator_synthesize(5, &ModulationParams::new(n, beta, 1).unwrap(), 3).unwrap();
    // Modulation depth beta * sqrt(2/N) = 0.5 reproduces the reported 99.998 %.
    let t = at(0.5 * half);
    let d = at(0.99 * half);
    verdict(
        t.retained_energy >= 0.999,
        format!(
            "depth 0.5: top-3 half-grid bins {:?} keep {:.4}%; default beta (0.99 sqrt(N/2)): bins {:?} keep {:.4}%",
            t.kept,
            100.0 * t.retained_energy,
            d.kept,
            100.0 * d.retained_energy
        ),
    )
}

fn ac4() -> Verdict {
    let n = 4096usize;
    let mut worst = 0.0f64;
    for a in [0.2, 0.6, 0.9] {
        let closed = mean_for_depth(a).unwrap();
        for m in [0usize, 5, 700, 4095] {
            let direct = (0..2 * n)
                .map(|i| {
                    let ph = std::f64::consts::PI * ((2 * m + 1) * i % (4 * n)) as f64 / (2 * n) as f64;
                    (a * ph.cos()).ln_1p()
                })
                .sum::<f64>()
                / (2 * n) as f64;
            worst = worst.max((direct - closed).abs());
        }
    }
    verdict(worst <= 1e-3, format!("max |closed - time average| = {worst:.3e}"))
}

fn ac5() -> Verdict {
    let cfg = ExperimentConfig::preset(ExperimentKind::NoiseDiag);
    let pts = run_noise_diagnostics(&cfg).unwrap();
    let mut pass = cfg.trials >= 10_000;
    let mut notes = Vec::new();
    for p in &pts {
        let z = (p.measured_mean - p.predicted_mean) / p.mean_standard_error;
        let ratio = p.measured_var / p.predicted_var;
        pass &= p.qq_correlation >= 0.99 && (ratio - 1.0).abs() <= 0.05 && z.abs() <= 3.0;
        notes.push(format!("{} dB: QQ r {:.4}, var ratio {:.4}, mean z {:+.2}", p.snr_db, p.qq_correlation, ratio, z));
    }
    verdict(pass, notes.join("; "))
}

fn sweep(k: usize, lo: f64, hi: f64) -> Vec<NmsePoint> {
    let mut cfg = ExperimentConfig::preset(ExperimentKind::NmseSweep);
    cfg.params = ParamsConfig::new(256, k);
    cfg.snr_db = (0..=((hi - lo) as usize)).map(|i| lo + i as f64).collect();
    run_nmse_sweep(&cfg).unwrap()
}

fn ac6() -> Verdict {
    let mut pass = true;
    let mut notes = Vec::new();
    for (k, lo, hi, window) in [(2, 0.0, 16.0, (4.0, 10.0)), (3, 10.0, 28.0, (16.0, 22.0))] {
        let pts = sweep(k, lo, hi);
        let th = error_free_threshold(&pts);
        let in_window = th.is_some_and(|t| t >= window.0 && t <= window.1);
        let beats_dsb = th.is_some_and(|t| pts.iter().filter(|p| p.snr_db >= t).all(|p| p.nmse_logfsk < p.nmse_dsb));
        pass &= in_window && beats_dsb;
        let below = th.and_then(|t| pts.iter().rev().find(|p| p.snr_db < t));
        notes.push(format!(
            "K={k}: error-free from {:?} dB (window {:?}), below it NMSE {:.2e} SER {:.2e}; Log-FSK < DSB above: {beats_dsb}",
            th,
            window,
            below.map_or(f64::NAN, |p| p.nmse_logfsk),
            below.map_or(f64::NAN, |p| p.ser),
        ));
    }
    verdict(pass, notes.join("; "))
}

fn ac7() -> Verdict {
    let cfg = ExperimentConfig::preset(ExperimentKind::PeVsTheory);
    let rows = run_pe_vs_theory(&cfg).unwrap();
    let ratios = band_ratios(&rows, 1e-3, 0.3);
    let factor = |v: f64| v.max(1.0 / v);
    let worst_pe = ratios.iter().map(|r| factor(r.0)).fold(1.0, f64::max);
    let worst_mse = ratios.iter().map(|r| factor(r.1)).fold(1.0, f64::max);
    let n = cfg.params.n_samples;
    let mut identity_err = 0.0f64;
    for r in rows.iter().filter(|r| r.pe_theory < 1.0) {
        let c = (n - r.sum) as f64;
        let via_pe = r.pe_theory * (c - 1.0) * (2.0 * c - 1.0) / 6.0;
        identity_err = identity_err.max((via_pe - r.mse_theory).abs() / r.mse_theory.max(f64::MIN_POSITIVE));
    }
    let failing: Vec<String> = rows
        .iter()
        .filter(|r| r.pe_theory >= 1e-3 && r.pe_theory <= 0.3)
        .filter(|r| factor(r.pe_measured / r.pe_theory) > 3.0 || factor(r.mse_measured / r.mse_theory) > 3.0)
        .map(|r| format!("S={}@{}dB", r.sum, r.snr_db))
        .collect();
    verdict(
        !ratios.is_empty() && worst_pe <= 3.0 && worst_mse <= 3.0 && identity_err <= 1e-12,
        format!(
            "{} band points, worst Pe factor {worst_pe:.2}, worst MSE factor {worst_mse:.2}, identity rel err {identity_err:.1e}; outside factor 3: {}",
            ratios.len(),
            if failing.is_empty() { "none".to_string() } else { failing.join(" ") }
        ),
    )
}

fn ac8() -> Verdict {
    let mut worst = 0.0f64;
    for k in [1usize, 2, 3] {
        let p = ModulationParams::with_default_beta(256, k).unwrap();
        for s in [1e-3f64, 1e-4, 1e-5, 1e-6] {
            let std = s.sqrt();
            let exact = snr_destination_closed_form(&p, std, 1.0).unwrap();
            let high = snr_destination_high(&p, std, 1.0).unwrap();
            worst = worst.max((10.0 * (high / exact).log10()).abs());
        }
    }
    verdict(worst <= 0.1, format!("max |high-SNR form - exact| = {worst:.2} dB over sigma_w^2/A_r^2 in [1e-6, 1e-3]"))
}

fn ac9() -> Verdict {
    let budget = PowerBudget { p_k: 5.0, p_r: 1.0 };
    let mut cutoff_ok = true;
    for i in 1..2000 {
        let h = i as f64 * 1e-3;
        let silent = power_control(h, &budget).is_none();
        cutoff_ok &= silent == (budget.p_r / (h * h) > budget.p_k);
    }
    let cfg = ExperimentConfig::preset(ExperimentKind::PowerCdf);
    assert!(matches!(cfg.channel, ChannelModel::Rayleigh { .. }));
    let rep = run_power_cdf(&cfg).unwrap();
    let silent_ok = (rep.silent_rate - rep.silent_rate_theory).abs() <= 0.02;
    let pass = cutoff_ok
        && rep.cutoff_violations == 0
        && silent_ok
        && rep.logfsk_min_ks_p > 0.01
        && rep.dsb_min_ks_p < 0.01
        && rep.trials >= 10_000;
    let draws = rep.cells[0].powers.len() as f64;
    let se = (rep.silent_rate_theory * (1.0 - rep.silent_rate_theory) / draws).sqrt();
    let dev = rep.silent_rate - rep.silent_rate_theory;
    verdict(
        pass,
        format!(
            "cutoff rule ok {cutoff_ok} (sim violations {}); silent rate {:.4} vs {:.4} (rel {:+.1}%, z {:+.2}); min KS p Log-FSK {:.3}, DSB {:.2e}",
            rep.cutoff_violations,
            rep.silent_rate,
            rep.silent_rate_theory,
            100.0 * dev / rep.silent_rate_theory,
            dev / se,
            rep.logfsk_min_ks_p,
            rep.dsb_min_ks_p
        ),
    )
}

fn ac10() -> Verdict {
    let n = 256;
    let carrier_params = ModulationParams::with_default_beta(n, 1).unwrap();
    let mut pass = true;
    let mut best_gap = f64::NEG_INFINITY;
    let mut notes = Vec::new();
    for scale in [0.5, 0.9, 0.99] {
        let p = ModulationParams::with_beta_scale(n, scale, 1).unwrap();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for m in 0..=p.max_symbol() {
            let l = papr(&logfsk_modulate(m, &p).unwrap()).unwrap();
            let c = papr(&cosine_basis(m, &carrier_params).unwrap()).unwrap();
            pass &= l < c;
            best_gap = best_gap.max(c - l);
            lo = lo.min(l);
            hi = hi.max(l);
        }
        notes.push(format!("{scale}: {lo:.2}..{hi:.2} dB"));
    }
    let cosine = papr(&cosine_basis(5, &carrier_params).unwrap()).unwrap();
    let claim_ok = (best_gap - 1.65).abs() <= 0.5;
    verdict(
        pass,
        format!(
            "cosine {cosine:.2} dB; Log-FSK PAPR by beta scale {}; max gap {best_gap:.2} dB vs reference 1.65 dB ({})",
            notes.join(", "),
            if claim_ok { "within 0.5 dB" } else { "outside 0.5 dB" }
        ),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 10] = [
        ("AC1 exhaustive noiseless correctness", ac1),
        ("AC2 transform suite", ac2),
        ("AC3 energy compaction", ac3),
        ("AC4 mean closed form", ac4),
        ("AC5 noise model", ac5),
        ("AC6 threshold behaviour", ac6),
        ("AC7 Pe/MSE predictors", ac7),
        ("AC8 high-SNR approximation", ac8),
        ("AC9 power control", ac9),
        ("AC10 PAPR", ac10),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let v = check();
        failed += usize::from(!v.pass);
        println!(
            "{} {name} [{:.1}s]: {}",
            if v.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            v.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
