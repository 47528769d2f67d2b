use std::path::Path;
use std::process::{Command, Output};

fn logfsk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_logfsk")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn help_and_bad_usage() {
    assert_eq!(logfsk(&["--help"]).status.code(), Some(0));
    assert_eq!(logfsk(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(logfsk(&["theory", "--symbols", "1,2"]).status.code(), Some(1));
}

#[test]
fn modulate_writes_one_symbol_window() {
    let o = logfsk(&["modulate", "--n", "16", "--symbol", "3", "--oscillators", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,x,x_approx"));
    assert_eq!(lines.count(), 33);
}

#[test]
fn demod_recovers_sum_difference_and_max() {
    let o = logfsk(&["demod", "--n", "64", "--symbols", "25,4", "--mode", "max"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["detected_sum"], 29);
    assert_eq!(v["detected_difference"], 21);
    assert_eq!(v["detected_max"], 25);
}

#[test]
fn demod_from_sample_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = logfsk(&["modulate", "--n", "32", "--users", "1", "--symbol", "7"]);
    let samples: String = stdout(&o).lines().skip(1).map(|l| l.split(',').nth(1).unwrap().to_string() + "\n").collect();
    let path = write(dir.path(), "y.txt", &samples);
    let o = logfsk(&["demod", "--n", "32", "--users", "1", "--input", &path]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["detected_sum"], 7);
}

#[test]
fn theory_reports_predictions() {
    let o = logfsk(&["theory", "--n", "64", "--symbols", "10,12", "--snr-db", "12"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let pe = v["report"]["pe"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&pe));
}

#[test]
fn exhaustive_passes_and_writes_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ex.csv");
    let o = logfsk(&["exhaustive", "--n", "16", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("n,k,tuples,failures\n"));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ex.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["params"]["n_samples"], 16);
    assert!(meta["version"].as_str().unwrap().starts_with("logfsk "));
}

#[test]
fn exhaustive_mismatch_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"kind":"noiseless_exhaustive","params":{"n_samples":16,"n_users":2},
            "receiver":{"threshold":{"policy":"absolute","value":1e9}}}"#,
    );
    let o = logfsk(&["exhaustive", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("first_failure"));
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(
        dir.path(),
        "a.json",
        r#"{"kind":"nmse_sweep","params":{"n_samples":64,"n_users":2},"snr_db":[1],"colour":"blue"}"#,
    );
    assert_eq!(logfsk(&["nmse-sweep", "--config", &unknown]).status.code(), Some(1));
    let wrong_kind =
        write(dir.path(), "b.json", r#"{"kind":"snr_curve","params":{"n_samples":64,"n_users":2},"snr_db":[1]}"#);
    assert_eq!(logfsk(&["nmse-sweep", "--config", &wrong_kind]).status.code(), Some(1));
    let unsorted =
        write(dir.path(), "c.json", r#"{"kind":"nmse_sweep","params":{"n_samples":64,"n_users":2},"snr_db":[5,1]}"#);
    assert_eq!(logfsk(&["nmse-sweep", "--config", &unsorted]).status.code(), Some(1));
}

#[test]
fn io_errors_exit_three() {
    let o = logfsk(&["exhaustive", "--n", "16", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(o.status.code(), Some(3));
    let o = logfsk(&["nmse-sweep", "--config", "/nonexistent-dir/cfg.json"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn sweep_is_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"kind":"nmse_sweep","params":{"n_samples":64,"n_users":2},"snr_db":[2,6,10],"trials":300,"seed":11}"#,
    );
    let a = logfsk(&["nmse-sweep", "--config", &cfg, "--threads", "1"]);
    let b = logfsk(&["nmse-sweep", "--config", &cfg, "--threads", "4"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("snr_db,nmse_logfsk,nmse_dsb,ser,erasure_rate,silent_rate,theory_mse,trials\n"));
    let c = logfsk(&["nmse-sweep", "--config", &cfg, "--seed", "12"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn every_experiment_subcommand_runs() {
    let dir = tempfile::tempdir().unwrap();
    let noise = write(
        dir.path(),
        "noise.json",
        r#"{"kind":"noise_diag","params":{"n_samples":128,"n_users":2},"snr_db":[10],"symbols":[20,30],"trials":100}"#,
    );
    let pe = write(
        dir.path(),
        "pe.json",
        r#"{"kind":"pe_vs_theory","params":{"n_samples":64,"n_users":2},"snr_db":[6,9],"sums":[10,40],"trials":50}"#,
    );
    for args in [
        vec!["snr-curve", "--n", "64", "--trials", "50"],
        vec!["power-cdf", "--n", "64", "--trials", "200"],
        vec!["noise-diag", "--config", &noise],
        vec!["pe-check", "--config", &pe],
    ] {
        let o = logfsk(&args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).lines().count() > 1, "{args:?}");
    }
}
