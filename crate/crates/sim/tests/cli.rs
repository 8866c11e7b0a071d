//! Command-line behaviour of the `otfs-sim` binary.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_otfs-sim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &std::path::Path) -> String {
    let path = dir.join("small.cfg");
    std::fs::write(
        &path,
        "# tiny sweep\nantennas = 32\nvelocities_kmh = 500\nsnr_db = 0, 10\ntrials = 3\n",
    )
    .unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn overhead_to_stdout_has_header_and_nine_rows_per_metric() {
    let out = run(&["overhead"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("experiment,metric,snr_db,snr_p_db,velocity_kmh,antennas,pattern,value,ci_half_width,trials,seed")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 18);
    // desk scale at 500 km/h: l_max 3, k_max 4, so the full guard spans 7 x 17 cells
    assert!(rows.contains(&"overhead,overhead_count,,,5.00000000000e2,,full_guard,1.19000000000e2,,1,1"));
}

#[test]
fn json_output_mirrors_csv_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out_dir = dir.path().join("out");
    let out = run(&["ber", "--config", &cfg, "--format", "json", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(out_dir.join("ber.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let rows = v.as_array().unwrap();
    // BER and SER at two SNR points
    assert_eq!(rows.len(), 4);
    for r in rows {
        assert_eq!(r["trials"], 3);
        assert_eq!(r["antennas"], 32);
        assert!(r["ci_half_width"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn seed_changes_results_and_repeats_them() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let a = run(&["ber", "--config", &cfg, "--seed", "3", "--mode", "time"]);
    let b = run(&["ber", "--config", &cfg, "--seed", "3", "--mode", "time"]);
    let c = run(&["ber", "--config", &cfg, "--seed", "4", "--mode", "time"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn bad_config_key_is_a_one_line_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    std::fs::write(&path, "trials = 3\nnot_a_key = 1\n").unwrap();
    let out = run(&["ber", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error: config: line 2: key `not_a_key`"), "{err}");
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [&["nonsense"][..], &["ber", "--mode", "sideways"][..]] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2));
        let err = String::from_utf8(out.stderr).unwrap();
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.starts_with("error: usage:"), "{err}");
    }
}

#[test]
fn selftest_prints_one_verdict_per_check() {
    let out = run(&["selftest"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 8);
    assert!(lines.iter().all(|l| l.starts_with("PASS ")), "{text}");
}
