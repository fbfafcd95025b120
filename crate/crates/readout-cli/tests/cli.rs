//! End-to-end tests driving the compiled binary.

use std::path::Path;
use std::process::{Command, Output};

fn readout(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_readout"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

#[test]
fn stats_reports_the_reference_point() {
    let out = readout(&["stats", "--dx", "D=0.6", "X=0.15", "tau=20"]);
    let doc = json_of(&out);
    assert_eq!(doc["schema"], "readout/1");
    assert_eq!(doc["command"], "stats");
    let n_up = doc["n_up"].as_f64().unwrap();
    let n_down = doc["n_down"].as_f64().unwrap();
    assert!((n_up - 20.0 / 1.2025).abs() < 1e-9, "n_up {n_up}");
    assert!((n_down - 12.8).abs() < 1e-9, "n_down {n_down}");
    assert_eq!(doc["degenerate"], false);
}

#[test]
fn stats_accepts_deltak_and_agrees_with_dx() {
    let a = json_of(&readout(&["stats", "--dx", "D=0.6", "X=0.15", "tau=20"]));
    let b = json_of(&readout(&[
        "stats",
        "--deltak",
        "Delta=4.0",
        "K=6.666666666666667",
        "Tm=3.0",
    ]));
    let fa = a["fidelity"].as_f64().unwrap();
    let fb = b["fidelity"].as_f64().unwrap();
    assert!((fa - fb).abs() < 1e-9);
}

#[test]
fn optimize_snr_small_pull_asymptote() {
    let doc = json_of(&readout(&["optimize-snr", "--X", "1e-3"]));
    let d = doc["d_opt"].as_f64().unwrap();
    assert!(
        (d - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-3,
        "d_opt {d}"
    );
}

#[test]
fn optimize_snr_joint_coefficients() {
    let sym = json_of(&readout(&["optimize-snr", "--joint"]));
    assert!((sym["delta"].as_f64().unwrap() - 1.1180).abs() < 1e-3);
    assert!((sym["k"].as_f64().unwrap() - 0.8660).abs() < 1e-3);
    assert!((sym["snr_coefficient"].as_f64().unwrap() - 0.570).abs() < 1e-3);
    let asym = json_of(&readout(&["optimize-snr", "--joint", "--asymmetric"]));
    assert!((asym["snr_coefficient"].as_f64().unwrap() - 0.806).abs() < 1e-3);
}

#[test]
fn optimize_fidelity_point_and_jumps() {
    let doc = json_of(&readout(&["optimize-fidelity", "--X", "1", "--tau", "20"]));
    let d = doc["d_opt"].as_f64().unwrap();
    assert!((d - 1.14417).abs() < 1e-4, "d_opt {d}");
    assert_eq!(doc["n_th"], 10);

    let jumps = json_of(&readout(&[
        "optimize-fidelity",
        "--X",
        "1",
        "--jumps",
        "--tau-min",
        "0.5",
        "--tau-max",
        "9",
    ]));
    let list = jumps["jumps"].as_array().unwrap();
    assert!(list.len() >= 3);
    let first = list[0]["time"].as_f64().unwrap();
    assert!((first - 2.2).abs() < 0.3, "first jump at {first}");
}

#[test]
fn estimate_from_config_file() {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/transmon.toml");
    let doc = json_of(&readout(&[
        "estimate",
        "--physical",
        config.to_str().unwrap(),
        "--target-fidelity",
        "0.95",
        "--asymmetric",
    ]));
    let t_m = doc["t_m_seconds"].as_f64().unwrap();
    assert!(t_m > 1e-8 && t_m < 1e-5, "t_m {t_m}");
    let f = doc["fidelity"].as_f64().unwrap();
    assert!((f - 0.95).abs() < 1e-3);
    // symmetric variant is exactly twice the asymmetric duration
    let sym = doc["t_m_seconds_symmetric"].as_f64().unwrap();
    let asym = doc["t_m_seconds_asymmetric"].as_f64().unwrap();
    assert!((sym / asym - 2.0).abs() < 1e-9);
    assert_eq!(doc["regime"]["overall"], "ok");
}

#[test]
fn sweep_csv_round_trips() {
    let out = readout(&["sweep", "--dx", "D=0.2:2.0:40", "X=0.15:0.9:4", "tau=5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert_eq!(
        header,
        "d,x,tau_m,n_up,n_down,snr,n_th,fidelity,fidelity_on_off,fidelity_gaussian,degenerate"
    );
    let mut checked = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        let (d, x, tau) = (v[0], v[1], v[2]);
        // Re-evaluate the row from its inputs; stored outputs must
        // reproduce to 1e-9.
        let n_up = tau / ((d - x) * (d - x) + 1.0);
        let n_down = tau / ((d + x) * (d + x) + 1.0);
        assert!((v[3] - n_up).abs() <= 1e-9 * n_up.abs());
        assert!((v[4] - n_down).abs() <= 1e-9 * n_down.abs());
        let snr = n_up.sqrt() - n_down.sqrt();
        assert!((v[5] - snr).abs() <= 1e-9);
        checked += 1;
    }
    assert_eq!(checked, 160);
}

#[test]
fn sweep_is_deterministic_across_job_counts() {
    let run = |jobs: &str| {
        let out = readout(&[
            "sweep",
            "--dx",
            "D=0.2:2.0:25",
            "X=0.5",
            "tau=1:30:8",
            "--jobs",
            jobs,
        ]);
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap()
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn mc_check_agrees_and_is_seed_stable() {
    let run = || {
        json_of(&readout(&[
            "mc-check", "--dx", "D=0.8", "X=0.4", "tau=6", "--trials", "400000", "--seed", "11",
            "--jobs", "3",
        ]))
    };
    let a = run();
    assert_eq!(a["verdict"], "agree");
    let b = run();
    assert_eq!(
        a["empirical_fidelity"].as_f64().unwrap(),
        b["empirical_fidelity"].as_f64().unwrap()
    );
}

#[test]
fn figures_emit_expected_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = readout(&[
        "figures",
        "--which",
        "fig5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("fig5.csv")).unwrap();
    let mut best = 0.0f64;
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        best = best.max(v[2]);
    }
    // The grid peak sits at the documented reference maximum.
    assert!((0.945..=0.965).contains(&best), "fig5 max {best}");

    let out = readout(&[
        "figures",
        "--which",
        "fig4",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("fig4.csv")).unwrap();
    // Each distribution normalizes over the emitted support.
    let mut sums = std::collections::HashMap::new();
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        let entry = sums.entry(v[0].to_bits()).or_insert((0.0, 0.0));
        entry.0 += v[2];
        entry.1 += v[3];
    }
    for (_, (up, down)) in sums {
        assert!((up - 1.0).abs() < 1e-6, "p_up sums to {up}");
        assert!((down - 1.0).abs() < 1e-6, "p_down sums to {down}");
    }
}

#[test]
fn exit_codes_distinguish_error_classes() {
    // usage: unknown flag
    let out = readout(&["stats", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    // usage: no parametrization
    let out = readout(&["stats"]);
    assert_eq!(out.status.code(), Some(2));
    // domain: negative detuning
    let out = readout(&["stats", "--dx", "D=-1", "X=0.5", "tau=1"]);
    assert_eq!(out.status.code(), Some(3));
    // domain: zero trials
    let out = readout(&["mc-check", "--dx", "D=1", "X=0.5", "tau=1", "--trials", "0"]);
    assert_eq!(out.status.code(), Some(3));
    // machine-readable error body on stderr
    let err: serde_json::Value =
        serde_json::from_slice(&readout(&["stats", "--dx", "D=-1", "X=0.5", "tau=1"]).stderr)
            .unwrap();
    assert_eq!(err["error"]["kind"], "domain");
}

#[test]
fn degenerate_points_do_not_abort() {
    let doc = json_of(&readout(&["stats", "--dx", "D=0", "X=0.5", "tau=2"]));
    assert_eq!(doc["degenerate"], true);
    assert_eq!(doc["fidelity"].as_f64().unwrap(), 0.0);
    assert!(doc["n_th"].is_null());
}
