use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use darboux_core::classical::{validate, ErmakovSpec, OscillatorParams};
use darboux_lab::presets;
use darboux_lab::Scenario;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_darboux-lab"));
    c.env_remove("DARBOUX_LAB_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_scenario(dir: &Path, s: &Scenario) -> PathBuf {
    let p = dir.join("scenario.json");
    fs::write(&p, s.to_json()).unwrap();
    p
}

/// Data rows of a CSV file, metadata and header stripped.
fn rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let data = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, data)
}

fn small(darboux: bool) -> Scenario {
    let mut s = presets::scenario("fig3").unwrap();
    s.trajectories.truncate(2);
    s.grid.x_min = -15.0;
    s.grid.x_max = 15.0;
    s.grid.n_points = 601;
    s.time_grid = None;
    s.times = vec![0.0, 1.3, 6.0];
    if !darboux {
        s.darboux = None;
    }
    s
}

#[test]
fn verify_all_on_fig1_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["verify", "--preset", "fig1", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify_report.json")).unwrap()).unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.len() > 50);
    assert!(checks.iter().all(|c| c["passed"] == true));
    // the wrong-state control is present and marked as passing
    assert!(checks
        .iter()
        .any(|c| c["negative_control"] == true && c["name"].as_str().unwrap().contains("rejected as a solution")));
}

#[test]
fn ermakov_violation_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = small(false);
    s.ermakov.c = 3.0;
    let cfg = write_scenario(dir.path(), &s);
    let out = run(&["verify", "--config", cfg.to_str().unwrap(), "--suite", "classical"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_key_and_unknown_preset_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("typo.json");
    let text = small(true).to_json().replacen("\"omega0\"", "\"omega_0\"", 1);
    fs::write(&cfg, text).unwrap();
    assert_eq!(run(&["potential", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["potential", "--preset", "fig9"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--preset", "fig1", "--suite", "nope"]).status.code(), Some(2));
}

#[test]
fn nodal_transformation_exits_3_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = small(true);
    s.darboux.as_mut().unwrap().k_a = 0.5;
    let cfg = write_scenario(dir.path(), &s);
    let out_dir = dir.path().join("out");
    let out = run(&["potential", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out_dir.exists() || fs::read_dir(&out_dir).unwrap().next().is_none());
}

#[test]
fn potential_shift_is_constant_in_the_trivial_case() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = small(true);
    s.darboux = Some(darboux_lab::config::DarbouxSection { epsilon: 0.5, k_a: 1.0, k_b: 0.0 });
    let cfg = write_scenario(dir.path(), &s);
    let out = run(&["potential", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let model = validate(OscillatorParams::new(1.0, 0.5, 1.0, 0.0).unwrap(), ErmakovSpec::new(1.0, 4.0)).unwrap();
    for (j, &t) in s.times.iter().enumerate() {
        let (header, data) = rows(&dir.path().join(format!("potential_traj1_t{j}.csv")));
        assert_eq!(header, ["x", "V0", "V1", "V1_minus_V0"]);
        let want = 2.0 * 1.0 * 0.5 / model.alpha(t).powi(2);
        for r in &data {
            assert!((r[3] - want).abs() < 1e-12 * want);
        }
    }
    let (header, data) = rows(&dir.path().join("potential_heatmap_traj0.csv"));
    assert_eq!(header.len(), 602);
    assert_eq!(data.len(), 3);
}

#[test]
fn ground_state_densities_are_normalized() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(dir.path(), &small(true));
    let out = run(&["states", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    for k in 0..2 {
        for n in 0..3 {
            let (header, data) = rows(&dir.path().join(format!("states_traj{k}_n{n}.csv")));
            let xs: Vec<f64> = header[1..].iter().map(|h| h.parse().unwrap()).collect();
            let dx = xs[1] - xs[0];
            for r in &data {
                let d = &r[1..];
                let integral = dx * (d.iter().sum::<f64>() - 0.5 * (d[0] + d[d.len() - 1]));
                assert!((integral - 1.0).abs() < 1e-6, "k={k} n={n} t={} {integral}", r[0]);
            }
        }
    }
}

#[test]
fn states_without_transformation_fall_back_to_modes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(dir.path(), &small(false));
    let out = run(&["states", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    assert!(dir.path().join("modes_traj0_n2.csv").exists());
    assert!(!dir.path().join("states_traj0_n2.csv").exists());
}

#[test]
fn zero_label_coherent_states() {
    let dir = tempfile::tempdir().unwrap();
    let base = small(true);
    let x = |h: &[String]| -> Vec<f64> { h[1..].iter().map(|v| v.parse().unwrap()).collect() };
    // φ_z at z = 0 is the ground packet
    let mut s = base.clone();
    s.coherent = Some(darboux_lab::config::CoherentSection { z: vec![[0.0, 0.0]], family: darboux_lab::config::FamilyName::Phi });
    let cfg = write_scenario(dir.path(), &s);
    let phi_dir = dir.path().join("phi");
    assert!(run(&["coherent", "--config", cfg.to_str().unwrap(), "--out", phi_dir.to_str().unwrap()]).status.success());
    let (h, data) = rows(&phi_dir.join("coherent_phi_traj0_z0.csv"));
    let model = validate(OscillatorParams::new(1.0, 0.5, 1.0, 0.0).unwrap(), ErmakovSpec::new(1.0, 4.0)).unwrap();
    for r in &data {
        let alpha = model.alpha(r[0]);
        // |φ₀|² = (k/α)(1/√π) e^{−χ²}, k = 1
        for (xv, d) in x(&h).iter().zip(&r[1..]) {
            let chi = xv / alpha;
            let want = (-chi * chi).exp() / (alpha * std::f64::consts::PI.sqrt());
            assert!((d - want).abs() < 1e-13);
        }
    }
    // ψ̃_z at z = 0 is the missing state, ψ_z at z = 0 is |Lφ₀|² normalized
    s.coherent.as_mut().unwrap().family = darboux_lab::config::FamilyName::PsiTilde;
    let cfg = write_scenario(dir.path(), &s);
    let tilde_dir = dir.path().join("tilde");
    assert!(run(&["coherent", "--config", cfg.to_str().unwrap(), "--out", tilde_dir.to_str().unwrap()]).status.success());
    let states_dir = dir.path().join("states");
    assert!(run(&["states", "--config", cfg.to_str().unwrap(), "--out", states_dir.to_str().unwrap()]).status.success());
    let (_, a) = rows(&tilde_dir.join("coherent_psi_tilde_traj1_z0.csv"));
    let (_, b) = rows(&states_dir.join("states_traj1_n0.csv"));
    for (ra, rb) in a.iter().zip(&b) {
        for (va, vb) in ra.iter().zip(rb) {
            assert!((va - vb).abs() < 1e-14);
        }
    }
    s.coherent.as_mut().unwrap().family = darboux_lab::config::FamilyName::Psi;
    let cfg = write_scenario(dir.path(), &s);
    let psi_dir = dir.path().join("psi");
    assert!(run(&["coherent", "--config", cfg.to_str().unwrap(), "--out", psi_dir.to_str().unwrap()]).status.success());
    let (_, a) = rows(&psi_dir.join("coherent_psi_traj0_z0.csv"));
    let (_, b) = rows(&states_dir.join("states_traj0_n1.csv"));
    for (ra, rb) in a.iter().zip(&b) {
        for (va, vb) in ra.iter().zip(rb) {
            assert!((va - vb).abs() < 1e-12);
        }
    }
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(dir.path(), &small(true));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run(&["potential", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap(), "--threads", "1"]).status.success());
    let out = bin()
        .args(["potential", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap()])
        .env("DARBOUX_LAB_THREADS", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 2 * 3 + 2);
    for n in names {
        assert_eq!(fs::read(a.join(&n)).unwrap(), fs::read(b.join(&n)).unwrap());
    }
}

#[test]
fn bad_thread_settings_are_config_errors() {
    assert_eq!(run(&["verify", "--preset", "fig1", "--threads", "0"]).status.code(), Some(2));
    let out = bin().args(["verify", "--preset", "fig1", "--suite", "classical"]).env("DARBOUX_LAB_THREADS", "many").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_sections_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(dir.path(), &small(false));
    let out_dir = dir.path().join("o");
    let o = out_dir.to_str().unwrap();
    assert_eq!(run(&["potential", "--config", cfg.to_str().unwrap(), "--out", o]).status.code(), Some(2));
    assert_eq!(run(&["coherent", "--config", cfg.to_str().unwrap(), "--out", o]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--config", cfg.to_str().unwrap(), "--suite", "darboux", "--out", o]).status.code(), Some(2));
}
