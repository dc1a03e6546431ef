//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use darboux_core::checks::{
    coherent_checks, darboux_checks, ermakov_checks, invariant_checks, missing_state_checks, mode_basis_checks,
    CheckContext, VerifyReport,
};
use darboux_core::classical::{ErmakovSpec, TrajectorySpec};
use darboux_core::darboux::DarbouxSpec;
use darboux_lab::{presets, run_preset};

struct Criterion {
    id: usize,
    title: &'static str,
    budget_s: f64,
}

/// ε = −3/2 with k_a = 1.7 k_b, a = 1, c = 5.
fn second_family() -> CheckContext {
    let mut ctx = CheckContext::reference();
    ctx.ermakov = ErmakovSpec::new(1.0, 5.0);
    ctx.darboux = Some(DarbouxSpec::new(-1.5, 1.7, 1.0).unwrap());
    ctx
}

fn merged(reports: impl IntoIterator<Item = VerifyReport>) -> VerifyReport {
    let mut all = VerifyReport::default();
    for r in reports {
        all.extend(r);
    }
    all
}

fn summarize(report: &VerifyReport) -> (bool, String) {
    let failed: Vec<String> = report.failures().map(|c| c.name.clone()).collect();
    let worst = report
        .checks
        .iter()
        .filter(|c| !c.negative_control && c.threshold > 0.0)
        .map(|c| match c.relation {
            darboux_core::checks::Relation::Below => c.measured / c.threshold,
            darboux_core::checks::Relation::Above => c.threshold / c.measured,
        })
        .fold(0.0f64, |a, b| if b.is_nan() { f64::NAN } else { a.max(b) });
    let detail = if failed.is_empty() {
        format!("{} checks, worst measured/threshold {:.2e}", report.checks.len(), worst)
    } else {
        format!("{} of {} checks failed: {}", failed.len(), report.checks.len(), failed.join("; "))
    };
    (failed.is_empty(), detail)
}

fn criterion_1() -> (bool, String) {
    summarize(&ermakov_checks(&CheckContext::reference()))
}

fn criterion_2() -> (bool, String) {
    let mut ctx = CheckContext::reference();
    ctx.trajectories = vec![TrajectorySpec::new(0.0, 0.0), TrajectorySpec::new(3.0, 1.0)];
    summarize(&mode_basis_checks(&ctx))
}

fn criterion_3() -> (bool, String) {
    summarize(&merged([invariant_checks(&CheckContext::reference()), invariant_checks(&second_family())]))
}

fn criterion_4() -> (bool, String) {
    summarize(&merged([darboux_checks(&CheckContext::reference()), darboux_checks(&second_family())]))
}

fn criterion_5() -> (bool, String) {
    summarize(&merged([missing_state_checks(&CheckContext::reference()), missing_state_checks(&second_family())]))
}

fn criterion_6() -> (bool, String) {
    summarize(&merged([coherent_checks(&CheckContext::reference()), coherent_checks(&second_family())]))
}

fn csv_grid(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().ok_or("empty file")?.split(',').map(String::from).collect::<Vec<_>>();
    let mut rows = Vec::new();
    for l in lines {
        let row = l
            .split(',')
            .map(|v| v.parse::<f64>().map_err(|e| format!("{}: '{v}' {e}", path.display())))
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != header.len() {
            return Err(format!("{}: ragged row", path.display()));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

fn local_maxima(values: &[f64], floor: f64) -> usize {
    let peak = values.iter().cloned().fold(0.0, f64::max);
    (1..values.len() - 1)
        .filter(|&i| values[i] > values[i - 1] && values[i] >= values[i + 1] && values[i] > floor * peak)
        .count()
}

fn criterion_7() -> (bool, String) {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return (false, e.to_string()),
    };
    let mut problems = Vec::new();
    let mut files = 0;
    for name in presets::NAMES {
        let out = dir.path().join(name);
        match run_preset(name, &out) {
            Ok(outcome) => {
                for f in &outcome.files {
                    files += 1;
                    match csv_grid(f) {
                        Ok((_, rows)) if rows.is_empty() => problems.push(format!("{}: no rows", f.display())),
                        Ok((_, rows)) => {
                            if rows.iter().flatten().any(|v| !v.is_finite()) {
                                problems.push(format!("{}: non-finite value", f.display()));
                            }
                        }
                        Err(e) => problems.push(e),
                    }
                }
                let s = presets::scenario(name).unwrap();
                let expected = match presets::command(name).unwrap() {
                    darboux_lab::Command::Potential => s.trajectories.len() * (s.times.len() + 1),
                    darboux_lab::Command::States => s.trajectories.len() * s.states.len(),
                    _ => s.trajectories.len() * s.coherent.as_ref().map_or(0, |c| c.z.len()),
                };
                if outcome.files.len() != expected {
                    problems.push(format!("{name}: {} files, expected {expected}", outcome.files.len()));
                }
            }
            Err(e) => problems.push(format!("{name}: {e}")),
        }
    }
    // |ψ_z|² at z = i, t = 0: two maxima for each trajectory
    let mut maxima = Vec::new();
    for k in 0..3 {
        match csv_grid(&dir.path().join("fig4").join(format!("coherent_psi_traj{k}_z0.csv"))) {
            Ok((_, rows)) => {
                let first = &rows[0];
                if first[0] != 0.0 {
                    problems.push("fig4 grid does not start at t = 0".into());
                }
                maxima.push(local_maxima(&first[1..], 1e-3));
            }
            Err(e) => problems.push(e),
        }
    }
    if maxima.iter().any(|&m| m < 2) {
        problems.push(format!("psi_z(z=i) maxima at t=0 per trajectory: {maxima:?}"));
    }
    if problems.is_empty() {
        (true, format!("{files} CSV grids finite and real; psi_z(z=i) maxima at t=0: {maxima:?}"))
    } else {
        (false, problems.join("; "))
    }
}

fn main() -> ExitCode {
    let criteria: [(Criterion, fn() -> (bool, String)); 7] = [
        (Criterion { id: 1, title: "Ermakov/Riccati layer", budget_s: 1.0 }, criterion_1),
        (Criterion { id: 2, title: "mode basis", budget_s: 10.0 }, criterion_2),
        (Criterion { id: 3, title: "invariants", budget_s: 30.0 }, criterion_3),
        (Criterion { id: 4, title: "Darboux consistency", budget_s: 30.0 }, criterion_4),
        (Criterion { id: 5, title: "missing state", budget_s: 20.0 }, criterion_5),
        (Criterion { id: 6, title: "coherent states", budget_s: 60.0 }, criterion_6),
        (Criterion { id: 7, title: "figure regeneration", budget_s: 120.0 }, criterion_7),
    ];
    let mut all = true;
    for (c, check) in criteria {
        let start = Instant::now();
        let (ok, detail) = check();
        let secs = start.elapsed().as_secs_f64();
        let in_time = secs < c.budget_s;
        let passed = ok && in_time;
        all &= passed;
        let timing = if in_time {
            format!("{secs:.2} s < {} s", c.budget_s)
        } else {
            format!("{secs:.2} s exceeds {} s", c.budget_s)
        };
        println!(
            "acceptance criterion {}: {} ({}) [{timing}] {detail}",
            c.id,
            if passed { "PASS" } else { "FAIL" },
            c.title
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
