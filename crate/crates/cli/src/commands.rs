//! The four commands. Each evaluates everything in memory first and only
//! then hands the finished tables to the writer.

use clap::ValueEnum;
use rayon::prelude::*;

use darboux_core::checks::{CheckContext, Suite, VerifyReport};
use darboux_core::classical::TrajectorySpec;
use darboux_core::coherent::{psi_tilde_z, psi_z, phi_z, CoherentLabel, Family};
use darboux_core::darboux::DarbouxModel;
use darboux_core::hg_modes::BaseOscillator;
use darboux_core::{Result as CoreResult, C64};

use crate::config::Checked;
use crate::error::CliError;
use crate::output::{fmt_f64, CsvTable, OutputFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Potential,
    States,
    Coherent,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Potential => "potential",
            Command::States => "states",
            Command::Coherent => "coherent",
            Command::Verify => "verify",
        }
    }
}

fn meta(checked: &Checked, command: &str, traj: &TrajectorySpec) -> Vec<String> {
    let p = checked.params;
    let m = &checked.model;
    let mut lines = vec![
        format!("darboux-lab {command}"),
        format!(
            "oscillator m={} omega0={} hbar={} t0={}",
            fmt_f64(p.m),
            fmt_f64(p.omega0),
            fmt_f64(p.hbar),
            fmt_f64(p.t0)
        ),
        format!(
            "ermakov a={} b={} c={} lambda={}",
            fmt_f64(m.a()),
            fmt_f64(m.b()),
            fmt_f64(m.c()),
            fmt_f64(m.lambda())
        ),
        format!("trajectory x0={} p0={}", fmt_f64(traj.x0), fmt_f64(traj.p0)),
    ];
    if let Some(d) = checked.darboux {
        lines.push(format!(
            "darboux epsilon={} k_a={} k_b={}",
            fmt_f64(d.epsilon),
            fmt_f64(d.k_a),
            fmt_f64(d.k_b)
        ));
    }
    lines
}

fn darboux_models(checked: &Checked) -> Result<Vec<DarbouxModel>, CliError> {
    let spec = checked
        .darboux
        .ok_or_else(|| CliError::Config("this command needs a darboux section".into()))?;
    checked
        .trajectories
        .iter()
        .map(|t| Ok(DarbouxModel::new(spec, BaseOscillator::new(checked.model, *t)?)?))
        .collect()
}

fn oscillators(checked: &Checked) -> Result<Vec<BaseOscillator>, CliError> {
    checked.trajectories.iter().map(|t| Ok(BaseOscillator::new(checked.model, *t)?)).collect()
}

/// Space-time table: first column t, one column per grid point.
fn space_time<F>(checked: &Checked, mut meta: Vec<String>, quantity: &str, value: F) -> Result<CsvTable, CliError>
where
    F: Fn(f64, f64) -> CoreResult<f64> + Sync,
{
    let xs = checked.grid.points();
    meta.push(format!("{quantity}; rows are times, columns after t are x positions"));
    let mut header = vec!["t".to_string()];
    header.extend(xs.iter().map(|&x| fmt_f64(x)));
    let mut table = CsvTable::new(meta, header);
    table.rows = checked
        .scenario
        .heatmap_times()
        .par_iter()
        .map(|&t| {
            let mut row = Vec::with_capacity(xs.len() + 1);
            row.push(t);
            for &x in &xs {
                row.push(value(x, t)?);
            }
            Ok(row)
        })
        .collect::<CoreResult<Vec<_>>>()?;
    finite(table)
}

fn finite(table: CsvTable) -> Result<CsvTable, CliError> {
    if table.all_finite() {
        Ok(table)
    } else {
        Err(CliError::Numerical("non-finite value in output grid".into()))
    }
}

fn file(name: String, table: &CsvTable) -> OutputFile {
    OutputFile { name, contents: table.render() }
}

/// V₀, V₁ and V₁ − V₀ at each listed time, plus the V₁ space-time grid.
pub fn potential(checked: &Checked) -> Result<Vec<OutputFile>, CliError> {
    let models = darboux_models(checked)?;
    let xs = checked.grid.points();
    let mut files = Vec::new();
    for (k, m) in models.iter().enumerate() {
        let tr = m.base().traj();
        for (j, &t) in checked.scenario.times.iter().enumerate() {
            let snap = m.snapshot(t);
            let mut md = meta(checked, "potential", tr);
            md.push(format!("time={}", fmt_f64(t)));
            let mut table = CsvTable::new(md, ["x", "V0", "V1", "V1_minus_V0"].map(String::from).to_vec());
            table.rows = xs
                .par_iter()
                .map(|&x| {
                    let v0 = snap.v0(x);
                    let v1 = snap.v1(x)?;
                    Ok(vec![x, v0, v1, v1 - v0])
                })
                .collect::<CoreResult<Vec<_>>>()?;
            files.push(file(format!("potential_traj{k}_t{j}.csv"), &finite(table)?));
        }
        let heat = space_time(checked, meta(checked, "potential", tr), "V1(x,t)", |x, t| m.potential_v1(x, t))?;
        files.push(file(format!("potential_heatmap_traj{k}.csv"), &heat));
    }
    Ok(files)
}

/// |ψₙ|² space-time grids, or |φₙ|² when no transformation is configured.
pub fn states(checked: &Checked) -> Result<Vec<OutputFile>, CliError> {
    let mut files = Vec::new();
    let ns = &checked.scenario.states;
    if checked.darboux.is_some() {
        for (k, m) in darboux_models(checked)?.iter().enumerate() {
            for &n in ns {
                let md = meta(checked, "states", m.base().traj());
                let table = space_time(checked, md, &format!("|psi_{n}(x,t)|^2"), |x, t| {
                    Ok(m.psi_n(n, x, t)?.norm_sqr())
                })?;
                files.push(file(format!("states_traj{k}_n{n}.csv"), &table));
            }
        }
    } else {
        for (k, osc) in oscillators(checked)?.iter().enumerate() {
            for &n in ns {
                let md = meta(checked, "states", osc.traj());
                let table = space_time(checked, md, &format!("|phi_{n}(x,t)|^2"), |x, t| {
                    Ok(osc.snapshot(t).phi_n(n, x)?.norm_sqr())
                })?;
                files.push(file(format!("modes_traj{k}_n{n}.csv"), &table));
            }
        }
    }
    Ok(files)
}

fn label_tag(z: C64) -> String {
    format!("z={}{}{}i", fmt_f64(z.re), if z.im < 0.0 { "" } else { "+" }, fmt_f64(z.im))
}

/// Coherent-state density grids for every (trajectory, z).
pub fn coherent(checked: &Checked) -> Result<Vec<OutputFile>, CliError> {
    let section = checked
        .scenario
        .coherent
        .as_ref()
        .ok_or_else(|| CliError::Config("this command needs a coherent section".into()))?;
    let family: Family = section.family.into();
    let mut files = Vec::new();
    let emit = |files: &mut Vec<OutputFile>,
                k: usize,
                j: usize,
                traj: &TrajectorySpec,
                label: &CoherentLabel,
                value: &(dyn Fn(f64, f64) -> CoreResult<C64> + Sync)|
     -> Result<(), CliError> {
        let mut md = meta(checked, "coherent", traj);
        md.push(format!("family={} {} cap={}", family.name(), label_tag(label.z()), label.cap()));
        let table = space_time(checked, md, &format!("|{}_z(x,t)|^2", family.name()), |x, t| {
            Ok(value(x, t)?.norm_sqr())
        })?;
        files.push(file(format!("coherent_{}_traj{k}_z{j}.csv", family.name()), &table));
        Ok(())
    };
    match family {
        Family::Phi => {
            for (k, osc) in oscillators(checked)?.iter().enumerate() {
                for (j, label) in checked.coherent.iter().enumerate() {
                    emit(&mut files, k, j, osc.traj(), label, &|x, t| phi_z(osc, label, x, t))?;
                }
            }
        }
        Family::Psi | Family::PsiTilde => {
            if checked.darboux.is_none() {
                return Err(CliError::Config(format!("family {} needs a darboux section", family.name())));
            }
            for (k, m) in darboux_models(checked)?.iter().enumerate() {
                for (j, label) in checked.coherent.iter().enumerate() {
                    let tr = m.base().traj();
                    if family == Family::Psi {
                        emit(&mut files, k, j, tr, label, &|x, t| psi_z(m, label, x, t))?;
                    } else {
                        emit(&mut files, k, j, tr, label, &|x, t| psi_tilde_z(m, label, x, t))?;
                    }
                }
            }
        }
    }
    Ok(files)
}

/// The check context for a scenario: its physics, the reference sampling
/// grid and times, and its coherent labels with |z| ≤ 3 added to the defaults.
pub fn check_context(checked: &Checked) -> CheckContext {
    let mut ctx = CheckContext::reference();
    ctx.params = checked.params;
    ctx.ermakov = checked.ermakov;
    ctx.trajectories = checked.trajectories.clone();
    ctx.darboux = checked.darboux;
    for label in &checked.coherent {
        if label.z().norm() <= 3.0 && !ctx.coherent_z.contains(&label.z()) {
            ctx.coherent_z.push(label.z());
        }
    }
    ctx
}

/// Runs a suite; the JSON report is returned whether or not it passed.
pub fn verify(checked: &Checked, suite: Suite) -> Result<(VerifyReport, OutputFile), CliError> {
    if suite.needs_darboux() && checked.darboux.is_none() {
        return Err(CliError::Config("the darboux suite needs a darboux section".into()));
    }
    if let Some(spec) = checked.darboux {
        if matches!(suite, Suite::Darboux | Suite::All) {
            // certification failures are reported as such, before any check runs
            let report = darboux_core::darboux::certify_nodeless(&spec, spec.default_window());
            if !report.passed {
                let _ = DarbouxModel::new(spec, BaseOscillator::new(checked.model, checked.trajectories[0])?)?;
            }
        }
    }
    let report = Suite::run(suite, &check_context(checked));
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Numerical(e.to_string()))?;
    Ok((report, OutputFile { name: "verify_report.json".into(), contents: json + "\n" }))
}
