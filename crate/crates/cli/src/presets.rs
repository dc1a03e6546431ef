//! Built-in scenarios for the published figure parameters.
//!
//! Two families share m = ħ = 1, ω₀ = ½, t₀ = 0 and the trajectories
//! (0,0), (3,0), (3,1): ε = −½ with k_a = 0.89 k_b, a = 1, c = 4, and
//! ε = −3/2 with k_a = 1.7 k_b, a = 1, c = 5.

use crate::commands::Command;
use crate::config::{
    CoherentSection, DarbouxSection, ErmakovSection, FamilyName, GridSection, OscillatorSection, Scenario,
    TimeGridSection, TrajectorySection,
};
use crate::error::CliError;

pub const NAMES: [&str; 8] = ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8"];

fn base(epsilon: f64, k_a: f64, c: f64) -> Scenario {
    Scenario {
        oscillator: OscillatorSection { m: 1.0, omega0: 0.5, hbar: 1.0, t0: 0.0 },
        ermakov: ErmakovSection { a: 1.0, c, lambda: None },
        trajectories: [(0.0, 0.0), (3.0, 0.0), (3.0, 1.0)]
            .into_iter()
            .map(|(x0, p0)| TrajectorySection { x0, p0 })
            .collect(),
        darboux: Some(DarbouxSection { epsilon, k_a, k_b: 1.0 }),
        grid: GridSection { x_min: -12.0, x_max: 12.0, n_points: 241 },
        times: vec![0.2, 6.0],
        time_grid: Some(TimeGridSection { t_min: 0.0, t_max: 25.0, n_points: 251 }),
        states: vec![0, 1, 2],
        coherent: None,
        output_dir: None,
    }
}

fn curves(mut s: Scenario) -> Scenario {
    s.grid = GridSection { x_min: -12.0, x_max: 12.0, n_points: 1201 };
    s
}

fn coherent(mut s: Scenario) -> Scenario {
    s.coherent = Some(CoherentSection { z: vec![[0.0, 1.0], [3.0, -3.0]], family: FamilyName::Psi });
    s
}

/// The scenario behind a preset name.
pub fn scenario(name: &str) -> Result<Scenario, CliError> {
    let first = || base(-0.5, 0.89, 4.0);
    let second = || base(-1.5, 1.7, 5.0);
    Ok(match name {
        "fig1" => curves(first()),
        "fig2" | "fig3" => first(),
        "fig4" => coherent(first()),
        "fig5" | "fig6" => second(),
        "fig7" => curves(second()),
        "fig8" => coherent(second()),
        other => return Err(CliError::Config(format!("unknown preset '{other}' (expected one of {NAMES:?})"))),
    })
}

/// The command that regenerates a preset's figure data.
pub fn command(name: &str) -> Result<Command, CliError> {
    Ok(match name {
        "fig1" | "fig2" | "fig5" | "fig7" => Command::Potential,
        "fig3" | "fig6" => Command::States,
        "fig4" | "fig8" => Command::Coherent,
        other => return Err(CliError::Config(format!("unknown preset '{other}'"))),
    })
}
