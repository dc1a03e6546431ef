//! Scenario files: JSON with a fixed schema, unknown keys rejected.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use darboux_core::classical::{validate, ErmakovSpec, OscillatorParams, TrajectorySpec, ValidatedModel};
use darboux_core::coherent::{CoherentLabel, Family};
use darboux_core::darboux::DarbouxSpec;
use darboux_core::hg_modes::MODE_CAP;
use darboux_core::verify::Grid1D;
use darboux_core::C64;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatorSection {
    pub m: f64,
    pub omega0: f64,
    pub hbar: f64,
    #[serde(default)]
    pub t0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErmakovSection {
    pub a: f64,
    pub c: f64,
    /// Defaults to mω₀/ħ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    pub x0: f64,
    pub p0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DarbouxSection {
    pub epsilon: f64,
    pub k_a: f64,
    pub k_b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

/// Uniform time axis of the space-time grids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGridSection {
    pub t_min: f64,
    pub t_max: f64,
    pub n_points: usize,
}

impl TimeGridSection {
    pub fn points(&self) -> Vec<f64> {
        if self.n_points == 1 {
            return vec![self.t_min];
        }
        let h = (self.t_max - self.t_min) / (self.n_points - 1) as f64;
        (0..self.n_points)
            .map(|i| if i + 1 == self.n_points { self.t_max } else { self.t_min + i as f64 * h })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Phi,
    Psi,
    PsiTilde,
}

impl From<FamilyName> for Family {
    fn from(f: FamilyName) -> Self {
        match f {
            FamilyName::Phi => Family::Phi,
            FamilyName::Psi => Family::Psi,
            FamilyName::PsiTilde => Family::PsiTilde,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherentSection {
    /// Labels as [re, im] pairs.
    pub z: Vec<[f64; 2]>,
    pub family: FamilyName,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub oscillator: OscillatorSection,
    pub ermakov: ErmakovSection,
    pub trajectories: Vec<TrajectorySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub darboux: Option<DarbouxSection>,
    pub grid: GridSection,
    /// Times of the single-slice curves.
    pub times: Vec<f64>,
    /// Rows of the space-time grids; `times` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_grid: Option<TimeGridSection>,
    /// Indices for the `states` command.
    #[serde(default = "default_states")]
    pub states: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coherent: Option<CoherentSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_states() -> Vec<usize> {
    vec![0, 1, 2]
}

/// A scenario whose nested parameters passed validation.
#[derive(Debug, Clone)]
pub struct Checked {
    pub scenario: Scenario,
    pub params: OscillatorParams,
    pub ermakov: ErmakovSpec,
    pub model: ValidatedModel,
    pub trajectories: Vec<TrajectorySpec>,
    pub darboux: Option<DarbouxSpec>,
    pub grid: Grid1D,
    pub coherent: Vec<CoherentLabel>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid scenario: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Rows of the space-time grids.
    pub fn heatmap_times(&self) -> Vec<f64> {
        self.time_grid.map(|g| g.points()).unwrap_or_else(|| self.times.clone())
    }

    /// Every nested invariant, checked before any evaluation.
    pub fn check(&self) -> Result<Checked, CliError> {
        let o = self.oscillator;
        let params = OscillatorParams::new(o.m, o.omega0, o.hbar, o.t0).map_err(CliError::from_core)?;
        let ermakov = match self.ermakov.lambda {
            Some(l) => ErmakovSpec::with_lambda(self.ermakov.a, self.ermakov.c, l),
            None => ErmakovSpec::new(self.ermakov.a, self.ermakov.c),
        };
        let model = validate(params, ermakov).map_err(CliError::from_core)?;
        if self.trajectories.is_empty() {
            return Err(CliError::Config("trajectories must not be empty".into()));
        }
        let mut trajectories = Vec::with_capacity(self.trajectories.len());
        for t in &self.trajectories {
            if !(t.x0.is_finite() && t.p0.is_finite()) {
                return Err(CliError::Config("trajectory coordinates must be finite".into()));
            }
            trajectories.push(TrajectorySpec::new(t.x0, t.p0));
        }
        let darboux = self
            .darboux
            .map(|d| DarbouxSpec::new(d.epsilon, d.k_a, d.k_b))
            .transpose()
            .map_err(CliError::from_core)?;
        let grid = Grid1D::new(self.grid.x_min, self.grid.x_max, self.grid.n_points).map_err(CliError::from_core)?;
        if self.times.is_empty() {
            return Err(CliError::Config("times must not be empty".into()));
        }
        let mut all_times = self.times.iter().copied().chain(self.time_grid.iter().flat_map(|g| [g.t_min, g.t_max]));
        if let Some(bad) = all_times.find(|t| !t.is_finite()) {
            return Err(CliError::Config(format!("time {bad} is not finite")));
        }
        if let Some(g) = self.time_grid {
            if g.n_points == 0 || (g.n_points > 1 && !(g.t_max > g.t_min)) {
                return Err(CliError::Config("time_grid needs n_points >= 1 and t_max > t_min".into()));
            }
        }
        if let Some(&n) = self.states.iter().find(|&&n| n > MODE_CAP) {
            return Err(CliError::Config(format!("state index {n} exceeds the cap {MODE_CAP}")));
        }
        let coherent = match &self.coherent {
            Some(c) => c
                .z
                .iter()
                .map(|&[re, im]| CoherentLabel::new(C64::new(re, im)))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Config(format!("coherent label: {e}")))?,
            None => Vec::new(),
        };
        Ok(Checked {
            scenario: self.clone(),
            params,
            ermakov,
            model,
            trajectories,
            darboux,
            grid,
            coherent,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn presets_round_trip_through_json() {
        for name in presets::NAMES {
            let s = presets::scenario(name).unwrap();
            let back = Scenario::from_json(&s.to_json()).unwrap();
            assert_eq!(back, s);
            back.check().unwrap();
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&presets::scenario("fig1").unwrap().to_json()).unwrap();
        v["ermakov"]["cc"] = serde_json::json!(4.0);
        let err = Scenario::from_json(&v.to_string()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn ermakov_violation_is_a_config_error() {
        let mut s = presets::scenario("fig1").unwrap();
        s.ermakov.c = 3.0;
        assert_eq!(s.check().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn time_grid_ends_exactly() {
        let g = TimeGridSection { t_min: 0.0, t_max: 25.0, n_points: 251 };
        let p = g.points();
        assert_eq!(p.len(), 251);
        assert_eq!(p[250], 25.0);
        assert!((p[1] - 0.1).abs() < 1e-15);
    }
}
