//! Closed-form classical layer: packet-center trajectory, Ermakov amplitude
//! α(t), the Lewis–Riesenfeld phase θ(t), the complex Riccati function S(t)
//! and the position variance.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::adaptive_gk;

/// Physical constants of the stationary oscillator V₀ = ½ m ω₀² x².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    pub m: f64,
    pub omega0: f64,
    pub hbar: f64,
    pub t0: f64,
}

impl OscillatorParams {
    pub fn new(m: f64, omega0: f64, hbar: f64, t0: f64) -> Result<Self> {
        let params = Self { m, omega0, hbar, t0 };
        params.check()?;
        Ok(params)
    }

    fn check(&self) -> Result<()> {
        for (name, value) in [("m", self.m), ("omega0", self.omega0), ("hbar", self.hbar)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositiveParameter { name, value });
            }
        }
        if !self.t0.is_finite() {
            return Err(Error::NonFiniteParameter { name: "t0", value: self.t0 });
        }
        Ok(())
    }

    /// Natural Ermakov coupling m ω₀ / ħ.
    pub fn default_lambda(&self) -> f64 {
        self.m * self.omega0 / self.hbar
    }

    pub fn v0(&self, x: f64) -> f64 {
        0.5 * self.m * self.omega0 * self.omega0 * x * x
    }
}

/// Parameters (a, c, λ) of the Ermakov solution; b is always derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErmakovSpec {
    pub a: f64,
    pub c: f64,
    /// `None` selects λ = m ω₀ / ħ.
    pub lambda: Option<f64>,
}

impl ErmakovSpec {
    pub fn new(a: f64, c: f64) -> Self {
        Self { a, c, lambda: None }
    }

    pub fn with_lambda(a: f64, c: f64, lambda: f64) -> Self {
        Self { a, c, lambda: Some(lambda) }
    }
}

/// Initial phase-space point of the packet center.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrajectorySpec {
    pub x0: f64,
    pub p0: f64,
}

impl TrajectorySpec {
    pub fn new(x0: f64, p0: f64) -> Self {
        Self { x0, p0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub x: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaState {
    pub alpha: f64,
    pub alpha_dot: f64,
}

/// Oscillator constants plus a checked Ermakov solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidatedModel {
    params: OscillatorParams,
    a: f64,
    b: f64,
    c: f64,
    lambda: f64,
    // θ advance over one period π/ω₀ of α², integrated once at validation.
    period_phase: f64,
}

/// Checks the constants and the Ermakov condition and derives b.
pub fn validate(params: OscillatorParams, spec: ErmakovSpec) -> Result<ValidatedModel> {
    params.check()?;
    for (name, value) in [("a", spec.a), ("c", spec.c)] {
        if !value.is_finite() {
            return Err(Error::NonFiniteParameter { name, value });
        }
        if value < 0.0 {
            return Err(Error::NonPositiveParameter { name, value });
        }
    }
    let lambda = spec.lambda.unwrap_or_else(|| params.default_lambda());
    if !lambda.is_finite() {
        return Err(Error::NonFiniteParameter { name: "lambda", value: lambda });
    }
    if lambda == 0.0 {
        return Err(Error::ZeroLambda);
    }
    let kappa = 2.0 * params.hbar * lambda / (params.m * params.omega0);
    let threshold = kappa * kappa;
    let ac = spec.a * spec.c;
    if ac < threshold {
        return Err(Error::ErmakovConditionViolated { ac, threshold });
    }
    let mut model = ValidatedModel {
        params,
        a: spec.a,
        b: (ac - threshold).sqrt(),
        c: spec.c,
        lambda,
        period_phase: 0.0,
    };
    let period = PI / params.omega0;
    model.period_phase = adaptive_gk(|t| model.theta_rate(t), params.t0, params.t0 + period, 1e-15);
    Ok(model)
}

impl ValidatedModel {
    pub fn params(&self) -> &OscillatorParams {
        &self.params
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// 2ħλ/(mω₀); equals 2 for the default coupling.
    pub fn kappa(&self) -> f64 {
        2.0 * self.params.hbar * self.lambda / (self.params.m * self.params.omega0)
    }

    /// Scale of the dimensionless packet coordinate: χ = √(2λ)(x − ⟨x̂⟩)/α.
    pub fn chi_scale(&self) -> f64 {
        (2.0 * self.lambda.abs()).sqrt()
    }

    fn phase_arg(&self, t: f64) -> f64 {
        self.params.omega0 * (t - self.params.t0)
    }

    // α² and its first two time derivatives.
    fn alpha_squared(&self, t: f64) -> (f64, f64, f64) {
        let u = self.phase_arg(t);
        let w = self.params.omega0;
        let (s, c) = u.sin_cos();
        let (s2, c2) = (2.0 * u).sin_cos();
        let p = self.a * c * c + self.b * s2 + self.c * s * s;
        let dp = w * ((self.c - self.a) * s2 + 2.0 * self.b * c2);
        let ddp = w * w * (2.0 * (self.c - self.a) * c2 - 4.0 * self.b * s2);
        (p, dp, ddp)
    }

    pub fn alpha_state(&self, t: f64) -> AlphaState {
        let (p, dp, _) = self.alpha_squared(t);
        let alpha = p.sqrt();
        AlphaState { alpha, alpha_dot: dp / (2.0 * alpha) }
    }

    pub fn alpha(&self, t: f64) -> f64 {
        self.alpha_squared(t).0.sqrt()
    }

    /// α̈ from the closed form.
    pub fn alpha_ddot(&self, t: f64) -> f64 {
        let (p, dp, ddp) = self.alpha_squared(t);
        let alpha = p.sqrt();
        ddp / (2.0 * alpha) - dp * dp / (4.0 * alpha * p)
    }

    // θ̇ = (2ħλ/m)/α²
    fn theta_rate(&self, t: f64) -> f64 {
        2.0 * self.params.hbar * self.lambda / self.params.m / self.alpha_squared(t).0
    }

    /// θ(t) = (2ħλ/m) ∫_{t₀}^{t} dτ/α²(τ), by adaptive quadrature over at most
    /// one period plus a whole number of periods.
    pub fn theta(&self, t: f64) -> f64 {
        let t0 = self.params.t0;
        let period = PI / self.params.omega0;
        let periods = ((t - t0) / period).floor();
        let start = t0 + periods * period;
        let rest = adaptive_gk(|tau| self.theta_rate(tau), start, t, 1e-15);
        periods * self.period_phase + rest
    }

    /// arctan{(b + c tan ω₀(t−t₀))/κ} − arctan(b/κ), continued across the
    /// poles of tan by adding π per crossing.
    pub fn theta_closed_form(&self, t: f64) -> f64 {
        let u = self.phase_arg(t);
        let kappa = self.kappa();
        let branch = ((u + 0.5 * PI) / PI).floor();
        ((self.b + self.c * u.tan()) / kappa).atan() - (self.b / kappa).atan() + branch * PI
    }

    /// S = S_R + i S_I with S_R = (m/2ħ) α̇/α and S_I = λ/α².
    pub fn s_complex(&self, t: f64) -> C64 {
        let AlphaState { alpha, alpha_dot } = self.alpha_state(t);
        C64::new(
            self.params.m / (2.0 * self.params.hbar) * alpha_dot / alpha,
            self.lambda / (alpha * alpha),
        )
    }

    /// (Δx̂)²(t) = α²/(4λ), i.e. (ħ/4mω₀) α² for the default coupling.
    pub fn variance_x(&self, t: f64) -> f64 {
        self.alpha_squared(t).0 / (4.0 * self.lambda)
    }

    /// Residual α̈ + ω₀²α − (2ħλ/m)²/α³ of the Ermakov equation.
    pub fn ermakov_residual(&self, t: f64) -> f64 {
        let alpha = self.alpha(t);
        let w = self.params.omega0;
        let coupling = 2.0 * self.params.hbar * self.lambda / self.params.m;
        self.alpha_ddot(t) + w * w * alpha - coupling * coupling / alpha.powi(3)
    }
}

/// Mean position and momentum of the packet center: rotation of the initial
/// phase-space point with the classical period 2π/ω₀.
pub fn trajectory(params: &OscillatorParams, traj: &TrajectorySpec, t: f64) -> PhasePoint {
    let w = params.omega0;
    let (s, c) = (w * (t - params.t0)).sin_cos();
    PhasePoint {
        x: c * traj.x0 + s / (params.m * w) * traj.p0,
        p: -params.m * w * s * traj.x0 + c * traj.p0,
    }
}

pub fn classical_energy(params: &OscillatorParams, point: &PhasePoint) -> f64 {
    point.p * point.p / (2.0 * params.m) + params.v0(point.x)
}
