//! Hermite–Gauss wave-packet modes φₙ(x,t) of the stationary oscillator,
//! their ladder operators and the quadratic invariant.
//!
//! Everything is expressed through the packet coordinate
//! χ = √(2λ)(x − ⟨x̂⟩(t))/α(t) and the phase ξ(x,t). With these,
//! φₙ = √(√(2λ)/α) e^{−i(n+½)θ} e^{iξ} hₙ(χ), where hₙ are the normalized
//! Hermite functions, and Â± = e^{∓iθ} e^{iξ} (∓∂_χ + χ)/√2 e^{−iξ}.

use num_complex::Complex64 as C64;
use std::f64::consts::{PI, SQRT_2};

use crate::classical::{trajectory, PhasePoint, TrajectorySpec, ValidatedModel};
use crate::error::{Error, Result};
use crate::specfun::{hermite, HERMITE_MAX_DEGREE};
use crate::verify::{ensure_resolved, first_derivative, second_derivative, StateField, StencilOrder};

/// Largest mode index used by expansions.
pub const MODE_CAP: usize = 64;

/// Tolerated fourth-order derivative error estimate for grid operators.
pub const OPERATOR_RESOLUTION_LIMIT: f64 = 1e-6;

/// A mode index within [`MODE_CAP`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeIndex(usize);

impl ModeIndex {
    pub fn new(n: usize) -> Result<Self> {
        if n > MODE_CAP {
            return Err(Error::CapExceeded { cap: MODE_CAP });
        }
        Ok(Self(n))
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// Dimensionless eigenvalue n + ½.
    pub fn epsilon(self) -> f64 {
        self.0 as f64 + 0.5
    }
}

/// Uncertainties of a quadrature pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratures {
    pub dq: f64,
    pub dp: f64,
    pub product: f64,
}

impl Quadratures {
    pub fn new(var_q: f64, var_p: f64) -> Self {
        let dq = var_q.max(0.0).sqrt();
        let dp = var_p.max(0.0).sqrt();
        Self { dq, dp, product: dq * dp }
    }
}

/// A validated Ermakov model together with the packet trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseOscillator {
    model: ValidatedModel,
    traj: TrajectorySpec,
}

impl BaseOscillator {
    pub fn new(model: ValidatedModel, traj: TrajectorySpec) -> Result<Self> {
        if model.lambda() < 0.0 {
            return Err(Error::NonPositiveParameter { name: "lambda", value: model.lambda() });
        }
        for (name, value) in [("x0", traj.x0), ("p0", traj.p0)] {
            if !value.is_finite() {
                return Err(Error::NonFiniteParameter { name, value });
            }
        }
        Ok(Self { model, traj })
    }

    pub fn model(&self) -> &ValidatedModel {
        &self.model
    }

    pub fn traj(&self) -> &TrajectorySpec {
        &self.traj
    }

    /// All time-dependent scalars at `t`.
    pub fn snapshot(&self, t: f64) -> Snapshot {
        let st = self.model.alpha_state(t);
        let params = self.model.params();
        Snapshot {
            t,
            alpha: st.alpha,
            alpha_dot: st.alpha_dot,
            theta: self.model.theta(t),
            center: trajectory(params, &self.traj, t),
            k: self.model.chi_scale(),
            lambda: self.model.lambda(),
            m: params.m,
            hbar: params.hbar,
        }
    }

    pub fn sample_mode(&self, n: usize, grid: &crate::verify::Grid1D, t: f64) -> Result<StateField> {
        let snap = self.snapshot(t);
        StateField::try_from_fn(*grid, t, |x| snap.phi_n(n, x))
    }
}

/// Time-dependent scalars of the packet at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub alpha: f64,
    pub alpha_dot: f64,
    pub theta: f64,
    pub center: PhasePoint,
    /// √(2λ)
    pub k: f64,
    pub lambda: f64,
    pub m: f64,
    pub hbar: f64,
}

impl Snapshot {
    pub fn chi(&self, x: f64) -> f64 {
        self.k * (x - self.center.x) / self.alpha
    }

    /// dχ/dx
    pub fn chi_rate(&self) -> f64 {
        self.k / self.alpha
    }

    pub fn xi(&self, x: f64) -> f64 {
        let d = x - self.center.x;
        let PhasePoint { x: xc, p } = self.center;
        self.m / (2.0 * self.hbar) * self.alpha_dot / self.alpha * d * d + p * d / self.hbar + p * xc / (2.0 * self.hbar)
    }

    /// ∂ₓξ
    pub fn xi_rate(&self, x: f64) -> f64 {
        self.m / self.hbar * self.alpha_dot / self.alpha * (x - self.center.x) + self.center.p / self.hbar
    }

    /// S = (m/2ħ) α̇/α + iλ/α².
    pub fn s_complex(&self) -> C64 {
        C64::new(self.m / (2.0 * self.hbar) * self.alpha_dot / self.alpha, self.lambda / (self.alpha * self.alpha))
    }

    /// Common factor √(k/α) e^{iξ} of every mode.
    pub fn envelope(&self, x: f64) -> C64 {
        C64::from_polar((self.k / self.alpha).sqrt(), self.xi(x))
    }

    fn mode_phase(&self, n: usize) -> C64 {
        C64::from_polar(1.0, -(n as f64 + 0.5) * self.theta)
    }

    /// φₙ(x,t) from the Hermite polynomial; the Gaussian and 1/√(2ⁿn!)
    /// are combined in log space.
    pub fn phi_n(&self, n: usize, x: f64) -> Result<C64> {
        if n > HERMITE_MAX_DEGREE {
            return Err(Error::DegreeTooLarge { n, max: HERMITE_MAX_DEGREE });
        }
        let chi = self.chi(x);
        let h = hermite(n, chi)?;
        let log_fact: f64 = (1..=n).map(|j| (j as f64).ln()).sum();
        let scale = (-0.5 * chi * chi - 0.5 * (n as f64 * 2f64.ln() + log_fact) - 0.25 * PI.ln()).exp();
        Ok(self.envelope(x) * self.mode_phase(n) * (h * scale))
    }

    /// φ₀..φ_{n_max} at x by the normalized Hermite-function recurrence.
    pub fn modes(&self, n_max: usize, x: f64) -> Vec<C64> {
        let chi = self.chi(x);
        let h = hermite_functions(n_max, chi);
        let env = self.envelope(x);
        let step = C64::from_polar(1.0, -self.theta);
        let mut phase = self.mode_phase(0);
        h.into_iter()
            .map(|hn| {
                let v = env * phase * hn;
                phase *= step;
                v
            })
            .collect()
    }
}

/// Normalized Hermite functions h₀..h_{n_max} at χ.
pub fn hermite_functions(n_max: usize, chi: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(PI.powf(-0.25) * (-0.5 * chi * chi).exp());
    if n_max >= 1 {
        out.push(SQRT_2 * chi * out[0]);
    }
    for n in 1..n_max {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * chi * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

pub fn chi(osc: &BaseOscillator, x: f64, t: f64) -> f64 {
    osc.snapshot(t).chi(x)
}

pub fn xi_phase(osc: &BaseOscillator, x: f64, t: f64) -> f64 {
    osc.snapshot(t).xi(x)
}

pub fn phi_n(osc: &BaseOscillator, n: usize, x: f64, t: f64) -> Result<C64> {
    osc.snapshot(t).phi_n(n, x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Raise,
    Lower,
}

/// Â± applied to a sampled field with fourth-order differences.
pub fn apply_a(osc: &BaseOscillator, direction: Ladder, field: &StateField) -> Result<StateField> {
    ensure_resolved(field, false, OPERATOR_RESOLUTION_LIMIT)?;
    let snap = osc.snapshot(field.time());
    let grid = *field.grid();
    let df = first_derivative(field.values(), grid.spacing(), StencilOrder::Fourth);
    let scale = snap.alpha / snap.k;
    let (sign, phase) = match direction {
        Ladder::Lower => (1.0, C64::from_polar(1.0 / SQRT_2, snap.theta)),
        Ladder::Raise => (-1.0, C64::from_polar(1.0 / SQRT_2, -snap.theta)),
    };
    let values = field
        .values()
        .iter()
        .zip(&df)
        .enumerate()
        .map(|(i, (&f, &d))| {
            let x = grid.x(i);
            // e^{iξ}∂_χ(e^{−iξ}f) = (α/k)(f′ − iξ′f)
            let d_chi = scale * (d - C64::i() * snap.xi_rate(x) * f);
            phase * (sign * d_chi + snap.chi(x) * f)
        })
        .collect();
    StateField::new(grid, values, field.time())
}

/// Origin of x̂ and p̂ inside the invariants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Frame {
    /// x̂ and p̂ as written, centered at the phase-space origin.
    #[default]
    Lab,
    /// x̂ − ⟨x̂⟩(t) and p̂ − ⟨p̂⟩(t), conserved for any trajectory.
    Comoving,
}

/// Coefficients of (α²/m²)p̂² − (α̇α/m){x̂,p̂} + (α̇² + (2ħλ/m)²/α²)x̂².
pub(crate) fn invariant_coefficients(snap: &Snapshot) -> (f64, f64, f64) {
    let coupling = 2.0 * snap.hbar * snap.lambda / snap.m;
    (
        snap.alpha * snap.alpha / (snap.m * snap.m),
        snap.alpha_dot * snap.alpha / snap.m,
        snap.alpha_dot * snap.alpha_dot + coupling * coupling / (snap.alpha * snap.alpha),
    )
}

pub(crate) fn frame_origin(snap: &Snapshot, frame: Frame) -> (f64, f64) {
    match frame {
        Frame::Lab => (0.0, 0.0),
        Frame::Comoving => (snap.center.x, snap.center.p),
    }
}

/// Î applied to a field, with overall scale `i0`. The eigenvalue on φₙ is
/// (4ħ²λ/m²)(n + ½)·I₀.
pub fn apply_invariant_i(osc: &BaseOscillator, field: &StateField, i0: f64, frame: Frame) -> Result<StateField> {
    apply_quadratic_invariant(osc, field, i0, frame, |_| 0.0)
}

// Shared by Î and Î_G: the extra multiplicative term `extra(x)` is added to
// the quadratic form before scaling by I₀.
pub(crate) fn apply_quadratic_invariant<E>(
    osc: &BaseOscillator,
    field: &StateField,
    i0: f64,
    frame: Frame,
    extra: E,
) -> Result<StateField>
where
    E: Fn(usize) -> f64,
{
    ensure_resolved(field, true, OPERATOR_RESOLUTION_LIMIT)?;
    let snap = osc.snapshot(field.time());
    let (cp, cxp, cx) = invariant_coefficients(&snap);
    let (x0, p0) = frame_origin(&snap, frame);
    let grid = *field.grid();
    let dx = grid.spacing();
    let d1 = first_derivative(field.values(), dx, StencilOrder::Fourth);
    let d2 = second_derivative(field.values(), dx, StencilOrder::Fourth);
    // (x̂ − x₀)f differentiated on the grid keeps {x̂, p̂} discretely Hermitian
    let xf: Vec<C64> = field.values().iter().enumerate().map(|(j, &f)| (grid.x(j) - x0) * f).collect();
    let dxf = first_derivative(&xf, dx, StencilOrder::Fourth);
    let hbar = snap.hbar;
    let i = C64::i();
    let values = field
        .values()
        .iter()
        .enumerate()
        .map(|(j, &f)| {
            let xr = grid.x(j) - x0;
            // (p̂ − p₀)² f and {x̂ − x₀, p̂ − p₀} f with p̂ = −iħ∂ₓ
            let p2 = -hbar * hbar * d2[j] + 2.0 * i * hbar * p0 * d1[j] + p0 * p0 * f;
            let anti = -i * hbar * (xr * d1[j] + dxf[j]) - 2.0 * p0 * xr * f;
            i0 * (cp * p2 - cxp * anti + cx * xr * xr * f + extra(j) * f)
        })
        .collect();
    StateField::new(grid, values, field.time())
}
