//! Time-dependent Darboux transformation of the oscillator: the seed
//! function u, the deformed potential V₁, the intertwiner L, the transformed
//! states ψₙ, the missing state, the invariant Î_G and the ladder B±.
//!
//! The seed is u = e^{−iεθ} e^{iξ} e^{−χ²/2} F(χ)/√α with F solving
//! F″ − 2χF′ + (2ε − 1)F = 0. Writing g = F′/F, every object reduces to χ:
//!
//! - β = −(i/ħ)⟨p̂⟩ − 2iS(x − ⟨x̂⟩) − (k/α) g
//! - V₁ = V₀ + (ħ²k²/mα²)(1 − g′)
//! - L = ℓ(∂ₓ + β) = −√2 g + 2e^{−iθ}Â⁻, with ℓ = α/√λ
//!
//! where k = √(2λ). Then ‖Lφₙ‖² = 4(n + ½ − ε) and the ψ-states are
//! eigenfunctions of Î_G with eigenvalues (4ħ²λ/m²)(n − ½)·I₀ (n ≥ 1) and
//! (4ħ²λ/m²)ε·I₀ for the missing state.

use num_complex::Complex64 as C64;
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::hg_modes::{
    apply_a, apply_quadratic_invariant, hermite_functions, BaseOscillator, Frame, Ladder, Snapshot, MODE_CAP,
};
use crate::specfun::{erf, erfc, kummer, KUMMER_MAX_ARG};
use crate::verify::{ensure_resolved, first_derivative, second_derivative, Grid1D, StateField, StencilOrder};

/// Default half-width of the certified χ window for the closed-form seeds.
pub const CLOSED_FORM_WINDOW: f64 = 30.0;

/// Scan step and bisection resolution of the nodeless certification.
pub const SCAN_STEP: f64 = 1e-3;
pub const BISECTION_TOL: f64 = 1e-12;

// Edge amplitude below which a χ-space integrand counts as decayed.
const EDGE_AMPLITUDE: f64 = 1e-14;

/// Transformation eigenvalue and the two integration constants of F.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DarbouxSpec {
    pub epsilon: f64,
    pub k_a: f64,
    pub k_b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Branch {
    MinusHalf,
    MinusThreeHalves,
    General,
}

impl DarbouxSpec {
    pub fn new(epsilon: f64, k_a: f64, k_b: f64) -> Result<Self> {
        for (name, v) in [("epsilon", epsilon), ("k_a", k_a), ("k_b", k_b)] {
            if !v.is_finite() {
                return Err(Error::NonFiniteParameter { name, value: v });
            }
        }
        if k_a == 0.0 && k_b == 0.0 {
            return Err(Error::InvalidDarbouxSpec("k_a and k_b cannot both vanish".into()));
        }
        Ok(Self { epsilon, k_a, k_b })
    }

    fn branch(&self) -> Branch {
        if self.epsilon == -0.5 {
            Branch::MinusHalf
        } else if self.epsilon == -1.5 {
            Branch::MinusThreeHalves
        } else {
            Branch::General
        }
    }

    fn kummer_params(&self) -> (f64, f64) {
        (0.25 * (1.0 - 2.0 * self.epsilon), 0.25 * (3.0 - 2.0 * self.epsilon))
    }

    /// Largest |χ| at which F can be evaluated.
    pub fn support(&self) -> f64 {
        match self.branch() {
            Branch::MinusHalf | Branch::MinusThreeHalves => f64::INFINITY,
            Branch::General => {
                let (a1, a2) = self.kummer_params();
                let terminates = |a: f64| a <= 0.0 && a.fract() == 0.0;
                let even_ok = self.k_a == 0.0 || (terminates(a1) && (a1 == 0.0 || terminates(a1 + 1.0)));
                let odd_ok = self.k_b == 0.0 || (terminates(a2) && terminates(a2 + 1.0));
                if even_ok && odd_ok {
                    f64::INFINITY
                } else {
                    KUMMER_MAX_ARG.sqrt()
                }
            }
        }
    }

    /// Default certified window: [`CLOSED_FORM_WINDOW`] clipped to the support.
    pub fn default_window(&self) -> f64 {
        CLOSED_FORM_WINDOW.min(self.support())
    }
}

/// F(χ) with its logarithmic derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FValues {
    /// F itself; overflows to ±∞ for |χ| ≳ 26 on the closed-form branches.
    pub f: f64,
    pub log_abs_f: f64,
    /// F′/F
    pub g: f64,
    /// (F′/F)′
    pub dg: f64,
}

impl FValues {
    fn from_log(sign: f64, log_abs_f: f64, g: f64, dg: f64) -> Self {
        Self { f: sign * log_abs_f.exp(), log_abs_f, g, dg }
    }

    pub fn sign(&self) -> f64 {
        self.f.signum()
    }
}

const SQRT_PI: f64 = 1.772_453_850_905_516;

// k_a + (√π/2) k_b erf(χ), summed through erfc on the side where erf → ∓1
// so that near-critical constants keep their relative accuracy.
fn minus_half_b(spec: &DarbouxSpec, chi: f64) -> f64 {
    let h = 0.5 * SQRT_PI * spec.k_b;
    if chi > 1.0 {
        (spec.k_a + h) - h * erfc(chi)
    } else if chi < -1.0 {
        (spec.k_a - h) + h * erfc(-chi)
    } else {
        spec.k_a + h * erf(chi)
    }
}

// k_b + √π k_a erf(χ), same treatment.
fn minus_three_halves_c(spec: &DarbouxSpec, chi: f64) -> f64 {
    let h = SQRT_PI * spec.k_a;
    if chi > 1.0 {
        (spec.k_b + h) - h * erfc(chi)
    } else if chi < -1.0 {
        (spec.k_b - h) + h * erfc(-chi)
    } else {
        spec.k_b + h * erf(chi)
    }
}

/// F(χ) = k_a ₁F₁(¼(1−2ε); ½; χ²) + k_b χ ₁F₁(¼(3−2ε); 3/2; χ²), through the
/// closed erf forms for ε = −½ and ε = −3/2.
pub fn f_function(spec: &DarbouxSpec, chi: f64) -> Result<FValues> {
    if !chi.is_finite() || chi.abs() > spec.support() {
        return Err(Error::OutOfSupport { chi });
    }
    match spec.branch() {
        Branch::MinusHalf => {
            // F = e^{χ²} B, B′ = k_b e^{−χ²}
            let b = minus_half_b(spec, chi);
            let delta = spec.k_b * (-chi * chi).exp() / b;
            let g = 2.0 * chi + delta;
            let dg = 2.0 - 2.0 * chi * delta - delta * delta;
            Ok(FValues::from_log(b.signum(), chi * chi + b.abs().ln(), g, dg))
        }
        Branch::MinusThreeHalves => {
            // F = e^{χ²} D with D = k_a e^{−χ²} + χC, D′ = C, C′ = 2k_a e^{−χ²}
            let e = (-chi * chi).exp();
            let c = minus_three_halves_c(spec, chi);
            let d = spec.k_a * e + chi * c;
            let ratio = c / d;
            let g = 2.0 * chi + ratio;
            let dg = 2.0 + 2.0 * spec.k_a * e / d - ratio * ratio;
            Ok(FValues::from_log(d.signum(), chi * chi + d.abs().ln(), g, dg))
        }
        Branch::General => {
            let (a1, a2) = spec.kummer_params();
            let x = chi * chi;
            let mut f = 0.0;
            let mut df = 0.0;
            if spec.k_a != 0.0 {
                f += spec.k_a * kummer(a1, 0.5, x)?;
                if a1 != 0.0 {
                    // d/dχ M(a, ½, χ²) = 2χ (a/½) M(a+1, 3/2, χ²)
                    df += spec.k_a * 4.0 * a1 * chi * kummer(a1 + 1.0, 1.5, x)?;
                }
            }
            if spec.k_b != 0.0 {
                let m = kummer(a2, 1.5, x)?;
                f += spec.k_b * chi * m;
                df += spec.k_b * (m + chi * chi * (4.0 * a2 / 3.0) * kummer(a2 + 1.0, 2.5, x)?);
            }
            let g = df / f;
            let dg = 1.0 - 2.0 * spec.epsilon + 2.0 * chi * g - g * g;
            Ok(FValues { f, log_abs_f: f.abs().ln(), g, dg })
        }
    }
}

/// (F′/F)″, from differentiating g′ = 1 − 2ε + 2χg − g².
fn g_second(values: &FValues, chi: f64) -> f64 {
    2.0 * values.g + 2.0 * chi * values.dg - 2.0 * values.g * values.dg
}

/// Outcome of the nodeless scan.
#[derive(Debug, Clone, PartialEq)]
pub struct NodelessReport {
    pub passed: bool,
    pub chi_max: f64,
    /// Zeros of F located to [`BISECTION_TOL`].
    pub zeros: Vec<f64>,
    /// Smallest |e^{−χ²/2} F| met by the scan, and where.
    pub min_abs: f64,
    pub argmin: f64,
    /// Set when the scan passes but F has a zero or asymptotic node beyond it.
    pub asymptotic_failure: Option<String>,
}

// Sign-carrying factor of F that stays finite for large |χ|.
fn reduced_f(spec: &DarbouxSpec, chi: f64) -> Result<f64> {
    match spec.branch() {
        Branch::MinusHalf => Ok(minus_half_b(spec, chi)),
        Branch::MinusThreeHalves => {
            Ok(spec.k_a * (-chi * chi).exp() + chi * minus_three_halves_c(spec, chi))
        }
        Branch::General => Ok(f_function(spec, chi)?.f),
    }
}

fn asymptotic_check(spec: &DarbouxSpec) -> Option<String> {
    match spec.branch() {
        Branch::MinusHalf => {
            let bound = 0.5 * SQRT_PI * spec.k_b.abs();
            (spec.k_a.abs() <= bound)
                .then(|| format!("|k_a| = {} must exceed (√π/2)|k_b| = {bound}", spec.k_a.abs()))
        }
        Branch::MinusThreeHalves => {
            // D ~ χ(k_b ± √π k_a) for χ → ±∞ must share the sign of D(0) = k_a
            let s = spec.k_a.signum();
            let right = (spec.k_b + SQRT_PI * spec.k_a).signum();
            let left = -(spec.k_b - SQRT_PI * spec.k_a).signum();
            (spec.k_a == 0.0 || right != s || left != s)
                .then(|| "F changes sign beyond every finite window (need |k_b| < √π|k_a|)".to_string())
        }
        Branch::General => None,
    }
}

/// Dense sign scan of F over [−chi_max, chi_max] with bisection refinement.
pub fn certify_nodeless(spec: &DarbouxSpec, chi_max: f64) -> NodelessReport {
    let limit = chi_max.min(spec.support());
    let steps = (2.0 * limit / SCAN_STEP).ceil() as usize;
    let h = 2.0 * limit / steps as f64;
    let mut zeros = Vec::new();
    let mut min_abs = f64::INFINITY;
    let mut argmin = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    let mut failed_eval = None;
    for i in 0..=steps {
        let chi = -limit + i as f64 * h;
        let value = match reduced_f(spec, chi) {
            Ok(v) => v,
            Err(e) => {
                failed_eval = Some(e.to_string());
                break;
            }
        };
        if let Ok(fv) = f_function(spec, chi) {
            let amp = (fv.log_abs_f - 0.5 * chi * chi).exp();
            if amp < min_abs {
                min_abs = amp;
                argmin = chi;
            }
        }
        if value == 0.0 {
            zeros.push(chi);
        } else if let Some((pc, pv)) = prev {
            if pv != 0.0 && pv.signum() != value.signum() {
                zeros.push(bisect(spec, pc, chi, pv));
            }
        }
        prev = Some((chi, value));
    }
    let asymptotic_failure = failed_eval.or_else(|| asymptotic_check(spec));
    NodelessReport {
        passed: zeros.is_empty() && asymptotic_failure.is_none(),
        chi_max: limit,
        zeros,
        min_abs,
        argmin,
        asymptotic_failure,
    }
}

fn bisect(spec: &DarbouxSpec, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let s = f_lo.signum();
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        match reduced_f(spec, mid) {
            Ok(v) if v.signum() == s => lo = mid,
            Ok(_) => hi = mid,
            Err(_) => break,
        }
    }
    0.5 * (lo + hi)
}

/// Certified transformation of a base oscillator.
#[derive(Debug, Clone, PartialEq)]
pub struct DarbouxModel {
    spec: DarbouxSpec,
    base: BaseOscillator,
    window: f64,
    report: NodelessReport,
    // ‖Lφₙ‖ for n = 0..MODE_CAP−1; None when the window truncates Lφₙ
    norms: Vec<Option<f64>>,
    // ∫ e^{χ²}/F² dχ over the window, or why it diverges
    missing_integral: std::result::Result<f64, String>,
}

impl DarbouxModel {
    pub fn new(spec: DarbouxSpec, base: BaseOscillator) -> Result<Self> {
        Self::with_window(spec, base, spec.default_window())
    }

    pub fn with_window(spec: DarbouxSpec, base: BaseOscillator, chi_max: f64) -> Result<Self> {
        if !(chi_max > 0.0) || chi_max > spec.support() {
            return Err(Error::InvalidDarbouxSpec(format!(
                "window {chi_max} must be positive and within the support {}",
                spec.support()
            )));
        }
        let report = certify_nodeless(&spec, chi_max);
        if !report.passed {
            let reason = match (&report.asymptotic_failure, report.zeros.first()) {
                (_, Some(z)) => format!("F vanishes at chi = {z:.12}"),
                (Some(r), None) => r.clone(),
                (None, None) => "scan failed".into(),
            };
            return Err(Error::NotNodeless { reason });
        }
        let (norms, missing_integral) = chi_space_tables(&spec, chi_max)?;
        Ok(Self { spec, base, window: chi_max, report, norms, missing_integral })
    }

    pub fn spec(&self) -> &DarbouxSpec {
        &self.spec
    }

    pub fn base(&self) -> &BaseOscillator {
        &self.base
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn report(&self) -> &NodelessReport {
        &self.report
    }

    /// ‖Lφₙ‖ from the cached table.
    pub fn norm_of_l_phi(&self, n: usize) -> Result<f64> {
        match self.norms.get(n) {
            None => Err(Error::CapExceeded { cap: MODE_CAP }),
            Some(None) => Err(Error::OutOfWindow { chi: self.window, window: self.window }),
            Some(Some(v)) => Ok(*v),
        }
    }

    pub fn missing_state_normalizable(&self) -> bool {
        self.missing_integral.is_ok()
    }

    /// ℓ(t) = α(t)/√λ = 2Δx(t).
    pub fn ell(&self, t: f64) -> f64 {
        self.base.model().alpha(t) / self.base.model().lambda().sqrt()
    }

    pub fn snapshot(&self, t: f64) -> DarbouxSnapshot<'_> {
        DarbouxSnapshot { model: self, base: self.base.snapshot(t) }
    }

    pub fn u_function(&self, x: f64, t: f64) -> Result<C64> {
        self.snapshot(t).u(x)
    }

    pub fn potential_v1(&self, x: f64, t: f64) -> Result<f64> {
        self.snapshot(t).v1(x)
    }

    pub fn beta_function(&self, x: f64, t: f64) -> Result<C64> {
        self.snapshot(t).beta(x)
    }

    pub fn g_operator(&self, x: f64, t: f64) -> Result<f64> {
        self.snapshot(t).g_op(x)
    }

    pub fn psi_n(&self, n: usize, x: f64, t: f64) -> Result<C64> {
        self.snapshot(t).psi_n(n, x)
    }

    pub fn missing_state(&self, x: f64, t: f64) -> Result<C64> {
        self.snapshot(t).missing(x)
    }

    /// ψₙ sampled on a grid.
    pub fn sample_psi(&self, n: usize, grid: &Grid1D, t: f64) -> Result<StateField> {
        let snap = self.snapshot(t);
        StateField::try_from_fn(*grid, t, |x| snap.psi_n(n, x))
    }

    /// u sampled on a grid.
    pub fn sample_u(&self, grid: &Grid1D, t: f64) -> Result<StateField> {
        let snap = self.snapshot(t);
        StateField::try_from_fn(*grid, t, |x| snap.u(x))
    }
}

// Norms of Lφₙ and the missing-state integral by Boole's rule on the window.
type Tables = (Vec<Option<f64>>, std::result::Result<f64, String>);

fn chi_space_tables(spec: &DarbouxSpec, w: f64) -> Result<Tables> {
    let cells = 4 * ((2.0 * w / 0.005 / 4.0).ceil() as usize);
    let h = 2.0 * w / cells as f64;
    let weight = |i: usize| -> f64 {
        if i == 0 || i == cells {
            7.0
        } else {
            match i % 4 {
                0 => 14.0,
                2 => 12.0,
                _ => 32.0,
            }
        }
    };
    let mut norm_sq = vec![0.0; MODE_CAP];
    let mut edge = vec![0.0f64; MODE_CAP];
    let mut missing = 0.0;
    let mut missing_edge: f64 = 0.0;
    let mut missing_peak: f64 = 0.0;
    for i in 0..=cells {
        let chi = -w + i as f64 * h;
        let fv = f_function(spec, chi)?;
        let hf = hermite_functions(MODE_CAP, chi);
        let wt = weight(i) * 2.0 * h / 45.0;
        for n in 0..MODE_CAP {
            // Lφₙ ↦ √2 (√(2n) h_{n−1} − g hₙ) in χ
            let lower = if n == 0 { 0.0 } else { (2.0 * n as f64).sqrt() * hf[n - 1] };
            let v = SQRT_2 * (lower - fv.g * hf[n]);
            norm_sq[n] += wt * v * v;
            if i == 0 || i == cells {
                edge[n] = edge[n].max(v.abs());
            }
        }
        let dens = (chi * chi - 2.0 * fv.log_abs_f).exp();
        missing += weight(i) * 2.0 * h / 45.0 * dens;
        missing_peak = missing_peak.max(dens);
        if i == 0 || i == cells {
            missing_edge = missing_edge.max(dens);
        }
    }
    let norms = norm_sq
        .iter()
        .zip(&edge)
        .map(|(&s, &e)| (e <= EDGE_AMPLITUDE * s.sqrt().max(1.0)).then(|| s.sqrt()))
        .collect();
    let missing_integral = if !missing.is_finite() {
        Err("e^{χ²}/F² overflows on the window".into())
    } else if missing_edge.sqrt() > EDGE_AMPLITUDE * missing.sqrt() {
        Err(format!(
            "density at the window edge |chi| = {w} is {:.3e} of the peak",
            missing_edge / missing_peak
        ))
    } else {
        Ok(missing)
    };
    Ok((norms, missing_integral))
}

/// Evaluators of one Darboux model at one instant.
#[derive(Debug, Clone, Copy)]
pub struct DarbouxSnapshot<'a> {
    model: &'a DarbouxModel,
    base: Snapshot,
}

impl<'a> DarbouxSnapshot<'a> {
    pub fn base(&self) -> &Snapshot {
        &self.base
    }

    pub fn time(&self) -> f64 {
        self.base.t
    }

    pub fn chi_in_window(&self, x: f64) -> Result<f64> {
        let chi = self.base.chi(x);
        if chi.abs() > self.model.window {
            return Err(Error::OutOfWindow { chi, window: self.model.window });
        }
        Ok(chi)
    }

    pub fn f_values(&self, x: f64) -> Result<(f64, FValues)> {
        let chi = self.chi_in_window(x)?;
        Ok((chi, f_function(&self.model.spec, chi)?))
    }

    /// u = e^{−iεθ} e^{iξ} e^{−χ²/2} F/√α, assembled in log space.
    pub fn u(&self, x: f64) -> Result<C64> {
        let (chi, fv) = self.f_values(x)?;
        let modulus = (fv.log_abs_f - 0.5 * chi * chi - 0.5 * self.base.alpha.ln()).exp();
        let phase = self.base.xi(x) - self.model.spec.epsilon * self.base.theta;
        Ok(C64::from_polar(modulus * fv.sign(), phase))
    }

    /// ħ²k²/(mα²), the zero-point shift of V₁ when F is constant.
    pub fn shift(&self) -> f64 {
        let b = &self.base;
        b.hbar * b.hbar * b.k * b.k / (b.m * b.alpha * b.alpha)
    }

    pub fn v0(&self, x: f64) -> f64 {
        self.model.base.model().params().v0(x)
    }

    pub fn v1(&self, x: f64) -> Result<f64> {
        let (_, fv) = self.f_values(x)?;
        Ok(self.v0(x) + self.shift() * (1.0 - fv.dg))
    }

    /// V₀ + iħ d/dt ln ℓ + (ħ²/m)∂ₓβ before any simplification; its imaginary
    /// part cancels between the ℓ and S_R terms.
    pub fn v1_unsimplified(&self, x: f64) -> Result<C64> {
        let (_, fv) = self.f_values(x)?;
        let b = &self.base;
        let rate = b.k / b.alpha;
        let d_beta = -2.0 * C64::i() * b.s_complex() - rate * rate * fv.dg;
        Ok(self.v0(x) + C64::i() * b.hbar * b.alpha_dot / b.alpha + b.hbar * b.hbar / b.m * d_beta)
    }

    pub fn beta(&self, x: f64) -> Result<C64> {
        let (_, fv) = self.f_values(x)?;
        let b = &self.base;
        let d = x - b.center.x;
        Ok(-C64::i() * b.center.p / b.hbar - 2.0 * C64::i() * b.s_complex() * d - b.k / b.alpha * fv.g)
    }

    /// −∂ₓ ln u from the analytic parts of u, an independent route to β.
    pub fn minus_dlog_u(&self, x: f64) -> Result<C64> {
        let (chi, fv) = self.f_values(x)?;
        let b = &self.base;
        Ok(-C64::i() * b.xi_rate(x) + b.k / b.alpha * (chi - fv.g))
    }

    /// G = (m/ħ²)(V₀ − V₁) = (k²/α²)(g′ − 1).
    pub fn g_op(&self, x: f64) -> Result<f64> {
        let (_, fv) = self.f_values(x)?;
        let rate = self.base.k / self.base.alpha;
        Ok(rate * rate * (fv.dg - 1.0))
    }

    /// ∂ₓG
    pub fn g_op_dx(&self, x: f64) -> Result<f64> {
        let (chi, fv) = self.f_values(x)?;
        let rate = self.base.k / self.base.alpha;
        Ok(rate * rate * rate * g_second(&fv, chi))
    }

    pub fn ell(&self) -> f64 {
        self.base.alpha / self.base.lambda.sqrt()
    }

    /// Lφₙ at one point, from the closed ladder form.
    pub fn l_phi(&self, n: usize, x: f64) -> Result<C64> {
        let (_, fv) = self.f_values(x)?;
        let phis = self.base.modes(n, x);
        let mut v = -SQRT_2 * fv.g * phis[n];
        if n > 0 {
            v += 2.0 * C64::from_polar((n as f64).sqrt(), -self.base.theta) * phis[n - 1];
        }
        Ok(v)
    }

    /// ψₙ: the missing state for n = 0, otherwise Lφ_{n−1}/‖Lφ_{n−1}‖.
    pub fn psi_n(&self, n: usize, x: f64) -> Result<C64> {
        if n == 0 {
            return self.missing(x);
        }
        if n > MODE_CAP {
            return Err(Error::CapExceeded { cap: MODE_CAP });
        }
        let norm = self.model.norm_of_l_phi(n - 1)?;
        if norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(self.l_phi(n - 1, x)? / norm)
    }

    /// ψ₀..ψ_{n_max} at one point (ψ₀ is the missing state).
    pub fn psi_all(&self, n_max: usize, x: f64) -> Result<Vec<C64>> {
        if n_max > MODE_CAP {
            return Err(Error::CapExceeded { cap: MODE_CAP });
        }
        let (chi, fv) = self.f_values(x)?;
        let mut out = Vec::with_capacity(n_max + 1);
        out.push(self.missing_from(chi, &fv, x)?);
        if n_max == 0 {
            return Ok(out);
        }
        let phis = self.base.modes(n_max - 1, x);
        let step = C64::from_polar(1.0, -self.base.theta);
        for n in 0..n_max {
            let mut v = -SQRT_2 * fv.g * phis[n];
            if n > 0 {
                v += 2.0 * (n as f64).sqrt() * step * phis[n - 1];
            }
            let norm = self.model.norm_of_l_phi(n)?;
            if norm == 0.0 {
                return Err(Error::ZeroNorm);
            }
            out.push(v / norm);
        }
        Ok(out)
    }

    /// Normalized ψ_M ∝ 1/(ℓu*).
    pub fn missing(&self, x: f64) -> Result<C64> {
        let (chi, fv) = self.f_values(x)?;
        self.missing_from(chi, &fv, x)
    }

    fn missing_from(&self, chi: f64, fv: &FValues, x: f64) -> Result<C64> {
        let integral = self.model.missing_integral.as_ref().map_err(|r| Error::NotNormalizable(r.clone()))?;
        let b = &self.base;
        let modulus = (0.5 * chi * chi - fv.log_abs_f + 0.5 * (b.k / (b.alpha * integral)).ln()).exp();
        let phase = b.xi(x) - self.model.spec.epsilon * b.theta;
        Ok(C64::from_polar(modulus * fv.sign(), phase))
    }
}

/// Realizations of the intertwiner on sampled fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LForm {
    /// ℓ(∂ₓ + β)
    Primitive,
    /// −√2 (F′/F) + 2e^{−iθ}Â⁻
    Ladder,
}

pub fn apply_l(model: &DarbouxModel, field: &StateField, form: LForm) -> Result<StateField> {
    let snap = model.snapshot(field.time());
    match form {
        LForm::Primitive => {
            ensure_resolved(field, false, crate::hg_modes::OPERATOR_RESOLUTION_LIMIT)?;
            primitive_l(&snap, field)
        }
        LForm::Ladder => {
            let lowered = apply_a(model.base(), Ladder::Lower, field)?;
            let grid = *field.grid();
            let rot = C64::from_polar(2.0, -snap.base.theta);
            let values = field
                .values()
                .iter()
                .zip(lowered.values())
                .enumerate()
                .map(|(i, (&f, &a))| {
                    let (_, fv) = snap.f_values(grid.x(i))?;
                    Ok(-SQRT_2 * fv.g * f + rot * a)
                })
                .collect::<Result<Vec<_>>>()?;
            StateField::new(grid, values, field.time())
        }
    }
}

fn primitive_l(snap: &DarbouxSnapshot<'_>, field: &StateField) -> Result<StateField> {
    let grid = *field.grid();
    let d = first_derivative(field.values(), grid.spacing(), StencilOrder::Sixth);
    let ell = snap.ell();
    let values = field
        .values()
        .iter()
        .zip(&d)
        .enumerate()
        .map(|(i, (&f, &df))| Ok(ell * (df + snap.beta(grid.x(i))? * f)))
        .collect::<Result<Vec<_>>>()?;
    StateField::new(grid, values, field.time())
}

/// L† = −ℓ∂ₓ + ℓβ* applied to a field.
pub fn apply_l_dagger(model: &DarbouxModel, field: &StateField) -> Result<StateField> {
    ensure_resolved(field, false, crate::hg_modes::OPERATOR_RESOLUTION_LIMIT)?;
    let snap = model.snapshot(field.time());
    let grid = *field.grid();
    let d = first_derivative(field.values(), grid.spacing(), StencilOrder::Fourth);
    let ell = snap.ell();
    let values = field
        .values()
        .iter()
        .zip(&d)
        .enumerate()
        .map(|(i, (&f, &df))| Ok(ell * (-df + snap.beta(grid.x(i))?.conj() * f)))
        .collect::<Result<Vec<_>>>()?;
    StateField::new(grid, values, field.time())
}

/// ‖L†ψ_M‖ / ‖ℓβ*ψ_M‖ on a grid: the size of L†ψ_M against one of the two
/// terms that cancel in it.
pub fn missing_state_l_dagger_residual(model: &DarbouxModel, grid: &Grid1D, t: f64) -> Result<f64> {
    let snap = model.snapshot(t);
    let psi = StateField::try_from_fn(*grid, t, |x| snap.missing(x))?;
    let image = apply_l_dagger(model, &psi)?;
    let ell = snap.ell();
    let term = StateField::try_from_fn(*grid, t, |x| Ok(ell * snap.beta(x)?.conj() * snap.missing(x)?))?;
    Ok(image.norm() / term.norm())
}

/// Î_G applied to a field with overall scale `i0`.
pub fn apply_invariant_ig(model: &DarbouxModel, field: &StateField, i0: f64, frame: Frame) -> Result<StateField> {
    let snap = model.snapshot(field.time());
    let grid = *field.grid();
    let b = &snap.base;
    let coef = 2.0 * b.hbar * b.hbar * b.alpha * b.alpha / (b.m * b.m);
    let g: Vec<f64> = (0..grid.len()).map(|i| snap.g_op(grid.x(i))).collect::<Result<_>>()?;
    apply_quadratic_invariant(model.base(), field, i0, frame, |i| -coef * g[i])
}

/// Residual of ∂ₜG = −(2α̇/α)G − (α̇/α)(x − x₀)∂ₓG − ẋ₀∂ₓG at (x, t), where
/// x₀ is the frame origin (ẋ₀ = ⟨p̂⟩/m in the comoving frame, 0 in the lab).
/// ∂ₜG is a symmetric difference with step `dt`; returns the residual
/// relative to max(|∂ₜG|, |G|·|α̇/α|).
pub fn g_identity_residual(model: &DarbouxModel, x: f64, t: f64, dt: f64, frame: Frame) -> Result<f64> {
    let dgdt = (model.g_operator(x, t + dt)? - model.g_operator(x, t - dt)?) / (2.0 * dt);
    let snap = model.snapshot(t);
    let b = &snap.base;
    let rate = b.alpha_dot / b.alpha;
    let g = snap.g_op(x)?;
    let gx = snap.g_op_dx(x)?;
    let (x0, v0) = match frame {
        Frame::Lab => (0.0, 0.0),
        Frame::Comoving => (b.center.x, b.center.p / b.m),
    };
    let rhs = -2.0 * rate * g - rate * (x - x0) * gx - v0 * gx;
    let scale = dgdt.abs().max((g * rate).abs()).max(f64::MIN_POSITIVE);
    Ok((dgdt - rhs).abs() / scale)
}

/// Third x-derivative of ln(u/u*) at x by a forward difference of the phase
/// increments of u (exact for cubic phases).
pub fn realness_residual(model: &DarbouxModel, x: f64, t: f64, h: f64) -> Result<f64> {
    let snap = model.snapshot(t);
    let u: Vec<C64> = (0..4).map(|j| snap.u(x + j as f64 * h)).collect::<Result<_>>()?;
    let inc: Vec<f64> = (0..3).map(|j| (u[j + 1] * u[j].conj()).arg()).collect();
    // ln(u/u*) = 2i arg u
    Ok(2.0 * (inc[2] - 2.0 * inc[1] + inc[0]).abs() / (h * h * h))
}

/// ‖L(iħ∂ₜ − Ĥ₀)f − (iħ∂ₜ − Ĥ₁)Lf‖ / ‖f‖ for a time-dependent field f.
pub fn intertwining_residual<S>(model: &DarbouxModel, state: S, grid: &Grid1D, t: f64, dt: f64) -> Result<f64>
where
    S: Fn(&Grid1D, f64) -> Result<StateField>,
{
    if !(1e-7..=1e-3).contains(&dt) {
        return Err(Error::InvalidTimeStep { dt });
    }
    let params = *model.base().model().params();
    let (hbar, m) = (params.hbar, params.m);
    let schrodinger = |fields: [&StateField; 3], potential: &dyn Fn(f64) -> Result<f64>| -> Result<StateField> {
        let [earlier, now, later] = fields;
        let d2 = second_derivative(now.values(), grid.spacing(), StencilOrder::Fourth);
        let values = (0..grid.len())
            .map(|i| {
                let dt_f = (later.values()[i] - earlier.values()[i]) / (2.0 * dt);
                let h = -hbar * hbar / (2.0 * m) * d2[i] + potential(grid.x(i))? * now.values()[i];
                Ok(C64::i() * hbar * dt_f - h)
            })
            .collect::<Result<Vec<_>>>()?;
        StateField::new(*grid, values, t)
    };
    let f = [state(grid, t - dt)?, state(grid, t)?, state(grid, t + dt)?];
    let lhs_inner = schrodinger([&f[0], &f[1], &f[2]], &|x| Ok(params.v0(x)))?;
    let snap = model.snapshot(t);
    // the bracket is discretization noise for exact solutions, so no resolution gate
    let lhs = primitive_l(&snap, &lhs_inner)?;
    let lf = [
        apply_l(model, &f[0], LForm::Ladder)?,
        apply_l(model, &f[1], LForm::Ladder)?,
        apply_l(model, &f[2], LForm::Ladder)?,
    ];
    let rhs = schrodinger([&lf[0], &lf[1], &lf[2]], &|x| snap.v1(x))?;
    Ok(lhs.sub(&rhs)?.norm() / f[1].norm())
}

/// Coefficients over an orthonormal ladder basis (index n ↦ cₙ).
#[derive(Debug, Clone, PartialEq)]
pub struct ModeExpansion {
    coeffs: Vec<C64>,
}

impl ModeExpansion {
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() > MODE_CAP + 1 {
            return Err(Error::CapExceeded { cap: MODE_CAP });
        }
        Ok(Self { coeffs })
    }

    pub fn basis(n: usize) -> Result<Self> {
        let mut c = vec![C64::default(); n + 1];
        c[n] = C64::new(1.0, 0.0);
        Self::new(c)
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let at = |v: &[C64], i: usize| v.get(i).copied().unwrap_or_default();
        Self { coeffs: (0..n).map(|i| at(&self.coeffs, i) - at(&other.coeffs, i)).collect() }
    }
}

/// B± on coefficients: raise sends cₙ to index n+1 with weight √(n+1),
/// lower sends cₙ to n−1 with weight √n.
pub fn ladder_b(direction: Ladder, expansion: &ModeExpansion) -> Result<ModeExpansion> {
    let c = &expansion.coeffs;
    match direction {
        Ladder::Lower => {
            let out = (1..c.len().max(1)).map(|n| (n as f64).sqrt() * c[n]).collect();
            ModeExpansion::new(out)
        }
        Ladder::Raise => {
            let mut out = vec![C64::default(); c.len() + 1];
            for (n, &v) in c.iter().enumerate() {
                out[n + 1] = ((n + 1) as f64).sqrt() * v;
            }
            if out.len() > MODE_CAP + 1 {
                if out[MODE_CAP + 1] != C64::default() {
                    return Err(Error::CapExceeded { cap: MODE_CAP });
                }
                out.truncate(MODE_CAP + 1);
            }
            ModeExpansion::new(out)
        }
    }
}

/// Σ cₙ ψₙ sampled on a grid (ψ₀ is the missing state).
pub fn sample_expansion(model: &DarbouxModel, expansion: &ModeExpansion, grid: &Grid1D, t: f64) -> Result<StateField> {
    let snap = model.snapshot(t);
    let c = expansion.coeffs();
    let top = c.len().saturating_sub(1);
    StateField::try_from_fn(*grid, t, |x| {
        let psi = snap.psi_all(top, x)?;
        Ok(c.iter().zip(&psi).map(|(a, b)| a * b).sum())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{validate, ErmakovSpec, OscillatorParams, TrajectorySpec};
    use crate::hg_modes::apply_invariant_i;
    use crate::verify::{gram_matrix, inner_product, rayleigh_quotient, schrodinger_residual};

    fn base(a: f64, c: f64, x0: f64, p0: f64) -> BaseOscillator {
        let params = OscillatorParams::new(1.0, 0.5, 1.0, 0.0).unwrap();
        BaseOscillator::new(validate(params, ErmakovSpec::new(a, c)).unwrap(), TrajectorySpec::new(x0, p0)).unwrap()
    }

    fn fig1(x0: f64, p0: f64) -> DarbouxModel {
        DarbouxModel::new(DarbouxSpec::new(-0.5, 0.89, 1.0).unwrap(), base(1.0, 4.0, x0, p0)).unwrap()
    }

    fn fig5(x0: f64, p0: f64) -> DarbouxModel {
        DarbouxModel::new(DarbouxSpec::new(-1.5, 1.7, 1.0).unwrap(), base(1.0, 5.0, x0, p0)).unwrap()
    }

    fn identity_model(x0: f64, p0: f64) -> DarbouxModel {
        DarbouxModel::new(DarbouxSpec::new(0.5, 1.3, 0.0).unwrap(), base(1.0, 4.0, x0, p0)).unwrap()
    }

    fn grid() -> Grid1D {
        Grid1D::new(-20.0, 20.0, 4001).unwrap()
    }

    // F from the ₁F₁ route with a deliberately shifted ε, used as an oracle
    // for the closed erf forms.
    fn general_route(spec: &DarbouxSpec, chi: f64) -> FValues {
        let nudged = DarbouxSpec { epsilon: spec.epsilon + 1e-13, ..*spec };
        assert_eq!(nudged.branch(), Branch::General);
        f_function(&nudged, chi).unwrap()
    }

    #[test]
    fn f_function_examples() {
        let s = DarbouxSpec::new(-0.5, 2.0, 0.0).unwrap();
        for chi in [-3.0, 0.4, 5.0] {
            assert!((f_function(&s, chi).unwrap().g - 2.0 * chi).abs() < 1e-14);
        }
        let s = DarbouxSpec::new(0.5, 1.3, 0.0).unwrap();
        let v = f_function(&s, 12.0).unwrap();
        assert_eq!((v.f, v.g), (1.3, 0.0));
        let s = DarbouxSpec::new(-0.5, 0.89, 1.0).unwrap();
        assert_eq!(f_function(&s, 0.0).unwrap().f, 0.89);
        assert!(matches!(f_function(&DarbouxSpec::new(0.2, 1.0, 1.0).unwrap(), 7.5), Err(Error::OutOfSupport { .. })));
    }

    #[test]
    fn closed_forms_match_kummer_route() {
        for spec in [DarbouxSpec::new(-0.5, 0.89, 1.0).unwrap(), DarbouxSpec::new(-1.5, 1.7, 1.0).unwrap()] {
            for i in 0..=140 {
                let chi = -7.0 + 0.1 * i as f64;
                let closed = f_function(&spec, chi).unwrap();
                let oracle = general_route(&spec, chi);
                assert!((closed.log_abs_f - oracle.log_abs_f).abs() < 1e-9 * (1.0 + oracle.log_abs_f.abs()), "chi={chi} {closed:?} {oracle:?}");
                assert!((closed.g - oracle.g).abs() < 1e-10 * (1.0 + oracle.g.abs()), "chi={chi}");
                assert!((closed.dg - oracle.dg).abs() < 1e-9 * (1.0 + oracle.dg.abs()), "chi={chi}");
            }
        }
    }

    #[test]
    fn log_derivatives_match_finite_differences() {
        for spec in [
            DarbouxSpec::new(-0.5, 0.89, 1.0).unwrap(),
            DarbouxSpec::new(-1.5, 1.7, 1.0).unwrap(),
            DarbouxSpec::new(0.2, 1.0, 0.3).unwrap(),
        ] {
            let h = 1e-4;
            for &chi in &[-4.0, -1.1, 0.0, 0.7, 3.3] {
                let v = f_function(&spec, chi).unwrap();
                let lp = f_function(&spec, chi + h).unwrap();
                let lm = f_function(&spec, chi - h).unwrap();
                let g_fd = (lp.log_abs_f - lm.log_abs_f) / (2.0 * h);
                let dg_fd = (lp.g - lm.g) / (2.0 * h);
                assert!((g_fd - v.g).abs() < 1e-6 * (1.0 + v.g.abs()));
                assert!((dg_fd - v.dg).abs() < 1e-6 * (1.0 + v.dg.abs()));
                let ddg_fd = (lp.dg - lm.dg) / (2.0 * h);
                assert!((ddg_fd - g_second(&v, chi)).abs() < 1e-5 * (1.0 + ddg_fd.abs()));
            }
        }
    }

    #[test]
    fn mode_equation_residual() {
        // −½ w″ + χ²/2 w − ε w = 0 for w = e^{−χ²/2}F, w″ by a sixth-order stencil
        for (eps, ka, kb) in [(-0.5, 0.89, 1.0), (-1.5, 1.7, 1.0), (0.2, 1.0, 0.5)] {
            let spec = DarbouxSpec::new(eps, ka, kb).unwrap();
            let w = |chi: f64| {
                let v = f_function(&spec, chi).unwrap();
                v.sign() * (v.log_abs_f - 0.5 * chi * chi).exp()
            };
            let h = 1e-2;
            for i in 0..=24 {
                let chi = -6.0 + 0.5 * i as f64;
                let f: Vec<f64> = (-3..=3).map(|j| w(chi + j as f64 * h)).collect();
                let d2 = (2.0 * f[0] - 27.0 * f[1] + 270.0 * f[2] - 490.0 * f[3] + 270.0 * f[4] - 27.0 * f[5]
                    + 2.0 * f[6])
                    / (180.0 * h * h);
                let res = -0.5 * d2 + (0.5 * chi * chi - eps) * f[3];
                assert!(res.abs() < 1e-7 * (1.0 + f[3].abs()), "eps={eps} chi={chi} res={res}");
            }
        }
    }

    #[test]
    fn certification_examples() {
        let ok = certify_nodeless(&DarbouxSpec::new(-0.5, 1.0, 1.0).unwrap(), 8.0);
        assert!(ok.passed);
        let bad = certify_nodeless(&DarbouxSpec::new(-0.5, 0.5, 1.0).unwrap(), 8.0);
        assert!(!bad.passed);
        assert_eq!(bad.zeros.len(), 1);
        // erf(χ) = −0.5/(√π/2)
        let z = bad.zeros[0];
        assert!((0.5 + 0.5 * SQRT_PI * erf(z)).abs() < 1e-11);
        assert!(certify_nodeless(&DarbouxSpec::new(-1.5, 1.7, 1.0).unwrap(), 8.0).passed);
        // no finite zero, but B → 0 as χ → −∞
        let edge = certify_nodeless(&DarbouxSpec::new(-0.5, 0.5 * SQRT_PI, 1.0).unwrap(), 8.0);
        assert!(!edge.passed && edge.zeros.is_empty());
        assert!(matches!(
            DarbouxModel::new(DarbouxSpec::new(-0.5, 0.5, 1.0).unwrap(), base(1.0, 4.0, 0.0, 0.0)),
            Err(Error::NotNodeless { .. })
        ));
        assert!(DarbouxSpec::new(-0.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn norm_table_matches_spectral_identity() {
        for model in [fig1(0.0, 0.0), fig5(3.0, 1.0)] {
            let eps = model.spec().epsilon;
            for n in 0..MODE_CAP {
                let want = (4.0 * (n as f64 + 0.5 - eps)).sqrt();
                let got = model.norm_of_l_phi(n).unwrap();
                assert!((got - want).abs() < 1e-10 * want, "n={n} got={got} want={want}");
            }
        }
    }

    #[test]
    fn identity_case_reductions() {
        let model = identity_model(3.0, 1.0);
        let g = grid();
        for t in [0.0, 1.3, 6.0] {
            let snap = model.snapshot(t);
            let alpha = snap.base().alpha;
            for &x in &[-5.0, 0.0, 2.2, 7.0] {
                let dv = snap.v1(x).unwrap() - snap.v0(x);
                assert!((dv - 2.0 * 0.5 / (alpha * alpha)).abs() < 1e-15);
                assert!((snap.g_op(x).unwrap() + 2.0 * 0.5 / (alpha * alpha)).abs() < 1e-15);
            }
            for n in 0..6 {
                let f = model.base().sample_mode(n, &g, t).unwrap();
                let lf = apply_l(&model, &f, LForm::Primitive).unwrap();
                let want = if n == 0 {
                    f.scaled(C64::default())
                } else {
                    model.base().sample_mode(n - 1, &g, t).unwrap().scaled(C64::from_polar(2.0 * (n as f64).sqrt(), -snap.base().theta))
                };
                assert!(lf.sub(&want).unwrap().norm() < 1e-6, "n={n}");
            }
        }
        // u ∝ φ₀
        let snap = model.snapshot(1.1);
        let ratio = snap.u(0.3).unwrap() / snap.base().phi_n(0, 0.3).unwrap();
        for &x in &[-2.0, 1.0, 4.0] {
            let r = snap.u(x).unwrap() / snap.base().phi_n(0, x).unwrap();
            assert!((r - ratio).norm() < 1e-12 * ratio.norm());
        }
        assert!(matches!(model.missing_state(0.0, 0.0), Err(Error::NotNormalizable(_))));
        // −i⟨p̂⟩/ħ + 2S_I(x − ⟨x̂⟩) at t = 0
        let b = model.beta_function(1.7, 0.0).unwrap();
        assert!((b - C64::new(-1.3, -1.0)).norm() < 1e-14);
    }

    #[test]
    fn beta_example_and_identity() {
        let model = identity_model(0.0, 0.0);
        // −2iS x with S = iλ/a is real
        let b = model.beta_function(1.7, 0.0).unwrap();
        assert!((b - C64::new(1.7, 0.0)).norm() < 1e-15);
        let m = fig1(3.0, 1.0);
        for i in 0..100 {
            let t = 0.137 * i as f64;
            let x = -8.0 + 0.16 * i as f64;
            let snap = m.snapshot(t);
            assert!((snap.beta(x).unwrap() - snap.minus_dlog_u(x).unwrap()).norm() < 1e-10);
            // numerical −∂ₓ ln u
            let h = 1e-5;
            let d = (snap.u(x + h).unwrap() / snap.u(x - h).unwrap()).ln() / (2.0 * h);
            assert!((snap.beta(x).unwrap() + d).norm() < 1e-6 * (1.0 + d.norm()));
        }
        let centered = fig1(0.0, 0.0);
        let snap = centered.snapshot(0.0);
        let b0 = snap.beta(0.0).unwrap();
        assert!((b0.re + 1.0 / 0.89).abs() < 1e-14);
    }

    #[test]
    fn potential_properties() {
        let m = fig1(3.0, 1.0);
        for t in [0.2, 6.0] {
            let snap = m.snapshot(t);
            let alpha = snap.base().alpha;
            for i in 0..200 {
                let x = -15.0 + 0.15 * i as f64;
                let v = snap.v1(x).unwrap();
                assert!(v.is_finite());
                let im = snap.v1_unsimplified(x).unwrap();
                assert!(im.im.abs() < 1e-10);
                assert!((im.re - v).abs() < 1e-10 * (1.0 + v.abs()));
                let chi = snap.base().chi(x);
                if chi.abs() > 6.0 {
                    // far tail approaches V₀ − 2ħω₀/α²
                    assert!((v - snap.v0(x) + 2.0 * 0.5 / (alpha * alpha)).abs() < 1e-10, "chi={chi}");
                }
                assert!((snap.v0(x) - snap.g_op(x).unwrap() - v).abs() < 1e-12 * (1.0 + v.abs()));
            }
        }
    }

    #[test]
    fn ell_is_twice_the_position_spread() {
        let m = fig1(0.0, 0.0);
        for t in [0.0, 0.9, 4.4] {
            let sd = m.base().model().variance_x(t).sqrt();
            assert!((m.ell(t) - 2.0 * sd).abs() < 1e-12);
        }
    }

    #[test]
    fn realness_condition() {
        let m = fig1(3.0, 1.0);
        for t in [0.0, 1.3, 6.0] {
            for i in 0..40 {
                let x = -10.0 + 0.5 * i as f64;
                assert!(realness_residual(&m, x, t, 0.05).unwrap() < 1e-8);
            }
        }
    }

    #[test]
    fn primitive_and_ladder_forms_agree() {
        let g = grid();
        for m in [fig1(3.0, 1.0), fig5(0.0, 0.0)] {
            for t in [0.0, 1.3] {
                for n in 0..=5 {
                    let f = m.base().sample_mode(n, &g, t).unwrap();
                    let p = apply_l(&m, &f, LForm::Primitive).unwrap();
                    let l = apply_l(&m, &f, LForm::Ladder).unwrap();
                    assert!(p.sub(&l).unwrap().norm() / l.norm() < 1e-6);
                    let closed = StateField::try_from_fn(g, t, |x| m.snapshot(t).l_phi(n, x)).unwrap();
                    assert!(closed.sub(&l).unwrap().norm() / l.norm() < 1e-6, "n={n}");
                }
            }
        }
    }

    #[test]
    fn psi_states_orthonormal_and_conserved() {
        let g = Grid1D::new(-20.0, 20.0, 2001).unwrap();
        let m = fig1(3.0, 1.0);
        for t in [0.0, 1.3, 6.0] {
            let fields: Vec<_> = (0..=5).map(|n| m.sample_psi(n, &g, t).unwrap()).collect();
            let rep = gram_matrix(&fields).unwrap();
            assert!(rep.deviation < 1e-6, "t={t} dev={}", rep.deviation);
            for f in &fields {
                assert!((f.norm() - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn missing_state_properties() {
        let g = grid();
        for m in [fig1(3.0, 1.0), fig5(0.0, 0.0)] {
            for t in [0.0, 1.3] {
                assert!(missing_state_l_dagger_residual(&m, &g, t).unwrap() < 1e-6);
                let psi_m = StateField::try_from_fn(g, t, |x| m.missing_state(x, t)).unwrap();
                for n in 0..=5 {
                    let lf = StateField::try_from_fn(g, t, |x| m.snapshot(t).l_phi(n, x)).unwrap();
                    assert!(inner_product(&psi_m, &lf).unwrap().norm() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn schrodinger_residuals() {
        let m = fig1(3.0, 1.0);
        let g = Grid1D::new(-20.0, 20.0, 4001).unwrap();
        let v1 = |x: f64, t: f64| m.potential_v1(x, t).unwrap();
        for n in [0usize, 1, 2, 4] {
            let r = schrodinger_residual(|g, t| m.sample_psi(n, g, t), v1, &g, 1.3, 1e-5, 1.0, 1.0).unwrap();
            assert!(r.rel_residual < 1e-4, "n={n} {r:?}");
            assert!((1.7..=4.3).contains(&r.convergence_order_estimate), "n={n} {r:?}");
        }
        let ru = schrodinger_residual(
            |g, t| m.sample_u(g, t),
            |x, _| 0.125 * x * x,
            &Grid1D::new(-6.0, 10.0, 3201).unwrap(),
            1.3,
            1e-5,
            1.0,
            1.0,
        )
        .unwrap();
        assert!(ru.rel_residual < 1e-5, "{ru:?}");
        let wrong = schrodinger_residual(|g, t| m.base().sample_mode(0, g, t), v1, &g, 1.3, 1e-5, 1.0, 1.0).unwrap();
        assert!(wrong.rel_residual > 1e-2);
    }

    #[test]
    fn intertwining_on_solutions_and_bump() {
        let m = fig1(3.0, 1.0);
        let g = Grid1D::new(-16.0, 20.0, 3601).unwrap();
        for n in 0..=3 {
            let r = intertwining_residual(&m, |g, t| m.base().sample_mode(n, g, t), &g, 1.3, 1e-4).unwrap();
            assert!(r < 1e-4, "n={n} r={r}");
        }
        let bump = |g: &Grid1D, t: f64| {
            StateField::from_fn(*g, t, |x| C64::from_polar((-(x - 1.0) * (x - 1.0) / 2.0).exp(), 0.3 * t * x))
        };
        let r = intertwining_residual(&m, bump, &g, 1.3, 1e-4).unwrap();
        assert!(r < 1e-4, "bump r={r}");
    }

    #[test]
    fn g_operator_time_identity() {
        let m = fig1(0.0, 0.0);
        let moving = fig1(3.0, 1.0);
        for t in [0.3, 1.3, 4.0] {
            for &x in &[-3.0, -0.5, 0.4, 2.0] {
                assert!(g_identity_residual(&m, x, t, 1e-5, Frame::Lab).unwrap() < 1e-5);
                assert!(g_identity_residual(&moving, x, t, 1e-5, Frame::Comoving).unwrap() < 1e-5);
            }
        }
    }

    #[test]
    fn invariant_ig_spectrum() {
        let g = grid();
        let m = fig1(0.0, 0.0);
        // Î_G on ψₙ: (4ħω₀/m)(n − ½) for n ≥ 1, (4ħω₀/m)ε for ψ₀
        for n in 0..=4 {
            let want = 2.0 * if n == 0 { -0.5 } else { n as f64 - 0.5 };
            for t in [0.0, 1.3, 6.0] {
                let f = m.sample_psi(n, &g, t).unwrap();
                let q = rayleigh_quotient(|f| apply_invariant_ig(&m, f, 1.0, Frame::Lab), &f).unwrap();
                assert!((q.re - want).abs() < 1e-5 * want.abs().max(1.0), "n={n} t={t} q={q}");
            }
        }
        let fields: Vec<_> = (0..=4).map(|n| m.sample_psi(n, &g, 1.3).unwrap()).collect();
        for (a, fa) in fields.iter().enumerate() {
            for (b, fb) in fields.iter().enumerate() {
                if a != b {
                    let img = apply_invariant_ig(&m, fb, 1.0, Frame::Lab).unwrap();
                    assert!(inner_product(fa, &img).unwrap().norm() < 1e-5);
                }
            }
        }
        // comoving frame handles a moving packet
        let mv = fig1(3.0, 1.0);
        let f = mv.sample_psi(2, &g, 6.0).unwrap();
        let q = rayleigh_quotient(|f| apply_invariant_ig(&mv, f, 1.0, Frame::Comoving), &f).unwrap();
        assert!((q.re - 3.0).abs() < 1e-5);
        // G off: Î_G reduces to Î
        let off = identity_model(0.0, 0.0);
        let f = off.base().sample_mode(3, &g, 1.3).unwrap();
        let with_g = apply_quadratic_invariant(off.base(), &f, 1.0, Frame::Lab, |_| 0.0).unwrap();
        let plain = apply_invariant_i(off.base(), &f, 1.0, Frame::Lab).unwrap();
        assert!(with_g.sub(&plain).unwrap().norm() < 1e-12);
    }

    #[test]
    fn completeness_proxy() {
        let g = Grid1D::new(-20.0, 20.0, 2001).unwrap();
        let m = fig1(0.0, 0.0);
        let t = 1.3;
        let psis: Vec<_> = (0..=12).map(|n| m.sample_psi(n, &g, t).unwrap()).collect();
        for k in 0..=10 {
            let target = StateField::try_from_fn(g, t, |x| m.snapshot(t).l_phi(k, x)).unwrap();
            let mut proj = target.scaled(C64::default());
            for p in &psis {
                proj = proj.add(&p.scaled(inner_product(p, &target).unwrap())).unwrap();
            }
            assert!(proj.sub(&target).unwrap().norm() / target.norm() < 1e-4);
        }
    }

    #[test]
    fn ladder_b_algebra() {
        let e0 = ModeExpansion::basis(0).unwrap();
        assert!(ladder_b(Ladder::Lower, &e0).unwrap().norm_sqr() == 0.0);
        for n in 0..10 {
            let e = ModeExpansion::basis(n).unwrap();
            let rl = ladder_b(Ladder::Raise, &ladder_b(Ladder::Lower, &e).unwrap()).unwrap();
            assert!(rl.sub(&e.scaled(C64::new(n as f64, 0.0))).norm_sqr() < 1e-28);
        }
        let top = ModeExpansion::basis(MODE_CAP).unwrap();
        assert_eq!(ladder_b(Ladder::Raise, &top), Err(Error::CapExceeded { cap: MODE_CAP }));
    }
}
