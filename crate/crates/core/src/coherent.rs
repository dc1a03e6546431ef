//! Coherent states of the Hermite-Gauss modes and of the Darboux partners.
//!
//! φ_z = Σ cₙ φₙ, ψ_z = Lφ_z and ψ̃_z = Σ cₙ ψₙ share the Poisson
//! coefficients cₙ = e^{−|z|²/2} zⁿ/√(n!).

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::f64::consts::{PI, SQRT_2};

use crate::darboux::{DarbouxModel, ModeExpansion};
use crate::error::{Error, Result};
use crate::hg_modes::{apply_a, BaseOscillator, Ladder, Quadratures, MODE_CAP};
use crate::verify::{inner_product, pairwise_sum, Grid1D, StateField};

/// Largest admissible Poisson tail beyond the truncation index.
pub const TAIL_LIMIT: f64 = 1e-14;

/// Complex label of a coherent state and the index at which its series stops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentLabel {
    z: C64,
    cap: usize,
}

impl CoherentLabel {
    /// Label with the smallest cap ≥ ⌈|z|² + 10√(|z|² + 1)⌉ whose tail is
    /// below [`TAIL_LIMIT`].
    pub fn new(z: C64) -> Result<Self> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFiniteParameter { name: "z", value: z.norm() });
        }
        let r2 = z.norm_sqr();
        let mut cap = (r2 + 10.0 * (r2 + 1.0).sqrt()).ceil();
        if cap > MODE_CAP as f64 {
            return Err(Error::CapExceeded { cap: MODE_CAP });
        }
        while poisson_tail(r2, cap as usize) >= TAIL_LIMIT {
            cap += 1.0;
            if cap > MODE_CAP as f64 {
                return Err(Error::CapExceeded { cap: MODE_CAP });
            }
        }
        Self::with_cap(z, cap as usize)
    }

    /// Label with an explicit cap, checked against [`TAIL_LIMIT`].
    pub fn with_cap(z: C64, cap: usize) -> Result<Self> {
        if cap > MODE_CAP {
            return Err(Error::CapExceeded { cap: MODE_CAP });
        }
        let tail = poisson_tail(z.norm_sqr(), cap);
        if tail >= TAIL_LIMIT {
            return Err(Error::CapTooSmall { cap, tail });
        }
        Ok(Self { z, cap })
    }

    pub fn z(&self) -> C64 {
        self.z
    }

    pub fn cap(&self) -> usize {
        self.cap
    }
}

/// e^{−μ} Σ_{n>cap} μⁿ/n!, summed upward in log space.
pub fn poisson_tail(mu: f64, cap: usize) -> f64 {
    if mu == 0.0 {
        return 0.0;
    }
    let ln_mu = mu.ln();
    let mut ln_term = -mu;
    for n in 1..=cap {
        ln_term += ln_mu - (n as f64).ln();
    }
    let mut sum = 0.0;
    let mut n = cap + 1;
    loop {
        ln_term += ln_mu - (n as f64).ln();
        let term = ln_term.exp();
        sum += term;
        if (n as f64 > mu && term < 1e-30 * sum.max(f64::MIN_POSITIVE)) || term == 0.0 && n as f64 > mu {
            return sum;
        }
        n += 1;
    }
}

fn poisson_coeffs(z: C64, cap: usize) -> Vec<C64> {
    let mut c = Vec::with_capacity(cap + 1);
    c.push(C64::new((-0.5 * z.norm_sqr()).exp(), 0.0));
    for n in 1..=cap {
        let prev = c[n - 1];
        c.push(prev * z / (n as f64).sqrt());
    }
    c
}

/// c₀..c_cap for a label.
pub fn coherent_coeffs(label: &CoherentLabel) -> Result<ModeExpansion> {
    ModeExpansion::new(poisson_coeffs(label.z, label.cap))
}

/// φ_z at one point.
pub fn phi_z(osc: &BaseOscillator, label: &CoherentLabel, x: f64, t: f64) -> Result<C64> {
    let modes = osc.snapshot(t).modes(label.cap, x);
    Ok(poisson_coeffs(label.z, label.cap).iter().zip(&modes).map(|(c, p)| c * p).sum())
}

/// ψ_z = Lφ_z = (−√2 F′/F + 2z e^{−iθ}) φ_z, with ‖ψ_z‖² = 4(|z|² + ½ − ε).
pub fn psi_z_raw(model: &DarbouxModel, label: &CoherentLabel, x: f64, t: f64) -> Result<C64> {
    let snap = model.snapshot(t);
    let (_, fv) = snap.f_values(x)?;
    let phi = phi_z(model.base(), label, x, t)?;
    Ok((-SQRT_2 * fv.g + 2.0 * label.z * C64::from_polar(1.0, -snap.base().theta)) * phi)
}

/// Analytic norm of [`psi_z_raw`].
pub fn psi_z_norm(model: &DarbouxModel, label: &CoherentLabel) -> f64 {
    (4.0 * (label.z.norm_sqr() + 0.5 - model.spec().epsilon)).sqrt()
}

/// ψ_z scaled to unit norm.
pub fn psi_z(model: &DarbouxModel, label: &CoherentLabel, x: f64, t: f64) -> Result<C64> {
    Ok(psi_z_raw(model, label, x, t)? / psi_z_norm(model, label))
}

/// ψ̃_z = Σ cₙ ψₙ, ψ₀ being the missing state.
pub fn psi_tilde_z(model: &DarbouxModel, label: &CoherentLabel, x: f64, t: f64) -> Result<C64> {
    let psi = model.snapshot(t).psi_all(label.cap, x)?;
    Ok(poisson_coeffs(label.z, label.cap).iter().zip(&psi).map(|(c, p)| c * p).sum())
}

/// The three coherent families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Phi,
    Psi,
    PsiTilde,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Phi => "phi",
            Family::Psi => "psi",
            Family::PsiTilde => "psi_tilde",
        }
    }
}

/// A family member sampled on a grid (ψ_z normalized).
pub fn sample_family(
    model: &DarbouxModel,
    family: Family,
    label: &CoherentLabel,
    grid: &Grid1D,
    t: f64,
) -> Result<StateField> {
    match family {
        Family::Phi => StateField::try_from_fn(*grid, t, |x| phi_z(model.base(), label, x, t)),
        Family::Psi => StateField::try_from_fn(*grid, t, |x| psi_z(model, label, x, t)),
        Family::PsiTilde => StateField::try_from_fn(*grid, t, |x| psi_tilde_z(model, label, x, t)),
    }
}

/// φ_z sampled on a grid.
pub fn sample_phi_z(osc: &BaseOscillator, label: &CoherentLabel, grid: &Grid1D, t: f64) -> Result<StateField> {
    StateField::try_from_fn(*grid, t, |x| phi_z(osc, label, x, t))
}

fn variances(norm_sq: f64, mean_q: f64, q_sq: f64, mean_p: f64, p_sq: f64) -> Quadratures {
    Quadratures::new(q_sq / norm_sq - (mean_q / norm_sq).powi(2), p_sq / norm_sq - (mean_p / norm_sq).powi(2))
}

/// Δq_A, Δp_A for q_A = (Â⁺ + Â⁻)/√2 and p_A = i(Â⁺ − Â⁻)/√2 on the grid.
pub fn quadratures_a(osc: &BaseOscillator, field: &StateField) -> Result<Quadratures> {
    let up = apply_a(osc, Ladder::Raise, field)?;
    let down = apply_a(osc, Ladder::Lower, field)?;
    let q = up.add(&down)?.scaled(C64::new(1.0 / SQRT_2, 0.0));
    let p = up.sub(&down)?.scaled(C64::new(0.0, 1.0 / SQRT_2));
    let norm_sq = field.norm().powi(2);
    let mean_q = inner_product(field, &q)?.re;
    let mean_p = inner_product(field, &p)?.re;
    Ok(variances(norm_sq, mean_q, q.norm().powi(2), mean_p, p.norm().powi(2)))
}

/// Δq_B, Δp_B from exact ladder actions on coefficients.
pub fn quadratures_b(expansion: &ModeExpansion) -> Quadratures {
    let c = expansion.coeffs();
    let len = c.len() + 1;
    let mut up = vec![C64::default(); len];
    let mut down = vec![C64::default(); len];
    for (n, &v) in c.iter().enumerate() {
        up[n + 1] = ((n + 1) as f64).sqrt() * v;
        if n > 0 {
            down[n - 1] = (n as f64).sqrt() * v;
        }
    }
    let q: Vec<C64> = up.iter().zip(&down).map(|(u, d)| (u + d) / SQRT_2).collect();
    let p: Vec<C64> = up.iter().zip(&down).map(|(u, d)| C64::i() * (u - d) / SQRT_2).collect();
    let dot = |a: &[C64]| -> f64 { a.iter().zip(c).map(|(x, y)| (y.conj() * x).re).sum() };
    let sq = |a: &[C64]| -> f64 { a.iter().map(|v| v.norm_sqr()).sum() };
    variances(expansion.norm_sqr(), dot(&q), sq(&q), dot(&p), sq(&p))
}

/// Resolution of the identity reconstructed on low modes.
#[derive(Debug, Clone, PartialEq)]
pub struct OvercompletenessReport {
    /// (1/π)∫⟨φₘ|φ_z⟩⟨φ_z|φₙ⟩ d²z for m, n ≤ m_max.
    pub matrix: Vec<Vec<C64>>,
    /// max |matrix − identity|
    pub deviation: f64,
}

/// Midpoint rule over |z| ≤ `radius` on an `angles` × `radii` polar grid.
/// Overlaps ⟨φₘ|φ_z⟩ come from the grid Gram matrix of φ₀..φ_cap, with φ_z
/// truncated at the mode cap; only m ≤ m_max enter, so the truncation is
/// exact for them.
pub fn overcompleteness(
    osc: &BaseOscillator,
    grid: &Grid1D,
    t: f64,
    m_max: usize,
    radius: f64,
    angles: usize,
    radii: usize,
) -> Result<OvercompletenessReport> {
    if m_max >= MODE_CAP || angles == 0 || radii == 0 || !(radius > 0.0) {
        return Err(Error::InvalidGrid(format!(
            "overcompleteness needs m_max < {MODE_CAP}, positive radius and nonempty z grid"
        )));
    }
    let modes: Vec<StateField> =
        (0..=MODE_CAP).into_par_iter().map(|n| osc.sample_mode(n, grid, t)).collect::<Result<_>>()?;
    let gram: Vec<Vec<C64>> = (0..=m_max)
        .map(|m| modes.iter().map(|f| inner_product(&modes[m], f)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let dr = radius / radii as f64;
    let dphi = 2.0 * PI / angles as f64;
    let cells: Vec<(f64, f64)> = (0..radii)
        .flat_map(|j| (0..angles).map(move |k| ((j as f64 + 0.5) * dr, (k as f64 + 0.5) * dphi)))
        .collect();
    let dim = m_max + 1;
    let contributions: Vec<Vec<C64>> = cells
        .par_iter()
        .map(|&(r, phi)| {
            let c = poisson_coeffs(C64::from_polar(r, phi), MODE_CAP);
            let overlap: Vec<C64> = gram.iter().map(|row| row.iter().zip(&c).map(|(g, cn)| g * cn).sum()).collect();
            let w = r * dr * dphi / PI;
            let mut block = Vec::with_capacity(dim * dim);
            for a in &overlap {
                for b in &overlap {
                    block.push(w * a * b.conj());
                }
            }
            block
        })
        .collect();
    let mut matrix = vec![vec![C64::default(); dim]; dim];
    let mut deviation: f64 = 0.0;
    for (m, row) in matrix.iter_mut().enumerate() {
        for (n, entry) in row.iter_mut().enumerate() {
            let terms: Vec<C64> = contributions.iter().map(|b| b[m * dim + n]).collect();
            *entry = pairwise_sum(&terms);
            let target = if m == n { 1.0 } else { 0.0 };
            deviation = deviation.max((*entry - target).norm());
        }
    }
    Ok(OvercompletenessReport { matrix, deviation })
}
