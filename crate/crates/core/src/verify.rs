//! Numerical oracle layer: uniform grids, sampled fields, quadrature,
//! finite-difference stencils, Schrödinger residuals, Rayleigh quotients
//! and Gram matrices.
//!
//! Inner products are only defined between fields sampled on the same grid
//! at the same instant. Orthonormality of the invariant eigenbases holds only
//! at equal times, so a time mismatch is an error rather than a warning.
//! All reductions use pairwise summation, which keeps results independent of
//! thread count.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Boundary amplitude above which [`widen_until_quiet`] grows a grid.
pub const BOUNDARY_AMPLITUDE_LIMIT: f64 = 1e-13;

/// Uniform grid on [x_min, x_max] with `n_points` abscissae.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_min >= x_max {
            return Err(Error::InvalidGrid(format!("need finite x_min < x_max, got [{x_min}, {x_max}]")));
        }
        if n_points < 16 {
            return Err(Error::InvalidGrid(format!("need at least 16 points, got {n_points}")));
        }
        Ok(Self { x_min, x_max, n_points })
    }

    /// Grid on [x_min, x_max] whose spacing is as close as possible to `dx`.
    pub fn with_spacing(x_min: f64, x_max: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {dx}")));
        }
        let n = ((x_max - x_min) / dx).round() as usize + 1;
        Self::new(x_min, x_max, n)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.x_max
        } else {
            self.x_min + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Every other point of this grid (spacing doubled); needs an odd count.
    pub fn coarsened(&self) -> Result<Self> {
        if self.n_points % 2 == 0 {
            return Err(Error::InvalidGrid("coarsening needs an odd number of points".into()));
        }
        Self::new(self.x_min, self.x_max, (self.n_points - 1) / 2 + 1)
    }

    /// Same spacing, extent grown by `cells` cells on each side.
    pub fn widened(&self, cells: usize) -> Self {
        let dx = self.spacing();
        Self {
            x_min: self.x_min - cells as f64 * dx,
            x_max: self.x_max + cells as f64 * dx,
            n_points: self.n_points + 2 * cells,
        }
    }
}

/// Complex amplitudes sampled on a grid at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct StateField {
    grid: Grid1D,
    values: Vec<C64>,
    time: f64,
    norm_hint: Option<f64>,
}

impl StateField {
    pub fn new(grid: Grid1D, values: Vec<C64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if let Some(bad) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidGrid(format!("non-finite value at x = {}", grid.x(bad))));
        }
        Ok(Self { grid, values, time, norm_hint: None })
    }

    pub fn from_fn<F>(grid: Grid1D, time: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> C64 + Sync,
    {
        let values = (0..grid.len()).into_par_iter().map(|i| f(grid.x(i))).collect();
        Self::new(grid, values, time)
    }

    pub fn try_from_fn<F>(grid: Grid1D, time: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<C64> + Sync,
    {
        let values = (0..grid.len()).into_par_iter().map(|i| f(grid.x(i))).collect::<Result<Vec<_>>>()?;
        Self::new(grid, values, time)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn norm_hint(&self) -> Option<f64> {
        self.norm_hint
    }

    /// L² norm by the trapezoid rule.
    pub fn norm(&self) -> f64 {
        let dens: Vec<f64> = self.values.iter().map(|v| v.norm_sqr()).collect();
        trapezoid_real(&dens, self.grid.spacing()).sqrt()
    }

    /// Rescaled to unit norm; the cached hint is set to 1.
    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if n <= 1e-12 {
            return Err(Error::ZeroNorm);
        }
        self.values.iter_mut().for_each(|v| *v /= n);
        self.norm_hint = Some(1.0);
        Ok(self)
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
            time: self.time,
            norm_hint: None,
        }
    }

    /// New field with value `f(x, ψ(x))` at every abscissa.
    pub fn map_pointwise<F>(&self, f: F) -> Self
    where
        F: Fn(f64, C64) -> C64 + Sync,
    {
        let values = self.values.par_iter().enumerate().map(|(i, &v)| f(self.grid.x(i), v)).collect();
        Self { grid: self.grid, values, time: self.time, norm_hint: None }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.time != other.time {
            return Err(Error::TimeMismatch { left: self.time, right: other.time });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a - b)
    }

    fn combine(&self, other: &Self, op: impl Fn(C64, C64) -> C64) -> Result<Self> {
        self.check_compatible(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| op(a, b)).collect();
        Ok(Self { grid: self.grid, values, time: self.time, norm_hint: None })
    }

    /// Largest modulus at the two end points.
    pub fn boundary_amplitude(&self) -> f64 {
        self.values[0].norm().max(self.values[self.values.len() - 1].norm())
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// Grid-resolved local maxima of |ψ|² above `floor` times the peak value.
    pub fn density_maxima(&self, floor: f64) -> Vec<f64> {
        let d = self.density();
        let peak = d.iter().cloned().fold(0.0, f64::max);
        (1..d.len() - 1)
            .filter(|&i| d[i] > d[i - 1] && d[i] >= d[i + 1] && d[i] > floor * peak)
            .map(|i| self.grid.x(i))
            .collect()
    }
}

/// Re-samples `eval` on progressively wider grids (same spacing) until the
/// boundary amplitude drops below [`BOUNDARY_AMPLITUDE_LIMIT`].
pub fn widen_until_quiet<F>(grid: Grid1D, eval: F) -> Result<(Grid1D, StateField)>
where
    F: Fn(&Grid1D) -> Result<StateField>,
{
    let mut g = grid;
    let mut field = eval(&g)?;
    for _ in 0..8 {
        if field.boundary_amplitude() <= BOUNDARY_AMPLITUDE_LIMIT {
            break;
        }
        g = g.widened((g.len() - 1) / 4);
        field = eval(&g)?;
    }
    Ok((g, field))
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum<T>(values: &[T]) -> T
where
    T: Copy + Default + std::ops::Add<Output = T>,
{
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        values.iter().fold(T::default(), |acc, &v| acc + v)
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

fn trapezoid_real(values: &[f64], dx: f64) -> f64 {
    let n = values.len();
    dx * (pairwise_sum(values) - 0.5 * (values[0] + values[n - 1]))
}

fn trapezoid_complex(values: &[C64], dx: f64) -> C64 {
    let n = values.len();
    dx * (pairwise_sum(values) - 0.5 * (values[0] + values[n - 1]))
}

// Composite Boole (5-point closed Newton–Cotes) weights 7, 32, 12, 32, 14, …, 7.
fn boole_complex(values: &[C64], dx: f64) -> Result<C64> {
    let n = values.len();
    if (n - 1) % 4 != 0 {
        return Err(Error::InvalidGrid(format!("Boole's rule needs (n − 1) divisible by 4, got n = {n}")));
    }
    let weighted: Vec<C64> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let w = if i == 0 || i == n - 1 {
                7.0
            } else {
                match i % 4 {
                    0 => 14.0,
                    2 => 12.0,
                    _ => 32.0,
                }
            };
            v * w
        })
        .collect();
    Ok(pairwise_sum(&weighted) * (2.0 * dx / 45.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadratureRule {
    #[default]
    Trapezoid,
    Boole,
}

/// ⟨f|g⟩ = ∫ f* g dx by the trapezoid rule.
pub fn inner_product(f: &StateField, g: &StateField) -> Result<C64> {
    inner_product_with(f, g, QuadratureRule::Trapezoid)
}

pub fn inner_product_with(f: &StateField, g: &StateField, rule: QuadratureRule) -> Result<C64> {
    f.check_compatible(g)?;
    let prod: Vec<C64> = f.values.iter().zip(&g.values).map(|(a, b)| a.conj() * b).collect();
    let dx = f.grid.spacing();
    match rule {
        QuadratureRule::Trapezoid => Ok(trapezoid_complex(&prod, dx)),
        QuadratureRule::Boole => boole_complex(&prod, dx),
    }
}

/// ∫ |f − g| of two real densities sampled on the same grid.
pub fn l1_distance(f: &[f64], g: &[f64], dx: f64) -> f64 {
    let diff: Vec<f64> = f.iter().zip(g).map(|(a, b)| (a - b).abs()).collect();
    trapezoid_real(&diff, dx)
}

/// Order of accuracy of a finite-difference stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StencilOrder {
    Fourth,
    Sixth,
}

/// First derivative; central in the interior, one-sided fourth order at the edges.
pub fn first_derivative(values: &[C64], dx: f64, order: StencilOrder) -> Vec<C64> {
    let n = values.len();
    let f = values;
    let mut out = vec![C64::default(); n];
    let h12 = 12.0 * dx;
    out[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / h12;
    out[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / h12;
    out[n - 1] = -(-25.0 * f[n - 1] + 48.0 * f[n - 2] - 36.0 * f[n - 3] + 16.0 * f[n - 4] - 3.0 * f[n - 5]) / h12;
    out[n - 2] = -(-3.0 * f[n - 1] - 10.0 * f[n - 2] + 18.0 * f[n - 3] - 6.0 * f[n - 4] + f[n - 5]) / h12;
    let central4 = |i: usize| (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / h12;
    match order {
        StencilOrder::Fourth => {
            for i in 2..n - 2 {
                out[i] = central4(i);
            }
        }
        StencilOrder::Sixth => {
            out[2] = central4(2);
            out[n - 3] = central4(n - 3);
            let h60 = 60.0 * dx;
            for i in 3..n - 3 {
                out[i] = (-f[i - 3] + 9.0 * f[i - 2] - 45.0 * f[i - 1] + 45.0 * f[i + 1] - 9.0 * f[i + 2]
                    + f[i + 3])
                    / h60;
            }
        }
    }
    out
}

/// Second derivative; central in the interior, one-sided fourth order at the edges.
pub fn second_derivative(values: &[C64], dx: f64, order: StencilOrder) -> Vec<C64> {
    let n = values.len();
    let f = values;
    let mut out = vec![C64::default(); n];
    let h2 = 12.0 * dx * dx;
    out[0] = (45.0 * f[0] - 154.0 * f[1] + 214.0 * f[2] - 156.0 * f[3] + 61.0 * f[4] - 10.0 * f[5]) / h2;
    out[1] = (10.0 * f[0] - 15.0 * f[1] - 4.0 * f[2] + 14.0 * f[3] - 6.0 * f[4] + f[5]) / h2;
    out[n - 1] = (45.0 * f[n - 1] - 154.0 * f[n - 2] + 214.0 * f[n - 3] - 156.0 * f[n - 4] + 61.0 * f[n - 5]
        - 10.0 * f[n - 6])
        / h2;
    out[n - 2] =
        (10.0 * f[n - 1] - 15.0 * f[n - 2] - 4.0 * f[n - 3] + 14.0 * f[n - 4] - 6.0 * f[n - 5] + f[n - 6]) / h2;
    let central4 = |i: usize| (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) / h2;
    match order {
        StencilOrder::Fourth => {
            for i in 2..n - 2 {
                out[i] = central4(i);
            }
        }
        StencilOrder::Sixth => {
            out[2] = central4(2);
            out[n - 3] = central4(n - 3);
            let h180 = 180.0 * dx * dx;
            for i in 3..n - 3 {
                out[i] = (2.0 * f[i - 3] - 27.0 * f[i - 2] + 270.0 * f[i - 1] - 490.0 * f[i] + 270.0 * f[i + 1]
                    - 27.0 * f[i + 2]
                    + 2.0 * f[i + 3])
                    / h180;
            }
        }
    }
    out
}

fn l2(values: &[C64]) -> f64 {
    let sq: Vec<f64> = values.iter().map(|v| v.norm_sqr()).collect();
    pairwise_sum(&sq).sqrt()
}

/// Relative discrepancy between fourth- and sixth-order derivatives, an
/// estimate of the fourth-order truncation error.
pub fn derivative_error_estimate(values: &[C64], dx: f64, second: bool) -> f64 {
    let (lo, hi) = if second {
        (second_derivative(values, dx, StencilOrder::Fourth), second_derivative(values, dx, StencilOrder::Sixth))
    } else {
        (first_derivative(values, dx, StencilOrder::Fourth), first_derivative(values, dx, StencilOrder::Sixth))
    };
    let scale = l2(&hi);
    if scale == 0.0 {
        return 0.0;
    }
    let diff: Vec<C64> = lo.iter().zip(&hi).map(|(a, b)| a - b).collect();
    l2(&diff) / scale
}

/// Fails with `GridTooCoarse` when the fourth-order derivative error estimate exceeds `tol`.
pub fn ensure_resolved(field: &StateField, second: bool, tol: f64) -> Result<()> {
    let estimate = derivative_error_estimate(field.values(), field.grid().spacing(), second);
    if estimate > tol {
        return Err(Error::GridTooCoarse { estimate, tolerance: tol });
    }
    Ok(())
}

/// Outcome of a Schrödinger-residual measurement at two resolutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    pub abs_residual: f64,
    pub rel_residual: f64,
    pub dx: f64,
    pub dt: f64,
    /// Relative residual on the grid with doubled spacing.
    pub coarse_rel_residual: f64,
    /// log₂ of the coarse/fine residual ratio.
    pub convergence_order_estimate: f64,
}

/// Largest derivative-error estimate tolerated before a residual is reported
/// as meaningless.
pub const RESIDUAL_RESOLUTION_LIMIT: f64 = 1e-3;

/// Residual of iħ∂ₜψ = [−(ħ²/2m)∂ₓ² + V(x,t)]ψ for a closed-form state.
///
/// `state(grid, t)` samples the state; ∂ₜ is a symmetric difference with step
/// `dt` and ∂ₓ² the fourth-order stencil. The measurement is repeated on the
/// grid with doubled spacing to estimate the convergence order.
pub fn schrodinger_residual<S, V>(
    state: S,
    potential: V,
    grid: &Grid1D,
    t: f64,
    dt: f64,
    hbar: f64,
    mass: f64,
) -> Result<ResidualReport>
where
    S: Fn(&Grid1D, f64) -> Result<StateField>,
    V: Fn(f64, f64) -> f64 + Sync,
{
    if !(1e-7..=1e-3).contains(&dt) {
        return Err(Error::InvalidTimeStep { dt });
    }
    let measure = |g: &Grid1D, check: bool| -> Result<(f64, f64)> {
        let now = state(g, t)?;
        if check {
            ensure_resolved(&now, true, RESIDUAL_RESOLUTION_LIMIT)?;
        }
        let later = state(g, t + dt)?;
        let earlier = state(g, t - dt)?;
        let d2 = second_derivative(now.values(), g.spacing(), StencilOrder::Fourth);
        let residual: Vec<C64> = (0..g.len())
            .into_par_iter()
            .map(|i| {
                let x = g.x(i);
                let dpsi_dt = (later.values[i] - earlier.values[i]) / (2.0 * dt);
                let h_psi = -hbar * hbar / (2.0 * mass) * d2[i] + potential(x, t) * now.values[i];
                C64::i() * hbar * dpsi_dt - h_psi
            })
            .collect();
        let res_field = StateField::new(*g, residual, t)?;
        let abs = res_field.norm();
        let norm = now.norm();
        if norm <= 1e-12 {
            return Err(Error::ZeroNorm);
        }
        Ok((abs, abs / norm))
    };
    let (abs_residual, rel_residual) = measure(grid, true)?;
    let (_, coarse_rel_residual) = measure(&grid.coarsened()?, false)?;
    Ok(ResidualReport {
        abs_residual,
        rel_residual,
        dx: grid.spacing(),
        dt,
        coarse_rel_residual,
        convergence_order_estimate: (coarse_rel_residual / rel_residual).log2(),
    })
}

/// ⟨f|Ô f⟩ / ⟨f|f⟩.
pub fn rayleigh_quotient<O>(operator: O, field: &StateField) -> Result<C64>
where
    O: Fn(&StateField) -> Result<StateField>,
{
    let norm_sq = inner_product(field, field)?.re;
    if norm_sq.sqrt() <= 1e-12 {
        return Err(Error::ZeroNorm);
    }
    let image = operator(field)?;
    Ok(inner_product(field, &image)? / norm_sq)
}

/// Gram matrix Gᵢⱼ = ⟨fᵢ|fⱼ⟩ and its ∞-norm distance from the identity.
#[derive(Debug, Clone)]
pub struct GramReport {
    pub matrix: Array2<C64>,
    pub deviation: f64,
}

pub fn gram_matrix(fields: &[StateField]) -> Result<GramReport> {
    let n = fields.len();
    for f in fields.iter().skip(1) {
        fields[0].check_compatible(f)?;
    }
    let entries = (0..n * n)
        .into_par_iter()
        .map(|k| inner_product(&fields[k / n], &fields[k % n]))
        .collect::<Result<Vec<_>>>()?;
    let matrix = Array2::from_shape_vec((n, n), entries).expect("shape matches entry count");
    let deviation = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let target = if i == j { C64::new(1.0, 0.0) } else { C64::default() };
                    (matrix[[i, j]] - target).norm()
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    Ok(GramReport { matrix, deviation })
}
