//! Special functions used by the construction.
//!
//! - physicists' Hermite polynomials Hₙ(x), three-term recurrence
//! - the error function, positive-term series near the origin and a
//!   continued fraction for the complement in the tails
//! - Kummer's confluent hypergeometric function ₁F₁(a; b; x)

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Largest Hermite degree accepted by [`hermite`].
pub const HERMITE_MAX_DEGREE: usize = 512;

/// Largest |x| for which a non-terminating ₁F₁ series is evaluated.
pub const KUMMER_MAX_ARG: f64 = 50.0;

const KUMMER_MAX_TERMS: usize = 10_000;

/// Hₙ(x) by the recurrence H₀ = 1, H₁ = 2x, H_{k+1} = 2x H_k − 2k H_{k−1}.
pub fn hermite(n: usize, x: f64) -> Result<f64> {
    if n > HERMITE_MAX_DEGREE {
        return Err(Error::DegreeTooLarge { n, max: HERMITE_MAX_DEGREE });
    }
    let mut prev = 1.0;
    if n == 0 {
        return Ok(prev);
    }
    let mut cur = 2.0 * x;
    for k in 1..n {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Error function with absolute error below 1e-14 on the whole real line.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    let magnitude = if ax < 3.0 { erf_series(ax) } else { 1.0 - erfc_continued_fraction(ax) };
    magnitude.copysign(x)
}

/// Complementary error function erfc(x) = 1 − erf(x).
pub fn erfc(x: f64) -> f64 {
    if x >= 3.0 {
        erfc_continued_fraction(x)
    } else if x <= -3.0 {
        2.0 - erfc_continued_fraction(-x)
    } else {
        1.0 - erf(x)
    }
}

// erf(x) = (2/√π) e^{−x²} Σ 2ⁿ x^{2n+1} / (1·3·…·(2n+1)); every term is positive.
fn erf_series(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    2.0 / PI.sqrt() * (-x2).exp() * sum
}

// Modified Lentz evaluation of
// erfc(x) = e^{−x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + …)))).
fn erfc_continued_fraction(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64 / 2.0;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (PI.sqrt() * f)
}

fn is_nonpositive_integer(v: f64) -> bool {
    v <= 0.0 && v.fract() == 0.0
}

/// Result of a raw ₁F₁ series: value and Σ|terms| (for the condition estimate).
struct SeriesSum {
    value: f64,
    abs_sum: f64,
}

fn kummer_series(a: f64, b: f64, x: f64) -> Option<SeriesSum> {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut abs_sum = 1.0;
    for n in 0..KUMMER_MAX_TERMS {
        let nf = n as f64;
        term *= (a + nf) * x / ((b + nf) * (nf + 1.0));
        sum += term;
        abs_sum += term.abs();
        if term == 0.0 {
            return Some(SeriesSum { value: sum, abs_sum });
        }
        // Past the turning point the remaining tail is bounded by a geometric series.
        let ratio = ((a + nf + 1.0) * x / ((b + nf + 1.0) * (nf + 2.0))).abs();
        if ratio < 1.0 && term.abs() / (1.0 - ratio) <= 1e-17 * sum.abs() {
            return Some(SeriesSum { value: sum, abs_sum });
        }
    }
    None
}

/// Kummer's function ₁F₁(a; b; x) = Σ (a)ₙ xⁿ / ((b)ₙ n!).
///
/// Taylor series with term-ratio recurrence. The Kummer transform
/// ₁F₁(a; b; x) = eˣ ₁F₁(b − a; b; −x) is used whenever its series has the
/// smaller cancellation ratio Σ|terms|/|sum|. Terminating series (a a
/// nonpositive integer) are accepted for any x; otherwise |x| ≤ 50.
pub fn kummer(a: f64, b: f64, x: f64) -> Result<f64> {
    if is_nonpositive_integer(b) {
        return Err(Error::PoleInB { b });
    }
    if !(a.is_finite() && b.is_finite() && x.is_finite()) {
        return Err(Error::NonConvergent { a, b, x });
    }
    if x == 0.0 || a == 0.0 {
        return Ok(1.0);
    }
    let direct_terminates = is_nonpositive_integer(a);
    let transformed_terminates = is_nonpositive_integer(b - a);
    if x.abs() > KUMMER_MAX_ARG && !direct_terminates && !transformed_terminates {
        return Err(Error::NonConvergent { a, b, x });
    }

    let direct = kummer_series(a, b, x);
    let transformed = kummer_series(b - a, b, -x);
    let condition = |s: &SeriesSum| s.abs_sum / s.value.abs().max(f64::MIN_POSITIVE);
    let use_transform = match (&direct, &transformed) {
        (Some(d), Some(t)) => condition(t) < condition(d),
        (None, Some(_)) => true,
        _ => false,
    };
    if use_transform {
        let t = transformed.expect("checked above");
        Ok(x.exp() * t.value)
    } else {
        direct.map(|d| d.value).ok_or(Error::NonConvergent { a, b, x })
    }
}
