//! Double-exponential (tanh-sinh) quadrature with level doubling.
//!
//! Robust against integrable endpoint singularities, which is what the
//! exterior-tail integrals and the four-point integrals produce once the
//! integration range is split at every singular point.

use crate::error::{Error, Result};

const MAX_LEVEL: usize = 12;
const T_MAX: f64 = 6.0;

/// Result of a quadrature call.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol` (or to rounding
/// level, if that is larger).
///
/// The integrand receives the abscissa together with its distances to the
/// left and right endpoints, computed without cancellation.
pub fn tanh_sinh<F>(f: F, a: f64, b: f64, tol: f64) -> Result<Quadrature>
where
    F: Fn(f64, f64, f64) -> f64,
{
    if a == b {
        return Ok(Quadrature { value: 0.0, error: 0.0, evaluations: 0 });
    }
    if b < a {
        let q = integrate(&|x, da, db| f(x, db, da), b, a, tol)?;
        return Ok(Quadrature { value: -q.value, ..q });
    }
    integrate(&f, a, b, tol)
}

fn integrate(f: &dyn Fn(f64, f64, f64) -> f64, a: f64, b: f64, tol: f64) -> Result<Quadrature> {
    let half = 0.5 * (b - a);
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut evaluations = 0usize;

    // Node at parameter t: x = mid + half * tanh(pi/2 sinh t).
    let eval = |t: f64, evaluations: &mut usize| -> f64 {
        let u = half_pi * t.sinh();
        let cu = u.cosh();
        let w = half * half_pi * t.cosh() / (cu * cu);
        if w == 0.0 || !w.is_finite() {
            return 0.0;
        }
        // 1 - tanh(u) and 1 + tanh(u) without cancellation.
        let e = (-2.0 * u.abs()).exp();
        let small = 2.0 * e / (1.0 + e);
        let (da, db) = if u >= 0.0 {
            (half * (2.0 - small), half * small)
        } else {
            (half * small, half * (2.0 - small))
        };
        if da <= 0.0 || db <= 0.0 {
            return 0.0;
        }
        let x = if u >= 0.0 { b - db } else { a + da };
        *evaluations += 1;
        w * f(x, da, db)
    };

    let mut step = 1.0f64;
    let mut sum = eval(0.0, &mut evaluations);
    let mut k = 1usize;
    while k as f64 * step <= T_MAX {
        let t = k as f64 * step;
        sum += eval(t, &mut evaluations) + eval(-t, &mut evaluations);
        k += 1;
    }
    let mut estimate = sum * step;
    let mut last_diff = f64::INFINITY;
    for _level in 1..=MAX_LEVEL {
        step *= 0.5;
        let mut fresh = 0.0;
        let mut k = 1usize;
        while k as f64 * step <= T_MAX {
            let t = k as f64 * step;
            fresh += eval(t, &mut evaluations) + eval(-t, &mut evaluations);
            k += 2;
        }
        sum += fresh;
        let next = sum * step;
        let diff = (next - estimate).abs();
        estimate = next;
        if !estimate.is_finite() {
            return Err(Error::Quadrature("non-finite integrand values".into()));
        }
        // below ~1e-14 relative the correction is rounding noise
        if diff <= tol.max(1e-14 * estimate.abs()) {
            return Ok(Quadrature {
                value: estimate,
                error: diff,
                evaluations,
            });
        }
        last_diff = diff;
    }
    Err(Error::Quadrature(format!(
        "tanh-sinh did not reach tolerance {tol:e} on [{a}, {b}] (last correction {last_diff:e}); \
         split the range at the singular points or relax the tolerance"
    )))
}

/// Integrates over `[a, b]` after splitting at every breakpoint strictly inside.
pub fn tanh_sinh_split<F>(f: F, a: f64, b: f64, breaks: &[f64], tol: f64) -> Result<Quadrature>
where
    F: Fn(f64, f64, f64) -> f64,
{
    let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&x| x > lo && x < hi).collect();
    pts.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
    pts.dedup();
    let mut knots = Vec::with_capacity(pts.len() + 2);
    knots.push(lo);
    knots.extend(pts);
    knots.push(hi);
    let pieces = (knots.len() - 1) as f64;
    let mut total = Quadrature { value: 0.0, error: 0.0, evaluations: 0 };
    for win in knots.windows(2) {
        let q = tanh_sinh(&f, win[0], win[1], tol / pieces)?;
        total.value += q.value;
        total.error += q.error;
        total.evaluations += q.evaluations;
    }
    total.value *= sign;
    Ok(total)
}
