//! Shared pieces of the gradient solvers: search directions, step sizes
//! and the stagnation rule.

use nalgebra::{DMatrix, DVector};

use crate::pairs::{dot, PairView};
use crate::scalar::Real;

/// Consecutive iterations whose decrease is at rounding level.
pub(crate) const STALL_LIMIT: usize = 10;

pub(crate) fn negligible<T: Real>(before: T, after: T) -> bool {
    before - after <= T::lit(8.0) * T::epsilon() * before.abs()
}

/// Stationarity accepted once the value stagnates: `sqrt(tol)`, or the
/// size `eps^{p-1}` of a rounding error pushed through `phi` when larger.
pub(crate) fn stall_tolerance<T: Real>(tol: T, p: T) -> T {
    tol.sqrt().max(T::lit(100.0) * T::epsilon().powf(p - T::one()))
}

/// `p < 2` gets a Newton-type metric; the gradient is not Lipschitz there.
pub(crate) fn preconditioned<T: Real>(p: T) -> bool {
    p < T::lit(2.0)
}

/// Search direction: `-g`, or `-H^{-1} g` with `H` the regularized
/// seminorm Hessian at `v` when `p < 2`.
pub(crate) fn direction<T: Real>(view: PairView<'_, T>, v: &[T], g: &[T]) -> Vec<T> {
    if !preconditioned(view.exp.p()) {
        return g.iter().map(|&x| -x).collect();
    }
    let m = v.len();
    let scale = v.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()));
    let hess = view.hessian(v, T::lit(1e-8) * scale);
    let h = DMatrix::from_iterator(m, m, hess.iter().map(|x| x.as_f64()));
    match h.cholesky() {
        Some(ch) => {
            let rhs = DVector::from_iterator(m, g.iter().map(|x| -x.as_f64()));
            ch.solve(&rhs).iter().map(|&x| T::lit(x)).collect()
        }
        None => g.iter().map(|&x| -x).collect(),
    }
}

/// Step after an accepted move: BB `s.s / s.y` for plain gradients
/// (doubling the old step when `s.y <= 0`), else grow towards 1.
pub(crate) fn next_step<T: Real>(p: T, x_new: &[T], x_old: &[T], g_new: &[T], g_old: &[T], step: T) -> T {
    if preconditioned(p) {
        return (step * T::lit(2.0)).min(T::one());
    }
    let s: Vec<T> = x_new.iter().zip(x_old).map(|(&a, &b)| a - b).collect();
    let y: Vec<T> = g_new.iter().zip(g_old).map(|(&a, &b)| a - b).collect();
    let sy = dot(&s, &y);
    if sy > T::zero() {
        dot(&s, &s) / sy
    } else {
        step * T::lit(2.0)
    }
}

pub(crate) fn initial_step<T: Real>(p: T, g: &[T], scale: T) -> T {
    if preconditioned(p) {
        T::one()
    } else {
        scale / (norm(g) + T::epsilon())
    }
}

pub(crate) fn norm<T: Real>(v: &[T]) -> T {
    dot(v, v).sqrt()
}

pub(crate) fn has_both_signs<T: Real>(v: &[T]) -> bool {
    v.iter().any(|&x| x > T::zero()) && v.iter().any(|&x| x < T::zero())
}
