//! Discrete Gagliardo energy, its pairing, and the functional
//! `E(u) = (1/p) [u]_p^p - h^N sum F(u_i)`.

use std::borrow::Cow;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::kernel::KernelWeights;
use crate::nonlinearity::Nonlinearity;
use crate::pairs::dot;
use crate::scalar::Real;

/// `u` as a function on the kernel window (zero padded when needed).
pub(crate) fn on_kernel_window<'a, T: Real>(
    u: &'a GridFunction<T>,
    k: &KernelWeights<T>,
) -> Result<Cow<'a, GridFunction<T>>> {
    if u.window() == k.window() {
        Ok(Cow::Borrowed(u))
    } else if k.window().contains_window(u.window()) {
        Ok(Cow::Owned(u.embed(k.window())?))
    } else {
        Err(Error::WindowMismatch(
            "grid function support is not contained in the kernel window".into(),
        ))
    }
}

/// `[u]_p^p = sum_{i != j} w_ij |u_i - u_j|^p + 2 sum_i kappa_i |u_i|^p`
pub fn gagliardo_p<T: Real>(u: &GridFunction<T>, k: &KernelWeights<T>) -> Result<T> {
    let u = on_kernel_window(u, k)?;
    Ok(k.view().seminorm(u.values()))
}

/// `<D[u]_p^p, xi>`, the derivative of `[u]_p^p` in direction `xi`.
pub fn dpairing<T: Real>(u: &GridFunction<T>, xi: &GridFunction<T>, k: &KernelWeights<T>) -> Result<T> {
    let u = on_kernel_window(u, k)?;
    let xi = on_kernel_window(xi, k)?;
    let g = k.view().gradient(u.values());
    Ok(dot(&g, xi.values()))
}

pub fn energy<T: Real>(u: &GridFunction<T>, nl: &Nonlinearity<T>, k: &KernelWeights<T>) -> Result<T> {
    let g = gagliardo_p(u, k)?;
    let potential = u.values().iter().fold(T::zero(), |acc, &z| acc + nl.primitive(z));
    Ok(g / k.p() - u.window().cell_volume() * potential)
}

/// `(1/p) <D[u]_p^p, xi> - h^N sum f(u_i) xi_i` for every direction.
pub fn de_residual<T: Real>(
    u: &GridFunction<T>,
    nl: &Nonlinearity<T>,
    k: &KernelWeights<T>,
    directions: &[GridFunction<T>],
) -> Result<Vec<T>> {
    let u = on_kernel_window(u, k)?;
    let grad = k.view().gradient(u.values());
    let f: Vec<T> = u.values().iter().map(|&z| nl.f(z)).collect();
    let vol = k.window().cell_volume();
    directions
        .iter()
        .map(|xi| {
            let xi = on_kernel_window(xi, k)?;
            Ok(dot(&grad, xi.values()) / k.p() - vol * dot(&f, xi.values()))
        })
        .collect()
}
