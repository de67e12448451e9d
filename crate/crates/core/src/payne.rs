//! Geometry of computed nodal solutions: supports of `u^+` and `u^-`, the
//! nodal set, their distance to the boundary, and the reflection devices
//! used to push supports against the lids.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigensolver::{second_eigen_mu2, EigenOptions};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::kernel::{build_kernel, KernelWeights};
use crate::lattice::{LatticeDomain, ReflectionParam, Variant, Window};
use crate::nehari::{lens_minimize, NehariOptions};
use crate::nonlinearity::Nonlinearity;
use crate::polarization::{equality_case, polarize, EqualityCase};
use crate::scalar::Real;

/// Node sets in half-unit coordinates.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SupportSets {
    pub supp_plus: Vec<[i64; 2]>,
    pub supp_minus: Vec<[i64; 2]>,
    /// Mask nodes with `|u| <= tau` or a face neighbour of opposite sign.
    pub nodal_cells: Vec<[i64; 2]>,
    pub tau: f64,
}

/// Thresholded supports `{ +-u > tau }` with `tau = tau_rel * max|u|`, and
/// the node-centred cells met by the nodal set.
pub fn support_sets<T: Real>(u: &GridFunction<T>, domain: &LatticeDomain<T>, tau_rel: T) -> Result<SupportSets> {
    if u.is_zero() {
        return Err(Error::Precondition("u vanishes identically".into()));
    }
    let u = u.embed(domain.window()).map_err(|_| {
        Error::WindowMismatch("u must live on the domain window".into())
    })?;
    let w = domain.window();
    let tau = tau_rel * u.max_abs();
    let vals = u.values();
    let value_at = |m: [i64; 2]| w.index_of(m).filter(|_| domain.contains(m)).map(|j| vals[j]);
    let mut out = SupportSets {
        tau: tau.as_f64(),
        ..Default::default()
    };
    for i in domain.active_indices() {
        let m = w.half_coords(i);
        let z = vals[i];
        if z > tau {
            out.supp_plus.push(m);
        } else if z < -tau {
            out.supp_minus.push(m);
        }
        let flips = w
            .neighbours(m)
            .into_iter()
            .filter_map(value_at)
            .any(|y| (z > T::zero() && y < T::zero()) || (z < T::zero() && y > T::zero()));
        if z.abs() <= tau || flips {
            out.nodal_cells.push(m);
        }
    }
    Ok(out)
}

/// Minimal distance from the nodes of `support` to the boundary of the
/// mask, measured to the outer faces of the boundary cells (a node next to
/// an exterior node is at distance `h/2`).
pub fn support_distance<T: Real>(support: &[[i64; 2]], domain: &LatticeDomain<T>) -> Result<T> {
    if support.is_empty() {
        return Err(Error::Precondition("empty support".into()));
    }
    let boundary = domain.discrete_boundary();
    Ok(set_distance(support, &boundary, domain.window()))
}

fn set_distance<T: Real>(a: &[[i64; 2]], b: &[[i64; 2]], w: &Window<T>) -> T {
    let half = w.h() / T::lit(2.0);
    let mut best = T::infinity();
    for &x in a {
        for &y in b {
            best = best.min(w.distance(x, y));
        }
    }
    (best - half).max(T::zero())
}

/// Largest `t`, a multiple of `h`, with `support + t e1` inside the mask.
pub fn slide_distance<T: Real>(support: &[[i64; 2]], domain: &LatticeDomain<T>) -> Result<T> {
    if support.is_empty() {
        return Err(Error::Precondition("empty support".into()));
    }
    if let Some(m) = support.iter().find(|&&m| !domain.contains(m)) {
        return Err(Error::Precondition(format!("support node {m:?} lies outside the domain")));
    }
    let w = domain.window();
    let max_shift = w.shape()[0] as i64;
    let mut k = 0;
    while k < max_shift && support.iter().all(|&m| domain.contains([m[0] + 2 * (k + 1), m[1]])) {
        k += 1;
    }
    Ok(T::lit(k as f64) * w.h())
}

/// Alternating images `sigma_a(x)`, `sigma_0(sigma_a(x))`, ... of a node,
/// stopping before the first image outside `window` or after `max_iter` images.
pub fn reflection_chain<T: Real>(
    window: &Window<T>,
    x: [i64; 2],
    a: ReflectionParam,
    max_iter: usize,
) -> Result<Vec<[i64; 2]>> {
    if a.half_units() <= 0 {
        return Err(Error::Parameter("the reflection parameter must be positive".into()));
    }
    let zero = ReflectionParam::from_half_units(0);
    let mut chain = Vec::new();
    let mut cur = x;
    for step in 0..max_iter {
        let r = if step % 2 == 0 { a } else { zero };
        cur = [r.reflect_half(cur[0]), cur[1]];
        if window.index_of(cur).is_none() {
            break;
        }
        chain.push(cur);
    }
    Ok(chain)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionKind {
    Eigen,
    Lens,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PayneOptions {
    pub mode: SolutionKind,
    /// Exponent of `f(z) = |z|^{q-2} z` in lens mode (default `p + 1`).
    pub q: Option<f64>,
    pub tau_rel: f64,
    /// Touching threshold in units of `h`.
    pub touch_cells: f64,
    /// Number of reflection parameters `a = h/2, h, ...` in the sweep.
    pub sweep: usize,
    pub eigen: EigenOptions,
    pub nehari: NehariOptions,
}

impl Default for PayneOptions {
    fn default() -> Self {
        Self {
            mode: SolutionKind::Eigen,
            q: None,
            tau_rel: 1e-8,
            touch_cells: 2.0,
            sweep: 8,
            eigen: EigenOptions::default(),
            nehari: NehariOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LidTouch {
    pub left: bool,
    pub right: bool,
    pub cylinder: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepEntry {
    pub a: f64,
    pub deficit_plus: f64,
    pub deficit_minus: f64,
    pub seminorm_deficit: f64,
    pub eps_num: f64,
    pub nonnegative: bool,
    pub case: EqualityCase,
    /// `P_a u` is still supported in the domain.
    pub inside_domain: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PayneReport<T> {
    #[serde(skip)]
    pub u: GridFunction<T>,
    pub mode: Option<SolutionKind>,
    pub h: f64,
    /// `mu2` or the least nodal energy `m`; absent for supplied functions.
    pub level: Option<f64>,
    pub tau: f64,
    pub touch_threshold: f64,
    pub supp_plus_nodes: usize,
    pub supp_minus_nodes: usize,
    pub nodal_cells: usize,
    pub support_distance_plus: f64,
    pub support_distance_minus: f64,
    pub nodal_distance: Option<f64>,
    pub slide_distance_plus: f64,
    pub slide_distance_minus: f64,
    pub lids_plus: LidTouch,
    pub lids_minus: LidTouch,
    pub touches_plus: bool,
    pub touches_minus: bool,
    pub nodal_touches: bool,
    /// `supp u+` meets `L` and `supp u-` meets `R`.
    pub lid_property_1: bool,
    /// `supp u+` meets `R` and `supp u-` meets `L`.
    pub lid_property_2: bool,
    /// `max |u + u o sigma_0| / max |u|`
    pub antisymmetry_gap: f64,
    pub sweep: Vec<SweepEntry>,
}

fn lid_touch<T: Real>(support: &[[i64; 2]], lids: &crate::lattice::Lids, w: &Window<T>, threshold: T) -> LidTouch {
    let near = |part: &[[i64; 2]]| !part.is_empty() && set_distance(support, part, w) <= threshold;
    LidTouch {
        left: near(&lids.left),
        right: near(&lids.right),
        cylinder: near(&lids.cylinder),
    }
}

/// Support, nodal-set, lid and polarization diagnostics for a given `u`.
pub fn payne_diagnostics<T: Real>(
    u: &GridFunction<T>,
    domain: &LatticeDomain<T>,
    k: &KernelWeights<T>,
    opts: &PayneOptions,
) -> Result<PayneReport<T>> {
    if !domain.check_steiner() {
        return Err(Error::Precondition("the domain must be Steiner symmetric".into()));
    }
    let w = domain.window();
    let h = w.h();
    let sets = support_sets(u, domain, T::lit(opts.tau_rel))?;
    if sets.supp_plus.is_empty() || sets.supp_minus.is_empty() {
        return Err(Error::Precondition("u must change sign above the threshold".into()));
    }
    let threshold = T::lit(opts.touch_cells) * h;
    let dp = support_distance(&sets.supp_plus, domain)?;
    let dm = support_distance(&sets.supp_minus, domain)?;
    let dz = if sets.nodal_cells.is_empty() {
        None
    } else {
        Some(support_distance(&sets.nodal_cells, domain)?)
    };
    let lids = domain.boundary_lids()?;
    let lp = lid_touch(&sets.supp_plus, &lids, w, threshold);
    let lm = lid_touch(&sets.supp_minus, &lids, w, threshold);
    let u = u.embed(w)?;
    let mirrored = u.reflected(ReflectionParam::from_half_units(0))?;
    let antisym = (&u + &mirrored).max_abs() / u.max_abs();

    let sweep = (1..=opts.sweep as i64)
        .into_par_iter()
        .map(|half| sweep_entry(&u, domain, k, ReflectionParam::from_half_units(half)))
        .collect::<Result<Vec<_>>>()?;

    Ok(PayneReport {
        mode: None,
        h: h.as_f64(),
        level: None,
        tau: sets.tau,
        touch_threshold: threshold.as_f64(),
        supp_plus_nodes: sets.supp_plus.len(),
        supp_minus_nodes: sets.supp_minus.len(),
        nodal_cells: sets.nodal_cells.len(),
        support_distance_plus: dp.as_f64(),
        support_distance_minus: dm.as_f64(),
        nodal_distance: dz.map(|d| d.as_f64()),
        slide_distance_plus: slide_distance(&sets.supp_plus, domain)?.as_f64(),
        slide_distance_minus: slide_distance(&sets.supp_minus, domain)?.as_f64(),
        lids_plus: lp,
        lids_minus: lm,
        touches_plus: dp <= threshold,
        touches_minus: dm <= threshold,
        nodal_touches: dz.is_some_and(|d| d <= threshold),
        lid_property_1: lp.left && lm.right,
        lid_property_2: lp.right && lm.left,
        antisymmetry_gap: antisym.as_f64(),
        sweep,
        u,
    })
}

fn sweep_entry<T: Real>(
    u: &GridFunction<T>,
    domain: &LatticeDomain<T>,
    k: &KernelWeights<T>,
    a: ReflectionParam,
) -> Result<SweepEntry> {
    let big = domain.window().enlarged_for(a);
    let kb = build_kernel(&big, k.s(), k.p())?;
    let ub = u.embed(&big)?;
    let (case, d) = equality_case(&ub, a, &kb)?;
    let pu = polarize(&ub, a, Variant::P)?;
    let inside = pu.supported_in(&domain.embed(&big)?);
    Ok(SweepEntry {
        a: a.value(domain.window().h()).as_f64(),
        deficit_plus: d.deficit_plus,
        deficit_minus: d.deficit_minus,
        seminorm_deficit: d.seminorm_deficit,
        eps_num: d.eps_num,
        nonnegative: d.nonnegative(),
        case,
        inside_domain: inside,
    })
}

/// Computes a second eigenfunction or a least energy nodal solution and
/// reports its [`payne_diagnostics`].
pub fn run_payne_experiment<T: Real>(
    domain: &LatticeDomain<T>,
    k: &KernelWeights<T>,
    opts: &PayneOptions,
) -> Result<PayneReport<T>> {
    if !domain.check_steiner() {
        return Err(Error::Precondition("the domain must be Steiner symmetric".into()));
    }
    let (u, level) = match opts.mode {
        SolutionKind::Eigen => {
            let r = second_eigen_mu2(domain, k, &opts.eigen)?;
            (r.u2, r.mu2)
        }
        SolutionKind::Lens => {
            let p = k.p();
            let q = opts.q.map(T::lit).unwrap_or(p + T::one());
            let nl = Nonlinearity::power(p, q)?;
            let r = lens_minimize(domain, k, &nl, &opts.nehari)?;
            (r.u, r.m)
        }
    };
    let mut report = payne_diagnostics(&u, domain, k, opts)?;
    report.mode = Some(opts.mode);
    report.level = Some(level);
    Ok(report)
}
