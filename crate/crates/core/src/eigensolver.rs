//! First eigenpair and the second eigenvalue via the split quotients
//!
//! ```text
//! Q+(v) = (1/p) <D[v]_p^p, v^+> / (h^N sum |v^+|^p)
//! Q-(v) = (1/p) <D[v]_p^p, v^-> / (h^N sum |v^-|^p)
//! mu2   = min over sign-changing v of max(Q+, Q-)
//! ```
//!
//! Along `v^+ + t v^-` the quotient `Q+` is nondecreasing and `Q-` is
//! nonincreasing in `t`, so for fixed `v` the maximum is smallest where the
//! two agree. The solver keeps every iterate balanced this way and runs
//! Barzilai-Borwein gradient descent on the balanced value.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descent::{
    direction, has_both_signs, initial_step, negligible, next_step, norm, stall_tolerance, STALL_LIMIT,
};
use crate::energy::on_kernel_window;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::kernel::{ActiveKernel, KernelWeights};
use crate::lattice::{LatticeDomain, Window};
use crate::pairs::{dot, lp_sum, Exponent, MixedPairs};
use crate::scalar::Real;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenOptions {
    /// Stationarity tolerance: `|grad| |v| <= tol * value`.
    pub tol: f64,
    pub max_iter: usize,
    pub multistarts: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 20_000,
            multistarts: 3,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FirstEigen<T> {
    pub lambda1: T,
    #[serde(skip)]
    pub u1: GridFunction<T>,
    /// `max_i |(1/p) <D[u]_p^p, e_i> - lambda h^N phi(u_i)|`, relative to `max_i lambda h^N |phi(u_i)|`.
    pub residual: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
}

/// Outcome of a single start of the second-eigenvalue search.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StartOutcome {
    pub id: usize,
    pub label: String,
    pub mu2: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub stationarity: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Residuals {
    /// `|lambda h^N sum |v^+|^p - (1/p) <D[v]_p^p, v^+>|`, relative
    pub plus: f64,
    pub minus: f64,
    /// Eigen equation residual in coordinate directions, relative (see [`FirstEigen::residual`]).
    pub equation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenReport<T> {
    pub lambda1: f64,
    pub mu2: f64,
    #[serde(skip)]
    pub u2: GridFunction<T>,
    pub quotient_plus: f64,
    pub quotient_minus: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    pub multistart_id: usize,
    pub outcomes: Vec<StartOutcome>,
    pub history: Vec<f64>,
}

struct Problem<'a, T> {
    k: ActiveKernel<T>,
    domain: &'a LatticeDomain<T>,
    vol: T,
    exp: Exponent<T>,
}

impl<'a, T: Real> Problem<'a, T> {
    fn new(domain: &'a LatticeDomain<T>, k: &'a KernelWeights<T>) -> Result<Self> {
        let active = k.restrict(domain)?;
        Ok(Self {
            vol: active.cell_volume(),
            exp: active.exponent(),
            k: active,
            domain,
        })
    }

    fn lp(&self, v: &[T]) -> T {
        self.vol * lp_sum(&self.exp, v)
    }

    fn normalize(&self, v: &mut [T]) {
        let n = self.lp(v).powf(T::one() / self.exp.p());
        if n > T::zero() {
            for x in v.iter_mut() {
                *x = *x / n;
            }
        }
    }

    fn to_grid(&self, v: &[T]) -> GridFunction<T> {
        GridFunction::new(self.domain.window().clone(), self.k.scatter(v)).expect("finite values")
    }

    fn equation_residual(&self, v: &[T], lambda: T) -> f64 {
        let g = self.k.view().gradient(v);
        let p = self.exp.p();
        let mut worst = T::zero();
        let mut scale = T::zero();
        for (gi, &vi) in g.iter().zip(v) {
            let rhs = lambda * self.vol * self.exp.phi(vi);
            worst = worst.max((*gi / p - rhs).abs());
            scale = scale.max(rhs.abs());
        }
        (worst / scale).as_f64()
    }
}

/// Minimizes `[v]_p^p / (h^N sum |v|^p)` over the domain.
pub fn first_eigenpair<T: Real>(
    domain: &LatticeDomain<T>,
    k: &KernelWeights<T>,
    opts: &EigenOptions,
) -> Result<FirstEigen<T>> {
    let prob = Problem::new(domain, k)?;
    let m = prob.k.len();
    let p = prob.exp.p();
    let view = prob.k.view();
    let eval = |v: &[T]| -> (T, Vec<T>) {
        let g = view.seminorm(v);
        let d = prob.lp(v);
        let r = g / d;
        let mut grad = view.gradient(v);
        for (gi, &vi) in grad.iter_mut().zip(v) {
            *gi = (*gi - r * prob.vol * p * prob.exp.phi(vi)) / d;
        }
        (r, grad)
    };

    let mut v = vec![T::one(); m];
    prob.normalize(&mut v);
    let (mut f, mut g) = eval(&v);
    let mut history = vec![f.as_f64()];
    let mut step = initial_step(p, &g, T::one());
    let tol = T::lit(opts.tol);
    let mut iterations = 0;
    let mut converged = false;
    let mut stalled = 0;
    while iterations < opts.max_iter {
        if norm(&g) * norm(&v) <= tol * f {
            converged = true;
            break;
        }
        iterations += 1;
        let dir = direction(prob.k.view(), &v, &g);
        let slope = -dot(&g, &dir);
        let mut accepted = None;
        for _ in 0..60 {
            let mut trial: Vec<T> = v.iter().zip(&dir).map(|(&x, &d)| x + step * d).collect();
            prob.normalize(&mut trial);
            let (ft, gt) = eval(&trial);
            if ft <= f - T::lit(1e-4) * step * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            step = step * T::lit(0.5);
        }
        let Some((nv, nf, ng)) = accepted else {
            // no decrease possible at working precision
            converged = norm(&g) * norm(&v) <= stall_tolerance(tol, prob.exp.p()) * f;
            break;
        };
        step = next_step(p, &nv, &v, &ng, &g, step);
        stalled = if negligible(f, nf) { stalled + 1 } else { 0 };
        v = nv;
        f = nf;
        g = ng;
        history.push(f.as_f64());
        if stalled >= STALL_LIMIT {
            converged = norm(&g) * norm(&v) <= stall_tolerance(tol, prob.exp.p()) * f;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            message: "first eigenpair: gradient did not reach tolerance".into(),
            iterations,
            history,
        });
    }
    for x in v.iter_mut() {
        *x = x.abs();
    }
    let residual = prob.equation_residual(&v, f);
    Ok(FirstEigen {
        lambda1: f,
        u1: prob.to_grid(&v),
        residual,
        iterations,
        history,
    })
}

/// Scales `v^-` so that `Q+ = Q-`; returns the scaling and the common value.
fn balance<T: Real>(prob: &Problem<'_, T>, v: &mut [T]) -> Result<(T, T)> {
    let mp = MixedPairs::new(prob.k.view(), v);
    let d_plus = prob.lp(&v.iter().map(|&x| x.max(T::zero())).collect::<Vec<_>>());
    let d_minus = prob.lp(&v.iter().map(|&x| x.min(T::zero())).collect::<Vec<_>>());
    let p = prob.exp.p();
    // Q+ and Q- of v^+ + t v^-
    let gap = |s: T| {
        let t = s.exp();
        let (np, nm) = mp.numerators(T::one(), t);
        let (a, b) = (np / d_plus, nm / (t.powf(p) * d_minus));
        (a.ln() - b.ln(), a.max(b))
    };
    let (g0, q0) = gap(T::zero());
    let (t, q) = if g0 == T::zero() {
        (T::one(), q0)
    } else {
        // bracket the root in s = ln t; the gap increases with s
        let dir = if g0 > T::zero() { -T::one() } else { T::one() };
        let mut width = T::lit(0.05);
        let (mut lo, mut glo) = (T::zero(), g0);
        let mut hi = dir * width;
        let (mut ghi, _) = gap(hi);
        let mut expansions = 0;
        while ghi.signum() == g0.signum() && ghi != T::zero() {
            lo = hi;
            glo = ghi;
            width = width * T::lit(2.0);
            hi = hi + dir * width;
            ghi = gap(hi).0;
            expansions += 1;
            if expansions > 60 || !ghi.is_finite() {
                return Err(Error::NoConvergence {
                    message: "could not bracket the balancing scale".into(),
                    iterations: expansions,
                    history: vec![],
                });
            }
        }
        if lo > hi {
            std::mem::swap(&mut lo, &mut hi);
            std::mem::swap(&mut glo, &mut ghi);
        }
        // Illinois regula falsi
        let mut side = 0i8;
        let mut s = lo;
        let mut q = q0;
        for _ in 0..200 {
            s = (lo * ghi - hi * glo) / (ghi - glo);
            if !(s > lo && s < hi) {
                s = T::lit(0.5) * (lo + hi);
            }
            let (gs, qs) = gap(s);
            q = qs;
            if gs == T::zero() || (hi - lo) <= T::epsilon() * T::lit(4.0) * (T::one() + s.abs()) || gs.abs() <= T::epsilon() * T::lit(4.0) {
                break;
            }
            if gs.signum() == glo.signum() {
                lo = s;
                glo = gs;
                if side == -1 {
                    ghi = ghi * T::lit(0.5);
                }
                side = -1;
            } else {
                hi = s;
                ghi = gs;
                if side == 1 {
                    glo = glo * T::lit(0.5);
                }
                side = 1;
            }
        }
        (s.exp(), q)
    };
    for x in v.iter_mut() {
        if *x < T::zero() {
            *x = *x * t;
        }
    }
    Ok((t, q))
}

struct Balanced<T> {
    v: Vec<T>,
    value: T,
    qp: T,
    qm: T,
    grad: Vec<T>,
}

/// Balances and normalizes `v`, then evaluates the reduced gradient.
fn balanced_state<T: Real>(prob: &Problem<'_, T>, mut v: Vec<T>) -> Result<Balanced<T>> {
    balance(prob, &mut v)?;
    prob.normalize(&mut v);
    let parts = prob.k.view().split_parts(&v);
    let p = prob.exp.p();
    let vp: Vec<T> = v.iter().map(|&x| x.max(T::zero())).collect();
    let vm: Vec<T> = v.iter().map(|&x| x.min(T::zero())).collect();
    let dp = prob.lp(&vp);
    let dm = prob.lp(&vm);
    let qp = parts.plus / dp;
    let qm = parts.minus / dm;
    let grad_q = |gn: &[T], q: T, d: T, part: &[T]| -> Vec<T> {
        gn.iter()
            .zip(part)
            .map(|(&g, &x)| (g - q * prob.vol * p * prob.exp.phi(x)) / d)
            .collect::<Vec<T>>()
    };
    let gp = grad_q(&parts.grad_plus, qp, dp, &vp);
    let gm = grad_q(&parts.grad_minus, qm, dm, &vm);
    let cp = dot(&gp, &vm);
    let cm = dot(&gm, &vm);
    let mu = if cp - cm > T::zero() { -cm / (cp - cm) } else { T::lit(0.5) };
    let mu = mu.max(T::zero()).min(T::one());
    let grad = gp
        .iter()
        .zip(&gm)
        .map(|(&a, &b)| mu * a + (T::one() - mu) * b)
        .collect();
    Ok(Balanced {
        value: qp.max(qm),
        v,
        qp,
        qm,
        grad,
    })
}

struct Descent<T> {
    state: Balanced<T>,
    iterations: usize,
    converged: bool,
    stationarity: T,
    history: Vec<f64>,
}

fn descend<T: Real>(prob: &Problem<'_, T>, start: Vec<T>, opts: &EigenOptions) -> Result<Descent<T>> {
    if !has_both_signs(&start) {
        return Err(Error::Precondition("initial iterate does not change sign".into()));
    }
    let mut cur = balanced_state(prob, start)?;
    let mut history = vec![cur.value.as_f64()];
    let tol = T::lit(opts.tol);
    let mut step = initial_step(prob.exp.p(), &cur.grad, T::lit(1e-3));
    let mut iterations = 0;
    let stat = |b: &Balanced<T>| norm(&b.grad) * norm(&b.v) / b.value;
    let mut converged = false;
    let mut stalled = 0;
    while iterations < opts.max_iter {
        if stat(&cur) <= tol {
            converged = true;
            break;
        }
        iterations += 1;
        let dir = direction(prob.k.view(), &cur.v, &cur.grad);
        let slope = -dot(&cur.grad, &dir);
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<T> = cur.v.iter().zip(&dir).map(|(&x, &d)| x + step * d).collect();
            if has_both_signs(&trial) {
                let next = balanced_state(prob, trial)?;
                if next.value <= cur.value - T::lit(1e-4) * step * slope {
                    accepted = Some(next);
                    break;
                }
            }
            step = step * T::lit(0.5);
        }
        let Some(next) = accepted else {
            converged = stat(&cur) <= stall_tolerance(tol, prob.exp.p());
            break;
        };
        step = next_step(prob.exp.p(), &next.v, &cur.v, &next.grad, &cur.grad, step);
        stalled = if negligible(cur.value, next.value) { stalled + 1 } else { 0 };
        cur = next;
        history.push(cur.value.as_f64());
        if stalled >= STALL_LIMIT {
            converged = stat(&cur) <= stall_tolerance(tol, prob.exp.p());
            break;
        }
    }
    Ok(Descent {
        stationarity: stat(&cur),
        state: cur,
        iterations,
        converged,
        history,
    })
}

/// Sign-changing starting profiles on the active nodes: `x1`, a shifted
/// bump, then seeded uniform noise.
pub(crate) fn initial_profiles<T: Real>(
    w: &Window<T>,
    active: &[usize],
    count: usize,
    seed: u64,
) -> Vec<(String, Vec<T>)> {
    let coords: Vec<Vec<T>> = active.iter().map(|&i| w.coords(i)).collect();
    let [lo, hi] = w.extent(0);
    let len = hi - lo;
    let mut out = Vec::new();
    out.push(("odd".to_string(), coords.iter().map(|x| x[0]).collect()));
    if count > 1 {
        let c = lo + T::lit(0.6) * len;
        let ell = T::lit(0.2) * len;
        let bump = coords
            .iter()
            .map(|x| {
                let z = (x[0] - c) / ell;
                (-z * z).exp() - T::lit(0.3)
            })
            .collect();
        out.push(("shifted_bump".to_string(), bump));
    }
    for id in 2..count {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(id as u64));
        let noise = coords.iter().map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect();
        out.push((format!("random_{id}"), noise));
    }
    out
}

/// `mu2` by balanced descent from several starts; reports every outcome.
pub fn second_eigen_mu2<T: Real>(
    domain: &LatticeDomain<T>,
    k: &KernelWeights<T>,
    opts: &EigenOptions,
) -> Result<EigenReport<T>> {
    if domain.node_count() < 2 {
        return Err(Error::Precondition("sign-changing functions need at least two nodes".into()));
    }
    let first = first_eigenpair(domain, k, opts)?;
    let prob = Problem::new(domain, k)?;
    let starts = initial_profiles(domain.window(), prob.k.active(), opts.multistarts.max(1), opts.seed);
    let runs: Vec<Result<Descent<T>>> = starts
        .par_iter()
        .map(|(_, v)| descend(&prob, v.clone(), opts))
        .collect();

    let mut outcomes = Vec::new();
    let mut best: Option<(usize, &Descent<T>)> = None;
    for (id, ((label, _), run)) in starts.iter().zip(&runs).enumerate() {
        match run {
            Ok(d) => {
                outcomes.push(StartOutcome {
                    id,
                    label: label.clone(),
                    mu2: Some(d.state.value.as_f64()),
                    iterations: d.iterations,
                    converged: d.converged,
                    stationarity: Some(d.stationarity.as_f64()),
                    error: None,
                });
                if d.converged && best.map_or(true, |(_, b)| d.state.value < b.state.value) {
                    best = Some((id, d));
                }
            }
            Err(e) => outcomes.push(StartOutcome {
                id,
                label: label.clone(),
                mu2: None,
                iterations: 0,
                converged: false,
                stationarity: None,
                error: Some(e.to_string()),
            }),
        }
    }
    let Some((id, d)) = best else {
        if runs.iter().all(|r| r.is_err()) {
            return Err(Error::NoSignChangingMinimizer);
        }
        let history = runs
            .iter()
            .filter_map(|r| r.as_ref().ok())
            .flat_map(|d| d.history.clone())
            .collect();
        return Err(Error::NoConvergence {
            message: "no multistart reached the stationarity tolerance".into(),
            iterations: opts.max_iter,
            history,
        });
    };
    let v = &d.state.v;
    let mu2 = d.state.value;
    let u2 = prob.to_grid(v);
    let check = verify_second_eigen(&u2, mu2, k, None, opts.tol)?;
    Ok(EigenReport {
        lambda1: first.lambda1.as_f64(),
        mu2: mu2.as_f64(),
        u2,
        quotient_plus: d.state.qp.as_f64(),
        quotient_minus: d.state.qm.as_f64(),
        residuals: Residuals {
            plus: check.residual_plus,
            minus: check.residual_minus,
            equation: prob.equation_residual(v, mu2),
        },
        iterations: d.iterations,
        multistart_id: id,
        outcomes,
        history: d.history.clone(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SecondEigenCheck {
    pub quotient_plus: f64,
    pub quotient_minus: f64,
    pub residual_plus: f64,
    pub residual_minus: f64,
    pub identities_hold: bool,
    /// Comparison against a reference eigenfunction, when given.
    pub comparison: Option<ReferenceComparison>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReferenceComparison {
    /// `h^N sum |v^pm|^p - h^N sum |u^pm|^p` (must be `>= 0`)
    pub norm_gap_plus: f64,
    pub norm_gap_minus: f64,
    /// `<D[u]_p^p, u^pm> - <D[v]_p^p, v^pm>` (must be `>= 0`)
    pub pairing_gap_plus: f64,
    pub pairing_gap_minus: f64,
    pub second_eigen_equivalent: bool,
}

fn split_data<T: Real>(v: &GridFunction<T>, k: &KernelWeights<T>) -> Result<[T; 4]> {
    let v = on_kernel_window(v, k)?;
    let (np, nm) = k.view().split_numerators(v.values());
    let dp = v.positive_part().lp_norm_pow(k.p());
    let dm = v.negative_part().lp_norm_pow(k.p());
    Ok([np, nm, dp, dm])
}

/// Checks `lambda h^N sum |v^pm|^p = (1/p) <D[v]_p^p, v^pm>` to `tol`, and
/// optionally the norm and pairing comparisons against a reference `u`.
pub fn verify_second_eigen<T: Real>(
    v: &GridFunction<T>,
    lambda: T,
    k: &KernelWeights<T>,
    reference: Option<&GridFunction<T>>,
    tol: f64,
) -> Result<SecondEigenCheck> {
    if !has_both_signs(v.values()) {
        return Err(Error::Precondition("v must change sign".into()));
    }
    let [np, nm, dp, dm] = split_data(v, k)?;
    let rp = ((lambda * dp - np).abs() / (lambda * dp)).as_f64();
    let rm = ((lambda * dm - nm).abs() / (lambda * dm)).as_f64();
    let comparison = match reference {
        None => None,
        Some(u) => {
            let [up, um, udp, udm] = split_data(u, k)?;
            let ng_p = (dp - udp).as_f64();
            let ng_m = (dm - udm).as_f64();
            let pg_p = (up - np).as_f64();
            let pg_m = (um - nm).as_f64();
            let slack_n = tol * (udp + udm).as_f64();
            let slack_p = tol * (up + um).as_f64();
            Some(ReferenceComparison {
                norm_gap_plus: ng_p,
                norm_gap_minus: ng_m,
                pairing_gap_plus: pg_p,
                pairing_gap_minus: pg_m,
                second_eigen_equivalent: ng_p >= -slack_n
                    && ng_m >= -slack_n
                    && pg_p >= -slack_p
                    && pg_m >= -slack_p,
            })
        }
    };
    Ok(SecondEigenCheck {
        quotient_plus: (np / dp).as_f64(),
        quotient_minus: (nm / dm).as_f64(),
        residual_plus: rp,
        residual_minus: rm,
        identities_hold: rp <= tol && rm <= tol,
        comparison,
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CurvePoint {
    pub alpha: f64,
    pub beta: f64,
    pub value: f64,
}

/// `[alpha v^+ + beta v^-]_p^p / (|alpha|^p |v^+|_p^p + |beta|^p |v^-|_p^p)`
/// at `samples` equally spaced angles, starting at `(1, 0)`.
pub fn rayleigh_curve<T: Real>(v: &GridFunction<T>, k: &KernelWeights<T>, samples: usize) -> Result<Vec<CurvePoint>> {
    if samples < 3 {
        return Err(Error::Parameter("need at least 3 samples".into()));
    }
    if !has_both_signs(v.values()) {
        return Err(Error::Precondition("v must change sign".into()));
    }
    let v = on_kernel_window(v, k)?;
    let vp = v.positive_part();
    let vm = v.negative_part();
    let p = k.p();
    let dp = vp.lp_norm_pow(p);
    let dm = vm.lp_norm_pow(p);
    let view = k.view();
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let theta = T::lit(2.0 * std::f64::consts::PI * i as f64 / samples as f64);
            let (a, b) = (theta.cos(), theta.sin());
            let w: Vec<T> = vp
                .values()
                .iter()
                .zip(vm.values())
                .map(|(&x, &y)| a * x + b * y)
                .collect();
            let value = view.seminorm(&w) / (a.abs().powf(p) * dp + b.abs().powf(p) * dm);
            Ok(CurvePoint {
                alpha: a.as_f64(),
                beta: b.as_f64(),
                value: value.as_f64(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::build_kernel;
    use crate::lattice::{make_steiner_domain, Window};

    fn interval(n: usize, p: f64) -> (LatticeDomain<f64>, KernelWeights<f64>) {
        let w = Window::centered(1, 2.0 / n as f64, [n, 1]).unwrap();
        let d = make_steiner_domain(|_| 1.0, w.clone()).unwrap();
        let k = build_kernel(&w, 0.5, p).unwrap();
        (d, k)
    }

    #[test]
    fn balancing_equalizes_quotients() {
        let (d, k) = interval(16, 3.0);
        let prob = Problem::new(&d, &k).unwrap();
        let mut v: Vec<f64> = (0..16).map(|i| (i as f64 - 5.3) * (1.0 + 0.1 * i as f64)).collect();
        let (_, q) = balance(&prob, &mut v).unwrap();
        let (np, nm) = prob.k.view().split_numerators(&v);
        let dp = prob.lp(&v.iter().map(|x| x.max(0.0)).collect::<Vec<_>>());
        let dm = prob.lp(&v.iter().map(|x| x.min(0.0)).collect::<Vec<_>>());
        assert!((np / dp - nm / dm).abs() < 1e-12 * q);
        assert!((np / dp - q).abs() < 1e-12 * q);
    }

    #[test]
    fn reduced_gradient_matches_finite_differences() {
        let (d, k) = interval(12, 2.5);
        let prob = Problem::new(&d, &k).unwrap();
        let v: Vec<f64> = (0..12).map(|i| (i as f64 - 4.6) * 0.3 + 0.05 * (i as f64).sin()).collect();
        let b = balanced_state(&prob, v).unwrap();
        let dir: Vec<f64> = (0..12).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.1).collect();
        let h = 1e-6;
        let at = |s: f64| {
            let w: Vec<f64> = b.v.iter().zip(&dir).map(|(x, d)| x + s * d).collect();
            balanced_state(&prob, w).unwrap().value
        };
        let fd = (at(h) - at(-h)) / (2.0 * h);
        let an = dot(&b.grad, &dir);
        assert!((fd - an).abs() < 1e-6 * an.abs().max(1e-3), "fd {fd} vs {an}");
    }

    #[test]
    fn ordering_and_sign_change() {
        let (d, k) = interval(24, 2.0);
        let opts = EigenOptions::default();
        let first = first_eigenpair(&d, &k, &opts).unwrap();
        assert!(first.u1.values().iter().all(|&x| x >= 0.0));
        let rep = second_eigen_mu2(&d, &k, &opts).unwrap();
        assert!(rep.mu2 >= rep.lambda1);
        assert!((rep.quotient_plus - rep.quotient_minus).abs() <= 1e-9 * rep.mu2);
        assert!(verify_second_eigen(&first.u1, first.lambda1, &k, None, 1e-8).is_err());
        let flipped = rep.u2.scaled(-1.0);
        let a = verify_second_eigen(&rep.u2, rep.mu2, &k, None, 1e-8).unwrap();
        let b = verify_second_eigen(&flipped, rep.mu2, &k, None, 1e-8).unwrap();
        assert_eq!(a.quotient_plus, b.quotient_minus);
        assert!(a.identities_hold && b.identities_hold);
    }
}
