//! Least energy nodal solutions: minimization of `E` over the nodal Nehari
//! set `M = { u : u^+ != 0 != u^-, <DE(u), u^+> = <DE(u), u^-> = 0 }`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descent::{
    direction, has_both_signs, initial_step, negligible, next_step, norm, stall_tolerance, STALL_LIMIT,
};
use crate::eigensolver::initial_profiles;
use crate::energy::{dpairing, on_kernel_window};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::kernel::{ActiveKernel, KernelWeights};
use crate::lattice::LatticeDomain;
use crate::nonlinearity::Nonlinearity;
use crate::pairs::{dot, MixedPairs, PairView};
use crate::scalar::Real;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NehariOptions {
    /// Stationarity tolerance: `|grad E| |u| <= tol * h^N sum f(u) u`.
    pub tol: f64,
    /// Relative residual accepted for the scaling system.
    pub scale_tol: f64,
    pub max_iter: usize,
    pub multistarts: usize,
    pub seed: u64,
}

impl Default for NehariOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            scale_tol: 1e-12,
            max_iter: 20_000,
            multistarts: 3,
            seed: 0,
        }
    }
}

fn require_superhomogeneous<T: Real>(nl: &Nonlinearity<T>) -> Result<()> {
    if nl.is_superhomogeneous() {
        Ok(())
    } else {
        Err(Error::Precondition("the nonlinearity must be superhomogeneous".into()))
    }
}

/// Root in `s = ln t` of a function positive for small `t` and negative for
/// large `t`, by bracketing from `s0` and Illinois regula falsi.
fn log_root<T: Real>(g: impl Fn(T) -> T, s0: T, trace: &mut Vec<String>) -> Result<T> {
    let g0 = g(s0);
    if g0 == T::zero() {
        return Ok(s0);
    }
    let dir = if g0 > T::zero() { T::one() } else { -T::one() };
    let (mut lo, mut glo) = (s0, g0);
    let mut width = T::lit(0.25);
    let mut hi = s0 + dir * width;
    let mut ghi = g(hi);
    let mut expansions = 0;
    while ghi.signum() == g0.signum() && ghi != T::zero() {
        lo = hi;
        glo = ghi;
        width = width * T::lit(2.0);
        hi = hi + dir * width;
        ghi = g(hi);
        expansions += 1;
        if expansions > 60 || !ghi.is_finite() {
            trace.push(format!("no sign change between ln t = {s0} and {hi}"));
            return Err(Error::NoConvergence {
                message: format!("scaling bracket failed: {}", trace.join("; ")),
                iterations: expansions,
                history: vec![],
            });
        }
    }
    trace.push(format!("bracket [{}, {}]", lo.min(hi), lo.max(hi)));
    let mut side = 0i8;
    let mut s = lo;
    for _ in 0..300 {
        s = (lo * ghi - hi * glo) / (ghi - glo);
        if !(s > lo.min(hi) && s < lo.max(hi)) {
            s = T::lit(0.5) * (lo + hi);
        }
        let gs = g(s);
        if gs == T::zero() || (hi - lo).abs() <= T::lit(4.0) * T::epsilon() * (T::one() + s.abs()) {
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
    Ok(s)
}

/// The scaling system for `t+ v+ + t- v-` on a fixed pair system.
struct Scaling<'a, T> {
    pairs: MixedPairs<T>,
    vol: T,
    nl: &'a Nonlinearity<T>,
    vp: Vec<T>,
    vm: Vec<T>,
}

struct ScaleEval<T> {
    f: [T; 2],
    scale: [T; 2],
    jac: [[T; 2]; 2],
}

impl<'a, T: Real> Scaling<'a, T> {
    fn new(view: PairView<'a, T>, vol: T, nl: &'a Nonlinearity<T>, v: &[T]) -> Result<Self> {
        if !has_both_signs(v) {
            return Err(Error::Precondition("v must change sign".into()));
        }
        Ok(Self {
            pairs: MixedPairs::new(view, v),
            vol,
            nl,
            vp: v.iter().map(|&x| x.max(T::zero())).collect(),
            vm: v.iter().map(|&x| x.min(T::zero())).collect(),
        })
    }

    /// `h^N sum f(t v_i) t v_i` and its `t`-derivative over one part.
    fn potential(&self, part: &[T], t: T) -> (T, T) {
        let mut val = T::zero();
        let mut der = T::zero();
        for &x in part {
            if x != T::zero() {
                let z = t * x;
                let fz = self.nl.f(z);
                val = val + fz * z;
                der = der + (self.nl.derivative(z) * z + fz) * x;
            }
        }
        (self.vol * val, self.vol * der)
    }

    fn eval(&self, tp: T, tm: T) -> ScaleEval<T> {
        let sys = self.pairs.system(tp, tm);
        let (rp, dp) = self.potential(&self.vp, tp);
        let (rm, dm) = self.potential(&self.vm, tm);
        ScaleEval {
            f: [sys.plus - rp, sys.minus - rm],
            scale: [rp.max(sys.plus.abs()), rm.max(sys.minus.abs())],
            jac: [
                [sys.jacobian[0][0] - dp, sys.jacobian[0][1]],
                [sys.jacobian[1][0], sys.jacobian[1][1] - dm],
            ],
        }
    }

    fn merit(e: &ScaleEval<T>) -> T {
        (e.f[0] / e.scale[0]).abs().max((e.f[1] / e.scale[1]).abs())
    }

    /// Damped Newton in `(ln t+, ln t-)` from `(1, 1)`, with coordinate-wise
    /// bisection sweeps when Newton stalls.
    fn solve(&self, tol: T) -> Result<(T, T)> {
        let mut trace = Vec::new();
        let (mut sp, mut sm) = (T::zero(), T::zero());
        if let Some(t) = self.newton(&mut sp, &mut sm, tol, 60) {
            return Ok(t);
        }
        trace.push(format!("newton stalled at (t+, t-) = ({}, {})", sp.exp(), sm.exp()));
        for sweep in 0..500 {
            let tm = sm.exp();
            sp = log_root(|s: T| self.eval(s.exp(), tm).f[0] / s.exp(), sp, &mut trace)?;
            let tp = sp.exp();
            sm = log_root(|s: T| self.eval(tp, s.exp()).f[1] / s.exp(), sm, &mut trace)?;
            if Self::merit(&self.eval(sp.exp(), sm.exp())) <= T::lit(1e-6) || sweep == 499 {
                break;
            }
            trace.truncate(4);
        }
        if let Some(t) = self.newton(&mut sp, &mut sm, tol, 60) {
            return Ok(t);
        }
        Err(Error::NoConvergence {
            message: format!("Nehari scaling did not converge: {}", trace.join("; ")),
            iterations: 0,
            history: vec![],
        })
    }

    fn newton(&self, sp: &mut T, sm: &mut T, tol: T, max_iter: usize) -> Option<(T, T)> {
        let mut e = self.eval(sp.exp(), sm.exp());
        for _ in 0..max_iter {
            let merit = Self::merit(&e);
            if merit <= tol {
                return Some((sp.exp(), sm.exp()));
            }
            let (tp, tm) = (sp.exp(), sm.exp());
            // d/ds = t d/dt
            let a = e.jac[0][0] * tp;
            let b = e.jac[0][1] * tm;
            let c = e.jac[1][0] * tp;
            let d = e.jac[1][1] * tm;
            let det = a * d - b * c;
            if det == T::zero() || !det.is_finite() {
                return None;
            }
            let mut dsp = -(d * e.f[0] - b * e.f[1]) / det;
            let mut dsm = -(a * e.f[1] - c * e.f[0]) / det;
            let cap = T::lit(2.0);
            let big = dsp.abs().max(dsm.abs());
            if big > cap {
                dsp = dsp * cap / big;
                dsm = dsm * cap / big;
            }
            let mut lambda = T::one();
            let mut improved = false;
            for _ in 0..40 {
                let trial = self.eval((*sp + lambda * dsp).exp(), (*sm + lambda * dsm).exp());
                let tm_ = Self::merit(&trial);
                if tm_.is_finite() && tm_ < merit {
                    *sp = *sp + lambda * dsp;
                    *sm = *sm + lambda * dsm;
                    e = trial;
                    improved = true;
                    break;
                }
                lambda = lambda * T::lit(0.5);
            }
            if !improved {
                return (merit <= tol).then(|| (sp.exp(), sm.exp()));
            }
        }
        (Self::merit(&e) <= tol).then(|| (sp.exp(), sm.exp()))
    }
}

/// `(t+, t-)` with `t+ v+ + t- v-` on the nodal Nehari set.
pub fn nehari_scale<T: Real>(v: &GridFunction<T>, nl: &Nonlinearity<T>, k: &KernelWeights<T>) -> Result<(T, T)> {
    require_superhomogeneous(nl)?;
    let v = on_kernel_window(v, k)?;
    let sc = Scaling::new(k.view(), k.window().cell_volume(), nl, v.values())?;
    sc.solve(T::lit(1e-12))
}

/// Relative residuals `|(1/p)<D[u]_p^p, u^pm> - h^N sum f(u^pm) u^pm| / h^N sum f(u^pm) u^pm`.
pub fn nehari_residuals<T: Real>(u: &GridFunction<T>, nl: &Nonlinearity<T>, k: &KernelWeights<T>) -> Result<[f64; 2]> {
    let u = on_kernel_window(u, k)?;
    let sc = Scaling::new(k.view(), k.window().cell_volume(), nl, u.values())?;
    let e = sc.eval(T::one(), T::one());
    Ok([(e.f[0] / e.scale[0]).abs().as_f64(), (e.f[1] / e.scale[1]).abs().as_f64()])
}

struct LensProblem<'a, T> {
    k: ActiveKernel<T>,
    domain: &'a LatticeDomain<T>,
    nl: &'a Nonlinearity<T>,
    vol: T,
    p: T,
    scale_tol: T,
}

#[derive(Clone)]
struct LensState<T> {
    u: Vec<T>,
    energy: T,
    grad: Vec<T>,
    /// `h^N sum f(u) u`
    mass: T,
}

impl<'a, T: Real> LensProblem<'a, T> {
    fn new(domain: &'a LatticeDomain<T>, k: &KernelWeights<T>, nl: &'a Nonlinearity<T>, opts: &NehariOptions) -> Result<Self> {
        require_superhomogeneous(nl)?;
        if (nl.p() - k.p()).abs() > T::epsilon() * k.p() {
            return Err(Error::Parameter("nonlinearity and kernel use different p".into()));
        }
        let active = k.restrict(domain)?;
        Ok(Self {
            vol: active.cell_volume(),
            p: k.p(),
            k: active,
            domain,
            nl,
            scale_tol: T::lit(opts.scale_tol),
        })
    }

    fn state(&self, u: Vec<T>) -> LensState<T> {
        let view = self.k.view();
        let g = view.seminorm(&u);
        let mut grad = view.gradient(&u);
        let mut pot = T::zero();
        let mut mass = T::zero();
        for (gi, &z) in grad.iter_mut().zip(&u) {
            let fz = self.nl.f(z);
            *gi = *gi / self.p - self.vol * fz;
            pot = pot + self.nl.primitive(z);
            mass = mass + fz * z;
        }
        LensState {
            energy: g / self.p - self.vol * pot,
            mass: self.vol * mass,
            grad,
            u,
        }
    }

    fn project(&self, w: &[T]) -> Result<(Vec<T>, T, T)> {
        let sc = Scaling::new(self.k.view(), self.vol, self.nl, w)?;
        let (tp, tm) = sc.solve(self.scale_tol)?;
        let u = w.iter().map(|&x| if x > T::zero() { tp * x } else { tm * x }).collect();
        Ok((u, tp, tm))
    }

    /// Newton-type directions are scaled by `p`: the metric is the Hessian
    /// of `[u]_p^p`, not of `(1/p) [u]_p^p`.
    fn direction(&self, s: &LensState<T>) -> Vec<T> {
        let mut d = direction(self.k.view(), &s.u, &s.grad);
        if crate::descent::preconditioned(self.p) {
            for x in d.iter_mut() {
                *x = *x * self.p;
            }
        }
        d
    }

    fn stationarity(&self, s: &LensState<T>) -> T {
        norm(&s.grad) * norm(&s.u) / s.mass
    }
}

struct LensRun<T> {
    state: LensState<T>,
    iterations: usize,
    converged: bool,
    stationarity: T,
    history: Vec<f64>,
}

/// Projected descent on `E` restricted to `M` from one starting profile.
fn lens_descend<T: Real>(prob: &LensProblem<'_, T>, start: &[T], opts: &NehariOptions) -> Result<LensRun<T>> {
    if !has_both_signs(start) {
        return Err(Error::Precondition("initial profile does not change sign".into()));
    }
    let (u0, _, _) = prob.project(start)?;
    let mut cur = prob.state(u0);
    let mut history = vec![cur.energy.as_f64()];
    let tol = T::lit(opts.tol);
    let mut step = initial_step(prob.p, &cur.grad, T::lit(1e-3) * norm(&cur.u));
    let mut iterations = 0;
    let mut converged = false;
    let mut stalled = 0;
    while iterations < opts.max_iter {
        if prob.stationarity(&cur) <= tol {
            converged = true;
            break;
        }
        iterations += 1;
        let dir = prob.direction(&cur);
        let slope = -dot(&cur.grad, &dir);
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<T> = cur.u.iter().zip(&dir).map(|(&x, &d)| x + step * d).collect();
            if has_both_signs(&trial) {
                if let Ok((u, _, _)) = prob.project(&trial) {
                    let next = prob.state(u);
                    if next.energy <= cur.energy - T::lit(1e-4) * step * slope {
                        accepted = Some(next);
                        break;
                    }
                }
            }
            step = step * T::lit(0.5);
        }
        let Some(next) = accepted else {
            converged = prob.stationarity(&cur) <= stall_tolerance(tol, prob.p);
            break;
        };
        step = next_step(prob.p, &next.u, &cur.u, &next.grad, &cur.grad, step);
        stalled = if negligible(cur.energy, next.energy) { stalled + 1 } else { 0 };
        cur = next;
        history.push(cur.energy.as_f64());
        if stalled >= STALL_LIMIT {
            converged = prob.stationarity(&cur) <= stall_tolerance(tol, prob.p);
            break;
        }
    }
    Ok(LensRun {
        stationarity: prob.stationarity(&cur),
        state: cur,
        iterations,
        converged,
        history,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LensOutcome {
    pub id: usize,
    pub label: String,
    pub m: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub stationarity: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NehariReport<T> {
    #[serde(skip)]
    pub u: GridFunction<T>,
    /// `E(u)`
    pub m: f64,
    /// Re-projection scalings of the returned `u`.
    pub t_plus: f64,
    pub t_minus: f64,
    pub residual_plus: f64,
    pub residual_minus: f64,
    /// `|E(u) - (1/p) h^N sum G(u_i)|`
    pub g_identity_gap: f64,
    pub stationarity: f64,
    pub iterations: usize,
    pub multistart_id: usize,
    pub outcomes: Vec<LensOutcome>,
    pub history: Vec<f64>,
}

/// Minimizes `E` over the nodal Nehari set from several starts and returns
/// the lowest converged level.
pub fn lens_minimize<T: Real>(
    domain: &LatticeDomain<T>,
    k: &KernelWeights<T>,
    nl: &Nonlinearity<T>,
    opts: &NehariOptions,
) -> Result<NehariReport<T>> {
    let prob = LensProblem::new(domain, k, nl, opts)?;
    if prob.k.len() < 2 {
        return Err(Error::Precondition("sign-changing functions need at least two nodes".into()));
    }
    let starts = initial_profiles(domain.window(), prob.k.active(), opts.multistarts.max(1), opts.seed);
    let runs: Vec<Result<LensRun<T>>> = starts.par_iter().map(|(_, v)| lens_descend(&prob, v, opts)).collect();
    let mut outcomes = Vec::new();
    let mut best: Option<(usize, &LensRun<T>)> = None;
    for (id, ((label, _), run)) in starts.iter().zip(&runs).enumerate() {
        match run {
            Ok(r) => {
                outcomes.push(LensOutcome {
                    id,
                    label: label.clone(),
                    m: Some(r.state.energy.as_f64()),
                    iterations: r.iterations,
                    converged: r.converged,
                    stationarity: Some(r.stationarity.as_f64()),
                    error: None,
                });
                if r.converged && best.map_or(true, |(_, b)| r.state.energy < b.state.energy) {
                    best = Some((id, r));
                }
            }
            Err(e) => outcomes.push(LensOutcome {
                id,
                label: label.clone(),
                m: None,
                iterations: 0,
                converged: false,
                stationarity: None,
                error: Some(e.to_string()),
            }),
        }
    }
    let Some((id, run)) = best else {
        if outcomes.iter().all(|o| o.error.is_some()) {
            return Err(Error::NoSignChangingMinimizer);
        }
        return Err(Error::NoConvergence {
            message: "no multistart reached the stationarity tolerance".into(),
            iterations: opts.max_iter,
            history: runs.iter().flatten().flat_map(|r| r.history.last().copied()).collect(),
        });
    };
    let u = &run.state.u;
    let sc = Scaling::new(prob.k.view(), prob.vol, nl, u)?;
    let (tp, tm) = sc.solve(prob.scale_tol)?;
    let e = sc.eval(T::one(), T::one());
    let g_sum = u.iter().fold(T::zero(), |acc, &z| acc + nl.g(z));
    let m = run.state.energy;
    Ok(NehariReport {
        u: GridFunction::new(domain.window().clone(), prob.k.scatter(u))?,
        m: m.as_f64(),
        t_plus: tp.as_f64(),
        t_minus: tm.as_f64(),
        residual_plus: (e.f[0] / e.scale[0]).abs().as_f64(),
        residual_minus: (e.f[1] / e.scale[1]).abs().as_f64(),
        g_identity_gap: (m - prob.vol * g_sum / prob.p).abs().as_f64(),
        stationarity: run.stationarity.as_f64(),
        iterations: run.iterations,
        multistart_id: id,
        outcomes,
        history: run.history.clone(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GroundState<T> {
    #[serde(skip)]
    pub u: GridFunction<T>,
    /// `E(u)` on the one-signed Nehari set.
    pub level: f64,
    pub iterations: usize,
    pub stationarity: f64,
}

/// Positive minimizer of `E` over `{ u >= 0, u != 0, <DE(u), u> = 0 }`.
pub fn nehari_ground_state<T: Real>(
    domain: &LatticeDomain<T>,
    k: &KernelWeights<T>,
    nl: &Nonlinearity<T>,
    opts: &NehariOptions,
) -> Result<GroundState<T>> {
    let prob = LensProblem::new(domain, k, nl, opts)?;
    let view = prob.k.view();
    // t^p [v]_p^p = h^N sum f(t v) t v
    let project = |v: &[T]| -> Result<Vec<T>> {
        let g = view.seminorm(v);
        let mut trace = Vec::new();
        let s = log_root(
            |s: T| {
                let t = s.exp();
                let pot = v.iter().fold(T::zero(), |acc, &x| acc + prob.nl.f(t * x) * x);
                t.powf(prob.p - T::one()) * g - prob.vol * pot
            },
            T::zero(),
            &mut trace,
        )?;
        Ok(v.iter().map(|&x| s.exp() * x).collect())
    };
    let projected_grad = |s: &LensState<T>| -> Vec<T> {
        s.grad
            .iter()
            .zip(&s.u)
            .map(|(&g, &x)| if x <= T::zero() && g > T::zero() { T::zero() } else { g })
            .collect()
    };
    let stat = |s: &LensState<T>| norm(&projected_grad(s)) * norm(&s.u) / s.mass;
    let mut cur = prob.state(project(&vec![T::one(); prob.k.len()])?);
    let tol = T::lit(opts.tol);
    let mut step = initial_step(prob.p, &cur.grad, T::lit(1e-3) * norm(&cur.u));
    let mut iterations = 0;
    let mut stalled = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        if stat(&cur) <= tol {
            converged = true;
            break;
        }
        iterations += 1;
        let g = projected_grad(&cur);
        let mut dir = direction(view, &cur.u, &g);
        if crate::descent::preconditioned(prob.p) {
            dir.iter_mut().for_each(|x| *x = *x * prob.p);
        }
        let slope = -dot(&g, &dir);
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<T> = cur.u.iter().zip(&dir).map(|(&x, &d)| (x + step * d).max(T::zero())).collect();
            if trial.iter().any(|&x| x > T::zero()) {
                if let Ok(u) = project(&trial) {
                    let next = prob.state(u);
                    if next.energy <= cur.energy - T::lit(1e-4) * step * slope {
                        accepted = Some(next);
                        break;
                    }
                }
            }
            step = step * T::lit(0.5);
        }
        let Some(next) = accepted else {
            converged = stat(&cur) <= stall_tolerance(tol, prob.p);
            break;
        };
        step = next_step(prob.p, &next.u, &cur.u, &next.grad, &cur.grad, step);
        stalled = if negligible(cur.energy, next.energy) { stalled + 1 } else { 0 };
        cur = next;
        if stalled >= STALL_LIMIT {
            converged = stat(&cur) <= stall_tolerance(tol, prob.p);
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            message: "ground state: gradient did not reach tolerance".into(),
            iterations,
            history: vec![cur.energy.as_f64()],
        });
    }
    Ok(GroundState {
        stationarity: stat(&cur).as_f64(),
        u: GridFunction::new(prob.domain.window().clone(), prob.k.scatter(&cur.u))?,
        level: cur.energy.as_f64(),
        iterations,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LensCheck {
    /// `h^N sum F(v) - h^N sum F(u)`, needs `>= 0`.
    pub primitive_gap: f64,
    /// `h^N sum f(v^pm) v^pm - h^N sum f(u^pm) u^pm`, needs `= 0`.
    pub f_times_plus_gap: f64,
    pub f_times_minus_gap: f64,
    /// `<D[u]_p^p, u^pm> - <D[v]_p^p, v^pm>`, needs `>= 0`.
    pub pairing_plus_gap: f64,
    pub pairing_minus_gap: f64,
    /// Names of the conditions that fail.
    pub failed: Vec<String>,
    pub lens_equivalent: bool,
}

/// Compares `v` with a computed least energy nodal solution through the
/// primitive sum, the sums of `f(v^pm) v^pm` and the split pairings.
pub fn lens_verify<T: Real>(
    v: &GridFunction<T>,
    reference: &NehariReport<T>,
    nl: &Nonlinearity<T>,
    k: &KernelWeights<T>,
    tol: f64,
) -> Result<LensCheck> {
    if !has_both_signs(v.values()) {
        return Err(Error::Precondition("v must change sign".into()));
    }
    let v = on_kernel_window(v, k)?;
    let u = on_kernel_window(&reference.u, k)?;
    let vol = k.window().cell_volume();
    let sums = |w: &GridFunction<T>| -> [f64; 5] {
        let (wp, wm) = (w.positive_part(), w.negative_part());
        let fsum = |x: &GridFunction<T>| x.values().iter().fold(T::zero(), |a, &z| a + nl.f(z) * z);
        let prim = w.values().iter().fold(T::zero(), |a, &z| a + nl.primitive(z));
        let pair = |part: &GridFunction<T>| dpairing(w, part, k).map(|x| x.as_f64()).unwrap_or(f64::NAN);
        [
            (vol * prim).as_f64(),
            (vol * fsum(&wp)).as_f64(),
            (vol * fsum(&wm)).as_f64(),
            pair(&wp),
            pair(&wm),
        ]
    };
    let sv = sums(&v);
    let su = sums(&u);
    let gaps = [sv[0] - su[0], sv[1] - su[1], sv[2] - su[2], su[3] - sv[3], su[4] - sv[4]];
    let names = ["primitive", "f_times_plus", "f_times_minus", "pairing_plus", "pairing_minus"];
    let mut failed = Vec::new();
    for i in 0..5 {
        let slack = tol * su[i].abs().max(f64::MIN_POSITIVE);
        let ok = match i {
            1 | 2 => gaps[i].abs() <= slack,
            _ => gaps[i] >= -slack,
        };
        if !ok {
            failed.push(names[i].to_string());
        }
    }
    Ok(LensCheck {
        primitive_gap: gaps[0],
        f_times_plus_gap: gaps[1],
        f_times_minus_gap: gaps[2],
        pairing_plus_gap: gaps[3],
        pairing_minus_gap: gaps[4],
        lens_equivalent: failed.is_empty(),
        failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::build_kernel;
    use crate::lattice::Window;

    fn setup(p: f64) -> (LatticeDomain<f64>, KernelWeights<f64>, Nonlinearity<f64>) {
        let w = Window::centered(1, 2.0 / 32.0, [32, 1]).unwrap();
        let d = LatticeDomain::from_mask(w.clone(), vec![true; 32]).unwrap();
        let k = build_kernel(&w, 0.5, p).unwrap();
        (d, k, Nonlinearity::power(p, p + 1.0).unwrap())
    }

    #[test]
    fn scaling_lands_on_the_nehari_set() {
        for p in [1.5, 2.0, 3.0] {
            let (d, k, nl) = setup(p);
            let v = GridFunction::from_fn(d.window().clone(), |x| 3.0 * (2.0 * x[0]).sin() + 0.4);
            let (tp, tm) = nehari_scale(&v, &nl, &k).unwrap();
            let u = GridFunction::from_fn(d.window().clone(), |x| {
                let z = 3.0 * (2.0 * x[0]).sin() + 0.4;
                if z > 0.0 { tp * z } else { tm * z }
            });
            let r = nehari_residuals(&u, &nl, &k).unwrap();
            assert!(r[0] < 1e-11 && r[1] < 1e-11, "p={p} {r:?}");
            let (sp, sm) = nehari_scale(&u, &nl, &k).unwrap();
            assert!((sp - 1.0).abs() < 1e-10 && (sm - 1.0).abs() < 1e-10);
            // scaled up beyond M, both scalings shrink
            let (bp, bm) = nehari_scale(&u.scaled(2.0), &nl, &k).unwrap();
            assert!(bp < 1.0 && bm < 1.0 && bp > 0.0 && bm > 0.0);
        }
    }

    #[test]
    fn one_signed_input_is_rejected() {
        let (d, k, nl) = setup(2.0);
        let v = GridFunction::from_fn(d.window().clone(), |x| 1.0 + x[0]);
        assert!(matches!(nehari_scale(&v, &nl, &k), Err(Error::Precondition(_))));
        let res = Nonlinearity::resonant(2.0, 3.0).unwrap();
        let w = GridFunction::from_fn(d.window().clone(), |x| x[0]);
        assert!(nehari_scale(&w, &res, &k).is_err());
    }
}
