//! Pairwise sums over a dense symmetric interaction matrix plus per-node tails.
//!
//! Every discrete quantity (seminorm, pairing, split quotients, the Nehari
//! system) is a sum over ordered node pairs. Rows are reduced independently
//! and the row partials are added in index order, so results do not depend
//! on how rayon schedules the rows.

use rayon::prelude::*;

use crate::scalar::{ordered_sum, Real};

const PAR_THRESHOLD: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    OneAndHalf,
    Two,
    Three,
    General,
}

/// The exponent `p` with fast paths for the common values 1.5, 2 and 3.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exponent<T> {
    p: T,
    kind: Kind,
}

impl<T: Real> Exponent<T> {
    pub fn new(p: T) -> Self {
        let kind = if p == T::lit(2.0) {
            Kind::Two
        } else if p == T::lit(3.0) {
            Kind::Three
        } else if p == T::lit(1.5) {
            Kind::OneAndHalf
        } else {
            Kind::General
        };
        Self { p, kind }
    }

    pub fn p(&self) -> T {
        self.p
    }

    /// `|x|^p`
    #[inline]
    pub fn abs_pow(&self, x: T) -> T {
        let a = x.abs();
        match self.kind {
            Kind::Two => a * a,
            Kind::Three => a * a * a,
            Kind::OneAndHalf => a * a.sqrt(),
            Kind::General => {
                if a == T::zero() {
                    T::zero()
                } else {
                    a.powf(self.p)
                }
            }
        }
    }

    /// `|x|^{p-2}` for `x != 0`, and 0 at `x = 0`.
    #[inline]
    pub fn abs_pow_m2(&self, x: T) -> T {
        if x == T::zero() {
            return T::zero();
        }
        let a = x.abs();
        match self.kind {
            Kind::Two => T::one(),
            Kind::Three => a,
            Kind::OneAndHalf => T::one() / a.sqrt(),
            Kind::General => a.powf(self.p - T::lit(2.0)),
        }
    }

    /// `|x|^{p-2} x`, extended by 0 at the origin.
    #[inline]
    pub fn phi(&self, x: T) -> T {
        match self.kind {
            Kind::Two => x,
            _ => self.abs_pow_m2(x) * x,
        }
    }
}

/// Borrowed view of an interaction system: `n x n` weights (zero diagonal,
/// row-major) and per-node tail weights.
#[derive(Clone, Copy)]
pub struct PairView<'a, T> {
    pub weights: &'a [T],
    pub tails: &'a [T],
    pub exp: Exponent<T>,
}

/// Values and gradients of the two split numerators
/// `N+(v) = (1/p) <D[v]^p, v+>` and `N-(v) = (1/p) <D[v]^p, v->`.
#[derive(Clone, Debug)]
pub struct SplitParts<T> {
    pub plus: T,
    pub minus: T,
    pub grad_plus: Vec<T>,
    pub grad_minus: Vec<T>,
}

/// Values of the Nehari system at `(t+, t-)` and its Jacobian.
#[derive(Clone, Copy, Debug)]
pub struct NehariSystem<T> {
    /// `(1/p) <D[w]^p, t+ v+>` with `w = t+ v+ + t- v-`.
    pub plus: T,
    pub minus: T,
    /// `[[dP+/dt+, dP+/dt-], [dP-/dt+, dP-/dt-]]`
    pub jacobian: [[T; 2]; 2],
}

fn reduce_rows<T, R, F>(n: usize, row: F) -> Vec<R>
where
    T: Real,
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    if n >= PAR_THRESHOLD {
        (0..n).into_par_iter().map(row).collect()
    } else {
        (0..n).map(row).collect()
    }
}

impl<'a, T: Real> PairView<'a, T> {
    pub fn len(&self) -> usize {
        self.tails.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tails.is_empty()
    }

    pub(crate) fn row(&self, i: usize) -> &'a [T] {
        let n = self.len();
        &self.weights[i * n..(i + 1) * n]
    }

    /// `sum_{i != j} w_ij |u_i - u_j|^p + 2 sum_i t_i |u_i|^p`
    pub fn seminorm(&self, u: &[T]) -> T {
        let n = self.len();
        let exp = self.exp;
        let two = T::lit(2.0);
        let rows = reduce_rows::<T, T, _>(n, |i| {
            let w = self.row(i);
            let ui = u[i];
            let mut acc = T::zero();
            for j in (i + 1)..n {
                acc = acc + w[j] * exp.abs_pow(ui - u[j]);
            }
            two * acc + two * self.tails[i] * exp.abs_pow(ui)
        });
        ordered_sum(&rows)
    }

    /// Gradient of [`seminorm`](Self::seminorm); `<gradient(u), xi>` is the pairing `<D[u]^p, xi>`.
    pub fn gradient(&self, u: &[T]) -> Vec<T> {
        let n = self.len();
        let exp = self.exp;
        let scale = T::lit(2.0) * exp.p();
        reduce_rows::<T, T, _>(n, |k| {
            let w = self.row(k);
            let uk = u[k];
            let mut acc = T::zero();
            for j in 0..n {
                if j != k {
                    acc = acc + w[j] * exp.phi(uk - u[j]);
                }
            }
            scale * (acc + self.tails[k] * exp.phi(uk))
        })
    }

    /// Row-major Hessian of [`seminorm`](Self::seminorm) with `|x|^{p-2}`
    /// evaluated at `max(|x|, floor)`, so it stays finite for `p < 2`.
    pub fn hessian(&self, u: &[T], floor: T) -> Vec<T> {
        let n = self.len();
        let exp = self.exp;
        let c = T::lit(2.0) * exp.p() * (exp.p() - T::one());
        let curv = |x: T| exp.abs_pow_m2(x.abs().max(floor));
        let rows = reduce_rows::<T, Vec<T>, _>(n, |k| {
            let w = self.row(k);
            let mut row = vec![T::zero(); n];
            let mut diag = self.tails[k] * curv(u[k]);
            for j in 0..n {
                if j != k {
                    let e = w[j] * curv(u[k] - u[j]);
                    row[j] = -c * e;
                    diag = diag + e;
                }
            }
            row[k] = c * diag;
            row
        });
        rows.concat()
    }

    /// `(N+, N-)` only; half the work of [`split_parts`](Self::split_parts).
    pub fn split_numerators(&self, v: &[T]) -> (T, T) {
        let n = self.len();
        let exp = self.exp;
        let two = T::lit(2.0);
        let rows = reduce_rows::<T, (T, T), _>(n, |i| {
            let w = self.row(i);
            let vi = v[i];
            let (pi, mi) = (vi.max(T::zero()), vi.min(T::zero()));
            let mut plus = T::zero();
            let mut minus = T::zero();
            for j in (i + 1)..n {
                let vj = v[j];
                let f = w[j] * exp.phi(vi - vj);
                plus = plus + f * (pi - vj.max(T::zero()));
                minus = minus + f * (mi - vj.min(T::zero()));
            }
            let tail = two * self.tails[i] * exp.phi(vi);
            (two * plus + tail * pi, two * minus + tail * mi)
        });
        rows.iter()
            .fold((T::zero(), T::zero()), |(a, b), &(x, y)| (a + x, b + y))
    }

    /// Split numerators with their gradients.
    pub fn split_parts(&self, v: &[T]) -> SplitParts<T> {
        let n = self.len();
        let exp = self.exp;
        let two = T::lit(2.0);
        let pm1 = exp.p() - T::one();
        let rows = reduce_rows::<T, [T; 4], _>(n, |k| {
            let w = self.row(k);
            let vk = v[k];
            let (pk, mk) = (vk.max(T::zero()), vk.min(T::zero()));
            let theta_p = if vk > T::zero() { T::one() } else { T::zero() };
            let theta_m = if vk < T::zero() { T::one() } else { T::zero() };
            let (mut np, mut nm, mut gp, mut gm) = (T::zero(), T::zero(), T::zero(), T::zero());
            for j in 0..n {
                if j == k {
                    continue;
                }
                let vj = v[j];
                let d = vk - vj;
                let m = exp.abs_pow_m2(d);
                let phid = m * d;
                let dp = pk - vj.max(T::zero());
                let dm = mk - vj.min(T::zero());
                let wj = w[j];
                np = np + wj * phid * dp;
                nm = nm + wj * phid * dm;
                gp = gp + wj * (pm1 * m * dp + phid * theta_p);
                gm = gm + wj * (pm1 * m * dm + phid * theta_m);
            }
            let t = self.tails[k];
            let phik = exp.phi(vk);
            np = np + two * t * phik * pk;
            nm = nm + two * t * phik * mk;
            let tail_grad = two * t * exp.p() * phik;
            [np, nm, two * gp + tail_grad * theta_p, two * gm + tail_grad * theta_m]
        });
        let mut out = SplitParts {
            plus: T::zero(),
            minus: T::zero(),
            grad_plus: Vec::with_capacity(n),
            grad_minus: Vec::with_capacity(n),
        };
        for r in rows {
            out.plus = out.plus + r[0];
            out.minus = out.minus + r[1];
            out.grad_plus.push(r[2]);
            out.grad_minus.push(r[3]);
        }
        out
    }

    /// Pairing terms of the Nehari scaling system and their Jacobian in `(t+, t-)`.
    pub fn nehari_system(&self, vp: &[T], vm: &[T], tp: T, tm: T) -> NehariSystem<T> {
        let n = self.len();
        let exp = self.exp;
        let two = T::lit(2.0);
        let pm1 = exp.p() - T::one();
        let w_of = |i: usize| tp * vp[i] + tm * vm[i];
        let rows = reduce_rows::<T, [T; 6], _>(n, |i| {
            let w = self.row(i);
            let wi = w_of(i);
            let mut acc = [T::zero(); 6];
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d = wi - w_of(j);
                let m = exp.abs_pow_m2(d);
                let phid = m * d;
                let dvp = vp[i] - vp[j];
                let dvm = vm[i] - vm[j];
                let c = w[j];
                // ordered-pair sums; the tail terms are added below
                acc[0] = acc[0] + c * phid * dvp;
                acc[1] = acc[1] + c * phid * dvm;
                acc[2] = acc[2] + c * pm1 * m * dvp * dvp;
                acc[3] = acc[3] + c * pm1 * m * dvm * dvp;
                acc[4] = acc[4] + c * pm1 * m * dvm * dvm;
                acc[5] = acc[5] + c * pm1 * m * dvp * dvm;
            }
            let t = self.tails[i];
            let phi = exp.phi(wi);
            let m = exp.abs_pow_m2(wi);
            acc[0] = acc[0] + two * t * phi * vp[i];
            acc[1] = acc[1] + two * t * phi * vm[i];
            acc[2] = acc[2] + two * t * pm1 * m * vp[i] * vp[i];
            acc[4] = acc[4] + two * t * pm1 * m * vm[i] * vm[i];
            acc
        });
        let mut s = [T::zero(); 6];
        for r in rows {
            for (a, b) in s.iter_mut().zip(r) {
                *a = *a + b;
            }
        }
        // A+ = sum w phi(dw) dvp, so P+ = t+ A+ and
        // dP+/dt+ = A+ + t+ (p-1) sum w |dw|^{p-2} dvp^2, dP+/dt- = t+ (p-1) sum w |dw|^{p-2} dvm dvp.
        NehariSystem {
            plus: tp * s[0],
            minus: tm * s[1],
            jacobian: [[s[0] + tp * s[2], tp * s[3]], [tm * s[5], s[1] + tm * s[4]]],
        }
    }
}

/// The split numerators of `t+ v+ + t- v-` as functions of `(t+, t-)`.
///
/// Pairs inside one sign class scale homogeneously, so only the mixed
/// `(positive, negative)` pairs are kept: `N+ = t+^p R+ + 2 t+ sum w phi(d) a`
/// and `N- = t-^p R- + 2 t- sum w phi(d) b` with `d = t+ a + t- b`.
pub struct MixedPairs<T> {
    exp: Exponent<T>,
    /// `(w_ij, v_i, |v_j|)` for `v_i > 0 > v_j`.
    pairs: Vec<(T, T, T)>,
    plus_rest: T,
    minus_rest: T,
}

impl<T: Real> MixedPairs<T> {
    pub fn new(view: PairView<'_, T>, v: &[T]) -> Self {
        let m = v.len();
        let pos: Vec<usize> = (0..m).filter(|&i| v[i] > T::zero()).collect();
        let neg: Vec<usize> = (0..m).filter(|&i| v[i] < T::zero()).collect();
        let mut pairs = Vec::with_capacity(pos.len() * neg.len());
        for &i in &pos {
            let row = view.row(i);
            for &j in &neg {
                pairs.push((row[j], v[i], -v[j]));
            }
        }
        let (np, nm) = view.split_numerators(v);
        let mut out = Self {
            exp: view.exp,
            pairs,
            plus_rest: T::zero(),
            minus_rest: T::zero(),
        };
        let (s1, s2) = out.mixed(T::one(), T::one());
        let two = T::lit(2.0);
        out.plus_rest = np - two * s1;
        out.minus_rest = nm - two * s2;
        out
    }

    fn mixed(&self, tp: T, tm: T) -> (T, T) {
        let chunk = |c: &[(T, T, T)]| {
            c.iter().fold((T::zero(), T::zero()), |(s1, s2), &(w, a, b)| {
                let f = w * self.exp.phi(tp * a + tm * b);
                (s1 + f * a, s2 + f * b)
            })
        };
        self.reduce(chunk, (T::zero(), T::zero()), |x, y| (x.0 + y.0, x.1 + y.1))
    }

    fn reduce<R: Send + Copy>(
        &self,
        chunk: impl Fn(&[(T, T, T)]) -> R + Sync + Send,
        zero: R,
        add: impl Fn(R, R) -> R,
    ) -> R {
        const CHUNK: usize = 4096;
        let parts: Vec<R> = if self.pairs.len() >= 4 * CHUNK {
            self.pairs.par_chunks(CHUNK).map(&chunk).collect()
        } else {
            self.pairs.chunks(CHUNK).map(&chunk).collect()
        };
        parts.into_iter().fold(zero, add)
    }

    /// `(N+, N-)` of `t+ v+ + t- v-`.
    pub fn numerators(&self, tp: T, tm: T) -> (T, T) {
        let (s1, s2) = self.mixed(tp, tm);
        let two = T::lit(2.0);
        let p = self.exp.p();
        (
            tp.powf(p) * self.plus_rest + two * tp * s1,
            tm.powf(p) * self.minus_rest + two * tm * s2,
        )
    }

    /// Same values as [`PairView::nehari_system`].
    pub fn system(&self, tp: T, tm: T) -> NehariSystem<T> {
        let pm1 = self.exp.p() - T::one();
        let chunk = |c: &[(T, T, T)]| {
            c.iter().fold([T::zero(); 5], |mut acc, &(w, a, b)| {
                let d = tp * a + tm * b;
                let m = self.exp.abs_pow_m2(d);
                let f = w * m * d;
                let g = w * pm1 * m;
                acc[0] = acc[0] + f * a;
                acc[1] = acc[1] + f * b;
                acc[2] = acc[2] + g * a * a;
                acc[3] = acc[3] + g * a * b;
                acc[4] = acc[4] + g * b * b;
                acc
            })
        };
        let s = self.reduce(chunk, [T::zero(); 5], |mut x, y| {
            for (a, b) in x.iter_mut().zip(y) {
                *a = *a + b;
            }
            x
        });
        let two = T::lit(2.0);
        let p = self.exp.p();
        let rp = tp.powf(p - T::one()) * self.plus_rest;
        let rm = tm.powf(p - T::one()) * self.minus_rest;
        NehariSystem {
            plus: tp * rp + two * tp * s[0],
            minus: tm * rm + two * tm * s[1],
            jacobian: [
                [p * rp + two * s[0] + two * tp * s[2], two * tp * s[3]],
                [two * tm * s[3], p * rm + two * s[1] + two * tm * s[4]],
            ],
        }
    }
}

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub(crate) fn lp_sum<T: Real>(exp: &Exponent<T>, u: &[T]) -> T {
    u.iter().fold(T::zero(), |acc, &x| acc + exp.abs_pow(x))
}
