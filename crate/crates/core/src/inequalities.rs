//! Pointwise inequalities: the four-point estimate for
//! `J(alpha, beta) = |alpha - beta|^{p-2} (alpha - beta) (alpha^+ - beta^+)`
//! and two elementary estimates for pairs of opposite sign.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{tanh_sinh, tanh_sinh_split};

fn phi(t: f64, p: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.abs().powf(p - 2.0) * t
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("exponent must be in (1,inf), got p = {p}")))
    }
}

pub fn four_point_j(alpha: f64, beta: f64, p: f64) -> f64 {
    phi(alpha - beta, p) * (alpha.max(0.0) - beta.max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourPointInput {
    pub a: f64,
    #[serde(rename = "A")]
    pub big_a: f64,
    pub b: f64,
    #[serde(rename = "B")]
    pub big_b: f64,
    pub p: f64,
}

impl FourPointInput {
    pub fn new(a: f64, big_a: f64, b: f64, big_b: f64, p: f64) -> Result<Self> {
        check_p(p)?;
        if !(a < big_a && b < big_b) {
            return Err(Error::Precondition(format!(
                "four-point input needs a < A and b < B, got a={a}, A={big_a}, b={b}, B={big_b}"
            )));
        }
        Ok(Self { a, big_a, b, big_b, p })
    }

    /// `J(A,B) - J(a,B) - J(A,b) + J(a,b)`
    pub fn expr(&self) -> f64 {
        let j = |x, y| four_point_j(x, y, self.p);
        j(self.big_a, self.big_b) - j(self.a, self.big_b) - j(self.big_a, self.b) + j(self.a, self.b)
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FourPointReport {
    pub expr: f64,
    pub lower: f64,
    pub upper: f64,
    /// `int_a^A int_b^B |alpha - beta|^{p-2} (theta(alpha) + theta(beta))`
    pub integral: f64,
    /// Tolerance used in the bound checks.
    pub tau: f64,
    pub equality: bool,
    /// `lower - tau <= expr <= min(upper + tau, tau)`
    pub bounds_hold: bool,
    /// The equality flag agrees with `A <= 0 and B <= 0`.
    pub equality_consistent: bool,
}

/// `int_lo^hi |alpha - beta|^{p-2} d beta` in closed form.
fn inner(alpha: f64, lo: f64, hi: f64, p: f64) -> f64 {
    let prim = |t: f64| t.signum() * t.abs().powf(p - 1.0) / (p - 1.0);
    prim(alpha - lo) - prim(alpha - hi)
}

/// `I(a, A, b, B)` by an analytic inner integral in `beta` and adaptive
/// tanh-sinh in `alpha`, split where the integrand has kinks.
pub fn four_point_integral(input: &FourPointInput, tol: f64) -> Result<f64> {
    let FourPointInput { a, big_a, b, big_b, p } = *input;
    let integrand = |alpha: f64, _: f64, _: f64| {
        let mut v = 0.0;
        if big_b > 0.0 {
            v += inner(alpha, b.max(0.0), big_b, p);
        }
        if alpha > 0.0 {
            v += inner(alpha, b, big_b, p);
        }
        v
    };
    tanh_sinh_split(integrand, a, big_a, &[0.0, b, big_b], tol)
        .map(|q| q.value)
        .map_err(|e| {
            Error::Quadrature(format!(
                "{e}; for p close to 1 pass a larger tolerance or split [a, A] further"
            ))
        })
}

pub fn four_point_check(input: &FourPointInput) -> Result<FourPointReport> {
    let expr = input.expr();
    let tau = 1e-8 * (expr.abs() + 1.0);
    let integral = four_point_integral(input, 1e-3 * tau)?;
    let p = input.p;
    let lower = -(p - 1.0) * (p - 1.0).max(1.0) * integral;
    let upper = -(p - 1.0) * (p - 1.0).min(1.0) * integral;
    let equality = expr == 0.0;
    let predicted = input.big_a <= 0.0 && input.big_b <= 0.0;
    Ok(FourPointReport {
        expr,
        lower,
        upper,
        integral,
        tau,
        equality,
        bounds_hold: lower - tau <= expr && expr <= (upper + tau).min(tau),
        equality_consistent: equality == predicted,
    })
}

/// `d^2 J / d alpha d beta` away from the diagonal.
pub fn four_point_mixed_derivative(alpha: f64, beta: f64, p: f64) -> f64 {
    mixed_derivative_with_gap(alpha, beta, alpha - beta, p)
}

/// Same, with `d = alpha - beta` supplied by the caller (exact near the diagonal).
fn mixed_derivative_with_gap(alpha: f64, beta: f64, d: f64, p: f64) -> f64 {
    if d == 0.0 {
        return 0.0;
    }
    let theta = |x: f64| if x > 0.0 { 1.0 } else { 0.0 };
    // (theta(alpha) alpha - theta(beta) beta) / (alpha - beta)
    let r = match (alpha > 0.0, beta > 0.0) {
        (true, true) => 1.0,
        (false, false) => 0.0,
        (true, false) => alpha / d,
        (false, true) => -beta / d,
    };
    -(p - 1.0) * d.abs().powf(p - 2.0) * ((p - 2.0) * r + theta(alpha) + theta(beta))
}

/// `int_a^A int_b^B d^2 J / d alpha d beta` by nested quadrature; equals
/// [`FourPointInput::expr`].
pub fn four_point_integral_representation(input: &FourPointInput, tol: f64) -> Result<f64> {
    let FourPointInput { a, big_a, b, big_b, p } = *input;
    let pieces = 4.0 * (big_a - a).max(1.0);
    let outer = |alpha: f64, _: f64, _: f64| {
        // Split [b, B] at 0 and at the diagonal; next to the diagonal the gap
        // alpha - beta is taken from the quadrature's endpoint distances.
        let mut knots = vec![b];
        knots.extend([0.0, alpha].into_iter().filter(|&x| x > b && x < big_b));
        knots.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
        knots.push(big_b);
        let mut total = 0.0;
        for win in knots.windows(2) {
            let (lo, hi) = (win[0], win[1]);
            let q = tanh_sinh(
                |beta, dlo, dhi| {
                    let d = if hi == alpha {
                        dhi
                    } else if lo == alpha {
                        -dlo
                    } else {
                        alpha - beta
                    };
                    mixed_derivative_with_gap(alpha, beta, d, p)
                },
                lo,
                hi,
                tol / pieces,
            );
            match q {
                Ok(q) => total += q.value,
                Err(_) => return f64::NAN,
            }
        }
        total
    };
    let q = tanh_sinh_split(outer, a, big_a, &[0.0, b, big_b], tol)?;
    if q.value.is_nan() {
        return Err(Error::Quadrature("inner integral did not converge".into()));
    }
    Ok(q.value)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct A3Report {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs` and `rhs` agree to rounding.
    pub equality: bool,
    pub holds: bool,
}

/// `|U-V|^{p-2}(U-V)(|alpha|^p U - |beta|^p V) >= |alpha U - beta V|^p` for `UV <= 0`.
pub fn pointwise_check_a3(u: f64, v: f64, alpha: f64, beta: f64, p: f64) -> Result<A3Report> {
    check_p(p)?;
    if u * v > 0.0 {
        return Err(Error::Precondition(format!("need U V <= 0, got U={u}, V={v}")));
    }
    if ((alpha * alpha + beta * beta) - 1.0).abs() > 1e-12 {
        return Err(Error::Precondition(format!(
            "(alpha, beta) must lie on the unit circle, got ({alpha}, {beta})"
        )));
    }
    let lhs = phi(u - v, p) * (alpha.abs().powf(p) * u - beta.abs().powf(p) * v);
    let rhs = (alpha * u - beta * v).abs().powf(p);
    let slack = 1e-12 * (u - v).abs().powf(p);
    Ok(A3Report {
        lhs,
        rhs,
        equality: (lhs - rhs).abs() <= slack,
        holds: lhs >= rhs - slack,
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct A4Report {
    pub lhs1: f64,
    pub rhs1: f64,
    pub lhs2: f64,
    pub rhs2: f64,
    pub ineq1_ok: bool,
    pub ineq2_ok: bool,
}

/// `phi(U-V) U >= phi(U-sV) U` and `phi(U-V)(-V) >= phi(sU-V)(-V)` for `UV <= 0`, `s in [0,1]`.
pub fn pointwise_check_a4(u: f64, v: f64, s: f64, p: f64) -> Result<A4Report> {
    check_p(p)?;
    if u * v > 0.0 {
        return Err(Error::Precondition(format!("need U V <= 0, got U={u}, V={v}")));
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Precondition(format!("need s in [0,1], got {s}")));
    }
    let lhs1 = phi(u - v, p) * u;
    let rhs1 = phi(u - s * v, p) * u;
    let lhs2 = phi(u - v, p) * -v;
    let rhs2 = phi(s * u - v, p) * -v;
    let slack = 1e-12 * (u - v).abs().powf(p);
    Ok(A4Report {
        lhs1,
        rhs1,
        lhs2,
        rhs2,
        ineq1_ok: lhs1 >= rhs1 - slack,
        ineq2_ok: lhs2 >= rhs2 - slack,
    })
}
