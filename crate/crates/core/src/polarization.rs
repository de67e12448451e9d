//! Two-point rearrangement of grid functions about the hyperplane `x1 = a`.

use serde::{Deserialize, Serialize};

use crate::energy::{dpairing, gagliardo_p, on_kernel_window};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::kernel::KernelWeights;
use crate::lattice::{ReflectionParam, Side, Variant};
use crate::nonlinearity::Nonlinearity;
use crate::scalar::Real;

/// `P_a u` (min on `Sigma_a^+`, max on `Sigma_a^-`) or `P~_a u` (swapped).
pub fn polarize<T: Real>(u: &GridFunction<T>, a: ReflectionParam, variant: Variant) -> Result<GridFunction<T>> {
    let w = u.window();
    if !w.is_closed_under(a) {
        return Err(Error::NotReflectionClosed(a.value(w.h()).as_f64()));
    }
    let vals = u.values();
    let out = (0..w.len())
        .map(|i| {
            let here = vals[i];
            let there = vals[w.reflect(i, a).expect("closed window")];
            match (a.side(w.half_coords(i)[0]), variant) {
                (Side::OnPlane, _) => here,
                (Side::Plus, Variant::P) | (Side::Minus, Variant::Tilde) => here.min(there),
                (Side::Minus, Variant::P) | (Side::Plus, Variant::Tilde) => here.max(there),
            }
        })
        .collect();
    GridFunction::new(w.clone(), out)
}

/// Sum of a function of the values before and after polarization.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SumComparison {
    pub name: String,
    pub before: f64,
    pub after: f64,
    pub relative_gap: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IdentityReport {
    /// Nodes where `(P u)^+ + (P u)^- != P u^+ + P u^-`.
    pub expansion_violations: Vec<usize>,
    /// Nodes where `P u != P u^+ - P~(-u^-)`.
    pub difference_violations: Vec<usize>,
    pub sums: Vec<SumComparison>,
}

impl IdentityReport {
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.expansion_violations.is_empty()
            && self.difference_violations.is_empty()
            && self.sums.iter().all(|s| s.relative_gap <= rel_tol)
    }
}

fn relative_gap(x: f64, y: f64) -> f64 {
    let scale = x.abs().max(y.abs());
    if scale == 0.0 {
        0.0
    } else {
        (x - y).abs() / scale
    }
}

/// Node-wise identities between `P_a` applied to `u` and to `u^+`, `u^-`,
/// and the rearrangement invariance of `h^N`-weighted sums of `u^+`, `u^-`.
pub fn polarization_identities_check<T: Real>(
    u: &GridFunction<T>,
    a: ReflectionParam,
    nl: &Nonlinearity<T>,
) -> Result<IdentityReport> {
    let pu = polarize(u, a, Variant::P)?;
    let pu_plus = polarize(&u.positive_part(), a, Variant::P)?;
    let pu_minus = polarize(&u.negative_part(), a, Variant::P)?;
    let tilde = polarize(&u.negative_part().scaled(-T::one()), a, Variant::Tilde)?;
    let lhs = &pu.positive_part() + &pu.negative_part();
    let rhs = &pu_plus + &pu_minus;
    let diff = &pu_plus - &tilde;
    let mismatches = |x: &GridFunction<T>, y: &GridFunction<T>| -> Vec<usize> {
        (0..x.len()).filter(|&i| x.values()[i] != y.values()[i]).collect()
    };

    let vol = u.window().cell_volume();
    let p = nl.p();
    let sums_of = |v: &GridFunction<T>| -> [T; 3] {
        let mut acc = [T::zero(); 3];
        for &z in v.values() {
            acc[0] = acc[0] + z.abs().powf(p);
            acc[1] = acc[1] + nl.primitive(z);
            acc[2] = acc[2] + nl.f(z) * z;
        }
        acc.map(|s| vol * s)
    };
    let names = ["lp_norm", "primitive_sum", "f_times_value_sum"];
    let mut sums = Vec::new();
    for (part, before, after) in [
        ("plus", u.positive_part(), pu.positive_part()),
        ("minus", u.negative_part(), pu.negative_part()),
    ] {
        let b = sums_of(&before);
        let c = sums_of(&after);
        for k in 0..3 {
            sums.push(SumComparison {
                name: format!("{}_{part}", names[k]),
                before: b[k].as_f64(),
                after: c[k].as_f64(),
                relative_gap: relative_gap(b[k].as_f64(), c[k].as_f64()),
            });
        }
    }
    Ok(IdentityReport {
        expansion_violations: mismatches(&lhs, &rhs),
        difference_violations: mismatches(&pu, &diff),
        sums,
    })
}

/// Decrease of the split pairings and of the seminorm under `P_a`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Deficits {
    pub deficit_plus: f64,
    pub deficit_minus: f64,
    pub seminorm_deficit: f64,
    /// Slack allowed below zero.
    pub eps_num: f64,
    /// Threshold for treating a deficit as an equality.
    pub eps_eq: f64,
}

impl Deficits {
    /// `|seminorm_deficit - (deficit_plus + deficit_minus) / p|`
    pub fn summation_gap(&self, p: f64) -> f64 {
        (self.seminorm_deficit - (self.deficit_plus + self.deficit_minus) / p).abs()
    }

    /// Summation identity to `rel` relative accuracy, with a floor at the
    /// rounding level of the seminorm itself.
    pub fn summation_consistent(&self, p: f64, rel: f64) -> bool {
        self.summation_gap(p) <= rel * self.seminorm_deficit.abs() + 1e-3 * self.eps_eq
    }

    pub fn nonnegative(&self) -> bool {
        self.deficit_plus >= -self.eps_num
            && self.deficit_minus >= -self.eps_num
            && self.seminorm_deficit >= -self.eps_num
    }
}

pub fn polarization_pairing_deficit<T: Real>(
    u: &GridFunction<T>,
    a: ReflectionParam,
    k: &KernelWeights<T>,
) -> Result<Deficits> {
    let u = on_kernel_window(u, k)?;
    let u = u.as_ref();
    if !k.window().is_closed_under(a) {
        return Err(Error::NotReflectionClosed(a.value(k.window().h()).as_f64()));
    }
    if !k.check_condition(a) {
        return Err(Error::KernelCondition(a.value(k.window().h()).as_f64()));
    }
    let p = k.p();
    let pu = polarize(u, a, Variant::P)?;
    let up = u.positive_part();
    let um = u.negative_part();
    let d_plus = dpairing(u, &up, k)? - dpairing(&pu, &polarize(&up, a, Variant::P)?, k)?;
    let d_minus = dpairing(u, &um, k)? - dpairing(&pu, &polarize(&um, a, Variant::P)?, k)?;
    let g = gagliardo_p(u, k)?;
    let d_norm = g - gagliardo_p(&pu, k)?;
    let scale = (p * g).as_f64();
    let norm = u.max_abs().powf(p).as_f64();
    Ok(Deficits {
        deficit_plus: d_plus.as_f64(),
        deficit_minus: d_minus.as_f64(),
        seminorm_deficit: d_norm.as_f64(),
        eps_num: 1e-10 * scale + 2.0 * k.tau_kappa().as_f64() * norm,
        eps_eq: 1e-10 * scale,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EqualityCase {
    /// `u = P_a u`
    CaseI,
    /// `u o sigma_a = P_a u`
    CaseIi,
    /// equality in the plus pairing with `u^+` symmetric
    CaseIiiPlus,
    /// equality in the minus pairing with `u^-` symmetric
    CaseIiiMinus,
    Strict,
}

/// First matching case in the order i, ii, iii+, iii-, strict.
pub fn equality_case<T: Real>(
    u: &GridFunction<T>,
    a: ReflectionParam,
    k: &KernelWeights<T>,
) -> Result<(EqualityCase, Deficits)> {
    let u = on_kernel_window(u, k)?;
    let u = u.as_ref();
    let d = polarization_pairing_deficit(u, a, k)?;
    let pu = polarize(u, a, Variant::P)?;
    let reflected = u.reflected(a)?;
    let case = if u == &pu {
        EqualityCase::CaseI
    } else if reflected == pu {
        EqualityCase::CaseIi
    } else if d.deficit_plus <= d.eps_eq && u.positive_part() == reflected.positive_part() {
        EqualityCase::CaseIiiPlus
    } else if d.deficit_minus <= d.eps_eq && u.negative_part() == reflected.negative_part() {
        EqualityCase::CaseIiiMinus
    } else {
        EqualityCase::Strict
    };
    Ok((case, d))
}
