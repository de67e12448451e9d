//! Checks against independently computed reference values.

mod common;

use fraclap::eigensolver::{first_eigenpair, rayleigh_curve, second_eigen_mu2, EigenOptions};
use fraclap::energy::{dpairing, gagliardo_p};
use fraclap::grid::GridFunction;
use fraclap::kernel::build_kernel;
use fraclap::lattice::{make_steiner_domain, LatticeDomain, ReflectionParam, Variant, Window};
use fraclap::nehari::{lens_minimize, lens_verify, nehari_scale, NehariOptions};
use fraclap::nonlinearity::Nonlinearity;
use fraclap::payne::{run_payne_experiment, PayneOptions};
use fraclap::polarization::polarize;

/// Pairwise sum straight from the definition: ordered pairs of distinct
/// window nodes plus twice the exterior tail, using the library weights only
/// as a table.
fn brute_seminorm(u: &GridFunction<f64>, k: &fraclap::kernel::KernelWeights<f64>) -> f64 {
    let n = u.len();
    let p = k.p();
    let v = u.values();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += k.weight(i, j) * (v[i] - v[j]).abs().powf(p);
            }
        }
        sum += 2.0 * k.kappa()[i] * v[i].abs().powf(p);
    }
    sum
}

#[test]
fn one_dimensional_weights_follow_the_cell_formula() {
    // w(i,j) = h^2 |x_i - x_j|^{-(1 + ps)} for every pair of nodes
    let h = 0.25;
    let w = Window::<f64>::centered(1, h, [8, 1]).unwrap();
    for (s, p) in [(0.5, 2.0), (0.3, 1.5), (0.8, 3.0)] {
        let k = build_kernel(&w, s, p).unwrap();
        for i in 0..w.len() {
            for j in 0..w.len() {
                if i == j {
                    continue;
                }
                let d = (w.coords(i)[0] - w.coords(j)[0]).abs();
                let expected = h * h * d.powf(-(1.0 + p * s));
                assert!((k.weight(i, j) - expected).abs() <= 1e-14 * expected, "s={s} p={p} ({i},{j})");
            }
        }
    }
}

#[test]
fn seminorm_matches_direct_summation() {
    let w = Window::<f64>::centered(2, 0.25, [6, 4]).unwrap();
    for p in [1.5, 2.0, 3.0] {
        let k = build_kernel(&w, 0.4, p).unwrap();
        let u = GridFunction::from_fn(w.clone(), |x| (2.0 * x[0]).sin() + x[1] * x[1] - 0.3);
        let g = gagliardo_p(&u, &k).unwrap();
        let b = brute_seminorm(&u, &k);
        assert!((g - b).abs() <= 1e-12 * b, "p={p}: {g} vs {b}");
    }
}

#[test]
fn pairing_with_positive_part_dominates() {
    let w = Window::<f64>::centered(1, 1.0 / 16.0, [32, 1]).unwrap();
    for p in [1.5, 2.0, 3.0] {
        let k = build_kernel(&w, 0.5, p).unwrap();
        for shift in [0.0, 0.3, -0.45] {
            let u = GridFunction::from_fn(w.clone(), |x| (3.0 * x[0]).sin() + shift);
            let up = u.positive_part();
            let lhs = dpairing(&u, &up, &k).unwrap();
            let rhs = p * gagliardo_p(&up, &k).unwrap();
            assert!(lhs >= rhs * (1.0 - 1e-12), "p={p} shift={shift}: {lhs} < {rhs}");
        }
    }
}

#[test]
fn first_eigenvalue_converges_under_refinement() {
    // Richardson-style: successive differences shrink as h halves
    let mut values = Vec::new();
    for n in [16, 32, 64] {
        let d = common::interval(n);
        let k = build_kernel(d.window(), 0.5, 2.0).unwrap();
        let (dense, _) = common::dense_spectrum(&d, &k);
        let r = first_eigenpair(&d, &k, &EigenOptions::default()).unwrap();
        assert!((r.lambda1 - dense[0]).abs() <= 1e-8 * dense[0]);
        values.push(r.lambda1);
    }
    let d1 = (values[1] - values[0]).abs();
    let d2 = (values[2] - values[1]).abs();
    assert!(d2 < d1, "differences {d1} then {d2} for {values:?}");
}

#[test]
fn rayleigh_curve_at_the_minimizer() {
    let d = common::interval(32);
    for p in [1.5, 2.0, 3.0] {
        let k = build_kernel(d.window(), 0.5, p).unwrap();
        let r = second_eigen_mu2(&d, &k, &EigenOptions::default()).unwrap();
        assert!(r.mu2 >= r.lambda1);
        let curve = rayleigh_curve(&r.u2, &k, 360).unwrap();
        let max = curve.iter().map(|c| c.value).fold(f64::MIN, f64::max);
        assert!(max >= r.mu2 * (1.0 - 1e-9), "p={p}: max {max} below mu2 {}", r.mu2);
        // (alpha, beta) = (1, 0) is the quotient of v+ alone
        assert_eq!((curve[0].alpha, curve[0].beta), (1.0, 0.0));
        assert!(curve[0].value >= r.lambda1 * (1.0 - 1e-9));
    }
}

#[test]
fn lens_on_the_interval_has_one_sign_change() {
    let d = common::interval(32);
    for p in [1.5, 2.0, 3.0] {
        let k = build_kernel(d.window(), 0.5, p).unwrap();
        let nl = Nonlinearity::power(p, p + 1.0).unwrap();
        let r = lens_minimize(&d, &k, &nl, &NehariOptions::default()).unwrap();
        let tau = 1e-8 * r.u.max_abs();
        let signs: Vec<f64> = r.u.values().iter().filter(|v| v.abs() > tau).map(|v| v.signum()).collect();
        let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(changes, 1, "p={p}");
        assert!(r.outcomes.iter().all(|o| o.error.is_none()), "{:?}", r.outcomes);
    }
}

#[test]
fn polarized_lens_is_equivalent_and_doubling_is_not() {
    let d = common::interval(32);
    let p = 2.0;
    let k = build_kernel(d.window(), 0.5, p).unwrap();
    let nl = Nonlinearity::power(p, 3.0).unwrap();
    let r = lens_minimize(&d, &k, &nl, &NehariOptions::default()).unwrap();
    let pu = polarize(&r.u, ReflectionParam::from_half_units(0), Variant::P).unwrap();
    let c = lens_verify(&pu, &r, &nl, &k, 1e-9).unwrap();
    assert!(c.lens_equivalent, "{c:?}");
    let doubled = r.u.scaled(2.0);
    let c = lens_verify(&doubled, &r, &nl, &k, 1e-9).unwrap();
    assert!(!c.lens_equivalent);
    assert!(c.failed.iter().any(|f| f.starts_with("pairing")), "{c:?}");
}

/// Root of `t^p A = t^q B` for the part taken alone.
fn decoupled(part: &GridFunction<f64>, k: &fraclap::kernel::KernelWeights<f64>, q: f64) -> f64 {
    let a = gagliardo_p(part, k).unwrap();
    let b = part.lp_norm_pow(q);
    (a / b).powf(1.0 / (q - k.p()))
}

#[test]
fn far_apart_parts_scale_almost_independently() {
    let p = 2.0;
    let q = 3.0;
    let mut gaps = Vec::new();
    for n in [32, 64, 128] {
        // bumps of fixed width at the two ends of a growing interval
        let h = 0.125;
        let w = Window::centered(1, h, [n, 1]).unwrap();
        let half = n as f64 * h / 2.0;
        let domain = LatticeDomain::from_mask(w.clone(), vec![true; n]).unwrap();
        let k = build_kernel(&w, 0.5, p).unwrap();
        let nl = Nonlinearity::power(p, q).unwrap();
        let bump = |c: f64| move |x: &[f64]| (1.0 - (x[0] - c).powi(2)).max(0.0);
        let plus = GridFunction::on_domain(&domain, bump(-half + 1.0));
        let minus = GridFunction::on_domain(&domain, bump(half - 1.0)).scaled(-0.5);
        let v = &plus + &minus;
        let (tp, tm) = nehari_scale(&v, &nl, &k).unwrap();
        let (dp, dm) = (decoupled(&plus, &k, q), decoupled(&minus, &k, q));
        gaps.push(((tp - dp).abs() / dp).max((tm - dm).abs() / dm));
    }
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
    assert!(gaps[2] < 1e-2, "{gaps:?}");
}

#[test]
fn disk_lids_match_a_row_scan() {
    let w = Window::from_box(2, 0.125, &[[-1.25, 1.25], [-1.25, 1.25]]).unwrap();
    let d = make_steiner_domain(|y: f64| (1.0 - y * y).max(0.0).sqrt(), w.clone()).unwrap();
    let lids = d.boundary_lids().unwrap();
    let mut left = Vec::new();
    let mut right = Vec::new();
    let [nx, ny] = w.shape();
    for row in 0..ny {
        let inside: Vec<usize> = (0..nx).filter(|&c| d.mask()[w.index(c, row)]).collect();
        if let (Some(&first), Some(&last)) = (inside.first(), inside.last()) {
            left.push(w.half_coords(w.index(first - 1, row)));
            right.push(w.half_coords(w.index(last + 1, row)));
        }
    }
    let sorted = |mut v: Vec<[i64; 2]>| {
        v.sort();
        v
    };
    assert_eq!(sorted(lids.left.clone()), sorted(left));
    assert_eq!(sorted(lids.right.clone()), sorted(right));
    let all: usize = d.discrete_boundary().len();
    assert_eq!(lids.left.len() + lids.right.len() + lids.cylinder.len(), all);
}

#[test]
fn interval_eigenfunction_meets_opposite_lids() {
    let d = common::interval(64);
    let k = build_kernel(d.window(), 0.5, 2.0).unwrap();
    let r = run_payne_experiment(&d, &k, &PayneOptions::default()).unwrap();
    assert!(r.touches_plus && r.touches_minus);
    assert!(r.antisymmetry_gap <= 1e-6);
    // an antisymmetric u has its positive and negative supports on opposite
    // halves, so exactly one of the two lid pairings can hold
    assert!(r.lid_property_1 ^ r.lid_property_2, "{:?} {:?}", r.lids_plus, r.lids_minus);
    assert!(r.sweep.iter().all(|e| e.nonnegative));
}
