//! Cell-centred lattices, reflections about hyperplanes `x1 = a`, Steiner
//! symmetric masks and set polarization.
//!
//! Node coordinates are stored in half-units of the spacing: a node with
//! half-unit coordinate `m` sits at `m * h / 2`, and `m` is always odd. The
//! reflection `x1 -> 2a - x1` with `a = A * h / 2` then maps `m -> 2A - m`,
//! an exact integer permutation of nodes.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Rectangular block of lattice nodes (the support window of grid functions).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window<T> {
    h: T,
    dim: usize,
    lo: [i64; 2],
    shape: [usize; 2],
}

impl<T: Real> Window<T> {
    /// `lo` holds the half-unit coordinate of the first node along each axis.
    pub fn new(dim: usize, h: T, lo: [i64; 2], shape: [usize; 2]) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Parameter(format!("dimension must be 1 or 2, got {dim}")));
        }
        if !(h > T::zero()) || !h.is_finite() {
            return Err(Error::Parameter(format!("spacing must be positive, got {h}")));
        }
        for axis in 0..dim {
            if lo[axis].rem_euclid(2) != 1 {
                return Err(Error::Parameter(format!(
                    "node coordinates must be odd multiples of h/2 (axis {axis}, lo = {})",
                    lo[axis]
                )));
            }
            if shape[axis] == 0 {
                return Err(Error::DegenerateDomain(format!("axis {axis} has no nodes")));
            }
        }
        let (lo, shape) = if dim == 1 {
            ([lo[0], 0], [shape[0], 1])
        } else {
            (lo, shape)
        };
        Ok(Self { h, dim, lo, shape })
    }

    /// Window with `counts[d]` nodes per axis, symmetric about the origin.
    /// Counts must be even so that nodes sit at odd multiples of `h/2`.
    pub fn centered(dim: usize, h: T, counts: [usize; 2]) -> Result<Self> {
        let mut lo = [1i64, 0];
        for axis in 0..dim {
            let n = counts[axis];
            if n == 0 || n % 2 != 0 {
                return Err(Error::Parameter(format!(
                    "node count along axis {axis} must be even and positive, got {n}"
                )));
            }
            lo[axis] = -(n as i64 - 1);
        }
        Self::new(dim, h, lo, counts)
    }

    /// Window covering the cells of the box `[lo_d, hi_d]`; box edges must be
    /// multiples of `h`.
    pub fn from_box(dim: usize, h: T, bounds: &[[T; 2]]) -> Result<Self> {
        if bounds.len() != dim {
            return Err(Error::Parameter(format!(
                "box has {} axes, dimension is {dim}",
                bounds.len()
            )));
        }
        let mut lo = [1i64, 0];
        let mut shape = [1usize, 1];
        for axis in 0..dim {
            let [a, b] = bounds[axis];
            let ka = edge_index(a, h)?;
            let kb = edge_index(b, h)?;
            if kb <= ka {
                return Err(Error::DegenerateDomain(format!("empty box along axis {axis}")));
            }
            lo[axis] = 2 * ka + 1;
            shape[axis] = (kb - ka) as usize;
        }
        Self::new(dim, h, lo, shape)
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> [usize; 2] {
        self.shape
    }

    pub fn lo(&self) -> [i64; 2] {
        self.lo
    }

    /// Half-unit coordinate of the last node along `axis`.
    pub fn hi(&self, axis: usize) -> i64 {
        self.lo[axis] + 2 * (self.shape[axis] as i64 - 1)
    }

    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume element `h^N`.
    pub fn cell_volume(&self) -> T {
        self.h.powi(self.dim as i32)
    }

    pub fn index(&self, k1: usize, k2: usize) -> usize {
        k1 + self.shape[0] * k2
    }

    pub fn half_coords(&self, i: usize) -> [i64; 2] {
        let k1 = i % self.shape[0];
        let k2 = i / self.shape[0];
        [self.lo[0] + 2 * k1 as i64, self.lo[1] + 2 * k2 as i64]
    }

    pub fn index_of(&self, m: [i64; 2]) -> Option<usize> {
        let mut ks = [0usize; 2];
        for axis in 0..self.dim {
            let off = m[axis] - self.lo[axis];
            if off < 0 || off % 2 != 0 {
                return None;
            }
            let k = (off / 2) as usize;
            if k >= self.shape[axis] {
                return None;
            }
            ks[axis] = k;
        }
        if self.dim == 1 && m[1] != self.lo[1] {
            return None;
        }
        Some(self.index(ks[0], ks[1]))
    }

    /// Physical coordinates of node `i` (length `dim`).
    pub fn coords(&self, i: usize) -> Vec<T> {
        let m = self.half_coords(i);
        (0..self.dim).map(|d| half_to_length(m[d], self.h)).collect()
    }

    /// Image of node `i` under `sigma_a`, if it lies in the window.
    pub fn reflect(&self, i: usize, a: ReflectionParam) -> Option<usize> {
        let m = self.half_coords(i);
        self.index_of([a.reflect_half(m[0]), m[1]])
    }

    pub fn is_closed_under(&self, a: ReflectionParam) -> bool {
        self.lo[0] + self.hi(0) == 2 * a.half_units()
    }

    /// Smallest window containing this one and its mirror image under `sigma_a`.
    pub fn enlarged_for(&self, a: ReflectionParam) -> Self {
        let lo = self.lo[0].min(a.reflect_half(self.hi(0)));
        let hi = self.hi(0).max(a.reflect_half(self.lo[0]));
        let mut out = self.clone();
        out.lo[0] = lo;
        out.shape[0] = ((hi - lo) / 2 + 1) as usize;
        out
    }

    /// True when every node of `other` is a node of `self` (same spacing).
    pub fn contains_window(&self, other: &Window<T>) -> bool {
        self.dim == other.dim
            && self.h == other.h
            && (0..self.dim).all(|d| {
                other.lo[d] >= self.lo[d]
                    && other.hi(d) <= self.hi(d)
                    && (other.lo[d] - self.lo[d]) % 2 == 0
            })
    }

    /// Euclidean distance between two half-unit points, in length units.
    pub fn distance(&self, a: [i64; 2], b: [i64; 2]) -> T {
        let d0 = (a[0] - b[0]) as f64;
        let d1 = if self.dim == 2 { (a[1] - b[1]) as f64 } else { 0.0 };
        T::lit((d0 * d0 + d1 * d1).sqrt() * 0.5) * self.h
    }

    /// Face neighbours (in half-unit coordinates) of a node, inside or outside the window.
    pub fn neighbours(&self, m: [i64; 2]) -> Vec<[i64; 2]> {
        let mut out = vec![[m[0] - 2, m[1]], [m[0] + 2, m[1]]];
        if self.dim == 2 {
            out.push([m[0], m[1] - 2]);
            out.push([m[0], m[1] + 2]);
        }
        out
    }

    /// Cell-edge extent `[lo, hi]` of the window along `axis`, in length units.
    pub fn extent(&self, axis: usize) -> [T; 2] {
        [
            half_to_length(self.lo[axis] - 1, self.h),
            half_to_length(self.hi(axis) + 1, self.h),
        ]
    }
}

fn edge_index<T: Real>(x: T, h: T) -> Result<i64> {
    let r = x / h;
    let k = r.round();
    if (r - k).abs() > T::lit(1e-9) * (T::one() + r.abs()) {
        return Err(Error::Parameter(format!(
            "box edge {x} is not a multiple of the spacing {h}"
        )));
    }
    Ok(k.to_i64().expect("box edge in range"))
}

pub(crate) fn half_to_length<T: Real>(m: i64, h: T) -> T {
    T::lit(m as f64 * 0.5) * h
}

/// Reflection parameter `a`, restricted to integer multiples of `h/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReflectionParam {
    half_units: i64,
}

impl ReflectionParam {
    pub fn from_half_units(half_units: i64) -> Self {
        Self { half_units }
    }

    /// Fails unless `a` is a multiple of `h/2` (relative slack `1e-9`).
    pub fn new<T: Real>(a: T, h: T) -> Result<Self> {
        let r = T::lit(2.0) * a / h;
        let k = r.round();
        if (r - k).abs() > T::lit(1e-9) * (T::one() + r.abs()) {
            return Err(Error::Parameter(format!(
                "reflection parameter {a} is not a multiple of h/2 = {}",
                h / T::lit(2.0)
            )));
        }
        Ok(Self::from_half_units(k.to_i64().expect("a in range")))
    }

    pub fn half_units(self) -> i64 {
        self.half_units
    }

    pub fn value<T: Real>(self, h: T) -> T {
        half_to_length(self.half_units, h)
    }

    pub fn reflect_half(self, m: i64) -> i64 {
        2 * self.half_units - m
    }

    /// Position of a half-unit first coordinate relative to `H_a`.
    pub fn side(self, m: i64) -> Side {
        match m.cmp(&self.half_units) {
            std::cmp::Ordering::Greater => Side::Plus,
            std::cmp::Ordering::Equal => Side::OnPlane,
            std::cmp::Ordering::Less => Side::Minus,
        }
    }
}

/// Half-space membership: `Sigma_a^+` (`x1 > a`), `H_a`, `Sigma_a^-`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Plus,
    OnPlane,
    Minus,
}

/// Which polarization: `P` puts the larger value on `Sigma_a^-`, `Tilde` on `Sigma_a^+`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    #[default]
    #[serde(rename = "P")]
    P,
    #[serde(rename = "P~", alias = "tilde", alias = "Tilde")]
    Tilde,
}

/// Lattice domain: a window plus the node mask of `Omega`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeDomain<T> {
    window: Window<T>,
    mask: Vec<bool>,
}

/// Partition of the discrete boundary into left lid, right lid and the
/// cylindrical remainder (half-unit coordinates).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Lids {
    pub left: Vec<[i64; 2]>,
    pub right: Vec<[i64; 2]>,
    pub cylinder: Vec<[i64; 2]>,
}

impl<T: Real> LatticeDomain<T> {
    pub fn from_mask(window: Window<T>, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != window.len() {
            return Err(Error::WindowMismatch(format!(
                "mask has {} entries, window has {} nodes",
                mask.len(),
                window.len()
            )));
        }
        if !mask.iter().any(|&b| b) {
            return Err(Error::DegenerateDomain("mask is empty".into()));
        }
        Ok(Self { window, mask })
    }

    pub fn window(&self) -> &Window<T> {
        &self.window
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn h(&self) -> T {
        self.window.h
    }

    pub fn dim(&self) -> usize {
        self.window.dim
    }

    pub fn contains(&self, m: [i64; 2]) -> bool {
        self.window.index_of(m).map(|i| self.mask[i]).unwrap_or(false)
    }

    /// Window indices of the nodes of `Omega`, in window order.
    pub fn active_indices(&self) -> Vec<usize> {
        (0..self.mask.len()).filter(|&i| self.mask[i]).collect()
    }

    pub fn node_count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// Same mask, zero-padded into a larger window.
    pub fn embed(&self, window: &Window<T>) -> Result<Self> {
        if !window.contains_window(&self.window) {
            return Err(Error::WindowMismatch("target window does not contain the domain window".into()));
        }
        let mut mask = vec![false; window.len()];
        for (i, &b) in self.mask.iter().enumerate() {
            if b {
                let j = window
                    .index_of(self.window.half_coords(i))
                    .expect("contained window");
                mask[j] = true;
            }
        }
        Ok(Self { window: window.clone(), mask })
    }

    /// Symmetric under `sigma_0` and every lattice row parallel to `e1` is a
    /// contiguous run of mask nodes.
    pub fn check_steiner(&self) -> bool {
        let w = &self.window;
        let sigma0 = ReflectionParam::from_half_units(0);
        for i in 0..w.len() {
            if self.mask[i] {
                match w.reflect(i, sigma0) {
                    Some(j) if self.mask[j] => {}
                    _ => return false,
                }
            }
        }
        for k2 in 0..w.shape[1] {
            let row: Vec<bool> = (0..w.shape[0]).map(|k1| self.mask[w.index(k1, k2)]).collect();
            let starts = row
                .iter()
                .enumerate()
                .filter(|&(k, &b)| b && (k == 0 || !row[k - 1]))
                .count();
            if starts > 1 {
                return false;
            }
        }
        true
    }

    /// Node-wise set polarization `P_a Omega` (or `P~_a Omega`) on the window
    /// enlarged to be closed under `sigma_a`.
    pub fn polarize_mask(&self, a: ReflectionParam, variant: Variant) -> Self {
        let big = self.window.enlarged_for(a);
        let inner = self.embed(&big).expect("enlarged window contains the original");
        let mut mask = vec![false; big.len()];
        for (i, out) in mask.iter_mut().enumerate() {
            let here = inner.mask[i];
            let m = big.half_coords(i);
            let mirror = big.reflect(i, a).map(|j| inner.mask[j]).unwrap_or(false);
            *out = match (a.side(m[0]), variant) {
                (Side::OnPlane, _) => here,
                (Side::Plus, Variant::P) | (Side::Minus, Variant::Tilde) => here && mirror,
                (Side::Minus, Variant::P) | (Side::Plus, Variant::Tilde) => here || mirror,
            };
        }
        Self { window: big, mask }
    }

    /// Exterior nodes face-adjacent to a mask node (half-unit coordinates,
    /// possibly outside the window), sorted.
    pub fn discrete_boundary(&self) -> Vec<[i64; 2]> {
        let mut set = BTreeSet::new();
        for i in self.active_indices() {
            for nb in self.window.neighbours(self.window.half_coords(i)) {
                if !self.contains(nb) {
                    set.insert(nb);
                }
            }
        }
        set.into_iter().collect()
    }

    /// Row-scan lid decomposition: in every row meeting the mask, the exterior
    /// node just left of the run goes to `L`, the one just right to `R`; all
    /// other boundary nodes form `C`.
    pub fn boundary_lids(&self) -> Result<Lids> {
        if !self.check_steiner() {
            return Err(Error::Precondition(
                "lid decomposition requires a Steiner symmetric domain".into(),
            ));
        }
        let w = &self.window;
        let mut left = BTreeSet::new();
        let mut right = BTreeSet::new();
        for k2 in 0..w.shape[1] {
            let run: Vec<usize> = (0..w.shape[0])
                .map(|k1| w.index(k1, k2))
                .filter(|&i| self.mask[i])
                .collect();
            if let (Some(&first), Some(&last)) = (run.first(), run.last()) {
                let f = w.half_coords(first);
                let l = w.half_coords(last);
                left.insert([f[0] - 2, f[1]]);
                right.insert([l[0] + 2, l[1]]);
            }
        }
        let cylinder = self
            .discrete_boundary()
            .into_iter()
            .filter(|m| !left.contains(m) && !right.contains(m))
            .collect();
        Ok(Lids {
            left: left.into_iter().collect(),
            right: right.into_iter().collect(),
            cylinder,
        })
    }
}

/// Builds the mask `|x1| < half_width(x2)` on `window` (1D: `half_width(0)`).
pub fn make_steiner_domain<T: Real>(
    half_width: impl Fn(T) -> T,
    window: Window<T>,
) -> Result<LatticeDomain<T>> {
    let mut mask = Vec::with_capacity(window.len());
    for i in 0..window.len() {
        let x = window.coords(i);
        let cross = if window.dim == 2 { x[1] } else { T::zero() };
        let hw = half_width(cross);
        if hw < T::zero() || !hw.is_finite() {
            return Err(Error::Parameter(format!(
                "half width must be finite and nonnegative, got {hw} at x2 = {cross}"
            )));
        }
        mask.push(x[0].abs() < hw);
    }
    if !mask.iter().any(|&b| b) {
        return Err(Error::DegenerateDomain("degenerate domain: no node inside".into()));
    }
    Ok(LatticeDomain { window, mask })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize, h: f64) -> Window<f64> {
        Window::centered(1, h, [n, 1]).unwrap()
    }

    #[test]
    fn interval_mask_nodes() {
        let w = Window::from_box(1, 0.5, &[[-2.0, 2.0]]).unwrap();
        let d = make_steiner_domain(|_| 1.0, w).unwrap();
        let xs: Vec<f64> = d.active_indices().iter().map(|&i| d.window().coords(i)[0]).collect();
        assert_eq!(xs, vec![-0.75, -0.25, 0.25, 0.75]);
        assert!(d.check_steiner());
    }

    #[test]
    fn zero_half_width_is_degenerate() {
        let w = Window::from_box(1, 0.5, &[[-2.0, 2.0]]).unwrap();
        assert!(matches!(
            make_steiner_domain(|_| 0.0, w),
            Err(Error::DegenerateDomain(_))
        ));
    }

    #[test]
    fn disk_is_steiner() {
        let w = Window::from_box(2, 0.125, &[[-1.25, 1.25], [-1.25, 1.25]]).unwrap();
        let d = make_steiner_domain(|y: f64| (1.0 - y * y).max(0.0).sqrt(), w).unwrap();
        assert!(d.check_steiner());
        let lids = d.boundary_lids().unwrap();
        assert!(!lids.left.is_empty() && lids.left.len() == lids.right.len());
    }

    #[test]
    fn holes_and_asymmetry_break_steiner() {
        let w = line(8, 0.25);
        let mut mask = vec![false, true, true, true, true, true, true, false];
        let d = LatticeDomain::from_mask(w.clone(), mask.clone()).unwrap();
        assert!(d.check_steiner());
        mask[2] = false;
        mask[5] = false;
        let holed = LatticeDomain::from_mask(w.clone(), mask).unwrap();
        assert!(!holed.check_steiner());

        let w2 = Window::centered(2, 0.25, [4, 4]).unwrap();
        let mut l_shape = vec![false; 16];
        for k2 in 0..4 {
            for k1 in 0..4 {
                l_shape[w2.index(k1, k2)] = k1 < 2 || k2 < 2;
            }
        }
        let l = LatticeDomain::from_mask(w2, l_shape).unwrap();
        assert!(!l.check_steiner());
    }

    #[test]
    fn reflection_is_node_permutation() {
        let w = line(10, 0.1);
        for half in -3..=3 {
            let a = ReflectionParam::from_half_units(half);
            let big = w.enlarged_for(a);
            assert!(big.is_closed_under(a));
            for i in 0..big.len() {
                let j = big.reflect(i, a).unwrap();
                assert_eq!(big.reflect(j, a), Some(i));
            }
        }
    }

    #[test]
    fn reflection_param_validation() {
        assert_eq!(ReflectionParam::new(0.75, 0.5).unwrap().half_units(), 3);
        assert!(ReflectionParam::new(0.3, 0.5).is_err());
    }

    #[test]
    fn polarizing_symmetric_mask_at_zero_is_identity() {
        let w = Window::from_box(1, 0.25, &[[-2.0, 2.0]]).unwrap();
        let d = make_steiner_domain(|_| 1.0, w).unwrap();
        let a0 = ReflectionParam::from_half_units(0);
        assert_eq!(d.polarize_mask(a0, Variant::P), d);
        assert_eq!(d.polarize_mask(a0, Variant::Tilde), d);
    }

    #[test]
    fn polarizing_offset_interval_reflects_it() {
        let w = Window::from_box(1, 0.25, &[[-2.0, 2.0]]).unwrap();
        let mask: Vec<bool> = (0..w.len()).map(|i| (0.0..1.0).contains(&w.coords(i)[0])).collect();
        let d = LatticeDomain::from_mask(w.clone(), mask).unwrap();
        let pd = d.polarize_mask(ReflectionParam::from_half_units(0), Variant::P);
        for i in 0..pd.window().len() {
            let x = pd.window().coords(i)[0];
            assert_eq!(pd.mask()[i], (-1.0..0.0).contains(&x), "x = {x}");
        }
    }

    #[test]
    fn rectangle_lids() {
        let w = Window::<f64>::centered(2, 1.0, [6, 4]).unwrap();
        let mask: Vec<bool> = (0..w.len())
            .map(|i| {
                let x = w.coords(i);
                x[0].abs() < 2.0 && x[1].abs() < 1.0
            })
            .collect();
        let d = LatticeDomain::from_mask(w, mask).unwrap();
        let lids = d.boundary_lids().unwrap();
        assert_eq!(lids.left, vec![[-5, -1], [-5, 1]]);
        assert_eq!(lids.right, vec![[5, -1], [5, 1]]);
        let mut c = lids.cylinder.clone();
        c.sort();
        assert_eq!(c, vec![[-3, -3], [-3, 3], [-1, -3], [-1, 3], [1, -3], [1, 3], [3, -3], [3, 3]]);
    }

    #[test]
    fn interval_lids_have_empty_cylinder() {
        let w = line(8, 0.25);
        let d = make_steiner_domain(|_| 0.6, w).unwrap();
        let lids = d.boundary_lids().unwrap();
        assert_eq!(lids.left.len(), 1);
        assert_eq!(lids.right.len(), 1);
        assert!(lids.cylinder.is_empty());
        assert_eq!(d.discrete_boundary().len(), 2);
    }
}
