//! Interaction weights for the singular kernel `|x - y|^{-(N + ps)}`.
//!
//! Off-diagonal weights use the cell-centre (midpoint) rule
//! `w_ij = h^{2N} |x_i - x_j|^{-(N+ps)}`. The interaction of a node with the
//! unbounded complement of the window is collapsed into a tail weight
//! `kappa_i = h^N * int_{R^N \ window} |x_i - y|^{-(N+ps)} dy`.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lattice::{LatticeDomain, ReflectionParam, Side, Window};
use crate::pairs::{Exponent, PairView};
use crate::quadrature::tanh_sinh;
use crate::scalar::Real;

/// Pairwise weights and exterior tails on a window.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelWeights<T> {
    s: T,
    p: T,
    window: Window<T>,
    weights: Vec<T>,
    kappa: Vec<T>,
    tau_kappa: T,
}

/// Validates `0 < s < 1` and `p > 1`.
pub fn check_order_and_exponent<T: Real>(s: T, p: T) -> Result<()> {
    if !(s > T::zero() && s < T::one()) {
        return Err(Error::Parameter(format!("order must be in (0,1), got s = {s}")));
    }
    if !(p > T::one()) || !p.is_finite() {
        return Err(Error::Parameter(format!("exponent must be in (1,inf), got p = {p}")));
    }
    Ok(())
}

/// Builds midpoint weights and exterior tails for `window`.
pub fn build_kernel<T: Real>(window: &Window<T>, s: T, p: T) -> Result<KernelWeights<T>> {
    check_order_and_exponent(s, p)?;
    let n = window.len();
    let dim = window.dim();
    let h = window.h();
    let nps = T::from_usize_lossy(dim) + p * s;
    let scale = h.powi(2 * dim as i32);
    let [n1, n2] = window.shape();

    // The weight depends only on the integer offset, so tabulate it once;
    // mirrored pairs then get bit-identical weights.
    let mut table = vec![T::zero(); n1 * n2];
    for d2 in 0..n2 {
        for d1 in 0..n1 {
            if d1 == 0 && d2 == 0 {
                continue;
            }
            let r = T::lit(((d1 * d1 + d2 * d2) as f64).sqrt()) * h;
            table[d1 + n1 * d2] = scale * r.powf(-nps);
        }
    }
    let mut weights = vec![T::zero(); n * n];
    for i in 0..n {
        let (i1, i2) = (i % n1, i / n1);
        for j in 0..n {
            let (j1, j2) = (j % n1, j / n1);
            weights[i * n + j] = table[i1.abs_diff(j1) + n1 * i2.abs_diff(j2)];
        }
    }

    let (kappa, tau_kappa) = exterior_tails(window, (p * s).as_f64())?;
    Ok(KernelWeights {
        s,
        p,
        window: window.clone(),
        weights,
        kappa,
        tau_kappa,
    })
}

/// Tail weights, symmetrised about the window centre along `x1`.
fn exterior_tails<T: Real>(window: &Window<T>, ps: f64) -> Result<(Vec<T>, T)> {
    let n = window.len();
    let h = window.h().as_f64();
    let [x_lo, x_hi] = window.extent(0).map(|v| v.as_f64());
    let mut raw = vec![0.0f64; n];
    let mut err = 0.0f64;
    match window.dim() {
        1 => {
            for (i, k) in raw.iter_mut().enumerate() {
                let x = window.coords(i)[0].as_f64();
                *k = h * ((x_hi - x).powf(-ps) + (x - x_lo).powf(-ps)) / ps;
            }
        }
        _ => {
            let [y_lo, y_hi] = window.extent(1).map(|v| v.as_f64());
            for (i, k) in raw.iter_mut().enumerate() {
                let x = window.coords(i);
                let (x, y) = (x[0].as_f64(), x[1].as_f64());
                let faces = [x_hi - x, y_hi - y, x - x_lo, y - y_lo];
                let (val, e) = rectangle_exterior(faces, ps)?;
                *k = h * h * val;
                err += h * h * e;
            }
        }
    }
    // Exact mirror symmetry about the window centre.
    let centre = ReflectionParam::from_half_units((window.lo()[0] + window.hi(0)) / 2);
    let odd_centre = (window.lo()[0] + window.hi(0)) % 2 != 0;
    let kappa = (0..n)
        .map(|i| {
            let j = if odd_centre { None } else { window.reflect(i, centre) };
            match j {
                Some(j) => T::lit(0.5 * (raw[i] + raw[j])),
                None => T::lit(raw[i]),
            }
        })
        .collect();
    Ok((kappa, T::lit(err)))
}

/// `int_{R^2 \ rect} |x - y|^{-(2+ps)} dy` for a point at distances
/// `faces = [right, top, left, bottom]` from the rectangle sides.
///
/// In polar coordinates the radial integral is exact,
/// `int_rho^inf r^{-1-ps} dr = rho^{-ps} / ps`, leaving an angular integral
/// of `(cos(phi) / d)^{ps}` over the sector seen through each face.
fn rectangle_exterior(faces: [f64; 4], ps: f64) -> Result<(f64, f64)> {
    let mut total = 0.0;
    let mut err = 0.0;
    for f in 0..4 {
        let d = faces[f];
        let before = faces[(f + 3) % 4];
        let after = faces[(f + 1) % 4];
        let lo = -(before / d).atan();
        let hi = (after / d).atan();
        let q = tanh_sinh(
            |phi, _, _| (phi.cos() / d).powf(ps) / ps,
            lo,
            hi,
            1e-15 * d.powf(-ps).max(1.0),
        )?;
        total += q.value;
        err += q.error;
    }
    Ok((total, err))
}

impl<T: Real> KernelWeights<T> {
    /// Kernel from explicit parts; `weights` is dense row-major `n x n`.
    pub fn from_parts(window: Window<T>, s: T, p: T, weights: Vec<T>, kappa: Vec<T>) -> Result<Self> {
        check_order_and_exponent(s, p)?;
        let n = window.len();
        if weights.len() != n * n || kappa.len() != n {
            return Err(Error::WindowMismatch(format!(
                "expected {} weights and {n} tails, got {} and {}",
                n * n,
                weights.len(),
                kappa.len()
            )));
        }
        let mut weights = weights;
        for i in 0..n {
            weights[i * n + i] = T::zero();
        }
        Ok(Self {
            s,
            p,
            window,
            weights,
            kappa,
            tau_kappa: T::zero(),
        })
    }

    pub fn s(&self) -> T {
        self.s
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn window(&self) -> &Window<T> {
        &self.window
    }

    pub fn weight(&self, i: usize, j: usize) -> T {
        self.weights[i * self.window.len() + j]
    }

    pub fn kappa(&self) -> &[T] {
        &self.kappa
    }

    /// Recorded quadrature error bound of the tail weights (0 in 1D).
    pub fn tau_kappa(&self) -> T {
        self.tau_kappa
    }

    pub fn exponent(&self) -> Exponent<T> {
        Exponent::new(self.p)
    }

    pub fn view(&self) -> PairView<'_, T> {
        PairView {
            weights: &self.weights,
            tails: &self.kappa,
            exp: self.exponent(),
        }
    }

    /// Restriction to the nodes of `domain`. Nodes of the window outside the
    /// domain carry zero values, so their interaction is folded into the tails.
    pub fn restrict(&self, domain: &LatticeDomain<T>) -> Result<ActiveKernel<T>> {
        if domain.window() != &self.window {
            return Err(Error::WindowMismatch("domain and kernel windows differ".into()));
        }
        let n = self.window.len();
        let active = domain.active_indices();
        let m = active.len();
        let mut weights = vec![T::zero(); m * m];
        let mut tails = Vec::with_capacity(m);
        for (a, &i) in active.iter().enumerate() {
            let row = &self.weights[i * n..(i + 1) * n];
            for (b, &j) in active.iter().enumerate() {
                weights[a * m + b] = row[j];
            }
            let outside = (0..n)
                .filter(|&j| j != i && !domain.mask()[j])
                .fold(T::zero(), |acc, j| acc + row[j]);
            tails.push(self.kappa[i] + outside);
        }
        Ok(ActiveKernel {
            active,
            weights,
            tails,
            exp: self.exponent(),
            cell_volume: self.window.cell_volume(),
            window_len: n,
        })
    }

    /// Strict reflection monotonicity for every pair of nodes in `Sigma_a^+`:
    /// `w(x,y) = w(sx,sy) > w(sx,y) = w(x,sy)`, plus symmetry of `w`.
    pub fn check_condition(&self, a: ReflectionParam) -> bool {
        let w = &self.window;
        if !w.is_closed_under(a) {
            return false;
        }
        let n = w.len();
        for i in 0..n {
            for j in 0..i {
                if self.weight(i, j) != self.weight(j, i) {
                    return false;
                }
            }
        }
        let plus: Vec<(usize, usize)> = (0..n)
            .filter(|&i| a.side(w.half_coords(i)[0]) == Side::Plus)
            .map(|i| (i, w.reflect(i, a).expect("closed window")))
            .collect();
        for &(x, sx) in &plus {
            for &(y, sy) in &plus {
                if x == y {
                    continue;
                }
                let direct = self.weight(x, y);
                let cross = self.weight(sx, y);
                if direct != self.weight(sx, sy) || cross != self.weight(x, sy) || !(direct > cross) {
                    return false;
                }
            }
        }
        true
    }

    fn cache_key(&self) -> String {
        #[derive(Serialize)]
        struct Key<'a, T> {
            window: &'a Window<T>,
            s: f64,
            p: f64,
        }
        let json = serde_json::to_vec(&Key {
            window: &self.window,
            s: self.s.as_f64(),
            p: self.p.as_f64(),
        })
        .expect("key serialises");
        let digest = Sha256::digest(&json);
        digest.iter().take(12).map(|b| format!("{b:02x}")).collect()
    }

    /// Dumps the weights to `<dir>/kernel-<hash>.bin`, keyed by (window, s, p).
    pub fn save_cache(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        let path = dir.join(format!("kernel-{}.bin", self.cache_key()));
        let mut buf = Vec::with_capacity(16 + 8 * (self.weights.len() + self.kappa.len() + 1));
        buf.extend_from_slice(b"FLKW0001");
        buf.extend_from_slice(&(self.window.len() as u64).to_le_bytes());
        for x in self.weights.iter().chain(&self.kappa).chain(std::iter::once(&self.tau_kappa)) {
            buf.extend_from_slice(&x.as_f64().to_le_bytes());
        }
        let mut file =
            fs::File::create(&path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        file.write_all(&buf)
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        Ok(path)
    }

    /// Loads a cache written by [`save_cache`](Self::save_cache); `None` if absent.
    pub fn load_cached(dir: &Path, window: &Window<T>, s: T, p: T) -> Result<Option<Self>> {
        check_order_and_exponent(s, p)?;
        let probe = Self {
            s,
            p,
            window: window.clone(),
            weights: Vec::new(),
            kappa: Vec::new(),
            tau_kappa: T::zero(),
        };
        let path = dir.join(format!("kernel-{}.bin", probe.cache_key()));
        let mut file = match fs::File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(Error::io(format!("opening {}", path.display()), e)),
        };
        let mut buf = Vec::new();
        file.read_to_end(&mut buf)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let n = window.len();
        let expected = 16 + 8 * (n * n + n + 1);
        if buf.len() != expected || &buf[..8] != b"FLKW0001" {
            return Err(Error::io(
                format!("corrupt kernel cache {}", path.display()),
                std::io::Error::from(std::io::ErrorKind::InvalidData),
            ));
        }
        let mut vals = buf[16..]
            .chunks_exact(8)
            .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("8 bytes"))));
        let weights = vals.by_ref().take(n * n).collect();
        let kappa = vals.by_ref().take(n).collect();
        let tau_kappa = vals.next().expect("tau present");
        Ok(Some(Self {
            weights,
            kappa,
            tau_kappa,
            ..probe
        }))
    }
}

/// Kernel restricted to the active nodes of a domain.
#[derive(Clone, Debug)]
pub struct ActiveKernel<T> {
    active: Vec<usize>,
    weights: Vec<T>,
    tails: Vec<T>,
    exp: Exponent<T>,
    cell_volume: T,
    window_len: usize,
}

impl<T: Real> ActiveKernel<T> {
    pub fn view(&self) -> PairView<'_, T> {
        PairView {
            weights: &self.weights,
            tails: &self.tails,
            exp: self.exp,
        }
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn exponent(&self) -> Exponent<T> {
        self.exp
    }

    pub fn cell_volume(&self) -> T {
        self.cell_volume
    }

    /// Active values gathered from a full window vector.
    pub fn gather(&self, full: &[T]) -> Vec<T> {
        self.active.iter().map(|&i| full[i]).collect()
    }

    /// Full window vector (zeros off the domain) from active values.
    pub fn scatter(&self, values: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.window_len];
        for (&i, &v) in self.active.iter().zip(values) {
            out[i] = v;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_node_unit_weight() {
        // nodes at +-h/2, s = 1/2, p = 2 in 1D: w = h^2 * h^{-2} = 1
        let w = Window::<f64>::centered(1, 0.3, [2, 1]).unwrap();
        let k = build_kernel(&w, 0.5, 2.0).unwrap();
        assert!((k.weight(0, 1) - 1.0).abs() < 1e-14);
        assert_eq!(k.weight(0, 0), 0.0);
    }

    #[test]
    fn one_dimensional_tail_closed_form() {
        let w = Window::centered(1, 0.25, [8, 1]).unwrap();
        let (s, p) = (0.4, 2.5);
        let k = build_kernel(&w, s, p).unwrap();
        let r = 1.0;
        let ps: f64 = p * s;
        for i in 0..w.len() {
            let x = w.coords(i)[0];
            let expect = 0.25 * ((r - x).powf(-ps) + (r + x).powf(-ps)) / ps;
            assert!((k.kappa()[i] - expect).abs() < 1e-13 * expect);
        }
    }

    #[test]
    fn two_dimensional_tail_matches_brute_force() {
        // Compare one tail weight against a direct sum over a large lattice of cells
        // outside the window (slow but independent).
        let h = 0.5;
        let w = Window::centered(2, h, [4, 4]).unwrap();
        let (s, p) = (0.5f64, 2.0f64);
        let k = build_kernel(&w, s, p).unwrap();
        let nps = 2.0 + p * s;
        let i = w.index(1, 2);
        let x = w.coords(i);
        let fine = 0.05;
        let reach = 60.0;
        let mut brute = 0.0;
        let steps = (2.0 * reach / fine) as i64;
        for a in 0..steps {
            let y1 = -reach + (a as f64 + 0.5) * fine;
            for b in 0..steps {
                let y2 = -reach + (b as f64 + 0.5) * fine;
                if y1.abs() < 1.0 && y2.abs() < 1.0 {
                    continue;
                }
                let r = ((y1 - x[0]).powi(2) + (y2 - x[1]).powi(2)).sqrt();
                brute += fine * fine * r.powf(-nps);
            }
        }
        // tail beyond the square of half-width `reach`, bounded by the disk tail
        brute += 2.0 * std::f64::consts::PI * (reach - 1.0).powf(-p * s) / (p * s) * 0.9;
        let got = k.kappa()[i] / (h * h);
        assert!((got - brute).abs() < 0.02 * got, "got {got}, brute {brute}");
        assert!(k.tau_kappa() < 1e-10);
    }

    #[test]
    fn tails_grow_towards_the_edge_and_are_mirror_symmetric() {
        let w = Window::centered(2, 0.25, [8, 6]).unwrap();
        let k = build_kernel(&w, 0.3, 1.5).unwrap();
        let a0 = ReflectionParam::from_half_units(0);
        for i in 0..w.len() {
            assert!(k.kappa()[i] > 0.0);
            assert_eq!(k.kappa()[i], k.kappa()[w.reflect(i, a0).unwrap()]);
        }
        let row = |k1| k.kappa()[w.index(k1, 2)];
        assert!(row(0) > row(1) && row(1) > row(2) && row(2) > row(3));
    }

    #[test]
    fn parameter_errors() {
        let w = Window::centered(1, 0.25, [8, 1]).unwrap();
        assert!(build_kernel(&w, 1.0, 2.0).is_err());
        assert!(build_kernel(&w, 0.5, 1.0).is_err());
    }

    #[test]
    fn kernel_condition() {
        let base = Window::centered(1, 0.25, [8, 1]).unwrap();
        for half in [0i64, 1, 2, 5] {
            let a = ReflectionParam::from_half_units(half);
            let w = base.enlarged_for(a);
            let k = build_kernel(&w, 0.5, 2.0).unwrap();
            assert!(k.check_condition(a));
            assert!(!k.check_condition(ReflectionParam::from_half_units(half + 40)));

            let n = w.len();
            let flat = KernelWeights::from_parts(w.clone(), 0.5, 2.0, vec![1.0; n * n], vec![1.0; n]).unwrap();
            assert!(!flat.check_condition(a));

            let mut skew = k.weights.clone();
            skew[1] *= 1.5;
            let bad = KernelWeights::from_parts(w.clone(), 0.5, 2.0, skew, k.kappa.clone()).unwrap();
            assert!(!bad.check_condition(a));
        }
    }

    #[test]
    fn radial_monotonicity() {
        let w = Window::centered(2, 0.25, [6, 6]).unwrap();
        let k = build_kernel(&w, 0.6, 2.2).unwrap();
        let n = w.len();
        let mut pairs: Vec<(f64, f64)> = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    pairs.push((w.distance(w.half_coords(i), w.half_coords(j)), k.weight(i, j)));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for win in pairs.windows(2) {
            if win[1].0 > win[0].0 + 1e-12 {
                assert!(win[1].1 < win[0].1);
            }
        }
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let w = Window::centered(1, 0.25, [6, 1]).unwrap();
        let k = build_kernel(&w, 0.5, 2.0).unwrap();
        assert!(KernelWeights::load_cached(dir.path(), &w, 0.5, 2.0).unwrap().is_none());
        k.save_cache(dir.path()).unwrap();
        let back = KernelWeights::load_cached(dir.path(), &w, 0.5, 2.0).unwrap().unwrap();
        assert_eq!(back, k);
        assert!(KernelWeights::load_cached(dir.path(), &w, 0.5, 3.0).unwrap().is_none());
    }
}
