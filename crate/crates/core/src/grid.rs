//! Real values on the nodes of a window, zero everywhere else.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeDomain, ReflectionParam, Window};
use crate::pairs::Exponent;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction<T> {
    window: Window<T>,
    values: Vec<T>,
}

impl<T: Real> GridFunction<T> {
    pub fn new(window: Window<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != window.len() {
            return Err(Error::WindowMismatch(format!(
                "{} values for a window of {} nodes",
                values.len(),
                window.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("non-finite value at node {i}")));
        }
        Ok(Self { window, values })
    }

    pub fn zeros(window: Window<T>) -> Self {
        let values = vec![T::zero(); window.len()];
        Self { window, values }
    }

    /// Samples `f` at node coordinates.
    pub fn from_fn(window: Window<T>, f: impl Fn(&[T]) -> T) -> Self {
        let values = (0..window.len()).map(|i| f(&window.coords(i))).collect();
        Self { window, values }
    }

    /// Samples `f` on the nodes of `domain`, zero elsewhere.
    pub fn on_domain(domain: &LatticeDomain<T>, f: impl Fn(&[T]) -> T) -> Self {
        let window = domain.window().clone();
        let values = (0..window.len())
            .map(|i| if domain.mask()[i] { f(&window.coords(i)) } else { T::zero() })
            .collect();
        Self { window, values }
    }

    pub fn window(&self) -> &Window<T> {
        &self.window
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            window: self.window.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `u^+ = max(u, 0)`
    pub fn positive_part(&self) -> Self {
        self.map(|v| v.max(T::zero()))
    }

    /// `u^- = min(u, 0)`, so `u = u^+ + u^-`.
    pub fn negative_part(&self) -> Self {
        self.map(|v| v.min(T::zero()))
    }

    pub fn scaled(&self, c: T) -> Self {
        self.map(|v| c * v)
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == T::zero())
    }

    /// `h^N sum |u_i|^p`
    pub fn lp_norm_pow(&self, p: T) -> T {
        let exp = Exponent::new(p);
        self.window.cell_volume() * self.values.iter().fold(T::zero(), |acc, &v| acc + exp.abs_pow(v))
    }

    /// Zero-padded copy on a larger window.
    pub fn embed(&self, window: &Window<T>) -> Result<Self> {
        if window == &self.window {
            return Ok(self.clone());
        }
        if !window.contains_window(&self.window) {
            return Err(Error::WindowMismatch("target window does not contain the support window".into()));
        }
        let mut values = vec![T::zero(); window.len()];
        for (i, &v) in self.values.iter().enumerate() {
            let j = window.index_of(self.window.half_coords(i)).expect("contained window");
            values[j] = v;
        }
        Ok(Self { window: window.clone(), values })
    }

    /// `u o sigma_a` on the same window.
    pub fn reflected(&self, a: ReflectionParam) -> Result<Self> {
        if !self.window.is_closed_under(a) {
            return Err(Error::NotReflectionClosed(a.value(self.window.h()).as_f64()));
        }
        let values = (0..self.len())
            .map(|i| self.values[self.window.reflect(i, a).expect("closed window")])
            .collect();
        Ok(Self { window: self.window.clone(), values })
    }

    /// Nodes with a nonzero value lie inside `domain` (after embedding both
    /// in this function's window).
    pub fn supported_in(&self, domain: &LatticeDomain<T>) -> bool {
        (0..self.len()).all(|i| {
            self.values[i] == T::zero() || domain.contains(self.window.half_coords(i))
        })
    }
}

impl<T: Real> std::ops::Add for &GridFunction<T> {
    type Output = GridFunction<T>;

    fn add(self, rhs: Self) -> GridFunction<T> {
        assert_eq!(self.window, rhs.window, "adding grid functions on different windows");
        GridFunction {
            window: self.window.clone(),
            values: self.values.iter().zip(&rhs.values).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl<T: Real> std::ops::Sub for &GridFunction<T> {
    type Output = GridFunction<T>;

    fn sub(self, rhs: Self) -> GridFunction<T> {
        assert_eq!(self.window, rhs.window, "subtracting grid functions on different windows");
        GridFunction {
            window: self.window.clone(),
            values: self.values.iter().zip(&rhs.values).map(|(&a, &b)| a - b).collect(),
        }
    }
}
