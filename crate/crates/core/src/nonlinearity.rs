//! Nonlinearities `f` with primitive `F`: the resonant term `lambda |z|^{p-2} z`,
//! the power `|z|^{q-2} z` with `q > p`, and user supplied evaluators.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Real;

type Eval<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

#[derive(Clone)]
pub enum NonlinearityKind<T> {
    Resonant { lambda: T },
    Power { q: T },
    Custom { f: Eval<T>, primitive: Eval<T>, derivative: Option<Eval<T>> },
}

impl<T: fmt::Display> fmt::Debug for NonlinearityKind<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Resonant { lambda } => write!(f, "Resonant {{ lambda: {lambda} }}"),
            Self::Power { q } => write!(f, "Power {{ q: {q} }}"),
            Self::Custom { .. } => f.write_str("Custom"),
        }
    }
}

#[derive(Clone)]
pub struct Nonlinearity<T> {
    p: T,
    kind: NonlinearityKind<T>,
}

impl<T: fmt::Display> fmt::Debug for Nonlinearity<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("p", &format_args!("{}", self.p))
            .field("kind", &self.kind)
            .finish()
    }
}

fn signed_pow<T: Real>(z: T, e: T) -> T {
    // |z|^{e-1} z, zero at the origin
    if z == T::zero() {
        T::zero()
    } else {
        z.abs().powf(e - T::one()) * z.signum()
    }
}

impl<T: Real> Nonlinearity<T> {
    pub fn resonant(p: T, lambda: T) -> Result<Self> {
        check_p(p)?;
        Ok(Self { p, kind: NonlinearityKind::Resonant { lambda } })
    }

    /// `f(z) = |z|^{q-2} z`; requires `q > p`.
    pub fn power(p: T, q: T) -> Result<Self> {
        check_p(p)?;
        if !(q > p) {
            return Err(Error::Parameter(format!("superhomogeneity violated: q = {q} <= p = {p}")));
        }
        Ok(Self { p, kind: NonlinearityKind::Power { q } })
    }

    /// Custom `f` and `F`. The ratio `f(z) / (|z|^{p-2} z)` must decrease on
    /// `(-inf, 0)` and increase on `(0, inf)`; this is sampled on a log grid.
    pub fn custom(
        p: T,
        f: impl Fn(T) -> T + Send + Sync + 'static,
        primitive: impl Fn(T) -> T + Send + Sync + 'static,
        derivative: Option<Eval<T>>,
    ) -> Result<Self> {
        check_p(p)?;
        let nl = Self {
            p,
            kind: NonlinearityKind::Custom {
                f: Arc::new(f),
                primitive: Arc::new(primitive),
                derivative,
            },
        };
        nl.validate_sampled()?;
        Ok(nl)
    }

    fn validate_sampled(&self) -> Result<()> {
        let ratio = |z: T| self.f(z) / signed_pow(z, self.p);
        for side in [T::one(), -T::one()] {
            let mut prev: Option<T> = None;
            for k in -60..=60 {
                let z = side * T::lit(10f64.powf(k as f64 / 10.0));
                let r = ratio(z);
                if !r.is_finite() {
                    return Err(Error::Parameter(format!("f(z) is not finite at z = {z}")));
                }
                // |z| grows along the sweep on both sides
                if let Some(prev) = prev {
                    if r < prev {
                        return Err(Error::Parameter(format!(
                            "f(z)/|z|^(p-2)z is not monotone near z = {z}"
                        )));
                    }
                }
                prev = Some(r);
                if self.primitive(z) < T::zero() {
                    return Err(Error::Parameter(format!("F(z) < 0 at z = {z}")));
                }
            }
        }
        Ok(())
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn kind(&self) -> &NonlinearityKind<T> {
        &self.kind
    }

    /// Power and validated custom nonlinearities.
    pub fn is_superhomogeneous(&self) -> bool {
        !matches!(self.kind, NonlinearityKind::Resonant { .. })
    }

    pub fn f(&self, z: T) -> T {
        match &self.kind {
            NonlinearityKind::Resonant { lambda } => *lambda * signed_pow(z, self.p),
            NonlinearityKind::Power { q } => signed_pow(z, *q),
            NonlinearityKind::Custom { f, .. } => f(z),
        }
    }

    /// `F(z) = int_0^z f`
    pub fn primitive(&self, z: T) -> T {
        match &self.kind {
            NonlinearityKind::Resonant { lambda } => *lambda * z.abs().powf(self.p) / self.p,
            NonlinearityKind::Power { q } => z.abs().powf(*q) / *q,
            NonlinearityKind::Custom { primitive, .. } => primitive(z),
        }
    }

    /// `f'(z)` for `z != 0` (central difference for custom `f` without a derivative).
    pub fn derivative(&self, z: T) -> T {
        match &self.kind {
            NonlinearityKind::Resonant { lambda } => {
                *lambda * (self.p - T::one()) * z.abs().powf(self.p - T::lit(2.0))
            }
            NonlinearityKind::Power { q } => (*q - T::one()) * z.abs().powf(*q - T::lit(2.0)),
            NonlinearityKind::Custom { f, derivative, .. } => match derivative {
                Some(d) => d(z),
                None => {
                    let step = T::lit(1e-6) * (T::one() + z.abs());
                    (f(z + step) - f(z - step)) / (step + step)
                }
            },
        }
    }

    /// `G(z) = f(z) z - p F(z)`
    pub fn g(&self, z: T) -> T {
        self.f(z) * z - self.p * self.primitive(z)
    }
}

fn check_p<T: Real>(p: T) -> Result<()> {
    if p > T::one() && p.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("exponent must be in (1,inf), got p = {p}")))
    }
}
