//! Experiment configuration read from JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::eigensolver::EigenOptions;
use crate::error::{Error, Result};
use crate::lattice::{make_steiner_domain, LatticeDomain, Window};
use crate::nehari::NehariOptions;
use crate::payne::{PayneOptions, SolutionKind};

/// Which solution an experiment computes.
pub type Mode = SolutionKind;

/// Cross-section profile of a Steiner symmetric domain: the mask is
/// `|x1| < half_width(x2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Interval { half_width: f64 },
    Disk { radius: f64 },
    /// Rectangle of half length `half_length` capped by half disks of radius `radius`.
    Stadium { radius: f64, half_length: f64 },
    /// One half width per lattice row, bottom to top (a single entry in 1D).
    Table { half_widths: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub dim: usize,
    pub h: f64,
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    pub shape: Shape,
}

impl DomainSpec {
    pub fn window(&self) -> Result<Window<f64>> {
        Window::from_box(self.dim, self.h, &self.bounds)
    }

    pub fn build(&self) -> Result<LatticeDomain<f64>> {
        let window = self.window()?;
        let h = self.h;
        let lo = self.bounds.get(1).map_or(0.0, |b| b[0]);
        let rows = window.shape()[1];
        match &self.shape {
            Shape::Interval { half_width } => make_steiner_domain(|_| *half_width, window),
            Shape::Disk { radius } => make_steiner_domain(|y: f64| (radius * radius - y * y).max(0.0).sqrt(), window),
            Shape::Stadium { radius, half_length } => make_steiner_domain(
                |y: f64| if y.abs() < *radius { half_length + (radius * radius - y * y).sqrt() } else { 0.0 },
                window,
            ),
            Shape::Table { half_widths } => {
                if half_widths.len() != rows {
                    return Err(Error::Config(vec![format!(
                        "$.domain.shape.params.half_widths: expected {rows} entries, one per row, got {}",
                        half_widths.len()
                    )]));
                }
                make_steiner_domain(
                    |y: f64| {
                        let row = if self.dim == 1 { 0 } else { ((y - lo) / h).floor() as usize };
                        half_widths[row.min(rows - 1)]
                    },
                    window,
                )
            }
        }
    }

    fn validate(&self, errors: &mut Vec<String>) {
        let at = |field: &str| format!("$.domain.{field}");
        if !(1..=2).contains(&self.dim) {
            errors.push(format!("{}: dimension must be 1 or 2, got {}", at("dim"), self.dim));
            return;
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            errors.push(format!("{}: spacing must be positive, got {}", at("h"), self.h));
        }
        if self.bounds.len() != self.dim {
            errors.push(format!("{}: expected {} axes, got {}", at("box"), self.dim, self.bounds.len()));
        } else {
            let [lo, hi] = self.bounds[0];
            if lo != -hi {
                errors.push(format!("{}: box must be symmetric about x1 = 0, got [{lo}, {hi}]", at("box[0]")));
            }
            for (axis, [lo, hi]) in self.bounds.iter().enumerate() {
                if lo >= hi {
                    errors.push(format!("{}: empty range [{lo}, {hi}]", at(&format!("box[{axis}]"))));
                }
            }
        }
        let params = "shape.params";
        let positive = |name: &str, v: f64, errors: &mut Vec<String>| {
            if !(v > 0.0 && v.is_finite()) {
                errors.push(format!("{}: must be positive, got {v}", at(&format!("{params}.{name}"))));
            }
        };
        match &self.shape {
            Shape::Interval { half_width } => {
                if self.dim != 1 {
                    errors.push(format!("{}: interval needs dim 1", at("shape.kind")));
                }
                positive("half_width", *half_width, errors);
            }
            Shape::Disk { radius } => {
                if self.dim != 2 {
                    errors.push(format!("{}: disk needs dim 2", at("shape.kind")));
                }
                positive("radius", *radius, errors);
            }
            Shape::Stadium { radius, half_length } => {
                if self.dim != 2 {
                    errors.push(format!("{}: stadium needs dim 2", at("shape.kind")));
                }
                positive("radius", *radius, errors);
                if !(*half_length >= 0.0) {
                    errors.push(format!("{}: must be nonnegative, got {half_length}", at(&format!("{params}.half_length"))));
                }
            }
            Shape::Table { half_widths } => {
                for (i, w) in half_widths.iter().enumerate() {
                    if !(*w >= 0.0 && w.is_finite()) {
                        errors.push(format!("{}: must be nonnegative, got {w}", at(&format!("{params}.half_widths[{i}]"))));
                    }
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub p: f64,
    /// Order of the operator.
    pub s: f64,
    /// Exponent of `f(z) = |z|^{q-2} z` in lens mode, `p + 1` when omitted.
    #[serde(default)]
    pub q: Option<f64>,
    pub domain: DomainSpec,
    #[serde(default = "defaults::tol")]
    pub tol: f64,
    #[serde(default = "defaults::scale_tol")]
    pub scale_tol: f64,
    #[serde(default = "defaults::max_iter")]
    pub max_iter: usize,
    #[serde(default = "defaults::multistarts")]
    pub multistarts: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::tau_rel")]
    pub tau_rel: f64,
    /// Touching threshold in units of `h`.
    #[serde(default = "defaults::touch_cells")]
    pub touch_cells: f64,
    /// Number of reflection parameters in the polarization sweep.
    #[serde(default = "defaults::sweep")]
    pub sweep: usize,
}

mod defaults {
    pub fn tol() -> f64 {
        1e-9
    }
    pub fn scale_tol() -> f64 {
        1e-12
    }
    pub fn max_iter() -> usize {
        20_000
    }
    pub fn multistarts() -> usize {
        3
    }
    pub fn tau_rel() -> f64 {
        1e-8
    }
    pub fn touch_cells() -> f64 {
        2.0
    }
    pub fn sweep() -> usize {
        8
    }
}

impl ExperimentConfig {
    /// Parses, fills defaults and validates. Every problem is reported with
    /// the JSON path it refers to.
    pub fn from_value(value: Value) -> Result<Self> {
        let mut cfg: Self = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            let path = if path == "." { "$".to_string() } else { format!("$.{path}") };
            Error::Config(vec![format!("{path}: {}", e.inner())])
        })?;
        if cfg.mode == Mode::Lens && cfg.q.is_none() {
            cfg.q = Some(cfg.p + 1.0);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Config(vec![format!("$: {e}")]))?;
        Self::from_value(value)
    }

    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if !(self.s > 0.0 && self.s < 1.0) {
            errors.push(format!("$.s: order must be in (0,1), got {}", self.s));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            errors.push(format!("$.p: exponent must be greater than 1, got {}", self.p));
        }
        if let Some(q) = self.q {
            if self.mode == Mode::Lens && !(q > self.p) {
                errors.push(format!("$.q: superhomogeneity violated, need q > p, got q = {q}, p = {}", self.p));
            }
        }
        for (name, v) in [("tol", self.tol), ("scale_tol", self.scale_tol), ("tau_rel", self.tau_rel), ("touch_cells", self.touch_cells)] {
            if !(v > 0.0 && v.is_finite()) {
                errors.push(format!("$.{name}: must be positive, got {v}"));
            }
        }
        if self.multistarts == 0 {
            errors.push("$.multistarts: need at least one start".into());
        }
        if self.max_iter == 0 {
            errors.push("$.max_iter: must be positive".into());
        }
        self.domain.validate(&mut errors);
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }

    pub fn eigen_options(&self) -> EigenOptions {
        EigenOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            multistarts: self.multistarts,
            seed: self.seed,
        }
    }

    pub fn nehari_options(&self) -> NehariOptions {
        NehariOptions {
            tol: self.tol,
            scale_tol: self.scale_tol,
            max_iter: self.max_iter,
            multistarts: self.multistarts,
            seed: self.seed,
        }
    }

    pub fn payne_options(&self) -> PayneOptions {
        PayneOptions {
            mode: self.mode,
            q: self.q,
            tau_rel: self.tau_rel,
            touch_cells: self.touch_cells,
            sweep: self.sweep,
            eigen: self.eigen_options(),
            nehari: self.nehari_options(),
        }
    }

    /// `q`, or `p + 1` when it was left open.
    pub fn exponent_q(&self) -> f64 {
        self.q.unwrap_or(self.p + 1.0)
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    ExperimentConfig::from_json(&text)
}
