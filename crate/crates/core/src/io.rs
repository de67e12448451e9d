//! JSON reports and grid-function CSV files.
//!
//! JSON output carries a `schema_version` key next to the report fields;
//! object keys are written in sorted order. Grid-function CSV files have the
//! header `x1,value` (1D) or `x1,x2,value` (2D), one row per window node,
//! rows sorted lexicographically by coordinates. Numbers use the shortest
//! representation that parses back to the same `f64`, so identical results
//! give byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::eigensolver::EigenReport;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::lattice::Window;
use crate::nehari::NehariReport;
use crate::payne::PayneReport;
use crate::scalar::Real;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Something [`emit_results`] can write.
pub trait Emit {
    fn to_json(&self) -> Result<Value>;

    /// The grid function written in CSV format, if any.
    fn grid(&self) -> Option<GridFunction<f64>> {
        None
    }
}

/// Report fields plus `schema_version`.
pub fn versioned<R: Serialize>(report: &R) -> Result<Value> {
    let mut value = serde_json::to_value(report)?;
    if let Value::Object(map) = &mut value {
        map.insert("schema_version".into(), SCHEMA_VERSION.into());
    }
    Ok(value)
}

fn to_f64<T: Real>(u: &GridFunction<T>) -> GridFunction<f64> {
    let w = u.window();
    let window = Window::new(w.dim(), w.h().as_f64(), w.lo(), w.shape()).expect("same layout as a valid window");
    let values = u.values().iter().map(|v| v.as_f64()).collect();
    GridFunction::new(window, values).expect("finite values")
}

impl<T: Real> Emit for EigenReport<T> {
    fn to_json(&self) -> Result<Value> {
        versioned(self)
    }
    fn grid(&self) -> Option<GridFunction<f64>> {
        Some(to_f64(&self.u2))
    }
}

impl<T: Real> Emit for NehariReport<T> {
    fn to_json(&self) -> Result<Value> {
        versioned(self)
    }
    fn grid(&self) -> Option<GridFunction<f64>> {
        Some(to_f64(&self.u))
    }
}

impl<T: Real> Emit for PayneReport<T> {
    fn to_json(&self) -> Result<Value> {
        versioned(self)
    }
    fn grid(&self) -> Option<GridFunction<f64>> {
        Some(to_f64(&self.u))
    }
}

impl<T: Real> Emit for GridFunction<T> {
    fn to_json(&self) -> Result<Value> {
        versioned(self)
    }
    fn grid(&self) -> Option<GridFunction<f64>> {
        Some(to_f64(self))
    }
}

impl Emit for ExperimentConfig {
    fn to_json(&self) -> Result<Value> {
        Ok(serde_json::to_value(self)?)
    }
}

impl Emit for Value {
    fn to_json(&self) -> Result<Value> {
        Ok(self.clone())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    Ok(BufWriter::new(file))
}

pub fn emit_results<R: Emit + ?Sized>(report: &R, format: Format, path: &Path) -> Result<()> {
    match format {
        Format::Json => write_json(&report.to_json()?, path),
        Format::Csv => {
            let u = report
                .grid()
                .ok_or_else(|| Error::Parameter("this result has no grid function to write as CSV".into()))?;
            write_grid_csv(&u, path)
        }
    }
}

pub fn write_json(value: &Value, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out).and_then(|_| out.flush()).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn grid_rows<T: Real>(u: &GridFunction<T>) -> Vec<([i64; 2], T)> {
    let w = u.window();
    let mut rows: Vec<_> = (0..w.len()).map(|i| (w.half_coords(i), u.values()[i])).collect();
    rows.sort_by_key(|(m, _)| *m);
    rows
}

pub fn write_grid_csv<T: Real>(u: &GridFunction<T>, path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(create(path)?);
    let w = u.window();
    let half = w.h().as_f64() / 2.0;
    let header: &[&str] = if w.dim() == 1 { &["x1", "value"] } else { &["x1", "x2", "value"] };
    wtr.write_record(header)?;
    for (m, v) in grid_rows(u) {
        let mut record: Vec<String> = m[..w.dim()].iter().map(|&k| (k as f64 * half).to_string()).collect();
        record.push(v.as_f64().to_string());
        wtr.write_record(&record)?;
    }
    wtr.flush().map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Reads a grid-function CSV onto `window`. Nodes missing from the file are
/// zero; coordinates must sit on nodes of the window.
pub fn read_grid_csv(path: &Path, window: &Window<f64>) -> Result<GridFunction<f64>> {
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let dim = window.dim();
    let h = window.h();
    let mut values = vec![0.0; window.len()];
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let row = line + 2;
        if record.len() != dim + 1 {
            return Err(Error::Parameter(format!(
                "{} line {row}: expected {} columns, got {}",
                path.display(),
                dim + 1,
                record.len()
            )));
        }
        let num = |c: usize| -> Result<f64> {
            record[c].trim().parse::<f64>().map_err(|e| {
                Error::Parameter(format!("{} line {row} column {}: {e}", path.display(), c + 1))
            })
        };
        let mut m = [0i64; 2];
        for (axis, slot) in m.iter_mut().enumerate().take(dim) {
            let x = num(axis)?;
            let k = (2.0 * x / h).round();
            if (k * h / 2.0 - x).abs() > 1e-9 * h || k as i64 % 2 == 0 {
                return Err(Error::Parameter(format!(
                    "{} line {row}: coordinate {x} is not a lattice node for h = {h}",
                    path.display()
                )));
            }
            *slot = k as i64;
        }
        let i = window.index_of(m).ok_or_else(|| {
            Error::WindowMismatch(format!("{} line {row}: node outside the window", path.display()))
        })?;
        values[i] = num(dim)?;
    }
    GridFunction::new(window.clone(), values)
}
