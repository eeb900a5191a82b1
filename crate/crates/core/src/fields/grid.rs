//! Positive samples on a uniform box lattice.
//!
//! Text format (one directive per line, `#` starts a comment):
//!
//! ```text
//! dim 3
//! shape 21 21 21
//! origin 1.0 1.0 1.0
//! spacing 0.05
//! data
//! 0.577 0.571 ...
//! ```
//!
//! `shape` is the number of lattice points per axis. Samples follow `data`
//! in row-major order (last axis fastest), whitespace separated, with any
//! line breaking.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::Jet2;
use crate::linalg::Matrix;

/// Minimum lattice points per axis.
pub const MIN_POINTS_PER_AXIS: usize = 5;

/// Cells required between a jet query and the lattice boundary.
pub const JET_MARGIN: usize = 2;

/// Relative slack when snapping a coordinate onto the lattice.
const SNAP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridField {
    origin: Vec<f64>,
    spacing: f64,
    shape: Vec<usize>,
    samples: Vec<f64>,
}

impl GridField {
    pub fn new(origin: Vec<f64>, spacing: f64, shape: Vec<usize>, samples: Vec<f64>) -> Result<Self> {
        if origin.len() != shape.len() {
            return Err(Error::DimensionMismatch { expected: shape.len(), found: origin.len() });
        }
        if shape.len() < 2 {
            return Err(Error::DimensionTooSmall { n: shape.len(), min: 2 });
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidField(format!("grid spacing must be positive, got {spacing}")));
        }
        if let Some(&s) = shape.iter().find(|&&s| s < MIN_POINTS_PER_AXIS) {
            return Err(Error::InvalidField(format!(
                "grid needs at least {MIN_POINTS_PER_AXIS} points per axis, got {s}"
            )));
        }
        let total: usize = shape.iter().product();
        if samples.len() != total {
            return Err(Error::InvalidField(format!("expected {total} samples, got {}", samples.len())));
        }
        if let Some((i, v)) = samples.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::NonPositiveValue { value: *v, context: format!("at grid sample {i}") });
        }
        Ok(Self { origin, spacing, shape, samples })
    }

    /// Samples `f` at every lattice point.
    pub fn from_fn<F>(origin: Vec<f64>, spacing: f64, shape: Vec<usize>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<f64>,
    {
        let total: usize = shape.iter().product();
        let mut samples = Vec::with_capacity(total);
        let mut idx = vec![0usize; shape.len()];
        for flat in 0..total {
            unflatten_into(flat, &shape, &mut idx);
            let p: Vec<f64> = idx.iter().zip(&origin).map(|(&i, o)| o + i as f64 * spacing).collect();
            samples.push(f(&p)?);
        }
        Self::new(origin, spacing, shape, samples)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &s)| acc * s + i)
    }

    pub fn unflatten(&self, flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.shape.len()];
        unflatten_into(flat, &self.shape, &mut idx);
        idx
    }

    pub fn point(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().zip(&self.origin).map(|(&i, o)| o + i as f64 * self.spacing).collect()
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.samples[self.flatten(idx)]
    }

    /// Cells between `idx` and the nearest face of the box.
    pub fn margin(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).map(|(&i, &s)| i.min(s - 1 - i)).min().unwrap_or(0)
    }

    pub fn is_boundary(&self, idx: &[usize]) -> bool {
        self.margin(idx) == 0
    }

    /// Lattice index of `y`, or `OutOfDomain` when `y` is off-lattice or outside the box.
    pub fn locate(&self, y: &[f64]) -> Result<Vec<usize>> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: y.len() });
        }
        let mut idx = Vec::with_capacity(y.len());
        for (axis, (&v, &o)) in y.iter().zip(&self.origin).enumerate() {
            let t = (v - o) / self.spacing;
            let r = t.round();
            if (t - r).abs() > SNAP_TOLERANCE * (1.0 + t.abs()) {
                return Err(Error::OutOfDomain(format!("{y:?} is off-lattice on axis {axis}")));
            }
            if r < 0.0 || r > (self.shape[axis] - 1) as f64 {
                return Err(Error::OutOfDomain(format!("{y:?} lies outside the grid box")));
            }
            idx.push(r as usize);
        }
        Ok(idx)
    }

    fn stencil_value(&self, idx: &[usize]) -> Result<f64> {
        let v = self.get(idx);
        if v <= 0.0 {
            return Err(Error::NonPositiveValue { value: v, context: format!("in stencil at {idx:?}") });
        }
        Ok(v)
    }

    fn shifted(idx: &[usize], axis: usize, step: isize) -> Vec<usize> {
        let mut s = idx.to_vec();
        s[axis] = (s[axis] as isize + step) as usize;
        s
    }

    /// Central-difference jet at a lattice point at least [`JET_MARGIN`] cells inside.
    pub fn jet_at(&self, idx: &[usize]) -> Result<Jet2> {
        if self.margin(idx) < JET_MARGIN {
            return Err(Error::OutOfDomain(format!("grid jet at {idx:?} needs {JET_MARGIN} cells of margin")));
        }
        let n = self.dim();
        let h = self.spacing;
        let u0 = self.stencil_value(idx)?;
        let mut gradient = vec![0.0; n];
        let mut hessian = Matrix::zeros(n);
        for i in 0..n {
            let up = self.stencil_value(&Self::shifted(idx, i, 1))?;
            let um = self.stencil_value(&Self::shifted(idx, i, -1))?;
            gradient[i] = (up - um) / (2.0 * h);
            hessian.set(i, i, (up - 2.0 * u0 + um) / (h * h));
            for j in (i + 1)..n {
                let corner =
                    |si: isize, sj: isize| self.stencil_value(&Self::shifted(&Self::shifted(idx, i, si), j, sj));
                let v = (corner(1, 1)? - corner(1, -1)? - corner(-1, 1)? + corner(-1, -1)?) / (4.0 * h * h);
                hessian.set(i, j, v);
                hessian.set(j, i, v);
            }
        }
        Ok(Jet2::new(u0, gradient, hessian))
    }

    /// Standard (2n+1)-point discrete Laplacian at an interior lattice point.
    pub fn discrete_laplacian(&self, idx: &[usize]) -> Result<f64> {
        if self.margin(idx) < 1 {
            return Err(Error::OutOfDomain(format!("discrete Laplacian at boundary point {idx:?}")));
        }
        let h2 = self.spacing * self.spacing;
        let u0 = self.get(idx);
        let mut acc = 0.0;
        for i in 0..self.dim() {
            acc += self.get(&Self::shifted(idx, i, 1)) - 2.0 * u0 + self.get(&Self::shifted(idx, i, -1));
        }
        Ok(acc / h2)
    }

    pub fn same_lattice(&self, other: &Self) -> bool {
        self.shape == other.shape && self.spacing == other.spacing && self.origin == other.origin
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut dim: Option<usize> = None;
        let mut shape: Option<Vec<usize>> = None;
        let mut origin: Option<Vec<f64>> = None;
        let mut spacing: Option<f64> = None;
        let mut samples = Vec::new();
        let mut in_data = false;

        for (lineno, raw) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { line: line_no, message };
            if in_data {
                for tok in line.split_whitespace() {
                    let v: f64 = tok.parse().map_err(|_| err(format!("bad sample '{tok}'")))?;
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(err(format!("non-positive sample {tok}")));
                    }
                    samples.push(v);
                }
                continue;
            }
            let mut parts = line.split_whitespace();
            let key = parts.next().unwrap_or("");
            let rest: Vec<&str> = parts.collect();
            match key {
                "dim" => {
                    let [d] = rest[..] else { return Err(err("dim takes one integer".into())) };
                    dim = Some(d.parse().map_err(|_| err(format!("bad dim '{d}'")))?);
                }
                "shape" => {
                    shape = Some(
                        rest.iter()
                            .map(|t| t.parse::<usize>().map_err(|_| err(format!("bad shape entry '{t}'"))))
                            .collect::<Result<_>>()?,
                    );
                }
                "origin" => {
                    origin = Some(
                        rest.iter()
                            .map(|t| t.parse::<f64>().map_err(|_| err(format!("bad origin entry '{t}'"))))
                            .collect::<Result<_>>()?,
                    );
                }
                "spacing" => {
                    let [h] = rest[..] else { return Err(err("spacing takes one number".into())) };
                    spacing = Some(h.parse().map_err(|_| err(format!("bad spacing '{h}'")))?);
                }
                "data" => {
                    if !rest.is_empty() {
                        return Err(err("'data' must be alone on its line".into()));
                    }
                    in_data = true;
                }
                other => return Err(err(format!("unknown directive '{other}'"))),
            }
        }

        let last = text.lines().count();
        let missing = |what: &str| Error::Parse { line: last, message: format!("missing '{what}' directive") };
        let dim = dim.ok_or_else(|| missing("dim"))?;
        let shape = shape.ok_or_else(|| missing("shape"))?;
        let origin = origin.ok_or_else(|| missing("origin"))?;
        let spacing = spacing.ok_or_else(|| missing("spacing"))?;
        if !in_data {
            return Err(missing("data"));
        }
        if shape.len() != dim || origin.len() != dim {
            return Err(Error::Parse {
                line: last,
                message: format!("dim {dim} disagrees with shape/origin lengths {}/{}", shape.len(), origin.len()),
            });
        }
        Self::new(origin, spacing, shape, samples).map_err(|e| Error::Parse { line: last, message: e.to_string() })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read grid file {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let join = |v: Vec<String>| v.join(" ");
        let _ = writeln!(s, "dim {}", self.dim());
        let _ = writeln!(s, "shape {}", join(self.shape.iter().map(|v| v.to_string()).collect()));
        let _ = writeln!(s, "origin {}", join(self.origin.iter().map(|v| format!("{v:?}")).collect()));
        let _ = writeln!(s, "spacing {:?}", self.spacing);
        let _ = writeln!(s, "data");
        let row = *self.shape.last().unwrap_or(&1);
        for chunk in self.samples.chunks(row) {
            let _ = writeln!(s, "{}", join(chunk.iter().map(|v| format!("{v:?}")).collect()));
        }
        s
    }
}

fn unflatten_into(mut flat: usize, shape: &[usize], idx: &mut [usize]) {
    for axis in (0..shape.len()).rev() {
        idx[axis] = flat % shape[axis];
        flat /= shape[axis];
    }
}
