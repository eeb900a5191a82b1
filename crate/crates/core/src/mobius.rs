//! Möbius transformations of ℝⁿ as words in translations, scalings and the
//! unit inversion `x ↦ x/|x|²`.
//!
//! A [`MobiusMap`] stores its generators in application order: `word[0]` is
//! applied first. The point at infinity is not modelled; evaluating a word
//! at (or within [`POLE_TOLERANCE`] of) the pole of one of its inversion
//! stages is an error.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::Jet2;
use crate::linalg::norm_sq;

/// Absolute distance below which an inversion stage treats its input as the pole.
pub const POLE_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Generator {
    Translation(Vec<f64>),
    Scaling(f64),
    Inversion,
}

impl Generator {
    pub fn inverse(&self) -> Self {
        match self {
            Generator::Translation(b) => Generator::Translation(b.iter().map(|v| -v).collect()),
            Generator::Scaling(a) => Generator::Scaling(1.0 / a),
            Generator::Inversion => Generator::Inversion,
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Translation(b) => {
                write!(f, "T(")?;
                for (i, v) in b.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ")")
            }
            Generator::Scaling(a) => write!(f, "S({a})"),
            Generator::Inversion => write!(f, "I"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MobiusMap {
    dim: usize,
    word: Vec<Generator>,
}

impl MobiusMap {
    pub fn identity(dim: usize) -> Self {
        Self { dim, word: Vec::new() }
    }

    /// Builds a map from generators listed in application order.
    pub fn from_word(dim: usize, word: Vec<Generator>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall { n: dim, min: 2 });
        }
        for g in &word {
            match g {
                Generator::Translation(b) if b.len() != dim => {
                    return Err(Error::DimensionMismatch { expected: dim, found: b.len() })
                }
                Generator::Scaling(a) if *a == 0.0 || !a.is_finite() => {
                    return Err(Error::Config(format!("scaling factor must be finite and nonzero, got {a}")))
                }
                _ => {}
            }
        }
        Ok(Self { dim, word })
    }

    pub fn translation(b: Vec<f64>) -> Result<Self> {
        let dim = b.len();
        Self::from_word(dim, vec![Generator::Translation(b)])
    }

    pub fn scaling(dim: usize, a: f64) -> Result<Self> {
        Self::from_word(dim, vec![Generator::Scaling(a)])
    }

    pub fn inversion(dim: usize) -> Self {
        Self { dim, word: vec![Generator::Inversion] }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn word(&self) -> &[Generator] {
        &self.word
    }

    /// `f∘g`: apply `g` first, then `f`.
    pub fn compose(f: &Self, g: &Self) -> Result<Self> {
        if f.dim != g.dim {
            return Err(Error::DimensionMismatch { expected: f.dim, found: g.dim });
        }
        let mut word = g.word.clone();
        word.extend(f.word.iter().cloned());
        Ok(Self { dim: f.dim, word })
    }

    /// `self` followed by `next`, i.e. `next∘self`.
    pub fn then(&self, next: &Self) -> Result<Self> {
        Self::compose(next, self)
    }

    pub fn inverse(&self) -> Self {
        Self { dim: self.dim, word: self.word.iter().rev().map(Generator::inverse).collect() }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        Ok(())
    }

    /// ψ(x), stage by stage through the word.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut z = x.to_vec();
        for (stage, g) in self.word.iter().enumerate() {
            match g {
                Generator::Translation(b) => z.iter_mut().zip(b).for_each(|(zi, bi)| *zi += bi),
                Generator::Scaling(a) => z.iter_mut().for_each(|zi| *zi *= a),
                Generator::Inversion => {
                    let s = norm_sq(&z);
                    if s.sqrt() < POLE_TOLERANCE {
                        return Err(singular(stage, &z));
                    }
                    z.iter_mut().for_each(|zi| *zi /= s);
                }
            }
        }
        Ok(z)
    }

    /// |J_ψ(x)| by the chain rule: translations contribute 1, `Scaling(a)`
    /// contributes |a|ⁿ, an inversion receiving `z` contributes |z|^(−2n).
    pub fn jacobian_det_abs(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let n = self.dim as i32;
        let mut z = x.to_vec();
        let mut det = 1.0;
        for (stage, g) in self.word.iter().enumerate() {
            match g {
                Generator::Translation(b) => z.iter_mut().zip(b).for_each(|(zi, bi)| *zi += bi),
                Generator::Scaling(a) => {
                    det *= a.abs().powi(n);
                    z.iter_mut().for_each(|zi| *zi *= a);
                }
                Generator::Inversion => {
                    let s = norm_sq(&z);
                    if s.sqrt() < POLE_TOLERANCE {
                        return Err(singular(stage, &z));
                    }
                    det *= s.powi(-n);
                    z.iter_mut().for_each(|zi| *zi /= s);
                }
            }
        }
        Ok(det)
    }

    /// Second-order jets of the coordinates of ψ(y) together with the jet of
    /// |J_ψ(y)|^p, both propagated exactly through the word.
    pub fn apply_jet(&self, y: &[f64], p: f64) -> Result<(Vec<Jet2>, Jet2)> {
        self.check_dim(y)?;
        let n = self.dim;
        let mut z = Jet2::coordinates(y);
        let mut factor = Jet2::constant(1.0, n);
        for (stage, g) in self.word.iter().enumerate() {
            match g {
                Generator::Translation(b) => {
                    z = z.iter().zip(b).map(|(zi, bi)| zi.add_scalar(*bi)).collect();
                }
                Generator::Scaling(a) => {
                    z = z.iter().map(|zi| zi.scale(*a)).collect();
                    factor = factor.scale(a.abs().powf(n as f64 * p));
                }
                Generator::Inversion => {
                    let s = z.iter().fold(Jet2::constant(0.0, n), |acc, zi| &acc + &zi.square());
                    if s.value.sqrt() < POLE_TOLERANCE {
                        let at: Vec<f64> = z.iter().map(|zi| zi.value).collect();
                        return Err(singular(stage, &at));
                    }
                    let inv = s.recip();
                    z = z.iter().map(|zi| zi * &inv).collect();
                    if p != 0.0 {
                        factor = &factor * &s.powf(-(n as f64) * p);
                    }
                }
            }
        }
        Ok((z, factor))
    }
}

impl fmt::Display for MobiusMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.word.is_empty() {
            return write!(f, "id");
        }
        for (i, g) in self.word.iter().enumerate() {
            if i > 0 {
                write!(f, " ; ")?;
            }
            write!(f, "{g}")?;
        }
        Ok(())
    }
}

fn singular(stage: usize, z: &[f64]) -> Error {
    Error::SingularPoint(format!("inversion stage {stage} received {z:?}, within {POLE_TOLERANCE:e} of its pole"))
}

/// The Kelvin reflection `x + λ²(y−x)/|y−x|²` across the sphere of radius λ about `x`.
pub fn kelvin_point(x: &[f64], lambda: f64, y: &[f64]) -> Result<Vec<f64>> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    let d: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    let r2 = norm_sq(&d);
    if r2.sqrt() < POLE_TOLERANCE {
        return Err(Error::SingularPoint(format!("kelvin point requested at its center {x:?}")));
    }
    let s = lambda * lambda / r2;
    Ok(x.iter().zip(&d).map(|(xi, di)| xi + s * di).collect())
}
