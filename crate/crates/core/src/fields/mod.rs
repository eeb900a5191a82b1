//! Positive scalar fields on ℝⁿ with exact (or lattice) second-order jets.
//!
//! Closed-form fields hand-code their first and second derivatives.
//! Wrapper fields ([`FieldKind::Kelvin`], [`FieldKind::Pushforward`],
//! [`FieldKind::WSubstitution`], [`FieldKind::Scaled`]) propagate their base
//! field's jet through the second-order chain rule, so every jet returned
//! for a closed-form composite is analytic. Grid fields only answer on
//! lattice points.

mod grid;
mod polynomial;

use std::fmt;
use std::sync::Arc;

pub use grid::{GridField, JET_MARGIN, MIN_POINTS_PER_AXIS};
pub use polynomial::{Monomial, Polynomial};

use crate::error::{Error, Result};
use crate::jet::Jet2;
use crate::linalg::{norm_sq, Matrix};
use crate::mobius::{kelvin_point, MobiusMap};

/// Distance below which a query counts as hitting a pole or Kelvin center.
pub const SINGULAR_MARGIN: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum FieldKind {
    Constant(f64),
    /// `(1 + |y − center|²)^(−(n−2)/2)`
    Bubble {
        center: Vec<f64>,
    },
    /// `|y − pole|^(2−n)`
    FundamentalSolution {
        pole: Vec<f64>,
    },
    /// Validated to have zero Laplacian at construction.
    HarmonicPolynomial(Polynomial),
    /// Any polynomial; positivity is checked at evaluation.
    Polynomial(Polynomial),
    Grid(Arc<GridField>),
    /// `u_{x,λ}(y) = (λ/|y−x|)^(n−2) u(x + λ²(y−x)/|y−x|²)`
    Kelvin {
        base: Arc<ScalarField>,
        center: Vec<f64>,
        lambda: f64,
    },
    /// `u_ψ = |J_ψ|^((n−2)/(2n)) (u∘ψ)`
    Pushforward {
        base: Arc<ScalarField>,
        map: MobiusMap,
    },
    /// `w = u^(−2/(n−2))`
    WSubstitution {
        base: Arc<ScalarField>,
    },
    /// `c·u`
    Scaled {
        base: Arc<ScalarField>,
        factor: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    dim: usize,
    kind: FieldKind,
}

fn check_point(n: usize, y: &[f64]) -> Result<()> {
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: y.len() });
    }
    Ok(())
}

fn positive(c: f64, what: &str) -> Result<f64> {
    if c > 0.0 && c.is_finite() {
        Ok(c)
    } else {
        Err(Error::InvalidField(format!("{what} must be positive and finite, got {c}")))
    }
}

/// Jet of `q(y)^(−m)` with `q = shift + |d|²`, `d = y − center`.
fn radial_power_jet(d: &[f64], shift: f64, m: f64) -> Jet2 {
    let n = d.len();
    let q = shift + norm_sq(d);
    let value = q.powf(-m);
    let g = -2.0 * m * q.powf(-m - 1.0);
    let gradient: Vec<f64> = d.iter().map(|di| g * di).collect();
    let mut hessian = Matrix::scaled_identity(n, g);
    hessian.axpy(4.0 * m * (m + 1.0) * q.powf(-m - 2.0), &Matrix::outer(d, d));
    Jet2::new(value, gradient, hessian)
}

impl ScalarField {
    fn min_dim(n: usize) -> Result<()> {
        if n < 2 {
            return Err(Error::DimensionTooSmall { n, min: 2 });
        }
        Ok(())
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::min_dim(n)?;
        Ok(Self { dim: n, kind: FieldKind::Constant(positive(c, "constant")?) })
    }

    pub fn bubble(center: Vec<f64>) -> Result<Self> {
        Self::min_dim(center.len())?;
        Ok(Self { dim: center.len(), kind: FieldKind::Bubble { center } })
    }

    pub fn fundamental(pole: Vec<f64>) -> Result<Self> {
        Self::min_dim(pole.len())?;
        Ok(Self { dim: pole.len(), kind: FieldKind::FundamentalSolution { pole } })
    }

    pub fn harmonic_polynomial(p: Polynomial) -> Result<Self> {
        Self::min_dim(p.dim())?;
        if !p.is_harmonic() {
            return Err(Error::InvalidField(format!("polynomial {p} has nonzero Laplacian {}", p.laplacian())));
        }
        Ok(Self { dim: p.dim(), kind: FieldKind::HarmonicPolynomial(p) })
    }

    pub fn polynomial(p: Polynomial) -> Result<Self> {
        Self::min_dim(p.dim())?;
        Ok(Self { dim: p.dim(), kind: FieldKind::Polynomial(p) })
    }

    pub fn grid(g: GridField) -> Self {
        Self { dim: g.dim(), kind: FieldKind::Grid(Arc::new(g)) }
    }

    pub fn kelvin_transform(&self, center: Vec<f64>, lambda: f64) -> Result<Self> {
        check_point(self.dim, &center)?;
        positive(lambda, "kelvin radius")?;
        Ok(Self { dim: self.dim, kind: FieldKind::Kelvin { base: Arc::new(self.clone()), center, lambda } })
    }

    pub fn pushforward(&self, map: MobiusMap) -> Result<Self> {
        if map.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: map.dim() });
        }
        Ok(Self { dim: self.dim, kind: FieldKind::Pushforward { base: Arc::new(self.clone()), map } })
    }

    pub fn w_substitution(&self) -> Result<Self> {
        if self.dim < 3 {
            return Err(Error::DimensionTooSmall { n: self.dim, min: 3 });
        }
        Ok(Self { dim: self.dim, kind: FieldKind::WSubstitution { base: Arc::new(self.clone()) } })
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        positive(factor, "scale factor")?;
        Ok(Self { dim: self.dim, kind: FieldKind::Scaled { base: Arc::new(self.clone()), factor } })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    /// Smallest distance from `y` to a pole or Kelvin center, each measured
    /// in the coordinates where that singularity lives (a wrapped field's
    /// poles are checked at the mapped point). Infinite for entire fields.
    pub fn pole_distance(&self, y: &[f64]) -> f64 {
        let dist = |a: &[f64], b: &[f64]| norm_sq(&crate::linalg::sub(a, b)).sqrt();
        match &self.kind {
            FieldKind::FundamentalSolution { pole } => dist(y, pole),
            FieldKind::Kelvin { base, center, lambda } => {
                let own = dist(y, center);
                match kelvin_point(center, *lambda, y) {
                    Ok(z) => own.min(base.pole_distance(&z)),
                    Err(_) => 0.0,
                }
            }
            FieldKind::Pushforward { base, map } => match map.apply(y) {
                Ok(z) => base.pole_distance(&z),
                Err(_) => 0.0,
            },
            FieldKind::WSubstitution { base } | FieldKind::Scaled { base, .. } => base.pole_distance(y),
            _ => f64::INFINITY,
        }
    }

    /// True when evaluation bottoms out in lattice samples anywhere in the wrapper chain.
    pub fn contains_grid(&self) -> bool {
        match &self.kind {
            FieldKind::Grid(_) => true,
            FieldKind::Kelvin { base, .. }
            | FieldKind::Pushforward { base, .. }
            | FieldKind::WSubstitution { base }
            | FieldKind::Scaled { base, .. } => base.contains_grid(),
            _ => false,
        }
    }

    fn kelvin_exponent(&self) -> f64 {
        (self.dim as f64 - 2.0) / 2.0
    }

    fn w_exponent(&self) -> f64 {
        -2.0 / (self.dim as f64 - 2.0)
    }

    /// Jacobian exponent `(n−2)/(2n)` of the conformal weight.
    fn pushforward_exponent(&self) -> f64 {
        let n = self.dim as f64;
        (n - 2.0) / (2.0 * n)
    }

    pub fn eval_jet(&self, y: &[f64]) -> Result<Jet2> {
        check_point(self.dim, y)?;
        let n = self.dim;
        match &self.kind {
            FieldKind::Constant(c) => Ok(Jet2::constant(*c, n)),
            FieldKind::Bubble { center } => {
                let d = crate::linalg::sub(y, center);
                Ok(radial_power_jet(&d, 1.0, self.kelvin_exponent()))
            }
            FieldKind::FundamentalSolution { pole } => {
                let d = crate::linalg::sub(y, pole);
                if norm_sq(&d).sqrt() < SINGULAR_MARGIN {
                    return Err(Error::SingularPoint(format!("{y:?} at the pole {pole:?}")));
                }
                Ok(radial_power_jet(&d, 0.0, self.kelvin_exponent()))
            }
            FieldKind::HarmonicPolynomial(p) | FieldKind::Polynomial(p) => {
                let jet = p.jet(y);
                if jet.value <= 0.0 {
                    return Err(Error::NonPositiveValue { value: jet.value, context: format!("of {p} at {y:?}") });
                }
                Ok(jet)
            }
            FieldKind::Grid(g) => g.jet_at(&g.locate(y)?),
            FieldKind::Kelvin { base, center, lambda } => {
                let coords = Jet2::coordinates(y);
                let d: Vec<Jet2> = coords.iter().zip(center).map(|(c, x)| c.add_scalar(-x)).collect();
                let s = d.iter().fold(Jet2::constant(0.0, n), |acc, di| &acc + &di.square());
                if s.value.sqrt() < SINGULAR_MARGIN {
                    return Err(Error::SingularPoint(format!("{y:?} at the Kelvin center {center:?}")));
                }
                let inv = s.recip();
                let l2 = lambda * lambda;
                let z: Vec<Jet2> = d.iter().zip(center).map(|(di, x)| (di * &inv).scale(l2).add_scalar(*x)).collect();
                let m = self.kelvin_exponent();
                let factor = s.powf(-m).scale(lambda.powf(2.0 * m));
                let zv: Vec<f64> = z.iter().map(|zi| zi.value).collect();
                let outer = base.eval_jet(&zv)?;
                Ok(&factor * &Jet2::compose(&outer, &z))
            }
            FieldKind::Pushforward { base, map } => {
                let (z, factor) = map.apply_jet(y, self.pushforward_exponent())?;
                let zv: Vec<f64> = z.iter().map(|zi| zi.value).collect();
                let outer = base.eval_jet(&zv)?;
                Ok(&factor * &Jet2::compose(&outer, &z))
            }
            FieldKind::WSubstitution { base } => {
                let u = base.eval_jet(y)?;
                if u.value <= 0.0 {
                    return Err(Error::NonPositiveValue {
                        value: u.value,
                        context: format!("under w-substitution at {y:?}"),
                    });
                }
                Ok(u.powf(self.w_exponent()))
            }
            FieldKind::Scaled { base, factor } => Ok(base.eval_jet(y)?.scale(*factor)),
        }
    }

    /// Value only; agrees with `eval_jet(y).value`.
    pub fn value(&self, y: &[f64]) -> Result<f64> {
        check_point(self.dim, y)?;
        match &self.kind {
            FieldKind::Constant(c) => Ok(*c),
            FieldKind::Bubble { center } => {
                let d = crate::linalg::sub(y, center);
                Ok((1.0 + norm_sq(&d)).powf(-self.kelvin_exponent()))
            }
            FieldKind::FundamentalSolution { pole } => {
                let r2 = norm_sq(&crate::linalg::sub(y, pole));
                if r2.sqrt() < SINGULAR_MARGIN {
                    return Err(Error::SingularPoint(format!("{y:?} at the pole {pole:?}")));
                }
                Ok(r2.powf(-self.kelvin_exponent()))
            }
            FieldKind::HarmonicPolynomial(p) | FieldKind::Polynomial(p) => {
                let v = p.value(y);
                if v <= 0.0 {
                    return Err(Error::NonPositiveValue { value: v, context: format!("of {p} at {y:?}") });
                }
                Ok(v)
            }
            FieldKind::Grid(g) => Ok(g.get(&g.locate(y)?)),
            FieldKind::Kelvin { base, center, lambda } => {
                let r2 = norm_sq(&crate::linalg::sub(y, center));
                if r2.sqrt() < SINGULAR_MARGIN {
                    return Err(Error::SingularPoint(format!("{y:?} at the Kelvin center {center:?}")));
                }
                let z = kelvin_point(center, *lambda, y)?;
                Ok((lambda * lambda / r2).powf(self.kelvin_exponent()) * base.value(&z)?)
            }
            FieldKind::Pushforward { base, map } => {
                let z = map.apply(y)?;
                Ok(map.jacobian_det_abs(y)?.powf(self.pushforward_exponent()) * base.value(&z)?)
            }
            FieldKind::WSubstitution { base } => {
                let u = base.value(y)?;
                if u <= 0.0 {
                    return Err(Error::NonPositiveValue {
                        value: u,
                        context: format!("under w-substitution at {y:?}"),
                    });
                }
                Ok(u.powf(self.w_exponent()))
            }
            FieldKind::Scaled { base, factor } => Ok(factor * base.value(y)?),
        }
    }
}

fn fmt_point(p: &[f64]) -> String {
    p.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(",")
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            FieldKind::Constant(c) => write!(f, "constant({c})"),
            FieldKind::Bubble { center } => write!(f, "bubble({})", fmt_point(center)),
            FieldKind::FundamentalSolution { pole } => write!(f, "fundamental({})", fmt_point(pole)),
            FieldKind::HarmonicPolynomial(p) => write!(f, "harmonic({p})"),
            FieldKind::Polynomial(p) => write!(f, "poly({p})"),
            FieldKind::Grid(g) => {
                write!(f, "grid({})", g.shape().iter().map(|s| s.to_string()).collect::<Vec<_>>().join("x"))
            }
            FieldKind::Kelvin { base, center, lambda } => {
                write!(f, "kelvin({base}; x=({}), lambda={lambda})", fmt_point(center))
            }
            FieldKind::Pushforward { base, map } => write!(f, "pushforward({base}; {map})"),
            FieldKind::WSubstitution { base } => write!(f, "w({base})"),
            FieldKind::Scaled { base, factor } => write!(f, "{factor}*{base}"),
        }
    }
}
