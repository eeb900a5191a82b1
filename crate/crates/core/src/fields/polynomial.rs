//! Sparse multivariate polynomials with exact jets.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::Jet2;
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Monomial {
    pub coefficient: f64,
    pub exponents: Vec<u32>,
}

/// A polynomial in n variables, stored as a list of monomials with
/// like terms merged.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polynomial {
    dim: usize,
    terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn new(dim: usize, terms: Vec<Monomial>) -> Result<Self> {
        let mut merged: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for t in terms {
            if t.exponents.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: t.exponents.len() });
            }
            if !t.coefficient.is_finite() {
                return Err(Error::InvalidField(format!("non-finite coefficient {}", t.coefficient)));
            }
            *merged.entry(t.exponents).or_insert(0.0) += t.coefficient;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(exponents, coefficient)| Monomial { coefficient, exponents })
            .collect();
        Ok(Self { dim, terms })
    }

    /// Convenience: `(coefficient, exponents)` pairs.
    pub fn from_pairs(dim: usize, pairs: &[(f64, &[u32])]) -> Result<Self> {
        Self::new(dim, pairs.iter().map(|(c, e)| Monomial { coefficient: *c, exponents: e.to_vec() }).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|t| Monomial { coefficient: t.coefficient * s, exponents: t.exponents.clone() })
                .collect(),
        }
    }

    fn derivative(&self, axis: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.exponents[axis] > 0)
            .map(|t| {
                let mut e = t.exponents.clone();
                let k = e[axis];
                e[axis] -= 1;
                Monomial { coefficient: t.coefficient * k as f64, exponents: e }
            })
            .collect();
        // merging cannot fail: exponents keep their length
        Self::new(self.dim, terms).expect("derivative preserves arity")
    }

    /// Δp as a polynomial.
    pub fn laplacian(&self) -> Self {
        let terms = (0..self.dim).flat_map(|i| self.derivative(i).derivative(i).terms).collect();
        Self::new(self.dim, terms).expect("laplacian preserves arity")
    }

    /// Largest |coefficient|; zero for the zero polynomial.
    pub fn max_coefficient(&self) -> f64 {
        self.terms.iter().fold(0.0, |m, t| m.max(t.coefficient.abs()))
    }

    pub fn is_harmonic(&self) -> bool {
        let scale = self.max_coefficient().max(1.0);
        self.laplacian().max_coefficient() <= 1e-12 * scale
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coefficient * t.exponents.iter().zip(y).map(|(&e, &v)| v.powi(e as i32)).product::<f64>())
            .sum()
    }

    pub fn jet(&self, y: &[f64]) -> Jet2 {
        let n = self.dim;
        let mut value = 0.0;
        let mut gradient = vec![0.0; n];
        let mut hessian = Matrix::zeros(n);
        // d/dy_i y_i^e = e y_i^(e-1), evaluated factor by factor
        let pw = |v: f64, e: u32, d: u32| -> f64 {
            if d > e {
                return 0.0;
            }
            let mut c = 1.0;
            for k in 0..d {
                c *= (e - k) as f64;
            }
            c * v.powi((e - d) as i32)
        };
        for t in &self.terms {
            let e = &t.exponents;
            let factor = |i: usize, d: u32| pw(y[i], e[i], d);
            let base: Vec<f64> = (0..n).map(|i| factor(i, 0)).collect();
            let prod_except =
                |skip: &[usize]| -> f64 { (0..n).filter(|i| !skip.contains(i)).map(|i| base[i]).product() };
            value += t.coefficient * prod_except(&[]);
            for i in 0..n {
                if e[i] == 0 {
                    continue;
                }
                gradient[i] += t.coefficient * factor(i, 1) * prod_except(&[i]);
                hessian.add_at(i, i, t.coefficient * factor(i, 2) * prod_except(&[i]));
                for j in (i + 1)..n {
                    if e[j] == 0 {
                        continue;
                    }
                    let v = t.coefficient * factor(i, 1) * factor(j, 1) * prod_except(&[i, j]);
                    hessian.add_at(i, j, v);
                    hessian.add_at(j, i, v);
                }
            }
        }
        Jet2::new(value, gradient, hessian)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, t) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, "{}", if t.coefficient < 0.0 { "-" } else { "+" })?;
            } else if t.coefficient < 0.0 {
                write!(f, "-")?;
            }
            write!(f, "{}", t.coefficient.abs())?;
            for (i, &e) in t.exponents.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*x{}", i + 1)?,
                    _ => write!(f, "*x{}^{}", i + 1, e)?,
                }
            }
        }
        Ok(())
    }
}
