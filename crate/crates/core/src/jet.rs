//! Second-order jets: value, gradient and Hessian of a scalar at a point.
//!
//! A [`Jet2`] doubles as a truncated second-order Taylor number in the
//! ambient coordinates `y`, so products, powers and compositions of jets
//! propagate exact first and second derivatives forward. This is what lets
//! Kelvin transforms and Möbius pushforwards return analytic Hessians
//! without any finite-difference step.

use std::ops::{Add, Mul, Neg, Sub};

use serde::Serialize;

use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Jet2 {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Matrix,
}

impl Jet2 {
    pub fn new(value: f64, gradient: Vec<f64>, hessian: Matrix) -> Self {
        debug_assert_eq!(gradient.len(), hessian.dim());
        Self { value, gradient, hessian }
    }

    pub fn constant(value: f64, n: usize) -> Self {
        Self { value, gradient: vec![0.0; n], hessian: Matrix::zeros(n) }
    }

    /// The coordinate function `y ↦ y_i`, valued at `at`.
    pub fn coordinate(at: f64, i: usize, n: usize) -> Self {
        let mut gradient = vec![0.0; n];
        gradient[i] = 1.0;
        Self { value: at, gradient, hessian: Matrix::zeros(n) }
    }

    /// Coordinate jets for every axis at `y`.
    pub fn coordinates(y: &[f64]) -> Vec<Self> {
        let n = y.len();
        y.iter().enumerate().map(|(i, &v)| Self::coordinate(v, i, n)).collect()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    pub fn laplacian(&self) -> f64 {
        self.hessian.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            value: self.value * s,
            gradient: self.gradient.iter().map(|g| g * s).collect(),
            hessian: self.hessian.scale(s),
        }
    }

    pub fn add_scalar(&self, s: f64) -> Self {
        Self { value: self.value + s, ..self.clone() }
    }

    /// Applies a scalar function `f` given `f(v)`, `f'(v)`, `f''(v)` at the
    /// current value: `∇(f∘g) = f'∇g`, `∇²(f∘g) = f'∇²g + f''∇g∇gᵀ`.
    pub fn map(&self, f: f64, df: f64, d2f: f64) -> Self {
        let mut hessian = self.hessian.scale(df);
        hessian.axpy(d2f, &Matrix::outer(&self.gradient, &self.gradient));
        Self { value: f, gradient: self.gradient.iter().map(|g| g * df).collect(), hessian }
    }

    pub fn powf(&self, p: f64) -> Self {
        let v = self.value;
        self.map(v.powf(p), p * v.powf(p - 1.0), p * (p - 1.0) * v.powf(p - 2.0))
    }

    pub fn recip(&self) -> Self {
        let v = self.value;
        let r = 1.0 / v;
        self.map(r, -r * r, 2.0 * r * r * r)
    }

    pub fn square(&self) -> Self {
        self * self
    }

    /// Composes an outer jet (taken in the variables `z`) with inner jets
    /// `z_k(y)`, returning the jet of `y ↦ outer(z(y))`:
    /// `∇ = Dzᵀ ∇outer`, `∇² = Dzᵀ H_outer Dz + Σ_k ∂_k outer · ∇²z_k`.
    pub fn compose(outer: &Self, inner: &[Self]) -> Self {
        let m = outer.dim();
        assert_eq!(m, inner.len(), "outer jet arity must match inner jet count");
        let n = inner.first().map_or(0, Self::dim);
        let mut gradient = vec![0.0; n];
        let mut hessian = Matrix::zeros(n);
        for (k, zk) in inner.iter().enumerate() {
            let gk = outer.gradient[k];
            for i in 0..n {
                gradient[i] += gk * zk.gradient[i];
            }
            if gk != 0.0 {
                hessian.axpy(gk, &zk.hessian);
            }
        }
        for k in 0..m {
            for l in 0..m {
                let hkl = outer.hessian.get(k, l);
                if hkl == 0.0 {
                    continue;
                }
                let (gk, gl) = (&inner[k].gradient, &inner[l].gradient);
                for i in 0..n {
                    for j in 0..n {
                        hessian.add_at(i, j, hkl * gk[i] * gl[j]);
                    }
                }
            }
        }
        Self { value: outer.value, gradient, hessian }
    }

    /// Largest entrywise asymmetry of the Hessian.
    pub fn hessian_asymmetry(&self) -> f64 {
        self.hessian.asymmetry()
    }
}

impl Add for &Jet2 {
    type Output = Jet2;
    fn add(self, rhs: &Jet2) -> Jet2 {
        Jet2 {
            value: self.value + rhs.value,
            gradient: self.gradient.iter().zip(&rhs.gradient).map(|(a, b)| a + b).collect(),
            hessian: self.hessian.add(&rhs.hessian),
        }
    }
}

impl Sub for &Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: &Jet2) -> Jet2 {
        Jet2 {
            value: self.value - rhs.value,
            gradient: self.gradient.iter().zip(&rhs.gradient).map(|(a, b)| a - b).collect(),
            hessian: self.hessian.sub(&rhs.hessian),
        }
    }
}

impl Neg for &Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl Mul for &Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: &Jet2) -> Jet2 {
        let (a, b) = (self.value, rhs.value);
        let mut hessian = rhs.hessian.scale(a);
        hessian.axpy(b, &self.hessian);
        let cross = Matrix::outer(&self.gradient, &rhs.gradient);
        hessian = hessian.add(&cross).add(&cross.transpose());
        Jet2 {
            value: a * b,
            gradient: self.gradient.iter().zip(&rhs.gradient).map(|(ga, gb)| a * gb + b * ga).collect(),
            hessian,
        }
    }
}
