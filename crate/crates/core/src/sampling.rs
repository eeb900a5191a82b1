//! Deterministic sample sets: quasi-uniform sphere directions, log-spaced
//! radii, and a small pseudo/quasi-random source for randomized checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// φ = (1 + √5)/2
const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;

/// Quasi-uniform unit vectors in ℝⁿ, identical on every call.
///
/// n = 2 uses equally spaced angles, n = 3 the Fibonacci lattice, and
/// higher dimensions map a Kronecker (R_d) low-discrepancy sequence through
/// Box–Muller and normalize.
pub fn sphere_directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    use std::f64::consts::PI;
    match n {
        0 | 1 => Vec::new(),
        2 => (0..count)
            .map(|i| {
                let t = 2.0 * PI * (i as f64 + 0.5) / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let golden_angle = 2.0 * PI * (1.0 - 1.0 / GOLDEN_RATIO);
            (0..count)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let phi = golden_angle * i as f64;
                    vec![r * phi.cos(), r * phi.sin(), z]
                })
                .collect()
        }
        _ => {
            let pairs = n.div_ceil(2);
            let mut seq = Kronecker::new(2 * pairs);
            (0..count)
                .map(|_| {
                    let u = seq.next_point();
                    let mut g = Vec::with_capacity(2 * pairs);
                    for k in 0..pairs {
                        let (u1, u2) = (u[2 * k], u[2 * k + 1]);
                        let rad = (-2.0 * u1.ln()).sqrt();
                        g.push(rad * (2.0 * PI * u2).cos());
                        g.push(rad * (2.0 * PI * u2).sin());
                    }
                    g.truncate(n);
                    let norm = crate::linalg::norm(&g);
                    g.iter().map(|v| v / norm).collect()
                })
                .collect()
        }
    }
}

/// `count` radii from `lo` to `hi`, geometrically spaced; the endpoints are exact.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && count >= 1);
    if count == 1 {
        return vec![lo];
    }
    let ratio = (hi / lo).ln();
    (0..count)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == count - 1 {
                hi
            } else {
                lo * (ratio * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

/// Additive recurrence `frac(0.5 + i·α)` with α from the generalized golden
/// ratio in `d` dimensions (the R_d sequence).
#[derive(Debug, Clone)]
pub struct Kronecker {
    alpha: Vec<f64>,
    index: u64,
}

impl Kronecker {
    pub fn new(d: usize) -> Self {
        // root of x^(d+1) = x + 1 by fixed-point iteration
        let mut g: f64 = 2.0;
        for _ in 0..64 {
            g = (1.0 + g).powf(1.0 / (d as f64 + 1.0));
        }
        let alpha = (1..=d).map(|k| (1.0 / g.powi(k as i32)).fract()).collect();
        Self { alpha, index: 1 }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        let i = self.index as f64;
        self.index += 1;
        self.alpha.iter().map(|a| (0.5 + i * a).fract()).collect()
    }
}

/// Source of uniform variates for the randomized checks: a seeded ChaCha
/// stream, or a seed-free Kronecker sequence when no RNG may be used.
#[derive(Debug, Clone)]
pub enum Sampler {
    Seeded(ChaCha8Rng),
    Seedless { seq: Kronecker, buffer: Vec<f64> },
}

impl Sampler {
    pub fn seeded(seed: u64) -> Self {
        Sampler::Seeded(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Kronecker sequence in 7 dimensions consumed coordinate by coordinate.
    pub fn seedless() -> Self {
        Sampler::Seedless { seq: Kronecker::new(7), buffer: Vec::new() }
    }

    pub fn is_seedless(&self) -> bool {
        matches!(self, Sampler::Seedless { .. })
    }

    /// Uniform in [0, 1).
    pub fn unit(&mut self) -> f64 {
        match self {
            Sampler::Seeded(rng) => rng.gen::<f64>(),
            Sampler::Seedless { seq, buffer } => {
                if buffer.is_empty() {
                    *buffer = seq.next_point();
                    buffer.reverse();
                }
                buffer.pop().unwrap_or(0.5)
            }
        }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn index(&mut self, len: usize) -> usize {
        ((self.unit() * len as f64) as usize).min(len.saturating_sub(1))
    }

    pub fn point(&mut self, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|_| self.uniform(lo, hi)).collect()
    }

    /// Uniform-ish point in the annulus `r_lo ≤ |y − center| ≤ r_hi`.
    pub fn annulus_point(&mut self, center: &[f64], r_lo: f64, r_hi: f64) -> Vec<f64> {
        let n = center.len();
        loop {
            let d = self.point(n, -1.0, 1.0);
            let norm = crate::linalg::norm(&d);
            if norm > 1e-3 && norm <= 1.0 {
                let r = self.uniform(r_lo, r_hi);
                return center.iter().zip(&d).map(|(c, di)| c + r * di / norm).collect();
            }
        }
    }
}
