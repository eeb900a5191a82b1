//! Symmetric eigenvalues, elementary symmetric functions, and
//! tolerance-banded classification against σ-positivity cones.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Convergence threshold of the Jacobi sweeps, relative to ‖M‖_F.
pub const JACOBI_TOLERANCE: f64 = 1e-13;
pub const JACOBI_MAX_SWEEPS: usize = 30;

/// Which σ_j must be positive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ConeKind {
    /// σ_1, …, σ_k > 0
    GammaK(usize),
    /// σ_j > 0 for each listed j
    CustomSigma(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConeSpec {
    kind: ConeKind,
    dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Interior,
    Boundary,
    Exterior,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConeClass {
    pub verdict: Verdict,
    /// min over required j of σ_j(λ) / (C(n,j) · max(1, |λ|_∞)^j)
    pub margin: f64,
}

impl ConeClass {
    /// λ ∈ Γ̄ (within the band)
    pub fn in_closure(&self) -> bool {
        self.verdict != Verdict::Exterior
    }
}

impl ConeSpec {
    pub fn gamma_k(dim: usize, k: usize) -> Result<Self> {
        if k == 0 || k > dim {
            return Err(Error::IndexOutOfRange { k, n: dim });
        }
        Ok(Self { kind: ConeKind::GammaK(k), dim })
    }

    /// A cone cut out by the listed σ_j. It must contain Γ_n and lie inside
    /// Γ_1, which is checked on probe vectors.
    pub fn custom(dim: usize, mut indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidCone("empty σ index list".into()));
        }
        indices.sort_unstable();
        indices.dedup();
        if let Some(&k) = indices.iter().find(|&&k| k == 0 || k > dim) {
            return Err(Error::IndexOutOfRange { k, n: dim });
        }
        let cone = Self { kind: ConeKind::CustomSigma(indices), dim };
        let tol = 1e-9;
        let ones = vec![1.0; dim];
        if cone.classify(&ones, tol)?.verdict != Verdict::Interior {
            return Err(Error::InvalidCone("cone must contain the positive orthant".into()));
        }
        let mut tilted = ones.clone();
        tilted[dim - 1] = -(dim as f64);
        let negative = vec![-1.0; dim];
        for probe in [&tilted, &negative] {
            if cone.classify(probe, tol)?.verdict == Verdict::Interior {
                return Err(Error::InvalidCone(format!("cone is not contained in Γ_1 (probe {probe:?} is inside)")));
            }
        }
        Ok(cone)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &ConeKind {
        &self.kind
    }

    pub fn indices(&self) -> Vec<usize> {
        match &self.kind {
            ConeKind::GammaK(k) => (1..=*k).collect(),
            ConeKind::CustomSigma(v) => v.clone(),
        }
    }

    pub fn label(&self) -> String {
        match &self.kind {
            ConeKind::GammaK(k) => format!("Gamma_{k}"),
            ConeKind::CustomSigma(v) => {
                format!("sigma{{{}}}", v.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","))
            }
        }
    }

    /// Tolerance-banded membership: Interior if the normalized margin
    /// exceeds `tol`, Exterior if below `−tol`, Boundary otherwise.
    pub fn classify(&self, lambda: &[f64], tol: f64) -> Result<ConeClass> {
        if lambda.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: lambda.len() });
        }
        let n = self.dim;
        let sigmas = elementary_symmetric(lambda);
        let scale = crate::linalg::max_abs(lambda).max(1.0);
        let margin = self
            .indices()
            .into_iter()
            .map(|j| sigmas[j] / (binomial(n, j) * scale.powi(j as i32)))
            .fold(f64::INFINITY, f64::min);
        let verdict = if margin > tol {
            Verdict::Interior
        } else if margin < -tol {
            Verdict::Exterior
        } else {
            Verdict::Boundary
        };
        Ok(ConeClass { verdict, margin })
    }
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All σ_0 … σ_n of λ by the product expansion of Π(1 + λ_i t):
/// each λ_i updates σ_j ← σ_j + λ_i σ_{j−1} from the top down.
pub fn elementary_symmetric(lambda: &[f64]) -> Vec<f64> {
    let n = lambda.len();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for (i, &l) in lambda.iter().enumerate() {
        for j in (1..=i + 1).rev() {
            e[j] += l * e[j - 1];
        }
    }
    e
}

/// σ_k(λ) for 1 ≤ k ≤ n.
pub fn sigma_k(lambda: &[f64], k: usize) -> Result<f64> {
    let n = lambda.len();
    if k == 0 || k > n {
        return Err(Error::IndexOutOfRange { k, n });
    }
    Ok(elementary_symmetric(lambda)[k])
}

/// Eigenvalues of a symmetric matrix in nondecreasing order, by cyclic
/// Jacobi rotations on (M + Mᵀ)/2.
pub fn eigenvalues_sym(m: &Matrix) -> Result<Vec<f64>> {
    let n = m.dim();
    let mut a = m.symmetrized();
    let norm = a.frobenius();
    let off = |a: &Matrix| {
        let mut s = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                s += 2.0 * a.get(p, q) * a.get(p, q);
            }
        }
        s.sqrt()
    };
    let target = JACOBI_TOLERANCE * norm;
    let mut sweeps = 0;
    loop {
        let residual = off(&a);
        if residual <= target {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { residual });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (a.get(p, p), a.get(q, q));
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a.get(k, p), a.get(k, q));
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let (apk, aqk) = (a.get(p, k), a.get(q, k));
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// σ_k by enumerating all k-subsets.
    fn sigma_brute(lambda: &[f64], k: usize) -> f64 {
        let n = lambda.len();
        (0u32..(1 << n))
            .filter(|mask| mask.count_ones() as usize == k)
            .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).map(|i| lambda[i]).product::<f64>())
            .sum()
    }

    #[test]
    fn sigma_examples() {
        let l = [1.0, 2.0, 3.0];
        assert_eq!(sigma_brute(&l, 1), 6.0);
        assert_eq!(sigma_brute(&l, 2), 11.0);
        assert_eq!(sigma_brute(&l, 3), 6.0);
        assert_eq!(sigma_k(&l, 1).unwrap(), 6.0);
        assert_eq!(sigma_k(&l, 2).unwrap(), 11.0);
        assert_eq!(sigma_k(&l, 3).unwrap(), 6.0);

        let twos = [2.0; 4];
        assert_eq!(sigma_brute(&twos, 2), 24.0);
        assert_eq!(binomial(4, 2) * 4.0, 24.0);
        assert_eq!(sigma_k(&twos, 2).unwrap(), 24.0);

        for k in 1..=5 {
            assert_eq!(sigma_k(&[0.0; 5], k).unwrap(), 0.0);
        }
        assert_eq!(sigma_k(&l, 0), Err(Error::IndexOutOfRange { k: 0, n: 3 }));
        assert_eq!(sigma_k(&l, 4), Err(Error::IndexOutOfRange { k: 4, n: 3 }));
    }

    #[test]
    fn recurrence_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=7 {
            for _ in 0..200 {
                let l: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let e = elementary_symmetric(&l);
                for k in 1..=n {
                    let b = sigma_brute(&l, k);
                    let scale = l.iter().map(|v| v.abs()).fold(1.0, f64::max).powi(k as i32) * binomial(n, k);
                    assert!((e[k] - b).abs() <= 1e-12 * scale, "n={n} k={k}: {} vs {b}", e[k]);
                }
            }
        }
    }

    #[test]
    fn eigen_examples() {
        let d = Matrix::from_rows(&[vec![3.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 2.0]]);
        assert_eq!(eigenvalues_sym(&d).unwrap(), vec![1.0, 2.0, 3.0]);
        let swap = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let ev = eigenvalues_sym(&swap).unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-15 && (ev[1] - 1.0).abs() < 1e-15);
        assert_eq!(eigenvalues_sym(&Matrix::zeros(4)).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn eigenvalues_reproduce_trace_and_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..50 {
            let mut m = Matrix::zeros(5);
            for i in 0..5 {
                for j in i..5 {
                    let v = rng.gen_range(-2.0..2.0);
                    m.set(i, j, v);
                    m.set(j, i, v);
                }
            }
            let ev = eigenvalues_sym(&m).unwrap();
            assert!(ev.windows(2).all(|w| w[0] <= w[1]));
            let tr: f64 = ev.iter().sum();
            let det: f64 = ev.iter().product();
            assert!((tr - m.trace()).abs() <= 1e-10 * m.trace().abs().max(1.0));
            assert!((det - m.det()).abs() <= 1e-10 * m.det().abs().max(1.0));
        }
    }

    #[test]
    fn classify_examples() {
        let g1 = ConeSpec::gamma_k(3, 1).unwrap();
        assert_eq!(g1.classify(&[1.0, 1.0, 1.0], 1e-9).unwrap().verdict, Verdict::Interior);
        assert_eq!(g1.classify(&[1.0, -1.0, 0.0], 1e-9).unwrap().verdict, Verdict::Boundary);
        assert_eq!(g1.classify(&[-1.0, -1.0, 0.5], 1e-9).unwrap().verdict, Verdict::Exterior);
        let g2 = ConeSpec::gamma_k(4, 2).unwrap();
        assert_eq!(g2.classify(&[2.0; 4], 1e-9).unwrap().verdict, Verdict::Interior);
        // σ_1 = 1 > 0 but σ_2 = -5 < 0
        let g2_3 = ConeSpec::gamma_k(3, 2).unwrap();
        assert_eq!(g2_3.classify(&[-1.0, -1.0, 3.0], 1e-9).unwrap().verdict, Verdict::Exterior);
        assert!(ConeSpec::gamma_k(3, 4).is_err());
        assert!(g1.classify(&[1.0, 1.0], 1e-9).is_err());
    }

    #[test]
    fn custom_cones_validated_against_probes() {
        assert!(ConeSpec::custom(3, vec![1, 3]).is_ok());
        // {σ_2 > 0} contains the negative orthant, so it is not inside Γ_1
        assert!(matches!(ConeSpec::custom(3, vec![2]), Err(Error::InvalidCone(_))));
        assert!(ConeSpec::custom(3, vec![]).is_err());
        assert!(ConeSpec::custom(3, vec![1, 5]).is_err());
        let c = ConeSpec::custom(4, vec![1, 2, 2]).unwrap();
        assert_eq!(c.indices(), vec![1, 2]);
        assert_eq!(c.classify(&[1.0, 1.0, 1.0, -0.5], 1e-9).unwrap().verdict, Verdict::Interior);
    }

    fn all_cones(n: usize) -> Vec<ConeSpec> {
        (1..=n).map(|k| ConeSpec::gamma_k(n, k).unwrap()).collect()
    }

    proptest! {
        #[test]
        fn classification_is_permutation_invariant(
            l in proptest::collection::vec(-3.0f64..3.0, 4),
            k in 1usize..=4,
            rot in 0usize..4,
        ) {
            let cone = ConeSpec::gamma_k(4, k).unwrap();
            let mut p = l.clone();
            p.rotate_left(rot);
            p.swap(0, 3);
            let (a, b) = (cone.classify(&l, 1e-9).unwrap(), cone.classify(&p, 1e-9).unwrap());
            prop_assert_eq!(a.verdict, b.verdict);
            prop_assert!((a.margin - b.margin).abs() <= 1e-12);
        }

        #[test]
        fn classification_is_scale_invariant(
            l in proptest::collection::vec(-3.0f64..3.0, 4),
            k in 1usize..=4,
            t in 1.0f64..20.0,
        ) {
            // with |λ|_∞ ≥ 1 the normalization makes each term exactly homogeneous of degree 0
            prop_assume!(crate::linalg::max_abs(&l) >= 1.0);
            let cone = ConeSpec::gamma_k(4, k).unwrap();
            let tol = 1e-9;
            let a = cone.classify(&l, tol).unwrap();
            prop_assume!(a.margin.abs() > 10.0 * tol);
            let scaled: Vec<f64> = l.iter().map(|v| v * t).collect();
            prop_assert_eq!(a.verdict, cone.classify(&scaled, tol).unwrap().verdict);
        }

        #[test]
        fn cones_nest_between_gamma_n_and_gamma_1(l in proptest::collection::vec(-3.0f64..3.0, 5)) {
            let cones = all_cones(5);
            let tol = 1e-9;
            if cones[4].classify(&l, tol).unwrap().verdict == Verdict::Interior {
                for c in &cones {
                    prop_assert_eq!(c.classify(&l, tol).unwrap().verdict, Verdict::Interior);
                }
            }
            if cones[0].classify(&l, tol).unwrap().verdict == Verdict::Exterior {
                for c in &cones {
                    prop_assert_eq!(c.classify(&l, tol).unwrap().verdict, Verdict::Exterior);
                }
            }
        }
    }
}
