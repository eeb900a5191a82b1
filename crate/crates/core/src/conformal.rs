//! The conformal Hessian A^u, its w-form A_w = w∇²w − ½|∇w|²I, and the
//! identity/invariance residuals built on them.

use serde::Serialize;

use crate::cones::{eigenvalues_sym, elementary_symmetric, ConeClass, ConeSpec};
use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::jet::Jet2;
use crate::linalg::{norm_sq, Matrix};
use crate::mobius::MobiusMap;
use crate::tolerances::CONE_TOL;

#[derive(Debug, Clone, Serialize)]
pub struct ConformalEval {
    pub matrix: Matrix,
    pub eigenvalues: Vec<f64>,
    /// σ_1 … σ_n of the eigenvalues
    pub sigmas: Vec<f64>,
    pub cone_class: ConeClass,
}

impl ConformalEval {
    pub fn from_matrix(matrix: Matrix, cone: &ConeSpec, tol: f64) -> Result<Self> {
        if matrix.dim() != cone.dim() {
            return Err(Error::DimensionMismatch { expected: cone.dim(), found: matrix.dim() });
        }
        let eigenvalues = eigenvalues_sym(&matrix)?;
        let sigmas = elementary_symmetric(&eigenvalues)[1..].to_vec();
        let cone_class = cone.classify(&eigenvalues, tol)?;
        Ok(Self { matrix, eigenvalues, sigmas, cone_class })
    }
}

/// Coefficients and exponents of A^u. [`ConformalWeights::exact`] is the
/// operator itself; the other constructors exist to build negative
/// controls that the checks must reject.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConformalWeights {
    /// multiplies the 2n/(n−2)² coefficient of ∇u⊗∇u
    pub gradient_coefficient_scale: f64,
    /// added to the exponent −(n+2)/(n−2) of the ∇²u term
    pub hessian_exponent_shift: f64,
}

impl Default for ConformalWeights {
    fn default() -> Self {
        Self::exact()
    }
}

impl ConformalWeights {
    pub const fn exact() -> Self {
        Self { gradient_coefficient_scale: 1.0, hessian_exponent_shift: 0.0 }
    }

    pub fn perturbed_gradient_coefficient(relative: f64) -> Self {
        Self { gradient_coefficient_scale: 1.0 + relative, ..Self::exact() }
    }

    pub fn perturbed_exponent(shift: f64) -> Self {
        Self { hessian_exponent_shift: shift, ..Self::exact() }
    }

    pub fn is_exact(&self) -> bool {
        *self == Self::exact()
    }
}

fn require_n3(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::DimensionTooSmall { n, min: 3 });
    }
    Ok(())
}

fn require_positive(jet: &Jet2, y: &[f64]) -> Result<()> {
    if jet.value <= 0.0 || !jet.value.is_finite() {
        return Err(Error::NonPositiveValue { value: jet.value, context: format!("at {y:?}") });
    }
    Ok(())
}

/// A^u assembled from a 2-jet of u (n ≥ 3, u > 0):
/// −(2/(n−2)) u^{−(n+2)/(n−2)} ∇²u + (2n/(n−2)²) u^{−2n/(n−2)} ∇u⊗∇u
/// − (2/(n−2)²) u^{−2n/(n−2)} |∇u|² I.
pub fn conformal_matrix_from_jet(jet: &Jet2, weights: ConformalWeights) -> Result<Matrix> {
    let n = jet.dim();
    require_n3(n)?;
    let nf = n as f64;
    let m = nf - 2.0;
    let u = jet.value;
    let hess_factor = -(2.0 / m) * u.powf(-(nf + 2.0) / m + weights.hessian_exponent_shift);
    let grad_power = u.powf(-2.0 * nf / m);
    let outer_factor = weights.gradient_coefficient_scale * (2.0 * nf / (m * m)) * grad_power;
    let iso = -(2.0 / (m * m)) * grad_power * norm_sq(&jet.gradient);
    let mut a = jet.hessian.scale(hess_factor);
    a.axpy(outer_factor, &Matrix::outer(&jet.gradient, &jet.gradient));
    Ok(a.add_diagonal(iso).symmetrized())
}

/// A_w = w∇²w − ½|∇w|² I from a 2-jet of w (n ≥ 2, w > 0).
pub fn a_w_matrix_from_jet(jet: &Jet2) -> Matrix {
    jet.hessian.scale(jet.value).add_diagonal(-0.5 * norm_sq(&jet.gradient)).symmetrized()
}

pub fn conformal_matrix(u: &ScalarField, y: &[f64], weights: ConformalWeights) -> Result<Matrix> {
    require_n3(u.dim())?;
    let jet = u.eval_jet(y)?;
    require_positive(&jet, y)?;
    conformal_matrix_from_jet(&jet, weights)
}

pub fn a_w_matrix(w: &ScalarField, y: &[f64]) -> Result<Matrix> {
    let jet = w.eval_jet(y)?;
    require_positive(&jet, y)?;
    Ok(a_w_matrix_from_jet(&jet))
}

pub fn conformal_hessian(u: &ScalarField, y: &[f64], cone: &ConeSpec) -> Result<ConformalEval> {
    conformal_hessian_weighted(u, y, cone, ConformalWeights::exact())
}

pub fn conformal_hessian_weighted(
    u: &ScalarField,
    y: &[f64],
    cone: &ConeSpec,
    weights: ConformalWeights,
) -> Result<ConformalEval> {
    ConformalEval::from_matrix(conformal_matrix(u, y, weights)?, cone, CONE_TOL)
}

/// A_w of a field given directly as w; the only route for n = 2.
pub fn a_w(w: &ScalarField, y: &[f64], cone: &ConeSpec) -> Result<ConformalEval> {
    ConformalEval::from_matrix(a_w_matrix(w, y)?, cone, CONE_TOL)
}

/// max |A^u − A_w| entrywise with w = u^{−2/(n−2)}.
pub fn cross_check(u: &ScalarField, y: &[f64]) -> Result<f64> {
    cross_check_weighted(u, y, ConformalWeights::exact())
}

pub fn cross_check_weighted(u: &ScalarField, y: &[f64], weights: ConformalWeights) -> Result<f64> {
    let a = conformal_matrix(u, y, weights)?;
    let b = a_w_matrix(&u.w_substitution()?, y)?;
    Ok(a.max_abs_diff(&b))
}

/// The trace identity for one jet: returns (trace A^u, −(2/(n−2)) u^{−(n+2)/(n−2)} Δu).
pub fn trace_identity_terms(u: &ScalarField, y: &[f64]) -> Result<(f64, f64)> {
    require_n3(u.dim())?;
    let jet = u.eval_jet(y)?;
    require_positive(&jet, y)?;
    let nf = u.dim() as f64;
    let trace = conformal_matrix_from_jet(&jet, ConformalWeights::exact())?.trace();
    let rhs = -(2.0 / (nf - 2.0)) * jet.value.powf(-(nf + 2.0) / (nf - 2.0)) * jet.laplacian();
    Ok((trace, rhs))
}

/// trace(A^u) − (−(2/(n−2)) u^{−(n+2)/(n−2)} Δu), unnormalized.
pub fn trace_identity_residual(u: &ScalarField, y: &[f64]) -> Result<f64> {
    let (trace, rhs) = trace_identity_terms(u, y)?;
    Ok(trace - rhs)
}

/// max |λ(A^{u_ψ})(y) − λ(A^u)(ψ(y))| over sorted eigenvalues.
pub fn invariance_residual(u: &ScalarField, psi: &MobiusMap, y: &[f64]) -> Result<f64> {
    invariance_residual_weighted(u, psi, y, ConformalWeights::exact())
}

pub fn invariance_residual_weighted(
    u: &ScalarField,
    psi: &MobiusMap,
    y: &[f64],
    weights: ConformalWeights,
) -> Result<f64> {
    let pushed = u.pushforward(psi.clone())?;
    let left = eigenvalues_sym(&conformal_matrix(&pushed, y, weights)?)?;
    let right = eigenvalues_sym(&conformal_matrix(u, &psi.apply(y)?, weights)?)?;
    Ok(left.iter().zip(&right).fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::Verdict;
    use crate::fields::Polynomial;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn g1(n: usize) -> ConeSpec {
        ConeSpec::gamma_k(n, 1).unwrap()
    }

    fn harmonic() -> ScalarField {
        let p = Polynomial::from_pairs(3, &[(10.0, &[0, 0, 0]), (1.0, &[1, 1, 0])]).unwrap();
        ScalarField::harmonic_polynomial(p).unwrap()
    }

    fn random_point(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Vec<f64> {
        (0..3).map(|_| rng.gen_range(lo..hi)).collect()
    }

    #[test]
    fn constant_has_zero_matrix_on_every_boundary() {
        let u = ScalarField::constant(3, 4.0).unwrap();
        for k in 1..=3 {
            let e = conformal_hessian(&u, &[0.3, -1.0, 2.0], &ConeSpec::gamma_k(3, k).unwrap()).unwrap();
            assert_eq!(e.matrix.max_abs(), 0.0);
            assert_eq!(e.eigenvalues, vec![0.0; 3]);
            assert_eq!(e.cone_class.verdict, Verdict::Boundary);
        }
    }

    #[test]
    fn bubble_spectrum_is_two() {
        let u = ScalarField::bubble(vec![0.0; 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let y = random_point(&mut rng, -3.0, 3.0);
            let e = conformal_hessian(&u, &y, &g1(3)).unwrap();
            for l in &e.eigenvalues {
                assert!((l - 2.0).abs() < 1e-10, "{l}");
            }
            assert_eq!(e.cone_class.verdict, Verdict::Interior);
            // w = 1 + |y|² by hand: ∇w = 2y, ∇²w = 2I
            let w = ScalarField::polynomial(
                Polynomial::from_pairs(
                    3,
                    &[(1.0, &[0, 0, 0]), (1.0, &[2, 0, 0]), (1.0, &[0, 2, 0]), (1.0, &[0, 0, 2])],
                )
                .unwrap(),
            )
            .unwrap();
            let aw = a_w(&w, &y, &g1(3)).unwrap();
            assert!(aw.matrix.max_abs_diff(&Matrix::scaled_identity(3, 2.0)) < 1e-12);
        }
    }

    #[test]
    fn fundamental_solution_is_flat() {
        let u = ScalarField::fundamental(vec![0.0; 3]).unwrap();
        let e = conformal_hessian(&u, &[2.0, 0.0, 0.0], &g1(3)).unwrap();
        assert!(e.matrix.max_abs() < 1e-14);
        assert_eq!(e.cone_class.verdict, Verdict::Boundary);
        let w = ScalarField::polynomial(
            Polynomial::from_pairs(3, &[(1.0, &[2, 0, 0]), (1.0, &[0, 2, 0]), (1.0, &[0, 0, 2])]).unwrap(),
        )
        .unwrap();
        assert!(a_w(&w, &[2.0, 0.0, 0.0], &g1(3)).unwrap().matrix.max_abs() < 1e-14);
        assert_eq!(
            a_w(&ScalarField::constant(3, 2.0).unwrap(), &[1.0, 1.0, 1.0], &g1(3)).unwrap().matrix.max_abs(),
            0.0
        );
    }

    #[test]
    fn a_w_serves_two_dimensions() {
        // w = 1 + |y|² in the plane also gives 2I
        let w = ScalarField::polynomial(
            Polynomial::from_pairs(2, &[(1.0, &[0, 0]), (1.0, &[2, 0]), (1.0, &[0, 2])]).unwrap(),
        )
        .unwrap();
        let e = a_w(&w, &[0.4, -1.2], &g1(2)).unwrap();
        assert!((e.eigenvalues[0] - 2.0).abs() < 1e-12 && (e.eigenvalues[1] - 2.0).abs() < 1e-12);
        let u2 = ScalarField::constant(2, 1.0).unwrap();
        assert_eq!(conformal_hessian(&u2, &[0.0, 0.0], &g1(2)).unwrap_err(), Error::DimensionTooSmall { n: 2, min: 3 });
    }

    #[test]
    fn cross_check_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let bubble = ScalarField::bubble(vec![0.0; 3]).unwrap();
        let h = harmonic();
        for _ in 0..50 {
            let y = random_point(&mut rng, -2.0, 2.0);
            assert!(cross_check(&bubble, &y).unwrap() <= 1e-10);
            let y = random_point(&mut rng, -1.0, 1.0);
            assert!(cross_check(&h, &y).unwrap() <= 1e-9);
        }
        assert_eq!(cross_check(&ScalarField::constant(3, 5.0).unwrap(), &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        // the perturbed operator disagrees with A_w wherever ∇u ≠ 0
        let bad =
            cross_check_weighted(&bubble, &[1.0, 0.5, 0.0], ConformalWeights::perturbed_gradient_coefficient(1e-3));
        assert!(bad.unwrap() > 1e-6);
    }

    #[test]
    fn trace_identity_examples() {
        let h = harmonic();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let y = random_point(&mut rng, -1.0, 1.0);
            let (trace, rhs) = trace_identity_terms(&h, &y).unwrap();
            assert_eq!(rhs, 0.0);
            assert!(trace.abs() <= 1e-12);
        }
        assert_eq!(trace_identity_residual(&ScalarField::constant(3, 3.0).unwrap(), &[0.0; 3]).unwrap(), 0.0);
        let b = ScalarField::bubble(vec![0.0; 3]).unwrap();
        let (trace, rhs) = trace_identity_terms(&b, &[0.0; 3]).unwrap();
        // Δu(0) = −3 and u(0) = 1, so the right side is −2·(−3) = 6
        assert!((trace - 6.0).abs() < 1e-12);
        assert!((rhs - 6.0).abs() < 1e-12);
    }

    #[test]
    fn invariance_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let bubble = ScalarField::bubble(vec![0.0; 3]).unwrap();
        let fundamental = ScalarField::fundamental(vec![0.0; 3]).unwrap();
        let t = MobiusMap::translation(vec![0.3, -1.0, 2.0]).unwrap();
        for _ in 0..20 {
            let y = random_point(&mut rng, -1.0, 1.0);
            assert!(invariance_residual(&harmonic(), &t, &y).unwrap() <= 1e-12);
            let y = rng_annulus(&mut rng, 0.5, 2.0);
            assert!(invariance_residual(&bubble, &MobiusMap::inversion(3), &y).unwrap() <= 1e-8);
            let s = MobiusMap::scaling(3, 3.0).unwrap();
            assert!(invariance_residual(&fundamental, &s, &y).unwrap() <= 1e-10);
        }
    }

    fn rng_annulus(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Vec<f64> {
        loop {
            let y = random_point(rng, -hi, hi);
            let r = norm_sq(&y).sqrt();
            if (lo..=hi).contains(&r) {
                return y;
            }
        }
    }

    #[test]
    fn corrupted_exponent_breaks_invariance() {
        let bubble = ScalarField::bubble(vec![0.0; 3]).unwrap();
        let y = [0.8, 0.3, -0.4];
        let r = invariance_residual_weighted(
            &bubble,
            &MobiusMap::inversion(3),
            &y,
            ConformalWeights::perturbed_exponent(0.05),
        )
        .unwrap();
        assert!(r > 1e-3, "{r}");
    }

    #[test]
    fn positive_rescaling_scales_the_spectrum() {
        // eigenvalues of A^{cu} are c^{−4/(n−2)} times those of A^u
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let fields = [ScalarField::bubble(vec![0.5, 0.0, -0.5]).unwrap(), harmonic()];
        for u in &fields {
            for &c in &[0.5, 2.0, 7.0] {
                let cu = u.scaled(c).unwrap();
                let y = random_point(&mut rng, -1.0, 1.0);
                let a = conformal_hessian(u, &y, &g1(3)).unwrap().eigenvalues;
                let b = conformal_hessian(&cu, &y, &g1(3)).unwrap().eigenvalues;
                let f = c.powf(-4.0);
                for (x, z) in a.iter().zip(&b) {
                    assert!((x * f - z).abs() <= 1e-12 * x.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn eval_spectrum_is_consistent_with_matrix() {
        let u = ScalarField::bubble(vec![1.0, 0.0, 0.0]).unwrap();
        let psi = MobiusMap::from_word(
            3,
            vec![
                crate::mobius::Generator::Translation(vec![0.5, 0.5, 0.0]),
                crate::mobius::Generator::Inversion,
                crate::mobius::Generator::Scaling(1.7),
            ],
        )
        .unwrap();
        let pushed = u.pushforward(psi).unwrap();
        let e = conformal_hessian(&pushed, &[0.2, 0.9, -0.3], &ConeSpec::gamma_k(3, 2).unwrap()).unwrap();
        let tr: f64 = e.eigenvalues.iter().sum();
        let det: f64 = e.eigenvalues.iter().product();
        assert!((tr - e.matrix.trace()).abs() <= 1e-9 * tr.abs().max(1.0));
        assert!((det - e.matrix.det()).abs() <= 1e-9 * det.abs().max(1.0));
        assert!((e.sigmas[0] - tr).abs() <= 1e-12 * tr.abs().max(1.0));
        assert!((e.sigmas[2] - det).abs() <= 1e-9 * det.abs().max(1.0));
    }
}
