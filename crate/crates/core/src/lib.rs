//! Conformally invariant machinery on ℝⁿ: Möbius maps and Kelvin
//! transforms, the conformal Hessian, σ_k cones, viscosity certification,
//! and a moving-spheres engine, all evaluated on closed-form or sampled
//! positive fields.

pub mod cones;
pub mod conformal;
pub mod error;
pub mod fields;
pub mod jet;
pub mod linalg;
pub mod mobius;
pub mod sampling;
pub mod spheres;
pub mod suite;
pub mod tolerances;
pub mod viscosity;

pub use cones::{eigenvalues_sym, sigma_k, ConeClass, ConeKind, ConeSpec, Verdict};
pub use conformal::{a_w, conformal_hessian, cross_check, invariance_residual, trace_identity_residual, ConformalEval};
pub use error::{Error, Result};
pub use fields::{FieldKind, GridField, Polynomial, ScalarField};
pub use jet::Jet2;
pub use linalg::Matrix;
pub use mobius::{kelvin_point, Generator, MobiusMap};
pub use spheres::{critical_lambda, CriticalLambda, SphereSweepConfig, SphereSweepReport};
pub use viscosity::{certify, discrete_comparison, ComparisonReport, ProbeSide, TouchingProbe, ViscosityReport};
