//! Touching-probe certification of viscosity sub/supersolutions and a
//! discrete comparison principle for the lattice Laplacian.
//!
//! Probes are the field's own 2-jet with the Hessian shifted by ±εI. For a
//! C² field that is the extremal touching family; for lattice data it is a
//! heuristic, and reports say so.

use rayon::prelude::*;
use serde::Serialize;

use crate::cones::{ConeClass, ConeSpec, Verdict};
use crate::conformal::{conformal_matrix_from_jet, ConformalWeights};
use crate::error::{Error, Result};
use crate::fields::{FieldKind, GridField, ScalarField};
use crate::jet::Jet2;
use crate::linalg::{norm, solve_dense, Matrix};
use crate::sampling::sphere_directions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProbeSide {
    FromAbove,
    FromBelow,
}

#[derive(Debug, Clone, Serialize)]
pub struct TouchingProbe {
    pub center: Vec<f64>,
    pub jet: Jet2,
    pub side: ProbeSide,
    pub epsilon: f64,
}

/// Pivot floor of the normal equations of the stencil fit (unit spacing).
const FIT_PIVOT_FLOOR: f64 = 1e-10;

/// Least-squares quadratic through the 3ⁿ stencil around a lattice point.
/// Exact for quadratic data; the value is pinned to the sample.
pub fn grid_quadratic_fit(g: &GridField, idx: &[usize]) -> Result<Jet2> {
    let n = g.dim();
    if g.margin(idx) < 1 {
        return Err(Error::OutOfDomain(format!("stencil fit at boundary point {idx:?}")));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let unknowns = 1 + n + pairs.len();
    let mut ata = vec![0.0; unknowns * unknowns];
    let mut atb = vec![0.0; unknowns];
    let mut offset = vec![-1isize; n];
    let mut row = vec![0.0; unknowns];
    loop {
        let at: Vec<usize> = idx.iter().zip(&offset).map(|(&i, &o)| (i as isize + o) as usize).collect();
        let d: Vec<f64> = offset.iter().map(|&o| o as f64).collect();
        row[0] = 1.0;
        row[1..=n].copy_from_slice(&d);
        for (k, &(i, j)) in pairs.iter().enumerate() {
            row[1 + n + k] = if i == j { 0.5 * d[i] * d[i] } else { d[i] * d[j] };
        }
        let b = g.get(&at);
        for r in 0..unknowns {
            atb[r] += row[r] * b;
            for c in 0..unknowns {
                ata[r * unknowns + c] += row[r] * row[c];
            }
        }
        // odometer over {−1, 0, 1}ⁿ
        let mut axis = 0;
        loop {
            if axis == n {
                break;
            }
            offset[axis] += 1;
            if offset[axis] <= 1 {
                break;
            }
            offset[axis] = -1;
            axis += 1;
        }
        if axis == n {
            break;
        }
    }
    let coef = solve_dense(&ata, &atb, FIT_PIVOT_FLOOR)
        .ok_or_else(|| Error::FitFailure(format!("singular stencil normal equations at {idx:?}")))?;
    let h = g.spacing();
    let gradient: Vec<f64> = coef[1..=n].iter().map(|c| c / h).collect();
    let mut hessian = Matrix::zeros(n);
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let v = coef[1 + n + k] / (h * h);
        hessian.set(i, j, v);
        hessian.set(j, i, v);
    }
    Ok(Jet2::new(g.get(idx), gradient, hessian))
}

fn base_jet(u: &ScalarField, x0: &[f64]) -> Result<Jet2> {
    match u.kind() {
        FieldKind::Grid(g) => grid_quadratic_fit(g, &g.locate(x0)?),
        _ => u.eval_jet(x0),
    }
}

/// The (FromAbove, FromBelow) probes at `x0`: Hessian ± εI, value u(x0).
pub fn probe_at(u: &ScalarField, x0: &[f64], epsilon: f64) -> Result<(TouchingProbe, TouchingProbe)> {
    if !(epsilon >= 0.0) {
        return Err(Error::Config(format!("probe bump must be nonnegative, got {epsilon}")));
    }
    let jet = base_jet(u, x0)?;
    let make = |side: ProbeSide, s: f64| TouchingProbe {
        center: x0.to_vec(),
        jet: Jet2::new(jet.value, jet.gradient.clone(), jet.hessian.add_diagonal(s * epsilon)),
        side,
        epsilon,
    };
    Ok((make(ProbeSide::FromAbove, 1.0), make(ProbeSide::FromBelow, -1.0)))
}

#[derive(Debug, Clone, Serialize)]
pub struct PointRecord {
    pub point: Vec<f64>,
    pub subsolution_ok: bool,
    pub supersolution_ok: bool,
    /// cone class of λ(A^ψ) for the FromAbove probe, one per ε
    pub above: Vec<ConeClass>,
    /// same for the FromBelow probe
    pub below: Vec<ConeClass>,
    /// probes skipped because ψ(x₀) ≤ 0
    pub skipped: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ViscosityReport {
    pub records: Vec<PointRecord>,
    pub subsolution: bool,
    pub supersolution: bool,
    pub tolerance: f64,
    pub epsilons: Vec<f64>,
    pub cone: String,
    /// probes came from stencil fits of lattice data
    pub grid_mode: bool,
    pub note: Option<String>,
}

impl ViscosityReport {
    pub fn is_solution(&self) -> bool {
        self.subsolution && self.supersolution
    }
}

fn certify_point(u: &ScalarField, x0: &[f64], cone: &ConeSpec, epsilons: &[f64], tol: f64) -> Result<PointRecord> {
    let mut rec = PointRecord {
        point: x0.to_vec(),
        subsolution_ok: true,
        supersolution_ok: true,
        above: Vec::with_capacity(epsilons.len()),
        below: Vec::with_capacity(epsilons.len()),
        skipped: 0,
    };
    for &eps in epsilons {
        let (above, below) = probe_at(u, x0, eps)?;
        if above.jet.value <= 0.0 {
            rec.skipped += 2;
            continue;
        }
        let ca = cone.classify(
            &crate::cones::eigenvalues_sym(&conformal_matrix_from_jet(&above.jet, ConformalWeights::exact())?)?,
            tol,
        )?;
        let cb = cone.classify(
            &crate::cones::eigenvalues_sym(&conformal_matrix_from_jet(&below.jet, ConformalWeights::exact())?)?,
            tol,
        )?;
        rec.subsolution_ok &= ca.verdict != Verdict::Interior;
        rec.supersolution_ok &= cb.in_closure();
        rec.above.push(ca);
        rec.below.push(cb);
    }
    Ok(rec)
}

/// Checks the sub- and supersolution clauses at every point for every ε.
pub fn certify(
    u: &ScalarField,
    points: &[Vec<f64>],
    cone: &ConeSpec,
    epsilons: &[f64],
    tol: f64,
) -> Result<ViscosityReport> {
    if u.dim() != cone.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), found: cone.dim() });
    }
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    let records = points.par_iter().map(|x0| certify_point(u, x0, cone, epsilons, tol)).collect::<Result<Vec<_>>>()?;
    let grid_mode = u.contains_grid();
    Ok(ViscosityReport {
        subsolution: records.iter().all(|r| r.subsolution_ok),
        supersolution: records.iter().all(|r| r.supersolution_ok),
        records,
        tolerance: tol,
        epsilons: epsilons.to_vec(),
        cone: cone.label(),
        grid_mode,
        note: grid_mode.then(|| {
            "lattice probes are stencil fits; passing is necessary, not sufficient, for non-C2 data".to_string()
        }),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    /// min of u − v over interior lattice points other than the puncture
    pub min_gap: f64,
    pub argmin: Vec<f64>,
    pub argmin_index: Vec<usize>,
    /// Δ_h u ≤ tol off the puncture
    pub super_ok: bool,
    /// Δ_h v ≥ −tol everywhere inside
    pub sub_ok: bool,
    /// u − v > 0 on the lattice boundary
    pub boundary_ok: bool,
    /// u − v > 0 at the puncture
    pub puncture_ok: bool,
    pub max_super_residual: f64,
    pub min_sub_residual: f64,
    pub min_boundary_gap: f64,
}

impl ComparisonReport {
    pub fn hypotheses_hold(&self) -> bool {
        self.super_ok && self.sub_ok && self.boundary_ok && self.puncture_ok
    }

    pub fn conclusion_holds(&self) -> bool {
        self.min_gap > 0.0
    }
}

/// Checks the hypotheses and the conclusion of the punctured comparison
/// principle separately; nothing is inferred from the hypotheses.
pub fn discrete_comparison(u: &GridField, v: &GridField, puncture: &[usize], tol: f64) -> Result<ComparisonReport> {
    if !u.same_lattice(v) {
        return Err(Error::LatticeMismatch(format!(
            "shapes {:?}/{:?}, spacings {}/{}, origins {:?}/{:?}",
            u.shape(),
            v.shape(),
            u.spacing(),
            v.spacing(),
            u.origin(),
            v.origin()
        )));
    }
    if puncture.len() != u.dim() || u.margin(puncture) < 1 {
        return Err(Error::OutOfDomain(format!("puncture {puncture:?} is not an interior lattice point")));
    }
    let puncture_flat = u.flatten(puncture);
    let mut rep = ComparisonReport {
        min_gap: f64::INFINITY,
        argmin: Vec::new(),
        argmin_index: Vec::new(),
        super_ok: true,
        sub_ok: true,
        boundary_ok: true,
        puncture_ok: u.get(puncture) - v.get(puncture) > 0.0,
        max_super_residual: f64::NEG_INFINITY,
        min_sub_residual: f64::INFINITY,
        min_boundary_gap: f64::INFINITY,
    };
    for flat in 0..u.len() {
        let idx = u.unflatten(flat);
        let gap = u.get(&idx) - v.get(&idx);
        if u.is_boundary(&idx) {
            rep.min_boundary_gap = rep.min_boundary_gap.min(gap);
            continue;
        }
        let lv = v.discrete_laplacian(&idx)?;
        rep.min_sub_residual = rep.min_sub_residual.min(lv);
        if flat == puncture_flat {
            continue;
        }
        let lu = u.discrete_laplacian(&idx)?;
        rep.max_super_residual = rep.max_super_residual.max(lu);
        if gap < rep.min_gap {
            rep.min_gap = gap;
            rep.argmin_index = idx;
        }
    }
    rep.super_ok = rep.max_super_residual <= tol;
    rep.sub_ok = rep.min_sub_residual >= -tol;
    rep.boundary_ok = rep.min_boundary_gap > 0.0;
    rep.argmin = u.point(&rep.argmin_index);
    Ok(rep)
}

/// Jacobi iteration for Δ_h f = 0 with the lattice boundary and the listed
/// extra nodes held fixed. Stops once no node moves by more than `tol`.
pub fn discrete_harmonic_fill(g: &GridField, fixed: &[Vec<usize>], tol: f64, max_sweeps: usize) -> Result<GridField> {
    let n = g.dim();
    let fixed_flat: std::collections::HashSet<usize> = fixed.iter().map(|i| g.flatten(i)).collect();
    let free: Vec<usize> =
        (0..g.len()).filter(|&f| !g.is_boundary(&g.unflatten(f)) && !fixed_flat.contains(&f)).collect();
    let strides: Vec<usize> = {
        let mut s = vec![1; n];
        for i in (0..n.saturating_sub(1)).rev() {
            s[i] = s[i + 1] * g.shape()[i + 1];
        }
        s
    };
    let mut cur = g.samples().to_vec();
    let mut next = cur.clone();
    for _ in 0..max_sweeps {
        let cur_ref = &cur;
        let updates: Vec<(usize, f64)> = free
            .par_iter()
            .map(|&f| {
                let acc: f64 = strides.iter().map(|&s| cur_ref[f + s] + cur_ref[f - s]).sum();
                (f, acc / (2 * n) as f64)
            })
            .collect();
        let mut moved: f64 = 0.0;
        for (f, val) in updates {
            moved = moved.max((val - cur[f]).abs());
            next[f] = val;
        }
        std::mem::swap(&mut cur, &mut next);
        if moved <= tol {
            return GridField::new(g.origin().to_vec(), g.spacing(), g.shape().to_vec(), cur);
        }
    }
    Err(Error::NoConvergence { residual: tol })
}

/// Functions from the constancy argument: v = ½(min_{|y|=1} u)|y|^{2−n}
/// and the unit-sphere Kelvin transforms u₁, v₁.
#[derive(Debug, Clone)]
pub struct ProofPair {
    pub sphere_min: f64,
    pub v: ScalarField,
    pub u1: ScalarField,
    pub v1: ScalarField,
}

pub fn build_proof_pair(u: &ScalarField, sphere_samples: usize) -> Result<ProofPair> {
    let n = u.dim();
    let mut sphere_min = f64::INFINITY;
    for d in sphere_directions(n, sphere_samples) {
        sphere_min = sphere_min.min(u.value(&d)?);
    }
    if !(sphere_min > 0.0) {
        return Err(Error::NonPositiveValue { value: sphere_min, context: "on the unit sphere".into() });
    }
    let v = ScalarField::fundamental(vec![0.0; n])?.scaled(0.5 * sphere_min)?;
    let origin = vec![0.0; n];
    Ok(ProofPair { sphere_min, u1: u.kelvin_transform(origin.clone(), 1.0)?, v1: v.kelvin_transform(origin, 1.0)?, v })
}

/// For each radius R, min over the sphere sample of R^{n−2} u(y) with |y| = R.
pub fn decay_lower_bound(u: &ScalarField, radii: &[f64], samples_per_sphere: usize) -> Result<Vec<f64>> {
    let n = u.dim();
    let dirs = sphere_directions(n, samples_per_sphere);
    radii
        .iter()
        .map(|&r| {
            let mut m = f64::INFINITY;
            for d in &dirs {
                let y: Vec<f64> = d.iter().map(|v| v * r).collect();
                let rr = norm(&y);
                m = m.min(rr.powi(n as i32 - 2) * u.value(&y)?);
            }
            Ok(m)
        })
        .collect()
}
