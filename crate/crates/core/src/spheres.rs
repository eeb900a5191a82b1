//! Moving spheres: the sampled gap (1+δ)u − u_{x,λ} on the annulus
//! λ ≤ |y−x| ≤ R, the start radius λ₀(x), and the critical radius λ̄_δ(x).
//!
//! The unbounded exterior is truncated at R and every report carries R.
//! "No failure up to Λ" is reported as [`CriticalLambda::Censored`], never
//! as an infinite radius.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::linalg::{norm, sub};
use crate::sampling::{log_spaced, sphere_directions};
use crate::tolerances::GAP_FLOOR;

pub const MIN_SAMPLES: usize = 16;
/// Size of the geometric λ grid scanned before bisection.
pub const LAMBDA_GRID: usize = 64;
/// Innermost start-radius sample, as a fraction of R.
const START_RADIUS_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphereSweepConfig {
    pub center: Vec<f64>,
    pub delta: f64,
    pub lambda_max: f64,
    pub outer_radius: f64,
    pub radial_samples: usize,
    pub angular_samples: usize,
    pub bisect_tol: f64,
}

impl SphereSweepConfig {
    pub fn new(center: Vec<f64>, delta: f64, lambda_max: f64, outer_radius: f64) -> Self {
        Self { center, delta, lambda_max, outer_radius, radial_samples: 96, angular_samples: 400, bisect_tol: 1e-4 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(0.0..1.0).contains(&self.delta) {
            return bad(format!("delta must lie in [0, 1), got {}", self.delta));
        }
        if !(self.lambda_max > 0.0) {
            return bad(format!("lambda_max must be positive, got {}", self.lambda_max));
        }
        if !(self.outer_radius > self.lambda_max) || !self.outer_radius.is_finite() {
            return bad(format!("outer radius {} must exceed lambda_max {}", self.outer_radius, self.lambda_max));
        }
        if self.radial_samples < MIN_SAMPLES || self.angular_samples < MIN_SAMPLES {
            return bad(format!(
                "need at least {MIN_SAMPLES} radial and angular samples, got {} and {}",
                self.radial_samples, self.angular_samples
            ));
        }
        if !(self.bisect_tol > 0.0) {
            return bad(format!("bisect_tol must be positive, got {}", self.bisect_tol));
        }
        if self.center.iter().any(|v| !v.is_finite()) {
            return bad(format!("center {:?} is not finite", self.center));
        }
        Ok(())
    }

    fn check_field(&self, u: &ScalarField) -> Result<()> {
        self.validate()?;
        if u.dim() != self.center.len() {
            return Err(Error::DimensionMismatch { expected: u.dim(), found: self.center.len() });
        }
        if u.dim() < 3 {
            return Err(Error::DimensionTooSmall { n: u.dim(), min: 3 });
        }
        reject_grid(u)
    }
}

fn reject_grid(u: &ScalarField) -> Result<()> {
    if u.contains_grid() {
        return Err(Error::OutOfDomain("Kelvin sweeps need off-lattice values; grid fields are not supported".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CriticalLambda {
    Finite(f64),
    /// no failure found for λ ≤ Λ
    Censored(f64),
}

impl CriticalLambda {
    pub fn is_censored(&self) -> bool {
        matches!(self, CriticalLambda::Censored(_))
    }

    pub fn value(&self) -> f64 {
        match self {
            CriticalLambda::Finite(v) | CriticalLambda::Censored(v) => *v,
        }
    }
}

impl std::fmt::Display for CriticalLambda {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CriticalLambda::Finite(v) => write!(f, "{v}"),
            CriticalLambda::Censored(v) => write!(f, "CENSORED({v})"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SphereSweepReport {
    pub center: Vec<f64>,
    pub delta: f64,
    pub lambda_start: f64,
    pub lambda_bar: CriticalLambda,
    /// (λ, sampled min gap) on the scan grid
    pub min_gap_profile: Vec<(f64, f64)>,
    /// sample point of the first negative gap
    pub witness: Option<Vec<f64>>,
    pub outer_radius: f64,
}

/// Sample points of the annulus λ ≤ |y−x| ≤ R: radii (log-spaced, r = λ
/// exact) outer, directions inner.
fn annulus(x: &[f64], lambda: f64, cfg: &SphereSweepConfig, dirs: &[Vec<f64>]) -> Vec<(f64, Vec<f64>)> {
    let radii = log_spaced(lambda, cfg.outer_radius, cfg.radial_samples);
    let mut out = Vec::with_capacity(radii.len() * dirs.len());
    for &r in &radii {
        for d in dirs {
            out.push((r, x.iter().zip(d).map(|(xi, di)| xi + r * di).collect()));
        }
    }
    out
}

/// `(min, index)` with ties to the smaller index; NaN never wins.
fn min_by_index(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    match a.0.partial_cmp(&b.0) {
        Some(std::cmp::Ordering::Less) => a,
        Some(std::cmp::Ordering::Greater) => b,
        _ if b.0.is_nan() => a,
        _ if a.0.is_nan() => b,
        _ => {
            if a.1 <= b.1 {
                a
            } else {
                b
            }
        }
    }
}

fn parallel_min<F>(points: &[(f64, Vec<f64>)], f: F) -> Result<(f64, usize)>
where
    F: Fn(f64, &[f64]) -> Result<f64> + Sync,
{
    points
        .par_iter()
        .enumerate()
        .map(|(i, (r, y))| f(*r, y).map(|v| (v, i)))
        .try_reduce(|| (f64::INFINITY, usize::MAX), |a, b| Ok(min_by_index(a, b)))
}

/// Min over the annulus sample of (1+δ)u(y) − u_{x,λ}(y), and its argmin.
pub fn sweep_min_gap(
    u: &ScalarField,
    x: &[f64],
    lambda: f64,
    delta: f64,
    cfg: &SphereSweepConfig,
) -> Result<(f64, Vec<f64>)> {
    let mut local = cfg.clone();
    local.center = x.to_vec();
    local.delta = delta;
    local.check_field(u)?;
    if !(lambda > 0.0) || lambda > cfg.lambda_max {
        return Err(Error::Config(format!("lambda {lambda} outside (0, {}]", cfg.lambda_max)));
    }
    let dirs = sphere_directions(u.dim(), cfg.angular_samples);
    sweep_with(u, x, lambda, delta, cfg, &dirs)
}

fn sweep_with(
    u: &ScalarField,
    x: &[f64],
    lambda: f64,
    delta: f64,
    cfg: &SphereSweepConfig,
    dirs: &[Vec<f64>],
) -> Result<(f64, Vec<f64>)> {
    let k = u.kelvin_transform(x.to_vec(), lambda)?;
    let pts = annulus(x, lambda, cfg, dirs);
    let (gap, i) = parallel_min(&pts, |_, y| Ok((1.0 + delta) * u.value(y)? - k.value(y)?))?;
    Ok((gap, pts[i].1.clone()))
}

/// λ₀(x) from the start-radius construction: r₀ is the largest sampled
/// radius up to which r^{(n−2)/2} u(x + rθ) increases strictly along every
/// sampled ray; c = min r^{n−2} u over r₀ ≤ r ≤ R; λ₀ = (c / max_{|z−x| ≤ r₀} u)^{1/(n−2)}.
pub fn start_lambda(u: &ScalarField, x: &[f64], cfg: &SphereSweepConfig) -> Result<f64> {
    let mut local = cfg.clone();
    local.center = x.to_vec();
    local.check_field(u)?;
    let n = u.dim();
    let half = (n as f64 - 2.0) / 2.0;
    let radii = log_spaced(cfg.outer_radius * START_RADIUS_FRACTION, cfg.outer_radius, cfg.radial_samples);
    let dirs = sphere_directions(n, cfg.angular_samples);
    // values[d][i] = u(x + r_i θ_d)
    let values: Vec<Vec<f64>> = dirs
        .par_iter()
        .map(|d| {
            radii
                .iter()
                .map(|&r| u.value(&x.iter().zip(d).map(|(xi, di)| xi + r * di).collect::<Vec<_>>()))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut top = radii.len() - 1;
    for row in &values {
        let scaled: Vec<f64> = row.iter().zip(&radii).map(|(v, r)| r.powf(half) * v).collect();
        let k = scaled.windows(2).position(|w| !(w[0] < w[1])).unwrap_or(radii.len() - 1);
        top = top.min(k);
    }
    if top == 0 {
        return Err(Error::MonotonicityNotFound(format!(
            "r^{half}u is not increasing along every ray at x = {x:?} from r = {}",
            radii[0]
        )));
    }
    let mut c = f64::INFINITY;
    let mut m = u.value(x)?;
    for row in &values {
        for (i, (&v, &r)) in row.iter().zip(&radii).enumerate() {
            if i >= top {
                c = c.min(r.powf(2.0 * half) * v);
            }
            if i <= top {
                m = m.max(v);
            }
        }
    }
    Ok((c / m).powf(1.0 / (n as f64 - 2.0)))
}

/// Scans λ geometrically from min(λ₀, Λ)/4 to Λ and bisects the first
/// failure, returning the last λ with a nonnegative sampled gap.
pub fn critical_lambda(u: &ScalarField, cfg: &SphereSweepConfig) -> Result<SphereSweepReport> {
    cfg.check_field(u)?;
    let x = &cfg.center;
    let lambda_start = start_lambda(u, x, cfg)?;
    let dirs = sphere_directions(u.dim(), cfg.angular_samples);
    let gap = |l: f64| sweep_with(u, x, l, cfg.delta, cfg, &dirs);

    let lo_grid = lambda_start.min(cfg.lambda_max) / 4.0;
    let grid = log_spaced(lo_grid, cfg.lambda_max, LAMBDA_GRID);
    let mut profile = Vec::with_capacity(grid.len());
    let mut failure: Option<(usize, Vec<f64>)> = None;
    for (i, &l) in grid.iter().enumerate() {
        let (g, at) = gap(l)?;
        profile.push((l, g));
        if g < -GAP_FLOOR {
            failure = Some((i, at));
            break;
        }
    }
    let Some((i, mut witness)) = failure else {
        return Ok(SphereSweepReport {
            center: x.clone(),
            delta: cfg.delta,
            lambda_start,
            lambda_bar: CriticalLambda::Censored(cfg.lambda_max),
            min_gap_profile: profile,
            witness: None,
            outer_radius: cfg.outer_radius,
        });
    };
    // λ → 0 is the degenerate sphere; treat it as passing without sampling
    let mut lo = if i == 0 { 0.0 } else { grid[i - 1] };
    let mut hi = grid[i];
    while hi - lo > cfg.bisect_tol {
        let mid = 0.5 * (lo + hi);
        let (g, at) = gap(mid)?;
        if g < -GAP_FLOOR {
            hi = mid;
            witness = at;
        } else {
            lo = mid;
        }
    }
    Ok(SphereSweepReport {
        center: x.clone(),
        delta: cfg.delta,
        lambda_start,
        lambda_bar: CriticalLambda::Finite(lo),
        min_gap_profile: profile,
        witness: Some(witness),
        outer_radius: cfg.outer_radius,
    })
}

/// max |((u_{x,λ})_{x,λ})(y) − u(y)| / u(y) over the sample.
pub fn involution_residual(u: &ScalarField, x: &[f64], lambda: f64, sample: &[Vec<f64>]) -> Result<f64> {
    reject_grid(u)?;
    let twice = u.kelvin_transform(x.to_vec(), lambda)?.kelvin_transform(x.to_vec(), lambda)?;
    sample
        .par_iter()
        .map(|y| {
            if norm(&sub(y, x)) < 1e-6 {
                return Err(Error::SingularPoint(format!("sample {y:?} too close to the center {x:?}")));
            }
            let base = u.value(y)?;
            Ok((twice.value(y)? - base).abs() / base)
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// (c_hat, worst_ratio): min of [(1+δ)u − u_{x,λ̄}]·|y−x|^{n−2} and of
/// [(1+δ)u − u_{x,λ̄}] / ((1+δ)u) over the annulus sample λ̄ ≤ |y−x| ≤ R.
pub fn persistent_gap_check(
    u: &ScalarField,
    x: &[f64],
    delta: f64,
    lambda_bar: f64,
    cfg: &SphereSweepConfig,
) -> Result<(f64, f64)> {
    let mut local = cfg.clone();
    local.center = x.to_vec();
    local.delta = delta;
    local.check_field(u)?;
    if !(lambda_bar > 0.0 && lambda_bar < cfg.outer_radius) {
        return Err(Error::Config(format!("lambda_bar {lambda_bar} outside (0, R)")));
    }
    let n = u.dim() as i32;
    let k = u.kelvin_transform(x.to_vec(), lambda_bar)?;
    let dirs = sphere_directions(u.dim(), cfg.angular_samples);
    let pts = annulus(x, lambda_bar, cfg, &dirs);
    let terms = pts
        .par_iter()
        .map(|(r, y)| {
            let lifted = (1.0 + delta) * u.value(y)?;
            let g = lifted - k.value(y)?;
            Ok((g * r.powi(n - 2), g / lifted))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    Ok(terms.iter().fold((f64::INFINITY, f64::INFINITY), |(a, b), &(c, d)| (a.min(c), b.min(d))))
}

/// max |u(y) − u(0)| over the sample.
pub fn constancy_gap(u: &ScalarField, sample: &[Vec<f64>]) -> Result<f64> {
    let u0 = u.value(&vec![0.0; u.dim()])?;
    sample.iter().try_fold(0.0f64, |m, y| Ok(m.max((u.value(y)? - u0).abs())))
}
