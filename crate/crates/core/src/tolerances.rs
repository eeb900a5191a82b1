//! Named tolerances shared by the checks and their reports.

/// Half-width of the cone classification band.
pub const CONE_TOL: f64 = 1e-9;

/// A gap at or above `−GAP_FLOOR` counts as nonnegative in sphere sweeps.
pub const GAP_FLOOR: f64 = 1e-12;

pub const CROSS_CHECK_TOL: f64 = 1e-8;
pub const INVARIANCE_TOL: f64 = 1e-6;
pub const TRACE_TOL: f64 = 1e-10;
pub const INVOLUTION_TOL: f64 = 1e-10;

/// Minimum distance from every pole of a random Möbius word in the
/// invariance checks.
pub const SINGULAR_SET_MARGIN: f64 = 0.1;

/// Default point count for sphere minima.
pub const SPHERE_SAMPLE: usize = 2000;
