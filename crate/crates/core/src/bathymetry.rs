//! Benchmark bottom profiles and the discrete bottom operators `b_x`, `b_ttx`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{neighbours, BoundaryKind, Grid, SpaceTimeField};

/// Bottom elevation `b[n][i]` on every time level and cell.
pub type BathymetryField = SpaceTimeField;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    /// Gaussian bump travelling right at speed 2.5 with amplitude growing in time.
    Smooth,
    /// A fixed step on (5, 7) plus a growing plateau on (7, 10 + 4t).
    Discontinuous,
    /// Train of sin^4 pulses travelling right at speed 4.5, periodic with period 5.
    LargeGradient,
}

impl ProfileKind {
    pub const ALL: [ProfileKind; 3] = [
        ProfileKind::Smooth,
        ProfileKind::Discontinuous,
        ProfileKind::LargeGradient,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProfileKind::Smooth => "smooth",
            ProfileKind::Discontinuous => "discontinuous",
            ProfileKind::LargeGradient => "large-gradient",
        }
    }

    /// Boundary closure used with this profile in the benchmark runs.
    pub fn default_boundary(self) -> BoundaryKind {
        match self {
            ProfileKind::Smooth | ProfileKind::Discontinuous => BoundaryKind::Transmissive,
            ProfileKind::LargeGradient => BoundaryKind::Periodic,
        }
    }
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProfileKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smooth" => Ok(ProfileKind::Smooth),
            "discontinuous" => Ok(ProfileKind::Discontinuous),
            "large-gradient" => Ok(ProfileKind::LargeGradient),
            other => Err(Error::Config(format!(
                "unknown profile '{other}' (expected smooth|discontinuous|large-gradient)"
            ))),
        }
    }
}

/// Closed-form bottom elevation of a benchmark profile at `(t, x)`.
pub fn eval_profile(kind: ProfileKind, t: f64, x: f64) -> f64 {
    match kind {
        ProfileKind::Smooth => {
            let s = x - 10.0 - 2.5 * t;
            0.1 * (1.0 + t * (-s * s).exp())
        }
        // Branches are tried in order; the interval endpoints fall through to 0.1.
        ProfileKind::Discontinuous => {
            if 5.0 < x && x < 7.0 {
                0.25
            } else if 7.0 < x && x < 10.0 + 4.0 * t {
                0.3 * t
            } else {
                0.1
            }
        }
        ProfileKind::LargeGradient => {
            let s = (PI * (x - 10.0 - 4.5 * t) / 5.0).sin();
            0.15 * t * (1.0 + s.powi(4))
        }
    }
}

pub fn sample_field(kind: ProfileKind, grid: &Grid) -> BathymetryField {
    let x = grid.centers();
    SpaceTimeField::from_fn(grid.num_levels(), grid.num_cells(), |n, i| {
        eval_profile(kind, grid.time(n), x[i])
    })
}

/// Central difference in space of any space-time field at `(n, i)`.
#[inline]
pub fn central_x(field: &SpaceTimeField, grid: &Grid, n: usize, i: usize, bc: BoundaryKind) -> f64 {
    let row = field.row(n);
    let (l, r) = neighbours(row.len(), i, bc);
    (row[r] - row[l]) / (2.0 * grid.dx())
}

/// Second central time difference of the spatial central difference at `(n, i)`.
///
/// Levels outside `0..=n_T` are replaced by the nearest end level.
pub fn central_ttx(
    field: &SpaceTimeField,
    grid: &Grid,
    n: usize,
    i: usize,
    bc: BoundaryKind,
) -> f64 {
    let last = field.num_levels() - 1;
    let prev = n.saturating_sub(1);
    let next = (n + 1).min(last);
    let dt = grid.dt();
    (central_x(field, grid, next, i, bc) - 2.0 * central_x(field, grid, n, i, bc)
        + central_x(field, grid, prev, i, bc))
        / (dt * dt)
}

pub fn b_x(b: &BathymetryField, grid: &Grid, n: usize, i: usize, bc: BoundaryKind) -> f64 {
    central_x(b, grid, n, i, bc)
}

pub fn b_ttx(b: &BathymetryField, grid: &Grid, n: usize, i: usize, bc: BoundaryKind) -> f64 {
    central_ttx(b, grid, n, i, bc)
}
