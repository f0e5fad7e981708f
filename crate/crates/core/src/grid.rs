//! Uniform space-time grid, ghost-cell closures and the row-major
//! space-time field container shared by every solver.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Cell-centred uniform grid on `[0, L]` with a uniform time grid on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    length: f64,
    num_cells: usize,
    dx: f64,
    dt: f64,
    num_steps: usize,
    centers: Vec<f64>,
}

/// Ghost-cell closure. One ghost cell on each side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Transmissive,
    Periodic,
}

impl BoundaryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryKind::Transmissive => "transmissive",
            BoundaryKind::Periodic => "periodic",
        }
    }
}

impl fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "transmissive" => Ok(BoundaryKind::Transmissive),
            "periodic" => Ok(BoundaryKind::Periodic),
            other => Err(Error::Config(format!(
                "unknown boundary kind '{other}' (expected transmissive|periodic)"
            ))),
        }
    }
}

/// Relative slack allowed when checking that `T / dt` is an integer.
const STEP_COUNT_SLACK: f64 = 1e-9;

/// Builds a grid from domain length, cell count, time step and final time.
///
/// `final_time` may be zero, which yields a single time level.
pub fn make_grid(length: f64, num_cells: usize, dt: f64, final_time: f64) -> Result<Grid> {
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::Config(format!("length must be > 0, got {length}")));
    }
    if num_cells < 3 {
        return Err(Error::Config(format!(
            "cells must be >= 3, got {num_cells}"
        )));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Config(format!("dt must be > 0, got {dt}")));
    }
    if !(final_time.is_finite() && final_time >= 0.0) {
        return Err(Error::Config(format!(
            "final time must be >= 0, got {final_time}"
        )));
    }
    let ratio = final_time / dt;
    let steps = ratio.round();
    if (ratio - steps).abs() > STEP_COUNT_SLACK * steps.max(1.0) {
        return Err(Error::Config(format!(
            "final time {final_time} is not an integer multiple of dt = {dt}"
        )));
    }
    let dx = length / num_cells as f64;
    let centers = (0..num_cells).map(|i| (i as f64 + 0.5) * dx).collect();
    Ok(Grid {
        length,
        num_cells,
        dx,
        dt,
        num_steps: steps as usize,
        centers,
    })
}

impl Grid {
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of time steps `n_T`; there are `n_T + 1` time levels.
    pub fn num_steps(&self) -> usize {
        self.num_steps
    }

    pub fn num_levels(&self) -> usize {
        self.num_steps + 1
    }

    pub fn final_time(&self) -> f64 {
        self.num_steps as f64 * self.dt
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn time(&self, level: usize) -> f64 {
        level as f64 * self.dt
    }

    /// Nearest time level to `t`; fails unless `t` lies within `dt/2` of it.
    pub fn level_for_time(&self, t: f64) -> Result<usize> {
        let n = (t / self.dt).round();
        if !t.is_finite() || n < 0.0 || n as usize > self.num_steps {
            return Err(Error::Config(format!(
                "time {t} outside [0, {}]",
                self.final_time()
            )));
        }
        if (t - n * self.dt).abs() > 0.5 * self.dt {
            return Err(Error::Config(format!("time {t} is not on the time grid")));
        }
        Ok(n as usize)
    }
}

/// Value of `field` at a possibly-ghost index in `-1..=len`.
pub fn ghost_value(field: &[f64], index: isize, bc: BoundaryKind) -> Result<f64> {
    let len = field.len() as isize;
    if index < -1 || index > len || len == 0 {
        return Err(Error::GhostIndex {
            index,
            max: len,
            len: field.len(),
        });
    }
    Ok(field[resolve_index(field.len(), index, bc)])
}

/// Maps an index in `-1..=len` to the interior cell it reads from.
#[inline]
pub(crate) fn resolve_index(len: usize, index: isize, bc: BoundaryKind) -> usize {
    let n = len as isize;
    match bc {
        BoundaryKind::Transmissive => index.clamp(0, n - 1) as usize,
        BoundaryKind::Periodic => index.rem_euclid(n) as usize,
    }
}

/// Left and right neighbour indices of interior cell `i` under `bc`.
#[inline]
pub(crate) fn neighbours(len: usize, i: usize, bc: BoundaryKind) -> (usize, usize) {
    let i = i as isize;
    (resolve_index(len, i - 1, bc), resolve_index(len, i + 1, bc))
}

/// Scalar field sampled on every time level and cell, stored level-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    num_levels: usize,
    num_cells: usize,
    values: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(num_levels: usize, num_cells: usize) -> Self {
        Self::constant(num_levels, num_cells, 0.0)
    }

    pub fn constant(num_levels: usize, num_cells: usize, value: f64) -> Self {
        Self {
            num_levels,
            num_cells,
            values: vec![value; num_levels * num_cells],
        }
    }

    pub fn for_grid(grid: &Grid, value: f64) -> Self {
        Self::constant(grid.num_levels(), grid.num_cells(), value)
    }

    pub fn from_fn(
        num_levels: usize,
        num_cells: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Self {
        let mut values = Vec::with_capacity(num_levels * num_cells);
        for n in 0..num_levels {
            for i in 0..num_cells {
                values.push(f(n, i));
            }
        }
        Self {
            num_levels,
            num_cells,
            values,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let num_cells = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != num_cells) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Ok(Self {
            num_levels: rows.len(),
            num_cells,
            values: rows.concat(),
        })
    }

    pub fn num_levels(&self) -> usize {
        self.num_levels
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    #[inline]
    pub fn get(&self, level: usize, cell: usize) -> f64 {
        self.values[level * self.num_cells + cell]
    }

    #[inline]
    pub fn set(&mut self, level: usize, cell: usize, value: f64) {
        self.values[level * self.num_cells + cell] = value;
    }

    pub fn row(&self, level: usize) -> &[f64] {
        &self.values[level * self.num_cells..(level + 1) * self.num_cells]
    }

    pub fn row_mut(&mut self, level: usize) -> &mut [f64] {
        &mut self.values[level * self.num_cells..(level + 1) * self.num_cells]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn same_shape(&self, other: &SpaceTimeField) -> bool {
        self.num_levels == other.num_levels && self.num_cells == other.num_cells
    }

    pub fn matches_grid(&self, grid: &Grid) -> bool {
        self.num_levels == grid.num_levels() && self.num_cells == grid.num_cells()
    }

    /// Largest absolute entry over all levels and cells.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn row_sup_norm(&self, level: usize) -> f64 {
        self.row(level).iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete L2 norm with cell measure `dx * dt`.
    pub fn l2_norm(&self, grid: &Grid) -> f64 {
        let s: f64 = self.values.iter().map(|v| v * v).sum();
        (s * grid.dx() * grid.dt()).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `self + scale * other`, entrywise.
    pub fn axpy(&mut self, scale: f64, other: &SpaceTimeField) {
        debug_assert!(self.same_shape(other));
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += scale * b;
        }
    }

    pub fn zip_map(&self, other: &SpaceTimeField, f: impl Fn(f64, f64) -> f64) -> SpaceTimeField {
        debug_assert!(self.same_shape(other));
        SpaceTimeField {
            num_levels: self.num_levels,
            num_cells: self.num_cells,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}
