//! Forward solve of the shallow-water state system over a moving bottom
//!
//! ```text
//! r_t + (h V)_x = 0
//! V_t + (r + ε V²/2)_x = -b_x - (ε/2) b_ttx,     h = 1 + ε r
//! ```
//!
//! by either the conservative Rusanov scheme or the non-conservative
//! FORCE-α scheme run on the coupled state/adjoint vector with the adjoint
//! block held at zero.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};

use crate::bathymetry::{b_ttx, b_x, BathymetryField};
use crate::error::{Error, Result};
use crate::force_alpha::ForceAlpha;
use crate::grid::{neighbours, BoundaryKind, Grid, SpaceTimeField};

/// Discretisation shared by the forward and adjoint solves.
#[derive(Debug, Clone)]
pub struct Model {
    pub grid: Grid,
    pub bc: BoundaryKind,
    /// Nonlinearity parameter ε.
    pub eps: f64,
    pub force_alpha: ForceAlpha,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeKind {
    Rusanov,
    ForceAlpha,
}

/// `r` and `V` on every cell of one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub r: Vec<f64>,
    pub v: Vec<f64>,
}

impl State {
    pub fn new(r: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if r.len() != v.len() {
            return Err(Error::Shape(format!(
                "r has {} cells but V has {}",
                r.len(),
                v.len()
            )));
        }
        Ok(Self { r, v })
    }

    pub fn uniform(num_cells: usize, r: f64, v: f64) -> Self {
        Self {
            r: vec![r; num_cells],
            v: vec![v; num_cells],
        }
    }

    pub fn num_cells(&self) -> usize {
        self.r.len()
    }

    #[inline]
    pub fn cell(&self, i: usize) -> Vector2<f64> {
        Vector2::new(self.r[i], self.v[i])
    }

    fn from_cells(cells: impl Iterator<Item = Vector2<f64>>) -> Self {
        let (r, v) = cells.map(|c| (c[0], c[1])).unzip();
        Self { r, v }
    }

    /// First cell with non-positive total depth, as `(cell, depth)`.
    fn dry_cell(&self, eps: f64) -> Option<(usize, f64)> {
        self.r
            .iter()
            .map(|&r| 1.0 + eps * r)
            .enumerate()
            .find(|&(_, h)| h.is_nan() || h <= 0.0)
    }

    fn first_non_finite(&self) -> Option<usize> {
        (0..self.num_cells()).find(|&i| !(self.r[i].is_finite() && self.v[i].is_finite()))
    }
}

/// Stored forward solution on all `n_T + 1` levels.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory {
    pub r: SpaceTimeField,
    pub v: SpaceTimeField,
}

impl StateTrajectory {
    pub fn num_levels(&self) -> usize {
        self.r.num_levels()
    }

    pub fn state(&self, level: usize) -> State {
        State {
            r: self.r.row(level).to_vec(),
            v: self.v.row(level).to_vec(),
        }
    }

    /// Free surface `ζ = r + b` on every level.
    pub fn surface(&self, b: &BathymetryField) -> SpaceTimeField {
        self.r.zip_map(b, |r, b| r + b)
    }
}

/// `(h V, r + ε V²/2)`.
#[inline]
pub fn physical_flux(u: Vector2<f64>, eps: f64) -> Vector2<f64> {
    let (r, v) = (u[0], u[1]);
    Vector2::new((1.0 + eps * r) * v, r + 0.5 * eps * v * v)
}

/// Jacobian of [`physical_flux`] with respect to `(r, V)`.
#[inline]
pub fn jacobian_a(u: Vector2<f64>, eps: f64) -> Matrix2<f64> {
    let (r, v) = (u[0], u[1]);
    Matrix2::new(eps * v, 1.0 + eps * r, 1.0, eps * v)
}

/// Block-diagonal Jacobian `diag(A(U), Aᵀ(U))` of the coupled vector `W = (r, V, p, q)`.
#[inline]
pub fn coupled_jacobian(w: &Vector4<f64>, eps: f64) -> Matrix4<f64> {
    let a = jacobian_a(Vector2::new(w[0], w[1]), eps);
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(&a);
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(&a.transpose());
    m
}

/// Rusanov wavespeed bound `max(|εV - √r|, |εV + √r|)`; `None` when `r < 0`.
#[inline]
pub fn rusanov_wavespeed(u: Vector2<f64>, eps: f64) -> Option<f64> {
    if u[0] < 0.0 {
        return None;
    }
    let c = u[0].sqrt();
    let ev = eps * u[1];
    Some((ev - c).abs().max((ev + c).abs()))
}

/// Rusanov numerical flux between two cell states.
///
/// Fails with [`Error::WavespeedDomain`] (located at level 0, cell 0) if
/// either side has negative `r`; [`rusanov_step`] reports the true location.
pub fn rusanov_flux(left: Vector2<f64>, right: Vector2<f64>, eps: f64) -> Result<Vector2<f64>> {
    let speed = |u: Vector2<f64>| {
        rusanov_wavespeed(u, eps).ok_or(Error::WavespeedDomain {
            level: 0,
            cell: 0,
            r: u[0],
        })
    };
    let lambda = speed(left)?.max(speed(right)?);
    Ok((physical_flux(left, eps) + physical_flux(right, eps)) * 0.5
        - (right - left) * (0.5 * lambda))
}

/// Momentum source `-b_x - (ε/2) b_ttx` at `(n, i)`.
#[inline]
pub fn momentum_source(
    b: &BathymetryField,
    grid: &Grid,
    n: usize,
    i: usize,
    bc: BoundaryKind,
    eps: f64,
) -> f64 {
    -b_x(b, grid, n, i, bc) - 0.5 * eps * b_ttx(b, grid, n, i, bc)
}

fn check_finite(state: State, level: usize) -> Result<State> {
    match state.first_non_finite() {
        Some(cell) => Err(Error::BlowUp {
            what: "state",
            level,
            cell,
        }),
        None => Ok(state),
    }
}

/// Advances level `n` to `n + 1` with the Rusanov finite-volume update.
pub fn rusanov_step(state: &State, b: &BathymetryField, n: usize, model: &Model) -> Result<State> {
    let Model { grid, bc, eps, .. } = model;
    let nx = state.num_cells();
    if let Some(cell) = state.r.iter().position(|&r| r < 0.0) {
        return Err(Error::WavespeedDomain {
            level: n,
            cell,
            r: state.r[cell],
        });
    }
    // flux[k] sits between cells k-1 and k
    let mut flux = Vec::with_capacity(nx + 1);
    for k in 0..=nx {
        let (l, r) = if k == 0 {
            (neighbours(nx, 0, *bc).0, 0)
        } else if k == nx {
            (nx - 1, neighbours(nx, nx - 1, *bc).1)
        } else {
            (k - 1, k)
        };
        flux.push(rusanov_flux(state.cell(l), state.cell(r), *eps)?);
    }
    let ratio = grid.dt() / grid.dx();
    let next = State::from_cells((0..nx).map(|i| {
        let source = Vector2::new(0.0, momentum_source(b, grid, n, i, *bc, *eps));
        state.cell(i) - (flux[i + 1] - flux[i]) * ratio + source * grid.dt()
    }));
    check_finite(next, n + 1)
}

/// Advances level `n` to `n + 1` with FORCE-α on the coupled system, adjoint block zero.
pub fn force_alpha_forward_step(
    state: &State,
    b: &BathymetryField,
    n: usize,
    model: &Model,
) -> Result<State> {
    let Model {
        grid,
        bc,
        eps,
        force_alpha,
    } = model;
    let w: Vec<Vector4<f64>> = (0..state.num_cells())
        .map(|i| Vector4::new(state.r[i], state.v[i], 0.0, 0.0))
        .collect();
    let out = force_alpha.step(
        &w,
        *bc,
        1.0,
        grid.dt(),
        grid.dx(),
        |w| coupled_jacobian(w, *eps),
        |i| Vector4::new(0.0, momentum_source(b, grid, n, i, *bc, *eps), 0.0, 0.0),
    );
    check_finite(
        State::from_cells(out.iter().map(|w| Vector2::new(w[0], w[1]))),
        n + 1,
    )
}

pub fn step(
    scheme: SchemeKind,
    state: &State,
    b: &BathymetryField,
    n: usize,
    model: &Model,
) -> Result<State> {
    match scheme {
        SchemeKind::Rusanov => rusanov_step(state, b, n, model),
        SchemeKind::ForceAlpha => force_alpha_forward_step(state, b, n, model),
    }
}

/// Runs the forward solve from `initial` over every time level of the grid.
pub fn solve_forward(
    initial: &State,
    b: &BathymetryField,
    scheme: SchemeKind,
    model: &Model,
) -> Result<StateTrajectory> {
    let grid = &model.grid;
    if initial.num_cells() != grid.num_cells() || !b.matches_grid(grid) {
        return Err(Error::Shape(format!(
            "initial state has {} cells, bathymetry is {}x{}, grid is {}x{}",
            initial.num_cells(),
            b.num_levels(),
            b.num_cells(),
            grid.num_levels(),
            grid.num_cells()
        )));
    }
    if let Some(cell) = initial.first_non_finite() {
        return Err(Error::BlowUp {
            what: "initial state",
            level: 0,
            cell,
        });
    }
    let mut r = SpaceTimeField::for_grid(grid, 0.0);
    let mut v = SpaceTimeField::for_grid(grid, 0.0);
    let mut current = initial.clone();
    for n in 0..grid.num_levels() {
        if let Some((cell, depth)) = current.dry_cell(model.eps) {
            return Err(Error::Positivity {
                level: n,
                cell,
                depth,
            });
        }
        r.row_mut(n).copy_from_slice(&current.r);
        v.row_mut(n).copy_from_slice(&current.v);
        if n < grid.num_steps() {
            current = step(scheme, &current, b, n, model)?;
        }
    }
    Ok(StateTrajectory { r, v })
}
