//! Backward solve of the adjoint system
//!
//! ```text
//! p_t + ε V p_x + q_x   = ζ̄ - ζ
//! q_t + h p_x + ε V q_x = V̄ - V,      p(T) = q(T) = 0
//! ```
//!
//! on a frozen forward trajectory, either by the explicit central
//! finite-difference stepper or by the coupled FORCE-α formulation marched
//! with `ω = -1`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Vector2, Vector4};

use crate::bathymetry::BathymetryField;
use crate::error::{Error, Result};
use crate::forward::{
    coupled_jacobian, jacobian_a, momentum_source, Model, State, StateTrajectory,
};
use crate::grid::{neighbours, SpaceTimeField};
use crate::optimizer::Targets;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdjointMethod {
    /// Explicit central differences in space, first order in time.
    Fd,
    /// Coupled FORCE-α formulation marched backwards.
    Csf,
}

impl fmt::Display for AdjointMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdjointMethod::Fd => "fd",
            AdjointMethod::Csf => "csf",
        })
    }
}

impl FromStr for AdjointMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fd" => Ok(AdjointMethod::Fd),
            "csf" => Ok(AdjointMethod::Csf),
            other => Err(Error::Config(format!("unknown adjoint method '{other}'"))),
        }
    }
}

/// `p` and `q` on every cell of one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointState {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl AdjointState {
    pub fn zeros(num_cells: usize) -> Self {
        Self {
            p: vec![0.0; num_cells],
            q: vec![0.0; num_cells],
        }
    }

    pub fn num_cells(&self) -> usize {
        self.p.len()
    }

    #[inline]
    pub fn cell(&self, i: usize) -> Vector2<f64> {
        Vector2::new(self.p[i], self.q[i])
    }

    fn first_non_finite(&self) -> Option<usize> {
        (0..self.num_cells()).find(|&i| !(self.p[i].is_finite() && self.q[i].is_finite()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjointTrajectory {
    pub p: SpaceTimeField,
    pub q: SpaceTimeField,
}

impl AdjointTrajectory {
    pub fn state(&self, level: usize) -> AdjointState {
        AdjointState {
            p: self.p.row(level).to_vec(),
            q: self.q.row(level).to_vec(),
        }
    }
}

/// Coupled vector `W = (r, V, p, q)` on every cell of one level.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub cells: Vec<Vector4<f64>>,
}

impl CoupledState {
    pub fn new(state: &State, adjoint: &AdjointState) -> Self {
        Self {
            cells: (0..state.num_cells())
                .map(|i| Vector4::new(state.r[i], state.v[i], adjoint.p[i], adjoint.q[i]))
                .collect(),
        }
    }

    pub fn state(&self) -> State {
        State {
            r: self.cells.iter().map(|w| w[0]).collect(),
            v: self.cells.iter().map(|w| w[1]).collect(),
        }
    }

    pub fn adjoint(&self) -> AdjointState {
        AdjointState {
            p: self.cells.iter().map(|w| w[2]).collect(),
            q: self.cells.iter().map(|w| w[3]).collect(),
        }
    }
}

/// Right-hand side `(ζ̄ - ζ, V̄ - V)` of the adjoint system, with `ζ = r + b`.
#[inline]
pub fn adjoint_source(state: Vector2<f64>, zeta_bar: f64, v_bar: f64, b: f64) -> Vector2<f64> {
    Vector2::new(zeta_bar - (state[0] + b), v_bar - state[1])
}

/// Right-hand side at `(level, cell)` from a stored trajectory.
#[inline]
fn residual_at(
    forward: &StateTrajectory,
    targets: &Targets,
    b: &BathymetryField,
    level: usize,
    cell: usize,
) -> Vector2<f64> {
    adjoint_source(
        Vector2::new(forward.r.get(level, cell), forward.v.get(level, cell)),
        targets.zeta_bar.get(level, cell),
        targets.v_bar.get(level, cell),
        b.get(level, cell),
    )
}

/// One explicit step from level `n + 1` (`next`) down to level `n`:
///
/// ```text
/// P_i^n = P_i^{n+1} + Δt Aᵀ(U_i^{n+1}) (P_{i+1}^{n+1} - P_{i-1}^{n+1}) / (2Δx) - Δt R_i^{n+1}
/// ```
///
/// where `R` is [`adjoint_source`] evaluated with the forward state at `n + 1`.
pub fn fd_adjoint_step(
    next: &AdjointState,
    forward: &StateTrajectory,
    targets: &Targets,
    b: &BathymetryField,
    n: usize,
    model: &Model,
) -> Result<AdjointState> {
    let Model { grid, bc, eps, .. } = model;
    let nx = next.num_cells();
    let level = n + 1;
    let scale = grid.dt() / (2.0 * grid.dx());
    let mut out = AdjointState::zeros(nx);
    for i in 0..nx {
        let (l, r) = neighbours(nx, i, *bc);
        let u = Vector2::new(forward.r.get(level, i), forward.v.get(level, i));
        let transport = jacobian_a(u, *eps).transpose() * (next.cell(r) - next.cell(l)) * scale;
        let p = next.cell(i) + transport - residual_at(forward, targets, b, level, i) * grid.dt();
        out.p[i] = p[0];
        out.q[i] = p[1];
    }
    match out.first_non_finite() {
        Some(cell) => Err(Error::BlowUp {
            what: "adjoint",
            level: n,
            cell,
        }),
        None => Ok(out),
    }
}

/// One coupled FORCE-α step with `ω = -1` from level `n + 1` down to level `n`.
///
/// The adjoint block of the coupled source is [`adjoint_source`] at level `n`,
/// so the step adds `-Δt (ζ̄ - ζ, V̄ - V)` there, as the explicit stepper does.
/// After the step the state block is overwritten with the stored forward
/// state at level `n`.
pub fn csf_backward_step(
    w: &CoupledState,
    forward: &StateTrajectory,
    targets: &Targets,
    b: &BathymetryField,
    n: usize,
    model: &Model,
) -> Result<CoupledState> {
    let Model {
        grid,
        bc,
        eps,
        force_alpha,
    } = model;
    let omega = -1.0;
    let out = force_alpha.step(
        &w.cells,
        *bc,
        omega,
        grid.dt(),
        grid.dx(),
        |w| coupled_jacobian(w, *eps),
        |i| {
            let res = residual_at(forward, targets, b, n, i);
            Vector4::new(
                0.0,
                momentum_source(b, grid, n + 1, i, *bc, *eps),
                res[0],
                res[1],
            )
        },
    );
    let cells: Vec<Vector4<f64>> = out
        .into_iter()
        .enumerate()
        .map(|(i, mut c)| {
            c[0] = forward.r.get(n, i);
            c[1] = forward.v.get(n, i);
            c
        })
        .collect();
    if let Some(cell) = cells
        .iter()
        .position(|c| !(c[2].is_finite() && c[3].is_finite()))
    {
        return Err(Error::BlowUp {
            what: "adjoint",
            level: n,
            cell,
        });
    }
    Ok(CoupledState { cells })
}

/// Solves the adjoint system backwards from zero terminal data.
pub fn solve_adjoint(
    forward: &StateTrajectory,
    targets: &Targets,
    b: &BathymetryField,
    method: AdjointMethod,
    model: &Model,
) -> Result<AdjointTrajectory> {
    let grid = &model.grid;
    for (name, f) in [
        ("forward r", &forward.r),
        ("forward V", &forward.v),
        ("target surface", &targets.zeta_bar),
        ("target velocity", &targets.v_bar),
        ("bathymetry", b),
    ] {
        if !f.matches_grid(grid) {
            return Err(Error::Shape(format!(
                "{name} is {}x{}, grid is {}x{}",
                f.num_levels(),
                f.num_cells(),
                grid.num_levels(),
                grid.num_cells()
            )));
        }
    }
    let nx = grid.num_cells();
    let last = grid.num_steps();
    let mut p = SpaceTimeField::for_grid(grid, 0.0);
    let mut q = SpaceTimeField::for_grid(grid, 0.0);
    match method {
        AdjointMethod::Fd => {
            let mut current = AdjointState::zeros(nx);
            for n in (0..last).rev() {
                current = fd_adjoint_step(&current, forward, targets, b, n, model)?;
                p.row_mut(n).copy_from_slice(&current.p);
                q.row_mut(n).copy_from_slice(&current.q);
            }
        }
        AdjointMethod::Csf => {
            let mut w = CoupledState::new(&forward.state(last), &AdjointState::zeros(nx));
            for n in (0..last).rev() {
                w = csf_backward_step(&w, forward, targets, b, n, model)?;
                for (i, c) in w.cells.iter().enumerate() {
                    p.set(n, i, c[2]);
                    q.set(n, i, c[3]);
                }
            }
        }
    }
    Ok(AdjointTrajectory { p, q })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bathymetry::ProfileKind;
    use crate::force_alpha::{path_average, ForceAlpha};
    use crate::forward::{solve_forward, SchemeKind};
    use crate::grid::{make_grid, BoundaryKind, Grid};
    use crate::optimizer::synthesize_targets;
    use nalgebra::Matrix4;

    fn model(grid: Grid, bc: BoundaryKind) -> Model {
        Model {
            grid,
            bc,
            eps: 0.001,
            force_alpha: ForceAlpha::default(),
        }
    }

    /// Forward run on a flat bottom with targets offset by `(dz, dv)` everywhere.
    fn offset_case(
        nx: usize,
        dt: f64,
        t: f64,
        dz: f64,
        dv: f64,
    ) -> (Model, StateTrajectory, Targets, BathymetryField) {
        let m = model(
            make_grid(nx as f64 * 0.5, nx, dt, t).unwrap(),
            BoundaryKind::Periodic,
        );
        let b = SpaceTimeField::for_grid(&m.grid, 0.1);
        let initial = State::uniform(nx, 0.9, 1.5);
        let fwd = solve_forward(&initial, &b, SchemeKind::ForceAlpha, &m).unwrap();
        let targets = Targets {
            zeta_bar: fwd.surface(&b).zip_map(&b, |z, _| z + dz),
            v_bar: fwd.v.zip_map(&fwd.v, |v, _| v + dv),
            b_bar: b.clone(),
            initial,
        };
        (m, fwd, targets, b)
    }

    #[test]
    fn source_examples() {
        let s = Vector2::new(0.9, 1.5);
        assert_eq!(adjoint_source(s, 0.9 + 0.05, 1.5, 0.05), Vector2::zeros());
        let r = adjoint_source(s, 1.0, 1.5, 0.05);
        assert!((r[0] - 0.05).abs() < 1e-15 && r[1] == 0.0);
        let r = adjoint_source(Vector2::new(0.9, 1.5 + 0.125), 1.0, 1.5, 0.05);
        assert_eq!(r[1], -0.125);
    }

    #[test]
    fn fd_step_examples() {
        let (m, fwd, targets, b) = offset_case(6, 0.1, 0.2, 0.0, 0.0);
        let zero = AdjointState::zeros(6);
        assert_eq!(
            fd_adjoint_step(&zero, &fwd, &targets, &b, 0, &m).unwrap(),
            zero
        );

        let flat = AdjointState {
            p: vec![0.3; 6],
            q: vec![-0.2; 6],
        };
        assert_eq!(
            fd_adjoint_step(&flat, &fwd, &targets, &b, 1, &m).unwrap(),
            flat
        );

        let (m, fwd, targets, b) = offset_case(6, 0.1, 0.2, 0.05, -0.02);
        let out = fd_adjoint_step(&zero, &fwd, &targets, &b, 0, &m).unwrap();
        for i in 0..6 {
            assert!((out.p[i] + 0.1 * 0.05).abs() < 1e-15);
            assert!((out.q[i] - 0.1 * 0.02).abs() < 1e-15);
        }
    }

    #[test]
    fn single_step_solve_is_minus_dt_residual() {
        let (m, fwd, targets, b) = offset_case(5, 0.1, 0.1, 0.05, 0.01);
        for method in [AdjointMethod::Fd, AdjointMethod::Csf] {
            let adj = solve_adjoint(&fwd, &targets, &b, method, &m).unwrap();
            assert!(adj.p.row(1).iter().chain(adj.q.row(1)).all(|&v| v == 0.0));
            for i in 0..5 {
                assert!((adj.p.get(0, i) + 0.1 * 0.05).abs() < 1e-15, "{method}");
                assert!((adj.q.get(0, i) + 0.1 * 0.01).abs() < 1e-15, "{method}");
            }
        }
    }

    #[test]
    fn csf_step_examples() {
        let (m, fwd, targets, b) = offset_case(6, 0.1, 0.2, 0.0, 0.0);
        let w = CoupledState::new(&fwd.state(2), &AdjointState::zeros(6));
        let out = csf_backward_step(&w, &fwd, &targets, &b, 1, &m).unwrap();
        assert!(out
            .adjoint()
            .p
            .iter()
            .chain(&out.adjoint().q)
            .all(|&v| v == 0.0));

        let (m, fwd, targets, b) = offset_case(6, 0.1, 0.2, 0.05, -0.02);
        let start = AdjointState {
            p: vec![0.3; 6],
            q: vec![-0.2; 6],
        };
        let w = CoupledState::new(&fwd.state(2), &start);
        let out = csf_backward_step(&w, &fwd, &targets, &b, 1, &m)
            .unwrap()
            .adjoint();
        for i in 0..6 {
            assert!((out.p[i] - (0.3 - 0.1 * 0.05)).abs() < 1e-15);
            assert!((out.q[i] - (-0.2 + 0.1 * 0.02)).abs() < 1e-15);
        }
    }

    #[test]
    fn coupled_average_on_equal_endpoints_is_block_diagonal() {
        let w = Vector4::new(0.8, 1.4, 0.3, -0.7);
        let a = jacobian_a(Vector2::new(0.8, 1.4), 0.001);
        let mut expect = Matrix4::zeros();
        expect.fixed_view_mut::<2, 2>(0, 0).copy_from(&a);
        expect
            .fixed_view_mut::<2, 2>(2, 2)
            .copy_from(&a.transpose());
        let avg = path_average(&w, &w, -1.0, |w| coupled_jacobian(w, 0.001));
        assert!((avg - expect).abs().max() < 1e-15);
    }

    fn smooth_case(
        nx: usize,
        dt: f64,
        t: f64,
    ) -> (Model, StateTrajectory, Targets, BathymetryField) {
        let m = model(
            make_grid(20.0, nx, dt, t).unwrap(),
            BoundaryKind::Transmissive,
        );
        let targets =
            synthesize_targets(ProfileKind::Smooth, &m, SchemeKind::ForceAlpha, 1.5, 1.0).unwrap();
        let b = SpaceTimeField::for_grid(&m.grid, 0.01);
        let fwd = solve_forward(&targets.initial, &b, SchemeKind::ForceAlpha, &m).unwrap();
        (m, fwd, targets, b)
    }

    #[test]
    fn zero_residual_gives_zero_trajectory() {
        let m = model(
            make_grid(20.0, 40, 0.01, 0.3).unwrap(),
            BoundaryKind::Transmissive,
        );
        let targets =
            synthesize_targets(ProfileKind::Smooth, &m, SchemeKind::ForceAlpha, 1.5, 1.0).unwrap();
        let fwd =
            solve_forward(&targets.initial, &targets.b_bar, SchemeKind::ForceAlpha, &m).unwrap();
        for method in [AdjointMethod::Fd, AdjointMethod::Csf] {
            let adj = solve_adjoint(&fwd, &targets, &targets.b_bar, method, &m).unwrap();
            assert!(adj
                .p
                .values()
                .iter()
                .chain(adj.q.values())
                .all(|&v| v == 0.0));
        }
    }

    #[test]
    fn terminal_level_is_zero_and_state_block_frozen() {
        let (m, fwd, targets, b) = smooth_case(40, 0.01, 0.3);
        let last = m.grid.num_steps();
        for method in [AdjointMethod::Fd, AdjointMethod::Csf] {
            let adj = solve_adjoint(&fwd, &targets, &b, method, &m).unwrap();
            assert!(adj
                .p
                .row(last)
                .iter()
                .chain(adj.q.row(last))
                .all(|&v| v == 0.0));
            assert!(adj.p.sup_norm() > 0.0);
        }
        let mut w = CoupledState::new(&fwd.state(last), &AdjointState::zeros(40));
        for n in (0..last).rev() {
            w = csf_backward_step(&w, &fwd, &targets, &b, n, &m).unwrap();
            assert_eq!(w.state(), fwd.state(n));
        }
    }

    #[test]
    fn rejects_mismatched_shapes() {
        let (m, fwd, targets, _) = smooth_case(20, 0.01, 0.05);
        let short = SpaceTimeField::zeros(3, 20);
        let err = solve_adjoint(&fwd, &targets, &short, AdjointMethod::Fd, &m).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    fn l2_distance(a: &SpaceTimeField, b: &SpaceTimeField, grid: &Grid) -> f64 {
        a.zip_map(b, |x, y| x - y).l2_norm(grid)
    }

    #[test]
    fn fd_and_csf_converge_together() {
        let distance = |nx: usize, dt: f64| {
            let (m, fwd, targets, b) = smooth_case(nx, dt, 0.5);
            let fd = solve_adjoint(&fwd, &targets, &b, AdjointMethod::Fd, &m).unwrap();
            let csf = solve_adjoint(&fwd, &targets, &b, AdjointMethod::Csf, &m).unwrap();
            l2_distance(&fd.p, &csf.p, &m.grid).hypot(l2_distance(&fd.q, &csf.q, &m.grid))
        };
        let coarse = distance(50, 0.01);
        let fine = distance(100, 0.005);
        assert!(coarse / fine >= 1.5, "coarse {coarse} fine {fine}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn linear_in_residuals(
                dz in proptest::collection::vec(-0.1f64..0.1, 4 * 8),
                dv in proptest::collection::vec(-0.1f64..0.1, 4 * 8),
            ) {
                let (m, fwd, base, b) = offset_case(8, 0.05, 0.15, 0.0, 0.0);
                let with = |scale: f64| Targets {
                    zeta_bar: SpaceTimeField::from_fn(4, 8, |n, i| base.zeta_bar.get(n, i) + scale * dz[n * 8 + i]),
                    v_bar: SpaceTimeField::from_fn(4, 8, |n, i| base.v_bar.get(n, i) + scale * dv[n * 8 + i]),
                    ..base.clone()
                };
                for method in [AdjointMethod::Fd, AdjointMethod::Csf] {
                    let one = solve_adjoint(&fwd, &with(1.0), &b, method, &m).unwrap();
                    let two = solve_adjoint(&fwd, &with(2.0), &b, method, &m).unwrap();
                    for (x, y) in one.p.values().iter().chain(one.q.values()).zip(two.p.values().iter().chain(two.q.values())) {
                        prop_assert!((2.0 * x - y).abs() <= 1e-12 * (1.0 + y.abs()));
                    }
                }
            }
        }
    }
}
