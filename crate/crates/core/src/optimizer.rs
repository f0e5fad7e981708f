//! Synthetic targets, the misfit functional, gradient assembly and the
//! fixed-step descent loop.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::adjoint::{solve_adjoint, AdjointMethod, AdjointTrajectory};
use crate::bathymetry::{central_ttx, central_x, sample_field, BathymetryField, ProfileKind};
use crate::error::{Error, Result};
use crate::forward::{solve_forward, Model, SchemeKind, State, StateTrajectory};
use crate::grid::{Grid, SpaceTimeField};

/// Descent direction `∇J` sampled like the bathymetry.
pub type GradientField = SpaceTimeField;

/// Surface observations the reconstruction tries to match.
#[derive(Debug, Clone, PartialEq)]
pub struct Targets {
    pub zeta_bar: SpaceTimeField,
    pub v_bar: SpaceTimeField,
    /// Bottom that produced the observations.
    pub b_bar: BathymetryField,
    /// `(ζ̄(0) - b̄(0), V₀)`, the initial state of every forward solve.
    pub initial: State,
}

impl Targets {
    /// Replaces the synthetic surface by the constant `zeta0` on every level.
    pub fn with_constant_surface(mut self, zeta0: f64) -> Self {
        self.zeta_bar.values_mut().fill(zeta0);
        self
    }
}

/// Runs the forward model on `b_bar` from `(zeta0 - b_bar(0), v0)` and records the surface.
pub fn synthesize_targets_from(
    b_bar: BathymetryField,
    model: &Model,
    scheme: SchemeKind,
    v0: f64,
    zeta0: f64,
) -> Result<Targets> {
    let nx = model.grid.num_cells();
    let initial = State::new(
        b_bar.row(0).iter().map(|b| zeta0 - b).collect(),
        vec![v0; nx],
    )?;
    let forward = solve_forward(&initial, &b_bar, scheme, model)?;
    Ok(Targets {
        zeta_bar: forward.surface(&b_bar),
        v_bar: forward.v,
        b_bar,
        initial,
    })
}

pub fn synthesize_targets(
    profile: ProfileKind,
    model: &Model,
    scheme: SchemeKind,
    v0: f64,
    zeta0: f64,
) -> Result<Targets> {
    synthesize_targets_from(sample_field(profile, &model.grid), model, scheme, v0, zeta0)
}

/// `½ Σ_n Σ_i [(ζ - ζ̄)² + (V - V̄)²] Δx Δt` over all levels and cells.
pub fn evaluate_cost(
    forward: &StateTrajectory,
    b: &BathymetryField,
    targets: &Targets,
    grid: &Grid,
) -> f64 {
    let surface: f64 = forward
        .r
        .values()
        .iter()
        .zip(b.values())
        .zip(targets.zeta_bar.values())
        .map(|((r, b), zb)| (r + b - zb).powi(2))
        .sum();
    let velocity: f64 = forward
        .v
        .values()
        .iter()
        .zip(targets.v_bar.values())
        .map(|(v, vb)| (v - vb).powi(2))
        .sum();
    0.5 * (surface + velocity) * grid.dx() * grid.dt()
}

/// `∇J = q_x + (ε/2) q_xtt - (ζ̄ - ζ)` at every level and cell.
pub fn assemble_gradient(
    adjoint: &AdjointTrajectory,
    forward: &StateTrajectory,
    b: &BathymetryField,
    targets: &Targets,
    model: &Model,
) -> GradientField {
    let Model { grid, bc, eps, .. } = model;
    let q = &adjoint.q;
    SpaceTimeField::from_fn(grid.num_levels(), grid.num_cells(), |n, i| {
        let zeta = forward.r.get(n, i) + b.get(n, i);
        central_x(q, grid, n, i, *bc) + 0.5 * eps * central_ttx(q, grid, n, i, *bc)
            - (targets.zeta_bar.get(n, i) - zeta)
    })
}

/// Pairing of forward scheme and adjoint stepper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeCombo {
    RusanovFd,
    ForceAlphaFd,
    ForceAlphaCsf,
}

impl SchemeCombo {
    pub const ALL: [SchemeCombo; 3] = [
        SchemeCombo::RusanovFd,
        SchemeCombo::ForceAlphaFd,
        SchemeCombo::ForceAlphaCsf,
    ];

    pub fn forward_scheme(self) -> SchemeKind {
        match self {
            SchemeCombo::RusanovFd => SchemeKind::Rusanov,
            SchemeCombo::ForceAlphaFd | SchemeCombo::ForceAlphaCsf => SchemeKind::ForceAlpha,
        }
    }

    pub fn adjoint_method(self) -> AdjointMethod {
        match self {
            SchemeCombo::RusanovFd | SchemeCombo::ForceAlphaFd => AdjointMethod::Fd,
            SchemeCombo::ForceAlphaCsf => AdjointMethod::Csf,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeCombo::RusanovFd => "rusanov+fd",
            SchemeCombo::ForceAlphaFd => "force-alpha+fd",
            SchemeCombo::ForceAlphaCsf => "force-alpha+csf",
        }
    }
}

impl fmt::Display for SchemeCombo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeCombo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeCombo::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown scheme '{s}' (expected rusanov+fd|force-alpha+fd|force-alpha+csf)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentConfig {
    /// Fixed step length λ_b.
    pub lambda_b: f64,
    pub iter_total: usize,
    /// Stop once the space-time sup-norm of ∇J drops below this.
    pub tol: f64,
    /// Constant initial guess b⁰.
    pub b_init: f64,
    /// Keep the first and last time levels of b fixed.
    pub pin_endpoints: bool,
    /// Iterates `k` whose `b^k` is kept in the history.
    pub keep_iterates: BTreeSet<usize>,
}

impl Default for DescentConfig {
    fn default() -> Self {
        Self {
            lambda_b: 0.71,
            iter_total: 17,
            tol: 1e-8,
            b_init: 0.01,
            pin_endpoints: false,
            keep_iterates: [0, 1, 2, 4, 8].into_iter().collect(),
        }
    }
}

impl DescentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_b.is_finite() && self.lambda_b >= 0.0) {
            return Err(Error::Config(format!(
                "lambda_b must be >= 0, got {}",
                self.lambda_b
            )));
        }
        if self.iter_total < 1 {
            return Err(Error::Config("iter_total must be >= 1".into()));
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(Error::Config(format!("tol must be >= 0, got {}", self.tol)));
        }
        if !self.b_init.is_finite() {
            return Err(Error::Config("b_init must be finite".into()));
        }
        Ok(())
    }
}

/// One pass of the descent loop, evaluated at `b^k` with `k = iteration - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Sup-norm of ∇J over all levels and cells.
    pub sup_norm: f64,
    /// Sup-norm of ∇J over the cells of the final time level.
    pub sup_norm_final_time: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunHistory {
    pub records: Vec<IterationRecord>,
    /// `b^k` for every requested `k` that was reached.
    pub iterates: BTreeMap<usize, BathymetryField>,
    pub converged: bool,
}

/// One forward + adjoint evaluation of `J` and `∇J` at `b`.
pub fn cost_and_gradient(
    b: &BathymetryField,
    targets: &Targets,
    model: &Model,
    combo: SchemeCombo,
) -> Result<(f64, GradientField)> {
    let forward = solve_forward(&targets.initial, b, combo.forward_scheme(), model)?;
    let cost = evaluate_cost(&forward, b, targets, &model.grid);
    let adjoint = solve_adjoint(&forward, targets, b, combo.adjoint_method(), model)?;
    Ok((
        cost,
        assemble_gradient(&adjoint, &forward, b, targets, model),
    ))
}

pub fn cost(
    b: &BathymetryField,
    targets: &Targets,
    model: &Model,
    scheme: SchemeKind,
) -> Result<f64> {
    let forward = solve_forward(&targets.initial, b, scheme, model)?;
    Ok(evaluate_cost(&forward, b, targets, &model.grid))
}

/// Fixed-step gradient descent `b^{k+1} = b^k - λ_b ∇J(b^k)` from a constant `b⁰`.
pub fn descent_run(
    cfg: &DescentConfig,
    targets: &Targets,
    model: &Model,
    combo: SchemeCombo,
) -> Result<(BathymetryField, RunHistory)> {
    cfg.validate()?;
    let grid = &model.grid;
    let last = grid.num_steps();
    let mut b = SpaceTimeField::for_grid(grid, cfg.b_init);
    let mut history = RunHistory::default();
    for iteration in 1..=cfg.iter_total {
        let k = iteration - 1;
        if cfg.keep_iterates.contains(&k) {
            history.iterates.insert(k, b.clone());
        }
        let (cost, mut g) =
            cost_and_gradient(&b, targets, model, combo).map_err(|e| Error::Iteration {
                iteration,
                source: Box::new(e),
            })?;
        if cfg.pin_endpoints {
            g.row_mut(0).fill(0.0);
            g.row_mut(last).fill(0.0);
        }
        if !g.is_finite() {
            return Err(Error::Iteration {
                iteration,
                source: Box::new(Error::BlowUp {
                    what: "gradient",
                    level: 0,
                    cell: 0,
                }),
            });
        }
        let sup_norm = g.sup_norm();
        history.records.push(IterationRecord {
            iteration,
            sup_norm,
            sup_norm_final_time: g.row_sup_norm(last),
            cost,
        });
        if sup_norm < cfg.tol {
            history.converged = true;
            return Ok((b, history));
        }
        b.axpy(-cfg.lambda_b, &g);
    }
    if cfg.keep_iterates.contains(&cfg.iter_total) {
        history.iterates.insert(cfg.iter_total, b.clone());
    }
    Ok((b, history))
}

/// Central difference `[J(b + δ e_{n,i}) - J(b - δ e_{n,i})] / (2δ)`.
pub fn fd_gradient_oracle(
    b: &BathymetryField,
    targets: &Targets,
    model: &Model,
    scheme: SchemeKind,
    level: usize,
    cell: usize,
    delta: f64,
) -> Result<f64> {
    if delta == 0.0 || !delta.is_finite() {
        return Err(Error::Config(format!(
            "perturbation must be nonzero, got {delta}"
        )));
    }
    let mut probe = b.clone();
    let base = b.get(level, cell);
    probe.set(level, cell, base + delta);
    let plus = cost(&probe, targets, model, scheme)?;
    probe.set(level, cell, base - delta);
    let minus = cost(&probe, targets, model, scheme)?;
    Ok((plus - minus) / (2.0 * delta))
}

/// `‖b - b̄‖ / ‖b̄‖` over the whole space-time grid.
pub fn relative_l2_error(b: &BathymetryField, b_bar: &BathymetryField) -> f64 {
    let num: f64 = b
        .values()
        .iter()
        .zip(b_bar.values())
        .map(|(x, y)| (x - y).powi(2))
        .sum();
    let den: f64 = b_bar.values().iter().map(|y| y * y).sum();
    (num / den).sqrt()
}
