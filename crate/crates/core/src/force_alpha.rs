//! Path-conservative FORCE-α update for quasilinear systems
//! `W_t + ω A(W) W_x = ω S`, shared by the forward state solve (`ω = 1`)
//! and the coupled backward adjoint solve (`ω = -1`).
//!
//! The interface matrix `Â` is the three-point Gauss–Legendre average of
//! `A` along the straight segment joining the two neighbouring cell states.
//! The fluctuations are split as
//!
//! ```text
//! A±(ω) = ½ ω Â ± ¼ (α_F Δt/Δx) (Â² + s² I)
//! ```
//!
//! with `s = Δx / (α_F Δt)` by default, and the update reads
//!
//! ```text
//! W_i ← W_i − (Δt/Δx) (A⁻(ω)_{i+½} ΔW_{i+½} + A⁺(ω)_{i−½} ΔW_{i−½}) + ω Δt S_i
//! ```
//!
//! For `ω = 1` this is exactly the first-order FORCE-α scheme. For `ω = -1`
//! it marches the same system backwards in time: the sign of the central
//! part follows ω while the dissipative part stays positive.

use nalgebra::{SMatrix, SVector};

use crate::grid::{neighbours, BoundaryKind};

/// How the identity term of the dissipation matrix is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dissipation {
    /// `(Δx / (α_F Δt))²`: the Lax–Friedrichs half of FORCE-α.
    #[default]
    MeshRatio,
    /// `(Δt / (α_F Δt))² = 1/α_F²`, kept for comparison runs.
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceAlpha {
    pub alpha_f: f64,
    pub dissipation: Dissipation,
}

impl Default for ForceAlpha {
    fn default() -> Self {
        Self {
            alpha_f: 2.0,
            dissipation: Dissipation::MeshRatio,
        }
    }
}

/// Gauss–Legendre nodes on `[0, 1]` and their weights.
pub fn gauss_legendre_3() -> ([f64; 3], [f64; 3]) {
    let h = 0.5 * (3.0f64 / 5.0).sqrt();
    (
        [0.5 - h, 0.5, 0.5 + h],
        [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0],
    )
}

/// Point on the segment from `left` to `right` at parameter `s`, traversed
/// from the right end when `omega = -1`.
#[inline]
pub fn path_point<const D: usize>(
    left: &SVector<f64, D>,
    right: &SVector<f64, D>,
    omega: f64,
    s: f64,
) -> SVector<f64, D> {
    left + (right - left) * (omega * s - 0.5 * (omega - 1.0))
}

/// Quadrature average of `jacobian` along the segment between two states.
pub fn path_average<const D: usize>(
    left: &SVector<f64, D>,
    right: &SVector<f64, D>,
    omega: f64,
    jacobian: impl Fn(&SVector<f64, D>) -> SMatrix<f64, D, D>,
) -> SMatrix<f64, D, D> {
    let (nodes, weights) = gauss_legendre_3();
    let mut avg = SMatrix::<f64, D, D>::zeros();
    for (s, w) in nodes.iter().zip(weights) {
        avg += jacobian(&path_point(left, right, omega, *s)) * w;
    }
    avg
}

impl ForceAlpha {
    /// Squared scale of the identity term in the dissipation matrix.
    pub fn identity_scale_sq(&self, dt: f64, dx: f64) -> f64 {
        let s = match self.dissipation {
            Dissipation::MeshRatio => dx / (self.alpha_f * dt),
            Dissipation::Printed => dt / (self.alpha_f * dt),
        };
        s * s
    }

    /// Returns `(A⁺, A⁻)` for the interface matrix `a_hat`.
    pub fn split<const D: usize>(
        &self,
        a_hat: &SMatrix<f64, D, D>,
        omega: f64,
        dt: f64,
        dx: f64,
    ) -> (SMatrix<f64, D, D>, SMatrix<f64, D, D>) {
        let identity = SMatrix::<f64, D, D>::identity() * self.identity_scale_sq(dt, dx);
        let dissipation = (a_hat * a_hat + identity) * (0.25 * self.alpha_f * dt / dx);
        let central = a_hat * (0.5 * omega);
        (central + dissipation, central - dissipation)
    }

    /// One update of every cell. `source(i)` is `S_i`, already evaluated.
    #[allow(clippy::too_many_arguments)]
    pub fn step<const D: usize>(
        &self,
        w: &[SVector<f64, D>],
        bc: BoundaryKind,
        omega: f64,
        dt: f64,
        dx: f64,
        jacobian: impl Fn(&SVector<f64, D>) -> SMatrix<f64, D, D>,
        source: impl Fn(usize) -> SVector<f64, D>,
    ) -> Vec<SVector<f64, D>> {
        let n = w.len();
        // Interface k separates cell k-1 (left) from cell k (right), k = 0..=n.
        let mut left_going = Vec::with_capacity(n + 1);
        let mut right_going = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let (l, r) = interface_cells(n, k, bc);
            let jump = w[r] - w[l];
            let a_hat = path_average(&w[l], &w[r], omega, &jacobian);
            let (plus, minus) = self.split(&a_hat, omega, dt, dx);
            left_going.push(minus * jump);
            right_going.push(plus * jump);
        }
        let ratio = dt / dx;
        (0..n)
            .map(|i| w[i] - (left_going[i + 1] + right_going[i]) * ratio + source(i) * (omega * dt))
            .collect()
    }
}

/// Cells on either side of interface `k` (between `k-1` and `k`).
#[inline]
fn interface_cells(n: usize, k: usize, bc: BoundaryKind) -> (usize, usize) {
    if k == 0 {
        (neighbours(n, 0, bc).0, 0)
    } else if k == n {
        (n - 1, neighbours(n, n - 1, bc).1)
    } else {
        (k - 1, k)
    }
}
