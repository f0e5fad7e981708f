//! Recovery of a time-dependent bottom `b(t, x)` in a one-dimensional
//! weakly dispersive shallow-water channel from surface and velocity
//! observations, by adjoint-based gradient descent.
//!
//! The state `(r, V)` solves
//!
//! ```text
//! r_t + (h V)_x = 0,   V_t + (r + ε V²/2)_x = -b_x - (ε/2) b_ttx,   h = 1 + ε r
//! ```
//!
//! and the free surface is `ζ = r + b`.

pub mod adjoint;
pub mod bathymetry;
pub mod config;
pub mod error;
pub mod force_alpha;
pub mod forward;
pub mod grid;
pub mod io;
pub mod optimizer;
pub mod run;

pub use error::{Error, Result};
