//! Numerical laboratory for translating solitons of the σ_k^{1/k} curvature
//! flow of spacelike graphs in Minkowski space ℝ^{n,1}.
//!
//! A spacelike graph u: ℝⁿ → ℝ (|Du| < 1) translating with velocity a > 0
//! satisfies
//!
//! ```text
//!     a / sqrt(1 - |Du|²) = (σ_k(κ) / C(n,k))^{1/k},
//! ```
//!
//! where κ are the principal curvatures of the graph. The crate builds the
//! rotationally symmetric solutions of this equation by ODE integration,
//! verifies their asymptotic expansions, constructs sub/supersolution
//! envelopes from prescribed sphere data, convexity-checks via the Legendre
//! dual, and evolves the graphical flow
//!
//! ```text
//!     u_t = sqrt(1 - |Du|²) · (σ_k(κ) / C(n,k))^{1/k}
//! ```
//!
//! whose normalization ũ = u - a·t relaxes to the translator.

pub mod barriers;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod interp;
pub mod legendre;
pub mod ode;
pub mod radial;
pub mod solver;
pub mod symfunc;

pub use error::{CoreError, Result};

/// Format a float with 17 significant digits, enough to round-trip f64.
/// All CSV artifacts use this so that replayed runs are byte-identical.
pub fn fmt_g17(x: f64) -> String {
    format!("{:.16e}", x)
}
