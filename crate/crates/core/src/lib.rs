//! Conformal decomposition of bounded simply connected planar domains.
//!
//! A domain `Ω` is described by an analytic conformal map `φ : 𝔻 → Ω` from the
//! unit disk. The crate builds the dyadic annular decomposition of the disk and
//! its conformal image, the geodesic cuts and boundary-layer cells near `∂Ω`,
//! a Lipschitz partition of unity subordinate to the decomposition, and the
//! Lipschitz approximants `u_m = uψ + Σ aⱼφⱼ` whose convergence in `W^{1,p}(Ω)`
//! the experiment suites verify. A discrete conformal-capacity solver backs the
//! capacity-based estimates.

pub mod approximant;
pub mod capacity;
pub mod decomposition;
pub mod error;
pub mod field;
pub mod grid;
pub mod hyperbolic;
pub mod layer;
pub mod map;
pub mod partition;
pub mod pipeline;
pub mod quadrature;
pub mod svg;
pub mod util;

pub use error::{Error, Result};
pub use map::ConformalMap;

/// Complex point in the plane; disk arguments satisfy `|z| < 1`.
pub type Point = num_complex::Complex64;
