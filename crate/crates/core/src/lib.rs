//! Geodesics, conjugate loci and cut loci on generalized Grushin spaces.
//!
//! The generalized Grushin space with multi-index `α = (α_1, …, α_n)` is
//! `ℝ^{n+1}` with the sub-Riemannian Hamiltonian
//! `H = ½ Σ_j ξ_j² p_j²`, `ξ_j = ∏_{i<j} x_i^{α_i}`.
//!
//! * [`gentrig`]: generalized trigonometric functions `sin_{a,b}`, `cos_{a,b}`.
//! * [`geoflow`]: the closed-form geodesic flow in spherical fiber coordinates.
//! * [`jacobian`]: the exponential-map determinant and conjugate times.
//! * [`synthesis`]: cut times, the 3D optimal synthesis and cut loci.
//! * [`oracle`]: direct numerical integration and brute-force cut search.

pub mod error;
pub mod gentrig;
pub mod geoflow;
pub mod jacobian;
pub mod oracle;
pub(crate) mod roots;
pub mod synthesis;
pub mod verify;

pub use error::{Error, Result};
