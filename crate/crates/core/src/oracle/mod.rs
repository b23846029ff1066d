//! Independent numerical references: Hamilton's equations integrated
//! directly, brute-force equal-time intersection search and quadrature.

pub mod integrator;
pub mod brute;
pub mod quad;

pub use brute::{brute_cut_time, closed_form_residual, CovectorGrid, CutEstimate, Witness};
pub use integrator::{hamilton_rhs, integrate_hamilton, integrate_sampled, IntegratorConfig, Method, Trajectory};
