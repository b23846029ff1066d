//! Geodesics from singular points of `𝔾³_{(α,β)}`.
//!
//! The unit fiber over a singular point is not a sphere, so the spherical
//! chart does not apply. Each case has its own parametrization:
//!
//! * `x₀ = 0, y₀ ≠ 0`: `u₀ = ±1`, `v₀ = κ cos_β ψ`, `w₀ = κ ρ_β(sin_β ψ / y₀)`;
//! * `y₀ = 0, x₀ ≠ 0`: `u₀ = cos_α θ`, `v₀ = ρ_α(sin_α θ / x₀)`, `w₀` free;
//! * `x₀ = y₀ = 0`: `u₀ = ±1`, `v₀`, `w₀` free.

use serde::{Deserialize, Serialize};

use super::{check_base3, index3, trig, Alpha3};
use crate::error::{Error, Result};
use crate::gentrig::rho;
use crate::geoflow::{Branch, GeodesicPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaseCase {
    Riemannian,
    /// `x₀ = 0`, `y₀ ≠ 0`.
    XZero,
    /// `y₀ = 0`, `x₀ ≠ 0`.
    YZero,
    /// `x₀ = y₀ = 0`.
    Origin,
}

pub fn base_case(q0: &[f64]) -> BaseCase {
    match (q0[0] == 0.0, q0[1] == 0.0) {
        (false, false) => BaseCase::Riemannian,
        (true, false) => BaseCase::XZero,
        (false, true) => BaseCase::YZero,
        (true, true) => BaseCase::Origin,
    }
}

/// Coordinates on the unit fiber over a singular point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SingularFiber {
    /// `x₀ = 0`: `sign_u = ±1`, `κ = R₂ ≥ 0`, `ψ ∈ [0, 2π_β)`.
    XZero { sign_u: f64, kappa: f64, psi: f64 },
    /// `y₀ = 0`: `θ ∈ [0, 2π_α)` and `w₀`.
    YZero { theta: f64, w0: f64 },
    /// `x₀ = y₀ = 0`: `sign_u = ±1`, `v₀`, `w₀`.
    Origin { sign_u: f64, v0: f64, w0: f64 },
}

impl SingularFiber {
    pub fn case(&self) -> BaseCase {
        match self {
            SingularFiber::XZero { .. } => BaseCase::XZero,
            SingularFiber::YZero { .. } => BaseCase::YZero,
            SingularFiber::Origin { .. } => BaseCase::Origin,
        }
    }
}

fn check_sign(s: f64) -> Result<f64> {
    if s == 1.0 || s == -1.0 {
        Ok(s)
    } else {
        Err(Error::Domain(format!("sign of u₀ must be ±1, got {s}")))
    }
}

fn check_case(q0: &[f64], fiber: &SingularFiber) -> Result<()> {
    check_base3(q0)?;
    let case = base_case(q0);
    if case == BaseCase::Riemannian {
        return Err(Error::Domain(format!("{q0:?} is a Riemannian point")));
    }
    if case != fiber.case() {
        return Err(Error::Domain(format!("fiber {:?} does not match the base point case {case:?}", fiber.case())));
    }
    Ok(())
}

/// The unit covector `(u₀, v₀, w₀)` described by `fiber`.
pub fn fiber_covector(ab: Alpha3, q0: &[f64], fiber: &SingularFiber) -> Result<Vec<f64>> {
    index3(ab)?;
    check_case(q0, fiber)?;
    let (a, b) = (ab.0 as f64, ab.1 as f64);
    Ok(match *fiber {
        SingularFiber::XZero { sign_u, kappa, psi } => {
            let s = check_sign(sign_u)?;
            if kappa < 0.0 {
                return Err(Error::Domain("κ must be nonnegative".into()));
            }
            let (sp, cp) = trig(ab.1).sin_cos(psi);
            vec![s, kappa * cp, kappa * rho(b, sp / q0[1])]
        }
        SingularFiber::YZero { theta, w0 } => {
            let (st, ct) = trig(ab.0).sin_cos(theta);
            vec![ct, rho(a, st / q0[0]), w0]
        }
        SingularFiber::Origin { sign_u, v0, w0 } => vec![check_sign(sign_u)?, v0, w0],
    })
}

/// The `y`-branch from a base with `y₀ = 0`:
/// `y = A₂ sin_β(ω₂ I₂)` with `A₂ = |v₀/w₀|^{1/β}`, `ω₂ = sign(v₀)|w₀ v₀^{β-1}|^{1/β}`.
fn y_branch_from_zero(beta: u32, v0: f64, w0: f64) -> Branch {
    if v0 == 0.0 || w0 == 0.0 {
        return Branch::Linear;
    }
    let b = beta as f64;
    let amp = (v0 / w0).abs().powf(1.0 / b);
    let omega = v0.signum() * (w0 * v0.powi(beta as i32 - 1)).abs().powf(1.0 / b);
    Branch::trig(amp, omega, 0.0, beta)
}

/// The closed-form geodesic from a singular point.
pub fn singular_geodesic(ab: Alpha3, q0: &[f64], fiber: &SingularFiber) -> Result<GeodesicPath> {
    let index = index3(ab)?;
    let p0 = fiber_covector(ab, q0, fiber)?;
    let a = ab.0 as f64;
    let branches = match *fiber {
        SingularFiber::XZero { sign_u, kappa, psi } => {
            if kappa == 0.0 {
                vec![Branch::Linear, Branch::Linear, Branch::Linear]
            } else {
                // x = A₁ sin_α(ω₁ t) with u(0) = A₁ω₁ = sign(u₀)
                let bx = Branch::trig(kappa.powf(-1.0 / a), sign_u * kappa.powf(1.0 / a), 0.0, ab.0);
                let sp = trig(ab.1).sin(psi);
                let by = if sp == 0.0 {
                    // w₀ = 0: v is constant and y = y₀ + v₀ I₂
                    Branch::Linear
                } else {
                    Branch::trig(q0[1] / sp, kappa * sp / q0[1], psi, ab.1)
                };
                vec![bx, by, Branch::Linear]
            }
        }
        SingularFiber::YZero { theta, .. } => {
            let (v0, w0) = (p0[1], p0[2]);
            if v0 == 0.0 {
                vec![Branch::Linear, Branch::Linear, Branch::Linear]
            } else {
                let st = trig(ab.0).sin(theta);
                vec![Branch::trig(q0[0] / st, st / q0[0], theta, ab.0), y_branch_from_zero(ab.1, v0, w0), Branch::Linear]
            }
        }
        SingularFiber::Origin { sign_u, v0, w0 } => {
            if v0 == 0.0 {
                vec![Branch::Linear, Branch::Linear, Branch::Linear]
            } else {
                let k = v0.abs();
                let bx = Branch::trig(k.powf(-1.0 / a), sign_u * k.powf(1.0 / a), 0.0, ab.0);
                vec![bx, y_branch_from_zero(ab.1, v0, w0), Branch::Linear]
            }
        }
    };
    Ok(GeodesicPath::from_parts(&index, q0.to_vec(), p0, branches))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geoflow::hamiltonian;
    use crate::oracle::{integrate_sampled, Method};

    fn max_dev(ab: Alpha3, q0: &[f64], fiber: SingularFiber, t_end: f64) -> f64 {
        let path = singular_geodesic(ab, q0, &fiber).unwrap();
        let index = path.index().clone();
        let times: Vec<f64> = (1..=40).map(|k| t_end * k as f64 / 40.0).collect();
        let ys = integrate_sampled(&index, q0, path.p0(), &times, Method::Dopri5 { rtol: 1e-12, atol: 1e-13 }).unwrap();
        let mut dev: f64 = 0.0;
        for (t, y) in times.iter().zip(&ys) {
            let s = path.state(*t);
            for k in 0..3 {
                dev = dev.max((s.x[k] - y[k]).abs()).max((s.p[k] - y[3 + k]).abs());
            }
        }
        dev
    }

    #[test]
    fn unit_fiber() {
        let ab = (2, 3);
        for (q0, f) in [
            ([0.0, 0.7, 1.0], SingularFiber::XZero { sign_u: -1.0, kappa: 2.0, psi: 1.3 }),
            ([0.4, 0.0, 1.0], SingularFiber::YZero { theta: 2.2, w0: -3.0 }),
            ([0.0, 0.0, 1.0], SingularFiber::Origin { sign_u: 1.0, v0: 0.5, w0: 2.0 }),
        ] {
            let p = fiber_covector(ab, &q0, &f).unwrap();
            let index = index3(ab).unwrap();
            assert!((hamiltonian(&index, &q0, &p).unwrap() - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn case_mismatch_rejected() {
        let f = SingularFiber::YZero { theta: 1.0, w0: 1.0 };
        assert!(singular_geodesic((1, 1), &[0.0, 1.0, 0.0], &f).is_err());
        assert!(singular_geodesic((1, 1), &[1.0, 1.0, 0.0], &f).is_err());
        let f = SingularFiber::Origin { sign_u: 0.5, v0: 1.0, w0: 1.0 };
        assert!(singular_geodesic((1, 1), &[0.0, 0.0, 0.0], &f).is_err());
    }

    #[test]
    fn straight_lines() {
        let ab = (2, 2);
        let path =
            singular_geodesic(ab, &[0.0, 0.8, 0.3], &SingularFiber::XZero { sign_u: -1.0, kappa: 0.0, psi: 0.0 }).unwrap();
        let x = path.point(1.7);
        assert_eq!(x, vec![-1.7, 0.8, 0.3]);
        let path = singular_geodesic(ab, &[0.5, 0.0, 0.3], &SingularFiber::YZero { theta: 0.0, w0: 2.0 }).unwrap();
        let x = path.point(1.5);
        assert!((x[0] - 2.0).abs() < 1e-15 && x[1] == 0.0 && x[2] == 0.3);
    }

    #[test]
    fn matches_integrator() {
        let cases = [
            ((1, 1), [0.0, 0.9, 0.1], SingularFiber::XZero { sign_u: 1.0, kappa: 1.3, psi: 0.7 }),
            ((2, 1), [0.0, -0.6, 0.0], SingularFiber::XZero { sign_u: -1.0, kappa: 0.8, psi: 4.0 }),
            ((1, 2), [0.0, 1.1, 0.0], SingularFiber::XZero { sign_u: 1.0, kappa: 0.5, psi: 0.0 }),
            ((1, 1), [1.2, 0.0, 0.0], SingularFiber::YZero { theta: 1.0, w0: 0.7 }),
            ((2, 2), [-0.9, 0.0, 0.4], SingularFiber::YZero { theta: 4.0, w0: -1.5 }),
            ((1, 3), [0.7, 0.0, 0.0], SingularFiber::YZero { theta: 2.0, w0: 0.0 }),
            ((1, 1), [0.0, 0.0, 0.0], SingularFiber::Origin { sign_u: 1.0, v0: 0.8, w0: 1.1 }),
            ((2, 3), [0.0, 0.0, 1.0], SingularFiber::Origin { sign_u: -1.0, v0: -1.4, w0: 0.3 }),
            ((2, 1), [0.0, 0.0, 0.0], SingularFiber::Origin { sign_u: 1.0, v0: 0.0, w0: 2.0 }),
        ];
        for (ab, q0, f) in cases {
            let d = max_dev(ab, &q0, f, 4.0);
            assert!(d < 1e-8, "{ab:?} {q0:?} {f:?}: {d}");
        }
    }
}
