//! Cut-time candidates `τ_j`, `τ = min τ_j`, and the optimal synthesis of the
//! three-dimensional space `𝔾³_{(α,β)}`.
//!
//! Indices are 0-based throughout: `τ_j` for `j = 0` is the classical `τ_1`.

pub mod locus;
pub mod singular;

use serde::Serialize;

pub use locus::{
    cut_locus_3d, gamma_images, lambda2_images, segments_intersect, self_intersections, trace_e, trace_g, CutLocus3d,
    EVariant, Excluded, LocusLabel, LocusPolyline, SurfaceDescriptor,
};
pub use singular::{base_case, fiber_covector, singular_geodesic, BaseCase, SingularFiber};

use crate::error::{domain, Error, Result};
use crate::gentrig::{eta_with, garcsin, TrigParams};
use crate::geoflow::{hamiltonian, is_riemannian, xi_squared, Branch, GeodesicPath, MultiIndex, SphericalPhi};
use crate::roots::invert_nondecreasing;

/// Upper limit for the doubling search on `I_j`.
const T_CAP: f64 = 1e12;

/// Relative tolerance used for ties, the quarter-phase test and the type
/// threshold.
pub const TIE_TOL: f64 = 1e-12;

/// `(α, β)` of `𝔾³_{(α,β)}`.
pub type Alpha3 = (u32, u32);

pub(crate) fn index3(ab: Alpha3) -> Result<MultiIndex> {
    if ab.0 == 0 || ab.1 == 0 {
        return domain("the 3D synthesis needs α, β ≥ 1");
    }
    MultiIndex::new(vec![ab.0, ab.1])
}

pub(crate) fn check_base3(q0: &[f64]) -> Result<()> {
    if q0.len() != 3 {
        return Err(Error::Dimension { expected: 3, got: q0.len() });
    }
    Ok(())
}

fn trig(k: u32) -> TrigParams {
    TrigParams::grushin(k as f64).expect("positive integer index")
}

/// `π_k = π_{2k,2}`.
pub fn pi_of(k: u32) -> f64 {
    trig(k).half_period()
}

/// Time at which the phase advance `|ω_j| I_j(t)` reaches `target`, or
/// `+∞` if it never does.
fn time_for_advance(path: &GeodesicPath, j: usize, advance: f64) -> f64 {
    let Branch::Trig { omega, .. } = *path.branch(j) else {
        return f64::INFINITY;
    };
    if omega == 0.0 {
        return f64::INFINITY;
    }
    let target = advance / omega.abs();
    time_for_integral(path, j, target)
}

fn time_for_integral(path: &GeodesicPath, j: usize, target: f64) -> f64 {
    if j == 0 {
        return target;
    }
    let xi2 = xi_squared(path.index(), path.x0())[j];
    let guess = if xi2 > 0.0 { target / xi2 } else { target };
    let tol = 1e-13 * (1.0 + guess.min(1e6));
    let Some(mut t) = invert_nondecreasing(|t| path.integral(j, t), target, guess, T_CAP, tol) else {
        return f64::INFINITY;
    };
    // Newton polish with I_j' = ξ_j²
    for _ in 0..2 {
        let d = xi_squared(path.index(), &path.point(t))[j];
        if !(d > 0.0) {
            break;
        }
        let next = t - (path.integral(j, t) - target) / d;
        if !next.is_finite() || (next - t).abs() > 1e3 * tol {
            break;
        }
        t = next;
    }
    t
}

/// `τ_j = min{t > 0 : |ω_j| I_j(t) = π_{α_j}}` (0-based `j`), `+∞` for linear
/// branches and when `I_j` stays bounded.
pub fn tau_j(path: &GeodesicPath, j: usize) -> Result<f64> {
    let index = path.index();
    if j >= index.n() || index.alpha(j) == 0 {
        return domain(format!("τ_j is defined for indices with α_j ≥ 1, got j = {j}"));
    }
    Ok(time_for_advance(path, j, pi_of(index.alpha(j))))
}

/// Cut-time candidates of one geodesic.
///
/// For `n = 2` the report is the cut time. For `n > 2`, `tau` is an upper bound
/// on the cut time and a lower bound on the first conjugate time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutReport {
    /// `(j, τ_j)` for every `j` with `α_j ≥ 1`.
    pub tau_per_index: Vec<(usize, f64)>,
    pub tau: f64,
    pub argmin: Vec<usize>,
    /// `τ` is also a conjugate time: some minimizing `j` starts at a quarter
    /// phase (`p⁰_j = 0`).
    pub conjugate_at_tau: bool,
    pub n2_exact: bool,
}

pub fn cut_report(path: &GeodesicPath) -> CutReport {
    let index = path.index();
    let taus: Vec<(usize, f64)> =
        index.nonzero().into_iter().map(|j| (j, time_for_advance(path, j, pi_of(index.alpha(j))))).collect();
    let tau = taus.iter().map(|&(_, t)| t).fold(f64::INFINITY, f64::min);
    let argmin: Vec<usize> = if tau.is_finite() {
        taus.iter().filter(|&&(_, t)| t <= tau * (1.0 + TIE_TOL)).map(|&(j, _)| j).collect()
    } else {
        Vec::new()
    };
    let conjugate_at_tau = argmin.iter().any(|&j| match *path.branch(j) {
        Branch::Trig { phase, trig, .. } => trig.cos(phase).abs() <= 1e-10,
        Branch::Linear => false,
    });
    CutReport { tau_per_index: taus, tau, argmin, conjugate_at_tau, n2_exact: index.n() == 2 }
}

/// `(|ω₁|, |ω₂|)` on the whole unit fiber, including singular base points:
/// `|ω₁| = R₂^{1/α}`, `|ω₂| = |w₀|^{1/β} R₂^{(β-1)/β}` with `R₂² = y₀^{2β}w₀² + v₀²`.
pub fn omega_global_3d(ab: Alpha3, q0: &[f64], lambda0: &[f64]) -> Result<(f64, f64)> {
    let index = index3(ab)?;
    check_base3(q0)?;
    let h = hamiltonian(&index, q0, lambda0)?;
    if (2.0 * h - 1.0).abs() > crate::geoflow::UNIT_FIBER_TOL {
        return Err(Error::Normalization(h));
    }
    let (a, b) = (ab.0 as f64, ab.1 as f64);
    let (v, w) = (lambda0[1], lambda0[2]);
    let r2 = q0[1].abs().powf(2.0 * b) * w * w + v * v;
    Ok((r2.powf(0.5 / a), w.abs().powf(1.0 / b) * r2.powf((b - 1.0) / (2.0 * b))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PointClass {
    Type1Strict,
    Type2Strict,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointType {
    pub classification: PointClass,
    /// `π_α |x₀|^{α+1} / (π_β (α+1))`.
    pub threshold: f64,
}

impl PointType {
    /// Boundary points follow the Type 2 code paths.
    pub fn is_type2(&self) -> bool {
        self.classification != PointClass::Type1Strict
    }
}

pub fn type_threshold(ab: Alpha3, x0: f64) -> f64 {
    pi_of(ab.0) * x0.abs().powi(ab.0 as i32 + 1) / (pi_of(ab.1) * (ab.0 as f64 + 1.0))
}

pub fn classify_point(ab: Alpha3, q0: &[f64]) -> Result<PointType> {
    let index = index3(ab)?;
    check_base3(q0)?;
    if !is_riemannian(&index, q0) {
        return Err(Error::SingularBase(format!("{q0:?}")));
    }
    let threshold = type_threshold(ab, q0[0]);
    let y = q0[1].abs();
    let classification = if (y - threshold).abs() <= TIE_TOL * threshold {
        PointClass::Boundary
    } else if y > threshold {
        PointClass::Type1Strict
    } else {
        PointClass::Type2Strict
    };
    Ok(PointType { classification, threshold })
}

/// `(π_β (α+1) / π_α)`, the constant of the `τ₂ ≤ τ₁` inequality.
fn ratio_c(ab: Alpha3) -> f64 {
    pi_of(ab.1) * (ab.0 as f64 + 1.0) / pi_of(ab.0)
}

/// `τ₂ ≤ τ₁` for the covector with components `(·, v₀, w₀)`:
/// `w₀² ≥ c^{2β} (y₀^{2β} w₀² + v₀²)^{β+1+β/α}`, `c = π_β(α+1)/π_α`.
pub fn p_region(ab: Alpha3, q0: &[f64], v0: f64, w0: f64) -> bool {
    let (a, b) = (ab.0 as f64, ab.1 as f64);
    let r2 = q0[1].abs().powf(2.0 * b) * w0 * w0 + v0 * v0;
    w0 * w0 >= ratio_c(ab).powf(2.0 * b) * r2.powf(b + 1.0 + b / a)
}

/// `(v₀, w₀)` on the fiber `u₀ = 0` as a function of `φ₂`.
pub fn u0_fiber_covector(ab: Alpha3, q0: &[f64], phi2: f64) -> (f64, f64) {
    let (a, b) = (ab.0 as f64, ab.1 as f64);
    let d1 = crate::gentrig::rho(a, 1.0 / q0[0]);
    let (s, c) = trig(ab.1).sin_cos(phi2);
    (d1 * c, d1 * crate::gentrig::rho(b, s / q0[1]))
}

/// `r = inf{|w₀| : u₀ = 0, P(v₀, w₀) ≥ 0}` by bisection on `|w₀|` along the
/// fiber; `None` when the set is empty.
pub fn r_boundary(ab: Alpha3, q0: &[f64]) -> Result<Option<f64>> {
    classify_point(ab, q0)?;
    let (a, b) = (ab.0 as f64, ab.1 as f64);
    let rr = q0[0].abs().powf(-2.0 * a);
    let yb = q0[1].abs().powf(2.0 * b);
    let w_max = (rr / yb).sqrt();
    let test = |w: f64| p_region(ab, q0, (rr - yb * w * w).max(0.0).sqrt(), w);
    if !test(w_max) {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0, w_max);
    for _ in 0..200 {
        if hi - lo <= 1e-15 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if test(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// `φ₂* = arcsin_β((r|x₀|^α|y₀|^β)^{1/β})`, the first `φ₂` on `u₀ = 0` with
/// `|w₀| = r`. `None` for strictly Type 1 points.
pub fn phi2_star(ab: Alpha3, q0: &[f64]) -> Result<Option<f64>> {
    let Some(r) = r_boundary(ab, q0)? else { return Ok(None) };
    let (a, b) = (ab.0 as f64, ab.1 as f64);
    let arg = (r * q0[0].abs().powf(a) * q0[1].abs().powf(b)).powf(1.0 / b);
    Ok(Some(garcsin(b, arg.min(1.0))?))
}

/// `π_β |y₀|^{β+1} / (β+1)`, the `z`-offset of the strips in `{y = -y₀}`.
pub fn cut_y_offset(ab: Alpha3, y0: f64) -> f64 {
    let b = ab.1 as f64;
    pi_of(ab.1) * y0.abs().powf(b + 1.0) / (b + 1.0)
}

fn path3(ab: Alpha3, q0: &[f64], phi: &SphericalPhi) -> Result<GeodesicPath> {
    let index = index3(ab)?;
    check_base3(q0)?;
    GeodesicPath::from_spherical(&index, q0, phi)
}

/// First time `t*` the geodesic hits `{x = -x₀}` when `x` starts moving toward
/// the origin: `2(π_α - φ₁)/|ω₁|` for `x₀ > 0` (and `2φ₁/|ω₁|` for `x₀ < 0`).
pub fn t_star(ab: Alpha3, q0: &[f64], phi: &SphericalPhi) -> Result<f64> {
    let path = path3(ab, q0, phi)?;
    let Branch::Trig { omega, .. } = *path.branch(0) else {
        return Err(Error::Degenerate("φ₁ is at an end of the chart".into()));
    };
    let pa = pi_of(ab.0);
    let phi1 = phi.0[0];
    let d = if omega > 0.0 { pa - phi1 } else { phi1 };
    if !(d > 0.0 && d <= 0.5 * pa * (1.0 + TIE_TOL)) {
        return domain(format!("φ₁ = {phi1}: x does not move toward {{x = -x₀}} first"));
    }
    Ok(2.0 * d / omega.abs())
}

/// First time `t**` the geodesic hits `{y = -y₀}`, for `π_β/2 ≤ φ₂ ≤ 3π_β/2`.
pub fn t_star_star(ab: Alpha3, q0: &[f64], phi: &SphericalPhi) -> Result<f64> {
    let pb = pi_of(ab.1);
    let phi2 = phi.0[1];
    let slack = TIE_TOL * pb;
    if !(phi2 >= 0.5 * pb - slack && phi2 <= 1.5 * pb + slack) {
        return domain(format!("φ₂ = {phi2} is outside [π_β/2, 3π_β/2]"));
    }
    let path = path3(ab, q0, phi)?;
    let target = match *path.branch(1) {
        Branch::Trig { omega, .. } => {
            // sin(Q) = -sin(φ₂) at Q = 2π - φ₂ or Q = φ₂ + π (mod 2π)
            let back = if omega > 0.0 { 2.0 * pb - 2.0 * phi2 } else { 2.0 * phi2 };
            let back = back.rem_euclid(2.0 * pb);
            let adv = if back > slack { back.min(pb) } else { pb };
            adv / omega.abs()
        }
        Branch::Linear => {
            let v0 = path.p0()[1];
            let i2 = -2.0 * q0[1] / v0;
            if !(i2 > 0.0 && i2.is_finite()) {
                return Err(Error::NoConvergence("the geodesic never reaches {y = -y₀}".into()));
            }
            i2
        }
    };
    let t = time_for_integral(&path, 1, target);
    if !t.is_finite() {
        return Err(Error::NoConvergence("the geodesic never reaches {y = -y₀}".into()));
    }
    Ok(t)
}

/// `|z(t**) - z₀|` predicted in closed form,
/// `|y₀|^{β+1} |∫_{φ₂}^{2π_β-φ₂} sin_β^{2β}| / |sin_β φ₂|^{β+1}`.
pub fn z_offset_at_t_star_star(ab: Alpha3, y0: f64, phi2: f64) -> f64 {
    let t = trig(ab.1);
    let b = ab.1 as f64;
    let s = t.sin(phi2).abs();
    let integral = (eta_with(&t, 2.0 * t.half_period() - phi2) - eta_with(&t, phi2)) / (b + 1.0);
    y0.abs().powf(b + 1.0) * integral.abs() / s.powf(b + 1.0)
}

/// `K(φ₁) = 2(π_α - η_α(φ₁)) / sin_α^{α+1}(φ₁)` on `(π_α/2, π_α)`.
pub fn k_fun(alpha: u32, phi1: f64) -> Result<f64> {
    let t = trig(alpha);
    let pa = t.half_period();
    if !(phi1 > 0.5 * pa && phi1 < pa) {
        return domain(format!("φ₁ = {phi1} is outside (π_α/2, π_α)"));
    }
    let s = t.sin(phi1);
    Ok(2.0 * eta_gap(&t, pa - phi1) / s.powi(alpha as i32 + 1))
}

/// `π_α - η_α(π_α - d) = η_α(d) = (α+1) ∫_0^d sin_α^{2α}`; the integral form
/// avoids the cancellation in `d - sin cos` for small `d`.
fn eta_gap(t: &TrigParams, d: f64) -> f64 {
    if d > 0.25 * t.half_period() {
        return eta_with(t, d);
    }
    let m = t.a() as i32;
    let scale = d.powi(m + 1) / (m as f64 + 1.0);
    let v = crate::oracle::quad::gauss_kronrod(|u| t.sin(u).powi(m), 0.0, d, 1e-14 * scale);
    (0.5 * t.a() + 1.0) * v
}
