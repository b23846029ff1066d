//! Jacobian determinant of the exponential map and conjugate times.
//!
//! In the coordinates `(t, φ)` on the cotangent fiber the determinant of
//! `(t, φ) ↦ exp_{q₀}(t p⁰(φ))` factors as `D = g(φ) ∏_j S_j(t, φ)` with
//!
//! * `S_j = I_j(t)` when `α_j = 0`,
//! * `S_j = cos(Q_j)(cot(φ_j) ω_j I_j + 1) - cot(φ_j) sin(Q_j)` otherwise,
//!   where `Q_j = ω_j I_j + φ_j` and the trigonometric functions have index
//!   `α_j`,
//!
//! and `g(φ) = (-1)^{|J|} ∏_{k: α_k = 0} ∏_{i<k} δ_i ∏_{j ∈ J} |x⁰_j / sin φ_j|^{α_j+1}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geoflow::{chart_data, Branch, GeodesicPath, MultiIndex, SphericalPhi};
use crate::oracle::quad::gauss_legendre;
use crate::roots::{brent, invert_nondecreasing};

/// `Q_j(t) = ω_j I_j(t) + φ_j` for a trig branch (0-based `j`).
pub fn phase(path: &GeodesicPath, j: usize, t: f64) -> Result<f64> {
    match *path.branch(j) {
        Branch::Trig { omega, phase, .. } => Ok(omega * path.integral(j, t) + phase),
        Branch::Linear => Err(Error::Degenerate(format!("coordinate {j} has no phase"))),
    }
}

/// `S_j` as a function of the phase advance `z = ω_j I_j`.
pub fn s_of_advance(branch: &Branch, z: f64) -> f64 {
    match *branch {
        Branch::Trig { phase, trig, .. } => {
            let (s0, c0) = trig.sin_cos(phase);
            let cot = c0 / s0;
            let (s, c) = trig.sin_cos(phase + z);
            let closed = c * (cot * z + 1.0) - cot * s;
            if closed.abs() > 1e-3 * (c.abs() * (cot * z).abs().max(1.0) + (cot * s).abs()) {
                return closed;
            }
            // S' = cos'(φ + z)(z cot φ + 1) with cos' = -α sin^{2α-1}; the
            // integral keeps its relative accuracy where the closed form cancels
            let a = trig.a();
            let panels = (4.0 * z.abs() / trig.half_period()).ceil() as usize;
            -0.5 * a
                * gauss_legendre(
                    |u| {
                        let s = trig.sin(phase + u);
                        s.signum() * s.abs().powf(a - 1.0) * (u * cot + 1.0)
                    },
                    0.0,
                    z,
                    panels,
                )
        }
        Branch::Linear => f64::NAN,
    }
}

/// `S_j(t)` (0-based `j < n`).
pub fn s_factor(path: &GeodesicPath, j: usize, t: f64) -> Result<f64> {
    let index = path.index();
    if j >= index.n() {
        return Err(Error::Dimension { expected: index.n(), got: j });
    }
    if index.alpha(j) == 0 {
        return Ok(path.integral(j, t));
    }
    match path.branch(j) {
        b @ Branch::Trig { omega, .. } => Ok(s_of_advance(b, omega * path.integral(j, t))),
        Branch::Linear => Err(Error::Degenerate(format!("sin φ vanishes up to coordinate {j}"))),
    }
}

fn chart_of(path: &GeodesicPath) -> Result<&SphericalPhi> {
    path.chart().ok_or_else(|| Error::Domain("determinant needs a path built from spherical coordinates".into()))
}

/// The prefactor `g(φ)`.
pub fn g_factor(path: &GeodesicPath) -> Result<f64> {
    let index = path.index();
    let phi = chart_of(path)?;
    let d = chart_data(index, path.x0(), phi)?;
    let mut g = 1.0;
    for k in 0..index.n() {
        let a = index.alpha(k);
        if a == 0 {
            g *= d.prefix[k];
        } else {
            if d.sin[k] == 0.0 {
                return Err(Error::Degenerate(format!("sin φ_{k} = 0")));
            }
            g *= -(path.x0()[k] / d.sin[k]).abs().powf(a as f64 + 1.0);
        }
    }
    Ok(g)
}

/// `D(t, φ) = g(φ) ∏ S_j(t, φ)`.
pub fn det_spherical(path: &GeodesicPath, t: f64) -> Result<f64> {
    let mut d = g_factor(path)?;
    for j in 0..path.index().n() {
        d *= s_factor(path, j, t)?;
    }
    Ok(d)
}

/// Determinant by partial pivoting LU; the matrix is consumed.
pub fn lu_det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for c in 0..n {
        let piv = (c..n).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
        if m[piv][c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            m.swap(piv, c);
            det = -det;
        }
        det *= m[c][c];
        for r in (c + 1)..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    det
}

/// Central-difference Jacobian of `(t, φ) ↦ x(t; φ)` and its determinant.
pub fn det_fd(index: &MultiIndex, base: &[f64], phi: &SphericalPhi, t: f64, rel_step: f64) -> Result<f64> {
    let n = index.n();
    let eval = |t: f64, ph: &SphericalPhi| -> Result<Vec<f64>> {
        Ok(GeodesicPath::from_spherical_raw(index, base, ph)?.point(t))
    };
    let mut cols = Vec::with_capacity(n + 1);
    let ht = rel_step * t.abs().max(1.0);
    let (a, b) = (eval(t + ht, phi)?, eval(t - ht, phi)?);
    cols.push(a.iter().zip(&b).map(|(u, v)| (u - v) / (2.0 * ht)).collect::<Vec<_>>());
    for k in 0..n {
        let h = rel_step * phi.0[k].abs().max(1.0);
        let mut up = phi.clone();
        let mut dn = phi.clone();
        up.0[k] += h;
        dn.0[k] -= h;
        let (a, b) = (eval(t, &up)?, eval(t, &dn)?);
        cols.push(a.iter().zip(&b).map(|(u, v)| (u - v) / (2.0 * h)).collect());
    }
    let rows: Vec<Vec<f64>> = (0..=n).map(|r| cols.iter().map(|c| c[r]).collect()).collect();
    Ok(lu_det(rows))
}

fn check_3d(path: &GeodesicPath) -> Result<(f64, f64)> {
    let idx = path.index();
    if idx.n() != 2 || idx.alpha(0) == 0 || idx.alpha(1) == 0 {
        return Err(Error::Domain("expected a multi-index (α, β) with α, β >= 1".into()));
    }
    Ok((idx.alpha(0) as f64, idx.alpha(1) as f64))
}

/// `|∂(tλ(φ)) / ∂(t, φ_1, φ_2)|` for `𝔾³_{(α,β)}`: the volume factor between
/// spherical and Cartesian coordinates on the fiber.
pub fn cartesian_volume_factor(path: &GeodesicPath, t: f64) -> Result<f64> {
    let (al, be) = check_3d(path)?;
    let phi = chart_of(path)?;
    let d = chart_data(path.index(), path.x0(), phi)?;
    let (x0, y0) = (path.x0()[0], path.x0()[1]);
    Ok(t * t * al * be * d.sin[0].abs().powf(2.0 * al - 1.0) * d.sin[1].abs().powf(be - 1.0)
        / (x0.abs().powf(2.0 * al) * y0.abs().powf(be)))
}

/// Determinant of the exponential map in Cartesian fiber coordinates
/// `(u₀, v₀, w₀)` at `tλ₀`, for `𝔾³_{(α,β)}`.
pub fn det_cartesian_3d(path: &GeodesicPath, t: f64) -> Result<f64> {
    Ok(det_spherical(path, t)? / cartesian_volume_factor(path, t)?)
}

/// Limit of [`det_cartesian_3d`] as `φ₂ → 0` at fixed `φ₁`, `t`:
/// `g̃ S₁ (β/(2β+1)) (1 - (1 + ε I₂)^{2β+1}) x₀^{2α} |y₀|^{2β+1} / (t² α β sin^{2α-1}φ₁)`
/// with `g̃ = |x₀/sin φ₁|^{α+1}` and `ε = δ₁ / y₀`.
pub fn det_cartesian_3d_axis_limit(index: &MultiIndex, base: &[f64], phi1: f64, t: f64) -> Result<f64> {
    let path = GeodesicPath::from_spherical(index, base, &SphericalPhi(vec![phi1, 0.0]))?;
    let (al, be) = (index.alpha(0) as f64, index.alpha(1) as f64);
    if index.n() != 2 || al == 0.0 || be == 0.0 {
        return Err(Error::Domain("expected a multi-index (α, β) with α, β >= 1".into()));
    }
    let (x0, y0) = (base[0], base[1]);
    let d = chart_data(index, base, path.chart().unwrap())?;
    let s1 = d.sin[0];
    let eps = d.delta[0] / y0;
    let i2 = path.integral(1, t);
    let s1f = s_factor(&path, 0, t)?;
    let gt = (x0 / s1).abs().powf(al + 1.0);
    let m = 1.0 + eps * i2;
    let s2_ratio = be / (2.0 * be + 1.0) * (1.0 - m.powf(2.0 * be + 1.0));
    Ok(gt * s1f * s2_ratio * y0.abs().powf(2.0 * be + 1.0) * x0.abs().powf(2.0 * al)
        / (t * t * al * be * s1.abs().powf(2.0 * al - 1.0)))
}

/// `υ_ε(s) = β(εs+1)³ + βεs - β(εs+1) = β((εs+1)³ - 1)`.
pub fn upsilon(beta: f64, eps: f64, s: f64) -> f64 {
    let m = eps * s + 1.0;
    beta * m * m * m + beta * eps * s - beta * m
}

/// First positive conjugate time and the coordinate whose factor vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConjugateTime {
    /// `+∞` when no zero is found within the horizon.
    pub t_con: f64,
    pub index: Option<usize>,
    /// Phase-advance horizon, in multiples of `π_{α_j}`, that was scanned.
    pub horizon_periods: f64,
}

/// Smallest `z > 0` where `S_j` vanishes as a function of `|ω| I_j`, up to
/// `periods · π_{α_j}`.
pub fn first_zero_advance(branch: &Branch, periods: f64) -> Option<f64> {
    let (omega, trig) = match *branch {
        Branch::Trig { omega, trig, .. } => (omega, trig),
        Branch::Linear => return None,
    };
    let sgn = omega.signum();
    let f = |z: f64| s_of_advance(branch, sgn * z);
    let hp = trig.half_period();
    let steps = (500.0 * periods).ceil() as usize;
    let dz = periods * hp / steps as f64;
    let mut prev = f(dz);
    for k in 2..=steps {
        let z = k as f64 * dz;
        let v = f(z);
        if v == 0.0 {
            return Some(z);
        }
        if v.signum() != prev.signum() {
            return brent(f, z - dz, z, 1e-15 * hp);
        }
        prev = v;
    }
    None
}

/// `t_con`: the first positive zero of `D`, found per coordinate in the phase
/// advance and mapped back to time through `I_j`.
pub fn first_conjugate_time(path: &GeodesicPath, horizon_periods: f64) -> ConjugateTime {
    let mut best = ConjugateTime { t_con: f64::INFINITY, index: None, horizon_periods };
    for j in path.index().nonzero() {
        let b = *path.branch(j);
        let Branch::Trig { omega, .. } = b else { continue };
        let Some(z) = first_zero_advance(&b, horizon_periods) else { continue };
        let target = z / omega.abs();
        let guess = if j == 0 { target } else { target / crate::geoflow::xi_squared(path.index(), path.x0())[j].max(1e-12) };
        if let Some(t) = invert_nondecreasing(|t| path.integral(j, t), target, guess, 1e12, 1e-14 * (1.0 + guess)) {
            if t < best.t_con {
                best = ConjugateTime { t_con: t, index: Some(j), horizon_periods };
            }
        }
    }
    best
}

/// Sixteen-term expansion of the determinant for `α = (α₁, 0, α₃, 0)`.
///
/// Each term is a product of `c_j²` with `c_j ∈ {cos Q_j, sin^{α_j} Q_j}` for
/// `j = 1, 3` and `c_j ∈ {cos φ_j, sin φ_j}` for `j = 2, 4`, times the common
/// factor `S₁ S₃ g I₂ I₄` with `g` in its expanded form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expansion16 {
    pub terms: Vec<f64>,
    pub common: f64,
    pub expanded: f64,
    pub factored: f64,
}

pub fn expansion_16(path: &GeodesicPath, t: f64) -> Result<Expansion16> {
    let idx = path.index();
    let a = idx.as_slice();
    if a.len() != 4 || a[0] == 0 || a[1] != 0 || a[2] == 0 || a[3] != 0 {
        return Err(Error::Domain("expected a multi-index (α₁, 0, α₃, 0)".into()));
    }
    let phi = chart_of(path)?;
    let d = chart_data(idx, path.x0(), phi)?;
    let (a1, a3) = (a[0] as f64, a[2] as f64);
    let x = path.x0();
    let g = (x[0] / d.sin[0]).abs().powf(a1 + 1.0)
        * (x[2] / d.sin[2]).abs().powf(a3 + 1.0)
        * d.sin[1]
        * crate::gentrig::rho(a1, d.sin[0] / x[0]).powi(2)
        * crate::gentrig::rho(a3, d.sin[2] / x[2]);
    let st = path.state(t);
    let common = s_factor(path, 0, t)? * s_factor(path, 2, t)? * g * st.integrals[1] * st.integrals[3];
    let pair = |j: usize| -> Result<[f64; 2]> {
        if a[j] == 0 {
            Ok([d.cos[j] * d.cos[j], d.sin[j] * d.sin[j]])
        } else {
            let Branch::Trig { trig, .. } = *path.branch(j) else {
                return Err(Error::Degenerate(format!("coordinate {j}")));
            };
            let (s, c) = trig.sin_cos(phase(path, j, t)?);
            Ok([c * c, s.abs().powf(2.0 * a[j] as f64)])
        }
    };
    let p = [pair(0)?, pair(1)?, pair(2)?, pair(3)?];
    let mut terms = Vec::with_capacity(16);
    for mask in 0..16usize {
        terms.push((0..4).map(|j| p[j][(mask >> j) & 1]).product::<f64>());
    }
    let expanded = common * terms.iter().sum::<f64>();
    Ok(Expansion16 { terms, common, expanded, factored: det_spherical(path, t)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geoflow::spherical_to_covector;

    fn idx(a: &[u32]) -> MultiIndex {
        MultiIndex::new(a.to_vec()).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-12)
    }

    #[test]
    fn matches_finite_differences() {
        let cases: Vec<(Vec<u32>, Vec<f64>, Vec<f64>, f64)> = vec![
            (vec![1], vec![0.8, 0.3], vec![1.1], 1.7),
            (vec![2], vec![-1.2, 0.0], vec![2.0], 0.9),
            (vec![0], vec![0.5, 0.5], vec![2.0], 1.3),
            (vec![1, 1], vec![0.7, 1.2, 0.0], vec![1.0, 2.0], 1.1),
            (vec![2, 1], vec![0.9, -0.6, 0.1], vec![2.0, 4.0], 0.8),
            (vec![1, 0], vec![0.9, 0.4, 0.1], vec![1.3, 2.2], 1.4),
            (vec![0, 2], vec![0.1, 0.8, -0.3], vec![0.7, 4.5], 0.6),
            (vec![1, 0, 2, 0], vec![0.9, 0.4, 1.1, 0.2, 0.0], vec![1.2, 0.8, 1.9, 3.5], 0.7),
        ];
        for (a, x, phi, t) in cases {
            let index = idx(&a);
            let phi = SphericalPhi(phi);
            let path = GeodesicPath::from_spherical(&index, &x, &phi).unwrap();
            let ds = det_spherical(&path, t).unwrap();
            let df = det_fd(&index, &x, &phi, t, 1e-5).unwrap();
            assert!(rel(ds, df) <= 1e-6, "{a:?}: spherical {ds} vs fd {df}");
        }
    }

    #[test]
    fn expansion_matches_factored_form() {
        let index = idx(&[1, 0, 2, 0]);
        let x = [0.9, 0.4, 1.1, 0.2, 0.0];
        let path = GeodesicPath::from_spherical(&index, &x, &SphericalPhi(vec![1.2, 0.8, 1.9, 3.5])).unwrap();
        let e = expansion_16(&path, 0.7).unwrap();
        assert_eq!(e.terms.len(), 16);
        assert!(rel(e.expanded, e.factored) <= 1e-9, "{e:?}");
    }

    #[test]
    fn cartesian_factor_matches_covector_jacobian() {
        let index = idx(&[2, 1]);
        let x = [0.8, 1.3, 0.0];
        let (phi, t) = (SphericalPhi(vec![1.1, 2.3]), 0.9);
        let path = GeodesicPath::from_spherical(&index, &x, &phi).unwrap();
        let map = |t: f64, p1: f64, p2: f64| -> Vec<f64> {
            let p = spherical_to_covector(&index, &x, &SphericalPhi(vec![p1, p2])).unwrap();
            p.iter().map(|v| t * v).collect()
        };
        let h = 1e-6;
        let col = |f: &dyn Fn(f64) -> Vec<f64>| -> Vec<f64> {
            let (a, b) = (f(h), f(-h));
            a.iter().zip(&b).map(|(u, v)| (u - v) / (2.0 * h)).collect()
        };
        let c0 = col(&|e| map(t + e, 1.1, 2.3));
        let c1 = col(&|e| map(t, 1.1 + e, 2.3));
        let c2 = col(&|e| map(t, 1.1, 2.3 + e));
        let m = (0..3).map(|r| vec![c0[r], c1[r], c2[r]]).collect();
        let fd = lu_det(m).abs();
        assert!(rel(cartesian_volume_factor(&path, t).unwrap(), fd) <= 1e-6);
    }

    #[test]
    fn axis_limit_of_cartesian_determinant() {
        for (a, x) in [([1u32, 1u32], [0.8, 1.3, 0.0]), ([2, 2], [1.1, -0.7, 0.0]), ([1, 3], [0.6, 0.9, 0.0])] {
            let index = idx(&a);
            let (phi1, t) = (1.2, 0.8);
            let at = |p2: f64| {
                let path = GeodesicPath::from_spherical(&index, &x, &SphericalPhi(vec![phi1, p2])).unwrap();
                det_cartesian_3d(&path, t).unwrap()
            };
            // Richardson extrapolation; the correction is O(φ₂^{2β}). S₂ is
            // itself O(φ₂^{2β}) and loses digits to cancellation, so the
            // steps keep φ₂^{2β} near 1e-4.
            let be = a[1] as f64;
            let h1 = 10f64.powf(-2.0 / be);
            let h2 = 0.5 * h1;
            let r = (h1 / h2).powf(2.0 * be);
            let extrap = (r * at(h2) - at(h1)) / (r - 1.0);
            let lim = det_cartesian_3d_axis_limit(&index, &x, phi1, t).unwrap();
            assert!(rel(extrap, lim) <= 1e-6, "{a:?}: {extrap} vs {lim}");
        }
    }

    #[test]
    fn upsilon_has_no_positive_zero() {
        for eps in [-2.0, -0.5, 0.5, 2.0] {
            for k in 1..10_000 {
                let s = 0.01 * k as f64;
                assert!(upsilon(1.5, eps, s) != 0.0);
                assert!(upsilon(1.5, eps, s).signum() == upsilon(1.5, eps, 0.01).signum());
            }
        }
    }

    #[test]
    fn conjugate_time_at_quarter_phase() {
        let index = idx(&[2]);
        let x = [0.7, 0.0];
        let q = crate::gentrig::TrigParams::grushin(2.0).unwrap().quarter_period();
        let path = GeodesicPath::from_spherical(&index, &x, &SphericalPhi(vec![q])).unwrap();
        let w = path.omega(0).unwrap();
        let tau = 2.0 * q / w.abs();
        let c = first_conjugate_time(&path, 10.0);
        assert!((c.t_con - tau).abs() <= 1e-10 * tau, "{c:?} vs {tau}");
    }

    #[test]
    fn no_conjugate_point_before_half_period_advance() {
        let index = idx(&[1, 2]);
        let x = [0.9, -1.1, 0.0];
        let p1 = crate::gentrig::TrigParams::grushin(1.0).unwrap().half_period();
        let p2 = crate::gentrig::TrigParams::grushin(2.0).unwrap().half_period();
        for k in 1..20 {
            for l in 1..20 {
                let phi = SphericalPhi(vec![p1 * k as f64 / 20.0, 2.0 * p2 * l as f64 / 20.0]);
                let path = GeodesicPath::from_spherical(&index, &x, &phi).unwrap();
                for j in 0..2 {
                    if !path.branch(j).is_trig() {
                        continue;
                    }
                    let hp = crate::gentrig::TrigParams::grushin(index.alpha(j) as f64).unwrap().half_period();
                    let z = first_zero_advance(path.branch(j), 10.0).unwrap();
                    assert!(z >= hp * (1.0 - 1e-12), "{phi:?} j={j}: {z}");
                }
            }
        }
    }
}
