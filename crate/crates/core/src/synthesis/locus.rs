//! Cut-locus curves and surfaces of `𝔾³_{(α,β)}`.
//!
//! At a Riemannian point the cut locus is
//! `{x = -x₀} ∖ int(𝓔)  ∪  {y = -y₀, |z - z₀| ≥ π_β|y₀|^{β+1}/(β+1)}`,
//! where `𝓔` is the image of `Λ₁ ⊂ {u₀ = 0}` at time `τ₁`. At singular points
//! the plane `{x = -x₀}` is cut along `𝒢` instead, or is whole.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::singular::{base_case, singular_geodesic, BaseCase, SingularFiber};
use super::{
    classify_point, cut_report, cut_y_offset, index3, k_fun, phi2_star, pi_of, ratio_c, t_star, tau_j, Alpha3,
    PointType,
};
use crate::error::{domain, Result};
use crate::gentrig::garcsin;
use crate::geoflow::{GeodesicPath, SphericalPhi};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocusLabel {
    /// Image of `Λ₁` at `τ₁`, in `{x = -x₀}`.
    ECurve,
    /// Its counterpart for `y₀ = 0`.
    GCurve,
    /// Image of `Λ₂ = {φ₂ ∈ {π_β/2, 3π_β/2}, τ₂ ≤ τ₁}` at `τ₂`.
    Lambda2,
    /// Images at `t*` of the arcs bounding `{t* ≤ τ}` (Type 2 only).
    GammaPlus,
    GammaMinus,
}

/// Sampled curve; `samples` holds `(parameter, point)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocusPolyline {
    pub label: LocusLabel,
    pub samples: Vec<(f64, [f64; 3])>,
    pub closed: bool,
}

impl LocusPolyline {
    /// Projection on the `(y, z)` plane, where `𝓔` and `𝒢` live.
    pub fn points_yz(&self) -> Vec<[f64; 2]> {
        self.samples.iter().map(|(_, p)| [p[1], p[2]]).collect()
    }

    pub fn is_simple(&self) -> bool {
        self_intersections(&self.points_yz(), self.closed).is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EVariant {
    /// `φ₂ ∈ [0, φ₂*) ∪ [π_β - φ₂*, π_β + φ₂*] ∪ [2π_β - φ₂*, 2π_β)` for Type 2
    /// points, the full circle for Type 1.
    Restricted,
    /// `φ₂ ∈ [0, 2π_β)` for every point type.
    FullRange,
}

/// Part of a coordinate plane `{x_axis = value}` that is excluded from the cut
/// locus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Excluded {
    Nothing,
    InteriorOf(LocusLabel),
    /// `|z - center| < half_width`.
    Band { center: f64, half_width: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceDescriptor {
    pub axis: usize,
    pub value: f64,
    pub excluded: Excluded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutLocus3d {
    pub case: BaseCase,
    pub point_type: Option<PointType>,
    pub surfaces: Vec<SurfaceDescriptor>,
    pub polylines: Vec<LocusPolyline>,
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// Closed segments `[a, b]` and `[c, d]` share a point.
pub fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

/// Pairs of non-adjacent intersecting segments. Segment `i` joins point `i`
/// to point `i + 1` (and the last point to the first when `closed`).
pub fn self_intersections(points: &[[f64; 2]], closed: bool) -> Vec<(usize, usize)> {
    let m = points.len();
    if m < 3 {
        return Vec::new();
    }
    let nseg = if closed { m } else { m - 1 };
    let seg = |i: usize| (points[i], points[(i + 1) % m]);
    (0..nseg)
        .into_par_iter()
        .flat_map_iter(|i| {
            (i + 2..nseg)
                .filter(move |&j| !(closed && i == 0 && j == nseg - 1))
                .filter(move |&j| {
                    let (a, b) = seg(i);
                    let (c, d) = seg(j);
                    segments_intersect(a, b, c, d)
                })
                .map(move |j| (i, j))
        })
        .collect()
}

fn riemannian_type(ab: Alpha3, q0: &[f64]) -> Result<PointType> {
    classify_point(ab, q0)
}

fn e_point(ab: Alpha3, q0: &[f64], phi2: f64) -> Result<[f64; 3]> {
    let index = index3(ab)?;
    let phi = SphericalPhi(vec![0.5 * pi_of(ab.0), phi2]);
    let path = GeodesicPath::from_spherical(&index, q0, &phi)?;
    let t1 = tau_j(&path, 0)?;
    let x = path.point(t1);
    Ok([x[0], x[1], x[2]])
}

/// The curve `𝓔 = {exp(τ₁ λ₀(π_α/2, φ₂))}` with `samples` points.
pub fn trace_e(ab: Alpha3, q0: &[f64], samples: usize, variant: EVariant) -> Result<LocusPolyline> {
    let pt = riemannian_type(ab, q0)?;
    if samples < 3 {
        return domain("need at least 3 samples");
    }
    let pb = pi_of(ab.1);
    let star = if variant == EVariant::Restricted && pt.is_type2() { phi2_star(ab, q0)? } else { None };
    let params: Vec<f64> = match star {
        None => (0..samples).map(|k| 2.0 * pb * k as f64 / samples as f64).collect(),
        Some(s) => {
            // arc-length coordinate on the three arcs of total length 4φ₂*
            (0..samples)
                .map(|k| {
                    let u = 4.0 * s * k as f64 / samples as f64;
                    if u < s {
                        u
                    } else if u < 3.0 * s {
                        pb - s + (u - s)
                    } else {
                        2.0 * pb - s + (u - 3.0 * s)
                    }
                })
                .collect()
        }
    };
    let pts: Vec<[f64; 3]> = params.par_iter().map(|&p| e_point(ab, q0, p)).collect::<Result<_>>()?;
    Ok(LocusPolyline { label: LocusLabel::ECurve, samples: params.into_iter().zip(pts).collect(), closed: true })
}

/// The curve `𝒢` for a base point with `y₀ = 0`, `x₀ ≠ 0`: images at `τ₁` of
/// `u₀ = 0`, `v₀ = ±|x₀|^{-α}`, `|w₀| ≤ c^β / |x₀|^{αβ+α+β}`. The parameter
/// runs along the loop, first over the `v₀` branch with `θ = π_α/2`.
pub fn trace_g(ab: Alpha3, q0: &[f64], samples: usize) -> Result<LocusPolyline> {
    index3(ab)?;
    super::check_base3(q0)?;
    if base_case(q0) != BaseCase::YZero {
        return domain(format!("𝒢 needs y₀ = 0 and x₀ ≠ 0, got {q0:?}"));
    }
    if samples < 4 {
        return domain("need at least 4 samples");
    }
    let (a, b) = (ab.0 as f64, ab.1 as f64);
    let bound = ratio_c(ab).powf(b) / q0[0].abs().powf(a * b + a + b);
    let pa = pi_of(ab.0);
    let half = samples / 2;
    let mut segments = Vec::with_capacity(2 * half);
    // each branch is half-open: its end point is the start of the other one
    for k in 0..half {
        let s = 2.0 * bound * k as f64 / half as f64;
        segments.push((0.5 * pa, -bound + s, s));
    }
    for k in 0..half {
        let s = 2.0 * bound * k as f64 / half as f64;
        segments.push((1.5 * pa, bound - s, 2.0 * bound + s));
    }
    let out: Vec<(f64, [f64; 3])> = segments
        .par_iter()
        .map(|&(theta, w0, s)| {
            let path = singular_geodesic(ab, q0, &SingularFiber::YZero { theta, w0 })?;
            let t1 = tau_j(&path, 0)?;
            let x = path.point(t1);
            Ok((s, [x[0], x[1], x[2]]))
        })
        .collect::<Result<_>>()?;
    Ok(LocusPolyline { label: LocusLabel::GCurve, samples: out, closed: true })
}

/// Splits `(parameter, point or None)` into runs of consecutive points.
fn runs(label: LocusLabel, pts: Vec<(f64, Option<[f64; 3]>)>) -> Vec<LocusPolyline> {
    let mut out = Vec::new();
    let mut cur: Vec<(f64, [f64; 3])> = Vec::new();
    for (s, p) in pts {
        match p {
            Some(p) => cur.push((s, p)),
            None => {
                if cur.len() >= 2 {
                    out.push(LocusPolyline { label, samples: std::mem::take(&mut cur), closed: false });
                }
                cur.clear();
            }
        }
    }
    if cur.len() >= 2 {
        out.push(LocusPolyline { label, samples: cur, closed: false });
    }
    out
}

fn tau2_image(path: &GeodesicPath) -> Option<[f64; 3]> {
    let rep = cut_report(path);
    let (t1, t2) = (rep.tau_per_index[0].1, rep.tau_per_index[1].1);
    if t2.is_finite() && t2 <= t1 {
        let x = path.point(t2);
        Some([x[0], x[1], x[2]])
    } else {
        None
    }
}

/// Images at `τ₂` of covectors on `Λ₂`. They lie on the lines
/// `{y = -y₀, z = z₀ ± π_β|y₀|^{β+1}/(β+1)}`.
pub fn lambda2_images(ab: Alpha3, q0: &[f64], samples: usize) -> Result<Vec<LocusPolyline>> {
    let index = index3(ab)?;
    super::check_base3(q0)?;
    let pa = pi_of(ab.0);
    let pb = pi_of(ab.1);
    let mut out = Vec::new();
    match base_case(q0) {
        BaseCase::Riemannian => {
            for phi2 in [0.5 * pb, 1.5 * pb] {
                let pts: Vec<(f64, Option<[f64; 3]>)> = (1..samples)
                    .into_par_iter()
                    .map(|k| {
                        let phi1 = pa * k as f64 / samples as f64;
                        let path = GeodesicPath::from_spherical(&index, q0, &SphericalPhi(vec![phi1, phi2]))?;
                        Ok((phi1, tau2_image(&path)))
                    })
                    .collect::<Result<_>>()?;
                out.extend(runs(LocusLabel::Lambda2, pts));
            }
        }
        BaseCase::XZero => {
            // v₀ = 0, any κ > 0; κ log-spaced over [1e-2, 1e2]
            for psi in [0.5 * pb, 1.5 * pb] {
                for sign_u in [1.0, -1.0] {
                    let pts: Vec<(f64, Option<[f64; 3]>)> = (0..samples)
                        .into_par_iter()
                        .map(|k| {
                            let kappa = 10f64.powf(-2.0 + 4.0 * k as f64 / (samples.max(2) - 1) as f64);
                            let f = SingularFiber::XZero { sign_u, kappa, psi };
                            let path = singular_geodesic(ab, q0, &f)?;
                            Ok((kappa, tau2_image(&path)))
                        })
                        .collect::<Result<_>>()?;
                    out.extend(runs(LocusLabel::Lambda2, pts));
                }
            }
        }
        BaseCase::YZero | BaseCase::Origin => {}
    }
    Ok(out)
}

/// Images at `t*` of the arcs `Γ±` where `|sin_β φ₂| K(φ₁) = π_β|y₀|(α+1)/|x₀|^{α+1}`
/// (Type 2 points). Each image lies in `{x = -x₀, y = -y₀}` with
/// `|z - z₀| = π_β|y₀|^{β+1} / ((β+1)|sin_β φ₂|^{β+1})`.
pub fn gamma_images(ab: Alpha3, q0: &[f64], samples: usize) -> Result<Vec<LocusPolyline>> {
    let pt = riemannian_type(ab, q0)?;
    if !pt.is_type2() {
        return Ok(Vec::new());
    }
    let index = index3(ab)?;
    let (a, b) = (ab.0 as f64, ab.1 as f64);
    let pa = pi_of(ab.0);
    let pb = pi_of(ab.1);
    let level = pb * q0[1].abs() * (a + 1.0) / q0[0].abs().powf(a + 1.0);
    // inward half of the chart: d = π_α - φ₁ for x₀ > 0, d = φ₁ for x₀ < 0
    let phi1_of = |d: f64| if q0[0] > 0.0 { pa - d } else { d };
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    let ds: Vec<f64> = (0..samples).map(|k| 0.5 * pa * (1.0 - k as f64 / samples as f64)).collect();
    for branch in 0..2 {
        let order: Vec<f64> = if branch == 0 { ds.clone() } else { ds.iter().rev().cloned().collect() };
        for &d in &order {
            let kv = if d >= 0.5 * pa { pa } else { k_fun(ab.0, pa - d)? };
            if kv < level {
                continue;
            }
            let sb = garcsin(b, (level / kv).min(1.0))?;
            for (k, phi2) in [sb, pb - sb, pb + sb, 2.0 * pb - sb].into_iter().enumerate() {
                // branch 0 walks φ̃₂ and π + φ̃₂, branch 1 the reflected pair
                if (k == 0 || k == 2) != (branch == 0) {
                    continue;
                }
                let phi = SphericalPhi(vec![phi1_of(d), phi2]);
                let path = GeodesicPath::from_spherical(&index, q0, &phi)?;
                let ts = t_star(ab, q0, &phi)?;
                let x = path.point(ts);
                let sample = (phi2, [x[0], x[1], x[2]]);
                if path.p0()[2] > 0.0 {
                    plus.push(sample);
                } else {
                    minus.push(sample);
                }
            }
        }
    }
    let mut out = Vec::new();
    for (label, s) in [(LocusLabel::GammaPlus, plus), (LocusLabel::GammaMinus, minus)] {
        if s.len() >= 2 {
            out.push(LocusPolyline { label, samples: s, closed: false });
        }
    }
    Ok(out)
}

/// Surface descriptors and boundary polylines of `Cut(q₀)`.
pub fn cut_locus_3d(ab: Alpha3, q0: &[f64], resolution: usize) -> Result<CutLocus3d> {
    index3(ab)?;
    super::check_base3(q0)?;
    let case = base_case(q0);
    let band = |y0: f64| Excluded::Band { center: q0[2], half_width: cut_y_offset(ab, y0) };
    let plane = |axis: usize, value: f64, excluded: Excluded| SurfaceDescriptor { axis, value, excluded };
    let out = match case {
        BaseCase::Riemannian => {
            let pt = classify_point(ab, q0)?;
            let mut polylines = vec![trace_e(ab, q0, resolution, EVariant::Restricted)?];
            polylines.extend(lambda2_images(ab, q0, resolution)?);
            polylines.extend(gamma_images(ab, q0, resolution)?);
            CutLocus3d {
                case,
                point_type: Some(pt),
                surfaces: vec![
                    plane(0, -q0[0], Excluded::InteriorOf(LocusLabel::ECurve)),
                    plane(1, -q0[1], band(q0[1])),
                ],
                polylines,
            }
        }
        BaseCase::Origin => CutLocus3d {
            case,
            point_type: None,
            surfaces: vec![plane(0, 0.0, Excluded::Nothing), plane(1, 0.0, Excluded::Nothing)],
            polylines: Vec::new(),
        },
        BaseCase::XZero => CutLocus3d {
            case,
            point_type: None,
            surfaces: vec![plane(0, 0.0, Excluded::Nothing), plane(1, -q0[1], band(q0[1]))],
            polylines: lambda2_images(ab, q0, resolution)?,
        },
        BaseCase::YZero => CutLocus3d {
            case,
            point_type: None,
            surfaces: vec![
                plane(0, -q0[0], Excluded::InteriorOf(LocusLabel::GCurve)),
                plane(1, 0.0, Excluded::Nothing),
            ],
            polylines: vec![trace_g(ab, q0, resolution)?],
        },
    };
    Ok(out)
}
