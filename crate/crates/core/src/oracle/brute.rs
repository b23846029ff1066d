//! Brute-force cut-time estimates from equal-time intersections.
//!
//! If two distinct unit-speed geodesics from `q₀` meet at the same time `t`,
//! neither of them minimizes past `t`. The search integrates a grid of
//! geodesics over the spherical chart, takes discrete local minima of the
//! distance to the reference geodesic as seeds, and refines each seed by
//! Newton's method on `(t, φ') ↦ exp(t λ(φ')) - exp(t λ₀)`.
//!
//! Only the upper end of the bracket is certified. The lower end says that no
//! earlier intersection was found on the grid.

use rayon::prelude::*;
use serde::Serialize;

use super::integrator::{hamilton_rhs, integrate_sampled, Method};
use crate::error::{Error, Result};
use crate::geoflow::{
    chart_data_raw, chart_upper, covector_to_spherical, hamiltonian, is_riemannian, MultiIndex, SphericalPhi, UNIT_FIBER_TOL,
};

const METHOD: Method = Method::Dopri5 { rtol: 1e-12, atol: 1e-13 };

/// Sampling of the search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovectorGrid {
    /// Points per chart angle. Angles other than the last are sampled at the
    /// midpoints of `n` cells of `[0, π_j]`, the last one on `[0, 2π_n)`.
    pub per_angle: Vec<usize>,
    /// Number of time samples on `(0, t_max]`.
    pub time_samples: usize,
    /// Maximal number of seeds passed to Newton.
    pub max_seeds: usize,
}

impl CovectorGrid {
    pub fn uniform(n: usize, per_angle: usize, time_samples: usize) -> Self {
        let mut v = vec![per_angle; n];
        if let Some(last) = v.last_mut() {
            *last *= 2;
        }
        CovectorGrid { per_angle: v, time_samples, max_seeds: 256 }
    }
}

/// A second covector whose geodesic meets the reference one at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub phi: Vec<f64>,
    pub covector: Vec<f64>,
    pub t: f64,
    /// `|exp(tλ') - exp(tλ₀)|_∞` after refinement.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutEstimate {
    /// No witness was found on the grid before `t_low`.
    pub t_low: f64,
    /// Certified by `witness`; `+∞` if none was found below `t_max`.
    pub t_high: f64,
    pub witness: Option<Witness>,
    pub t_max: f64,
    pub grid: CovectorGrid,
    pub seeds: usize,
    pub spatial_tol: f64,
}

/// Covector of the (periodically extended) chart.
fn covector(index: &MultiIndex, q0: &[f64], phi: &[f64]) -> Result<Vec<f64>> {
    let d = chart_data_raw(index, q0, &SphericalPhi(phi.to_vec()))?;
    let n = index.n();
    let mut p: Vec<f64> = (0..n).map(|j| d.cos[j] * d.prefix[j]).collect();
    p.push(d.prefix[n]);
    Ok(p)
}

fn end_state(index: &MultiIndex, q0: &[f64], p: &[f64], t: f64) -> Result<Vec<f64>> {
    Ok(integrate_sampled(index, q0, p, &[t], METHOD)?.pop().expect("one sample"))
}

fn sup_dist(a: &[f64], b: &[f64], m: usize) -> f64 {
    (0..m).map(|k| (a[k] - b[k]).abs()).fold(0.0, f64::max)
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let m = b.len();
    for c in 0..m {
        let p = (c..m).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c] == 0.0 || !a[p][c].is_finite() {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..m {
            let f = a[r][c] / a[c][c];
            for k in c..m {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let s: f64 = (r + 1..m).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

struct Problem<'a> {
    index: &'a MultiIndex,
    q0: &'a [f64],
    lambda0: &'a [f64],
}

impl Problem<'_> {
    /// `F(t, φ') = x(t; φ') - x(t; λ₀)` and the two full states.
    fn residual(&self, t: f64, phi: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let m = self.index.dim();
        let p = covector(self.index, self.q0, phi)?;
        let a = end_state(self.index, self.q0, &p, t)?;
        let r = end_state(self.index, self.q0, self.lambda0, t)?;
        let f = (0..m).map(|k| a[k] - r[k]).collect();
        Ok((f, a, r))
    }

    /// Deflation factor `1 + 1/|p(φ') - λ₀|²`. It removes the trivial
    /// solutions `λ' = λ₀` (any `t`), which Newton otherwise falls into when
    /// the witness is close to `λ₀`.
    fn deflation(&self, phi: &[f64]) -> Result<f64> {
        let p = covector(self.index, self.q0, phi)?;
        let d2: f64 = p.iter().zip(self.lambda0).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(1.0 + 1.0 / d2)
    }

    fn deflated(&self, t: f64, phi: &[f64]) -> Result<(Vec<f64>, f64, Vec<f64>, Vec<f64>)> {
        let (f, a, r) = self.residual(t, phi)?;
        Ok((f, self.deflation(phi)?, a, r))
    }

    fn newton(&self, t0: f64, phi0: &[f64], tol: f64, t_min: f64) -> Option<(f64, Vec<f64>, f64)> {
        let m = self.index.dim();
        let n = self.index.n();
        let sup = |v: &[f64]| v.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let mut t = t0;
        let mut phi = phi0.to_vec();
        let (mut f, mut mu, mut ya, mut yr) = self.deflated(t, &phi).ok()?;
        for _ in 0..40 {
            if sup(&f) <= tol {
                break;
            }
            let g: Vec<f64> = f.iter().map(|v| mu * v).collect();
            let mut jac = vec![vec![0.0; m]; m];
            let (mut da, mut dr) = (vec![0.0; 2 * m], vec![0.0; 2 * m]);
            hamilton_rhs(self.index, &ya, &mut da);
            hamilton_rhs(self.index, &yr, &mut dr);
            for k in 0..m {
                jac[k][0] = mu * (da[k] - dr[k]);
            }
            for j in 0..n {
                let h = 1e-6 * (1.0 + phi[j].abs());
                let mut pp = phi.clone();
                pp[j] += h;
                let (fp, mp, _, _) = self.deflated(t, &pp).ok()?;
                pp[j] -= 2.0 * h;
                let (fm, mm, _, _) = self.deflated(t, &pp).ok()?;
                for k in 0..m {
                    jac[k][j + 1] = (mp * fp[k] - mm * fm[k]) / (2.0 * h);
                }
            }
            let Some(step) = solve(jac, g.iter().map(|v| -v).collect()) else {
                break;
            };
            let norm = sup(&g);
            let mut lam = 1.0;
            let mut improved = false;
            for _ in 0..12 {
                let tn = t + lam * step[0];
                if tn >= t_min {
                    let pn: Vec<f64> = phi.iter().zip(&step[1..]).map(|(a, d)| a + lam * d).collect();
                    if let Ok((fn_, mn, an, rn)) = self.deflated(tn, &pn) {
                        if mn * sup(&fn_) < norm {
                            (t, phi, f, mu, ya, yr) = (tn, pn, fn_, mn, an, rn);
                            improved = true;
                            break;
                        }
                    }
                }
                lam *= 0.5;
            }
            if !improved {
                break;
            }
        }
        Some((t, phi, sup(&f)))
    }
}

/// Searches for the first equal-time intersection with the geodesic of the
/// unit covector `lambda0` at the Riemannian point `q0`.
pub fn brute_cut_time(
    index: &MultiIndex,
    q0: &[f64],
    lambda0: &[f64],
    grid: &CovectorGrid,
    t_max: f64,
) -> Result<CutEstimate> {
    let m = index.dim();
    let n = index.n();
    if grid.per_angle.len() != n {
        return Err(Error::Dimension { expected: n, got: grid.per_angle.len() });
    }
    if !is_riemannian(index, q0) {
        return Err(Error::SingularBase(format!("{q0:?}: the spherical chart needs a Riemannian point")));
    }
    let h = hamiltonian(index, q0, lambda0)?;
    if (2.0 * h - 1.0).abs() > UNIT_FIBER_TOL {
        return Err(Error::Normalization(h));
    }
    if !(t_max > 0.0) || grid.time_samples < 2 {
        return Err(Error::Domain("need t_max > 0 and at least 2 time samples".into()));
    }
    let qn = q0.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let spatial_tol = 1e-6 * (1.0 + qn);
    let periods = chart_upper(index);
    let nt = grid.time_samples;
    let dt = t_max / nt as f64;
    let times: Vec<f64> = (1..=nt).map(|k| dt * k as f64).collect();
    let reference = integrate_sampled(index, q0, lambda0, &times, METHOD)?;

    // grid covectors in row-major order over the chart angles
    let total: usize = grid.per_angle.iter().product();
    let cell = |flat: usize| -> Vec<f64> {
        let mut rem = flat;
        let mut phi = vec![0.0; n];
        for j in (0..n).rev() {
            let k = rem % grid.per_angle[j];
            rem /= grid.per_angle[j];
            phi[j] = periods[j] * (k as f64 + 0.5) / grid.per_angle[j] as f64;
        }
        phi
    };
    let dist: Vec<Vec<f64>> = (0..total)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let p = covector(index, q0, &cell(i))?;
            let ys = integrate_sampled(index, q0, &p, &times, METHOD)?;
            Ok(ys.iter().zip(&reference).map(|(a, r)| sup_dist(a, r, m)).collect())
        })
        .collect::<Result<_>>()?;

    // discrete local minima over (angle cells, time)
    let strides: Vec<usize> = (0..n).map(|j| grid.per_angle[j + 1..].iter().product()).collect();
    let neighbours = |i: usize| -> Vec<usize> {
        let mut out = Vec::with_capacity(2 * n);
        for j in 0..n {
            let k = (i / strides[j]) % grid.per_angle[j];
            let cnt = grid.per_angle[j];
            let base = i - k * strides[j];
            if j + 1 == n {
                out.push(base + ((k + 1) % cnt) * strides[j]);
                out.push(base + ((k + cnt - 1) % cnt) * strides[j]);
            } else {
                if k + 1 < cnt {
                    out.push(base + (k + 1) * strides[j]);
                }
                if k > 0 {
                    out.push(base + (k - 1) * strides[j]);
                }
            }
        }
        out
    };
    let mut seeds: Vec<(f64, f64, Vec<f64>)> = Vec::new();
    for i in 0..total {
        let nb = neighbours(i);
        for k in 0..nt {
            let d = dist[i][k];
            let tmin = (k == 0 || dist[i][k - 1] >= d) && (k + 1 == nt || dist[i][k + 1] >= d);
            if tmin && nb.iter().all(|&o| dist[o][k] >= d) {
                seeds.push((d / times[k], times[k], cell(i)));
            }
        }
    }
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
    seeds.truncate(grid.max_seeds);

    // reflected covectors φ'_j = π_j - φ_j, seeded at their closest approach
    let phi0 = covector_to_spherical(index, q0, lambda0)?.0;
    for j in 0..n {
        let mut phi = phi0.clone();
        let half = if j + 1 == n { 0.5 * periods[j] } else { periods[j] };
        phi[j] = (half - phi[j]).rem_euclid(periods[j]);
        let p = covector(index, q0, &phi)?;
        let ys = integrate_sampled(index, q0, &p, &times, METHOD)?;
        let d: Vec<f64> = ys.iter().zip(&reference).map(|(a, r)| sup_dist(a, r, m)).collect();
        for k in 0..nt {
            let tmin = (k == 0 || d[k - 1] >= d[k]) && (k + 1 == nt || d[k + 1] >= d[k]);
            if tmin {
                seeds.push((d[k] / times[k], times[k], phi.clone()));
            }
        }
    }

    let problem = Problem { index, q0, lambda0 };
    let lam_norm = lambda0.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let found: Vec<Witness> = seeds
        .par_iter()
        .filter_map(|(_, t, phi)| {
            let (t, phi, gap) = problem.newton(*t, phi, 1e-11 * (1.0 + qn), 0.5 * dt)?;
            if !(gap <= spatial_tol && t <= t_max * (1.0 + 1e-9)) {
                return None;
            }
            let p = covector(index, q0, &phi).ok()?;
            let dm = sup_dist(&p, lambda0, m);
            let dp = (0..m).map(|k| (p[k] + lambda0[k]).abs()).fold(0.0, f64::max);
            if dm.min(dp) <= 1e-4 * lam_norm {
                return None;
            }
            Some(Witness { phi, covector: p, t, gap })
        })
        .collect();
    let best = found.into_iter().min_by(|a, b| a.t.total_cmp(&b.t));
    let (t_low, t_high) = match &best {
        Some(w) => ((w.t / dt).floor() * dt, w.t + 1e-8 * (1.0 + w.t)),
        None => (t_max, f64::INFINITY),
    };
    Ok(CutEstimate {
        t_low: t_low.min(best.as_ref().map_or(t_max, |w| w.t)),
        t_high,
        witness: best,
        t_max,
        grid: grid.clone(),
        seeds: seeds.len(),
        spatial_tol,
    })
}

/// `sup_k |closed form - integrated|` over `t_grid`, in both `x` and `p`.
pub fn closed_form_residual(path: &crate::geoflow::GeodesicPath, t_grid: &[f64]) -> Result<f64> {
    let m = path.index().dim();
    let mut sorted = t_grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let ys = integrate_sampled(path.index(), path.x0(), path.p0(), &sorted, METHOD)?;
    let mut worst: f64 = 0.0;
    for (t, y) in sorted.iter().zip(&ys) {
        let s = path.state(*t);
        for k in 0..m {
            worst = worst.max((s.x[k] - y[k]).abs()).max((s.p[k] - y[m + k]).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geoflow::{spherical_to_covector, GeodesicPath};
    use crate::synthesis::cut_report;

    #[test]
    fn solves_small_systems() {
        let x = solve(vec![vec![0.0, 2.0], vec![3.0, 1.0]], vec![4.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn residual_is_zero_at_start() {
        let index = MultiIndex::new(vec![1, 2]).unwrap();
        let path = GeodesicPath::from_spherical(&index, &[0.8, 1.1, 0.0], &SphericalPhi(vec![1.0, 2.0])).unwrap();
        assert_eq!(closed_form_residual(&path, &[0.0]).unwrap(), 0.0);
        assert!(closed_form_residual(&path, &[0.5, 1.0, 3.0]).unwrap() < 1e-8);
    }

    #[test]
    fn brackets_cut_time_in_heisenberg_type_case() {
        let index = MultiIndex::new(vec![1, 1]).unwrap();
        let q0 = [1.0, 1.0, 0.0];
        let phi = SphericalPhi(vec![1.1, 0.9]);
        let lam = spherical_to_covector(&index, &q0, &phi).unwrap();
        let path = GeodesicPath::from_spherical(&index, &q0, &phi).unwrap();
        let tau = cut_report(&path).tau;
        let grid = CovectorGrid::uniform(2, 10, 120);
        let est = brute_cut_time(&index, &q0, &lam, &grid, 1.5 * tau).unwrap();
        assert!(est.t_low <= tau && tau <= est.t_high, "{tau} {est:?}");
        assert!(est.t_high - est.t_low <= 0.02 * tau);
    }

    #[test]
    fn near_conjugate_covector_is_not_mistaken_for_its_witness() {
        // φ₂ is 5e-4 away from π/2, so the reflected covector is close to λ₀
        let index = MultiIndex::new(vec![1, 1]).unwrap();
        let q0 = [1.0, 1.0, 0.0];
        let pi = std::f64::consts::PI;
        let phi = SphericalPhi(vec![0.129 * pi, 0.50015 * pi]);
        let lam = spherical_to_covector(&index, &q0, &phi).unwrap();
        let tau = cut_report(&GeodesicPath::from_spherical(&index, &q0, &phi).unwrap()).tau;
        let est = brute_cut_time(&index, &q0, &lam, &CovectorGrid::uniform(2, 10, 100), 1.5 * tau).unwrap();
        assert!(est.t_low <= tau && tau <= est.t_high, "{tau} {est:?}");
        let w = est.witness.unwrap();
        assert!(sup_dist(&w.covector, &lam, 3) >= 1e-4);
    }

    #[test]
    fn straight_line_has_no_witness() {
        let index = MultiIndex::new(vec![1, 1]).unwrap();
        let q0 = [1.0, 1.0, 0.0];
        let grid = CovectorGrid::uniform(2, 6, 40);
        let est = brute_cut_time(&index, &q0, &[-1.0, 0.0, 0.0], &grid, 3.0).unwrap();
        assert!(est.witness.is_none(), "{est:?}");
        assert_eq!(est.t_high, f64::INFINITY);
    }
}
