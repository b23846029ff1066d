//! Direct integration of Hamilton's equations `x' = ∂H/∂p`, `p' = -∂H/∂x`.
//!
//! The state is packed as `y = (x_0, …, x_n, p_0, …, p_n)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geoflow::{hamiltonian, ipow, MultiIndex};

/// Step control for [`integrate_hamilton`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Method {
    /// Classical fourth-order Runge-Kutta with a fixed step.
    Rk4 { step: f64 },
    /// Dormand-Prince 5(4) with embedded error control.
    Dopri5 { rtol: f64, atol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    pub t_end: f64,
}

impl IntegratorConfig {
    pub fn adaptive(t_end: f64) -> Self {
        IntegratorConfig { method: Method::Dopri5 { rtol: 1e-11, atol: 1e-12 }, t_end }
    }
}

/// Right-hand side of Hamilton's equations.
pub fn hamilton_rhs(index: &MultiIndex, y: &[f64], out: &mut [f64]) {
    let m = index.dim();
    let n = index.n();
    let (x, p) = y.split_at(m);
    let mut stack = [0.0f64; 16];
    let mut heap;
    let pw: &mut [f64] = if n <= 16 {
        &mut stack[..n]
    } else {
        heap = vec![0.0; n];
        &mut heap[..]
    };
    for i in 0..n {
        pw[i] = ipow(x[i], 2 * index.alpha(i));
    }
    let mut xi2 = 1.0;
    for j in 0..m {
        out[j] = xi2 * p[j];
        if j < n {
            xi2 *= pw[j];
        }
    }
    for k in 0..m {
        let a = if k < n { index.alpha(k) } else { 0 };
        if a == 0 {
            out[m + k] = 0.0;
            continue;
        }
        // Σ_{j>k} p_j² ∏_{i<j, i≠k} x_i^{2α_i}
        let mut before = 1.0;
        for &v in pw.iter().take(k) {
            before *= v;
        }
        let mut acc = before;
        let mut sum = 0.0;
        for j in (k + 1)..m {
            sum += p[j] * p[j] * acc;
            if j < n {
                acc *= pw[j];
            }
        }
        out[m + k] = -(a as f64) * ipow(x[k], 2 * a - 1) * sum;
    }
}

/// Accepted steps of an integration with Hermite dense output.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub index: MultiIndex,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub derivs: Vec<Vec<f64>>,
    /// Largest `|H(y_k) - H(y_0)|` over accepted steps.
    pub max_drift: f64,
}

fn hermite(t0: f64, y0: &[f64], f0: &[f64], t1: f64, y1: &[f64], f1: &[f64], t: f64, out: &mut [f64]) {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    for i in 0..out.len() {
        out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
    }
}

impl Trajectory {
    /// Dense-output state at `t ∈ [0, t_end]`.
    pub fn at(&self, t: f64) -> Vec<f64> {
        let k = match self.times.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(k) => return self.states[k].clone(),
            Err(k) => k.clamp(1, self.times.len() - 1),
        };
        let mut out = vec![0.0; self.states[0].len()];
        hermite(
            self.times[k - 1],
            &self.states[k - 1],
            &self.derivs[k - 1],
            self.times[k],
            &self.states[k],
            &self.derivs[k],
            t,
            &mut out,
        );
        out
    }

    pub fn end_state(&self) -> &[f64] {
        self.states.last().expect("nonempty trajectory")
    }
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Drives the integration, calling `on_step(t0, y0, f0, t1, y1, f1)` for each
/// accepted step.
fn drive<F>(index: &MultiIndex, y0: &[f64], cfg: &IntegratorConfig, mut on_step: F) -> Result<()>
where
    F: FnMut(f64, &[f64], &[f64], f64, &[f64], &[f64]),
{
    let dim = y0.len();
    let mut y = y0.to_vec();
    let mut f = vec![0.0; dim];
    hamilton_rhs(index, &y, &mut f);
    let mut t = 0.0;
    let t_end = cfg.t_end;
    if t_end <= 0.0 {
        return Ok(());
    }
    let mut k = vec![vec![0.0; dim]; 7];
    let mut tmp = vec![0.0; dim];
    let mut ynew = vec![0.0; dim];
    match cfg.method {
        Method::Rk4 { step } => {
            let steps = (t_end / step).ceil().max(1.0) as usize;
            let h = t_end / steps as f64;
            for s in 0..steps {
                k[0].copy_from_slice(&f);
                for i in 0..dim {
                    tmp[i] = y[i] + 0.5 * h * k[0][i];
                }
                let (k0, rest) = k.split_at_mut(1);
                hamilton_rhs(index, &tmp, &mut rest[0]);
                for i in 0..dim {
                    tmp[i] = y[i] + 0.5 * h * rest[0][i];
                }
                hamilton_rhs(index, &tmp, &mut rest[1]);
                for i in 0..dim {
                    tmp[i] = y[i] + h * rest[1][i];
                }
                hamilton_rhs(index, &tmp, &mut rest[2]);
                for i in 0..dim {
                    ynew[i] = y[i] + h / 6.0 * (k0[0][i] + 2.0 * rest[0][i] + 2.0 * rest[1][i] + rest[2][i]);
                }
                let t1 = if s + 1 == steps { t_end } else { (s + 1) as f64 * h };
                let mut fnew = vec![0.0; dim];
                hamilton_rhs(index, &ynew, &mut fnew);
                on_step(t, &y, &f, t1, &ynew, &fnew);
                t = t1;
                y.copy_from_slice(&ynew);
                f = fnew;
            }
        }
        Method::Dopri5 { rtol, atol } => {
            let scale0: f64 = y.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
            let fmax: f64 = f.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-8);
            let mut h = (0.01 * scale0 / fmax).min(t_end).max(1e-8);
            while t < t_end {
                let remaining = t_end - t;
                let last = h >= remaining * (1.0 - 1e-12);
                if last {
                    h = remaining;
                } else if h <= 1e-14 * (1.0 + t.abs()) {
                    return Err(Error::StepUnderflow(t));
                }
                k[0].copy_from_slice(&f);
                for s in 1..7 {
                    for i in 0..dim {
                        let mut acc = y[i];
                        for (r, kr) in k.iter().enumerate().take(s) {
                            acc += h * A[s][r] * kr[i];
                        }
                        tmp[i] = acc;
                    }
                    if s == 6 {
                        ynew.copy_from_slice(&tmp);
                    }
                    let (_, rest) = k.split_at_mut(s);
                    hamilton_rhs(index, &tmp, &mut rest[0]);
                }
                // k[6] is f(t + h, ynew) by the FSAL property
                let mut err = 0.0;
                for i in 0..dim {
                    let mut e = 0.0;
                    for (s, ks) in k.iter().enumerate() {
                        e += E[s] * ks[i];
                    }
                    let sc = atol + rtol * y[i].abs().max(ynew[i].abs());
                    err += (h * e / sc).powi(2);
                }
                let err = (err / dim as f64).sqrt();
                if err <= 1.0 {
                    let t1 = if last { t_end } else { t + h };
                    let fnew = k[6].clone();
                    on_step(t, &y, &f, t1, &ynew, &fnew);
                    t = t1;
                    y.copy_from_slice(&ynew);
                    f = fnew;
                }
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                h *= if err.is_finite() { fac } else { 0.2 };
            }
        }
    }
    Ok(())
}

fn pack(x0: &[f64], p0: &[f64]) -> Vec<f64> {
    let mut y = x0.to_vec();
    y.extend_from_slice(p0);
    y
}

/// Integrates from `(x0, p0)` over `[0, t_end]`, keeping every accepted step.
pub fn integrate_hamilton(index: &MultiIndex, x0: &[f64], p0: &[f64], cfg: &IntegratorConfig) -> Result<Trajectory> {
    hamiltonian(index, x0, p0)?;
    let y0 = pack(x0, p0);
    let m = index.dim();
    let h0 = hamiltonian(index, x0, p0)?;
    let mut f0 = vec![0.0; y0.len()];
    hamilton_rhs(index, &y0, &mut f0);
    let mut traj =
        Trajectory { index: index.clone(), times: vec![0.0], states: vec![y0.clone()], derivs: vec![f0], max_drift: 0.0 };
    drive(index, &y0, cfg, |_, _, _, t1, y1, f1| {
        let h = hamiltonian(index, &y1[..m], &y1[m..]).unwrap_or(f64::NAN);
        traj.max_drift = traj.max_drift.max((h - h0).abs());
        traj.times.push(t1);
        traj.states.push(y1.to_vec());
        traj.derivs.push(f1.to_vec());
    })?;
    Ok(traj)
}

/// Integrates and returns the dense-output states at the (sorted) `times`
/// without storing the whole trajectory.
pub fn integrate_sampled(
    index: &MultiIndex,
    x0: &[f64],
    p0: &[f64],
    times: &[f64],
    method: Method,
) -> Result<Vec<Vec<f64>>> {
    let y0 = pack(x0, p0);
    let t_end = times.iter().cloned().fold(0.0, f64::max);
    let mut out = Vec::with_capacity(times.len());
    let mut next = 0;
    while next < times.len() && times[next] <= 0.0 {
        out.push(y0.clone());
        next += 1;
    }
    drive(index, &y0, &IntegratorConfig { method, t_end }, |t0, y0s, f0, t1, y1, f1| {
        while next < times.len() && times[next] <= t1 {
            let mut s = vec![0.0; y1.len()];
            hermite(t0, y0s, f0, t1, y1, f1, times[next], &mut s);
            out.push(s);
            next += 1;
        }
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geoflow::{GeodesicPath, SphericalPhi};

    fn index(a: &[u32]) -> MultiIndex {
        MultiIndex::new(a.to_vec()).unwrap()
    }

    #[test]
    fn rhs_matches_finite_difference_gradient() {
        let idx = index(&[2, 1, 0]);
        let y = [0.7, -1.2, 0.4, 2.0, 0.3, -0.8, 1.1, 0.5];
        let mut f = vec![0.0; 8];
        hamilton_rhs(&idx, &y, &mut f);
        let h = |v: &[f64]| hamiltonian(&idx, &v[..4], &v[4..]).unwrap();
        for i in 0..8 {
            let mut a = y.to_vec();
            let mut b = y.to_vec();
            a[i] += 1e-6;
            b[i] -= 1e-6;
            let g = (h(&a) - h(&b)) / 2e-6;
            let want = if i < 4 { -f[i + 4] } else { f[i - 4] };
            assert!((g - want).abs() <= 1e-7 * (1.0 + g.abs()), "component {i}");
        }
    }

    #[test]
    fn rk4_has_fourth_order() {
        let idx = index(&[1, 2]);
        let x0 = [0.8, 1.1, 0.0];
        let path = GeodesicPath::from_spherical(&idx, &x0, &SphericalPhi(vec![1.0, 2.0])).unwrap();
        let exact = path.state(2.0);
        let err = |h: f64| {
            let tr = integrate_hamilton(&idx, &x0, path.p0(), &IntegratorConfig { method: Method::Rk4 { step: h }, t_end: 2.0 })
                .unwrap();
            let y = tr.end_state();
            (0..3).map(|j| (y[j] - exact.x[j]).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(0.04), err(0.02));
        assert!((e1 / e2).log2() >= 3.9, "order {}", (e1 / e2).log2());
    }

    #[test]
    fn adaptive_matches_closed_form_and_conserves_energy() {
        let idx = index(&[2, 0, 1]);
        let x0 = [1.1, 0.5, -0.7, 0.2];
        let path = GeodesicPath::from_spherical(&idx, &x0, &SphericalPhi(vec![0.8, 2.4, 4.0])).unwrap();
        let tr = integrate_hamilton(&idx, &x0, path.p0(), &IntegratorConfig::adaptive(6.0)).unwrap();
        assert!(tr.max_drift <= 1e-8 * 1.5);
        for k in 0..=60 {
            let t = 0.1 * k as f64;
            let y = tr.at(t);
            let s = path.state(t);
            for j in 0..4 {
                assert!((y[j] - s.x[j]).abs() <= 1e-7, "t={t} x{j}");
                assert!((y[4 + j] - s.p[j]).abs() <= 1e-7, "t={t} p{j}");
            }
        }
        let times: Vec<f64> = (0..=12).map(|k| 0.5 * k as f64).collect();
        let sampled = integrate_sampled(&idx, &x0, path.p0(), &times, Method::Dopri5 { rtol: 1e-11, atol: 1e-12 }).unwrap();
        assert_eq!(sampled.len(), times.len());
        for (t, y) in times.iter().zip(&sampled) {
            assert!((y[2] - path.state(*t).x[2]).abs() <= 1e-7);
        }
    }
}
