//! Closed-form geodesic flow on `𝔾^{n+1}_α`.
//!
//! Coordinates are stored 0-based: `x[0..=n]`, `p[0..=n]`, and the multi-index
//! entry `α[j]` governs `ξ_{j+1} = ξ_j x_j^{α_j}`. A geodesic is described per
//! coordinate by a [`Branch`]: either
//!
//! * `Trig`: `x_j = A sin_{α_j}(ω I_j + φ)`, `p_j = A ω cos_{α_j}(ω I_j + φ)`, or
//! * `Linear`: `x_j = x⁰_j + p⁰_j I_j`, `p_j = p⁰_j`,
//!
//! with `I_j(t) = ∫_0^t ξ_j²`. The `I_j` are produced by a forward recursion in
//! `j`, so a full evaluation costs one generalized sine/cosine per trig branch.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::gentrig::TrigParams;

/// Tolerance on `|2H - 1|` for covectors that must lie on the unit fiber.
pub const UNIT_FIBER_TOL: f64 = 1e-9;

/// Multi-index `α = (α_1, …, α_n)` of nonnegative integers, `n >= 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(alpha: Vec<u32>) -> Result<Self> {
        if alpha.is_empty() {
            return domain("multi-index must have at least one entry");
        }
        Ok(MultiIndex(alpha))
    }

    /// Number of entries `n`; the space has dimension `n + 1`.
    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn dim(&self) -> usize {
        self.0.len() + 1
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn alpha(&self, j: usize) -> u32 {
        self.0[j]
    }

    /// Positions (0-based) of the nonzero entries.
    pub fn nonzero(&self) -> Vec<usize> {
        (0..self.n()).filter(|&j| self.0[j] != 0).collect()
    }

    /// `α̃_j`: `α_j`, with zeros replaced by 1.
    pub fn tilde(&self, j: usize) -> f64 {
        self.0[j].max(1) as f64
    }

    /// Appends `m` zero entries.
    pub fn embed(&self, m: usize) -> MultiIndex {
        let mut v = self.0.clone();
        v.extend(std::iter::repeat(0).take(m));
        MultiIndex(v)
    }

    fn check_len(&self, got: usize, what: usize) -> Result<()> {
        if got != what {
            return Err(Error::Dimension { expected: what, got });
        }
        Ok(())
    }
}

/// `x^k` for a nonnegative integer exponent, exact for small `k`.
#[inline]
pub(crate) fn ipow(x: f64, k: u32) -> f64 {
    x.powi(k as i32)
}

/// `ξ_j²` for `j = 0..=n`.
pub fn xi_squared(index: &MultiIndex, x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(index.dim());
    let mut acc = 1.0;
    for j in 0..index.dim() {
        out.push(acc);
        if j < index.n() {
            acc *= ipow(x[j], 2 * index.alpha(j));
        }
    }
    out
}

/// `H(x, p) = ½ Σ ξ_j² p_j²`.
pub fn hamiltonian(index: &MultiIndex, x: &[f64], p: &[f64]) -> Result<f64> {
    index.check_len(x.len(), index.dim())?;
    index.check_len(p.len(), index.dim())?;
    Ok(0.5 * xi_squared(index, x).iter().zip(p).map(|(xi, pj)| xi * pj * pj).sum::<f64>())
}

/// `R_1, …, R_{n+2}` (0-based output), `R_{n+2} = 0`, `R_{n+1} = |p_{n+1}|`,
/// `R_j² = R_{j+1}² x_j^{2α_j} + p_j²`.
pub fn r_values(index: &MultiIndex, x: &[f64], p: &[f64]) -> Vec<f64> {
    let n = index.n();
    let mut r2 = vec![0.0; n + 2];
    r2[n] = p[n] * p[n];
    for j in (0..n).rev() {
        r2[j] = r2[j + 1] * ipow(x[j], 2 * index.alpha(j)) + p[j] * p[j];
    }
    r2.into_iter().map(f64::sqrt).collect()
}

/// A point is Riemannian when `x_j ≠ 0` for every `j` with `α_j ≠ 0`.
pub fn is_riemannian(index: &MultiIndex, x: &[f64]) -> bool {
    index.nonzero().iter().all(|&j| x[j] != 0.0)
}

/// Spherical fiber coordinates `φ = (φ_1, …, φ_n)` with
/// `φ_j ∈ [0, π_{α̃_j}]` for `j < n` and `φ_n ∈ [0, 2π_{α̃_n})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalPhi(pub Vec<f64>);

fn chart_trig(index: &MultiIndex, j: usize) -> TrigParams {
    TrigParams::grushin(index.tilde(j)).expect("positive integer index")
}

/// Upper ends of the chart ranges: `π_{α_j}` for `j < n - 1`, `2π_{α_n}` for
/// the last angle.
pub fn chart_upper(index: &MultiIndex) -> Vec<f64> {
    let n = index.n();
    (0..n)
        .map(|j| {
            let h = chart_trig(index, j).half_period();
            if j + 1 == n {
                2.0 * h
            } else {
                h
            }
        })
        .collect()
}

/// Checks the chart rectangle, allowing a relative slack of `1e-12`.
pub fn check_chart(index: &MultiIndex, phi: &SphericalPhi) -> Result<()> {
    index.check_len(phi.0.len(), index.n())?;
    for (j, &v) in phi.0.iter().enumerate() {
        let h = chart_trig(index, j).half_period();
        let hi = if j + 1 == index.n() { 2.0 * h } else { h };
        let slack = 1e-12 * (1.0 + h);
        if !(v >= -slack && v <= hi + slack) {
            return domain(format!("phi[{j}] = {v} is outside the chart range [0, {hi}]"));
        }
    }
    Ok(())
}

fn check_riemannian(index: &MultiIndex, x: &[f64]) -> Result<()> {
    if !is_riemannian(index, x) {
        return Err(Error::SingularBase(format!("{x:?} lies on a singular hyperplane")));
    }
    Ok(())
}

/// Chart data shared by the covector, the geodesic parameters and the
/// determinant.
#[derive(Debug, Clone)]
pub(crate) struct ChartData {
    pub trig: Vec<TrigParams>,
    pub sin: Vec<f64>,
    pub cos: Vec<f64>,
    /// `δ_j = ρ_{α_j}(sin φ_j / x⁰_j)` for nonzero `α_j`, `sin φ_j` otherwise.
    pub delta: Vec<f64>,
    /// `prefix[j] = ∏_{i<j} δ_i`, length `n + 1`.
    pub prefix: Vec<f64>,
}

pub(crate) fn chart_data(index: &MultiIndex, base: &[f64], phi: &SphericalPhi) -> Result<ChartData> {
    check_chart(index, phi)?;
    chart_data_raw(index, base, phi)
}

/// [`chart_data`] without the range check; the formulas extend periodically,
/// which finite differences at the chart boundary rely on.
pub(crate) fn chart_data_raw(index: &MultiIndex, base: &[f64], phi: &SphericalPhi) -> Result<ChartData> {
    index.check_len(base.len(), index.dim())?;
    index.check_len(phi.0.len(), index.n())?;
    check_riemannian(index, base)?;
    let n = index.n();
    let mut d = ChartData {
        trig: Vec::with_capacity(n),
        sin: Vec::with_capacity(n),
        cos: Vec::with_capacity(n),
        delta: Vec::with_capacity(n),
        prefix: Vec::with_capacity(n + 1),
    };
    let mut acc = 1.0;
    for j in 0..n {
        let t = chart_trig(index, j);
        let (s, c) = t.sin_cos(phi.0[j]);
        let a = index.alpha(j);
        let delta = if a == 0 { s } else { crate::gentrig::rho(a as f64, s / base[j]) };
        d.prefix.push(acc);
        acc *= delta;
        d.trig.push(t);
        d.sin.push(s);
        d.cos.push(c);
        d.delta.push(delta);
    }
    d.prefix.push(acc);
    Ok(d)
}

/// Unit covector `p⁰(φ)` at a Riemannian base point.
pub fn spherical_to_covector(index: &MultiIndex, base: &[f64], phi: &SphericalPhi) -> Result<Vec<f64>> {
    let d = chart_data(index, base, phi)?;
    let n = index.n();
    let mut p: Vec<f64> = (0..n).map(|j| d.cos[j] * d.prefix[j]).collect();
    p.push(d.prefix[n]);
    Ok(p)
}

/// Inverse of [`spherical_to_covector`]. Where the chart degenerates (some
/// `sin φ_j = 0`) the later angles are not determined and are set to 0.
pub fn covector_to_spherical(index: &MultiIndex, base: &[f64], p: &[f64]) -> Result<SphericalPhi> {
    index.check_len(base.len(), index.dim())?;
    index.check_len(p.len(), index.dim())?;
    check_riemannian(index, base)?;
    let h2 = 2.0 * hamiltonian(index, base, p)?;
    if (h2 - 1.0).abs() > UNIT_FIBER_TOL {
        return Err(Error::Normalization(0.5 * h2));
    }
    let n = index.n();
    let xi2 = xi_squared(index, base);
    // tail[j] = Σ_{k>j} ξ_k² p_k², normalised so tail[-1] = 1
    let mut tail = vec![0.0; n + 1];
    for j in (0..n).rev() {
        tail[j] = tail[j + 1] + xi2[j + 1] * p[j + 1] * p[j + 1] / h2;
    }
    let mut phi = vec![0.0; n];
    let mut prefix = 1.0;
    let mut prev_tail = 1.0;
    for j in 0..n {
        if prefix == 0.0 {
            break;
        }
        let t = chart_trig(index, j);
        let beta = index.tilde(j);
        let ratio = if prev_tail > 0.0 { (tail[j] / prev_tail).min(1.0) } else { 0.0 };
        let s_abs = ratio.powf(0.5 / beta);
        let c = (p[j] / h2.sqrt()) / prefix;
        let c = c.clamp(-1.0, 1.0);
        let a = index.alpha(j);
        let s = if j + 1 < n {
            s_abs
        } else {
            // last angle: the sign of sin φ_n is read off p_{n+1}
            let sign_x = if a == 0 { 1.0 } else { base[j].signum() };
            s_abs * (p[n] / prefix).signum() * sign_x
        };
        phi[j] = t.angle(s, c);
        let delta = if a == 0 { s } else { crate::gentrig::rho(a as f64, s / base[j]) };
        prefix *= delta;
        prev_tail = tail[j];
    }
    Ok(SphericalPhi(phi))
}

/// The closed-form constants `A_j`, `ω_j`, `δ_j` of the geodesic with initial
/// covector `p⁰(φ)`. `A_j` and `ω_j` are `None` for zero entries of `α` and on
/// degenerate faces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicParams {
    pub amplitude: Vec<Option<f64>>,
    pub omega: Vec<Option<f64>>,
    pub delta: Vec<f64>,
}

pub fn geodesic_params(index: &MultiIndex, base: &[f64], phi: &SphericalPhi) -> Result<GeodesicParams> {
    let path = GeodesicPath::from_spherical(index, base, phi)?;
    let d = chart_data(index, base, phi)?;
    let mut amp = Vec::new();
    let mut omega = Vec::new();
    for j in 0..index.n() {
        match path.branches[j] {
            Branch::Trig { amp: a, omega: w, .. } => {
                amp.push(Some(a));
                omega.push(Some(w));
            }
            Branch::Linear => {
                amp.push(None);
                omega.push(None);
            }
        }
    }
    Ok(GeodesicParams { amplitude: amp, omega, delta: d.delta })
}

/// Per-coordinate description of a geodesic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Branch {
    Linear,
    Trig { amp: f64, omega: f64, phase: f64, trig: TrigParams, eta0: f64 },
}

impl Branch {
    pub(crate) fn trig(amp: f64, omega: f64, phase: f64, alpha: u32) -> Branch {
        let trig = TrigParams::grushin(alpha as f64).expect("positive integer index");
        let (s, c) = trig.sin_cos(phase);
        Branch::Trig { amp, omega, phase, trig, eta0: phase - s * c }
    }

    pub fn is_trig(&self) -> bool {
        matches!(self, Branch::Trig { .. })
    }
}

/// State `(x(t), p(t))` of a geodesic together with the integrals
/// `I_1(t), …, I_{n+1}(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathState {
    pub t: f64,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub integrals: Vec<f64>,
}

/// A normal geodesic in closed form.
#[derive(Debug, Clone)]
pub struct GeodesicPath {
    index: MultiIndex,
    x0: Vec<f64>,
    p0: Vec<f64>,
    branches: Vec<Branch>,
    chart: Option<SphericalPhi>,
}

/// `∫ (x0 + p I)^{2α} dI` from 0 to `i`, expanded so that small `p` is exact.
fn linear_power_integral(x0: f64, p: f64, i: f64, alpha: u32) -> f64 {
    let m = 2 * alpha;
    let mut sum = 0.0;
    let mut binom = 1.0;
    let mut ip = i;
    for k in 0..=m {
        sum += binom * ipow(x0, m - k) * ipow(p, k) * ip / (k as f64 + 1.0);
        binom *= (m - k) as f64 / (k as f64 + 1.0);
        ip *= i;
    }
    sum
}

impl GeodesicPath {
    /// Geodesic with initial covector `p⁰(φ)` at a Riemannian base point.
    pub fn from_spherical(index: &MultiIndex, base: &[f64], phi: &SphericalPhi) -> Result<Self> {
        check_chart(index, phi)?;
        Self::from_spherical_raw(index, base, phi)
    }

    pub(crate) fn from_spherical_raw(index: &MultiIndex, base: &[f64], phi: &SphericalPhi) -> Result<Self> {
        let d = chart_data_raw(index, base, phi)?;
        let n = index.n();
        let mut p0: Vec<f64> = (0..n).map(|j| d.cos[j] * d.prefix[j]).collect();
        p0.push(d.prefix[n]);
        let mut branches = Vec::with_capacity(n + 1);
        let mut degenerate = false;
        for j in 0..n {
            degenerate |= d.sin[j] == 0.0;
            let a = index.alpha(j);
            if a == 0 || degenerate {
                branches.push(Branch::Linear);
            } else {
                let amp = base[j] / d.sin[j];
                let omega = d.sin[j] / base[j] * d.prefix[j];
                branches.push(Branch::trig(amp, omega, phi.0[j], a));
            }
        }
        branches.push(Branch::Linear);
        Ok(GeodesicPath { index: index.clone(), x0: base.to_vec(), p0, branches, chart: Some(phi.clone()) })
    }

    /// Geodesic through any base point (Riemannian or not) with a unit
    /// Cartesian covector. Each trig branch uses the representation with
    /// `A > 0`, `ω > 0`.
    pub fn from_covector(index: &MultiIndex, base: &[f64], p: &[f64]) -> Result<Self> {
        let h = hamiltonian(index, base, p)?;
        if (2.0 * h - 1.0).abs() > UNIT_FIBER_TOL {
            return Err(Error::Normalization(h));
        }
        let n = index.n();
        let r = r_values(index, base, p);
        let mut branches = Vec::with_capacity(n + 1);
        for j in 0..n {
            let a = index.alpha(j);
            if a == 0 || r[j + 1] == 0.0 {
                branches.push(Branch::Linear);
                continue;
            }
            let af = a as f64;
            let amp = (r[j] / r[j + 1]).powf(1.0 / af);
            let omega = r[j + 1] * amp.powf(af - 1.0);
            let trig = TrigParams::grushin(af)?;
            let s = (base[j] / amp).clamp(-1.0, 1.0);
            let c = (p[j] / (amp * omega)).clamp(-1.0, 1.0);
            let phase = trig.angle(s, c);
            branches.push(Branch::trig(amp, omega, phase, a));
        }
        branches.push(Branch::Linear);
        Ok(GeodesicPath { index: index.clone(), x0: base.to_vec(), p0: p.to_vec(), branches, chart: None })
    }

    pub(crate) fn from_parts(index: &MultiIndex, x0: Vec<f64>, p0: Vec<f64>, branches: Vec<Branch>) -> Self {
        GeodesicPath { index: index.clone(), x0, p0, branches, chart: None }
    }

    pub fn index(&self) -> &MultiIndex {
        &self.index
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn p0(&self) -> &[f64] {
        &self.p0
    }

    pub fn chart(&self) -> Option<&SphericalPhi> {
        self.chart.as_ref()
    }

    pub fn branch(&self, j: usize) -> &Branch {
        &self.branches[j]
    }

    /// `ω_j` for trig branches.
    pub fn omega(&self, j: usize) -> Option<f64> {
        match self.branches[j] {
            Branch::Trig { omega, .. } => Some(omega),
            Branch::Linear => None,
        }
    }

    /// Evaluates the geodesic at time `t`.
    pub fn state(&self, t: f64) -> PathState {
        let n = self.index.n();
        let mut x = Vec::with_capacity(n + 1);
        let mut p = Vec::with_capacity(n + 1);
        let mut integrals = Vec::with_capacity(n + 1);
        if t == 0.0 {
            return PathState { t, x: self.x0.clone(), p: self.p0.clone(), integrals: vec![0.0; n + 1] };
        }
        let mut i = t;
        for j in 0..=n {
            integrals.push(i);
            match self.branches[j] {
                Branch::Linear => {
                    x.push(self.x0[j] + self.p0[j] * i);
                    p.push(self.p0[j]);
                    if j < n {
                        let a = self.index.alpha(j);
                        if a != 0 {
                            i = linear_power_integral(self.x0[j], self.p0[j], i, a);
                        }
                    }
                }
                Branch::Trig { amp, omega, phase, trig, eta0 } => {
                    let q = omega * i + phase;
                    let (s, c) = trig.sin_cos(q);
                    x.push(amp * s);
                    p.push(amp * omega * c);
                    let a = self.index.alpha(j) as f64;
                    i = amp.powf(2.0 * a) / (omega * (a + 1.0)) * ((q - s * c) - eta0);
                }
            }
        }
        PathState { t, x, p, integrals }
    }

    /// `x(t)`.
    pub fn point(&self, t: f64) -> Vec<f64> {
        self.state(t).x
    }

    /// `I_{j+1}(t) = ∫_0^t ξ_j²` for 0-based `j`.
    pub fn integral(&self, j: usize, t: f64) -> f64 {
        self.state(t).integrals[j]
    }
}

/// Closed-form state of `path` at time `t`.
pub fn eval_geodesic(path: &GeodesicPath, t: f64) -> PathState {
    path.state(t)
}

/// `∫_0^t ξ_j²` (0-based `j`).
pub fn xi_integral(path: &GeodesicPath, j: usize, t: f64) -> f64 {
    path.integral(j, t)
}

/// Embeds a point and covector of `𝔾^{n+1}_α` into `𝔾^{n+1+m}_{(α,0,…,0)}`.
pub fn embed(index: &MultiIndex, x: &[f64], p: &[f64], m: usize) -> (MultiIndex, Vec<f64>, Vec<f64>) {
    let mut xe = x.to_vec();
    let mut pe = p.to_vec();
    xe.extend(std::iter::repeat(0.0).take(m));
    pe.extend(std::iter::repeat(0.0).take(m));
    (index.embed(m), xe, pe)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::quad::gauss_kronrod;

    fn idx(a: &[u32]) -> MultiIndex {
        MultiIndex::new(a.to_vec()).unwrap()
    }

    #[test]
    fn hamiltonian_example() {
        let h = hamiltonian(&idx(&[2, 1]), &[2.0, 3.0, 0.0], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(h, 80.5);
    }

    #[test]
    fn chart_gives_unit_covectors() {
        let cases: [(&[u32], &[f64], &[f64]); 4] = [
            (&[1, 2], &[0.7, -1.3, 0.2], &[1.1, 4.0]),
            (&[2, 0, 3, 0], &[1.2, 0.5, -0.8, 2.0, 1.0], &[0.4, 2.0, 1.7, 5.5]),
            (&[0], &[0.0, 0.0], &[2.5]),
            (&[3], &[-0.6, 1.0], &[1.0]),
        ];
        for (a, x, phi) in cases {
            let index = idx(a);
            let phi = SphericalPhi(phi.to_vec());
            let p = spherical_to_covector(&index, x, &phi).unwrap();
            let h = hamiltonian(&index, x, &p).unwrap();
            assert!((h - 0.5).abs() <= 1e-14, "{a:?}: {h}");
            let back = covector_to_spherical(&index, x, &p).unwrap();
            for (u, v) in back.0.iter().zip(&phi.0) {
                assert!((u - v).abs() <= 1e-11, "{a:?}: {back:?} vs {phi:?}");
            }
        }
    }

    #[test]
    fn params_satisfy_identities() {
        let index = idx(&[2, 1]);
        let x = [0.8, -1.5, 0.3];
        let phi = SphericalPhi(vec![1.0, 4.2]);
        let path = GeodesicPath::from_spherical(&index, &x, &phi).unwrap();
        let r = r_values(&index, &x, path.p0());
        for j in 0..2 {
            if let Branch::Trig { amp, omega, phase, trig, .. } = *path.branch(j) {
                let a = index.alpha(j) as f64;
                let (s, c) = trig.sin_cos(phase);
                assert!((amp * s - x[j]).abs() <= 1e-14);
                assert!((amp * omega * c - path.p0()[j]).abs() <= 1e-14);
                let lhs = omega * omega / amp.abs().powf(2.0 * (a - 1.0));
                assert!((lhs - r[j + 1] * r[j + 1]).abs() <= 1e-12 * (1.0 + lhs));
            } else {
                panic!("expected trig branch");
            }
        }
    }

    #[test]
    fn t_zero_reproduces_base() {
        let index = idx(&[1, 2]);
        let x = [0.5, 1.5, -2.0];
        let path = GeodesicPath::from_spherical(&index, &x, &SphericalPhi(vec![0.3, 2.0])).unwrap();
        let s = path.state(0.0);
        assert_eq!(s.x, x.to_vec());
        assert_eq!(s.p, path.p0().to_vec());
    }

    #[test]
    fn integrals_match_quadrature() {
        let index = idx(&[2, 1, 0]);
        let x = [0.9, 1.1, -0.4, 0.0];
        let path = GeodesicPath::from_spherical(&index, &x, &SphericalPhi(vec![1.2, 0.7, 3.9])).unwrap();
        let t = 2.3;
        let st = path.state(t);
        for j in 1..index.dim() {
            let q = gauss_kronrod(|s| xi_squared(&index, &path.state(s).x)[j], 0.0, t, 1e-13);
            assert!((q - st.integrals[j]).abs() <= 1e-10 * (1.0 + q.abs()), "I_{j}: {q} vs {}", st.integrals[j]);
        }
    }

    #[test]
    fn cartesian_and_spherical_paths_agree() {
        let index = idx(&[1, 2, 0]);
        let x = [0.6, -1.2, 0.8, 0.1];
        let phi = SphericalPhi(vec![2.1, 0.4, 5.0]);
        let a = GeodesicPath::from_spherical(&index, &x, &phi).unwrap();
        let b = GeodesicPath::from_covector(&index, &x, a.p0()).unwrap();
        for k in 1..30 {
            let t = 0.2 * k as f64;
            let (sa, sb) = (a.state(t), b.state(t));
            for j in 0..index.dim() {
                assert!((sa.x[j] - sb.x[j]).abs() <= 1e-11, "t={t} x{j}");
                assert!((sa.p[j] - sb.p[j]).abs() <= 1e-11, "t={t} p{j}");
            }
        }
    }

    #[test]
    fn branches_agree_near_threshold() {
        // R_{j+1} small: the trig branch must approach the linear one
        let index = idx(&[1]);
        let x = [1.0, 0.0];
        let eps: f64 = 1e-6;
        let u = (1.0 - eps * eps).sqrt();
        let near = GeodesicPath::from_covector(&index, &x, &[u, eps]).unwrap();
        let line = GeodesicPath::from_covector(&index, &x, &[1.0, 0.0]).unwrap();
        assert!(!line.branch(0).is_trig() && near.branch(0).is_trig());
        for k in 1..10 {
            let t = 0.3 * k as f64;
            let d = (near.state(t).x[0] - line.state(t).x[0]).abs();
            assert!(d <= 1e-4, "t={t}: {d}");
        }
    }

    #[test]
    fn embedding_preserves_geodesics() {
        let index = idx(&[1, 2]);
        let x = [0.7, 1.1, 0.0];
        let path = GeodesicPath::from_spherical(&index, &x, &SphericalPhi(vec![0.9, 3.3])).unwrap();
        let (ie, xe, pe) = embed(&index, &x, path.p0(), 2);
        let big = GeodesicPath::from_covector(&ie, &xe, &pe).unwrap();
        for k in 1..10 {
            let t = 0.4 * k as f64;
            let (a, b) = (path.state(t), big.state(t));
            for j in 0..3 {
                assert!((a.x[j] - b.x[j]).abs() <= 1e-12);
            }
            assert_eq!(b.x[3], 0.0);
            assert_eq!(b.x[4], 0.0);
        }
    }

    #[test]
    fn errors() {
        let index = idx(&[1, 1]);
        assert!(matches!(
            GeodesicPath::from_spherical(&index, &[0.0, 1.0, 0.0], &SphericalPhi(vec![1.0, 1.0])),
            Err(Error::SingularBase(_))
        ));
        assert!(matches!(
            GeodesicPath::from_spherical(&index, &[1.0, 1.0], &SphericalPhi(vec![1.0, 1.0])),
            Err(Error::Dimension { .. })
        ));
        assert!(GeodesicPath::from_spherical(&index, &[1.0, 1.0, 0.0], &SphericalPhi(vec![4.0, 1.0])).is_err());
        assert!(matches!(
            GeodesicPath::from_covector(&index, &[1.0, 1.0, 0.0], &[1.0, 1.0, 1.0]),
            Err(Error::Normalization(_))
        ));
    }

    #[test]
    fn straight_line_covector() {
        let index = idx(&[2, 1]);
        let x = [1.0, 2.0, 3.0];
        let path = GeodesicPath::from_spherical(&index, &x, &SphericalPhi(vec![0.0, 1.0])).unwrap();
        assert!((0..3).all(|j| !path.branch(j).is_trig()));
        let s = path.state(2.0);
        assert!((s.x[0] - 3.0).abs() <= 1e-15 && s.x[1] == 2.0 && s.x[2] == 3.0);
    }
}
