//! Generalized trigonometric functions `sin_{a,b}`, `cos_{a,b}` and the
//! helpers built on them.
//!
//! `F_{a,b}(x) = ∫_0^x (1 - t^a)^{-1/b} dt` is increasing on `[0, 1]`; its
//! inverse on `[0, π_{a,b}/2]` is `sin_{a,b}`, extended by
//! `sin(x) = sin(π_{a,b} - x)`, oddness and `2π_{a,b}` periodicity.
//! `cos_{a,b}` is the derivative of `sin_{a,b}`, and
//! `|sin|^a + |cos|^b = 1`.
//!
//! The forward map is evaluated with two hypergeometric expansions. Below
//! `y^a = 1/2` we sum the binomial series of the integrand. Above it we use the
//! complementary integral `∫_y^1` written in `σ = 1 - y^a`, which behaves like
//! `σ^{1-1/b}` times an analytic function. Both series converge at least as
//! fast as `2^{-k}`. Inverting in `w = σ^{1-1/b}` removes the square-root type
//! singularity at the quarter period, so `cos` comes out as `σ^{1/b}` with no
//! cancellation and is exactly zero at quarter periods.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use crate::error::{domain, Result};
use crate::roots::newton_increasing;

/// Exponent pair `(a, b)` together with cached derived constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigParams {
    a: f64,
    b: f64,
    half: f64,
    quarter: f64,
    /// `2^{-1/a}`, where the two expansions meet.
    split_y: f64,
    /// `F(split_y)`.
    split_x: f64,
}

fn cache() -> &'static RwLock<HashMap<(u64, u64), TrigParams>> {
    static CACHE: OnceLock<RwLock<HashMap<(u64, u64), TrigParams>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

impl TrigParams {
    /// Builds (or fetches from the process-wide cache) the parameters for
    /// `(a, b)`. Requires `a >= 1` and `b > 1`.
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a >= 1.0 && a.is_finite()) {
            return domain(format!("exponent a = {a} must be a finite number >= 1"));
        }
        if !(b > 1.0 && b.is_finite()) {
            return domain(format!("exponent b = {b} must be a finite number > 1"));
        }
        let key = (a.to_bits(), b.to_bits());
        if let Some(p) = cache().read().expect("trig cache poisoned").get(&key) {
            return Ok(*p);
        }
        let p = Self::compute(a, b);
        cache().write().expect("trig cache poisoned").insert(key, p);
        Ok(p)
    }

    /// Parameters `(2α, 2)` used for the Grushin functions `sin_α`, `cos_α`.
    pub fn grushin(alpha: f64) -> Result<Self> {
        Self::new(2.0 * alpha, 2.0)
    }

    fn compute(a: f64, b: f64) -> Self {
        let ln_beta =
            libm::lgamma(1.0 / a) + libm::lgamma(1.0 - 1.0 / b) - libm::lgamma(1.0 / a + 1.0 - 1.0 / b);
        let half = 2.0 / a * ln_beta.exp();
        let split_y = 0.5f64.powf(1.0 / a);
        let mut p = TrigParams { a, b, half, quarter: 0.5 * half, split_y, split_x: 0.0 };
        p.split_x = p.lower_series(split_y).0;
        p
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// `π_{a,b} = 2 F_{a,b}(1) = (2/a) B(1/a, 1 - 1/b)`.
    pub fn half_period(&self) -> f64 {
        self.half
    }

    pub fn quarter_period(&self) -> f64 {
        self.quarter
    }

    pub fn period(&self) -> f64 {
        2.0 * self.half
    }

    /// `F(y)` and `F'(y)` for `0 <= y <= split_y`.
    fn lower_series(&self, y: f64) -> (f64, f64) {
        let u = y.powf(self.a);
        let inv_b = 1.0 / self.b;
        let mut coef = 1.0;
        let mut upow = 1.0;
        let mut sum = 0.0;
        for k in 0..400 {
            let kf = k as f64;
            let term = coef * upow / (self.a * kf + 1.0);
            sum += term;
            if term <= 1e-18 * sum {
                break;
            }
            coef *= (kf + inv_b) / (kf + 1.0);
            upow *= u;
        }
        (y * sum, (1.0 - u).powf(-inv_b))
    }

    /// Complementary integral `∫_y^1` as a function of `w = σ^{1-1/b}`,
    /// `σ = 1 - y^a`. Returns `(T, dT/dw, σ)`.
    fn upper_series_w(&self, w: f64) -> (f64, f64, f64) {
        let e = 1.0 - 1.0 / self.b;
        let sigma = w.powf(1.0 / e);
        let (t, _) = self.upper_series_sigma(sigma);
        let dt = (1.0 - sigma).powf(1.0 / self.a - 1.0) / (self.a * e);
        (t, dt, sigma)
    }

    fn upper_series_sigma(&self, sigma: f64) -> (f64, f64) {
        let e = 1.0 - 1.0 / self.b;
        let c = 1.0 - 1.0 / self.a;
        let mut coef = 1.0;
        let mut spow = 1.0;
        let mut sum = 0.0;
        for k in 0..800 {
            let kf = k as f64;
            let term = coef * spow / (kf + e);
            sum += term;
            if term.abs() <= 1e-18 * sum || coef == 0.0 {
                break;
            }
            coef *= (kf + c) / (kf + 1.0);
            spow *= sigma;
        }
        let w = sigma.powf(e);
        (w * sum / self.a, w)
    }

    /// `F_{a,b}(y)` for `y ∈ [0, 1]`.
    pub fn forward(&self, y: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&y) {
            return domain(format!("forward map needs y in [0, 1], got {y}"));
        }
        Ok(self.forward_unchecked(y))
    }

    fn forward_unchecked(&self, y: f64) -> f64 {
        if y <= self.split_y {
            self.lower_series(y).0
        } else {
            let sigma = -libm::expm1(self.a * libm::log1p(y - 1.0));
            self.quarter - self.upper_series_sigma(sigma).0
        }
    }

    /// Angle in `[0, π_{a,b}/2]` with the given nonnegative sine and cosine
    /// magnitudes. Whichever of the two is better conditioned is used.
    pub fn quarter_angle(&self, s_abs: f64, c_abs: f64) -> f64 {
        if s_abs.powf(self.a) <= 0.5 {
            self.lower_series(s_abs.min(self.split_y)).0
        } else {
            let sigma = c_abs.powf(self.b).min(1.0);
            (self.quarter - self.upper_series_sigma(sigma).0).max(0.0)
        }
    }

    /// Angle in `[0, 2π_{a,b})` whose sine and cosine have the given values,
    /// the analogue of `atan2`.
    pub fn angle(&self, s: f64, c: f64) -> f64 {
        let base = self.quarter_angle(s.abs(), c.abs());
        let p = self.half;
        let phi = match (s >= 0.0 || s == 0.0, c >= 0.0) {
            (true, true) => base,
            (true, false) => p - base,
            (false, false) => p + base,
            (false, true) => 2.0 * p - base,
        };
        if s == 0.0 {
            if c >= 0.0 {
                0.0
            } else {
                p
            }
        } else if phi >= 2.0 * p {
            0.0
        } else {
            phi
        }
    }

    /// `(|sin|, |cos|)` on `[0, quarter]`, given `r` and `d = quarter - r`.
    fn quarter_eval(&self, r: f64, d: f64) -> (f64, f64) {
        if r <= self.split_x {
            if r == 0.0 {
                return (0.0, 1.0);
            }
            let y = newton_increasing(|y| self.lower_series(y), r, 0.0, self.split_y, r, 4e-16);
            let c = (1.0 - y.powf(self.a)).powf(1.0 / self.b);
            (y, c)
        } else {
            if d <= 0.0 {
                return (1.0, 0.0);
            }
            let e = 1.0 - 1.0 / self.b;
            let w_hi = 0.75f64.powf(e);
            let w0 = d * self.a * e;
            let w = newton_increasing(
                |w| {
                    let (t, dt, _) = self.upper_series_w(w);
                    (t, dt)
                },
                d,
                0.0,
                w_hi,
                w0,
                4e-16,
            );
            let sigma = w.powf(1.0 / e);
            let y = (libm::log1p(-sigma) / self.a).exp();
            (y, sigma.powf(1.0 / self.b))
        }
    }

    /// `(sin_{a,b}(x), cos_{a,b}(x))`.
    pub fn sin_cos(&self, x: f64) -> (f64, f64) {
        if !x.is_finite() {
            return (f64::NAN, f64::NAN);
        }
        let p = self.half;
        let l = 2.0 * p;
        let k = (x / l).round();
        let mut r0 = (-k).mul_add(l, x);
        if r0 > p {
            r0 -= l;
        } else if r0 < -p {
            r0 += l;
        }
        let neg = r0.is_sign_negative();
        let a = r0.abs();
        let q = self.quarter;
        let (r, d, cos_sign) = if a <= q {
            (a, q - a, 1.0)
        } else {
            ((p - a).max(0.0), (a - q).min(q), -1.0)
        };
        let (s, c) = self.quarter_eval(r, d);
        (if neg { -s } else { s }, if c == 0.0 { 0.0 } else { cos_sign * c })
    }

    pub fn sin(&self, x: f64) -> f64 {
        self.sin_cos(x).0
    }

    pub fn cos(&self, x: f64) -> f64 {
        self.sin_cos(x).1
    }

    /// `sin/cos`; infinite at odd quarter periods.
    pub fn tan(&self, x: f64) -> f64 {
        let (s, c) = self.sin_cos(x);
        s / c
    }
}

/// `π_{a,b}`.
pub fn half_period(a: f64, b: f64) -> Result<f64> {
    Ok(TrigParams::new(a, b)?.half_period())
}

/// `F_{a,b}(x)` for `x ∈ [0, 1]`.
pub fn forward(a: f64, b: f64, x: f64) -> Result<f64> {
    TrigParams::new(a, b)?.forward(x)
}

pub fn gsin(a: f64, b: f64, x: f64) -> Result<f64> {
    Ok(TrigParams::new(a, b)?.sin(x))
}

pub fn gcos(a: f64, b: f64, x: f64) -> Result<f64> {
    Ok(TrigParams::new(a, b)?.cos(x))
}

/// `η_β(x) = x - sin_β(x) cos_β(x)`, with `η_β' = (β + 1) sin_β^{2β}`.
pub fn eta(beta: f64, x: f64) -> Result<f64> {
    Ok(eta_with(&TrigParams::grushin(beta)?, x))
}

/// [`eta`] with prebuilt parameters `(2β, 2)`.
pub fn eta_with(p: &TrigParams, x: f64) -> f64 {
    let (s, c) = p.sin_cos(x);
    x - s * c
}

/// `ρ_θ(x) = |x|^{θ-1} x`.
pub fn rho(theta: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    x.abs().powf(theta - 1.0) * x
}

/// Inverse of `sin_β` on `[-1, 1]`, with values in `[-π_β/2, π_β/2]`.
pub fn garcsin(beta: f64, y: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&y) {
        return domain(format!("garcsin needs y in [-1, 1], got {y}"));
    }
    let p = TrigParams::grushin(beta)?;
    let v = p.forward_unchecked(y.abs());
    Ok(if y < 0.0 { -v } else { v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::quad::tanh_sinh;
    use std::f64::consts::PI;

    const PAIRS: [(f64, f64); 8] =
        [(2.0, 2.0), (4.0, 2.0), (6.0, 2.0), (8.0, 2.0), (16.0, 2.0), (3.0, 1.5), (1.0, 3.0), (2.5, 4.0)];

    fn quad_forward(a: f64, b: f64, x: f64) -> f64 {
        // integrand written with the distance to the right endpoint so the
        // singularity at t = 1 is resolved
        tanh_sinh(
            |t, dist_right| {
                let one_minus_t = (1.0 - x) + dist_right;
                let u = -libm::expm1(a * libm::log1p(-one_minus_t.min(1.0)));
                let _ = t;
                u.powf(-1.0 / b)
            },
            0.0,
            x,
        )
    }

    #[test]
    fn classical_half_period_is_pi() {
        assert!((half_period(2.0, 2.0).unwrap() - PI).abs() <= 1e-12);
    }

    #[test]
    fn half_period_matches_quadrature() {
        for (a, b) in PAIRS {
            let hp = half_period(a, b).unwrap();
            let q = 2.0 * quad_forward(a, b, 1.0);
            assert!((hp - q).abs() <= 1e-10 * hp, "({a},{b}): {hp} vs {q}");
        }
    }

    #[test]
    fn forward_matches_quadrature() {
        for (a, b) in PAIRS {
            for &x in &[0.1, 0.5, 0.8, 0.95, 0.999, 1.0] {
                let f = forward(a, b, x).unwrap();
                let q = quad_forward(a, b, x);
                assert!((f - q).abs() <= 1e-12 * (1.0 + q), "({a},{b}) x={x}: {f} vs {q}");
            }
        }
    }

    #[test]
    fn forward_half_for_eight_two() {
        let f = forward(8.0, 2.0, 0.5).unwrap();
        assert!((f - quad_forward(8.0, 2.0, 0.5)).abs() <= 1e-12);
    }

    #[test]
    fn classical_sin_cos() {
        let p = TrigParams::new(2.0, 2.0).unwrap();
        for i in 0..=2000 {
            let x = -10.0 + 20.0 * i as f64 / 2000.0;
            let (s, c) = p.sin_cos(x);
            assert!((s - x.sin()).abs() <= 1e-12, "sin {x}");
            assert!((c - x.cos()).abs() <= 1e-12, "cos {x}");
        }
    }

    #[test]
    fn pythagorean_identity() {
        for (a, b) in PAIRS {
            let p = TrigParams::new(a, b).unwrap();
            for i in 0..2000 {
                let x = -p.period() + 2.0 * p.period() * i as f64 / 2000.0;
                let (s, c) = p.sin_cos(x);
                let r = s.abs().powf(a) + c.abs().powf(b) - 1.0;
                assert!(r.abs() <= 1e-10, "({a},{b}) x={x}: {r}");
            }
        }
    }

    #[test]
    fn quarter_period_values() {
        for (a, b) in PAIRS {
            let p = TrigParams::new(a, b).unwrap();
            let q = p.quarter_period();
            assert_eq!(p.cos(q), 0.0);
            assert_eq!(p.cos(-q), 0.0);
            if b == 2.0 {
                assert!(p.cos(3.0 * q).abs() <= 1e-14);
            }
            assert_eq!(p.sin(q), 1.0);
            assert_eq!(p.sin(0.0), 0.0);
        }
    }

    #[test]
    fn round_trip_both_directions() {
        for (a, b) in PAIRS {
            let p = TrigParams::new(a, b).unwrap();
            let q = p.quarter_period();
            for i in 0..=4000 {
                let x = q * i as f64 / 4000.0;
                let y = p.sin(x);
                let back = p.forward(y).unwrap();
                // rounding y alone moves F by ulp(y) F'(y); F' is bounded by
                // about 1e4 on this grid when b = 2 but not for smaller b
                let slope = (1.0 - y.powf(a)).max(f64::MIN_POSITIVE).powf(-1.0 / b);
                let tol = if b == 2.0 { 1e-12 } else { 1e-12 + 4.0 * f64::EPSILON * slope };
                assert!((back - x).abs() <= tol, "({a},{b}) x={x}: {back}");
                let yy = i as f64 / 4000.0;
                let again = p.sin(p.forward(yy).unwrap());
                assert!((again - yy).abs() <= 1e-14, "({a},{b}) y={yy}: {again}");
            }
        }
    }

    #[test]
    fn eighth_period_value_for_four_two() {
        let p = TrigParams::new(4.0, 2.0).unwrap();
        let x = p.half_period() / 4.0;
        let y = p.sin(x);
        assert!((p.forward(y).unwrap() - x).abs() <= 1e-12);
    }

    #[test]
    fn symmetries() {
        for (a, b) in PAIRS {
            let p = TrigParams::new(a, b).unwrap();
            let h = p.half_period();
            for i in 0..200 {
                let x = -7.0 + 14.0 * i as f64 / 199.0;
                let (s, c) = p.sin_cos(x);
                let (s2, c2) = p.sin_cos(x + h);
                assert!((s2 + s).abs() <= 1e-12 && (c2 + c).abs() <= 1e-12, "shift {x}");
                let (s3, c3) = p.sin_cos(-x);
                assert!((s3 + s).abs() <= 1e-14 && (c3 - c).abs() <= 1e-14, "parity {x}");
                assert!((p.sin(h - x) - s).abs() <= 1e-12, "reflection {x}");
            }
        }
    }

    #[test]
    fn cos_is_derivative_of_sin() {
        for (a, b) in PAIRS {
            let p = TrigParams::new(a, b).unwrap();
            for i in 1..40 {
                let x = -3.0123 + 6.0 * i as f64 / 40.0;
                let h = 1e-5;
                let d = (p.sin(x + h) - p.sin(x - h)) / (2.0 * h);
                assert!((d - p.cos(x)).abs() <= 1e-7 * (1.0 + d.abs()), "({a},{b}) x={x}");
            }
        }
    }

    #[test]
    fn grushin_ode_residual_converges() {
        // sin_α'' = -α sin_α^{2α-1}; the central second difference error must
        // shrink with order close to 2
        for alpha in [1.0, 2.0, 3.0, 4.0, 8.0] {
            let p = TrigParams::grushin(alpha).unwrap();
            let resid = |h: f64| {
                let mut worst: f64 = 0.0;
                for i in 0..50 {
                    let x = 0.05 + 0.1 * i as f64;
                    let d2 = (p.sin(x + h) - 2.0 * p.sin(x) + p.sin(x - h)) / (h * h);
                    let rhs = -alpha * p.sin(x).powi(2 * alpha as i32 - 1);
                    worst = worst.max((d2 - rhs).abs());
                }
                worst
            };
            let (e1, e2) = (resid(1e-2), resid(5e-3));
            let order = (e1 / e2).log2();
            assert!(order >= 1.9, "alpha {alpha}: order {order}");
        }
    }

    #[test]
    fn taylor_expansion_of_cos() {
        // the remainder of 1 - x^{2α}/2 is O(x^{4α}), which is within
        // O(x^{2α+2}) for every α >= 1
        for alpha in [1.0, 2.0, 3.0, 4.0] {
            let p = TrigParams::grushin(alpha).unwrap();
            let err = |x: f64| (p.cos(x) - (1.0 - x.powf(2.0 * alpha) / 2.0)).abs();
            let x2 = 10f64.powf(-8.0 / (4.0 * alpha));
            let x1 = 2.0 * x2;
            let slope = (err(x1) / err(x2)).ln() / (x1 / x2).ln();
            assert!(slope >= 2.0 * alpha + 2.0 - 0.2, "alpha {alpha}: {slope}");
            assert!((slope - 4.0 * alpha).abs() <= 0.2, "alpha {alpha}: {slope}");
        }
    }

    #[test]
    fn eta_derivative_and_rho() {
        for beta in [1.0, 2.0, 3.0] {
            let p = TrigParams::grushin(beta).unwrap();
            for i in 0..50 {
                let x = -4.0 + 8.0 * i as f64 / 49.0;
                let h = 1e-5;
                let d = (eta_with(&p, x + h) - eta_with(&p, x - h)) / (2.0 * h);
                let want = (beta + 1.0) * p.sin(x).powi(2 * beta as i32);
                assert!((d - want).abs() <= 1e-8, "beta {beta} x {x}");
            }
            let h = p.half_period();
            assert!((eta_with(&p, 0.3 + h) - eta_with(&p, 0.3) - h).abs() <= 1e-13);
        }
        assert_eq!(rho(3.0, -2.0), -8.0);
        assert_eq!(rho(1.0, -0.5), -0.5);
        assert_eq!(rho(2.0, 0.0), 0.0);
    }

    #[test]
    fn garcsin_inverts() {
        for beta in [1.0, 2.0, 5.0] {
            let p = TrigParams::grushin(beta).unwrap();
            for i in 0..=40 {
                let y = -1.0 + i as f64 / 20.0;
                let x = garcsin(beta, y).unwrap();
                assert!((p.sin(x) - y).abs() <= 1e-14);
            }
        }
        assert!((garcsin(1.0, 0.5).unwrap() - 0.5f64.asin()).abs() <= 1e-14);
    }

    #[test]
    fn angle_recovers_quadrants() {
        for (a, b) in PAIRS {
            let p = TrigParams::new(a, b).unwrap();
            for i in 0..97 {
                let x = p.period() * i as f64 / 97.0;
                let (s, c) = p.sin_cos(x);
                let back = p.angle(s, c);
                assert!((back - x).abs() <= 1e-11, "({a},{b}) x={x} back={back}");
            }
        }
    }

    #[test]
    fn invalid_exponents_are_rejected() {
        assert!(TrigParams::new(0.5, 2.0).is_err());
        assert!(TrigParams::new(2.0, 1.0).is_err());
        assert!(forward(2.0, 2.0, 1.5).is_err());
    }
}
