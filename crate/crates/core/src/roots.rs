//! Small bracketed root finders shared by the numerical modules.

/// Brent's method on `[a, b]`; `f(a)` and `f(b)` must not share a sign.
/// Returns `None` when the bracket is invalid.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Option<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return None;
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Some(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Some(b)
}

/// Newton iteration for an increasing function on `[lo, hi]`, falling back to
/// bisection whenever a step leaves the current bracket.
pub fn newton_increasing<F>(mut f: F, target: f64, mut lo: f64, mut hi: f64, x0: f64, tol: f64) -> f64
where
    F: FnMut(f64) -> (f64, f64),
{
    let mut x = x0.clamp(lo, hi);
    for _ in 0..100 {
        let (v, dv) = f(x);
        let r = v - target;
        if r == 0.0 {
            return x;
        }
        if r > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let mut next = x - r / dv;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        if step <= tol * (1.0 + x.abs()) || hi - lo <= tol * (1.0 + x.abs()) {
            // one more polishing step is cheap and sharpens the last digit
            let (v, dv) = f(x);
            let polished = x - (v - target) / dv;
            if polished >= lo && polished <= hi && polished.is_finite() {
                x = polished;
            }
            return x;
        }
    }
    x
}

/// Smallest `t >= 0` with `g(t) >= target` for a nondecreasing `g`, found by
/// doubling from `guess` and then Brent. Returns `None` if `g` stays below the
/// target up to `t_cap`.
pub fn invert_nondecreasing<G: FnMut(f64) -> f64>(
    mut g: G,
    target: f64,
    guess: f64,
    t_cap: f64,
    tol: f64,
) -> Option<f64> {
    if target <= 0.0 {
        return Some(0.0);
    }
    let mut lo = 0.0;
    let mut hi = if guess.is_finite() && guess > 0.0 { guess } else { 1.0 };
    loop {
        if g(hi) >= target {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > t_cap {
            if g(t_cap) >= target {
                hi = t_cap;
                break;
            }
            return None;
        }
    }
    brent(|t| g(t) - target, lo, hi, tol)
}
