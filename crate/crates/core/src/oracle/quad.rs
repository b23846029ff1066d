//! Quadrature used as an independent reference for the closed forms.

/// Tanh-sinh quadrature of `f` over `[a, b]`.
///
/// `f` receives the node `t` and its distance to the right endpoint `b - t`,
/// computed without cancellation, so integrands with a singularity at `b`
/// can be evaluated accurately right up to the endpoint.
pub fn tanh_sinh<F: Fn(f64, f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    if half == 0.0 {
        return 0.0;
    }
    let pi2 = std::f64::consts::FRAC_PI_2;
    let u_max = 4.5;
    let eval = |u: f64| -> f64 {
        let s = pi2 * u.sinh();
        let w = pi2 * u.cosh() / s.cosh().powi(2);
        // distances to the two endpoints in closed form
        let dr = (b - a) / (1.0 + (2.0 * s).exp());
        let dl = (b - a) / (1.0 + (-2.0 * s).exp());
        if dr <= 0.0 || dl <= 0.0 || w == 0.0 {
            return 0.0;
        }
        let t = if dl < dr { a + dl } else { b - dr };
        let v = f(t, dr);
        if v.is_finite() {
            half * w * v
        } else {
            0.0
        }
    };
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    loop {
        let u = k as f64 * h;
        if u > u_max {
            break;
        }
        sum += eval(u) + eval(-u);
        k += 1;
    }
    let mut estimate = sum * h;
    for _ in 0..8 {
        h *= 0.5;
        let mut k = 1;
        loop {
            let u = k as f64 * h;
            if u > u_max {
                break;
            }
            sum += eval(u) + eval(-u);
            k += 2;
        }
        let next = sum * h;
        let done = (next - estimate).abs() <= 1e-15 * next.abs().max(1e-300);
        estimate = next;
        if done && h < 0.1 {
            break;
        }
    }
    estimate
}

const GK_X: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const GK_WK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const GK_WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = GK_WK[7] * fc;
    let mut g = GK_WG[3] * fc;
    for i in 0..7 {
        let x = h * GK_X[i];
        let s = f(c - x) + f(c + x);
        k += GK_WK[i] * s;
        if i % 2 == 1 {
            g += GK_WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod (7/15) quadrature for smooth integrands.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, whole: (f64, f64), depth: u32) -> f64 {
        let (v, err) = whole;
        if err <= tol || depth >= 40 {
            return v;
        }
        let m = 0.5 * (a + b);
        let left = gk15(f, a, m);
        let right = gk15(f, m, b);
        rec(f, a, m, 0.5 * tol, left, depth + 1) + rec(f, m, b, 0.5 * tol, right, depth + 1)
    }
    let whole = gk15(&f, a, b);
    rec(&f, a, b, tol, whole, 0)
}

/// Nodes and weights of the 16-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre_16() -> &'static ([f64; 16], [f64; 16]) {
    static RULE: std::sync::OnceLock<([f64; 16], [f64; 16])> = std::sync::OnceLock::new();
    RULE.get_or_init(|| {
        let n = 16;
        let mut x = [0.0; 16];
        let mut w = [0.0; 16];
        for i in 0..n {
            // Newton on P_n from the Chebyshev-like initial guess
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            x[i] = z;
            w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
        (x, w)
    })
}

/// Composite 16-point Gauss-Legendre over `panels` equal pieces of `[a, b]`.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let (x, w) = gauss_legendre_16();
    let h = (b - a) / panels.max(1) as f64;
    let mut sum = 0.0;
    for p in 0..panels.max(1) {
        let c = a + h * (p as f64 + 0.5);
        sum += 0.5 * h * x.iter().zip(w).map(|(xi, wi)| wi * f(c + 0.5 * h * xi)).sum::<f64>();
    }
    sum
}
