//! Brute-force numeric oracles that avoid the crate's closed forms and root
//! finders: plain bisection, central differences, golden-section search and
//! dense scans.

#![allow(dead_code)]

pub fn cubic(v_t: f64) -> impl Fn(f64) -> f64 + Copy {
    move |v| v * (v - v_t) * (1.0 - v)
}

/// Central difference, step `1e-5`.
pub fn deriv(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-5;
    (f(x + h) - f(x - h)) / (2.0 * h)
}

pub fn deriv2(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-2;
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}

/// Bisection to machine resolution; panics without a sign change.
pub fn bisect(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = (a, b);
    let flo = f(lo);
    assert!(flo * f(hi) <= 0.0, "no sign change on [{a}, {b}]");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if (f(mid) < 0.0) == (flo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Maximum value of a unimodal `f` on `[a, b]` by golden-section search.
pub fn golden_max(f: impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        if (b - a).abs() < 1e-15 {
            break;
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

pub fn golden_min(f: impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let (x, y) = golden_max(|v| -f(v), a, b);
    (x, -y)
}

#[derive(Debug, Clone, Copy)]
pub struct OracleLandmarks {
    pub v_min: f64,
    pub v_i: f64,
    pub v_e: f64,
    pub v_max: f64,
}

/// Landmarks of the cubic as roots of numeric derivatives.
pub fn landmarks(v_t: f64) -> OracleLandmarks {
    let f = cubic(v_t);
    let d1 = |v: f64| deriv(f, v);
    let v_min = bisect(d1, 0.0, v_t);
    let v_max = bisect(d1, v_t, 1.0);
    let v_i = bisect(|v| deriv2(f, v), v_min, v_max);
    let v_e = bisect(|v| f(v) - deriv(f, v) * v, v_i, 1.0);
    OracleLandmarks {
        v_min,
        v_i,
        v_e,
        v_max,
    }
}

/// Smallest `g` with firing at `k = 0`: the line `g (v - V_u)` must pass below
/// the critical segment, i.e. `g > F(v) / (v - V_u)` there.
pub fn g_min(v_t: f64, v_u: f64) -> f64 {
    let f = cubic(v_t);
    let lm = landmarks(v_t);
    golden_max(|v| f(v) / (v - v_u), lm.v_min, lm.v_i).1
}

/// Steepest slope on the critical segment.
pub fn g_max(v_t: f64) -> f64 {
    let f = cubic(v_t);
    let lm = landmarks(v_t);
    golden_max(|v| deriv(f, v), lm.v_min, lm.v_max).1
}

/// Tangency point of the line through `(0, -g V_u)`, for the parametrised
/// boundary `k + 1 = F'(a) V_u / (F'(a) a - F(a))`.
pub fn boundary_k(v_t: f64, v_u: f64, a: f64) -> (f64, f64) {
    let f = cubic(v_t);
    let slope = deriv(f, a);
    let g = (slope * a - f(a)) / v_u;
    (g, slope / g - 1.0)
}

/// `(g_peak, k_peak)` by root-finding `dk/da = 0` along the tangency boundary.
pub fn peak(v_t: f64, v_u: f64) -> (f64, f64) {
    let lm = landmarks(v_t);
    let dk = |a: f64| {
        let h = 1e-6;
        (boundary_k(v_t, v_u, a + h).1 - boundary_k(v_t, v_u, a - h).1) / (2.0 * h)
    };
    let a = bisect(dk, lm.v_min + 1e-3, lm.v_i - 1e-3);
    boundary_k(v_t, v_u, a)
}

/// `g` at which the tangency point reaches the inflection point.
pub fn g_star(v_t: f64, v_u: f64) -> f64 {
    let lm = landmarks(v_t);
    boundary_k(v_t, v_u, lm.v_i).0
}

/// Minimum of `F - line` over the critical segment.
pub fn segment_gap(v_t: f64, slope: f64, intercept: f64) -> f64 {
    let f = cubic(v_t);
    let lm = landmarks(v_t);
    golden_min(|v| f(v) - slope * v - intercept, lm.v_min, lm.v_i).1
}

/// Firing by brute force: below the segment and flatter than `F'(v_i)`.
pub fn fires(v_t: f64, g: f64, k: f64, v_u: f64) -> bool {
    let slope = g * (k + 1.0);
    slope < g_max(v_t) && segment_gap(v_t, slope, -g * v_u) > 0.0
}

/// Largest `k` with firing, by bisection on the brute-force predicate.
pub fn k_max(v_t: f64, v_u: f64, g: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1e3);
    assert!(fires(v_t, g, 0.0, v_u));
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if fires(v_t, g, mid, v_u) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// First zero of `F(v) - g (k+1) v + g v_u` above 0, from a dense upward scan.
pub fn v_infinity(f: impl Fn(f64) -> f64, g: f64, k: f64, v_u: f64) -> f64 {
    let h = |v: f64| f(v) - g * (k + 1.0) * v + g * v_u;
    if h(0.0) == 0.0 {
        return 0.0;
    }
    let n = 200_000;
    let top = 2.0;
    let mut prev = 0.0;
    for i in 1..=n {
        let v = top * i as f64 / n as f64;
        if h(v) <= 0.0 {
            return bisect(h, prev, v);
        }
        prev = v;
    }
    panic!("no equilibrium below {top}")
}

/// Upper positive root of `F(v) = c v`.
pub fn v_plus(v_t: f64, c: f64) -> Option<f64> {
    let f = cubic(v_t);
    let r = |v: f64| f(v) / v - c;
    let lm = landmarks(v_t);
    (r(lm.v_e) >= 0.0).then(|| bisect(r, lm.v_e, 1.0 + 1e-9))
}

/// Persistence by brute force: the line through `(v_+, F(v_+))` with slope
/// `g(k+1)` clears or touches the critical segment.
pub fn persists(v_t: f64, g: f64, k: f64) -> bool {
    match v_plus(v_t, g * k) {
        None => false,
        Some(vp) => segment_gap(v_t, g * (k + 1.0), -g * vp) >= -1e-12,
    }
}

/// The bounded root of `k a^2 - (k + beta) a + 1 = 0`, written naively.
pub fn alpha(g: f64, k: f64, g_l: f64) -> f64 {
    let beta = 1.0 + g_l / g;
    if k == 0.0 {
        return 1.0 / beta;
    }
    let s = k + beta;
    (s - (s * s - 4.0 * k).sqrt()) / (2.0 * k)
}

/// Solves `k (1 - alpha(g, k, g_L)) = k0` for `k` by bisection.
pub fn adjusted(k0: f64, g: f64, g_l: f64) -> f64 {
    let f = |k: f64| k * (1.0 - alpha(g, k, g_l)) - k0;
    let mut hi = k0.max(1.0);
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    bisect(f, k0, hi)
}

/// Relative-or-absolute closeness.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}
