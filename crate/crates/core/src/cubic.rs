//! The cubic firing current and the line/cubic geometry built on it.
//!
//! An isolated cell obeys `dv/dt = F(v)` with `F(v) = v (v - v_T)(1 - v)`:
//! rest at 0, threshold at `v_T`, peak at `v_F = 1`. Gap-junction coupling
//! adds a straight line, so most questions in this crate reduce to "where
//! does a line cut, touch or clear the graph of `F`", and specifically its
//! *critical segment* `[v_min, v_i]` between the local minimum and the
//! inflection point, on which `F` is convex and `F'` increases from 0.
//!
//! The geometry is written against the [`Excitable`] trait so reduced ionic
//! currents with the same qualitative shape reuse it unchanged. [`CubicCell`]
//! implements the trait with closed forms.

use serde::{Deserialize, Serialize};

use crate::roots::{self, ROOT_TOL};
use crate::{Error, Result};

/// Gap below which a line counts as touching the critical segment.
pub const TANGENCY_TOL: f64 = 1e-12;

// Relative slack on `c` when testing for the collision at `F'(v_E)`.
const COLLISION_SLACK: f64 = 8.0 * f64::EPSILON;

/// Characteristic voltages of an excitable current, in increasing order:
/// `0 < v_min < v_t < v_i < v_e < v_max < v_f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmarks {
    /// Local minimum of `F` (bottom of the critical segment).
    pub v_min: f64,
    /// Threshold: the unstable zero of `F`.
    pub v_t: f64,
    /// Inflection point (top of the critical segment).
    pub v_i: f64,
    /// Where threshold and peak collide as the resting coupling grows;
    /// solves `F(v) = F'(v) v` above the inflection point.
    pub v_e: f64,
    /// Local maximum of `F`.
    pub v_max: f64,
    /// Peak: the upper stable zero of `F`.
    pub v_f: f64,
}

impl Landmarks {
    pub fn is_ordered(&self) -> bool {
        0.0 < self.v_min
            && self.v_min < self.v_t
            && self.v_t < self.v_i
            && self.v_i < self.v_e
            && self.v_e < self.v_max
            && self.v_max < self.v_f
    }
}

/// A straight line `y = slope * v + intercept` in the `(v, current)` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub slope: f64,
    pub intercept: f64,
}

impl Line {
    pub fn new(slope: f64, intercept: f64) -> Self {
        Line { slope, intercept }
    }

    pub fn through(x: f64, y: f64, slope: f64) -> Self {
        Line {
            slope,
            intercept: y - slope * x,
        }
    }

    /// The gap-junction line `G(v) = g(k+1) v - g v_u`.
    pub fn coupling(g: f64, k: f64, v_u: f64) -> Self {
        Line {
            slope: g * (k + 1.0),
            intercept: -g * v_u,
        }
    }

    #[inline]
    pub fn at(&self, v: f64) -> f64 {
        self.slope * v + self.intercept
    }
}

/// A line tangent to the critical segment at `touch`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tangency {
    pub touch: f64,
    pub line: Line,
}

/// A scalar firing current with the qualitative shape of the cubic: zeros at
/// `0 < v_t < v_f`, `F' < 0` on `(0, v_min)`, convex on the critical segment
/// and concave above `v_i`.
pub trait Excitable: Sync {
    fn current(&self, v: f64) -> f64;

    fn current_slope(&self, v: f64) -> f64;

    fn landmarks(&self) -> &Landmarks;

    /// The point `a` of the critical segment where `F'(a) = slope`, if
    /// `0 <= slope <= F'(v_i)`.
    fn segment_point_with_slope(&self, slope: f64) -> Option<f64> {
        let lm = self.landmarks();
        let lo = self.current_slope(lm.v_min);
        let hi = self.current_slope(lm.v_i);
        if !(lo..=hi).contains(&slope) {
            return None;
        }
        roots::bisect(
            |a| self.current_slope(a) - slope,
            lm.v_min,
            lm.v_i,
            ROOT_TOL,
        )
        .ok()
    }

    /// Positive solutions `(lower, upper)` of `F(v) = c v` with
    /// `lower in [v_t, v_e]` and `upper in [v_e, v_f]`; `None` once
    /// `c > F'(v_e)` and the two have annihilated.
    fn chord_roots(&self, c: f64) -> Option<(f64, f64)> {
        let lm = *self.landmarks();
        let ratio = |v: f64| self.current(v) / v - c;
        let peak = ratio(lm.v_e);
        if peak < -COLLISION_SLACK * c.abs() {
            return None;
        }
        if peak <= 0.0 {
            return Some((lm.v_e, lm.v_e));
        }
        let lower = if c <= 0.0 {
            lm.v_t
        } else {
            roots::brent(ratio, lm.v_t, lm.v_e, ROOT_TOL).ok()?
        };
        let upper = if c <= 0.0 {
            lm.v_f
        } else {
            roots::brent(ratio, lm.v_e, lm.v_f, ROOT_TOL).ok()?
        };
        Some((lower, upper))
    }
}

/// The cubic cell `F(v) = v (v - v_T)(1 - v)` with `0 < v_T < 1/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicCell {
    v_t: f64,
    landmarks: Landmarks,
}

impl CubicCell {
    pub fn new(v_t: f64) -> Result<Self> {
        if !(v_t > 0.0 && v_t < 0.5) {
            return Err(Error::InvalidParameter {
                name: "v_T",
                value: v_t,
                reason: "the threshold must satisfy 0 < v_T < 1/2 (closer to rest than to peak)",
            });
        }
        let s = 1.0 + v_t;
        let root = (s * s - 3.0 * v_t).sqrt();
        let landmarks = Landmarks {
            // smaller root written without cancellation
            v_min: v_t / (s + root),
            v_t,
            v_i: s / 3.0,
            v_e: s / 2.0,
            v_max: (s + root) / 3.0,
            v_f: 1.0,
        };
        Ok(CubicCell { v_t, landmarks })
    }

    pub fn threshold(&self) -> f64 {
        self.v_t
    }

    #[inline]
    pub fn f(&self, v: f64) -> f64 {
        v * (v - self.v_t) * (1.0 - v)
    }

    #[inline]
    pub fn f_prime(&self, v: f64) -> f64 {
        -3.0 * v * v + 2.0 * (1.0 + self.v_t) * v - self.v_t
    }

    #[inline]
    pub fn f_second(&self, v: f64) -> f64 {
        -6.0 * v + 2.0 * (1.0 + self.v_t)
    }
}

impl Excitable for CubicCell {
    #[inline]
    fn current(&self, v: f64) -> f64 {
        self.f(v)
    }

    #[inline]
    fn current_slope(&self, v: f64) -> f64 {
        self.f_prime(v)
    }

    fn landmarks(&self) -> &Landmarks {
        &self.landmarks
    }

    fn segment_point_with_slope(&self, slope: f64) -> Option<f64> {
        // -3a^2 + 2(1+v_T)a - (v_T + slope) = 0, smaller root
        let s = 1.0 + self.v_t;
        let disc = s * s - 3.0 * (self.v_t + slope);
        if slope < 0.0 || disc < 0.0 {
            return None;
        }
        Some((self.v_t + slope) / (s + disc.sqrt()))
    }

    fn chord_roots(&self, c: f64) -> Option<(f64, f64)> {
        // F(v) = c v  <=>  v^2 - (1+v_T) v + (v_T + c) = 0
        let s = 1.0 + self.v_t;
        let disc = (1.0 - self.v_t).powi(2) - 4.0 * c;
        if disc < -COLLISION_SLACK * c.abs() {
            return None;
        }
        let root = disc.max(0.0).sqrt();
        let upper = 0.5 * (s + root);
        let lower = (self.v_t + c) / upper;
        Some((lower, upper))
    }
}

/// Minimum of `F(v) - line(v)` over the critical segment `[v_min, v_i]`.
///
/// `F - line` is convex there, so the minimum sits where `F' = slope` or at
/// an endpoint.
pub fn segment_gap<C: Excitable + ?Sized>(cell: &C, line: &Line) -> f64 {
    let lm = cell.landmarks();
    let at = match cell.segment_point_with_slope(line.slope) {
        Some(a) => a,
        None if line.slope <= cell.current_slope(lm.v_min) => lm.v_min,
        None => lm.v_i,
    };
    cell.current(at) - line.at(at)
}

/// `true` iff the line stays strictly below the critical segment; a gap of
/// at most [`TANGENCY_TOL`] counts as touching and therefore not below.
pub fn line_below_critical_segment<C: Excitable + ?Sized>(cell: &C, line: &Line) -> bool {
    segment_gap(cell, line) > TANGENCY_TOL
}

/// Non-strict variant: below the critical segment or touching it tangentially.
pub fn line_below_or_touching<C: Excitable + ?Sized>(cell: &C, line: &Line, tol: f64) -> bool {
    segment_gap(cell, line) >= -tol
}

/// The tangent to the critical segment passing through `(px, py)`.
///
/// For a point inside the segment's voltage range two tangents may exist;
/// the left one (smaller slope) is preferred. Returns `None` when no tangent
/// through the point touches the segment.
pub fn tangent_through_point<C: Excitable + ?Sized>(
    cell: &C,
    px: f64,
    py: f64,
) -> Option<Tangency> {
    let lm = *cell.landmarks();
    let miss = |a: f64| cell.current(a) + cell.current_slope(a) * (px - a) - py;
    // miss'(a) = F''(a)(px - a) with F'' >= 0 on the segment
    let touch = if px <= lm.v_min || px >= lm.v_i {
        bracketed(&miss, lm.v_min, lm.v_i)?
    } else {
        bracketed(&miss, lm.v_min, px).or_else(|| bracketed(&miss, px, lm.v_i))?
    };
    Some(Tangency {
        touch,
        line: Line::through(touch, cell.current(touch), cell.current_slope(touch)),
    })
}

fn bracketed(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Option<f64> {
    let (fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    roots::brent(f, a, b, ROOT_TOL).ok()
}

/// Smallest non-negative equilibrium of `dv/dt = F(v) - g(k+1) v + g v_u`,
/// i.e. where the voltage settles when started from rest.
///
/// Requires `g > 0`, `k >= 0`, `0 <= v_u <= v_f`. Returns NaN only if the
/// current is not finite on the search bracket.
pub fn smallest_equilibrium<C: Excitable + ?Sized>(cell: &C, g: f64, k: f64, v_u: f64) -> f64 {
    debug_assert!(g > 0.0 && k >= 0.0 && v_u >= 0.0);
    if v_u <= 0.0 {
        return 0.0;
    }
    let line = Line::coupling(g, k, v_u);
    let h = |v: f64| cell.current(v) - line.at(v);
    let lm = *cell.landmarks();

    // Lower branch: h decreases on [0, a] where F'(a) = slope; a root there
    // exists iff the line cuts the critical segment.
    let mut from = 0.0;
    if let Some(a) = cell.segment_point_with_slope(line.slope) {
        let ha = h(a);
        if ha <= 0.0 {
            if ha == 0.0 {
                return a;
            }
            return roots::brent(h, 0.0, a, ROOT_TOL).unwrap_or(f64::NAN);
        }
        from = lm.v_i.max(a);
    }

    // Upper branch: h > 0 up to `from` and concave beyond it.
    let mut to = lm.v_f;
    let mut step = (lm.v_f - from).max(0.25 * lm.v_f);
    let mut tries = 0;
    while h(to) > 0.0 {
        from = to;
        to += step;
        step *= 2.0;
        tries += 1;
        if tries > 64 || !to.is_finite() {
            return f64::NAN;
        }
    }
    roots::brent(h, from, to, ROOT_TOL).unwrap_or(f64::NAN)
}
