//! Bracketed scalar root finding.
//!
//! Everything here works on an interval `[a, b]` with a sign change (or a
//! monotone predicate that flips inside it). No derivative information is
//! used, which keeps the solvers robust near tangencies where Newton-type
//! steps stall.

use thiserror::Error;

/// Absolute tolerance on the abscissa used throughout the crate.
pub const ROOT_TOL: f64 = 1e-12;

const MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RootError {
    #[error("no sign change on [{a}, {b}] (f(a) = {fa}, f(b) = {fb})")]
    NoSignChange { a: f64, b: f64, fa: f64, fb: f64 },
    #[error("non-finite value f({x}) = {fx}")]
    NotFinite { x: f64, fx: f64 },
}

/// Brent's method (Dekker bisection / secant / inverse quadratic hybrid).
///
/// Returns an `x` with `|x - x*| <= tol` for some root `x*` in `[a, b]`.
/// An endpoint that is an exact zero is returned as-is.
pub fn brent<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64, RootError>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    check_finite(a, fa)?;
    check_finite(b, fb)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(RootError::NoSignChange { a, b, fa, fb });
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for _ in 0..MAX_ITER {
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
        let m = 0.5 * (c - b);
        if m.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }

        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }

        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(m) };
        fb = f(b);
        check_finite(b, fb)?;
    }
    Ok(b)
}

/// Plain bisection on a sign change. Slower than [`brent`] but its iterates
/// never leave the bracket, which some callers rely on.
pub fn bisect<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64, RootError>
where
    F: FnMut(f64) -> f64,
{
    let (mut lo, mut hi) = (a, b);
    let flo = f(lo);
    let fhi = f(hi);
    check_finite(lo, flo)?;
    check_finite(hi, fhi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(RootError::NoSignChange {
            a,
            b,
            fa: flo,
            fb: fhi,
        });
    }
    let lo_negative = flo < 0.0;
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= tol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid);
        check_finite(mid, fm)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Locates the switch point of a predicate that is `true` on `[lo, x*)` and
/// `false` on `(x*, hi]`. Returns the last abscissa known to satisfy it.
pub fn bisect_predicate<P>(mut pred: P, lo: f64, hi: f64, tol: f64) -> f64
where
    P: FnMut(f64) -> bool,
{
    let (mut good, mut bad) = (lo, hi);
    while (bad - good).abs() > tol {
        let mid = 0.5 * (good + bad);
        if mid == good || mid == bad {
            break;
        }
        if pred(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}

fn check_finite(x: f64, fx: f64) -> Result<(), RootError> {
    if fx.is_finite() {
        Ok(())
    } else {
        Err(RootError::NotFinite { x, fx })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_sqrt2() {
        let r = brent(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn brent_handles_flat_cubic_root() {
        // triple root: derivative-free solvers must still converge
        let r = brent(|x| (x - 0.3).powi(3), 0.0, 1.0, 1e-12).unwrap();
        assert!((r - 0.3).abs() < 1e-4);
        let r = bisect(|x| (x - 0.3).powi(3), 0.0, 1.0, 1e-12).unwrap();
        assert!((r - 0.3).abs() < 1e-11);
    }

    #[test]
    fn endpoint_roots_and_missing_brackets() {
        assert_eq!(brent(|x| x, 0.0, 1.0, 1e-12).unwrap(), 0.0);
        assert_eq!(bisect(|x| x - 1.0, 0.0, 1.0, 1e-12).unwrap(), 1.0);
        assert!(matches!(
            brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12),
            Err(RootError::NoSignChange { .. })
        ));
        assert!(matches!(
            bisect(|x| 1.0 / x, 0.0, 1.0, 1e-12),
            Err(RootError::NotFinite { .. })
        ));
    }

    #[test]
    fn predicate_switch() {
        let x = bisect_predicate(|x| x < 0.123456, 0.0, 1.0, 1e-12);
        assert!((x - 0.123456).abs() < 1e-11);
        assert!(x < 0.123456);
    }
}
