//! Scalar root finding and adaptive quadrature used throughout the crate.

use crate::error::{Error, Result};

/// Refine a bracketed root of `f` by bisection, then polish with a few
/// secant steps. The bracket must satisfy `f(lo) * f(hi) <= 0`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return lo;
    }
    if fhi == 0.0 {
        return hi;
    }
    debug_assert!(flo * fhi <= 0.0, "bisect: root not bracketed");
    while (hi - lo).abs() > tol * (1.0 + lo.abs().max(hi.abs())) {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    // secant polish inside the final bracket
    let mut x0 = lo;
    let mut x1 = hi;
    let mut f0 = f(x0);
    let mut f1 = f(x1);
    for _ in 0..3 {
        if (f1 - f0).abs() < f64::MIN_POSITIVE {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        if !(lo..=hi).contains(&x2) {
            break;
        }
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f(x1);
    }
    if f1.abs() < f(0.5 * (lo + hi)).abs() {
        x1
    } else {
        0.5 * (lo + hi)
    }
}

/// Scan `f` on `n` uniform subdivisions of `[lo, hi]` and bisect every
/// sign change. Returns roots in ascending order.
pub fn scan_roots<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize, tol: f64) -> Vec<f64> {
    let mut roots = Vec::new();
    let step = (hi - lo) / n as f64;
    let mut x0 = lo;
    let mut f0 = f(x0);
    for i in 1..=n {
        let x1 = lo + step * i as f64;
        let f1 = f(x1);
        if f0 == 0.0 {
            roots.push(x0);
        } else if f0 * f1 < 0.0 {
            roots.push(bisect(&f, x0, x1, tol));
        }
        x0 = x1;
        f0 = f1;
    }
    if f0 == 0.0 {
        roots.push(x0);
    }
    roots.dedup_by(|a, b| (*a - *b).abs() < tol);
    roots
}

/// Golden-section minimization of a unimodal `f` on `[lo, hi]`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INVPHI * (hi - lo);
    let mut x2 = lo + INVPHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (hi - lo).abs() > tol {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INVPHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INVPHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let xm = 0.5 * (lo + hi);
    (xm, f(xm))
}

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let err = left + right - whole;
    if err.abs() <= 15.0 * tol {
        return Ok(left + right + err / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureFailure {
            tol,
            err: err.abs() / 15.0,
        });
    }
    Ok(
        adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?,
    )
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    // Pre-split at incommensurate fractions so periodic integrands cannot
    // alias the first Simpson error estimate to zero (e.g. cos(4k) on
    // [-pi, pi] is 1 at every dyadic subdivision point).
    const CUTS: [f64; 8] = [0.0, 0.137, 0.263, 0.3911, 0.5203, 0.6427, 0.7589, 1.0];
    let mut total = 0.0;
    for w in CUTS.windows(2) {
        let (pa, pb) = (a + (b - a) * w[0], a + (b - a) * w[1]);
        let fa = f(pa);
        let m = 0.5 * (pa + pb);
        let fm = f(m);
        let fb = f(pb);
        let whole = simpson(fa, fm, fb, pb - pa);
        total += adaptive_simpson_rec(&f, pa, pb, fa, fm, fb, whole, tol / 7.0, 48)?;
    }
    Ok(total)
}
