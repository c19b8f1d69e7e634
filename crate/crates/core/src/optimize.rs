//! Scalar minimization helpers: a quadratic root solver and a bracketed
//! golden-section search used as the fallback path and by the profile
//! likelihood route.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Unique positive root of `a x² + b x − c = 0` for `a > 0`, `c > 0`.
///
/// The product of the roots is `−c/a < 0`, so exactly one root is positive.
/// The form is chosen to avoid cancellation for either sign of `b`.
pub fn positive_root<T: Real>(a: T, b: T, c: T) -> Option<T> {
    if !(a > T::zero()) || !(c > T::zero()) || !b.is_finite() {
        return None;
    }
    let disc = (b * b + T::of(4.0) * a * c).sqrt();
    let x = if b >= T::zero() {
        T::of(2.0) * c / (b + disc)
    } else {
        (disc - b) / (T::of(2.0) * a)
    };
    (x > T::zero() && x.is_finite()).then_some(x)
}

/// Outcome of a one-dimensional minimization.
#[derive(Debug, Clone, Copy)]
pub struct Minimum<T> {
    pub x: T,
    pub value: T,
    pub iterations: usize,
}

/// Golden-section search on `[lo, hi]`. Converges when the bracket is below
/// `rel_tol·(|x| + 1)`.
pub fn golden_section<T: Real>(
    mut f: impl FnMut(T) -> T,
    lo: T,
    hi: T,
    rel_tol: T,
    max_iter: usize,
) -> Result<Minimum<T>> {
    let inv_phi = T::of((5f64.sqrt() - 1.0) / 2.0);
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for it in 0..max_iter {
        let mid = (a + b) * T::of(0.5);
        if (b - a).abs() <= rel_tol * (mid.abs() + T::one()) {
            let (x, value) = if fc <= fd { (c, fc) } else { (d, fd) };
            return Ok(Minimum {
                x,
                value,
                iterations: it,
            });
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
    })
}

/// Expands `[start − step, start + step]` geometrically until it brackets a
/// minimum of a unimodal `f`, returning the bracket.
pub fn bracket_minimum<T: Real>(
    mut f: impl FnMut(T) -> T,
    start: T,
    step: T,
    max_expansions: usize,
) -> Result<(T, T)> {
    let grow = T::of(1.618_033_988_75);
    let mut a = start;
    let mut fa = f(a);
    let mut b = start + step;
    let mut fb = f(b);
    if fb > fa {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    // Now f(b) <= f(a): walk from a through b downhill.
    let mut c = b + grow * (b - a);
    let mut fc = f(c);
    for _ in 0..max_expansions {
        if fc >= fb {
            return Ok(if a < c { (a, c) } else { (c, a) });
        }
        a = b;
        b = c;
        fb = fc;
        c = b + grow * (b - a);
        fc = f(c);
    }
    Err(Error::NoConvergence {
        iterations: max_expansions,
    })
}

/// Minimizes a unimodal function over the whole real line.
pub fn minimize_unbounded<T: Real>(
    mut f: impl FnMut(T) -> T,
    start: T,
    step: T,
) -> Result<Minimum<T>> {
    let (lo, hi) = bracket_minimum(&mut f, start, step, 200)?;
    golden_section(f, lo, hi, T::epsilon().sqrt(), 400)
}
