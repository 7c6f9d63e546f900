//! Derivative-free one-dimensional maximisation.

use crate::error::{Error, Result};

/// 1/φ, the fraction by which each golden-section step shrinks the bracket.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
///
/// Stops when the bracket width falls below `rel_tol * max(|x|, tiny)` or
/// after `max_iter` iterations. The endpoints are also compared with the
/// interior estimate so a boundary maximum is returned as the boundary.
pub fn golden_section_max<F>(f: F, lo: f64, hi: f64, rel_tol: f64, max_iter: usize) -> Maximum
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while iterations < max_iter {
        let scale = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        if (b - a) <= rel_tol * scale {
            break;
        }
        iterations += 1;
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let mut best = Maximum {
        x,
        value: f(x),
        iterations,
    };
    for edge in [lo, hi] {
        let v = f(edge);
        if v > best.value {
            best = Maximum {
                x: edge,
                value: v,
                iterations,
            };
        }
    }
    best
}

/// Brackets the maximiser of a function on `(0, inf)` given its derivative.
///
/// Starting from `start`, the upper end doubles until the derivative turns
/// negative and the lower end halves until it is positive. Returns a bracket
/// `[lo, hi]` with `d(lo) > 0 > d(hi)`.
pub fn bracket_by_derivative<D>(derivative: D, start: f64) -> Result<(f64, f64)>
where
    D: Fn(f64) -> f64,
{
    const MAX_DOUBLINGS: usize = 1100;
    if !(start > 0.0 && start.is_finite()) {
        return Err(Error::domain(format!("bracket start must be > 0, got {start}")));
    }
    let mut lo = start;
    let mut hi = start;
    if derivative(start) > 0.0 {
        for _ in 0..MAX_DOUBLINGS {
            let next = hi * 2.0;
            if !next.is_finite() {
                break;
            }
            if derivative(next) < 0.0 {
                return Ok((hi, next));
            }
            hi = next;
        }
        Err(Error::BracketFailure(format!(
            "derivative stays non-negative up to {hi:e}; no interior maximum"
        )))
    } else {
        for _ in 0..MAX_DOUBLINGS {
            let next = lo * 0.5;
            if next == 0.0 {
                break;
            }
            if derivative(next) > 0.0 {
                return Ok((next, lo));
            }
            lo = next;
        }
        Err(Error::BracketFailure(format!(
            "derivative stays non-positive down to {lo:e}; no interior maximum"
        )))
    }
}
