//! Discrete gradient of the potential and the per-node implicit solve.
//!
//! The conservative update at an interior node solves
//!
//! ```text
//! w + dt^2 G(w, b) = c,   G(a, b) = (F(a) - F(b)) / (a - b),  G(a, a) = F'(a)
//! ```
//!
//! with `b` the field one step back and `c = 2 phi^n - phi^{n-1} + dt^2 D2 phi^n`.
//! `F` is convex, so `G(., b)` is nondecreasing and the left side is strictly
//! increasing in `w`: the root is unique.

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Switch to the midpoint form when `|a - b| < MIDPOINT_SWITCH (|a| + |b| + 1)`.
pub const MIDPOINT_SWITCH: f64 = 1e-8;

/// Newton iterations tried before falling back to a bracketed search.
const NEWTON_TRIES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum DiscreteGradient {
    Off,
    /// `p + 1 = m` even: `G` is the polynomial `sum_k a^k b^{m-1-k} / m`,
    /// free of cancellation.
    EvenPower(i32),
    General(ModelParams),
}

impl DiscreteGradient {
    pub fn new(params: &ModelParams) -> Self {
        if !params.nonlinearity_enabled {
            return DiscreteGradient::Off;
        }
        let m = params.p + 1.0;
        if m == m.trunc() && (m as i64) % 2 == 0 && m < 64.0 {
            DiscreteGradient::EvenPower(m as i32)
        } else {
            DiscreteGradient::General(*params)
        }
    }

    /// `(G(a, b), dG/da (a, b))`.
    #[inline]
    pub fn eval(&self, a: f64, b: f64) -> (f64, f64) {
        match *self {
            DiscreteGradient::Off => (0.0, 0.0),
            DiscreteGradient::EvenPower(4) => {
                let (a2, b2) = (a * a, b * b);
                let g = (a + b) * (a2 + b2) * 0.25;
                let dg = (3.0 * a2 + 2.0 * a * b + b2) * 0.25;
                (g, dg)
            }
            DiscreteGradient::EvenPower(m) => {
                // Horner in a with coefficients b^{m-1-k}
                let mut g = 0.0;
                let mut dg = 0.0;
                let mut bp = 1.0;
                let mut powers = [0.0f64; 64];
                for k in (0..m as usize).rev() {
                    powers[k] = bp;
                    bp *= b;
                }
                for k in (0..m as usize).rev() {
                    dg = dg * a + g;
                    g = g * a + powers[k];
                }
                let inv = 1.0 / m as f64;
                (g * inv, dg * inv)
            }
            DiscreteGradient::General(params) => {
                let diff = a - b;
                if diff.abs() < MIDPOINT_SWITCH * (a.abs() + b.abs() + 1.0) {
                    let mid = 0.5 * (a + b);
                    let g = params.force(mid);
                    // half of F''(mid) = p |mid|^{p-1}
                    let dg = if mid == 0.0 {
                        0.0
                    } else {
                        0.5 * params.p * g / mid
                    };
                    (g, dg)
                } else {
                    let g = (params.potential(a) - params.potential(b)) / diff;
                    let dg = (params.force(a) - g) / diff;
                    (g, dg)
                }
            }
        }
    }
}

/// Solves `w + dt2 G(w, b) = c` for `w`.
///
/// Newton from the free-wave prediction `w = c`, with the sign of every
/// residual recorded as a bracket; if Newton leaves the bracket or has not
/// converged after a few tries, an expanding bracket plus bisection finishes
/// the job. Returns the root and the iteration count.
pub(crate) fn solve_node(
    dg: &DiscreteGradient,
    c: f64,
    b: f64,
    dt2: f64,
    tol: f64,
    max_iter: usize,
    node: usize,
) -> Result<(f64, usize)> {
    if let DiscreteGradient::Off = dg {
        return Ok((c, 0));
    }
    let resid = |w: f64| {
        let (g, d) = dg.eval(w, b);
        (w + dt2 * g - c, 1.0 + dt2 * d)
    };
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut w = c;
    let mut last_f = f64::NAN;
    let mut iters = 0;
    while iters < max_iter.min(NEWTON_TRIES) {
        iters += 1;
        let (f, df) = resid(w);
        last_f = f;
        if f == 0.0 {
            return Ok((w, iters));
        }
        if f > 0.0 {
            hi = hi.min(w);
        } else {
            lo = lo.max(w);
        }
        let next = w - f / df;
        if !next.is_finite() || next <= lo || next >= hi {
            break;
        }
        let step = (next - w).abs();
        w = next;
        if step <= tol * w.abs() || step == 0.0 {
            return Ok((w, iters));
        }
    }

    // Bracketed fallback. f(w) - (w - c) = dt2 G(w, b) is bounded by
    // dt2 max(|w|, |b|)^p, so expanding around c terminates.
    let mut width = dt2 * (c.abs() + b.abs() + 1.0);
    if !lo.is_finite() || !hi.is_finite() {
        loop {
            if !lo.is_finite() && resid(c - width).0 <= 0.0 {
                lo = c - width;
            }
            if !hi.is_finite() && resid(c + width).0 >= 0.0 {
                hi = c + width;
            }
            if lo.is_finite() && hi.is_finite() {
                break;
            }
            width *= 2.0;
            if !width.is_finite() {
                return Err(Error::RootSolve {
                    node,
                    residual: last_f,
                    iterations: iters,
                });
            }
        }
    }
    while iters < max_iter {
        iters += 1;
        let mid = 0.5 * (lo + hi);
        let (f, _) = resid(mid);
        last_f = f;
        if f == 0.0 || hi - lo <= tol * mid.abs() || mid <= lo || mid >= hi {
            return Ok((mid, iters));
        }
        if f > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::RootSolve {
        node,
        residual: last_f,
        iterations: iters,
    })
}
