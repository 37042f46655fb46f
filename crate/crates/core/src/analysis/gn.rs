use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weights of the half-line inequality
/// `(t+a2)^(mu1+mu2) |g(t)|^(p+3) <= C int (s+a2)^mu2 |g|^(p+1) ds int (s+a2)^mu1 |g'|^2 ds`
/// for `t >= a1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GNParams {
    pub a1: f64,
    pub a2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub p: f64,
}

impl GNParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a1 >= 0.0) {
            return Err(Error::param("a1", "must be >= 0"));
        }
        if !(self.a2 >= 1.0) {
            return Err(Error::param("a2", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.mu1) {
            return Err(Error::param("mu1", "must lie in [0, 1]"));
        }
        if !(self.mu2 >= -self.mu1) {
            return Err(Error::param("mu2", "must be >= -mu1"));
        }
        if !(self.p > 1.0) {
            return Err(Error::param("p", "must be > 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnCheck {
    /// `max_t (t+a2)^(mu1+mu2) |g(t)|^(p+3)`.
    pub max_lhs: f64,
    /// Time of the maximum.
    pub t_max: f64,
    /// Product of the two truncated integrals.
    pub rhs: f64,
    /// `max_lhs / rhs`; zero when both vanish.
    pub implied_constant: f64,
}

/// Constant the half-line inequality holds with: `((p+3)/2)^2`.
pub fn lemma_gn_bound(p: f64) -> f64 {
    ((p + 3.0) / 2.0).powi(2)
}

/// Constant of `||f||_inf^(p+3) <= C int |f|^(p+1) int |f'|^2` on the line,
/// `((p+3)/4)^2`.
pub fn classical_gn_bound(p: f64) -> f64 {
    ((p + 3.0) / 4.0).powi(2)
}

/// Evaluates both sides on uniform samples `(times, g)`. `dg` supplies `g'`;
/// without it centered differences are used. Samples before `a1` are ignored.
pub fn gn_check(times: &[f64], g: &[f64], dg: Option<&[f64]>, gnp: &GNParams) -> Result<GnCheck> {
    gnp.validate()?;
    if times.len() != g.len() || dg.is_some_and(|d| d.len() != g.len()) {
        return Err(Error::LengthMismatch {
            expected: times.len(),
            got: g.len(),
        });
    }
    let start = times
        .iter()
        .position(|&t| t >= gnp.a1 - 1e-12)
        .unwrap_or(times.len());
    let (ts, gs) = (&times[start..], &g[start..]);
    if ts.len() < 3 {
        return Err(Error::ShortHistory(format!(
            "{} samples on [a1, T], need 3",
            ts.len()
        )));
    }
    let h = ts[1] - ts[0];
    if !(h > 0.0) || ts.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-6 * h) {
        return Err(Error::param(
            "samples",
            "times must be uniformly spaced and increasing",
        ));
    }
    let deriv: Vec<f64> = match dg {
        Some(d) => d[start..].to_vec(),
        None => {
            let m = gs.len();
            (0..m)
                .map(|k| match k {
                    0 => (gs[1] - gs[0]) / h,
                    k if k == m - 1 => (gs[k] - gs[k - 1]) / h,
                    k => (gs[k + 1] - gs[k - 1]) / (2.0 * h),
                })
                .collect()
        }
    };
    let p = gnp.p;
    let w = |t: f64, mu: f64| (t + gnp.a2).powf(mu);
    let (mut max_lhs, mut t_max) = (0.0f64, ts[0]);
    for (&t, &v) in ts.iter().zip(gs) {
        let lhs = w(t, gnp.mu1 + gnp.mu2) * v.abs().powf(p + 3.0);
        if lhs > max_lhs {
            max_lhs = lhs;
            t_max = t;
        }
    }
    let trap = |f: &dyn Fn(usize) -> f64| {
        let m = ts.len();
        let inner: f64 = (1..m - 1).map(f).sum();
        h * (inner + 0.5 * (f(0) + f(m - 1)))
    };
    let i1 = trap(&|k| w(ts[k], gnp.mu2) * gs[k].abs().powf(p + 1.0));
    let i2 = trap(&|k| w(ts[k], gnp.mu1) * deriv[k] * deriv[k]);
    let rhs = i1 * i2;
    let implied_constant = if rhs > 0.0 {
        max_lhs / rhs
    } else if max_lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(GnCheck {
        max_lhs,
        t_max,
        rhs,
        implied_constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classical(p: f64) -> GNParams {
        GNParams {
            a1: 0.0,
            a2: 1.0,
            mu1: 0.0,
            mu2: 0.0,
            p,
        }
    }

    fn samples(h: f64, f: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
        let n = (30.0 / h).round() as usize;
        let ts: Vec<f64> = (0..=n).map(|k| k as f64 * h).collect();
        let gs = ts.iter().map(|&t| f(t)).collect();
        (ts, gs)
    }

    #[test]
    fn zero_function() {
        let (ts, gs) = samples(0.1, |_| 0.0);
        let r = gn_check(&ts, &gs, None, &classical(3.0)).unwrap();
        assert_eq!((r.max_lhs, r.rhs, r.implied_constant), (0.0, 0.0, 0.0));
    }

    #[test]
    fn hypotheses_enforced() {
        let (ts, gs) = samples(0.1, |t| (-t).exp());
        for bad in [
            GNParams {
                a1: -1.0,
                ..classical(3.0)
            },
            GNParams {
                a2: 0.5,
                ..classical(3.0)
            },
            GNParams {
                mu1: 1.5,
                ..classical(3.0)
            },
            GNParams {
                mu1: 0.5,
                mu2: -0.6,
                ..classical(3.0)
            },
            GNParams {
                p: 1.0,
                ..classical(3.0)
            },
        ] {
            assert!(gn_check(&ts, &gs, None, &bad).is_err());
        }
    }

    #[test]
    fn gaussian_constant_is_refinement_stable() {
        let g = |t: f64| (-(t - 5.0) * (t - 5.0) / 2.0).exp();
        let consts: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&h| {
                let (ts, gs) = samples(h, g);
                gn_check(&ts, &gs, None, &classical(3.0))
                    .unwrap()
                    .implied_constant
            })
            .collect();
        assert!(consts.iter().all(|c| c.is_finite() && *c > 0.0));
        assert!((consts[0] / consts[2] - 1.0).abs() < 0.1);
        assert!(consts[2] <= lemma_gn_bound(3.0));
        // independent quadrature: max g = 1, int g^4 = sqrt(pi/2)... on the
        // whole line the product is sqrt(pi)/2 * sqrt(pi/2)
        let pi = std::f64::consts::PI;
        let expect = 1.0 / ((pi / 2.0).sqrt() * pi.sqrt() / 2.0);
        assert!((consts[2] - expect).abs() < 1e-3 * expect);
    }

    #[test]
    fn analytic_derivative_matches_differences() {
        let h = 0.01;
        let (ts, gs) = samples(h, |t| 1.0 / (1.0 + t));
        let dg: Vec<f64> = ts.iter().map(|t| -1.0 / ((1.0 + t) * (1.0 + t))).collect();
        let gnp = GNParams {
            a1: 0.0,
            a2: 1.0,
            mu1: 1.0,
            mu2: 0.0,
            p: 3.0,
        };
        let a = gn_check(&ts, &gs, Some(&dg), &gnp).unwrap();
        let b = gn_check(&ts, &gs, None, &gnp).unwrap();
        assert!((a.implied_constant / b.implied_constant - 1.0).abs() < 1e-3);
        assert!(a.implied_constant <= lemma_gn_bound(3.0));
    }

    #[test]
    fn nonuniform_samples_rejected() {
        let ts = [0.0, 0.1, 0.3, 0.4];
        assert!(gn_check(&ts, &[1.0; 4], None, &classical(3.0)).is_err());
    }
}
