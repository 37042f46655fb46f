//! Equation and multiplier parameters.
//!
//! The interior decay estimates are parameterized by a pair `(alpha, beta)`
//! tied to the power `p` through
//!
//! ```text
//! (1/alpha - 1)(1/beta - 1) = 4/(p+1)^2,   1/2 <= alpha < 1.
//! ```
//!
//! [`validate_params`] accepts either member of the pair and solves for the
//! other one; it never falls back to a default.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for a user-supplied `(alpha, beta)` pair.
pub const CONSTRAINT_TOL: f64 = 1e-9;

/// The power nonlinearity `|s|^{p-1} s` and its potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub p: f64,
    pub nonlinearity_enabled: bool,
}

impl ModelParams {
    pub fn new(p: f64, nonlinearity_enabled: bool) -> Result<Self> {
        if !p.is_finite() {
            return Err(Error::param("p", "must be finite"));
        }
        if nonlinearity_enabled && p <= 1.0 {
            return Err(Error::param("p", format!("must satisfy p > 1, got {p}")));
        }
        Ok(Self {
            p,
            nonlinearity_enabled,
        })
    }

    /// `|s|^{p+1}`, using integer powers when `p + 1` is integral.
    #[inline]
    pub fn abs_pow(&self, s: f64) -> f64 {
        let e = self.p + 1.0;
        if e == e.trunc() && e.abs() < 64.0 {
            s.abs().powi(e as i32)
        } else {
            s.abs().powf(e)
        }
    }

    /// Potential density `F(s) = |s|^{p+1}/(p+1)`; zero in linear mode.
    #[inline]
    pub fn potential(&self, s: f64) -> f64 {
        if self.nonlinearity_enabled {
            self.abs_pow(s) / (self.p + 1.0)
        } else {
            0.0
        }
    }

    /// `N(s) = |s|^{p-1} s`; zero in linear mode.
    #[inline]
    pub fn force(&self, s: f64) -> f64 {
        if !self.nonlinearity_enabled {
            return 0.0;
        }
        let e = self.p - 1.0;
        let mag = if e == e.trunc() && e.abs() < 64.0 {
            s.abs().powi(e as i32)
        } else {
            s.abs().powf(e)
        };
        mag * s
    }

    /// `|phi|^{p+1}` as it enters the diagnostics; unlike [`Self::potential`]
    /// it does not vanish in linear mode.
    #[inline]
    pub fn density(&self, s: f64) -> f64 {
        self.abs_pow(s)
    }
}

/// Parameters of the weighted multiplier estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierParams {
    pub alpha: f64,
    pub beta: f64,
    /// Weight exponent of the initial-data norm `E_gamma`.
    pub gamma: f64,
    /// Offset of the translated scaling field `(t+R) d_t + x d_x`.
    #[serde(rename = "R")]
    pub r: f64,
}

impl MultiplierParams {
    /// `(1/alpha - 1)(1/beta - 1) - 4/(p+1)^2`.
    pub fn constraint_residual(&self, p: f64) -> f64 {
        (1.0 / self.alpha - 1.0) * (1.0 / self.beta - 1.0) - coupling(p)
    }
}

/// `4/(p+1)^2`.
pub fn coupling(p: f64) -> f64 {
    4.0 / ((p + 1.0) * (p + 1.0))
}

/// Solves the coupling for `beta` given `alpha`.
pub fn beta_from_alpha(p: f64, alpha: f64) -> f64 {
    1.0 / (1.0 + coupling(p) / (1.0 / alpha - 1.0))
}

/// Solves the coupling for `alpha` given `beta`.
pub fn alpha_from_beta(p: f64, beta: f64) -> f64 {
    1.0 / (1.0 + coupling(p) / (1.0 / beta - 1.0))
}

/// Validates a raw name/value map into model and multiplier parameters.
///
/// `p` is required and at least one of `alpha`/`beta` must be present.
/// `gamma` defaults to 1 and `R` to 1.
pub fn validate_params(raw: &BTreeMap<String, f64>) -> Result<(ModelParams, MultiplierParams)> {
    let p = *raw.get("p").ok_or_else(|| Error::MissingKey("p".into()))?;
    let model = ModelParams::new(p, true)?;
    let mult = resolve_multipliers(
        p,
        raw.get("alpha").copied(),
        raw.get("beta").copied(),
        raw.get("gamma").copied(),
        raw.get("R").copied(),
    )?;
    Ok((model, mult))
}

pub(crate) fn resolve_multipliers(
    p: f64,
    alpha: Option<f64>,
    beta: Option<f64>,
    gamma: Option<f64>,
    r: Option<f64>,
) -> Result<MultiplierParams> {
    if !(p > 1.0) {
        return Err(Error::param("p", format!("must satisfy p > 1, got {p}")));
    }
    let check_alpha = |a: f64| {
        if (0.5..1.0).contains(&a) {
            Ok(a)
        } else {
            Err(Error::param(
                "alpha",
                format!("must lie in [1/2, 1), got {a}"),
            ))
        }
    };
    let check_beta = |b: f64| {
        if b > 0.0 && b < 1.0 {
            Ok(b)
        } else {
            Err(Error::param("beta", format!("must lie in (0, 1), got {b}")))
        }
    };

    let (alpha, beta) = match (alpha, beta) {
        (None, None) => {
            return Err(Error::param(
                "alpha",
                "one of `alpha` or `beta` is required (the other is solved from the coupling)",
            ))
        }
        (Some(a), None) => {
            let a = check_alpha(a)?;
            (a, check_beta(beta_from_alpha(p, a))?)
        }
        (None, Some(b)) => {
            let b = check_beta(b)?;
            let a = alpha_from_beta(p, b);
            let a = check_alpha(a).map_err(|_| {
                Error::param(
                    "beta",
                    format!("beta = {b} forces alpha = {a}, outside [1/2, 1)"),
                )
            })?;
            (a, b)
        }
        (Some(a), Some(b)) => {
            let a = check_alpha(a)?;
            let b = check_beta(b)?;
            let resid = (1.0 / a - 1.0) * (1.0 / b - 1.0) - coupling(p);
            if resid.abs() > CONSTRAINT_TOL * coupling(p) {
                return Err(Error::param(
                    "beta",
                    format!("(1/alpha-1)(1/beta-1) misses 4/(p+1)^2 by {resid:e}"),
                ));
            }
            (a, b)
        }
    };

    let gamma = gamma.unwrap_or(1.0);
    if !(gamma >= 0.0) {
        return Err(Error::param("gamma", format!("must be >= 0, got {gamma}")));
    }
    let r = r.unwrap_or(1.0);
    if !(r > 0.0) {
        return Err(Error::param("R", format!("must be > 0, got {r}")));
    }
    Ok(MultiplierParams {
        alpha,
        beta,
        gamma,
        r,
    })
}
