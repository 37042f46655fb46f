use serde::{Deserialize, Serialize};

use crate::params::{alpha_from_beta, ModelParams, MultiplierParams};

/// Pointwise decay exponents for one `(p, alpha, beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentSet {
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Exponents of `(1+t+|x|)` and `(1+|x|-t)` outside the cone.
    pub exterior_pair: (f64, f64),
    /// `(2 alpha - 1)/(p+3)`, the exponent of `(1+t+|x|)` inside the cone.
    pub interior_t: f64,
    /// `(2 beta - 1)/(p+3)`, the exponent of `(1+t-|x|)` inside the cone.
    pub interior_x: f64,
    /// `(p-1)/((p+1)^2+4)`.
    pub uniform: f64,
}

impl ExponentSet {
    pub fn new(p: f64, alpha: f64, beta: f64) -> Self {
        let e = 1.0 / (p + 3.0);
        Self {
            p,
            alpha,
            beta,
            exterior_pair: (e, e),
            interior_t: (2.0 * alpha - 1.0) / (p + 3.0),
            interior_x: (2.0 * beta - 1.0) / (p + 3.0),
            uniform: (p - 1.0) / ((p + 1.0).powi(2) + 4.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentCatalog {
    pub set: ExponentSet,
    /// With `beta = 1/2` and the coupled `alpha`, `interior_t == uniform`.
    pub half_beta_matches_uniform: bool,
    /// With `alpha = beta = (p+1)/(p+3)`, both interior exponents equal
    /// `(p-1)/(p+3)^2`.
    pub symmetric_matches: bool,
}

const ALGEBRA_TOL: f64 = 1e-12;

pub fn exponent_catalog(params: &ModelParams, mp: &MultiplierParams) -> ExponentCatalog {
    let p = params.p;
    let set = ExponentSet::new(p, mp.alpha, mp.beta);
    let close = |a: f64, b: f64| (a - b).abs() <= ALGEBRA_TOL * b.abs().max(1e-300) || a == b;

    let half = ExponentSet::new(p, alpha_from_beta(p, 0.5), 0.5);
    let s = (p + 1.0) / (p + 3.0);
    let sym = ExponentSet::new(p, s, s);
    let target = (p - 1.0) / ((p + 3.0) * (p + 3.0));
    ExponentCatalog {
        set,
        half_beta_matches_uniform: close(half.interior_t, half.uniform),
        symmetric_matches: close(sym.interior_t, target) && close(sym.interior_x, target),
    }
}

/// `sup_t ||phi(t)||_inf / E_0^{2/(p+3)}`, the constant of the uniform bound.
pub fn uniform_bound_constant(linf_max: f64, e0: f64, p: f64) -> f64 {
    if linf_max == 0.0 {
        return 0.0;
    }
    linf_max / e0.powf(2.0 / (p + 3.0))
}
