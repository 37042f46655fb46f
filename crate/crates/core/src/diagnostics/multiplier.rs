use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ModelParams, MultiplierParams};
use crate::run::Frame;

/// Field value and first derivatives at one spacetime point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Local {
    pub t: f64,
    pub x: f64,
    pub phi: f64,
    pub pt: f64,
    pub px: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stress {
    pub t00: f64,
    pub t01: f64,
    pub t11: f64,
    pub q: f64,
}

impl Local {
    pub fn at(frame: &Frame<'_>, j: usize) -> Self {
        Self {
            t: frame.t(),
            x: frame.grid.x(j),
            phi: frame.curr[j],
            pt: frame.phi_t(j),
            px: frame.phi_x(j),
        }
    }

    /// `L phi = (d_t + d_x) phi`.
    #[inline]
    pub fn l(&self) -> f64 {
        self.pt + self.px
    }

    /// `Lbar phi = (d_t - d_x) phi`.
    #[inline]
    pub fn lbar(&self) -> f64 {
        self.pt - self.px
    }

    #[inline]
    pub fn u(&self) -> f64 {
        self.t + 1.0 - self.x
    }

    #[inline]
    pub fn v(&self) -> f64 {
        self.t + 1.0 + self.x
    }

    /// `T00 = K + F`, `T11 = K - F` with `K = (phi_t^2 + phi_x^2)/2`,
    /// `T01 = phi_x phi_t`, `Q = -2 phi_t^2 + 2 phi_x^2 + 2|phi|^{p+1}`.
    pub fn stress(&self, params: &ModelParams) -> Stress {
        let f = params.potential(self.phi);
        let k = 0.5 * (self.pt * self.pt + self.px * self.px);
        Stress {
            t00: k + f,
            t01: self.px * self.pt,
            t11: k - f,
            q: -2.0 * self.pt * self.pt + 2.0 * self.px * self.px + 2.0 * (params.p + 1.0) * f,
        }
    }
}

/// The multiplier vector fields whose currents are audited.
///
/// Each gives a density `A`, a flux `B` and a source `S` with
/// `d_t A + d_x B = S` on solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Multiplier {
    /// `d_t`: energy conservation.
    Time,
    /// `(t+R) d_t + x d_x`.
    Scaling,
    /// `(x+1) d_t + t d_x`.
    Boost,
    /// The Morawetz field, in the `P3`/`P4` form.
    Morawetz,
    /// The interior weighted field, in the `P1`/`P2` form.
    Interior,
}

impl Multiplier {
    pub const ALL: [Multiplier; 5] = [
        Multiplier::Time,
        Multiplier::Scaling,
        Multiplier::Boost,
        Multiplier::Morawetz,
        Multiplier::Interior,
    ];

    /// `(A, B)` at a point.
    pub fn current(&self, params: &ModelParams, mp: &MultiplierParams, l: &Local) -> (f64, f64) {
        match self {
            Multiplier::Time => {
                let s = l.stress(params);
                (s.t00, -s.t01)
            }
            Multiplier::Scaling => {
                let s = l.stress(params);
                let w = l.t + mp.r;
                (w * s.t00 + l.x * s.t01, -(w * s.t01 + l.x * s.t11))
            }
            Multiplier::Boost => {
                let s = l.stress(params);
                let w = l.x + 1.0;
                (w * s.t00 + l.t * s.t01, -(w * s.t01 + l.t * s.t11))
            }
            Multiplier::Morawetz => {
                let (p3, p4) = p3_p4(params, l);
                (p3 + p4, p3 - p4)
            }
            Multiplier::Interior => {
                let (p1, p2) = p1_p2(params, mp, l);
                (p1 + p2, p1 - p2)
            }
        }
    }

    /// Source `S = d_t A + d_x B` at a point.
    pub fn source(&self, params: &ModelParams, mp: &MultiplierParams, l: &Local) -> f64 {
        match self {
            Multiplier::Time | Multiplier::Boost => 0.0,
            Multiplier::Scaling => 2.0 * params.potential(l.phi),
            Multiplier::Morawetz => morawetz_source(params, l),
            Multiplier::Interior => {
                let (main, square) = interior_source_parts(params, mp, l);
                main + square
            }
        }
    }
}

impl fmt::Display for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Multiplier::Time => "time",
            Multiplier::Scaling => "scaling",
            Multiplier::Boost => "boost",
            Multiplier::Morawetz => "morawetz",
            Multiplier::Interior => "interior",
        })
    }
}

impl FromStr for Multiplier {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "time" | "dt" => Multiplier::Time,
            "scaling" => Multiplier::Scaling,
            "boost" => Multiplier::Boost,
            "morawetz" => Multiplier::Morawetz,
            "interior" => Multiplier::Interior,
            other => {
                return Err(Error::param(
                    "multiplier",
                    format!("unknown multiplier `{other}`"),
                ))
            }
        })
    }
}

/// `P3 = (u^2 (Lbar phi)^2 + 2 v^2 F) / t*^2`, `P4 = (v^2 (L phi)^2 + 2 u^2 F) / t*^2`.
pub(crate) fn p3_p4(params: &ModelParams, l: &Local) -> (f64, f64) {
    let (u, v) = (l.u(), l.v());
    let ts2 = (l.t + 1.0) * (l.t + 1.0);
    let f2 = 2.0 * params.potential(l.phi);
    let (lb, lf) = (l.lbar(), l.l());
    (
        (u * u * lb * lb + v * v * f2) / ts2,
        (v * v * lf * lf + u * u * f2) / ts2,
    )
}

/// `2uv t*^-3 Q - 2 t*^-3 |u Lbar phi - v L phi|^2 - 4(p-1)/(p+1) uv t*^-3 |phi|^{p+1}`.
pub(crate) fn morawetz_source(params: &ModelParams, l: &Local) -> f64 {
    let (u, v) = (l.u(), l.v());
    let ts = l.t + 1.0;
    let inv3 = 1.0 / (ts * ts * ts);
    let q = l.stress(params).q;
    let dens = (params.p + 1.0) * params.potential(l.phi);
    let m = u * l.lbar() - v * l.l();
    inv3 * (2.0 * u * v * q
        - 2.0 * m * m
        - 4.0 * (params.p - 1.0) / (params.p + 1.0) * u * v * dens)
}

/// `P1 = u^b v^(a-1) (Lbar phi)^2 / b + 2 u^(b-1) v^a F / a`,
/// `P2 = u^(b-1) v^a (L phi)^2 / a + 2 u^b v^(a-1) F / b`.
pub(crate) fn p1_p2(params: &ModelParams, mp: &MultiplierParams, l: &Local) -> (f64, f64) {
    let (a, b) = (mp.alpha, mp.beta);
    let (u, v) = (l.u(), l.v());
    let (ub, ub1) = (u.powf(b), u.powf(b - 1.0));
    let (va, va1) = (v.powf(a), v.powf(a - 1.0));
    let f2 = 2.0 * params.potential(l.phi);
    let (lb, lf) = (l.lbar(), l.l());
    (
        ub * va1 * lb * lb / b + ub1 * va * f2 / a,
        ub1 * va * lf * lf / a + ub * va1 * f2 / b,
    )
}

/// The two terms of `L P1 + Lbar P2`: `4/(p+1) u^(b-1) v^(a-1) Q` and the
/// nonpositive square `-2 u^(b-2) v^(a-2) |sqrt((1-b)/a) v L phi - sqrt((1-a)/b) u Lbar phi|^2`.
pub(crate) fn interior_source_parts(
    params: &ModelParams,
    mp: &MultiplierParams,
    l: &Local,
) -> (f64, f64) {
    let (a, b) = (mp.alpha, mp.beta);
    let (u, v) = (l.u(), l.v());
    let q = l.stress(params).q;
    let main = 4.0 / (params.p + 1.0) * u.powf(b - 1.0) * v.powf(a - 1.0) * q;
    let m = ((1.0 - b) / a).sqrt() * v * l.l() - ((1.0 - a) / b).sqrt() * u * l.lbar();
    let square = -2.0 * u.powf(b - 2.0) * v.powf(a - 2.0) * m * m;
    (main, square)
}
