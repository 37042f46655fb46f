//! Pointwise residuals of the null-frame identities on the numerical solution.
//!
//! * `L (Lbar phi)^2 + 2/(p+1) Lbar |phi|^{p+1} = 0`
//! * `Lbar (L phi)^2 + 2/(p+1) L |phi|^{p+1} = 0`
//! * `L P3 + Lbar P4 = ` the Morawetz source, on `|x| <= t + 1`
//! * `L P1 + Lbar P2 = ` the interior source, on `|x| <= t`
//!
//! All derivatives are centered differences; second derivatives of the field
//! enter through differences of first derivatives, so five time levels are
//! kept in a ring.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::multiplier::{interior_source_parts, morawetz_source, p1_p2, p3_p4, Local};
use crate::error::{Error, Result};
use crate::params::{ModelParams, MultiplierParams};
use crate::run::{Frame, Observer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityId {
    OutgoingTransport,
    IncomingTransport,
    Morawetz,
    Interior,
}

impl IdentityId {
    pub const ALL: [IdentityId; 4] = [
        IdentityId::OutgoingTransport,
        IdentityId::IncomingTransport,
        IdentityId::Morawetz,
        IdentityId::Interior,
    ];
}

impl fmt::Display for IdentityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IdentityId::OutgoingTransport => "outgoing_transport",
            IdentityId::IncomingTransport => "incoming_transport",
            IdentityId::Morawetz => "morawetz",
            IdentityId::Interior => "interior",
        })
    }
}

impl FromStr for IdentityId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "outgoing_transport" => IdentityId::OutgoingTransport,
            "incoming_transport" => IdentityId::IncomingTransport,
            "morawetz" => IdentityId::Morawetz,
            "interior" => IdentityId::Interior,
            other => {
                return Err(Error::param(
                    "identity",
                    format!("unknown identity `{other}`"),
                ))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub id: IdentityId,
    pub t_lo: f64,
    pub t_hi: f64,
    pub dx: f64,
    pub max_residual: f64,
    /// Largest value of the nonpositive right-hand side (interior identity
    /// only; zero otherwise).
    pub rhs_max: f64,
    pub points: u64,
}

struct Level {
    step: u64,
    phi: Vec<f64>,
    span: Option<(usize, usize)>,
}

/// Evaluates the identities at every level in `[t_lo, t_hi]`.
pub struct IdentityObserver {
    pub mp: MultiplierParams,
    pub t_lo: f64,
    pub t_hi: f64,
    ids: Vec<IdentityId>,
    ring: VecDeque<Level>,
    reports: Vec<IdentityReport>,
}

impl IdentityObserver {
    pub fn new(ids: &[IdentityId], mp: MultiplierParams, t_lo: f64, t_hi: f64) -> Self {
        Self {
            mp,
            t_lo,
            t_hi,
            ids: ids.to_vec(),
            ring: VecDeque::with_capacity(5),
            reports: ids
                .iter()
                .map(|&id| IdentityReport {
                    id,
                    t_lo,
                    t_hi,
                    dx: 0.0,
                    max_residual: 0.0,
                    rhs_max: f64::NEG_INFINITY,
                    points: 0,
                })
                .collect(),
        }
    }

    pub fn reports(&self) -> Result<Vec<IdentityReport>> {
        if self.reports.iter().any(|r| r.points == 0) && self.ring.len() < 5 {
            return Err(Error::ShortHistory(
                "identity window needs five time levels".into(),
            ));
        }
        Ok(self
            .reports
            .iter()
            .cloned()
            .map(|mut r| {
                if !r.rhs_max.is_finite() {
                    r.rhs_max = 0.0;
                }
                r
            })
            .collect())
    }

    fn push(&mut self, step: u64, phi: &[f64], span: Option<(usize, usize)>) {
        if self.ring.back().is_some_and(|l| l.step >= step) {
            return;
        }
        if self.ring.len() == 5 {
            let mut old = self.ring.pop_front().expect("ring is full");
            old.phi.copy_from_slice(phi);
            old.step = step;
            old.span = span;
            self.ring.push_back(old);
        } else {
            self.ring.push_back(Level {
                step,
                phi: phi.to_vec(),
                span,
            });
        }
    }

    fn evaluate(&mut self, frame: &Frame<'_>) {
        let g = frame.grid;
        let params = frame.params;
        let c = self.ring[2].step;
        let t = g.time_of(c);
        let (dt, dx, n) = (g.dt, g.dx, g.n);
        let lv: Vec<&[f64]> = self.ring.iter().map(|l| l.phi.as_slice()).collect();
        // levels c-1, c, c+1 sit at ring slots 1, 2, 3
        let local = |slot: usize, j: usize| Local {
            t: g.time_of(c + slot as u64 - 2),
            x: g.x(j),
            phi: lv[slot][j],
            pt: (lv[slot + 1][j] - lv[slot - 1][j]) / (2.0 * dt),
            px: (lv[slot][j + 1] - lv[slot][j - 1]) / (2.0 * dx),
        };
        let span = self
            .ring
            .iter()
            .filter_map(|l| l.span)
            .reduce(|a, b| (a.0.min(b.0), a.1.max(b.1)));
        let Some((lo, hi)) = span else {
            for r in &mut self.reports {
                r.dx = dx;
                r.rhs_max = r.rhs_max.max(0.0);
            }
            return;
        };
        let from = lo.saturating_sub(2).max(2);
        let to = (hi + 2).min(n.saturating_sub(3));
        let mp = self.mp;
        for (r, id) in self.reports.iter_mut().zip(&self.ids) {
            r.dx = dx;
            for j in from..=to {
                let x = g.x(j);
                let inside = match id {
                    IdentityId::Morawetz => x.abs() <= t + 1.0,
                    IdentityId::Interior => x.abs() <= t,
                    _ => true,
                };
                if !inside {
                    continue;
                }
                let (res, rhs) = residual(*id, params, &mp, &local, j, dt, dx);
                r.max_residual = r.max_residual.max(res.abs());
                if let Some(v) = rhs {
                    r.rhs_max = r.rhs_max.max(v);
                }
                r.points += 1;
            }
        }
    }
}

fn residual<F: Fn(usize, usize) -> Local>(
    id: IdentityId,
    params: &ModelParams,
    mp: &MultiplierParams,
    local: &F,
    j: usize,
    dt: f64,
    dx: f64,
) -> (f64, Option<f64>) {
    let dens = |l: &Local| (params.p + 1.0) * params.potential(l.phi);
    // centered d_t and d_x of a pointwise quantity at (c, j)
    let d = |f: &dyn Fn(&Local) -> f64| {
        let ft = (f(&local(3, j)) - f(&local(1, j))) / (2.0 * dt);
        let fx = (f(&local(2, j + 1)) - f(&local(2, j - 1))) / (2.0 * dx);
        (ft, fx)
    };
    let k = 2.0 / (params.p + 1.0);
    match id {
        IdentityId::OutgoingTransport => {
            let (gt, gx) = d(&|l| l.lbar() * l.lbar());
            let (ht, hx) = d(&|l| dens(l));
            ((gt + gx) + k * (ht - hx), None)
        }
        IdentityId::IncomingTransport => {
            let (gt, gx) = d(&|l| l.l() * l.l());
            let (ht, hx) = d(&|l| dens(l));
            ((gt - gx) + k * (ht + hx), None)
        }
        IdentityId::Morawetz => {
            let (at, _) = d(&|l| {
                let (p3, p4) = p3_p4(params, l);
                p3 + p4
            });
            let (_, bx) = d(&|l| {
                let (p3, p4) = p3_p4(params, l);
                p3 - p4
            });
            (at + bx - morawetz_source(params, &local(2, j)), None)
        }
        IdentityId::Interior => {
            let (at, _) = d(&|l| {
                let (p1, p2) = p1_p2(params, mp, l);
                p1 + p2
            });
            let (_, bx) = d(&|l| {
                let (p1, p2) = p1_p2(params, mp, l);
                p1 - p2
            });
            let (main, square) = interior_source_parts(params, mp, &local(2, j));
            (at + bx - main - square, Some(square))
        }
    }
}

impl Observer for IdentityObserver {
    fn observe(&mut self, frame: &Frame<'_>) -> Result<()> {
        let g = frame.grid;
        let eps = 1e-9 * g.dt;
        let k = frame.step();
        // the newest level is k + 1, so a full ring is centered on k - 1
        let center = k.saturating_sub(1);
        let t_center = g.time_of(center);
        if t_center > self.t_hi + eps || g.time_of(k + 1) < self.t_lo - 4.0 * g.dt {
            return Ok(());
        }
        if k > 0 {
            self.push(k - 1, frame.prev, frame.span);
        }
        self.push(k, frame.curr, frame.span);
        self.push(k + 1, frame.next, frame.span);
        let full = self.ring.len() == 5 && self.ring[0].step + 4 == k + 1;
        if full && t_center >= self.t_lo - eps {
            self.evaluate(frame);
        }
        Ok(())
    }
}
