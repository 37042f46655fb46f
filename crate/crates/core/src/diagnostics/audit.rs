//! Divergence-theorem audits of multiplier currents over spacetime regions.
//!
//! For `d_t A + d_x B = S` on a region sliced at fixed times into
//! `x_l(t) <= x <= x_r(t)`,
//!
//! ```text
//! int int S = [int A dx]_{t0}^{t1}
//!           + int ((B - A x_r') at x_r - (B - A x_l') at x_l) dt.
//! ```
//!
//! Space integrals use partial-cell trapezoid weights, time integrals the
//! trapezoid rule over steps, and edge values cubic interpolation, so the
//! closure residual is second order in `dx`.

use serde::{Deserialize, Serialize};

use super::multiplier::{Local, Multiplier};
use crate::error::{Error, Result};
use crate::nullgeom::{interval_weights, stencil, Edge, RegionPiece, RegionSpec};
use crate::params::MultiplierParams;
use crate::run::{Frame, Observer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentFlux {
    pub name: String,
    pub t0: f64,
    pub t1: f64,
    /// Contribution of this lateral edge to the closure.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxAuditReport {
    pub multiplier: Multiplier,
    pub region: RegionSpec,
    pub dx: f64,
    /// `int int S`.
    pub bulk: f64,
    pub slab_initial: f64,
    pub slab_final: f64,
    pub segments: Vec<SegmentFlux>,
    /// `slab_final - slab_initial + sum of segments`.
    pub closure: f64,
    /// `|bulk - closure|`.
    pub residual: f64,
    /// Residual over the largest term, for scale.
    pub relative_residual: f64,
}

/// The same audit at `dx` and `dx/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditPair {
    pub coarse: FluxAuditReport,
    pub fine: FluxAuditReport,
    /// `coarse.residual / fine.residual`.
    pub ratio: f64,
}

impl AuditPair {
    pub fn new(coarse: FluxAuditReport, fine: FluxAuditReport) -> Self {
        let ratio = refinement_ratio(coarse.residual, fine.residual);
        Self {
            coarse,
            fine,
            ratio,
        }
    }
}

/// `coarse / fine`, with an exact zero at both levels counted as converged.
pub fn refinement_ratio(coarse: f64, fine: f64) -> f64 {
    if fine > 0.0 {
        coarse / fine
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct Trapezoid {
    acc: f64,
    last: Option<(f64, f64)>,
}

impl Trapezoid {
    fn push(&mut self, t: f64, v: f64) {
        if let Some((t0, v0)) = self.last {
            self.acc += 0.5 * (t - t0) * (v0 + v);
        }
        self.last = Some((t, v));
    }
}

/// Streams one multiplier audit over one region.
#[derive(Debug, Clone)]
pub struct FluxAuditor {
    pub multiplier: Multiplier,
    pub region: RegionSpec,
    pub mp: MultiplierParams,
    pieces: Vec<RegionPiece>,
    bulk: Trapezoid,
    lateral: Vec<[Trapezoid; 2]>,
    slab_initial: Option<f64>,
    slab_final: Option<(f64, f64)>,
    dx: f64,
}

impl FluxAuditor {
    pub fn new(multiplier: Multiplier, region: RegionSpec, mp: MultiplierParams) -> Result<Self> {
        region.validate()?;
        let pieces = region.pieces();
        Ok(Self {
            multiplier,
            region,
            mp,
            lateral: vec![Default::default(); pieces.len()],
            pieces,
            bulk: Trapezoid::default(),
            slab_initial: None,
            slab_final: None,
            dx: 0.0,
        })
    }

    pub fn report(&self) -> Result<FluxAuditReport> {
        let (t0, t1) = self.region.t_range();
        let slab_initial = self
            .slab_initial
            .ok_or_else(|| Error::ShortHistory(format!("audit never reached t = {t0}")))?;
        let (t_last, slab_final) = self.slab_final.unwrap_or((f64::NEG_INFINITY, 0.0));
        if (t_last - t1).abs() > 1e-9 * (1.0 + t1.abs()) {
            return Err(Error::ShortHistory(format!(
                "audit stopped at t = {t_last}, region ends at {t1}"
            )));
        }
        let mut segments = Vec::new();
        for (piece, sides) in self.pieces.iter().zip(&self.lateral) {
            for (side, edge, acc) in [
                ("left", piece.left, &sides[0]),
                ("right", piece.right, &sides[1]),
            ] {
                segments.push(SegmentFlux {
                    name: format!("{side} x = {}{:+}t", edge.x0, edge.slope),
                    t0: piece.t0,
                    t1: piece.t1,
                    value: acc.acc,
                });
            }
        }
        let lateral: f64 = segments.iter().map(|s| s.value).sum();
        let closure = slab_final - slab_initial + lateral;
        let bulk = self.bulk.acc;
        let residual = (bulk - closure).abs();
        let scale = segments.iter().map(|s| s.value.abs()).fold(
            bulk.abs().max(slab_initial.abs()).max(slab_final.abs()),
            f64::max,
        );
        Ok(FluxAuditReport {
            multiplier: self.multiplier,
            region: self.region,
            dx: self.dx,
            bulk,
            slab_initial,
            slab_final,
            segments,
            closure,
            residual,
            relative_residual: if scale > 0.0 { residual / scale } else { 0.0 },
        })
    }

    fn edge_term(&self, frame: &Frame<'_>, edge: &Edge, t: f64) -> Result<f64> {
        let x = edge.at(t);
        let (j0, w) = stencil(frame.grid, x, 1).ok_or(Error::RegionOutsideGrid { t })?;
        let mut v = 0.0;
        for m in 0..4 {
            let l = Local::at(frame, j0 + m);
            let (a, b) = self.multiplier.current(frame.params, &self.mp, &l);
            v += w[m] * (b - a * edge.slope);
        }
        Ok(v)
    }
}

impl Observer for FluxAuditor {
    fn observe(&mut self, frame: &Frame<'_>) -> Result<()> {
        let t = frame.t();
        let eps = 1e-9 * frame.grid.dt;
        let (t0, t1) = self.region.t_range();
        if t < t0 - eps || t > t1 + eps {
            return Ok(());
        }
        if self.slab_initial.is_none() && (t - t0).abs() > eps {
            return Err(Error::param(
                "region",
                format!("start time {t0} is not on the time grid (first step at {t})"),
            ));
        }
        for piece in &self.pieces {
            for tk in [piece.t0, piece.t1] {
                let k = tk / frame.grid.dt;
                if (k - k.round()).abs() > 1e-6 {
                    return Err(Error::param(
                        "region",
                        format!("corner time {tk} is not on the time grid"),
                    ));
                }
            }
        }
        self.dx = frame.grid.dx;
        let (xl, xr) = self
            .region
            .bounds_at(t)
            .expect("t inside the region's time range");
        let (first, w) = interval_weights(frame.grid, xl, xr)?;
        let (mut slab, mut bulk) = (0.0, 0.0);
        for (k, wk) in w.iter().enumerate() {
            let l = Local::at(frame, first + k);
            slab += wk * self.multiplier.current(frame.params, &self.mp, &l).0;
            bulk += wk * self.multiplier.source(frame.params, &self.mp, &l);
        }
        if self.slab_initial.is_none() {
            self.slab_initial = Some(slab);
        }
        self.slab_final = Some((t, slab));
        self.bulk.push(t, bulk);
        for idx in 0..self.pieces.len() {
            let piece = self.pieces[idx];
            if t < piece.t0 - eps || t > piece.t1 + eps {
                continue;
            }
            let left = -self.edge_term(frame, &piece.left, t)?;
            let right = self.edge_term(frame, &piece.right, t)?;
            self.lateral[idx][0].push(t, left);
            self.lateral[idx][1].push(t, right);
        }
        Ok(())
    }

    fn name(&self) -> String {
        format!("audit:{}:{:?}", self.multiplier, self.region)
    }
}
