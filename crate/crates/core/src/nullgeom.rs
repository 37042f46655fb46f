//! Null coordinates, characteristic traces and spacetime regions.
//!
//! With `u = t + 1 - x`, `v = t + 1 + x` and `t* = t + 1`, light rays are
//! level sets of `u` or `v`. `L = d_t + d_x` differentiates along outgoing
//! rays and `Lbar = d_t - d_x` along incoming ones.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::numfmt::fmt_f64;
use crate::run::{Frame, Observer};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullPoint {
    pub u: f64,
    pub v: f64,
    pub t: f64,
    pub x: f64,
}

impl NullPoint {
    /// `t* = t + 1 = (u + v)/2`.
    pub fn t_star(&self) -> f64 {
        self.t + 1.0
    }
}

pub fn null_coords(t: f64, x: f64) -> NullPoint {
    NullPoint {
        u: t + 1.0 - x,
        v: t + 1.0 + x,
        t,
        x,
    }
}

// ---------------------------------------------------------------------------
// interpolation

/// Lagrange weights for nodes at offsets `-1, 0, 1, 2` evaluated at `s`.
#[inline]
pub fn cubic_weights(s: f64) -> [f64; 4] {
    let (sm1, sm2, sp1) = (s - 1.0, s - 2.0, s + 1.0);
    [
        -s * sm1 * sm2 / 6.0,
        sp1 * sm1 * sm2 / 2.0,
        -sp1 * s * sm2 / 2.0,
        sp1 * s * sm1 / 6.0,
    ]
}

/// First stencil node and cubic weights for position `x`, keeping `margin`
/// extra nodes on either side of the four-point stencil inside the grid.
pub fn stencil(grid: &Grid1D, x: f64, margin: usize) -> Option<(usize, [f64; 4])> {
    let c = grid.coord(x);
    if !c.is_finite() {
        return None;
    }
    let lo = 1 + margin;
    let hi = grid.n.checked_sub(3 + margin)?;
    if hi < lo || c < lo as f64 || c > (hi + 1) as f64 {
        return None;
    }
    let i = (c.floor() as usize).clamp(lo, hi);
    Some((i - 1, cubic_weights(c - i as f64)))
}

/// Cubic interpolation of nodal values `f(j)` at position `x`.
pub fn interpolate<F: Fn(usize) -> f64>(grid: &Grid1D, x: f64, margin: usize, f: F) -> Option<f64> {
    let (j0, w) = stencil(grid, x, margin)?;
    Some((0..4).map(|m| w[m] * f(j0 + m)).sum())
}

// ---------------------------------------------------------------------------
// characteristic traces

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `x = t + a`, sampled with `L phi`.
    Outgoing,
    /// `x = -t - a`, sampled with `Lbar phi`.
    Incoming,
    /// `x = t - a` for `t >= a`, sampled with `L phi`.
    InteriorOutgoing,
}

impl Direction {
    pub fn position(&self, a: f64, t: f64) -> f64 {
        match self {
            Direction::Outgoing => t + a,
            Direction::Incoming => -t - a,
            Direction::InteriorOutgoing => t - a,
        }
    }

    pub fn start_time(&self, a: f64) -> f64 {
        match self {
            Direction::InteriorOutgoing => a,
            _ => 0.0,
        }
    }

    /// `+1` for `L = d_t + d_x`, `-1` for `Lbar = d_t - d_x`.
    pub fn derivative_sign(&self) -> f64 {
        match self {
            Direction::Incoming => -1.0,
            _ => 1.0,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Outgoing => "outgoing",
            Direction::Incoming => "incoming",
            Direction::InteriorOutgoing => "interior_outgoing",
        })
    }
}

impl FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "outgoing" => Ok(Direction::Outgoing),
            "incoming" => Ok(Direction::Incoming),
            "interior_outgoing" => Ok(Direction::InteriorOutgoing),
            other => Err(Error::param(
                "direction",
                format!("unknown direction `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub phi: f64,
    /// Derivative along the traced line.
    pub dphi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicTrace {
    pub a: f64,
    pub direction: Direction,
    pub samples: Vec<TraceSample>,
}

impl CharacteristicTrace {
    pub fn new(a: f64, direction: Direction) -> Self {
        Self {
            a,
            direction,
            samples: Vec::new(),
        }
    }

    /// Trapezoid rule over the samples of `f(sample)`.
    pub fn integrate<F: Fn(&TraceSample) -> f64>(&self, f: F) -> f64 {
        self.cumulative(f).last().copied().unwrap_or(0.0)
    }

    /// Running trapezoid integral; entry `k` covers samples `0..=k`.
    pub fn cumulative<F: Fn(&TraceSample) -> f64>(&self, f: F) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.samples.len());
        let mut acc = 0.0;
        let mut last: Option<(f64, f64)> = None;
        for s in &self.samples {
            let v = f(s);
            if let Some((t0, v0)) = last {
                acc += 0.5 * (s.t - t0) * (v0 + v);
            }
            out.push(acc);
            last = Some((s.t, v));
        }
        out
    }

    pub fn x_at(&self, t: f64) -> f64 {
        self.direction.position(self.a, t)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = format!(
            "# a={},direction={}\nt,phi,Dphi\n",
            fmt_f64(self.a),
            self.direction
        );
        for s in &self.samples {
            out.push_str(&format!(
                "{},{},{}\n",
                fmt_f64(s.t),
                fmt_f64(s.phi),
                fmt_f64(s.dphi)
            ));
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Records a [`CharacteristicTrace`] from the frame stream, one sample per
/// step. `phi` and the tangential derivative are interpolated with cubic
/// Lagrange weights from the nodal field and its centered derivatives.
#[derive(Debug, Clone)]
pub struct TraceRecorder {
    pub trace: CharacteristicTrace,
    /// Stop sampling after this time.
    pub t_stop: f64,
}

impl TraceRecorder {
    pub fn new(a: f64, direction: Direction) -> Self {
        Self {
            trace: CharacteristicTrace::new(a, direction),
            t_stop: f64::INFINITY,
        }
    }

    pub fn until(mut self, t_stop: f64) -> Self {
        self.t_stop = t_stop;
        self
    }
}

/// Samples `(phi, D phi)` at `x` where `D = d_t + sign d_x`.
pub fn sample_at(frame: &Frame<'_>, x: f64, sign: f64) -> Option<(f64, f64)> {
    // centered d_x at the outer stencil nodes needs one more node each side
    let (j0, w) = stencil(frame.grid, x, 1)?;
    let mut phi = 0.0;
    let mut d = 0.0;
    for m in 0..4 {
        let j = j0 + m;
        phi += w[m] * frame.curr[j];
        d += w[m] * (frame.phi_t(j) + sign * frame.phi_x(j));
    }
    Some((phi, d))
}

impl Observer for TraceRecorder {
    fn observe(&mut self, frame: &Frame<'_>) -> Result<()> {
        let t = frame.t();
        let dir = self.trace.direction;
        let a = self.trace.a;
        if t < dir.start_time(a) - 1e-9 * frame.grid.dt || t > self.t_stop + 1e-9 * frame.grid.dt {
            return Ok(());
        }
        let x = dir.position(a, t);
        let (phi, dphi) =
            sample_at(frame, x, dir.derivative_sign()).ok_or(Error::TraceOutsideGrid { t, x })?;
        self.trace.samples.push(TraceSample { t, phi, dphi });
        Ok(())
    }

    fn name(&self) -> String {
        format!("trace:{}:{}", self.trace.direction, self.trace.a)
    }

    fn checkpoint(&self) -> Option<serde_json::Value> {
        serde_json::to_value(&self.trace.samples).ok()
    }

    fn restore(&mut self, state: &serde_json::Value) -> Result<()> {
        self.trace.samples =
            serde_json::from_value(state.clone()).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// regions

/// Spacetime regions used by the flux audits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionSpec {
    /// `[t0, t1] x [x1, x2]`.
    Rectangle { t0: f64, t1: f64, x1: f64, x2: f64 },
    /// `|x| <= t + r`, `0 <= t <= t_end`.
    Sigma { r: f64, t_end: f64 },
    /// `t >= 0`, `t - x <= -a`, `t + x <= b`: the triangle between the
    /// outgoing ray from `a` and the incoming ray from `b`.
    Exterior { a: f64, b: f64 },
    /// `0 <= t - x <= a`, `0 <= t + x <= b`: a null rectangle inside the cone.
    Interior { a: f64, b: f64 },
}

/// A straight edge `x = x0 + slope t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub x0: f64,
    pub slope: f64,
}

impl Edge {
    pub fn at(&self, t: f64) -> f64 {
        self.x0 + self.slope * t
    }
}

/// A time interval on which both lateral edges are straight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionPiece {
    pub t0: f64,
    pub t1: f64,
    pub left: Edge,
    pub right: Edge,
}

impl RegionSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            RegionSpec::Rectangle { t0, t1, x1, x2 } => t1 > t0 && x2 > x1,
            RegionSpec::Sigma { r, t_end } => r > 0.0 && t_end > 0.0,
            RegionSpec::Exterior { a, b } => b > a,
            RegionSpec::Interior { a, b } => a > 0.0 && b > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param("region", format!("{self:?} is empty")))
        }
    }

    pub fn pieces(&self) -> Vec<RegionPiece> {
        let edge = |x0, slope| Edge { x0, slope };
        match *self {
            RegionSpec::Rectangle { t0, t1, x1, x2 } => vec![RegionPiece {
                t0,
                t1,
                left: edge(x1, 0.0),
                right: edge(x2, 0.0),
            }],
            RegionSpec::Sigma { r, t_end } => vec![RegionPiece {
                t0: 0.0,
                t1: t_end,
                left: edge(-r, -1.0),
                right: edge(r, 1.0),
            }],
            RegionSpec::Exterior { a, b } => vec![RegionPiece {
                t0: 0.0,
                t1: 0.5 * (b - a),
                left: edge(a, 1.0),
                right: edge(b, -1.0),
            }],
            RegionSpec::Interior { a, b } => {
                let top = 0.5 * (a + b);
                let mut cuts = vec![0.0, 0.5 * a.min(b), 0.5 * a.max(b), top];
                cuts.dedup();
                cuts.windows(2)
                    .map(|w| {
                        let mid = 0.5 * (w[0] + w[1]);
                        let left = if mid < 0.5 * a {
                            edge(0.0, -1.0)
                        } else {
                            edge(-a, 1.0)
                        };
                        let right = if mid < 0.5 * b {
                            edge(0.0, 1.0)
                        } else {
                            edge(b, -1.0)
                        };
                        RegionPiece {
                            t0: w[0],
                            t1: w[1],
                            left,
                            right,
                        }
                    })
                    .collect()
            }
        }
    }

    /// Largest `|x|` the region reaches.
    pub fn x_extent(&self) -> f64 {
        self.pieces()
            .iter()
            .flat_map(|p| {
                [
                    p.left.at(p.t0),
                    p.left.at(p.t1),
                    p.right.at(p.t0),
                    p.right.at(p.t1),
                ]
            })
            .fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn t_range(&self) -> (f64, f64) {
        let p = self.pieces();
        (p[0].t0, p[p.len() - 1].t1)
    }

    /// `[x_left, x_right]` at time `t`, or `None` outside the time range.
    pub fn bounds_at(&self, t: f64) -> Option<(f64, f64)> {
        let (t0, t1) = self.t_range();
        if t < t0 || t > t1 {
            return None;
        }
        let piece = self
            .pieces()
            .into_iter()
            .find(|p| t <= p.t1)
            .expect("t inside range");
        Some((piece.left.at(t), piece.right.at(t).max(piece.left.at(t))))
    }
}

/// Weights integrating the piecewise-linear interpolant of nodal values over
/// `[xl, xr]`: full cells get the trapezoid rule, cut cells their exact
/// share. Returns the first node index and the weights from there on.
pub fn interval_weights(grid: &Grid1D, xl: f64, xr: f64) -> Result<(usize, Vec<f64>)> {
    if xl < grid.x_min - 1e-12 || xr > grid.x_max() + 1e-12 {
        return Err(Error::RegionOutsideGrid { t: grid.t });
    }
    if xr <= xl {
        return Ok((0, Vec::new()));
    }
    let dx = grid.dx;
    let cl = grid.coord(xl).max(0.0);
    let cr = grid.coord(xr).min((grid.n - 1) as f64);
    let first = cl.floor() as usize;
    let last = (cr.ceil() as usize).min(grid.n - 1);
    let mut w = vec![0.0; last - first + 1];
    let mut cell = first;
    while cell < last {
        let s0 = (cl - cell as f64).max(0.0);
        let s1 = (cr - cell as f64).min(1.0);
        if s1 > s0 {
            let lin = 0.5 * (s1 * s1 - s0 * s0);
            w[cell - first] += dx * ((s1 - s0) - lin);
            w[cell + 1 - first] += dx * lin;
        }
        cell += 1;
    }
    Ok((first, w))
}

/// Dense per-node quadrature weights of `region` at time `t`.
pub fn region_mask(grid: &Grid1D, t: f64, region: &RegionSpec) -> Result<Vec<f64>> {
    let mut mask = vec![0.0; grid.n];
    if let Some((xl, xr)) = region.bounds_at(t) {
        let (first, w) = interval_weights(grid, xl, xr)?;
        mask[first..first + w.len()].copy_from_slice(&w);
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn null_coordinate_values() {
        let p = null_coords(0.0, 0.0);
        assert_eq!((p.u, p.v), (1.0, 1.0));
        let p = null_coords(1.0, 1.0);
        assert_eq!((p.u, p.v), (1.0, 3.0));
        let p = null_coords(3.0, -2.0);
        assert_eq!((p.u, p.v), (6.0, 2.0));
        assert_eq!(p.u + p.v, 8.0);
    }

    proptest! {
        #[test]
        fn null_coordinate_algebra(t in -1e3f64..1e3, x in -1e3f64..1e3) {
            let p = null_coords(t, x);
            let tol = 4.0 * f64::EPSILON * (t.abs() + x.abs() + 1.0);
            prop_assert!((p.u + p.v - 2.0 * (t + 1.0)).abs() <= tol);
            prop_assert!((p.v - p.u - 2.0 * x).abs() <= tol);
            prop_assert!(((p.u + p.v) / 2.0 - p.t_star()).abs() <= tol);
        }

        #[test]
        fn cubic_interpolation_is_exact_on_cubics(
            c in proptest::array::uniform4(-3.0f64..3.0),
            x in -4.0f64..4.0,
        ) {
            let grid = Grid1D::centered(100, 0.05, 0.025);
            let f = |x: f64| c[0] + x * (c[1] + x * (c[2] + x * c[3]));
            let v = interpolate(&grid, x, 0, |j| f(grid.x(j))).unwrap();
            prop_assert!((v - f(x)).abs() < 1e-11);
        }
    }

    #[test]
    fn stencil_refuses_edges() {
        let grid = Grid1D::centered(10, 0.1, 0.05);
        // n = 21: a centered four-point stencil reaches x = 0.9 at most
        assert!(stencil(&grid, 0.85, 0).is_some());
        assert!(stencil(&grid, 0.9, 0).is_some());
        assert!(stencil(&grid, 0.95, 0).is_none());
        assert!(stencil(&grid, 0.8, 1).is_some());
        assert!(stencil(&grid, 0.85, 1).is_none());
        assert!(stencil(&grid, -0.9, 0).is_some());
        assert!(stencil(&grid, -0.95, 0).is_none());
    }

    #[test]
    fn sigma_mask_support_and_mass() {
        let grid = Grid1D::centered(400, 0.01, 0.005);
        let region = RegionSpec::Sigma { r: 1.0, t_end: 2.0 };
        let m = region_mask(&grid, 0.0, &region).unwrap();
        for j in 0..grid.n {
            if grid.x(j).abs() > 1.0 + 1e-12 {
                assert_eq!(m[j], 0.0);
            }
        }
        for t in [0.0, 0.3, 1.234_567] {
            let m = region_mask(&grid, t, &region).unwrap();
            let total: f64 = m.iter().sum();
            assert!((total - 2.0 * (t + 1.0)).abs() < grid.dx * grid.dx, "t={t}");
        }
    }

    #[test]
    fn straddling_boundary_gets_half_cell() {
        let grid = Grid1D::centered(10, 0.1, 0.05);
        // right edge halfway between x = 0.2 and x = 0.3
        let (first, w) = interval_weights(&grid, -0.2, 0.25).unwrap();
        let j = grid.coord(0.2).round() as usize;
        let half_cell = w[j - first] - 0.5 * grid.dx + w[j + 1 - first];
        assert!((half_cell - 0.5 * grid.dx).abs() < 1e-15);
        let total: f64 = w.iter().sum();
        assert!((total - 0.45).abs() < 1e-14);
    }

    #[test]
    fn interval_weights_integrate_linears_exactly() {
        let grid = Grid1D::centered(100, 0.05, 0.025);
        let (first, w) = interval_weights(&grid, -1.234, 2.0101).unwrap();
        let v: f64 = w
            .iter()
            .enumerate()
            .map(|(k, w)| w * (3.0 * grid.x(first + k) - 1.0))
            .sum();
        let exact = |x: f64| 1.5 * x * x - x;
        assert!((v - (exact(2.0101) - exact(-1.234))).abs() < 1e-12);
    }

    #[test]
    fn region_pieces() {
        let r = RegionSpec::Interior { a: 2.0, b: 4.0 };
        let p = r.pieces();
        assert_eq!(p.len(), 3);
        assert_eq!(r.t_range(), (0.0, 3.0));
        assert_eq!(r.bounds_at(0.5), Some((-0.5, 0.5)));
        assert_eq!(r.bounds_at(1.5), Some((-0.5, 1.5)));
        assert_eq!(r.bounds_at(2.5), Some((0.5, 1.5)));
        let r = RegionSpec::Exterior { a: 1.0, b: 5.0 };
        assert_eq!(r.bounds_at(2.0), Some((3.0, 3.0)));
        assert!(RegionSpec::Exterior { a: 2.0, b: 1.0 }.validate().is_err());
        let grid = Grid1D::centered(10, 0.1, 0.05);
        assert!(region_mask(&grid, 0.0, &RegionSpec::Sigma { r: 5.0, t_end: 1.0 }).is_err());
    }
}
