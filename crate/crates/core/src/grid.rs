use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::initial::InitialDataSpec;

/// Default Courant number `dt/dx`.
pub const DEFAULT_CFL: f64 = 0.5;

/// Grids larger than this are refused unless a different cap is passed.
pub const DEFAULT_NODE_CAP: usize = 20_000_000;

/// Uniform grid on `[-m dx, m dx]` with `n = 2m + 1` nodes, so `x = 0` is a node
/// and node positions are exactly symmetric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x_min: f64,
    pub dx: f64,
    pub n: usize,
    pub dt: f64,
    pub t: f64,
    pub step_index: u64,
}

impl Grid1D {
    /// A symmetric grid with `half` cells on either side of the origin.
    pub fn centered(half: usize, dx: f64, dt: f64) -> Self {
        Self {
            x_min: -(half as f64) * dx,
            dx,
            n: 2 * half + 1,
            dt,
            t: 0.0,
            step_index: 0,
        }
    }

    pub fn half_cells(&self) -> usize {
        (self.n - 1) / 2
    }

    /// Position of node `j`, computed from the signed offset so that
    /// `x(n-1-j) == -x(j)` bitwise.
    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        (j as f64 - self.half_cells() as f64) * self.dx
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.n - 1)
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Time of step `k` on this grid.
    #[inline]
    pub fn time_of(&self, k: u64) -> f64 {
        k as f64 * self.dt
    }

    pub fn cfl(&self) -> f64 {
        self.dt / self.dx
    }

    /// Fractional node coordinate of position `x`.
    #[inline]
    pub fn coord(&self, x: f64) -> f64 {
        x / self.dx + self.half_cells() as f64
    }

    /// Advances the clock by one step.
    pub fn advance(&mut self) {
        self.step_index += 1;
        self.t = self.time_of(self.step_index);
    }

    /// Sets the clock to step `k`.
    pub fn set_step(&mut self, k: u64) {
        self.step_index = k;
        self.t = self.time_of(k);
    }
}

/// Sizes a grid so that the forward light cone of the data support stays
/// `pad` away from the edges up to `t_end`. `pad` defaults to (and is never
/// smaller than) `4 dx`.
pub fn build_grid(id: &InitialDataSpec, t_end: f64, dx: f64, cfl: f64) -> Result<Grid1D> {
    build_grid_with(id, t_end, dx, cfl, None, DEFAULT_NODE_CAP)
}

pub fn build_grid_with(
    id: &InitialDataSpec,
    t_end: f64,
    dx: f64,
    cfl: f64,
    pad: Option<f64>,
    node_cap: usize,
) -> Result<Grid1D> {
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::param("t_end", format!("must be >= 0, got {t_end}")));
    }
    if !(dx > 0.0) || !dx.is_finite() {
        return Err(Error::param("dx", format!("must be > 0, got {dx}")));
    }
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::param(
            "cfl",
            format!("must lie in (0, 1], got {cfl}"),
        ));
    }
    let pad = pad.unwrap_or(4.0 * dx).max(4.0 * dx);
    let extent = id.support_extent()?;
    let half_width = if extent == 0.0 && id.is_zero() {
        pad
    } else {
        extent + t_end + pad
    };
    // tolerate representation error in e.g. 11.04 / 0.01
    let half = (half_width / dx - 1e-9).ceil().max(1.0);
    let n = 2.0 * half + 1.0;
    if n > node_cap as f64 {
        return Err(Error::GridTooLarge {
            n: if n > usize::MAX as f64 {
                usize::MAX
            } else {
                n as usize
            },
            cap: node_cap,
        });
    }
    Ok(Grid1D::centered(half as usize, dx, cfl * dx))
}
