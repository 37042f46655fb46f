use crate::error::{Error, Result};
use crate::grid::Grid1D;

/// Two consecutive time levels of the field on a grid.
///
/// `phi_prev` holds the field at `t - dt` and `phi_curr` at `t = grid.t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub phi_prev: Vec<f64>,
    pub phi_curr: Vec<f64>,
    pub grid: Grid1D,
    /// Index range holding every nonzero entry of both levels.
    pub(crate) active: Option<(usize, usize)>,
}

impl FieldState {
    pub fn new(phi_prev: Vec<f64>, phi_curr: Vec<f64>, grid: Grid1D) -> Result<Self> {
        for len in [phi_prev.len(), phi_curr.len()] {
            if len != grid.n {
                return Err(Error::LengthMismatch {
                    expected: grid.n,
                    got: len,
                });
            }
        }
        let mut s = Self {
            phi_prev,
            phi_curr,
            grid,
            active: None,
        };
        s.refresh_active();
        Ok(s)
    }

    pub fn zeros(grid: Grid1D) -> Self {
        let n = grid.n;
        Self {
            phi_prev: vec![0.0; n],
            phi_curr: vec![0.0; n],
            grid,
            active: None,
        }
    }

    pub fn t(&self) -> f64 {
        self.grid.t
    }

    pub fn step_index(&self) -> u64 {
        self.grid.step_index
    }

    /// Recomputes the nonzero index range from scratch.
    pub(crate) fn refresh_active(&mut self) {
        let nz = |v: &f64| *v != 0.0;
        let lo = self
            .phi_prev
            .iter()
            .position(nz)
            .into_iter()
            .chain(self.phi_curr.iter().position(nz))
            .min();
        let hi = self
            .phi_prev
            .iter()
            .rposition(nz)
            .into_iter()
            .chain(self.phi_curr.iter().rposition(nz))
            .max();
        self.active = lo.zip(hi);
    }

    /// Time-reversed state: the same two levels with their roles swapped.
    /// Stepping the result walks back in time.
    pub fn reversed(&self) -> Self {
        Self {
            phi_prev: self.phi_curr.clone(),
            phi_curr: self.phi_prev.clone(),
            grid: self.grid.clone(),
            active: self.active,
        }
    }

    /// Largest `|phi_curr|` over the `band` outermost nodes on each side.
    pub fn boundary_band_max(&self, band: usize) -> f64 {
        let n = self.grid.n;
        let band = band.min(n);
        self.phi_curr[..band]
            .iter()
            .chain(&self.phi_curr[n - band..])
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn linf(&self) -> f64 {
        self.phi_curr.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}
