//! Time stepping.
//!
//! The default `sv` scheme treats the nonlinearity with the discrete gradient
//! `G(phi^{n+1}, phi^{n-1})` and conserves [`discrete_energy`] up to the root
//! solve tolerance. `leapfrog` evaluates the force explicitly at `phi^n`.

mod gradient;
mod oracle;

use serde::{Deserialize, Serialize};

pub(crate) use gradient::DiscreteGradient;
pub use gradient::MIDPOINT_SWITCH;
pub use oracle::{dalembert_eval, reference_step, ReferenceState};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::params::ModelParams;
use crate::state::FieldState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    /// Energy conserving, implicit in the nonlinearity.
    #[default]
    Sv,
    /// Explicit nonlinearity.
    Leapfrog,
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sv" => Ok(SchemeKind::Sv),
            "leapfrog" => Ok(SchemeKind::Leapfrog),
            other => Err(Error::param("scheme", format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeChoice {
    pub kind: SchemeKind,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl Default for SchemeChoice {
    fn default() -> Self {
        Self {
            kind: SchemeKind::Sv,
            newton_tol: 1e-12,
            newton_max_iter: 50,
        }
    }
}

impl SchemeChoice {
    pub fn leapfrog() -> Self {
        Self {
            kind: SchemeKind::Leapfrog,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0) {
            return Err(Error::param("newton_tol", "must be > 0"));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::param("newton_max_iter", "must be >= 1"));
        }
        Ok(())
    }
}

/// Centered second difference times `dx^2`, in an order that is symmetric
/// under `j -> n-1-j`.
#[inline]
fn second_diff(u: &[f64], j: usize) -> f64 {
    (u[j + 1] + u[j - 1]) - 2.0 * u[j]
}

/// Builds the two starting levels from `(phi0, phi1)` with the second-order
/// Taylor start `phi^{-1} = phi0 - dt phi1 + dt^2/2 (D2 phi0 - N(phi0))`.
pub fn init_state(
    phi0: &[f64],
    phi1: &[f64],
    params: &ModelParams,
    grid: &Grid1D,
) -> Result<FieldState> {
    for len in [phi0.len(), phi1.len()] {
        if len != grid.n {
            return Err(Error::LengthMismatch {
                expected: grid.n,
                got: len,
            });
        }
    }
    let n = grid.n;
    let dt = grid.dt;
    let lam2 = (dt / grid.dx).powi(2);
    let mut prev = vec![0.0; n];
    for j in 1..n.saturating_sub(1) {
        let accel_dt2 = lam2 * second_diff(phi0, j) - dt * dt * params.force(phi0[j]);
        prev[j] = phi0[j] - dt * phi1[j] + 0.5 * accel_dt2;
    }
    let mut g = grid.clone();
    g.set_step(0);
    FieldState::new(prev, phi0.to_vec(), g)
}

/// Advances `state` by one step in place.
pub fn step_in_place(
    state: &mut FieldState,
    params: &ModelParams,
    scheme: &SchemeChoice,
    scratch: &mut Vec<f64>,
) -> Result<()> {
    let n = state.grid.n;
    if scratch.len() != n {
        *scratch = vec![0.0; n];
    }
    let Some((lo, hi)) = state.active else {
        // zero state stays zero
        state.grid.advance();
        std::mem::swap(&mut state.phi_prev, &mut state.phi_curr);
        return Ok(());
    };
    if n < 3 {
        state.grid.advance();
        return Ok(());
    }
    let from = lo.saturating_sub(1).max(1);
    let to = (hi + 1).min(n - 2);
    let dt = state.grid.dt;
    let dt2 = dt * dt;
    let lam2 = (dt / state.grid.dx).powi(2);
    let curr = &state.phi_curr;
    let prev = &state.phi_prev;
    let next = scratch.as_mut_slice();
    // entries outside [from, to] are zero in both levels, and so in `next`
    next[..from].fill(0.0);
    next[to + 1..].fill(0.0);
    let dgrad = DiscreteGradient::new(params);
    let step = state.grid.step_index;
    for j in from..=to {
        let c = 2.0 * curr[j] - prev[j] + lam2 * second_diff(curr, j);
        let mut w = match scheme.kind {
            SchemeKind::Sv => solve_node(&dgrad, c, prev[j], dt2, scheme, j)?,
            SchemeKind::Leapfrog => c - dt2 * params.force(curr[j]),
        };
        if !w.is_finite() {
            return Err(Error::NonFinite { node: j, step });
        }
        if w.abs() < f64::MIN_POSITIVE {
            // flush subnormals at the numerical front
            w = 0.0;
        }
        next[j] = w;
    }
    next[0] = 0.0;
    next[n - 1] = 0.0;

    // rotate levels: prev <- curr, curr <- next
    std::mem::swap(&mut state.phi_prev, &mut state.phi_curr);
    std::mem::swap(&mut state.phi_curr, scratch);
    state.grid.advance();

    let nz = |v: &f64| *v != 0.0;
    let new_lo = state.phi_curr[from..=to]
        .iter()
        .position(nz)
        .map(|k| k + from)
        .into_iter()
        .chain(state.phi_prev[lo..=hi].iter().position(nz).map(|k| k + lo))
        .min();
    let new_hi = state.phi_curr[from..=to]
        .iter()
        .rposition(nz)
        .map(|k| k + from)
        .into_iter()
        .chain(state.phi_prev[lo..=hi].iter().rposition(nz).map(|k| k + lo))
        .max();
    state.active = new_lo.zip(new_hi);
    Ok(())
}

#[inline]
fn solve_node(
    dgrad: &DiscreteGradient,
    c: f64,
    b: f64,
    dt2: f64,
    scheme: &SchemeChoice,
    j: usize,
) -> Result<f64> {
    gradient::solve_node(
        dgrad,
        c,
        b,
        dt2,
        scheme.newton_tol,
        scheme.newton_max_iter,
        j,
    )
    .map(|(w, _)| w)
}

/// Returns the state one step later.
pub fn step(state: &FieldState, params: &ModelParams, scheme: &SchemeChoice) -> Result<FieldState> {
    let mut next = state.clone();
    let mut scratch = Vec::new();
    step_in_place(&mut next, params, scheme, &mut scratch)?;
    Ok(next)
}

/// The discrete energy
///
/// ```text
/// E_h = dx sum_j [ (phi^n_j - phi^{n-1}_j)^2 / (2 dt^2)
///                + (phi^n_{j+1} - phi^n_j)(phi^{n-1}_{j+1} - phi^{n-1}_j) / (2 dx^2)
///                + (F(phi^n_j) + F(phi^{n-1}_j)) / 2 ]
/// ```
///
/// which the `sv` update conserves exactly in exact arithmetic.
pub fn discrete_energy(state: &FieldState, params: &ModelParams) -> f64 {
    discrete_energy_levels(
        &state.phi_prev,
        &state.phi_curr,
        &state.grid,
        params,
        state.active,
    )
}

/// [`discrete_energy`] of two explicit levels whose nonzero entries lie in
/// the inclusive node range `span`.
pub fn discrete_energy_levels(
    prv: &[f64],
    cur: &[f64],
    g: &Grid1D,
    params: &ModelParams,
    span: Option<(usize, usize)>,
) -> f64 {
    let inv_dt2 = 0.5 / (g.dt * g.dt);
    let inv_dx2 = 0.5 / (g.dx * g.dx);
    let (lo, hi) = match span {
        Some((lo, hi)) => (lo.saturating_sub(1), (hi + 1).min(g.n - 1)),
        None => return 0.0,
    };
    let mut sum = 0.0;
    for j in lo..=hi {
        let dtp = cur[j] - prv[j];
        let mut e =
            dtp * dtp * inv_dt2 + 0.5 * (params.potential(cur[j]) + params.potential(prv[j]));
        if j + 1 < g.n {
            e += (cur[j + 1] - cur[j]) * (prv[j + 1] - prv[j]) * inv_dx2;
        }
        sum += e;
    }
    sum * g.dx
}
