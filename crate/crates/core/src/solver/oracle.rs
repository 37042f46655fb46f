//! Independent oracles: the exact free wave and a classical RK4 integrator.

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::initial::{InitialDataSpec, Profile};
use crate::params::ModelParams;
use crate::quad;

/// Absolute tolerance of the d'Alembert quadrature.
const QUAD_TOL: f64 = 1e-12;

/// Exact free-wave solution for one initial data spec, with the profile
/// built once so that many evaluations stay cheap.
#[derive(Debug, Clone)]
pub struct FreeWave {
    profile: Profile,
    breaks: Vec<f64>,
    still: bool,
}

impl FreeWave {
    pub fn new(id: &InitialDataSpec) -> Result<Self> {
        let profile = id.profile()?;
        let breaks = profile.breakpoints();
        let still = id.velocity == 0.0
            && id.kind != crate::initial::DataKind::Table
            && id.kind != crate::initial::DataKind::RandomBumps;
        Ok(Self {
            profile,
            breaks,
            still,
        })
    }

    /// `(phi0(x-t) + phi0(x+t))/2 + 1/2 int_{x-t}^{x+t} phi1`. Negative `t` is allowed.
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let mut v = 0.5 * (self.profile.phi0(x - t) + self.profile.phi0(x + t));
        if !self.still && t != 0.0 {
            let f = |s: f64| self.profile.phi1(s);
            v += 0.5 * quad::integrate_split(&f, x - t, x + t, &self.breaks, QUAD_TOL);
        }
        v
    }
}

/// Exact solution of the free wave equation with data `id` at `(t, x)`.
pub fn dalembert_eval(id: &InitialDataSpec, t: f64, x: f64) -> Result<f64> {
    Ok(FreeWave::new(id)?.eval(t, x))
}

/// First-order state `(phi, psi = dt phi)` for the reference integrator.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceState {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub grid: Grid1D,
}

impl ReferenceState {
    pub fn new(phi: Vec<f64>, psi: Vec<f64>, grid: Grid1D) -> Result<Self> {
        for len in [phi.len(), psi.len()] {
            if len != grid.n {
                return Err(Error::LengthMismatch {
                    expected: grid.n,
                    got: len,
                });
            }
        }
        let mut grid = grid;
        grid.set_step(0);
        Ok(Self { phi, psi, grid })
    }

    pub fn from_initial(id: &InitialDataSpec, grid: &Grid1D) -> Result<Self> {
        let (phi, psi) = crate::initial::sample_initial_data(id, grid)?;
        Self::new(phi, psi, grid.clone())
    }

    fn norm(&self) -> f64 {
        self.phi
            .iter()
            .chain(&self.psi)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// `d/dt (phi, psi) = (psi, D2 phi - N(phi))` with zero Dirichlet ends.
fn rhs(
    phi: &[f64],
    psi: &[f64],
    params: &ModelParams,
    inv_dx2: f64,
    out_phi: &mut [f64],
    out_psi: &mut [f64],
) {
    let n = phi.len();
    out_phi.copy_from_slice(psi);
    out_phi[0] = 0.0;
    out_phi[n - 1] = 0.0;
    out_psi[0] = 0.0;
    out_psi[n - 1] = 0.0;
    for j in 1..n - 1 {
        out_psi[j] = ((phi[j + 1] + phi[j - 1]) - 2.0 * phi[j]) * inv_dx2 - params.force(phi[j]);
    }
}

/// One classical four-stage Runge-Kutta step of the method-of-lines system.
///
/// Fails with [`Error::Unstable`] when the max norm grows more than tenfold
/// in a single step.
pub fn reference_step(state: &ReferenceState, params: &ModelParams) -> Result<ReferenceState> {
    let n = state.grid.n;
    let mut next = state.clone();
    next.grid.advance();
    if n < 3 {
        return Ok(next);
    }
    let dt = state.grid.dt;
    let inv_dx2 = 1.0 / (state.grid.dx * state.grid.dx);
    let (phi, psi) = (&state.phi, &state.psi);

    let mut k = [(); 4].map(|_| (vec![0.0; n], vec![0.0; n]));
    let mut tmp_phi = vec![0.0; n];
    let mut tmp_psi = vec![0.0; n];
    let weights = [0.5, 0.5, 1.0];
    for s in 0..4 {
        if s == 0 {
            tmp_phi.copy_from_slice(phi);
            tmp_psi.copy_from_slice(psi);
        } else {
            let w = weights[s - 1] * dt;
            let (kp, kq) = &k[s - 1];
            for j in 0..n {
                tmp_phi[j] = phi[j] + w * kp[j];
                tmp_psi[j] = psi[j] + w * kq[j];
            }
        }
        let (kp, kq) = &mut k[s];
        rhs(&tmp_phi, &tmp_psi, params, inv_dx2, kp, kq);
    }
    let h6 = dt / 6.0;
    for j in 0..n {
        next.phi[j] = phi[j] + h6 * (k[0].0[j] + 2.0 * k[1].0[j] + 2.0 * k[2].0[j] + k[3].0[j]);
        next.psi[j] = psi[j] + h6 * (k[0].1[j] + 2.0 * k[1].1[j] + 2.0 * k[2].1[j] + k[3].1[j]);
    }
    let (before, after) = (state.norm(), next.norm());
    if !after.is_finite() || (before > 0.0 && after > 10.0 * before) {
        return Err(Error::Unstable {
            from: before,
            to: after,
        });
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{init_state, step_in_place, SchemeChoice};

    #[test]
    fn dalembert_values() {
        let id = InitialDataSpec::gaussian(1.0, std::f64::consts::FRAC_1_SQRT_2, 0.0);
        // width 1/sqrt(2) gives exp(-x^2)
        assert!((dalembert_eval(&id, 0.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((dalembert_eval(&id, 2.0, 0.0).unwrap() - (-4.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn velocity_only_bump_tends_to_half_mass() {
        // phi0 = 0 and phi1 = bump: use a packet-free construction through a table
        let bump = InitialDataSpec::bump(1.0, 1.0, 0.0).profile().unwrap();
        let mass = quad::integrate(&|x: f64| bump.phi0(x), -1.0, 1.0, 1e-14);
        let rows: Vec<_> = (0..=4000)
            .map(|k| {
                let x = -1.0 + k as f64 * 0.0005;
                crate::initial::TableRow {
                    x,
                    phi0: 0.0,
                    phi1: bump.phi0(x) / mass,
                }
            })
            .collect();
        let id = InitialDataSpec::table(rows);
        let v = dalembert_eval(&id, 50.0, 0.0).unwrap();
        assert!((v - 0.5).abs() < 1e-6, "{v}");
    }

    #[test]
    fn negative_time_is_time_reversal() {
        let id = InitialDataSpec::packet(1.0, 0.5, 0.0, 1.0);
        // a pure right mover: phi(t, x) = g(x - t)
        for (t, x) in [(-0.3, 0.2), (0.7, 1.0), (-2.0, -1.5)] {
            let g = (-(x - t) * (x - t) / 0.5f64).exp();
            assert!((dalembert_eval(&id, t, x).unwrap() - g).abs() < 1e-11);
        }
    }

    #[test]
    fn reference_zero_state() {
        let params = ModelParams::new(3.0, true).unwrap();
        let grid = Grid1D::centered(20, 0.1, 0.05);
        let s = ReferenceState::new(vec![0.0; grid.n], vec![0.0; grid.n], grid).unwrap();
        let s = reference_step(&s, &params).unwrap();
        assert!(s.phi.iter().chain(&s.psi).all(|&v| v == 0.0));
    }

    #[test]
    fn reference_detects_instability() {
        let params = ModelParams::new(3.0, false).unwrap();
        // dt far above the stability limit of RK4 with D2
        let grid = Grid1D::centered(50, 0.01, 1.0);
        let id = InitialDataSpec::gaussian(1.0, 0.05, 0.0);
        let mut s = ReferenceState::from_initial(&id, &grid).unwrap();
        let mut failed = false;
        for _ in 0..5 {
            match reference_step(&s, &params) {
                Ok(next) => s = next,
                Err(Error::Unstable { .. }) => {
                    failed = true;
                    break;
                }
                Err(e) => panic!("{e}"),
            }
        }
        assert!(failed);
    }

    #[test]
    fn sv_agrees_with_reference() {
        for (p, linear) in [(3.0, false), (3.0, true)] {
            let params = ModelParams::new(p, linear).unwrap();
            let id = InitialDataSpec::gaussian(1.0, 0.5, 0.0);
            let dx = 0.02;
            let grid = Grid1D::centered(200, dx, 0.5 * dx);
            let (p0, p1) = crate::initial::sample_initial_data(&id, &grid).unwrap();
            let mut sv = init_state(&p0, &p1, &params, &grid).unwrap();
            let mut rk = ReferenceState::from_initial(&id, &grid).unwrap();
            let steps = (1.0 / grid.dt).round() as usize;
            let mut scratch = Vec::new();
            for _ in 0..steps {
                step_in_place(&mut sv, &params, &SchemeChoice::default(), &mut scratch).unwrap();
                rk = reference_step(&rk, &params).unwrap();
            }
            let scale = p0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let err = sv
                .phi_curr
                .iter()
                .zip(&rk.phi)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            let bound = 5.0 * (dx * dx + grid.dt * grid.dt) * scale;
            assert!(
                err <= bound,
                "p={p} nonlinear={linear}: {err:e} > {bound:e}"
            );
        }
    }
}
