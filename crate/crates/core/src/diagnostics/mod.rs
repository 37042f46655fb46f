//! Stress tensor, integral diagnostics, flux audits and pointwise identities.
//!
//! Every diagnostic works on a [`Frame`]: `d_t phi` is the centered
//! difference across the three levels and `d_x phi` the centered difference
//! in space, so all quantities are second-order accurate.

mod audit;
mod flux;
mod identities;
mod multiplier;

pub use audit::{refinement_ratio, AuditPair, FluxAuditReport, FluxAuditor, SegmentFlux};
pub use flux::{interior_flux, null_flux_exterior, InteriorFluxReport, NullFluxReport, FLUX_SLACK};
pub use identities::{IdentityId, IdentityObserver, IdentityReport};
pub use multiplier::{Local, Multiplier, Stress};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::numfmt::csv_row;
use crate::params::ModelParams;
use crate::run::{Frame, Observer};
use crate::solver::discrete_energy_levels;

pub const DIAGNOSTICS_HEADER: &str =
    "t,E_int,E0_norm,potential,linf,morawetz_inc,morawetz_cum,gn_ratio";

/// Stress tensor components on the whole grid at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct StressRow {
    pub t: f64,
    pub t00: Vec<f64>,
    pub t01: Vec<f64>,
    pub t11: Vec<f64>,
    pub q: Vec<f64>,
}

pub fn stress_fields(frame: &Frame<'_>) -> StressRow {
    let n = frame.grid.n;
    let mut row = StressRow {
        t: frame.t(),
        t00: vec![0.0; n],
        t01: vec![0.0; n],
        t11: vec![0.0; n],
        q: vec![0.0; n],
    };
    for j in frame.support() {
        let s = Local::at(frame, j).stress(frame.params);
        row.t00[j] = s.t00;
        row.t01[j] = s.t01;
        row.t11[j] = s.t11;
        row.q[j] = s.q;
    }
    row
}

/// Worst violations of the algebraic stress invariants on one level.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StressCheck {
    /// `max |T00 - T11 - 2F| / max T00`.
    pub trace_residual: f64,
    /// `max |Q - (-2 L phi Lbar phi + 2|phi|^{p+1})| / max T00`.
    pub q_residual: f64,
    /// `max (|T01| - T00)`, nonpositive when `T00 >= |T01|` everywhere.
    pub dominance_excess: f64,
}

impl StressCheck {
    pub fn merge(&mut self, other: &StressCheck) {
        self.trace_residual = self.trace_residual.max(other.trace_residual);
        self.q_residual = self.q_residual.max(other.q_residual);
        self.dominance_excess = self.dominance_excess.max(other.dominance_excess);
    }
}

pub fn check_stress(frame: &Frame<'_>) -> StressCheck {
    let params = frame.params;
    let mut scale = 0.0f64;
    let (mut tr, mut qr) = (0.0f64, 0.0f64);
    let mut excess = f64::NEG_INFINITY;
    for j in frame.support() {
        let l = Local::at(frame, j);
        let s = l.stress(params);
        let f = params.potential(l.phi);
        scale = scale.max(s.t00);
        tr = tr.max((s.t00 - s.t11 - 2.0 * f).abs());
        let q_null = -2.0 * l.l() * l.lbar() + 2.0 * (params.p + 1.0) * f;
        qr = qr.max((s.q - q_null).abs());
        excess = excess.max(s.t01.abs() - s.t00);
    }
    let norm = |r: f64| if scale > 0.0 { r / scale } else { r };
    StressCheck {
        trace_residual: norm(tr),
        q_residual: norm(qr),
        dominance_excess: if excess.is_finite() { excess } else { 0.0 },
    }
}

/// One diagnostics record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    /// `int T00 dx`.
    pub e_int: f64,
    /// `2 int T00 dx`, the conventional energy norm.
    pub e0_norm: f64,
    /// `int |phi|^{p+1} dx`.
    pub potential: f64,
    pub linf: f64,
    pub morawetz_inc: f64,
    pub morawetz_cum: f64,
    /// `||phi||_inf^{p+3} / (int |phi|^{p+1} int |phi_x|^2)`.
    pub gn_ratio: f64,
}

impl DiagnosticsRow {
    pub fn values(&self) -> [f64; 8] {
        [
            self.t,
            self.e_int,
            self.e0_norm,
            self.potential,
            self.linf,
            self.morawetz_inc,
            self.morawetz_cum,
            self.gn_ratio,
        ]
    }

    pub fn to_csv(&self) -> String {
        csv_row(&self.values())
    }

    pub fn from_csv(line: &str) -> Result<Self> {
        let v: Vec<f64> = line
            .trim()
            .split(',')
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("bad diagnostics row `{line}`: {e}")))?;
        if v.len() != 8 {
            return Err(Error::Config(format!(
                "diagnostics row needs 8 columns: `{line}`"
            )));
        }
        Ok(Self {
            t: v[0],
            e_int: v[1],
            e0_norm: v[2],
            potential: v[3],
            linf: v[4],
            morawetz_inc: v[5],
            morawetz_cum: v[6],
            gn_ratio: v[7],
        })
    }
}

pub fn write_diagnostics_csv(path: &std::path::Path, rows: &[DiagnosticsRow]) -> Result<()> {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(DIAGNOSTICS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_diagnostics_csv(path: &std::path::Path) -> Result<Vec<DiagnosticsRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == DIAGNOSTICS_HEADER => {}
        _ => {
            return Err(Error::Config(format!(
                "{} lacks the diagnostics header",
                path.display()
            )))
        }
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(DiagnosticsRow::from_csv)
        .collect()
}

/// Energies, potential, sup norm and GN ratio of one frame. The Morawetz
/// columns are left at zero; [`DiagnosticsRecorder`] fills them.
pub fn norms_row(frame: &Frame<'_>) -> DiagnosticsRow {
    let params = frame.params;
    let dx = frame.grid.dx;
    let (mut e, mut pot, mut grad, mut linf) = (0.0, 0.0, 0.0, 0.0f64);
    for j in frame.support() {
        let l = Local::at(frame, j);
        e += l.stress(params).t00;
        pot += params.density(l.phi);
        grad += l.px * l.px;
        linf = linf.max(l.phi.abs());
    }
    let (e, pot, grad) = (e * dx, pot * dx, grad * dx);
    let denom = pot * grad;
    let gn_ratio = if denom > 0.0 {
        linf.powf(params.p + 3.0) / denom
    } else {
        0.0
    };
    DiagnosticsRow {
        t: frame.t(),
        e_int: e,
        e0_norm: 2.0 * e,
        potential: pot,
        linf,
        morawetz_inc: 0.0,
        morawetz_cum: 0.0,
        gn_ratio,
    }
}

/// `int_{|x| <= t+1} ((t+1)^2 - x^2) |phi|^{p+1} / (t+1)^3 dx`.
pub fn morawetz_integrand(frame: &Frame<'_>) -> Result<f64> {
    let t = frame.t();
    let ts = t + 1.0;
    weighted_integral(frame.grid, -ts, ts, frame.curr, |x, phi| {
        (ts * ts - x * x) * frame.params.density(phi) / (ts * ts * ts)
    })
}

/// `int_{|x| <= t+r} |phi|^{p+1} dx`.
pub fn local_potential(frame: &Frame<'_>, r: f64) -> Result<f64> {
    let h = frame.t() + r;
    weighted_integral(frame.grid, -h, h, frame.curr, |_, phi| {
        frame.params.density(phi)
    })
}

/// Integrates `f(x, phi(x))` over `[xl, xr]` with partial-cell weights.
fn weighted_integral<F: Fn(f64, f64) -> f64>(
    grid: &Grid1D,
    xl: f64,
    xr: f64,
    phi: &[f64],
    f: F,
) -> Result<f64> {
    let xl = xl.max(grid.x_min);
    let xr = xr.min(grid.x_max());
    let (first, w) = crate::nullgeom::interval_weights(grid, xl, xr)?;
    Ok(w.iter()
        .enumerate()
        .filter(|(k, _)| phi[first + k] != 0.0)
        .map(|(k, w)| w * f(grid.x(first + k), phi[first + k]))
        .sum())
}

/// Weighted initial energy
/// `E_gamma = int (1+|x|)^gamma (phi1^2 + phi0'^2 + 2 F(phi0)) dx`,
/// with `phi0'` from fourth-order centered differences.
pub fn weighted_energy(
    grid: &Grid1D,
    phi0: &[f64],
    phi1: &[f64],
    params: &ModelParams,
    gamma: f64,
) -> f64 {
    let n = grid.n;
    let dx = grid.dx;
    let mut sum = 0.0;
    for j in 0..n {
        let d = if j >= 2 && j + 2 < n {
            (8.0 * (phi0[j + 1] - phi0[j - 1]) - (phi0[j + 2] - phi0[j - 2])) / (12.0 * dx)
        } else if j >= 1 && j + 1 < n {
            (phi0[j + 1] - phi0[j - 1]) / (2.0 * dx)
        } else {
            0.0
        };
        let dens = phi1[j] * phi1[j] + d * d + 2.0 * params.potential(phi0[j]);
        if dens != 0.0 {
            sum += (1.0 + grid.x(j).abs()).powf(gamma) * dens;
        }
    }
    sum * dx
}

/// Streams diagnostics rows at a fixed cadence and integrates the Morawetz
/// functional over every step with the trapezoid rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsRecorder {
    pub every: u64,
    pub rows: Vec<DiagnosticsRow>,
    /// Worst stress invariant violations over all emitted rows.
    pub stress: StressCheck,
    morawetz_cum: f64,
    last_integrand: Option<f64>,
}

impl DiagnosticsRecorder {
    pub fn new(every: u64) -> Self {
        Self {
            every: every.max(1),
            rows: Vec::new(),
            stress: StressCheck::default(),
            morawetz_cum: 0.0,
            last_integrand: None,
        }
    }

    pub fn morawetz_cumulative(&self) -> f64 {
        self.morawetz_cum
    }
}

impl Observer for DiagnosticsRecorder {
    fn observe(&mut self, frame: &Frame<'_>) -> Result<()> {
        let dt = frame.grid.dt;
        let m = morawetz_integrand(frame)?;
        if let Some(prev) = self.last_integrand {
            self.morawetz_cum += 0.5 * dt * (prev + m);
        }
        self.last_integrand = Some(m);
        if frame.step() % self.every == 0 {
            let mut row = norms_row(frame);
            row.morawetz_inc = dt * m;
            row.morawetz_cum = self.morawetz_cum;
            self.rows.push(row);
            self.stress.merge(&check_stress(frame));
        }
        Ok(())
    }

    fn name(&self) -> String {
        "diagnostics".into()
    }

    fn checkpoint(&self) -> Option<serde_json::Value> {
        serde_json::to_value(self).ok()
    }

    fn restore(&mut self, state: &serde_json::Value) -> Result<()> {
        *self = serde_json::from_value(state.clone()).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}

/// Per-step series of `int_{|x|<=t+R} |phi|^{p+1}` for several `R`, from
/// which time averages over `[0, T]` are formed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AveragedPotential {
    pub radii: Vec<f64>,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl AveragedPotential {
    pub fn new(radii: &[f64]) -> Self {
        Self {
            radii: radii.to_vec(),
            times: Vec::new(),
            values: vec![Vec::new(); radii.len()],
        }
    }

    /// `(1/T) int_0^T int_{|x|<=t+R} |phi|^{p+1} dx dt`, trapezoid in time.
    pub fn average(&self, t_end: f64, r: f64) -> Result<f64> {
        let idx = self
            .radii
            .iter()
            .position(|&x| x == r)
            .ok_or_else(|| Error::param("R", format!("no series recorded for R = {r}")))?;
        averaged_potential(&self.times, &self.values[idx], t_end)
    }
}

/// Time average of a sampled series over `[times[0], t_end]`.
pub fn averaged_potential(times: &[f64], values: &[f64], t_end: f64) -> Result<f64> {
    let last = times.last().copied().unwrap_or(f64::NEG_INFINITY);
    if !(t_end > 0.0) || times.is_empty() || t_end > last + 1e-9 * (1.0 + last.abs()) {
        return Err(Error::ShortHistory(format!(
            "history ends at {last}, average requested to {t_end}"
        )));
    }
    let mut acc = 0.0;
    for k in 1..times.len() {
        if times[k] > t_end + 1e-12 * (1.0 + t_end) {
            break;
        }
        acc += 0.5 * (times[k] - times[k - 1]) * (values[k] + values[k - 1]);
    }
    Ok(acc / t_end)
}

impl Observer for AveragedPotential {
    fn observe(&mut self, frame: &Frame<'_>) -> Result<()> {
        self.times.push(frame.t());
        for (k, &r) in self.radii.iter().enumerate() {
            self.values[k].push(local_potential(frame, r)?);
        }
        Ok(())
    }

    fn name(&self) -> String {
        "averaged_potential".into()
    }

    fn checkpoint(&self) -> Option<serde_json::Value> {
        serde_json::to_value(self).ok()
    }

    fn restore(&mut self, state: &serde_json::Value) -> Result<()> {
        *self = serde_json::from_value(state.clone()).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}

/// Tracks energy drift, the light-cone support and the boundary band.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMonitor {
    /// Support radius of the data.
    pub r0: f64,
    /// Number of outermost nodes on each side treated as the boundary band.
    pub band: usize,
    pub e_h0: Option<f64>,
    /// `max_k |E_h(k) - E_h(0)| / E_h(0)`.
    pub max_rel_drift: f64,
    /// Largest `|phi|` outside `|x| <= r0 + t + 2 dx`.
    pub outside_cone: f64,
    /// Largest `|phi|` in the boundary band.
    pub band_max: f64,
    /// `max_t ||phi(t)||_inf`.
    pub linf_max: f64,
}

impl RunMonitor {
    pub fn new(r0: f64, band: usize) -> Self {
        Self {
            r0,
            band: band.max(1),
            e_h0: None,
            max_rel_drift: 0.0,
            outside_cone: 0.0,
            band_max: 0.0,
            linf_max: 0.0,
        }
    }
}

impl Observer for RunMonitor {
    fn observe(&mut self, frame: &Frame<'_>) -> Result<()> {
        let g = frame.grid;
        let e = discrete_energy_levels(frame.prev, frame.curr, g, frame.params, frame.span);
        match self.e_h0 {
            None => self.e_h0 = Some(e),
            Some(e0) => {
                let rel = if e0 != 0.0 {
                    ((e - e0) / e0).abs()
                } else {
                    e.abs()
                };
                self.max_rel_drift = self.max_rel_drift.max(rel);
            }
        }
        let reach = self.r0 + frame.t() + 2.0 * g.dx;
        let n = g.n;
        for j in frame.support() {
            let v = frame.curr[j].abs();
            if v == 0.0 {
                continue;
            }
            self.linf_max = self.linf_max.max(v);
            if g.x(j).abs() > reach {
                self.outside_cone = self.outside_cone.max(v);
            }
            if j < self.band || j >= n.saturating_sub(self.band) {
                self.band_max = self.band_max.max(v);
            }
        }
        Ok(())
    }

    fn name(&self) -> String {
        "monitor".into()
    }

    fn checkpoint(&self) -> Option<serde_json::Value> {
        serde_json::to_value(self).ok()
    }

    fn restore(&mut self, state: &serde_json::Value) -> Result<()> {
        *self = serde_json::from_value(state.clone()).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests;
