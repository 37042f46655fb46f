//! End-to-end experiments: a simulation with the standard instruments
//! attached, flux and identity audits replayed from a start state, and
//! decay-rate reports built from the recorded diagnostics.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{
    classical_gn_bound, exponent_catalog, fit_loglog, gn_check, lemma_gn_bound,
    uniform_bound_constant, ExponentSet, GNParams, GnCheck, RateFit, WeightedSupRecorder,
    WeightedSups,
};
use crate::config::{AuditPlan, Resolved};
use crate::diagnostics::{
    interior_flux, null_flux_exterior, read_diagnostics_csv, refinement_ratio, weighted_energy,
    write_diagnostics_csv, AuditPair, AveragedPotential, DiagnosticsRecorder, DiagnosticsRow,
    FluxAuditReport, FluxAuditor, IdentityId, IdentityObserver, IdentityReport, InteriorFluxReport,
    NullFluxReport, RunMonitor, StressCheck,
};
use crate::error::{Error, Result};
use crate::grid::{build_grid_with, Grid1D, DEFAULT_NODE_CAP};
use crate::initial::sample_initial_data;
use crate::nullgeom::{CharacteristicTrace, Direction, TraceRecorder};
use crate::run::{resume_state, run, Observer, Persistence, RunControl};
use crate::snapshot;
use crate::solver::init_state;
use crate::state::FieldState;

/// Outer nodes on each side watched for boundary contamination.
pub const BOUNDARY_BAND: usize = 4;
/// Tolerance of the slope comparison in rate verdicts.
pub const RATE_TOL: f64 = 0.05;
/// Allowed factor between weighted sups at `dx` and `dx/2`.
pub const SUP_REFINE_FACTOR: f64 = 2.0;

pub const SUMMARY_FILE: &str = "summary.toml";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const CONFIG_FILE: &str = "config.json";
pub const REFINED_DIR: &str = "refined";

/// Half-line GN check on one characteristic trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceGn {
    pub a: f64,
    pub direction: Direction,
    pub check: GnCheck,
}

/// Self-contained record of one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub dx: f64,
    pub dt: f64,
    pub t_end: f64,
    pub nodes: usize,
    pub support_radius: f64,
    /// `E_0 = int (phi1^2 + phi0'^2 + 2F(phi0))`.
    pub e0: f64,
    pub e1: f64,
    pub e_gamma: f64,
    pub final_row: DiagnosticsRow,
    pub energy_drift: f64,
    pub stress: StressCheck,
    pub outside_cone: f64,
    pub band_max: f64,
    pub linf_max: f64,
    pub uniform_constant: f64,
    pub morawetz_half: f64,
    pub morawetz_end: f64,
    pub morawetz_monotone: bool,
    pub potential_t1: f64,
    pub potential_end: f64,
    pub linf_end: f64,
    pub averaged_end: f64,
    pub averaged_25: Option<f64>,
    pub gn_ratio_max: f64,
    pub gn_ratio_bound: f64,
    pub sups: WeightedSups,
    /// Sups over `t <= t_end / 2`, to check they stop growing.
    pub sups_half: WeightedSups,
    pub exterior_flux: Vec<NullFluxReport>,
    pub interior_flux: Vec<InteriorFluxReport>,
    pub trace_gn: Vec<TraceGn>,
    pub verdicts: BTreeMap<String, bool>,
}

impl RunSummary {
    pub fn passed(&self) -> bool {
        self.verdicts.values().all(|v| *v)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_toml(path, self)
    }

    pub fn read(path: &Path) -> Result<Self> {
        read_toml(path)
    }
}

pub(crate) fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text =
        toml::to_string(value).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))
}

/// Everything a simulation produced, in memory.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub summary: RunSummary,
    pub rows: Vec<DiagnosticsRow>,
    pub traces: Vec<CharacteristicTrace>,
    pub sups: WeightedSupRecorder,
    pub averaged: AveragedPotential,
    pub final_state: Option<FieldState>,
}

/// The recorders attached to every simulation.
struct Instruments {
    diag: DiagnosticsRecorder,
    monitor: RunMonitor,
    averaged: AveragedPotential,
    traces: Vec<TraceRecorder>,
    sups: WeightedSupRecorder,
}

impl Instruments {
    fn new(res: &Resolved, r0: f64) -> Self {
        let mut traces = Vec::new();
        for &a in &res.offsets {
            traces.push(TraceRecorder::new(a, Direction::Outgoing));
            traces.push(TraceRecorder::new(a, Direction::Incoming));
        }
        for &a in &res.interior_offsets {
            if a <= res.t_end {
                traces.push(TraceRecorder::new(a, Direction::InteriorOutgoing));
            }
        }
        Self {
            diag: DiagnosticsRecorder::new(res.every),
            monitor: RunMonitor::new(r0, BOUNDARY_BAND),
            averaged: AveragedPotential::new(&[res.mp.r]),
            traces,
            sups: WeightedSupRecorder::new(
                vec![ExponentSet::new(res.params.p, res.mp.alpha, res.mp.beta)],
                res.every,
            ),
        }
    }

    fn observers(&mut self) -> Vec<&mut dyn Observer> {
        let mut v: Vec<&mut dyn Observer> = vec![
            &mut self.diag,
            &mut self.monitor,
            &mut self.averaged,
            &mut self.sups,
        ];
        for t in &mut self.traces {
            v.push(t);
        }
        v
    }
}

/// Pad that keeps every characteristic trace and audit region on the grid,
/// on top of the usual finite-speed sizing.
pub fn instrument_pad(res: &Resolved) -> Result<Option<f64>> {
    let traces = res.offsets.iter().fold(0.0f64, |m, a| m.max(a + res.t_end));
    let regions = res
        .audit
        .items
        .iter()
        .fold(0.0f64, |m, (_, r)| m.max(r.x_extent()));
    let need = traces.max(regions) + 4.0 * res.dx;
    let base = if res.initial.is_zero() {
        0.0
    } else {
        res.initial.support_extent()? + res.t_end
    };
    let pad = res.pad.unwrap_or(4.0 * res.dx);
    Ok(if base + pad >= need {
        res.pad
    } else {
        Some(need - base)
    })
}

/// Grid, data and starting state for a resolved config.
pub fn setup(res: &Resolved) -> Result<(Grid1D, Vec<f64>, Vec<f64>, FieldState)> {
    let pad = instrument_pad(res)?;
    let grid = build_grid_with(
        &res.initial,
        res.t_end,
        res.dx,
        res.cfl,
        pad,
        DEFAULT_NODE_CAP,
    )?;
    let (phi0, phi1) = sample_initial_data(&res.initial, &grid)?;
    let state = init_state(&phi0, &phi1, &res.params, &grid)?;
    Ok((grid, phi0, phi1, state))
}

/// Runs a resolved config with all instruments. With `out`, snapshots,
/// diagnostics, traces and the summary are written there; with `resume`
/// the run continues from the latest snapshot in `out`.
pub fn simulate(
    res: &Resolved,
    out: Option<&Path>,
    resume: bool,
    control: RunControl,
) -> Result<RunArtifacts> {
    let (grid, phi0, phi1, fresh) = setup(res)?;
    let r0 = res.initial.support_radius()?;
    let mut inst = Instruments::new(res, r0);
    let hash = res.config_hash();
    let persist = out.map(|dir| Persistence {
        dir: dir.to_path_buf(),
        every: res.snapshot_every,
        config_hash: hash.clone(),
    });
    let state = match (&persist, resume) {
        (Some(p), true) => resume_state(p, u64::MAX, &mut inst.observers())?,
        _ => fresh,
    };
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let cfg = dir.join(CONFIG_FILE);
        let json = serde_json::to_string_pretty(res).expect("resolved config serializes");
        std::fs::write(&cfg, json).map_err(|e| Error::io(&cfg, e))?;
    }
    let outcome = {
        let mut obs = inst.observers();
        run(
            state,
            &res.params,
            &res.scheme,
            res.t_end,
            &mut obs,
            persist.as_ref(),
            control,
        )?
    };
    if !outcome.completed {
        return Err(Error::ShortHistory(format!(
            "run stopped at step {}",
            outcome.last_step
        )));
    }
    let e0 = weighted_energy(&grid, &phi0, &phi1, &res.params, 0.0);
    let e1 = weighted_energy(&grid, &phi0, &phi1, &res.params, 1.0);
    let e_gamma = weighted_energy(&grid, &phi0, &phi1, &res.params, res.mp.gamma);
    let summary = summarize(res, &hash, &grid, r0, (e0, e1, e_gamma), &inst)?;
    let artifacts = RunArtifacts {
        summary,
        rows: inst.diag.rows.clone(),
        traces: inst.traces.iter().map(|t| t.trace.clone()).collect(),
        sups: inst.sups.clone(),
        averaged: inst.averaged.clone(),
        final_state: outcome.final_state,
    };
    if let Some(dir) = out {
        write_artifacts(dir, &artifacts)?;
    }
    Ok(artifacts)
}

fn write_artifacts(dir: &Path, a: &RunArtifacts) -> Result<()> {
    write_diagnostics_csv(&dir.join(DIAGNOSTICS_FILE), &a.rows)?;
    let tdir = dir.join("traces");
    std::fs::create_dir_all(&tdir).map_err(|e| Error::io(&tdir, e))?;
    for t in &a.traces {
        t.write_csv(&tdir.join(format!("{}_a{}.csv", t.direction, t.a)))?;
    }
    a.summary.write(&dir.join(SUMMARY_FILE))
}

/// Row whose time is closest to `t`.
pub fn row_near(rows: &[DiagnosticsRow], t: f64) -> Option<&DiagnosticsRow> {
    rows.iter()
        .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
}

fn summarize(
    res: &Resolved,
    hash: &str,
    grid: &Grid1D,
    r0: f64,
    (e0, e1, e_gamma): (f64, f64, f64),
    inst: &Instruments,
) -> Result<RunSummary> {
    let p = res.params.p;
    let rows = &inst.diag.rows;
    let final_row = *rows
        .last()
        .ok_or_else(|| Error::ShortHistory("no diagnostics rows".into()))?;
    let t_end = res.t_end;
    let half = row_near(rows, t_end / 2.0).map_or(0.0, |r| r.morawetz_cum);
    let morawetz_monotone = rows
        .windows(2)
        .all(|w| w[1].morawetz_cum >= w[0].morawetz_cum);
    let potential_t1 = row_near(rows, 1.0).map_or(0.0, |r| r.potential);
    let averaged_end = if t_end > 0.0 {
        inst.averaged.average(t_end, res.mp.r)?
    } else {
        0.0
    };
    let averaged_25 = if t_end >= 25.0 {
        Some(inst.averaged.average(25.0, res.mp.r)?)
    } else {
        None
    };
    let gn_ratio_max = rows.iter().map(|r| r.gn_ratio).fold(0.0, f64::max);

    let mut exterior_flux = Vec::new();
    let mut interior = Vec::new();
    let mut trace_gn = Vec::new();
    for tr in &inst.traces {
        let t = &tr.trace;
        if t.direction == Direction::InteriorOutgoing {
            interior.push(interior_flux(t, &res.params, &res.mp)?);
            continue;
        }
        exterior_flux.push(null_flux_exterior(t, &res.params, e1, e0)?);
        if t.samples.len() >= 3 {
            let times: Vec<f64> = t.samples.iter().map(|s| s.t).collect();
            let g: Vec<f64> = t.samples.iter().map(|s| s.phi).collect();
            let dg: Vec<f64> = t.samples.iter().map(|s| s.dphi).collect();
            let gnp = GNParams {
                a1: 0.0,
                a2: t.a + 1.0,
                mu1: 1.0,
                mu2: 0.0,
                p,
            };
            trace_gn.push(TraceGn {
                a: t.a,
                direction: t.direction,
                check: gn_check(&times, &g, Some(&dg), &gnp)?,
            });
        }
    }
    let sups = inst.sups.sups()[0];
    let sups_half = inst.sups.sups_until(t_end / 2.0)[0];

    let mut verdicts = BTreeMap::new();
    let m = &inst.monitor;
    verdicts.insert("energy_conservation".into(), m.max_rel_drift <= 1e-6);
    verdicts.insert(
        "stress_invariants".into(),
        inst.diag.stress.trace_residual <= 1e-13 && inst.diag.stress.q_residual <= 1e-13,
    );
    verdicts.insert(
        "finite_speed".into(),
        m.outside_cone < 1e-10 && m.band_max < 1e-10,
    );
    verdicts.insert("morawetz_monotone".into(), morawetz_monotone);
    if t_end >= 2.0 {
        verdicts.insert(
            "morawetz_plateau".into(),
            final_row.morawetz_cum - half <= 0.05 * half,
        );
    }
    verdicts.insert(
        "exterior_flux_bounds".into(),
        exterior_flux.iter().all(|r| r.satisfied()),
    );
    verdicts.insert(
        "gn_ratio_bounded".into(),
        gn_ratio_max <= classical_gn_bound(p),
    );
    verdicts.insert(
        "trace_gn_bounded".into(),
        trace_gn
            .iter()
            .all(|g| g.check.implied_constant <= lemma_gn_bound(p)),
    );
    if let Some(a25) = averaged_25 {
        verdicts.insert(
            "potential_decay".into(),
            final_row.potential <= 0.5 * potential_t1,
        );
        verdicts.insert("linf_decay".into(), final_row.linf <= 0.5 * m.linf_max);
        verdicts.insert("averaged_potential_decay".into(), averaged_end <= 0.5 * a25);
    }
    if interior.len() > 1 {
        let sums: Vec<f64> = interior.iter().map(|r| r.sum).collect();
        let (lo, hi) = sums
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(l, h), s| (l.min(*s), h.max(*s)));
        verdicts.insert("interior_flux_uniform".into(), lo > 0.0 && hi / lo <= 20.0);
    }
    let catalog = exponent_catalog(&res.params, &res.mp);
    verdicts.insert(
        "exponent_algebra".into(),
        catalog.half_beta_matches_uniform && catalog.symmetric_matches,
    );

    Ok(RunSummary {
        config_hash: hash.to_string(),
        p,
        alpha: res.mp.alpha,
        beta: res.mp.beta,
        gamma: res.mp.gamma,
        r: res.mp.r,
        dx: grid.dx,
        dt: grid.dt,
        t_end,
        nodes: grid.n,
        support_radius: r0,
        e0,
        e1,
        e_gamma,
        final_row,
        energy_drift: m.max_rel_drift,
        stress: inst.diag.stress,
        outside_cone: m.outside_cone,
        band_max: m.band_max,
        linf_max: m.linf_max,
        uniform_constant: uniform_bound_constant(m.linf_max, e0, p),
        morawetz_half: half,
        morawetz_end: final_row.morawetz_cum,
        morawetz_monotone,
        potential_t1,
        potential_end: final_row.potential,
        linf_end: final_row.linf,
        averaged_end,
        averaged_25,
        gn_ratio_max,
        gn_ratio_bound: classical_gn_bound(p),
        sups,
        sups_half,
        exterior_flux,
        interior_flux: interior,
        trace_gn,
        verdicts,
    })
}

// ---------------------------------------------------------------------------
// audits

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditResult {
    pub dx: f64,
    pub audits: Vec<FluxAuditReport>,
    pub identities: Vec<IdentityReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityPair {
    pub id: IdentityId,
    pub coarse: IdentityReport,
    pub fine: IdentityReport,
    pub ratio: f64,
}

/// Audits at `dx` and `dx/2` with convergence verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditComparison {
    pub audits: Vec<AuditPair>,
    pub identities: Vec<IdentityPair>,
    /// Smallest ratio any residual must reach.
    pub min_ratio: f64,
    pub verdicts: BTreeMap<String, bool>,
}

pub const MIN_REFINE_RATIO: f64 = 1.5;

/// Replays the run from `start` up to the plan's horizon with the audit
/// observers attached.
pub fn audit_from(res: &Resolved, plan: &AuditPlan, start: FieldState) -> Result<AuditResult> {
    let horizon = plan.horizon();
    if horizon > res.t_end + 1e-9 {
        return Err(Error::ShortHistory(format!(
            "audits need t = {horizon}, the run ends at {}",
            res.t_end
        )));
    }
    let mut auditors: Vec<FluxAuditor> = plan
        .items
        .iter()
        .map(|(m, r)| FluxAuditor::new(*m, *r, res.mp))
        .collect::<Result<_>>()?;
    let (lo, hi) = plan.identity_window;
    let mut ident = IdentityObserver::new(&IdentityId::ALL, res.mp, lo, hi);
    {
        let mut obs: Vec<&mut dyn Observer> = auditors
            .iter_mut()
            .map(|a| a as &mut dyn Observer)
            .collect();
        obs.push(&mut ident);
        run(
            start,
            &res.params,
            &res.scheme,
            horizon,
            &mut obs,
            None,
            RunControl::default(),
        )?;
    }
    Ok(AuditResult {
        dx: res.dx,
        audits: auditors.iter().map(|a| a.report()).collect::<Result<_>>()?,
        identities: ident.reports()?,
    })
}

/// Audits a fresh start of `res` on a grid sized for the audit horizon.
pub fn audit_fresh(res: &Resolved, plan: &AuditPlan) -> Result<AuditResult> {
    let mut short = res.clone();
    short.t_end = plan.horizon();
    short.audit = plan.clone();
    let (_, _, _, state) = setup(&short)?;
    audit_from(&short, plan, state)
}

pub fn compare_audits(coarse: &AuditResult, fine: &AuditResult) -> AuditComparison {
    let audits: Vec<AuditPair> = coarse
        .audits
        .iter()
        .zip(&fine.audits)
        .map(|(c, f)| AuditPair::new(c.clone(), f.clone()))
        .collect();
    let identities: Vec<IdentityPair> = coarse
        .identities
        .iter()
        .zip(&fine.identities)
        .map(|(c, f)| IdentityPair {
            id: c.id,
            coarse: c.clone(),
            fine: f.clone(),
            ratio: refinement_ratio(c.max_residual, f.max_residual),
        })
        .collect();
    let mut verdicts = BTreeMap::new();
    for a in &audits {
        verdicts.insert(
            format!("audit_{}", a.coarse.multiplier),
            a.ratio >= MIN_REFINE_RATIO,
        );
    }
    for i in &identities {
        verdicts.insert(format!("identity_{}", i.id), i.ratio >= MIN_REFINE_RATIO);
    }
    if let Some(i) = identities.iter().find(|i| i.id == IdentityId::Interior) {
        verdicts.insert(
            "interior_rhs_nonpositive".into(),
            i.coarse.rhs_max <= 0.0 && i.fine.rhs_max <= 0.0,
        );
    }
    AuditComparison {
        audits,
        identities,
        min_ratio: MIN_REFINE_RATIO,
        verdicts,
    }
}

/// Step-0 state stored in a run directory.
pub fn initial_snapshot(run_dir: &Path, res: &Resolved) -> Result<FieldState> {
    let path = crate::run::snapshot_path(&run_dir.join("snapshots"), 0);
    if !path.exists() {
        return Err(Error::Snapshot {
            path,
            reason: "missing; run `simulate` first".into(),
        });
    }
    let snap = snapshot::read(&path)?;
    if snap.config_hash != res.config_hash() {
        return Err(Error::Snapshot {
            path,
            reason: "config hash does not match the run's config".into(),
        });
    }
    Ok(snap.state)
}

/// Reads the resolved config a run directory was produced with.
pub fn load_run_config(run_dir: &Path) -> Result<Resolved> {
    let path = run_dir.join(CONFIG_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// rates

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupComparison {
    pub coarse: WeightedSups,
    pub fine: WeightedSups,
    /// `max(coarse/fine, fine/coarse)` per component.
    pub exterior_factor: f64,
    pub interior_factor: f64,
    pub stable: bool,
}

impl SupComparison {
    pub fn new(coarse: WeightedSups, fine: WeightedSups) -> Self {
        let factor = |a: f64, b: f64| {
            if a == 0.0 && b == 0.0 {
                1.0
            } else if a == 0.0 || b == 0.0 {
                f64::INFINITY
            } else {
                (a / b).max(b / a)
            }
        };
        let e = factor(coarse.exterior, fine.exterior);
        let i = factor(coarse.interior, fine.interior);
        Self {
            coarse,
            fine,
            exterior_factor: e,
            interior_factor: i,
            stable: e <= SUP_REFINE_FACTOR && i <= SUP_REFINE_FACTOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub p: f64,
    pub exponents: ExponentSet,
    pub linf_fit: RateFit,
    pub tolerance: f64,
    pub sups: Option<WeightedSups>,
    pub sups_refined: Option<SupComparison>,
    pub verdicts: BTreeMap<String, bool>,
}

/// Fits `||phi(t)||_inf` over the config's window and compares it with the
/// uniform decay exponent. Sups come from the run summaries when present.
pub fn rates(
    res: &Resolved,
    rows: &[DiagnosticsRow],
    summary: Option<&RunSummary>,
    refined: Option<&RunSummary>,
) -> Result<RateReport> {
    let exponents = ExponentSet::new(res.params.p, res.mp.alpha, res.mp.beta);
    let series: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.linf)).collect();
    let fit = fit_loglog(&series, res.fit_window, exponents.uniform)?;
    let mut verdicts = BTreeMap::new();
    verdicts.insert("uniform_decay".into(), fit.within(RATE_TOL));
    let sups = summary.map(|s| s.sups);
    if let Some(s) = sups {
        verdicts.insert(
            "sups_finite".into(),
            s.exterior.is_finite() && s.interior.is_finite(),
        );
    }
    let sups_refined = match (summary, refined) {
        (Some(c), Some(f)) => Some(SupComparison::new(c.sups, f.sups)),
        _ => None,
    };
    if let Some(c) = &sups_refined {
        verdicts.insert("sups_refinement_stable".into(), c.stable);
    }
    Ok(RateReport {
        p: res.params.p,
        exponents,
        linf_fit: fit,
        tolerance: RATE_TOL,
        sups,
        sups_refined,
        verdicts,
    })
}

/// Loads the pieces of a run directory that [`rates`] needs.
pub fn rates_for_dir(run_dir: &Path) -> Result<RateReport> {
    let res = load_run_config(run_dir)?;
    let csv = run_dir.join(DIAGNOSTICS_FILE);
    let empty = std::fs::metadata(&csv)
        .map(|m| m.len() == 0)
        .unwrap_or(true);
    if empty {
        return Err(Error::ShortHistory(format!(
            "{} is missing or empty",
            csv.display()
        )));
    }
    let rows = read_diagnostics_csv(&csv)?;
    if rows.is_empty() {
        return Err(Error::ShortHistory(format!(
            "{} has no rows",
            csv.display()
        )));
    }
    let summary = optional_summary(&run_dir.join(SUMMARY_FILE))?;
    let refined = optional_summary(&run_dir.join(REFINED_DIR).join(SUMMARY_FILE))?;
    rates(&res, &rows, summary.as_ref(), refined.as_ref())
}

fn optional_summary(path: &Path) -> Result<Option<RunSummary>> {
    if path.exists() {
        RunSummary::read(path).map(Some)
    } else {
        Ok(None)
    }
}

pub fn refined_dir(run_dir: &Path) -> PathBuf {
    run_dir.join(REFINED_DIR)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;

    fn short(t_end: f64) -> Resolved {
        RunConfig::from_toml(&format!(
            "p = 3.0\nalpha = 0.6666666666666666\ndx = 0.02\nt_end = {t_end}\n[characteristics]\ninterior_offsets = [1.0, 2.0]\n"
        ))
        .unwrap()
        .resolve()
        .unwrap()
    }

    #[test]
    fn short_run_summary_is_consistent() {
        let res = short(4.0);
        let a = simulate(&res, None, false, RunControl::default()).unwrap();
        let s = &a.summary;
        assert_eq!(
            a.rows.len() as u64,
            4.0f64.div_euclid(0.01) as u64 / res.every + 1
        );
        assert!(s.energy_drift < 1e-10);
        assert!(s.verdicts["finite_speed"] && s.verdicts["stress_invariants"]);
        assert!(s.verdicts["exterior_flux_bounds"], "{:?}", s.exterior_flux);
        assert_eq!(s.exterior_flux.len(), 6);
        assert_eq!(s.interior_flux.len(), 2);
        assert!(s.sups.exterior > 0.0 && s.sups.interior > 0.0);
        assert!((s.e0 - 1.5128843).abs() < 1e-6);
    }

    #[test]
    fn summary_round_trips_through_toml() {
        let res = short(2.0);
        let a = simulate(&res, None, false, RunControl::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(SUMMARY_FILE);
        a.summary.write(&path).unwrap();
        assert_eq!(RunSummary::read(&path).unwrap(), a.summary);
    }

    #[test]
    fn audit_replay_matches_fresh_start() {
        let res = short(1.0);
        let mut plan = AuditPlan::default_for(1.0);
        plan.identity_window = (0.2, 0.6);
        let (_, _, _, state) = setup(&res).unwrap();
        let a = audit_from(&res, &plan, state).unwrap();
        let b = audit_fresh(&res, &plan).unwrap();
        assert_eq!(a.audits.len(), 5);
        for (x, y) in a.audits.iter().zip(&b.audits) {
            assert!((x.residual - y.residual).abs() <= 1e-12 * (1.0 + x.bulk.abs()));
        }
    }

    #[test]
    fn audit_beyond_run_is_short_history() {
        let res = short(1.0);
        let plan = AuditPlan::default_for(6.0);
        let (_, _, _, state) = setup(&res).unwrap();
        assert!(matches!(
            audit_from(&res, &plan, state),
            Err(Error::ShortHistory(_))
        ));
    }
}
