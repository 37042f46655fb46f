//! The run loop: steps a state to `t_end`, hands every time level to a set of
//! observers, and optionally persists resumable snapshots.
//!
//! Observers see [`Frame`]s. A frame at step `k` carries three levels
//! `phi^{k-1}, phi^k, phi^{k+1}`, so every diagnostic can use centered time
//! differences; the loop therefore computes one level past the last step.

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::params::ModelParams;
use crate::snapshot::{self, Snapshot};
use crate::solver::{step_in_place, SchemeChoice};
use crate::state::FieldState;

/// Three consecutive time levels at step `k`.
#[derive(Debug, Clone, Copy)]
pub struct Frame<'a> {
    pub grid: &'a Grid1D,
    pub params: &'a ModelParams,
    pub prev: &'a [f64],
    pub curr: &'a [f64],
    pub next: &'a [f64],
    /// Inclusive node range outside which all three levels vanish.
    pub span: Option<(usize, usize)>,
}

impl<'a> Frame<'a> {
    pub fn t(&self) -> f64 {
        self.grid.t
    }

    pub fn step(&self) -> u64 {
        self.grid.step_index
    }

    /// Nodes where the field or its centered differences can be nonzero.
    pub fn support(&self) -> Range<usize> {
        match self.span {
            Some((lo, hi)) => lo.saturating_sub(1)..(hi + 2).min(self.grid.n),
            None => 0..0,
        }
    }

    /// Centered `d_t phi` at node `j`.
    #[inline]
    pub fn phi_t(&self, j: usize) -> f64 {
        (self.next[j] - self.prev[j]) / (2.0 * self.grid.dt)
    }

    /// Centered `d_x phi` at node `j`; zero at the two end nodes.
    #[inline]
    pub fn phi_x(&self, j: usize) -> f64 {
        if j == 0 || j + 1 >= self.grid.n {
            0.0
        } else {
            (self.curr[j + 1] - self.curr[j - 1]) / (2.0 * self.grid.dx)
        }
    }
}

/// A consumer of the frame stream.
///
/// Observers that accumulate over time should implement `checkpoint` and
/// `restore` so that a resumed run reproduces an uninterrupted one exactly.
pub trait Observer {
    fn observe(&mut self, frame: &Frame<'_>) -> Result<()>;

    /// Key under which the checkpoint is stored; observers sharing a run
    /// need distinct names.
    fn name(&self) -> String {
        String::new()
    }

    fn checkpoint(&self) -> Option<serde_json::Value> {
        None
    }

    fn restore(&mut self, _state: &serde_json::Value) -> Result<()> {
        Ok(())
    }
}

/// Number of steps needed to reach `t_end`.
pub fn step_count(t_end: f64, dt: f64) -> u64 {
    if t_end <= 0.0 {
        0
    } else {
        (t_end / dt - 1e-9).ceil() as u64
    }
}

/// Where and how often to write snapshots.
#[derive(Debug, Clone)]
pub struct Persistence {
    pub dir: PathBuf,
    /// Snapshot cadence in steps; step 0 and the last step are always written.
    pub every: Option<u64>,
    pub config_hash: String,
}

impl Persistence {
    pub fn snapshot_dir(&self) -> PathBuf {
        self.dir.join("snapshots")
    }

    fn due(&self, k: u64, last: u64) -> bool {
        k == 0 || k == last || self.every.is_some_and(|e| e > 0 && k % e == 0)
    }
}

/// Test hook and checkpoint control.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunControl {
    /// Stop right after the snapshot at this step is written, before its
    /// frame is observed, as if the process had been interrupted.
    pub stop_at_step: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub first_step: u64,
    pub last_step: u64,
    pub completed: bool,
    /// State `(phi^{k-1}, phi^k)` at the last observed step.
    pub final_state: Option<FieldState>,
}

/// Runs `state` from its current step to `t_end`.
pub fn run(
    state: FieldState,
    params: &ModelParams,
    scheme: &SchemeChoice,
    t_end: f64,
    observers: &mut [&mut dyn Observer],
    persist: Option<&Persistence>,
    control: RunControl,
) -> Result<RunOutcome> {
    scheme.validate()?;
    let last = step_count(t_end, state.grid.dt);
    let first = state.step_index();
    let mut state = state;
    let mut scratch = vec![0.0; state.grid.n];
    let mut final_state = None;
    let mut k = first;
    while k <= last {
        if let Some(p) = persist {
            if p.due(k, last) {
                write_checkpoint(p, &state, observers)?;
            }
        }
        if control.stop_at_step == Some(k) {
            return Ok(RunOutcome {
                first_step: first,
                last_step: k,
                completed: false,
                final_state: Some(state),
            });
        }
        if k == last {
            final_state = Some(state.clone());
        }
        let before = state.active;
        step_in_place(&mut state, params, scheme, &mut scratch)?;
        // scratch now holds phi^{k-1}; the state holds (phi^k, phi^{k+1})
        let mut grid = state.grid.clone();
        grid.set_step(k);
        let span = match (before, state.active) {
            (Some(a), Some(b)) => Some((a.0.min(b.0), a.1.max(b.1))),
            (a, b) => a.or(b),
        };
        let frame = Frame {
            grid: &grid,
            params,
            prev: &scratch,
            curr: &state.phi_prev,
            next: &state.phi_curr,
            span,
        };
        for obs in observers.iter_mut() {
            obs.observe(&frame)?;
        }
        k += 1;
    }
    Ok(RunOutcome {
        first_step: first,
        last_step: last,
        completed: true,
        final_state,
    })
}

fn write_checkpoint(
    p: &Persistence,
    state: &FieldState,
    observers: &[&mut dyn Observer],
) -> Result<()> {
    let dir = p.snapshot_dir();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let k = state.step_index();
    let snap = Snapshot {
        config_hash: p.config_hash.clone(),
        state: state.clone(),
    };
    snapshot::write(&snapshot_path(&dir, k), &snap)?;
    let mut side = BTreeMap::new();
    for obs in observers {
        if let Some(v) = obs.checkpoint() {
            side.insert(obs.name(), v);
        }
    }
    let path = sidecar_path(&dir, k);
    let text = serde_json::to_string(&side).map_err(|e| Error::Snapshot {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn snapshot_path(dir: &Path, k: u64) -> PathBuf {
    dir.join(format!("step_{k:010}.csv"))
}

pub fn sidecar_path(dir: &Path, k: u64) -> PathBuf {
    dir.join(format!("step_{k:010}.observers.json"))
}

/// Steps for which a snapshot exists in `dir`, ascending.
pub fn list_snapshots(dir: &Path) -> Result<Vec<u64>> {
    let entries = match std::fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(dir, e)),
    };
    let mut steps: Vec<u64> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            name.strip_prefix("step_")?
                .strip_suffix(".csv")?
                .parse()
                .ok()
        })
        .collect();
    steps.sort_unstable();
    Ok(steps)
}

/// Loads the latest snapshot at or before `max_step` and restores the
/// observers from its sidecar.
pub fn resume_state(
    p: &Persistence,
    max_step: u64,
    observers: &mut [&mut dyn Observer],
) -> Result<FieldState> {
    let dir = p.snapshot_dir();
    let k = list_snapshots(&dir)?
        .into_iter()
        .filter(|&k| k <= max_step)
        .next_back()
        .ok_or_else(|| Error::Snapshot {
            path: dir.clone(),
            reason: "no snapshot to resume from".into(),
        })?;
    let path = snapshot_path(&dir, k);
    let snap = snapshot::read(&path)?;
    if snap.config_hash != p.config_hash {
        return Err(Error::Snapshot {
            path,
            reason: format!(
                "config hash {} does not match the current config {}",
                snap.config_hash, p.config_hash
            ),
        });
    }
    let side_path = sidecar_path(&dir, k);
    let text = std::fs::read_to_string(&side_path).map_err(|e| Error::io(&side_path, e))?;
    let side: BTreeMap<String, serde_json::Value> =
        serde_json::from_str(&text).map_err(|e| Error::Snapshot {
            path: side_path.clone(),
            reason: e.to_string(),
        })?;
    for obs in observers.iter_mut() {
        if let Some(v) = side.get(&obs.name()) {
            obs.restore(v)?;
        } else if obs.checkpoint().is_some() {
            return Err(Error::Snapshot {
                path: side_path.clone(),
                reason: format!("no saved state for observer `{}`", obs.name()),
            });
        }
    }
    Ok(snap.state)
}

/// Collects `phi^k` at selected steps.
#[derive(Debug, Default, Clone)]
pub struct LevelRecorder {
    pub every: u64,
    pub levels: Vec<(f64, Vec<f64>)>,
}

impl LevelRecorder {
    pub fn new(every: u64) -> Self {
        Self {
            every: every.max(1),
            levels: Vec::new(),
        }
    }
}

impl Observer for LevelRecorder {
    fn observe(&mut self, frame: &Frame<'_>) -> Result<()> {
        if frame.step() % self.every == 0 {
            self.levels.push((frame.t(), frame.curr.to_vec()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::{sample_initial_data, InitialDataSpec};
    use crate::solver::{discrete_energy, init_state};

    struct Energy(Vec<(u64, f64)>);
    impl Observer for Energy {
        fn observe(&mut self, f: &Frame<'_>) -> Result<()> {
            let s = FieldState::new(f.prev.to_vec(), f.curr.to_vec(), f.grid.clone())?;
            self.0.push((f.step(), discrete_energy(&s, f.params)));
            Ok(())
        }
    }

    fn start(dx: f64) -> (FieldState, ModelParams) {
        let params = ModelParams::new(3.0, true).unwrap();
        let id = InitialDataSpec::gaussian(1.0, 1.0, 0.0);
        let grid = crate::grid::build_grid(&id, 2.0, dx, 0.5).unwrap();
        let (p0, p1) = sample_initial_data(&id, &grid).unwrap();
        (init_state(&p0, &p1, &params, &grid).unwrap(), params)
    }

    #[test]
    fn t_end_zero_emits_one_frame() {
        let (s, params) = start(0.1);
        let mut e = Energy(Vec::new());
        let out = run(
            s,
            &params,
            &SchemeChoice::default(),
            0.0,
            &mut [&mut e],
            None,
            RunControl::default(),
        )
        .unwrap();
        assert!(out.completed);
        assert_eq!(e.0.len(), 1);
        assert_eq!(e.0[0].0, 0);
    }

    #[test]
    fn frames_match_manual_stepping() {
        let (s, params) = start(0.1);
        let mut rec = LevelRecorder::new(1);
        let scheme = SchemeChoice::default();
        run(
            s.clone(),
            &params,
            &scheme,
            1.0,
            &mut [&mut rec],
            None,
            RunControl::default(),
        )
        .unwrap();
        assert_eq!(rec.levels.len(), 21);
        let mut manual = s;
        for (k, (t, lvl)) in rec.levels.iter().enumerate() {
            assert_eq!(*t, manual.grid.time_of(k as u64));
            assert_eq!(lvl, &manual.phi_curr);
            manual = crate::solver::step(&manual, &params, &scheme).unwrap();
        }
    }

    #[test]
    fn step_count_rounding() {
        assert_eq!(step_count(0.0, 0.005), 0);
        assert_eq!(step_count(200.0, 0.005), 40_000);
        assert_eq!(step_count(1.0, 0.3), 4);
    }
}
