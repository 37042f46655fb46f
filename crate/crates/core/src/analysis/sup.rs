use serde::{Deserialize, Serialize};

use super::exponents::ExponentSet;
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::run::{Frame, Observer};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightedSups {
    /// `max_{|x| >= t} |phi| (1+t+|x|)^e1 (1+|x|-t)^e2`.
    pub exterior: f64,
    /// `max_{|x| < t} |phi| (1+t+|x|)^it (1+t-|x|)^ix`.
    pub interior: f64,
}

impl WeightedSups {
    pub fn merge(&mut self, o: &WeightedSups) {
        self.exterior = self.exterior.max(o.exterior);
        self.interior = self.interior.max(o.interior);
    }
}

/// Weighted sups of one time slice.
pub fn weighted_sups(grid: &Grid1D, t: f64, phi: &[f64], set: &ExponentSet) -> WeightedSups {
    let mut out = WeightedSups::default();
    let (e1, e2) = set.exterior_pair;
    for (j, v) in phi.iter().enumerate() {
        if *v == 0.0 {
            continue;
        }
        let ax = grid.x(j).abs();
        let a = v.abs();
        if ax >= t {
            out.exterior = out
                .exterior
                .max(a * (1.0 + t + ax).powf(e1) * (1.0 + ax - t).powf(e2));
        } else {
            out.interior = out
                .interior
                .max(a * (1.0 + t + ax).powf(set.interior_t) * (1.0 + t - ax).powf(set.interior_x));
        }
    }
    out
}

/// Running weighted sups for several exponent sets, sampled every `every`
/// steps, with the per-sample values kept for growth checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightedSupRecorder {
    pub sets: Vec<ExponentSet>,
    pub every: u64,
    pub times: Vec<f64>,
    /// `samples[k][s]` is the value for set `s` at `times[k]`.
    pub samples: Vec<Vec<WeightedSups>>,
}

impl WeightedSupRecorder {
    pub fn new(sets: Vec<ExponentSet>, every: u64) -> Self {
        Self {
            sets,
            every: every.max(1),
            times: Vec::new(),
            samples: Vec::new(),
        }
    }

    /// Sups over all samples with `t <= t_max`, one per set.
    pub fn sups_until(&self, t_max: f64) -> Vec<WeightedSups> {
        let mut out = vec![WeightedSups::default(); self.sets.len()];
        for (t, row) in self.times.iter().zip(&self.samples) {
            if *t <= t_max + 1e-9 {
                for (o, s) in out.iter_mut().zip(row) {
                    o.merge(s);
                }
            }
        }
        out
    }

    pub fn sups(&self) -> Vec<WeightedSups> {
        self.sups_until(f64::INFINITY)
    }
}

impl Observer for WeightedSupRecorder {
    fn observe(&mut self, frame: &Frame<'_>) -> Result<()> {
        if frame.step() % self.every != 0 {
            return Ok(());
        }
        let t = frame.t();
        let r = frame.support();
        let g = frame.grid;
        // evaluate on the support only, with a grid starting at its first node
        let sub = Grid1D {
            x_min: g.x(r.start),
            ..g.clone()
        };
        let row = self
            .sets
            .iter()
            .map(|s| weighted_sups(&sub, t, &frame.curr[r.clone()], s))
            .collect();
        self.times.push(t);
        self.samples.push(row);
        Ok(())
    }

    fn name(&self) -> String {
        "weighted_sup".into()
    }

    fn checkpoint(&self) -> Option<serde_json::Value> {
        serde_json::to_value(self).ok()
    }

    fn restore(&mut self, state: &serde_json::Value) -> Result<()> {
        *self = serde_json::from_value(state.clone()).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}
