use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_FIT_POINTS: usize = 20;

/// Least-squares fit of `log(value)` against `log(1+t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub window: (f64, f64),
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
    /// Decay exponent the slope is compared with.
    pub compared_exponent: f64,
    /// `slope + compared_exponent`; negative means faster decay than claimed.
    pub margin: f64,
}

impl RateFit {
    /// The fitted decay is no slower than the exponent, up to `tol`.
    pub fn within(&self, tol: f64) -> bool {
        self.margin <= tol
    }
}

/// Fits the samples of `series` whose time lies in `window`.
pub fn fit_loglog(
    series: &[(f64, f64)],
    window: (f64, f64),
    compared_exponent: f64,
) -> Result<RateFit> {
    let (lo, hi) = window;
    if !(lo >= 1.0 && hi > lo) {
        return Err(Error::Fit(format!(
            "window ({lo}, {hi}) needs 1 <= t_lo < t_hi"
        )));
    }
    let eps = 1e-9 * hi;
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t >= lo - eps && *t <= hi + eps)
        .copied()
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(format!(
            "window ({lo}, {hi}) holds {} samples, need {MIN_FIT_POINTS}",
            pts.len()
        )));
    }
    let covered = series.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    if covered < hi - eps {
        return Err(Error::Fit(format!(
            "series ends at t = {covered}, window ends at {hi}"
        )));
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Fit(format!("nonpositive value {v} at t = {t}")));
    }
    let xs: Vec<f64> = pts.iter().map(|(t, _)| (1.0 + t).ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, v)| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    // a constant series is fitted perfectly
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(RateFit {
        window,
        slope,
        intercept,
        r_squared,
        points: pts.len(),
        compared_exponent,
        margin: slope + compared_exponent,
    })
}
