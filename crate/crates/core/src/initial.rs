//! Parametric initial data `(phi0, phi1)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;

/// Values below this are treated as outside the support of rapidly decaying data.
pub const SUPPORT_THRESHOLD: f64 = 1e-14;

const MAX_RANDOM_BUMPS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    #[default]
    Gaussian,
    Bump,
    Packet,
    Table,
    RandomBumps,
}

impl std::str::FromStr for DataKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "gaussian" => DataKind::Gaussian,
            "bump" => DataKind::Bump,
            "packet" => DataKind::Packet,
            "table" => DataKind::Table,
            "random_bumps" => DataKind::RandomBumps,
            other => return Err(Error::InitialData(format!("unknown kind `{other}`"))),
        })
    }
}

impl std::fmt::Display for DataKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DataKind::Gaussian => "gaussian",
            DataKind::Bump => "bump",
            DataKind::Packet => "packet",
            DataKind::Table => "table",
            DataKind::RandomBumps => "random_bumps",
        })
    }
}

/// One `(x, phi0, phi1)` sample of tabulated data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub x: f64,
    pub phi0: f64,
    pub phi1: f64,
}

/// Initial data family.
///
/// * `gaussian`: `phi0 = A exp(-(x-c)^2 / (2 w^2))`, `phi1 = 0`.
/// * `bump`: `phi0 = A exp(1 - 1/(1 - s^2))` for `|s| < 1`, `s = (x-c)/w`, zero
///   elsewhere; `phi1 = 0`.
/// * `packet`: the gaussian profile `g` boosted with speed `v`: `phi1 = -v g'`.
///   With `v = 1` the free evolution is exactly `g(x - t)`.
/// * `table`: monotone cubic interpolation of tabulated rows, zero outside.
/// * `random_bumps`: up to eight disjoint bumps inside `[c - w, c + w]`, each
///   with its own amplitude and boost, drawn from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialDataSpec {
    pub kind: DataKind,
    pub amplitude: f64,
    pub width: f64,
    pub center: f64,
    pub velocity: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub table: Vec<TableRow>,
}

impl Default for InitialDataSpec {
    fn default() -> Self {
        Self {
            kind: DataKind::Gaussian,
            amplitude: 1.0,
            width: 1.0,
            center: 0.0,
            velocity: 0.0,
            seed: 0,
            table: Vec::new(),
        }
    }
}

impl InitialDataSpec {
    pub fn gaussian(amplitude: f64, width: f64, center: f64) -> Self {
        Self {
            kind: DataKind::Gaussian,
            amplitude,
            width,
            center,
            ..Self::default()
        }
    }

    pub fn bump(amplitude: f64, width: f64, center: f64) -> Self {
        Self {
            kind: DataKind::Bump,
            amplitude,
            width,
            center,
            ..Self::default()
        }
    }

    pub fn packet(amplitude: f64, width: f64, center: f64, velocity: f64) -> Self {
        Self {
            kind: DataKind::Packet,
            amplitude,
            width,
            center,
            velocity,
            ..Self::default()
        }
    }

    pub fn random_bumps(amplitude: f64, width: f64, center: f64, seed: u64) -> Self {
        Self {
            kind: DataKind::RandomBumps,
            amplitude,
            width,
            center,
            seed,
            ..Self::default()
        }
    }

    pub fn table(rows: Vec<TableRow>) -> Self {
        Self {
            kind: DataKind::Table,
            table: rows,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite() || !self.center.is_finite() {
            return Err(Error::InitialData(
                "amplitude and center must be finite".into(),
            ));
        }
        if self.kind != DataKind::Table && !(self.width > 0.0) {
            return Err(Error::InitialData(format!(
                "width must be > 0, got {}",
                self.width
            )));
        }
        if self.kind == DataKind::Packet && !(-1.0..=1.0).contains(&self.velocity) {
            return Err(Error::InitialData(format!(
                "packet velocity must lie in [-1, 1], got {}",
                self.velocity
            )));
        }
        if self.kind == DataKind::Table {
            if self.table.len() < 2 {
                return Err(Error::InitialData("table needs at least two rows".into()));
            }
            for w in self.table.windows(2) {
                if !(w[1].x > w[0].x) {
                    return Err(Error::InitialData(format!(
                        "table rows not strictly increasing in x at x = {}",
                        w[1].x
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        match self.kind {
            DataKind::Table => self.table.iter().all(|r| r.phi0 == 0.0 && r.phi1 == 0.0),
            _ => self.amplitude == 0.0,
        }
    }

    /// Radius `r` around `center` outside which `|phi0|, |phi1| < 1e-14`
    /// (exact support for bump kinds).
    pub fn support_radius(&self) -> Result<f64> {
        self.validate()?;
        if self.is_zero() {
            return Ok(0.0);
        }
        Ok(match self.kind {
            DataKind::Bump | DataKind::RandomBumps => self.width,
            DataKind::Gaussian => gaussian_tail_radius(self.amplitude.abs(), self.width, 0.0),
            DataKind::Packet => {
                gaussian_tail_radius(self.amplitude.abs(), self.width, self.velocity.abs())
            }
            DataKind::Table => {
                let first = self.table[0].x;
                let last = self.table[self.table.len() - 1].x;
                (first - self.center).abs().max((last - self.center).abs())
            }
        })
    }

    /// Radius about the origin containing the support.
    pub fn support_extent(&self) -> Result<f64> {
        let r = self.support_radius()?;
        if r == 0.0 {
            return Ok(0.0);
        }
        Ok(match self.kind {
            DataKind::Table => {
                let first = self.table[0].x;
                let last = self.table[self.table.len() - 1].x;
                first.abs().max(last.abs())
            }
            _ => self.center.abs() + r,
        })
    }

    /// A sampler that evaluates `(phi0, phi1)` pointwise.
    pub fn profile(&self) -> Result<Profile> {
        self.validate()?;
        Ok(match self.kind {
            DataKind::Gaussian => Profile::Gaussian {
                a: self.amplitude,
                w: self.width,
                c: self.center,
                v: 0.0,
            },
            DataKind::Packet => Profile::Gaussian {
                a: self.amplitude,
                w: self.width,
                c: self.center,
                v: self.velocity,
            },
            DataKind::Bump => Profile::Bumps(vec![Bump {
                a: self.amplitude,
                w: self.width,
                c: self.center,
                v: 0.0,
            }]),
            DataKind::RandomBumps => Profile::Bumps(self.draw_bumps()),
            DataKind::Table => Profile::Table(Pchip::new(&self.table)),
        })
    }

    fn draw_bumps(&self) -> Vec<Bump> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let count = rng.gen_range(1..=MAX_RANDOM_BUMPS);
        let slot = 2.0 * self.width / MAX_RANDOM_BUMPS as f64;
        let mut slots: Vec<usize> = (0..MAX_RANDOM_BUMPS).collect();
        // partial Fisher-Yates; slots are disjoint so the bumps are too
        for i in 0..count {
            let k = rng.gen_range(i..MAX_RANDOM_BUMPS);
            slots.swap(i, k);
        }
        let mut chosen: Vec<usize> = slots[..count].to_vec();
        chosen.sort_unstable();
        chosen
            .into_iter()
            .map(|s| {
                let c = self.center - self.width + (s as f64 + 0.5) * slot;
                let w = rng.gen_range(0.25..0.5) * slot;
                let a = self.amplitude * rng.gen_range(-1.0..1.0);
                let v = rng.gen_range(-1.0..=1.0);
                Bump { a, w, c, v }
            })
            .collect()
    }
}

/// Smallest `r >= w` with `max(A e^{-s^2/2w^2}, v A s/w^2 e^{-s^2/2w^2}) < 1e-14`
/// for all `s >= r`; both terms decrease for `s >= w`.
fn gaussian_tail_radius(a: f64, w: f64, v: f64) -> f64 {
    let h = |s: f64| {
        let g = a * (-(s * s) / (2.0 * w * w)).exp();
        g.max(v * s / (w * w) * g)
    };
    if h(w) < SUPPORT_THRESHOLD {
        return w;
    }
    let mut hi = 2.0 * w;
    while h(hi) >= SUPPORT_THRESHOLD {
        hi *= 2.0;
    }
    let mut lo = w;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) >= SUPPORT_THRESHOLD {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    hi
}

#[derive(Debug, Clone, Copy)]
pub struct Bump {
    a: f64,
    w: f64,
    c: f64,
    v: f64,
}

impl Bump {
    fn eval(&self, x: f64) -> (f64, f64) {
        let s = (x - self.c) / self.w;
        if s.abs() >= 1.0 {
            return (0.0, 0.0);
        }
        let q = 1.0 - s * s;
        let g = self.a * (1.0 - 1.0 / q).exp();
        // d/dx exp(1 - 1/(1-s^2)) = -2 s / (w (1-s^2)^2) * exp(...)
        let dg = -2.0 * s / (self.w * q * q) * g;
        (g, -self.v * dg)
    }
}

/// Pointwise evaluator for initial data.
#[derive(Debug, Clone)]
pub enum Profile {
    Gaussian { a: f64, w: f64, c: f64, v: f64 },
    Bumps(Vec<Bump>),
    Table(Pchip),
}

impl Profile {
    /// `(phi0(x), phi1(x))`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        match self {
            Profile::Gaussian { a, w, c, v } => {
                let s = x - c;
                let g = a * (-(s * s) / (2.0 * w * w)).exp();
                let dg = -s / (w * w) * g;
                (g, -v * dg)
            }
            Profile::Bumps(bumps) => bumps.iter().fold((0.0, 0.0), |acc, b| {
                let (f0, f1) = b.eval(x);
                (acc.0 + f0, acc.1 + f1)
            }),
            Profile::Table(t) => t.eval(x),
        }
    }

    pub fn phi0(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    pub fn phi1(&self, x: f64) -> f64 {
        self.eval(x).1
    }

    /// Support pieces of `phi1`, used to split quadrature at kinks.
    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        match self {
            Profile::Gaussian { .. } => Vec::new(),
            Profile::Bumps(b) => b.iter().flat_map(|b| [b.c - b.w, b.c + b.w]).collect(),
            Profile::Table(t) => t.xs.clone(),
        }
    }
}

/// Evaluates `(phi0, phi1)` at every grid node.
pub fn sample_initial_data(id: &InitialDataSpec, grid: &Grid1D) -> Result<(Vec<f64>, Vec<f64>)> {
    let profile = id.profile()?;
    let (phi0, phi1) = (0..grid.n).map(|j| profile.eval(grid.x(j))).unzip();
    Ok((phi0, phi1))
}

/// Monotone piecewise-cubic Hermite interpolation (Fritsch-Carlson slopes)
/// of both columns of a table; zero outside the tabulated range.
#[derive(Debug, Clone)]
pub struct Pchip {
    xs: Vec<f64>,
    y0: Vec<f64>,
    y1: Vec<f64>,
    d0: Vec<f64>,
    d1: Vec<f64>,
}

impl Pchip {
    fn new(rows: &[TableRow]) -> Self {
        let xs: Vec<f64> = rows.iter().map(|r| r.x).collect();
        let y0: Vec<f64> = rows.iter().map(|r| r.phi0).collect();
        let y1: Vec<f64> = rows.iter().map(|r| r.phi1).collect();
        let d0 = pchip_slopes(&xs, &y0);
        let d1 = pchip_slopes(&xs, &y1);
        Self { xs, y0, y1, d0, d1 }
    }

    fn eval(&self, x: f64) -> (f64, f64) {
        let n = self.xs.len();
        if x < self.xs[0] || x > self.xs[n - 1] {
            return (0.0, 0.0);
        }
        let k = match self.xs.partition_point(|&xi| xi <= x) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        };
        let h = self.xs[k + 1] - self.xs[k];
        let s = (x - self.xs[k]) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let herm = |y: &[f64], d: &[f64]| {
            h00 * y[k] + h10 * h * d[k] + h01 * y[k + 1] + h11 * h * d[k + 1]
        };
        (herm(&self.y0, &self.d0), herm(&self.y1, &self.d1))
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0], delta[0]];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= 0.0 {
            0.0
        } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}
