//! TOML run configuration and its resolution into validated parameters.
//!
//! ```toml
//! p = 3.0
//! beta = 0.5
//! dx = 0.01
//! t_end = 200.0
//!
//! [initial]
//! kind = "gaussian"
//! amplitude = 1.0
//! width = 1.0
//!
//! [output]
//! dir = "runs/reference"
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::Multiplier;
use crate::error::{Error, Result};
use crate::initial::{DataKind, InitialDataSpec, TableRow};
use crate::nullgeom::RegionSpec;
use crate::params::{resolve_multipliers, ModelParams, MultiplierParams};
use crate::solver::{SchemeChoice, SchemeKind};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub kind: Option<String>,
    pub amplitude: Option<f64>,
    pub width: Option<f64>,
    pub center: Option<f64>,
    pub velocity: Option<f64>,
    pub seed: Option<u64>,
    /// `[[x, phi0, phi1], ...]` for the table kind.
    pub table: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    pub every_n_steps: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacteristicsSection {
    pub offsets: Option<Vec<f64>>,
    pub interior_offsets: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotSection {
    pub every_n_steps: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditItem {
    pub multiplier: String,
    #[serde(flatten)]
    pub region: RegionSpec,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSection {
    pub identity_window: Option<[f64; 2]>,
    pub items: Option<Vec<AuditItem>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSection {
    pub window: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub p_values: Option<Vec<f64>>,
    pub alpha_values: Option<Vec<f64>>,
    pub beta_values: Option<Vec<f64>>,
    /// Initial data kinds; the rest of `[initial]` is shared.
    pub families: Option<Vec<String>>,
}

/// The configuration file as written.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub p: Option<f64>,
    pub nonlinearity: Option<bool>,
    pub scheme: Option<String>,
    pub newton_tol: Option<f64>,
    pub newton_max_iter: Option<usize>,
    pub dx: Option<f64>,
    pub cfl: Option<f64>,
    pub t_end: Option<f64>,
    pub pad: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    #[serde(rename = "R")]
    pub r: Option<f64>,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub characteristics: CharacteristicsSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub snapshot: SnapshotSection,
    #[serde(default)]
    pub audit: AuditSection,
    #[serde(default)]
    pub rates: RatesSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

pub const DEFAULT_DX: f64 = 0.01;
pub const DEFAULT_CFL: f64 = 0.5;
pub const DEFAULT_EVERY: u64 = 20;
pub const DEFAULT_OFFSETS: [f64; 3] = [0.0, 1.0, 5.0];
pub const DEFAULT_INTERIOR_OFFSETS: [f64; 4] = [1.0, 2.0, 5.0, 10.0];
/// Start of the decay-rate fit window.
pub const DEFAULT_FIT_START: f64 = 10.0;

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().replace('\n', " ")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let p = self.p.ok_or_else(|| Error::MissingKey("p".into()))?;
        let nonlinear = self.nonlinearity.unwrap_or(true);
        let params = ModelParams::new(p, nonlinear)?;
        let mp = resolve_multipliers(p, self.alpha, self.beta, self.gamma, self.r)?;
        let mut scheme = SchemeChoice::default();
        if let Some(s) = &self.scheme {
            scheme.kind = s.parse::<SchemeKind>()?;
        }
        if let Some(t) = self.newton_tol {
            scheme.newton_tol = t;
        }
        if let Some(m) = self.newton_max_iter {
            scheme.newton_max_iter = m;
        }
        scheme.validate()?;
        let dx = self.dx.unwrap_or(DEFAULT_DX);
        let cfl = self.cfl.unwrap_or(DEFAULT_CFL);
        let t_end = self
            .t_end
            .ok_or_else(|| Error::MissingKey("t_end".into()))?;
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(Error::param("t_end", format!("must be >= 0, got {t_end}")));
        }
        if let Some(pad) = self.pad {
            if !(pad >= 0.0) {
                return Err(Error::param("pad", "must be >= 0"));
            }
        }
        let initial = self.initial.to_spec()?;
        let every = self.diagnostics.every_n_steps.unwrap_or(DEFAULT_EVERY);
        if every == 0 {
            return Err(Error::param("diagnostics.every_n_steps", "must be >= 1"));
        }
        if self.snapshot.every_n_steps == Some(0) {
            return Err(Error::param("snapshot.every_n_steps", "must be >= 1"));
        }
        let offsets = self
            .characteristics
            .offsets
            .clone()
            .unwrap_or_else(|| DEFAULT_OFFSETS.to_vec());
        let interior_offsets = self
            .characteristics
            .interior_offsets
            .clone()
            .unwrap_or_else(|| DEFAULT_INTERIOR_OFFSETS.to_vec());
        if let Some(a) = offsets
            .iter()
            .chain(&interior_offsets)
            .find(|a| !(**a >= 0.0))
        {
            return Err(Error::param(
                "characteristics.offsets",
                format!("offsets must be >= 0, got {a}"),
            ));
        }
        let fit_window = match self.rates.window {
            Some(w) => (w[0], w[1]),
            None => (DEFAULT_FIT_START, t_end),
        };
        let audit = self.audit.resolve(t_end)?;
        Ok(Resolved {
            params,
            mp,
            scheme,
            initial,
            dx,
            cfl,
            t_end,
            pad: self.pad,
            every,
            snapshot_every: self.snapshot.every_n_steps,
            offsets,
            interior_offsets,
            fit_window,
            audit,
            output_dir: self.output.dir.clone(),
        })
    }
}

impl InitialSection {
    fn to_spec(&self) -> Result<InitialDataSpec> {
        let d = InitialDataSpec::default();
        let kind: DataKind = self.kind.as_deref().unwrap_or("gaussian").parse()?;
        let table = self
            .table
            .as_ref()
            .map(|rows| {
                rows.iter()
                    .map(|r| TableRow {
                        x: r[0],
                        phi0: r[1],
                        phi1: r[2],
                    })
                    .collect()
            })
            .unwrap_or_default();
        let spec = InitialDataSpec {
            kind,
            amplitude: self.amplitude.unwrap_or(d.amplitude),
            width: self.width.unwrap_or(d.width),
            center: self.center.unwrap_or(d.center),
            velocity: self.velocity.unwrap_or(d.velocity),
            seed: self.seed.unwrap_or(d.seed),
            table,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Audit instructions: `(multiplier, region)` pairs and the identity window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditPlan {
    pub items: Vec<(Multiplier, RegionSpec)>,
    pub identity_window: (f64, f64),
}

impl AuditPlan {
    /// One region per multiplier, all ending by `t = min(6, t_end)`.
    pub fn default_for(t_end: f64) -> Self {
        let h = t_end.min(6.0);
        // Interior corners land on coarse time grids when a, b are multiples of 0.2.
        let snap = |v: f64| ((v / 0.2).round().max(1.0) * 0.2 * 10.0).round() / 10.0;
        let items = vec![
            (
                Multiplier::Time,
                RegionSpec::Rectangle {
                    t0: 0.0,
                    t1: h,
                    x1: -5.0,
                    x2: 5.0,
                },
            ),
            (Multiplier::Scaling, RegionSpec::Sigma { r: 1.0, t_end: h }),
            (
                Multiplier::Boost,
                RegionSpec::Exterior {
                    a: 1.0,
                    b: 1.0 + 2.0 * h.min(4.0),
                },
            ),
            (Multiplier::Morawetz, RegionSpec::Sigma { r: 1.0, t_end: h }),
            (
                Multiplier::Interior,
                RegionSpec::Interior {
                    a: snap(h / 3.0),
                    b: snap(2.0 * h / 3.0),
                },
            ),
        ];
        Self {
            items,
            identity_window: (0.5 * h / 6.0, 4.0 * h / 6.0),
        }
    }

    /// Latest time any item needs.
    pub fn horizon(&self) -> f64 {
        self.items
            .iter()
            .map(|(_, r)| r.t_range().1)
            .fold(self.identity_window.1, f64::max)
    }
}

impl AuditSection {
    fn resolve(&self, t_end: f64) -> Result<AuditPlan> {
        let mut plan = AuditPlan::default_for(t_end);
        if let Some(w) = self.identity_window {
            if !(w[1] > w[0] && w[0] >= 0.0) {
                return Err(Error::param(
                    "audit.identity_window",
                    "needs 0 <= t_lo < t_hi",
                ));
            }
            plan.identity_window = (w[0], w[1]);
        }
        if let Some(items) = &self.items {
            plan.items = items
                .iter()
                .map(|it| {
                    it.region.validate()?;
                    Ok((it.multiplier.parse::<Multiplier>()?, it.region))
                })
                .collect::<Result<_>>()?;
        }
        Ok(plan)
    }
}

/// A configuration with every default filled in and every value checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub params: ModelParams,
    pub mp: MultiplierParams,
    pub scheme: SchemeChoice,
    pub initial: InitialDataSpec,
    pub dx: f64,
    pub cfl: f64,
    pub t_end: f64,
    pub pad: Option<f64>,
    pub every: u64,
    pub snapshot_every: Option<u64>,
    pub offsets: Vec<f64>,
    pub interior_offsets: Vec<f64>,
    pub fit_window: (f64, f64),
    pub audit: AuditPlan,
    /// Not part of the hash.
    pub output_dir: Option<PathBuf>,
}

impl Resolved {
    /// SHA-256 of the canonical JSON of everything that affects results.
    pub fn config_hash(&self) -> String {
        let mut canon = self.clone();
        canon.output_dir = None;
        let json = serde_json::to_string(&canon).expect("resolved config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// The same run with `dx` halved.
    pub fn refined(&self) -> Self {
        let mut r = self.clone();
        r.dx = self.dx / 2.0;
        r.every = self.every * 2;
        r.snapshot_every = self.snapshot_every.map(|e| e * 2);
        r
    }

    /// Raw name/value map in the form `validate_params` takes.
    pub fn raw_params(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("p".to_string(), self.params.p),
            ("alpha".to_string(), self.mp.alpha),
            ("beta".to_string(), self.mp.beta),
            ("gamma".to_string(), self.mp.gamma),
            ("R".to_string(), self.mp.r),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE: &str = r#"
p = 3.0
beta = 0.5
dx = 0.01
t_end = 200.0

[initial]
kind = "gaussian"
amplitude = 1.0
width = 1.0

[output]
dir = "runs/reference"
"#;

    #[test]
    fn reference_resolves() {
        let r = RunConfig::from_toml(REFERENCE).unwrap().resolve().unwrap();
        assert!((r.mp.alpha - 0.8).abs() < 1e-15);
        assert_eq!(r.cfl, 0.5);
        assert_eq!(r.offsets, DEFAULT_OFFSETS.to_vec());
        assert_eq!(r.fit_window, (10.0, 200.0));
        assert_eq!(r.mp.gamma, 1.0);
        assert_eq!(r.mp.r, 1.0);
    }

    #[test]
    fn missing_p_names_the_key() {
        let text = REFERENCE.replace("p = 3.0\n", "");
        let e = RunConfig::from_toml(&text).unwrap().resolve().unwrap_err();
        assert!(e.to_string().contains('p'), "{e}");
        assert!(matches!(e, Error::MissingKey(k) if k == "p"));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml("p = 3.0\nq = 1.0\n").is_err());
        assert!(RunConfig::from_toml("p = 3.0\n[initial]\nshape = 1\n").is_err());
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = RunConfig::from_toml(REFERENCE).unwrap();
        let mut b = a.clone();
        b.output.dir = Some("elsewhere".into());
        assert_eq!(
            a.resolve().unwrap().config_hash(),
            b.resolve().unwrap().config_hash()
        );
        b.dx = Some(0.02);
        assert_ne!(
            a.resolve().unwrap().config_hash(),
            b.resolve().unwrap().config_hash()
        );
        assert_eq!(a.resolve().unwrap().config_hash().len(), 64);
    }

    #[test]
    fn round_trip_through_toml() {
        let a = RunConfig::from_toml(REFERENCE).unwrap();
        assert_eq!(RunConfig::from_toml(&a.to_toml()).unwrap(), a);
    }

    #[test]
    fn audit_items_parse() {
        let text = format!(
            "{REFERENCE}\n[audit]\nidentity_window = [0.5, 2.0]\n[[audit.items]]\nmultiplier = \"boost\"\nkind = \"exterior\"\na = 1.0\nb = 5.0\n"
        );
        let r = RunConfig::from_toml(&text).unwrap().resolve().unwrap();
        assert_eq!(
            r.audit.items,
            vec![(Multiplier::Boost, RegionSpec::Exterior { a: 1.0, b: 5.0 })]
        );
        assert_eq!(r.audit.horizon(), 2.0);
        let bad = text.replace("\"boost\"", "\"conformal\"");
        assert!(RunConfig::from_toml(&bad).unwrap().resolve().is_err());
    }

    #[test]
    fn default_audit_plan_is_on_the_time_grid() {
        let plan = AuditPlan::default_for(200.0);
        assert_eq!(plan.horizon(), 6.0);
        for (_, r) in &plan.items {
            for piece in r.pieces() {
                for t in [piece.t0, piece.t1] {
                    let k = t / 0.005;
                    assert!((k - k.round()).abs() < 1e-9, "{t}");
                }
            }
        }
    }
}
