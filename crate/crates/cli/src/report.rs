use std::fmt::Write as _;
use std::path::Path;

use decaylab::diagnostics::{read_diagnostics_csv, DiagnosticsRow};
use decaylab::experiment::{RunSummary, DIAGNOSTICS_FILE, SUMMARY_FILE};
use decaylab::numfmt::fmt_f64;
use decaylab::{Error, Result};

use crate::commands::RATES_FILE;

type Column = fn(&DiagnosticsRow) -> f64;

/// Human-readable digest of a summary; every line is derived from stored numbers.
pub fn render(s: &RunSummary, rates: Option<&toml::Value>) -> String {
    let f = |v: f64| fmt_f64(v);
    let mut o = String::new();
    let _ = writeln!(o, "run {}", &s.config_hash[..16.min(s.config_hash.len())]);
    let _ = writeln!(
        o,
        "  p = {}, alpha = {}, beta = {}, dx = {}, t_end = {}, nodes = {}",
        f(s.p),
        f(s.alpha),
        f(s.beta),
        f(s.dx),
        f(s.t_end),
        s.nodes
    );
    let _ = writeln!(
        o,
        "  E0 = {}, E1 = {}, E_gamma = {}",
        f(s.e0),
        f(s.e1),
        f(s.e_gamma)
    );
    let _ = writeln!(o, "  energy drift {}", f(s.energy_drift));
    let _ = writeln!(
        o,
        "  |phi| outside cone {}, in boundary band {}",
        f(s.outside_cone),
        f(s.band_max)
    );
    let _ = writeln!(
        o,
        "  potential {} (t=1) -> {} (end); linf max {} -> {}",
        f(s.potential_t1),
        f(s.potential_end),
        f(s.linf_max),
        f(s.linf_end)
    );
    let _ = writeln!(
        o,
        "  morawetz {} (half) -> {} (end)",
        f(s.morawetz_half),
        f(s.morawetz_end)
    );
    let _ = writeln!(
        o,
        "  gn_ratio max {} (bound {})",
        f(s.gn_ratio_max),
        f(s.gn_ratio_bound)
    );
    let _ = writeln!(
        o,
        "  weighted sups: exterior {}, interior {}",
        f(s.sups.exterior),
        f(s.sups.interior)
    );
    for r in &s.exterior_flux {
        let _ = writeln!(
            o,
            "  flux {} a={}: weighted {} <= {}, energy {} <= {}",
            r.direction,
            f(r.a),
            f(r.weighted),
            f(r.weighted_bound),
            f(r.energy),
            f(r.energy_bound)
        );
    }
    for r in &s.interior_flux {
        let _ = writeln!(o, "  interior flux a={}: {}", f(r.a), f(r.sum));
    }
    if let Some(slope) = rates
        .and_then(|r| r.get("linf_fit"))
        .and_then(|f| f.get("slope"))
        .and_then(|v| v.as_float())
    {
        let _ = writeln!(o, "  linf slope {}", f(slope));
    }
    let _ = writeln!(o, "verdicts:");
    for (k, v) in &s.verdicts {
        let _ = writeln!(o, "  {k:<26} {}", if *v { "pass" } else { "FAIL" });
    }
    o
}

pub fn report(run_dir: &Path, plots: bool) -> Result<u8> {
    let summary = RunSummary::read(&run_dir.join(SUMMARY_FILE))?;
    let rates_path = run_dir.join(RATES_FILE);
    let rates = std::fs::read_to_string(&rates_path)
        .ok()
        .and_then(|t| t.parse::<toml::Value>().ok());
    print!("{}", render(&summary, rates.as_ref()));
    if plots {
        let rows = read_diagnostics_csv(&run_dir.join(DIAGNOSTICS_FILE))?;
        let dir = run_dir.join("plots");
        std::fs::create_dir_all(&dir).map_err(|e| Error::Io {
            path: dir.clone(),
            source: e,
        })?;
        let series: [(&str, Column); 3] = [
            ("linf", |r| r.linf),
            ("potential", |r| r.potential),
            ("morawetz_cum", |r| r.morawetz_cum),
        ];
        for (name, get) in series {
            let mut text = format!("t,{name}\n");
            for r in &rows {
                let _ = writeln!(text, "{},{}", fmt_f64(r.t), fmt_f64(get(r)));
            }
            let path = dir.join(format!("{name}.csv"));
            std::fs::write(&path, text).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
        }
    }
    Ok(0)
}
