use std::path::{Path, PathBuf};

use decaylab::config::{AuditPlan, Resolved, RunConfig};
use decaylab::diagnostics::Multiplier;
use decaylab::experiment::{
    audit_fresh, audit_from, compare_audits, initial_snapshot, load_run_config, rates_for_dir,
    refined_dir, simulate as run_simulation, AuditComparison, AuditResult, RunSummary,
};
use decaylab::numfmt::fmt_f64;
use decaylab::{Error, Result, RunControl};
use serde::Serialize;

pub const AUDIT_FILE: &str = "audit.toml";
pub const RATES_FILE: &str = "rates.toml";

/// Maps a failure to the documented exit status.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParam { .. }
        | Error::MissingKey(_)
        | Error::Config(_)
        | Error::InitialData(_)
        | Error::GridTooLarge { .. } => 2,
        Error::ShortHistory(_) | Error::Snapshot { .. } | Error::Fit(_) => 4,
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => 4,
        _ => 3,
    }
}

pub fn resolve_config(path: &Path) -> Result<Resolved> {
    RunConfig::load(path)?.resolve()
}

pub fn output_dir(res: &Resolved, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| res.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Runs `res` (and its refinement when asked) into `dir`.
pub fn simulate_into(
    res: &Resolved,
    dir: &Path,
    resume: bool,
    dx_refine: bool,
) -> Result<RunSummary> {
    let summary = run_simulation(res, Some(dir), resume, RunControl::default())?.summary;
    if dx_refine {
        run_simulation(
            &res.refined(),
            Some(&refined_dir(dir)),
            resume,
            RunControl::default(),
        )?;
    }
    Ok(summary)
}

pub fn simulate(config: &Path, out: Option<&Path>, resume: bool, dx_refine: bool) -> Result<u8> {
    let res = resolve_config(config)?;
    let dir = output_dir(&res, out);
    let s = simulate_into(&res, &dir, resume, dx_refine)?;
    println!(
        "{}: p={} t={} drift={} verdicts {}",
        dir.display(),
        fmt_f64(s.p),
        fmt_f64(s.final_row.t),
        fmt_f64(s.energy_drift),
        verdict_line(s.passed()),
    );
    Ok(0)
}

fn verdict_line(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

#[derive(Serialize)]
struct AuditFile<'a> {
    run: &'a AuditResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    refinement: Option<&'a AuditComparison>,
}

pub fn audit(
    run_dir: &Path,
    config: Option<&Path>,
    multipliers: &[String],
    dx_refine: bool,
) -> Result<u8> {
    let wanted: Vec<Multiplier> = multipliers
        .iter()
        .map(|m| m.parse())
        .collect::<Result<_>>()?;
    let res = load_run_config(run_dir)?;
    let mut plan: AuditPlan = match config {
        Some(path) => resolve_config(path)?.audit,
        None => res.audit.clone(),
    };
    if !wanted.is_empty() {
        plan.items.retain(|(m, _)| wanted.contains(m));
    }
    let start = initial_snapshot(run_dir, &res)?;
    let coarse = audit_from(&res, &plan, start)?;
    let comparison = if dx_refine {
        let fine = audit_fresh(&res.refined(), &plan)?;
        Some(compare_audits(&coarse, &fine))
    } else {
        None
    };
    for a in &coarse.audits {
        println!(
            "{} on {:?}: bulk={} closure={} residual={}",
            a.multiplier,
            a.region,
            fmt_f64(a.bulk),
            fmt_f64(a.closure),
            fmt_f64(a.residual)
        );
    }
    for i in &coarse.identities {
        println!(
            "identity {}: max residual {}",
            i.id,
            fmt_f64(i.max_residual)
        );
    }
    if let Some(c) = &comparison {
        for (k, v) in &c.verdicts {
            println!("{k}: {}", verdict_line(*v));
        }
    }
    let file = AuditFile {
        run: &coarse,
        refinement: comparison.as_ref(),
    };
    write_toml(&run_dir.join(AUDIT_FILE), &file)?;
    Ok(0)
}

pub fn rates(run_dir: &Path) -> Result<u8> {
    let r = rates_for_dir(run_dir)?;
    println!(
        "p={} slope={} on [{}, {}] vs -{} (r2={}) uniform_decay: {}",
        fmt_f64(r.p),
        fmt_f64(r.linf_fit.slope),
        fmt_f64(r.linf_fit.window.0),
        fmt_f64(r.linf_fit.window.1),
        fmt_f64(r.exponents.uniform),
        fmt_f64(r.linf_fit.r_squared),
        verdict_line(r.verdicts["uniform_decay"]),
    );
    write_toml(&run_dir.join(RATES_FILE), &r)?;
    Ok(0)
}

pub fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text =
        toml::to_string(value).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}
