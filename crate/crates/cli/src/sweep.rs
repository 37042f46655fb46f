use std::collections::BTreeMap;
use std::path::Path;

use decaylab::analysis::ExponentSet;
use decaylab::config::{Resolved, RunConfig};
use decaylab::experiment::rates_for_dir;
use decaylab::numfmt::fmt_f64;
use decaylab::{Error, Result};
use rayon::prelude::*;

use crate::commands::{output_dir, simulate_into, write_toml, RATES_FILE};

pub const AGGREGATE_FILE: &str = "aggregate.csv";

const HEADER: &str = "config_hash,p,alpha,beta,family,uniform,exterior,interior_t,interior_x,\
linf_slope,sup_exterior,sup_interior,verdict,status";

/// One point of the sweep before resolution.
#[derive(Debug, Clone)]
struct Point {
    label: String,
    config: RunConfig,
}

fn expand(base: &RunConfig) -> Vec<Point> {
    let s = &base.sweep;
    let ps = s
        .p_values
        .clone()
        .unwrap_or_else(|| base.p.into_iter().collect());
    let families = s
        .families
        .clone()
        .unwrap_or_else(|| vec![base.initial.kind.clone().unwrap_or("gaussian".into())]);
    // Each entry fixes alpha or beta; the other is solved per p.
    let mut couplings: Vec<(Option<f64>, Option<f64>)> = Vec::new();
    if let Some(a) = &s.alpha_values {
        couplings.extend(a.iter().map(|a| (Some(*a), None)));
    }
    if let Some(b) = &s.beta_values {
        couplings.extend(b.iter().map(|b| (None, Some(*b))));
    }
    if couplings.is_empty() {
        couplings.push((base.alpha, base.beta));
    }
    let mut out = Vec::new();
    for p in &ps {
        for (alpha, beta) in &couplings {
            for fam in &families {
                let mut c = base.clone();
                c.sweep = Default::default();
                c.output = Default::default();
                c.p = Some(*p);
                c.alpha = *alpha;
                c.beta = *beta;
                c.initial.kind = Some(fam.clone());
                let label = format!(
                    "p={} alpha={} beta={} family={fam}",
                    fmt_f64(*p),
                    alpha.map_or("-".into(), fmt_f64),
                    beta.map_or("-".into(), fmt_f64)
                );
                out.push(Point { label, config: c });
            }
        }
    }
    out
}

struct Outcome {
    key: String,
    row: String,
    failed: bool,
}

fn run_child(res: &Resolved, hash: &str, dir: &Path, dx_refine: bool) -> Result<String> {
    let summary = simulate_into(res, dir, false, dx_refine)?;
    let rates = rates_for_dir(dir)?;
    write_toml(&dir.join(RATES_FILE), &rates)?;
    let ok = summary.passed() && rates.verdicts.values().all(|v| *v);
    Ok(row(
        hash,
        res,
        &[
            rates.linf_fit.slope,
            summary.sups.exterior,
            summary.sups.interior,
        ],
        if ok { "pass" } else { "fail" },
        "ok",
    ))
}

fn row(hash: &str, res: &Resolved, measured: &[f64], verdict: &str, status: &str) -> String {
    let e = ExponentSet::new(res.params.p, res.mp.alpha, res.mp.beta);
    let mut cells = vec![
        hash.to_string(),
        fmt_f64(res.params.p),
        fmt_f64(res.mp.alpha),
        fmt_f64(res.mp.beta),
        res.initial.kind.to_string(),
        fmt_f64(e.uniform),
        fmt_f64(e.exterior_pair.0),
        fmt_f64(e.interior_t),
        fmt_f64(e.interior_x),
    ];
    if measured.is_empty() {
        cells.extend(["", "", ""].map(String::from));
    } else {
        cells.extend(measured.iter().map(|v| fmt_f64(*v)));
    }
    cells.push(verdict.into());
    cells.push(csv_escape(status));
    cells.join(",")
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\"").replace('\n', " "))
    } else {
        s.to_string()
    }
}

/// Runs each distinct configuration of the sweep once and writes the
/// aggregate table sorted by config hash. Returns exit status 1 if any
/// child failed.
pub fn sweep(config: &Path, out: Option<&Path>, dx_refine: bool) -> Result<u8> {
    let base = RunConfig::load(config)?;
    let points = expand(&base);
    if points.is_empty() {
        return Err(Error::Config("sweep lists are empty".into()));
    }
    let root = match base.clone().resolve() {
        Ok(r) => output_dir(&r, out),
        Err(_) => out
            .map(Path::to_path_buf)
            .or_else(|| base.output.dir.clone())
            .unwrap_or_else(|| "out".into()),
    };
    std::fs::create_dir_all(&root).map_err(|e| Error::Io {
        path: root.clone(),
        source: e,
    })?;

    let mut unique: BTreeMap<String, Resolved> = BTreeMap::new();
    let mut outcomes = Vec::new();
    for pt in &points {
        match pt.config.resolve() {
            Ok(res) => {
                unique.entry(res.config_hash()).or_insert(res);
            }
            Err(e) => {
                eprintln!("{}: {e}", pt.label);
                outcomes.push(Outcome {
                    key: format!("~{}", pt.label),
                    row: format!(
                        "-,,,,,,,,,,,,fail,{}",
                        csv_escape(&format!("{}: {e}", pt.label))
                    ),
                    failed: true,
                });
            }
        }
    }
    let jobs: Vec<(String, Resolved)> = unique.into_iter().collect();
    let done: Vec<Outcome> = jobs
        .par_iter()
        .map(|(hash, res)| {
            let dir = root.join("runs").join(&hash[..16]);
            match run_child(res, hash, &dir, dx_refine) {
                Ok(row) => Outcome {
                    key: hash.clone(),
                    row,
                    failed: false,
                },
                Err(e) => {
                    eprintln!("{}: {e}", dir.display());
                    Outcome {
                        key: hash.clone(),
                        row: row(hash, res, &[], "fail", &e.to_string()),
                        failed: true,
                    }
                }
            }
        })
        .collect();
    outcomes.extend(done);
    outcomes.sort_by(|a, b| a.key.cmp(&b.key));

    let mut text = format!("{HEADER}\n");
    for o in &outcomes {
        text.push_str(&o.row);
        text.push('\n');
    }
    let path = root.join(AGGREGATE_FILE);
    std::fs::write(&path, text).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    let failed = outcomes.iter().filter(|o| o.failed).count();
    println!(
        "{}: {} runs, {failed} failed",
        path.display(),
        outcomes.len()
    );
    Ok(if failed > 0 { 1 } else { 0 })
}
