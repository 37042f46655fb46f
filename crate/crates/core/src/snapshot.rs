//! Full-precision text snapshots of a [`FieldState`].
//!
//! ```text
//! # decaylab-snapshot v1
//! version,config_hash,t,step_index,x_min,dx,n,dt
//! 1,<hash>,<t>,<k>,<x_min>,<dx>,<n>,<dt>
//! j,x,phi_prev,phi_curr
//! 0,<x_0>,<prev_0>,<curr_0>
//! ...
//! ```

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::numfmt::fmt_f64;
use crate::state::FieldState;

pub const MAGIC: &str = "# decaylab-snapshot v1";
const META_HEADER: &str = "version,config_hash,t,step_index,x_min,dx,n,dt";
const DATA_HEADER: &str = "j,x,phi_prev,phi_curr";

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub config_hash: String,
    pub state: FieldState,
}

pub fn write(path: &Path, snap: &Snapshot) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    let file = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    let mut w = BufWriter::new(file);
    let g = &snap.state.grid;
    let io = |e| Error::io(&tmp, e);
    writeln!(w, "{MAGIC}").map_err(io)?;
    writeln!(w, "{META_HEADER}").map_err(io)?;
    writeln!(
        w,
        "1,{},{},{},{},{},{},{}",
        snap.config_hash,
        fmt_f64(g.t),
        g.step_index,
        fmt_f64(g.x_min),
        fmt_f64(g.dx),
        g.n,
        fmt_f64(g.dt)
    )
    .map_err(io)?;
    writeln!(w, "{DATA_HEADER}").map_err(io)?;
    for j in 0..g.n {
        writeln!(
            w,
            "{j},{},{},{}",
            fmt_f64(g.x(j)),
            fmt_f64(snap.state.phi_prev[j]),
            fmt_f64(snap.state.phi_curr[j])
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)?;
    drop(w);
    // rename so a crash never leaves a truncated snapshot behind
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<Snapshot> {
    let bad = |reason: String| Error::Snapshot {
        path: path.to_path_buf(),
        reason,
    };
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let mut next = |what: &str| -> Result<String> {
        lines
            .next()
            .ok_or_else(|| bad(format!("missing {what}")))?
            .map_err(|e| Error::io(path, e))
    };
    if next("magic line")?.trim() != MAGIC {
        return Err(bad("not a v1 snapshot".into()));
    }
    if next("metadata header")?.trim() != META_HEADER {
        return Err(bad("unexpected metadata header".into()));
    }
    let meta = next("metadata")?;
    let f: Vec<&str> = meta.trim().split(',').collect();
    if f.len() != 8 || f[0] != "1" {
        return Err(bad("malformed metadata record".into()));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}")));
    let int = |s: &str| s.parse::<u64>().map_err(|e| bad(format!("`{s}`: {e}")));
    let grid = Grid1D {
        t: num(f[2])?,
        step_index: int(f[3])?,
        x_min: num(f[4])?,
        dx: num(f[5])?,
        n: int(f[6])? as usize,
        dt: num(f[7])?,
    };
    if next("data header")?.trim() != DATA_HEADER {
        return Err(bad("unexpected data header".into()));
    }
    let mut prev = Vec::with_capacity(grid.n);
    let mut curr = Vec::with_capacity(grid.n);
    for j in 0..grid.n {
        let line = next("data row")?;
        let cols: Vec<&str> = line.trim().split(',').collect();
        if cols.len() != 4 || int(cols[0])? as usize != j {
            return Err(bad(format!("malformed data row {j}")));
        }
        prev.push(num(cols[2])?);
        curr.push(num(cols[3])?);
    }
    let state = FieldState::new(prev, curr, grid)?;
    Ok(Snapshot {
        config_hash: f[1].to_string(),
        state,
    })
}
