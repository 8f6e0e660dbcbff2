//! On-disk run formats: a JSON manifest with every resolved parameter plus
//! solver summaries, diagnostics and field snapshots as CSV, and the
//! characteristic-solver node table. Floats are written with the shortest
//! representation that parses back to the identical bits, so readers can
//! recompute diagnostics from stored data and match the run exactly.

use std::fs;
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{Mode, RunConfig};
use crate::diagnostics::{DiagnosticRow, DiagnosticSeries, CSV_HEADER};
use crate::error::{Error, Result};
use crate::extrinsic::{FailureReport, FieldState, GridSpec, Trajectory};
use crate::geometry::AmbientVector;
use crate::lightcone::{GlobalSolution, TriangleGrid};

pub const MANIFEST_FILE: &str = "run.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const STATE_FILE: &str = "state.csv";
pub const ITERATIONS_FILE: &str = "iterations.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

/// Run-level metadata and results; `config` re-parses to the resolved
/// RunConfig bit for bit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub mode: Mode,
    pub wall_time_seconds: f64,
    pub config: RunConfig,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub evolve: Option<EvolveSummary>,
    #[serde(default)]
    pub lightcone: Option<LightconeSummary>,
    #[serde(default)]
    pub failure: Option<FailureReport>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvolveSummary {
    pub e0: f64,
    pub relative_energy_drift: f64,
    pub action_integral: Option<f64>,
    pub action_is_el_residual: bool,
    pub apriori_enabled: bool,
    /// Spacetime integral of the stated inequality's left side, reported
    /// separately from the Z functional (see diagnostics).
    pub apriori_lhs_integral: Option<f64>,
    pub steps: usize,
    pub snapshots: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StripInfo {
    pub t0: f64,
    pub na: usize,
    pub levels: usize,
    pub sweeps: usize,
    pub residual: f64,
    pub y_z_gap: f64,
    pub isometry_drift: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LightconeSummary {
    pub a: f64,
    pub m: f64,
    pub k_admissible: f64,
    pub k_used: f64,
    pub h: f64,
    pub exhausted: bool,
    pub reached_t: f64,
    pub t_requested: f64,
    pub strips: Vec<StripInfo>,
}

pub fn version_string() -> String {
    format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

/// Shortest decimal form that parses back to the identical f64.
pub fn fmt_float(x: f64) -> String {
    format!("{x}")
}

fn fmt(x: f64) -> String {
    fmt_float(x)
}

fn parse_f64(tok: &str, context: &str) -> Result<f64> {
    tok.trim()
        .parse::<f64>()
        .map_err(|_| Error::Data(format!("{context}: bad float {tok:?}")))
}

fn open_writer(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::Data(format!("run.json: {e}")))?;
    fs::write(dir.join(MANIFEST_FILE), text + "\n")?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path)?;
    serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

pub fn write_diagnostics(dir: &Path, series: &DiagnosticSeries) -> Result<()> {
    let mut w = open_writer(&dir.join(DIAGNOSTICS_FILE))?;
    writeln!(w, "{CSV_HEADER}")?;
    for r in &series.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            fmt(r.t),
            fmt(r.e),
            fmt(r.e_half),
            fmt(r.e2),
            fmt(r.action),
            fmt(r.res_f_plus),
            fmt(r.res_f_minus),
            fmt(r.res_box_e),
            fmt(r.res_stress_div),
            fmt(r.apriori_z),
            fmt(r.apriori_bound),
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_diagnostics(dir: &Path) -> Result<Vec<DiagnosticRow>> {
    let path = dir.join(DIAGNOSTICS_FILE);
    let text = fs::read_to_string(&path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(Error::Data(format!(
                "{}: unexpected header {other:?}",
                path.display()
            )))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let ctx = format!("{} line {}", path.display(), i + 2);
        let vals: Vec<f64> = line
            .split(',')
            .map(|tok| parse_f64(tok, &ctx))
            .collect::<Result<_>>()?;
        if vals.len() != 11 {
            return Err(Error::Data(format!("{ctx}: expected 11 columns, got {}", vals.len())));
        }
        rows.push(DiagnosticRow {
            t: vals[0],
            e: vals[1],
            e_half: vals[2],
            e2: vals[3],
            action: vals[4],
            res_f_plus: vals[5],
            res_f_minus: vals[6],
            res_box_e: vals[7],
            res_stress_div: vals[8],
            apriori_z: vals[9],
            apriori_bound: vals[10],
        });
    }
    Ok(rows)
}

pub fn fields_file_name(index: usize) -> String {
    format!("fields_{index:04}.csv")
}

/// One stored snapshot: the slice itself plus, when the run recorded it,
/// the window the diagnostics row at this time was computed from.
#[derive(Clone, Debug)]
pub struct FieldsFile {
    pub prev: Option<FieldState>,
    pub cur: FieldState,
    pub next: Option<FieldState>,
}

fn write_slice(
    w: &mut BufWriter<fs::File>,
    slot: &str,
    state: &FieldState,
    grid: &GridSpec,
) -> Result<()> {
    for (j, (u, ut)) in state.u.iter().zip(&state.ut).enumerate() {
        let x = grid.x_min + j as f64 * grid.dx();
        write!(w, "{slot},{},{}", fmt(state.t), fmt(x))?;
        for i in 0..u.dim() {
            write!(w, ",{}", fmt(u[i]))?;
        }
        for i in 0..ut.dim() {
            write!(w, ",{}", fmt(ut[i]))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// fields_NNNN.csv: rows slot,t,x,u0..,ut0.. with slot in {prev,cur,next};
/// a snapshot without a stored window writes only its cur rows.
pub fn write_fields(
    dir: &Path,
    index: usize,
    cur: &FieldState,
    window: Option<&(FieldState, FieldState)>,
    grid: &GridSpec,
    ambient_dim: usize,
) -> Result<()> {
    let mut w = open_writer(&dir.join(fields_file_name(index)))?;
    write!(w, "slot,t,x")?;
    for i in 0..ambient_dim {
        write!(w, ",u{i}")?;
    }
    for i in 0..ambient_dim {
        write!(w, ",ut{i}")?;
    }
    writeln!(w)?;
    if let Some((prev, _)) = window {
        write_slice(&mut w, "prev", prev, grid)?;
    }
    write_slice(&mut w, "cur", cur, grid)?;
    if let Some((_, next)) = window {
        write_slice(&mut w, "next", next, grid)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_fields(dir: &Path, index: usize, ambient_dim: usize) -> Result<FieldsFile> {
    let path = dir.join(fields_file_name(index));
    let text = fs::read_to_string(&path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Data(format!("{}: empty file", path.display())))?;
    let expected_cols = 3 + 2 * ambient_dim;
    if header.split(',').count() != expected_cols {
        return Err(Error::Data(format!(
            "{}: expected {expected_cols} columns for ambient dimension {ambient_dim}",
            path.display()
        )));
    }
    let mut slices: Vec<(String, f64, Vec<AmbientVector>, Vec<AmbientVector>)> = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let ctx = format!("{} line {}", path.display(), i + 2);
        let toks: Vec<&str> = line.split(',').collect();
        if toks.len() != expected_cols {
            return Err(Error::Data(format!(
                "{ctx}: expected {expected_cols} columns, got {}",
                toks.len()
            )));
        }
        let slot = toks[0];
        let t = parse_f64(toks[1], &ctx)?;
        let mut u = vec![0.0; ambient_dim];
        let mut ut = vec![0.0; ambient_dim];
        for i in 0..ambient_dim {
            u[i] = parse_f64(toks[3 + i], &ctx)?;
            ut[i] = parse_f64(toks[3 + ambient_dim + i], &ctx)?;
        }
        match slices.last_mut() {
            Some(s) if s.0 == slot => {
                s.2.push(AmbientVector::new(u));
                s.3.push(AmbientVector::new(ut));
            }
            _ => {
                slices.push((
                    slot.to_string(),
                    t,
                    vec![AmbientVector::new(u)],
                    vec![AmbientVector::new(ut)],
                ));
            }
        }
    }
    let mut prev = None;
    let mut cur = None;
    let mut next = None;
    for (slot, t, u, ut) in slices {
        let state = FieldState::new(t, u, ut);
        match slot.as_str() {
            "prev" => prev = Some(state),
            "cur" => cur = Some(state),
            "next" => next = Some(state),
            other => {
                return Err(Error::Data(format!(
                    "{}: unknown slot {other:?}",
                    path.display()
                )))
            }
        }
    }
    let cur =
        cur.ok_or_else(|| Error::Data(format!("{}: no cur slice", path.display())))?;
    Ok(FieldsFile { prev, cur, next })
}

/// Write all snapshot files of a trajectory; returns how many were written.
pub fn write_trajectory_fields(
    dir: &Path,
    traj: &Trajectory,
    ambient_dim: usize,
) -> Result<usize> {
    for (i, s) in traj.snapshots.iter().enumerate() {
        write_fields(dir, i, s, traj.windows.get(i), &traj.grid, ambient_dim)?;
    }
    Ok(traj.snapshots.len())
}

/// state.csv: the characteristic grids flattened strip by strip in node
/// order, with both characteristic coordinates spelled out. Columns:
/// strip,level,a,t,x,xi,eta,y0..,z0..,u0..,v0..
pub fn write_lightcone_state(dir: &Path, sol: &GlobalSolution, n: usize) -> Result<()> {
    let mut w = open_writer(&dir.join(STATE_FILE))?;
    write!(w, "strip,level,a,t,x,xi,eta")?;
    for name in ["y", "z", "u", "v"] {
        for i in 0..n {
            write!(w, ",{name}{i}")?;
        }
    }
    writeln!(w)?;
    for (si, strip) in sol.strips.iter().enumerate() {
        let grid = &strip.grid;
        for l in 0..=grid.levels() {
            for a in l..=grid.na() {
                let idx = grid.index(l, a);
                let (dt, x) = grid.node_tx(l, a);
                let t = strip.t0 + dt;
                let xi = 0.5 * (t + x);
                let eta = 0.5 * (x - t);
                write!(w, "{si},{l},{a},{},{},{},{}", fmt(t), fmt(x), fmt(xi), fmt(eta))?;
                for field in [&strip.state.y, &strip.state.z, &strip.state.u, &strip.state.v]
                {
                    for i in 0..n {
                        write!(w, ",{}", fmt(field[idx * n + i]))?;
                    }
                }
                writeln!(w)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Rebuild the per-strip characteristic states from state.csv. The strip
/// shapes come from the manifest; the row order must match the writer.
pub fn read_lightcone_state(
    dir: &Path,
    strips: &[StripInfo],
    h: f64,
    n: usize,
) -> Result<Vec<(TriangleGrid, crate::lightcone::CharacteristicState)>> {
    let path = dir.join(STATE_FILE);
    let text = fs::read_to_string(&path)?;
    let mut lines = text.lines();
    lines
        .next()
        .ok_or_else(|| Error::Data(format!("{}: empty file", path.display())))?;
    let mut out = Vec::with_capacity(strips.len());
    let mut line_no = 1usize;
    for (si, info) in strips.iter().enumerate() {
        let grid = TriangleGrid::strip(info.na, info.levels, h);
        let mut state = crate::lightcone::CharacteristicState::zeroed(grid.num_nodes(), n);
        for l in 0..=grid.levels() {
            for a in l..=grid.na() {
                let line = lines.next().ok_or_else(|| {
                    Error::Data(format!("{}: truncated at strip {si}", path.display()))
                })?;
                line_no += 1;
                let ctx = format!("{} line {line_no}", path.display());
                let toks: Vec<&str> = line.split(',').collect();
                let expected = 7 + 4 * n;
                if toks.len() != expected {
                    return Err(Error::Data(format!(
                        "{ctx}: expected {expected} columns, got {}",
                        toks.len()
                    )));
                }
                let (row_l, row_a) = (toks[1], toks[2]);
                if row_l != l.to_string() || row_a != a.to_string() {
                    return Err(Error::Data(format!(
                        "{ctx}: node order mismatch, got level {row_l} a {row_a}, want {l} {a}"
                    )));
                }
                for (f, dst) in
                    [&mut state.y, &mut state.z, &mut state.u, &mut state.v].iter_mut().enumerate()
                {
                    let idx = grid.index(l, a);
                    for i in 0..n {
                        dst[idx * n + i] = parse_f64(toks[7 + f * n + i], &ctx)?;
                    }
                }
            }
        }
        out.push((grid, state));
    }
    Ok(out)
}

/// iterations.csv: one row per Picard sweep, columns strip,iter,delta.
pub fn write_iterations(dir: &Path, sol: &GlobalSolution) -> Result<()> {
    let mut w = open_writer(&dir.join(ITERATIONS_FILE))?;
    writeln!(w, "strip,iter,delta")?;
    for (si, strip) in sol.strips.iter().enumerate() {
        for (it, delta) in strip.deltas.iter().enumerate() {
            writeln!(w, "{si},{it},{}", fmt(*delta))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Generic small summary table used by sweep.
pub fn write_summary(dir: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut w = open_writer(&dir.join(SUMMARY_FILE))?;
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Indices of the fields_NNNN.csv files present, ascending.
pub fn list_fields_indices(dir: &Path) -> Result<Vec<usize>> {
    let mut idx = Vec::new();
    for entry in fs::read_dir(dir)? {
        let name = entry?.file_name();
        let name = name.to_string_lossy();
        if let Some(rest) = name.strip_prefix("fields_").and_then(|s| s.strip_suffix(".csv")) {
            if let Ok(i) = rest.parse::<usize>() {
                idx.push(i);
            }
        }
    }
    idx.sort_unstable();
    Ok(idx)
}

/// Create the run directory. Parents are created freely; the leaf is
/// claimed with a bare create_dir when `exclusive`, so concurrent sweeps
/// cannot collide.
pub fn prepare_output_dir(dir: &Path, exclusive: bool) -> Result<PathBuf> {
    if let Some(parent) = dir.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    if exclusive {
        fs::create_dir(dir).map_err(|e| {
            Error::Validation(vec![format!(
                "output_dir: cannot claim {} ({e})",
                dir.display()
            )])
        })?;
    } else {
        fs::create_dir_all(dir)?;
    }
    Ok(dir.to_path_buf())
}
