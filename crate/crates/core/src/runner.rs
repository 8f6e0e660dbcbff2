//! Orchestration for the CLI: run a solver from a validated config into an
//! output directory, re-verify a finished run directory, and drive sweeps
//! on a worker pool. Exit-code policy lives here so the binary stays thin:
//! 0 success, 2 validation, 3 solver failure, 4 invariant breach in check.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{Mode, RunConfig, SweepConfig};
use crate::diagnostics;
use crate::error::{Error, Result};
use crate::extrinsic::{self, Boundary, FailureReport, Trajectory};
use crate::geometry::AmbientVector;
use crate::lightcone::{self, GlobalSolution};
use crate::output::{
    self, EvolveSummary, LightconeSummary, RunManifest, StripInfo, SUMMARY_FILE,
};

/// Tolerance for matching recomputed diagnostics against stored rows; the
/// recomputation runs on bit-identical inputs, so this is pure slack.
const TOL_RECHECK: f64 = 1e-12;

/// Manifold and tangency tolerances for stored snapshot constraints.
const TOL_CONSTRAINT: f64 = 1e-8;

/// Slack factor on the derivative bound sup|u| <= M/a for discretization.
const DERIV_BOUND_SLACK: f64 = 1.25;

pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Validation(_) | Error::Parse(_) => 2,
        _ => 3,
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1.0_f64.max(a.abs()).max(b.abs())
}

/// Solve the configured extrinsic Cauchy problem in memory.
pub fn evolve_trajectory(cfg: &RunConfig) -> Result<Trajectory> {
    let grid = cfg.grid_spec()?;
    let chart = cfg.chart();
    let data = cfg.initial_data()?;
    let (u0, u1) = data.ambient_fields(&chart, &grid.xs())?;
    Ok(extrinsic::solve(
        u0,
        u1,
        &grid,
        &cfg.target_manifold(),
        &cfg.two_form(),
        &cfg.scalar_potential(),
        cfg.diagnostics.snapshot_every,
        cfg.diagnostics.apriori,
    ))
}

fn evolve_summary(cfg: &RunConfig, traj: &Trajectory) -> EvolveSummary {
    let d = &traj.diagnostics;
    let apriori_lhs = if cfg.diagnostics.apriori {
        traj.snapshots.last().map(|s| {
            diagnostics::apriori_lhs_integral(s, &cfg.scalar_potential(), &traj.grid)
        })
    } else {
        None
    };
    EvolveSummary {
        e0: d.rows.first().map(|r| r.e).unwrap_or(0.0),
        relative_energy_drift: d.relative_energy_drift(),
        action_integral: d.action_integral(),
        action_is_el_residual: d.action_is_el_residual,
        apriori_enabled: d.apriori_enabled,
        apriori_lhs_integral: apriori_lhs,
        steps: traj.grid.steps(),
        snapshots: traj.snapshots.len(),
    }
}

/// Run `evolve` into `dir`, writing manifest, diagnostics, and snapshots.
pub fn run_evolve(cfg: RunConfig, dir: &Path) -> Result<RunManifest> {
    let started = Instant::now();
    let cfg = cfg.validated(Mode::Evolve)?;
    output::prepare_output_dir(dir, false)?;
    let traj = evolve_trajectory(&cfg)?;
    output::write_diagnostics(dir, &traj.diagnostics)?;
    output::write_trajectory_fields(dir, &traj, cfg.ambient_dim())?;
    let manifest = RunManifest {
        version: output::version_string(),
        mode: Mode::Evolve,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        grid: Some(traj.grid.clone()),
        evolve: Some(evolve_summary(&cfg, &traj)),
        lightcone: None,
        failure: traj.failure.clone(),
        config: cfg,
    };
    output::write_manifest(dir, &manifest)?;
    Ok(manifest)
}

fn lightcone_summary(sol: &GlobalSolution) -> LightconeSummary {
    LightconeSummary {
        a: sol.params.a,
        m: sol.params.m,
        k_admissible: sol.params.k,
        k_used: sol.k_used,
        h: sol.h,
        exhausted: sol.exhausted,
        reached_t: sol.reached_t,
        t_requested: sol.t_requested,
        strips: sol
            .strips
            .iter()
            .map(|s| StripInfo {
                t0: s.t0,
                na: s.grid.na(),
                levels: s.grid.levels(),
                sweeps: s.deltas.len(),
                residual: s.residual,
                y_z_gap: s.y_z_gap,
                isometry_drift: s.isometry_drift,
            })
            .collect(),
    }
}

/// Run `lightcone` into `dir`. A window exhausted before t_final is a
/// partial delivery: everything reached is written and the manifest carries
/// a failure report.
pub fn run_lightcone(cfg: RunConfig, dir: &Path) -> Result<RunManifest> {
    let started = Instant::now();
    let cfg = cfg.validated(Mode::Lightcone)?;
    output::prepare_output_dir(dir, false)?;
    let chart = cfg.chart();
    let sol = lightcone::extend_global(
        cfg.initial_data()?,
        &chart,
        &cfg.two_form(),
        &cfg.lightcone_run()?,
    )?;
    output::write_lightcone_state(dir, &sol, chart.dim())?;
    output::write_iterations(dir, &sol)?;
    let failure = if sol.reached_t < sol.t_requested - 1e-12 {
        Some(FailureReport {
            t: sol.reached_t,
            step: sol.strips.len(),
            message: format!(
                "domain of dependence exhausted at t = {} before t_final = {}",
                sol.reached_t, sol.t_requested
            ),
        })
    } else {
        None
    };
    let manifest = RunManifest {
        version: output::version_string(),
        mode: Mode::Lightcone,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        grid: None,
        evolve: None,
        lightcone: Some(lightcone_summary(&sol)),
        failure,
        config: cfg,
    };
    output::write_manifest(dir, &manifest)?;
    Ok(manifest)
}

/// Run `sweep` into `dir`: one exclusive subdirectory per case plus a
/// summary table, cases solved on the rayon pool.
pub fn run_sweep(cfg: RunConfig, dir: &Path) -> Result<RunManifest> {
    let started = Instant::now();
    let cfg = cfg.validated(Mode::Sweep)?;
    output::prepare_output_dir(dir, false)?;
    let sweep = cfg
        .sweep
        .clone()
        .ok_or_else(|| Error::Validation(vec!["sweep: missing".into()]))?;
    let (header, rows, any_failure) = match &sweep {
        SweepConfig::Scaling { lambdas } => sweep_scaling(&cfg, dir, lambdas)?,
        SweepConfig::Refinement { nxs } => sweep_refinement(&cfg, dir, nxs)?,
    };
    output::write_summary(dir, &header, &rows)?;
    let manifest = RunManifest {
        version: output::version_string(),
        mode: Mode::Sweep,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        grid: None,
        evolve: None,
        lightcone: None,
        failure: any_failure,
        config: cfg,
    };
    output::write_manifest(dir, &manifest)?;
    Ok(manifest)
}

fn case_config(cfg: &RunConfig, mutate: impl FnOnce(&mut RunConfig)) -> RunConfig {
    let mut c = cfg.clone();
    c.mode = None;
    c.output_dir = None;
    c.sweep = None;
    mutate(&mut c);
    c
}

type SweepRows = (String, Vec<Vec<String>>, Option<FailureReport>);

fn sweep_scaling(cfg: &RunConfig, dir: &Path, lambdas: &[f64]) -> Result<SweepRows> {
    let base_cfg = case_config(cfg, |_| {});
    let base_dir = output::prepare_output_dir(&dir.join("base"), true)?;
    let base_traj = evolve_trajectory(&base_cfg.clone().validated(Mode::Evolve)?)?;
    output::write_diagnostics(&base_dir, &base_traj.diagnostics)?;
    output::write_trajectory_fields(&base_dir, &base_traj, base_cfg.ambient_dim())?;
    let base_manifest = RunManifest {
        version: output::version_string(),
        mode: Mode::Evolve,
        wall_time_seconds: 0.0,
        grid: Some(base_traj.grid.clone()),
        evolve: Some(evolve_summary(&base_cfg, &base_traj)),
        lightcone: None,
        failure: base_traj.failure.clone(),
        config: base_cfg.clone().validated(Mode::Evolve)?,
    };
    output::write_manifest(&base_dir, &base_manifest)?;
    if let Some(f) = &base_traj.failure {
        return Ok((
            "case,lambda,sup_mismatch,relative_energy_drift,steps".into(),
            vec![],
            Some(f.clone()),
        ));
    }

    let cases: Vec<(String, RunConfig, f64)> = lambdas
        .iter()
        .map(|&lam| {
            let name = format!("lambda_{}", output::fmt_float(lam));
            let case = case_config(cfg, |c| {
                let g = c.grid.as_mut().expect("validated sweep config has a grid");
                g.x_min /= lam;
                g.x_max /= lam;
                g.t_final /= lam;
                c.initial = c.initial.as_ref().map(|d| d.scaled(lam));
            });
            (name, case, lam)
        })
        .collect();
    for (name, _, _) in &cases {
        output::prepare_output_dir(&dir.join(name), true)?;
    }
    let results: Vec<Result<(Vec<String>, Option<FailureReport>)>> = cases
        .into_par_iter()
        .map(|(name, case, lam)| {
            let manifest = run_evolve(case, &dir.join(&name))?;
            let case_traj = evolve_trajectory(&manifest.config)?;
            let transformed = extrinsic::scaling_transform(&base_traj, lam, 0.0)?;
            let got = case_traj.final_state();
            let want = transformed.final_state();
            let mut sup = 0.0_f64;
            for (a, b) in got.u.iter().zip(&want.u) {
                for i in 0..a.dim() {
                    sup = sup.max((a[i] - b[i]).abs());
                }
            }
            let drift = manifest
                .evolve
                .as_ref()
                .map(|e| e.relative_energy_drift)
                .unwrap_or(f64::NAN);
            let row = vec![
                name,
                output::fmt_float(lam),
                output::fmt_float(sup),
                output::fmt_float(drift),
                manifest.grid.as_ref().map(|g| g.steps()).unwrap_or(0).to_string(),
            ];
            Ok((row, manifest.failure))
        })
        .collect();
    let mut rows = Vec::new();
    let mut any_failure = None;
    for r in results {
        let (row, failure) = r?;
        if any_failure.is_none() {
            any_failure = failure;
        }
        rows.push(row);
    }
    Ok(("case,lambda,sup_mismatch,relative_energy_drift,steps".into(), rows, any_failure))
}

fn sweep_refinement(cfg: &RunConfig, dir: &Path, nxs: &[usize]) -> Result<SweepRows> {
    let cases: Vec<(String, RunConfig, usize)> = nxs
        .iter()
        .map(|&nx| {
            let name = format!("nx_{nx}");
            let case = case_config(cfg, |c| {
                c.grid.as_mut().expect("validated sweep config has a grid").nx = nx;
            });
            (name, case, nx)
        })
        .collect();
    for (name, _, _) in &cases {
        output::prepare_output_dir(&dir.join(name), true)?;
    }
    let results: Vec<Result<(Vec<String>, Option<FailureReport>)>> = cases
        .into_par_iter()
        .map(|(name, case, nx)| {
            let manifest = run_evolve(case, &dir.join(&name))?;
            let rows = output::read_diagnostics(&dir.join(&name))?;
            let max_of = |pick: fn(&diagnostics::DiagnosticRow) -> f64| {
                rows.iter().map(pick).fold(0.0_f64, f64::max)
            };
            let grid = manifest.grid.as_ref();
            let row = vec![
                name,
                nx.to_string(),
                output::fmt_float(grid.map(|g| g.dx()).unwrap_or(f64::NAN)),
                grid.map(|g| g.steps()).unwrap_or(0).to_string(),
                output::fmt_float(
                    manifest
                        .evolve
                        .as_ref()
                        .map(|e| e.relative_energy_drift)
                        .unwrap_or(f64::NAN),
                ),
                output::fmt_float(max_of(|r| r.res_f_plus)),
                output::fmt_float(max_of(|r| r.res_f_minus)),
                output::fmt_float(max_of(|r| r.res_box_e)),
                output::fmt_float(max_of(|r| r.res_stress_div)),
            ];
            Ok((row, manifest.failure))
        })
        .collect();
    let mut rows = Vec::new();
    let mut any_failure = None;
    for r in results {
        let (row, failure) = r?;
        if any_failure.is_none() {
            any_failure = failure;
        }
        rows.push(row);
    }
    Ok((
        "case,nx,dx,steps,relative_energy_drift,max_res_f_plus,max_res_f_minus,max_res_box_e,max_res_stress_div"
            .into(),
        rows,
        any_failure,
    ))
}

/// What `check` found; breaches nonempty means exit 4.
#[derive(Clone, Debug, Default)]
pub struct CheckReport {
    pub checks: usize,
    pub breaches: Vec<String>,
}

impl CheckReport {
    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.breaches.push(msg());
        }
    }

    fn merge_prefixed(&mut self, prefix: &str, other: CheckReport) {
        self.checks += other.checks;
        self.breaches
            .extend(other.breaches.into_iter().map(|b| format!("{prefix}: {b}")));
    }
}

/// Re-verify a finished run directory from its stored files alone.
pub fn run_check(dir: &Path) -> Result<CheckReport> {
    let manifest = output::read_manifest(dir)?;
    let mut report = CheckReport::default();
    report.check(manifest.failure.is_none(), || {
        format!(
            "run recorded a failure: {}",
            manifest.failure.as_ref().map(|f| f.message.as_str()).unwrap_or("")
        )
    });
    match manifest.mode {
        Mode::Evolve => check_evolve(dir, &manifest, &mut report)?,
        Mode::Lightcone => check_lightcone(dir, &manifest, &mut report)?,
        Mode::Sweep => check_sweep(dir, &mut report)?,
        Mode::Check => {
            report.breaches.push("manifest mode \"check\" is not a run".into());
        }
    }
    Ok(report)
}

fn check_evolve(dir: &Path, manifest: &RunManifest, report: &mut CheckReport) -> Result<()> {
    let cfg = &manifest.config;
    let grid = manifest
        .grid
        .clone()
        .ok_or_else(|| Error::Data("run.json: evolve manifest without grid".into()))?;
    let summary = manifest
        .evolve
        .clone()
        .ok_or_else(|| Error::Data("run.json: evolve manifest without summary".into()))?;
    let m = cfg.target_manifold();
    let b = cfg.two_form();
    let v = cfg.scalar_potential();
    let rows = output::read_diagnostics(dir)?;
    report.check(!rows.is_empty(), || "diagnostics.csv: no rows".into());
    if rows.is_empty() {
        return Ok(());
    }

    for (i, r) in rows.iter().enumerate() {
        let finite = [
            r.t,
            r.e,
            r.e_half,
            r.e2,
            r.action,
            r.res_f_plus,
            r.res_f_minus,
            r.res_box_e,
            r.res_stress_div,
            r.apriori_z,
            r.apriori_bound,
        ]
        .iter()
        .all(|x| x.is_finite());
        report.check(finite, || format!("diagnostics.csv row {i}: non-finite value"));
    }

    // energy conservation, the discrete form of the t-independence of E
    let e0 = rows[0].e;
    let drift = rows
        .iter()
        .map(|r| (r.e - e0).abs())
        .fold(0.0_f64, f64::max)
        / e0.abs().max(1e-12);
    report.check(rel_close(drift, summary.relative_energy_drift, TOL_RECHECK), || {
        format!(
            "energy drift mismatch: rows give {drift}, manifest says {}",
            summary.relative_energy_drift
        )
    });
    if grid.boundary == Boundary::Periodic && manifest.failure.is_none() {
        let gate = 1e-6_f64.max(100.0 * grid.dx() * grid.dx());
        report.check(drift <= gate, || {
            format!("energy drift {drift:.3e} exceeds the O(dx^2) gate {gate:.3e}")
        });
    }

    // the a priori inequality, for potentials in its sign class
    if summary.apriori_enabled && v.is_nonpositive() {
        for (i, r) in rows.iter().enumerate() {
            report.check(
                r.apriori_z <= r.apriori_bound * (1.0 + 1e-6) + 1e-12,
                || {
                    format!(
                        "row {i}: apriori_Z {} exceeds bound {}",
                        r.apriori_z, r.apriori_bound
                    )
                },
            );
        }
    }

    // recompute every stored snapshot's diagnostics from its window and
    // hold every state to the manifold and tangency constraints
    let indices = output::list_fields_indices(dir)?;
    report.check(indices.len() == summary.snapshots, || {
        format!(
            "expected {} fields files, found {}",
            summary.snapshots,
            indices.len()
        )
    });
    for &i in &indices {
        let ff = output::read_fields(dir, i, cfg.ambient_dim())?;
        for (j, (p, w)) in ff.cur.u.iter().zip(&ff.cur.ut).enumerate() {
            let dist = m.distance_to(p);
            report.check(dist <= TOL_CONSTRAINT, || {
                format!("fields {i} point {j}: off manifold by {dist:.3e}")
            });
            let defect = m.tangency_defect(p, w);
            report.check(defect <= TOL_CONSTRAINT * (1.0 + w.norm()), || {
                format!("fields {i} point {j}: velocity tangency defect {defect:.3e}")
            });
        }
        if let (Some(prev), Some(next)) = (&ff.prev, &ff.next) {
            let recomputed = diagnostics::compute_row(
                prev,
                &ff.cur,
                next,
                &grid,
                &m,
                &b,
                &v,
                summary.apriori_enabled,
                summary.e0,
            )?;
            let stored = rows
                .iter()
                .find(|r| (r.t - ff.cur.t).abs() <= 1e-12 * (1.0 + ff.cur.t.abs()));
            match stored {
                None => report
                    .breaches
                    .push(format!("fields {i}: no diagnostics row at t = {}", ff.cur.t)),
                Some(s) => {
                    let pairs = [
                        ("E", recomputed.e, s.e),
                        ("E_half", recomputed.e_half, s.e_half),
                        ("E2", recomputed.e2, s.e2),
                        ("action", recomputed.action, s.action),
                        ("res_F_plus", recomputed.res_f_plus, s.res_f_plus),
                        ("res_F_minus", recomputed.res_f_minus, s.res_f_minus),
                        ("res_box_e", recomputed.res_box_e, s.res_box_e),
                        ("res_stress_div", recomputed.res_stress_div, s.res_stress_div),
                        ("apriori_Z", recomputed.apriori_z, s.apriori_z),
                        ("apriori_bound", recomputed.apriori_bound, s.apriori_bound),
                    ];
                    for (name, a, bx) in pairs {
                        report.check(rel_close(a, bx, TOL_RECHECK), || {
                            format!(
                                "fields {i}: recomputed {name} {a} != stored {bx} at t = {}",
                                ff.cur.t
                            )
                        });
                    }
                }
            }
        }
    }

    // seeded geometric property samples at stored states
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    if let Some(&last) = indices.last() {
        let ff = output::read_fields(dir, last, cfg.ambient_dim())?;
        let dim = cfg.ambient_dim();
        for _ in 0..16 {
            let j = rng.gen_range(0..ff.cur.u.len());
            let p = &ff.cur.u[j];
            let w = AmbientVector::new((0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let tw = m.project_tangent(p, &w)?;
            let defect = m.tangency_defect(p, &tw);
            report.check(defect <= 1e-10 * (1.0 + tw.norm()), || {
                format!("projection of a sampled vector is not tangent (defect {defect:.3e})")
            });
            if !b.is_zero() {
                let a = m.project_tangent(p, &ff.cur.ut[j])?;
                let z = b.z_apply(&m, p, &a, &tw)?;
                let za = z.dot(&a).abs();
                let zb = z.dot(&tw).abs();
                let scale = 1.0 + a.norm() * tw.norm();
                report.check(za <= 1e-10 * scale && zb <= 1e-10 * scale, || {
                    format!("two-form contraction not antisymmetric (({za:.3e}, {zb:.3e}))")
                });
            }
        }
    }
    Ok(())
}

fn check_lightcone(dir: &Path, manifest: &RunManifest, report: &mut CheckReport) -> Result<()> {
    let cfg = &manifest.config;
    let summary = manifest
        .lightcone
        .clone()
        .ok_or_else(|| Error::Data("run.json: lightcone manifest without summary".into()))?;
    let chart = cfg.chart();
    let b = cfg.two_form();
    let n = chart.dim();
    let strips = output::read_lightcone_state(dir, &summary.strips, summary.h, n)?;
    report.check(strips.len() == summary.strips.len(), || {
        "state.csv strip count differs from manifest".into()
    });

    for (si, ((grid, state), info)) in strips.iter().zip(&summary.strips).enumerate() {
        let residual = lightcone::system_residual(state, &chart, &b, grid)?;
        report.check(rel_close(residual, info.residual, 1e-9), || {
            format!(
                "strip {si}: recomputed residual {residual} != stored {}",
                info.residual
            )
        });
        let gap = lightcone::y_z_gap(state);
        report.check(rel_close(gap, info.y_z_gap, 1e-9), || {
            format!("strip {si}: recomputed y-z gap {gap} != stored {}", info.y_z_gap)
        });
        let drift = lightcone::isometry_drift(state, &chart, grid)?;
        report.check(rel_close(drift, info.isometry_drift, 1e-9), || {
            format!(
                "strip {si}: recomputed isometry drift {drift} != stored {}",
                info.isometry_drift
            )
        });
        let mut contained = true;
        for idx in 0..grid.num_nodes() {
            contained &= chart.contains(state.y_at(idx)) && chart.contains(state.z_at(idx));
        }
        report.check(contained, || format!("strip {si}: node outside the chart domain"));

        // the transported derivative stays within the initial-data bound
        // whenever the strip size respects the admissible triangle estimate
        if summary.m > 0.0 && summary.k_used <= summary.k_admissible {
            let bound = summary.m / summary.a * DERIV_BOUND_SLACK + 1e-12;
            let sup_u = state.u.iter().fold(0.0_f64, |mx, x| mx.max(x.abs()));
            let sup_v = state.v.iter().fold(0.0_f64, |mx, x| mx.max(x.abs()));
            report.check(sup_u <= bound && sup_v <= bound, || {
                format!(
                    "strip {si}: derivative sup ({sup_u:.3e}, {sup_v:.3e}) exceeds M/a bound {bound:.3e}"
                )
            });
        }
    }

    // Picard termination: each strip's final sweep is below the tolerance
    let tol_fix = cfg.lightcone.as_ref().map(|l| l.tol_fix).unwrap_or(lightcone::TOL_FIX);
    let iter_text = std::fs::read_to_string(dir.join(output::ITERATIONS_FILE))?;
    let mut last_delta: Vec<Option<f64>> = vec![None; summary.strips.len()];
    for line in iter_text.lines().skip(1) {
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split(',').collect();
        if toks.len() != 3 {
            return Err(Error::Data(format!("iterations.csv: bad row {line:?}")));
        }
        let si: usize = toks[0]
            .parse()
            .map_err(|_| Error::Data(format!("iterations.csv: bad strip {line:?}")))?;
        let delta: f64 = toks[2]
            .parse()
            .map_err(|_| Error::Data(format!("iterations.csv: bad delta {line:?}")))?;
        if si < last_delta.len() {
            last_delta[si] = Some(delta);
        }
    }
    for (si, d) in last_delta.iter().enumerate() {
        match d {
            Some(d) => report.check(*d < tol_fix, || {
                format!("strip {si}: final sweep delta {d:.3e} not below {tol_fix:.1e}")
            }),
            None => report.breaches.push(format!("strip {si}: no iterations recorded")),
        }
    }

    // seeded chart property samples at stored nodes
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    if let Some((grid, state)) = strips.first() {
        let mut au = vec![0.0; n];
        let mut bu = vec![0.0; n];
        for _ in 0..16 {
            let idx = rng.gen_range(0..grid.num_nodes());
            let y = state.y_at(idx);
            let lambda_min = chart.min_metric_eigenvalue(y)?;
            report.check(lambda_min > 0.0, || {
                format!("chart metric loses positivity at a stored node ({lambda_min:.3e})")
            });
            if !b.is_zero() {
                let t = b.z_chart_components(&chart, y)?;
                let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                t.contract2(&a, &c, &mut au);
                t.contract2(&c, &a, &mut bu);
                let asym = au
                    .iter()
                    .zip(&bu)
                    .map(|(x, y)| (x + y).abs())
                    .fold(0.0_f64, f64::max);
                report.check(asym <= 1e-10 * (1.0 + t.max_abs()), || {
                    format!("chart two-form components not antisymmetric ({asym:.3e})")
                });
            }
        }
    }
    Ok(())
}

fn check_sweep(dir: &Path, report: &mut CheckReport) -> Result<()> {
    let text = std::fs::read_to_string(dir.join(SUMMARY_FILE))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Data("summary.csv: empty".into()))?;
    let cols = header.split(',').count();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        report.check(line.split(',').count() == cols, || {
            format!("summary.csv row {}: column count differs from header", i + 1)
        });
    }

    let mut subruns: Vec<std::path::PathBuf> = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() && path.join(output::MANIFEST_FILE).is_file() {
            subruns.push(path);
        }
    }
    subruns.sort();
    report.check(!subruns.is_empty(), || "sweep directory has no case runs".into());
    for sub in subruns {
        let name = sub
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let sub_report = run_check(&sub)?;
        report.merge_prefixed(&name, sub_report);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;

    fn flat_evolve_config() -> RunConfig {
        RunConfig::from_toml_str(
            r#"
target = "flat3"

[grid]
x_min = 0.0
x_max = 6.283185307179586
nx = 32
t_final = 0.5

[initial]
preset = "sine_mode"
amplitude = 0.1
wavenumber = 1.0

[diagnostics]
snapshot_every = 4
"#,
        )
        .unwrap()
    }

    #[test]
    fn evolve_writes_a_checkable_run() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = run_evolve(flat_evolve_config(), dir.path()).unwrap();
        assert!(manifest.failure.is_none());
        assert!(dir.path().join("run.json").is_file());
        assert!(dir.path().join("diagnostics.csv").is_file());
        assert!(dir.path().join("fields_0000.csv").is_file());
        let report = run_check(dir.path()).unwrap();
        assert!(report.breaches.is_empty(), "{:?}", report.breaches);
        assert!(report.checks > 50, "only {} checks ran", report.checks);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        run_evolve(flat_evolve_config(), d1.path()).unwrap();
        run_evolve(flat_evolve_config(), d2.path()).unwrap();
        let a = std::fs::read(d1.path().join("diagnostics.csv")).unwrap();
        let b = std::fs::read(d2.path().join("diagnostics.csv")).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b);
        let fa = std::fs::read(d1.path().join("fields_0000.csv")).unwrap();
        let fb = std::fs::read(d2.path().join("fields_0000.csv")).unwrap();
        assert_eq!(fa, fb);
    }

    #[test]
    fn corrupted_diagnostics_fail_the_check() {
        let dir = tempfile::tempdir().unwrap();
        run_evolve(flat_evolve_config(), dir.path()).unwrap();
        let path = dir.path().join("diagnostics.csv");
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        // corrupt the energy column of the first snapshot row
        let mut cols: Vec<String> = lines[1].split(',').map(String::from).collect();
        cols[1] = "999.0".into();
        lines[1] = cols.join(",");
        std::fs::write(&path, lines.join("\n") + "\n").unwrap();
        let report = run_check(dir.path()).unwrap();
        assert!(!report.breaches.is_empty());
    }

    #[test]
    fn lightcone_run_checks_clean() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig::from_toml_str(
            r#"
target = "sphere3"

[initial]
preset = "gaussian_bump"
amplitude = 0.2
width = 0.6
velocity_amplitude = 0.1
velocity_component = 1

[two_form]
kind = "sphere3_volume"
c = 1.0

[lightcone]
l = 1.0
n_char = 16
t_final = 0.2
"#,
        )
        .unwrap();
        let manifest = run_lightcone(cfg, dir.path()).unwrap();
        assert!(manifest.failure.is_none(), "{:?}", manifest.failure);
        let report = run_check(dir.path()).unwrap();
        assert!(report.breaches.is_empty(), "{:?}", report.breaches);
    }

    #[test]
    fn partial_lightcone_run_reports_failure() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig::from_toml_str(
            r#"
target = "flat3"

[initial]
preset = "sine_mode"
amplitude = 0.05
wavenumber = 1.0

[lightcone]
l = 1.0
n_char = 8
t_final = 2.0
k_override = 0.25
"#,
        )
        .unwrap();
        let manifest = run_lightcone(cfg, dir.path()).unwrap();
        assert!(manifest.failure.is_some());
        let report = run_check(dir.path()).unwrap();
        assert!(report.breaches.iter().any(|b| b.contains("failure")), "{:?}", report.breaches);
    }

    #[test]
    fn scaling_sweep_produces_cases_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = flat_evolve_config();
        cfg.sweep = Some(SweepConfig::Scaling { lambdas: vec![1.0, 2.0] });
        let manifest = run_sweep(cfg, dir.path()).unwrap();
        assert!(manifest.failure.is_none());
        assert!(dir.path().join("base/run.json").is_file());
        assert!(dir.path().join("lambda_1/run.json").is_file());
        assert!(dir.path().join("lambda_2/run.json").is_file());
        let text = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        // flat linear waves scale exactly up to discretization error
        for line in &lines[1..] {
            let sup: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
            assert!(sup < 1e-2, "{line}");
        }
        let report = run_check(dir.path()).unwrap();
        assert!(report.breaches.is_empty(), "{:?}", report.breaches);
    }

    #[test]
    fn validation_failures_exit_code_two() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = flat_evolve_config();
        cfg.grid.as_mut().unwrap().cfl = 2.0;
        let err = run_evolve(cfg, dir.path()).unwrap_err();
        assert_eq!(exit_code_for(&err), 2);
        assert_eq!(exit_code_for(&Error::Data("x".into())), 3);
    }
}
