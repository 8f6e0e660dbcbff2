//! End-to-end acceptance gates for the solver suite. Each test prints one
//! CRITERION line with the measured numbers and then asserts, so
//! `cargo test --test acceptance -- --nocapture` doubles as a report.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Instant;

use stringwave::config::{
    DiagnosticsConfig, GridConfig, Mode, RunConfig, ScalarPotentialConfig, TargetKind,
    TwoFormConfig,
};
use stringwave::extrinsic::{self, Boundary, FieldState, GridSpec, Trajectory};
use stringwave::geometry::{AmbientVector, TargetManifold};
use stringwave::initial::InitialData;
use stringwave::lightcone::{self, TriangleGrid, K_SAFETY};
use stringwave::potentials::{ScalarPotential, TwoFormPotential};
use stringwave::runner;

/// Gate tolerances, fixed here rather than derived at run time.
const DALEMBERT_SUP_ERR: f64 = 5e-4;
const RICHARDSON_ORDER: (f64, f64) = (1.8, 2.2);
const DALEMBERT_BUDGET_SECS: f64 = 10.0;
const ENERGY_DRIFT: f64 = 1e-3;
const DRIFT_HALVING_RATIO: (f64, f64) = (3.5, 4.5);
const PICARD_TOL: f64 = 1e-10;
const PICARD_SWEEPS: usize = 30;
const RESIDUAL_ORDER_RATIO: (f64, f64) = (3.0, 5.5);
const GAP_OVER_RESIDUAL: f64 = 5.0;
const CROSS_SOLVER_SUP: f64 = 1e-3;
const SCALING_SUP: f64 = 1e-3;
const SCALING_BROKEN_SUP: f64 = 1e-1;
const CONSTANT_RESIDUAL: f64 = 1e-12;
const APRIORI_REL_SLACK: f64 = 1e-6;
const GRONWALL_LOG_SLACK: f64 = 0.1;
const ISOMETRY_RATIO: (f64, f64) = (3.5, 4.5);
const SUITE_BUDGET_SECS: f64 = 300.0;

fn report(id: u32, pass: bool, detail: &str) {
    println!("CRITERION {id:2} {}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id}: {detail}");
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("..").join("..").join("configs")
}

fn shipped(name: &str) -> RunConfig {
    RunConfig::from_path(&configs_dir().join(name)).expect("shipped config parses")
}

fn evolve(cfg: &RunConfig) -> Trajectory {
    let traj = runner::evolve_trajectory(cfg).expect("evolve sets up");
    assert!(traj.failure.is_none(), "run failed: {:?}", traj.failure);
    traj
}

// Criterion 1: with a flat target and no couplings the solver must
// reproduce the d'Alembert standing wave, at second order, quickly.

fn dalembert_sup_error(nx: usize) -> f64 {
    let grid = GridSpec::with_cfl(0.0, TAU, nx, 0.5, 10.0, Boundary::Periodic);
    let xs = grid.xs();
    let u0 = xs.iter().map(|&x| AmbientVector::new(vec![0.1 * x.sin(), 0.0, 0.0])).collect();
    let u1 = xs.iter().map(|_| AmbientVector::zeros(3)).collect();
    let traj = extrinsic::solve(
        u0,
        u1,
        &grid,
        &TargetManifold::flat3(),
        &TwoFormPotential::Zero,
        &ScalarPotential::Zero,
        10,
        false,
    );
    assert!(traj.failure.is_none(), "flat run failed: {:?}", traj.failure);
    let mut sup = 0.0_f64;
    for snap in &traj.snapshots {
        let c = snap.t.cos();
        for (j, &x) in xs.iter().enumerate() {
            sup = sup
                .max((snap.u[j][0] - 0.1 * x.sin() * c).abs())
                .max(snap.u[j][1].abs())
                .max(snap.u[j][2].abs());
        }
    }
    sup
}

#[test]
fn criterion_01_flat_target_matches_dalembert() {
    let t0 = Instant::now();
    let errs: Vec<f64> = [128, 256, 512].iter().map(|&nx| dalembert_sup_error(nx)).collect();
    let secs = t0.elapsed().as_secs_f64();
    let p1 = (errs[0] / errs[1]).log2();
    let p2 = (errs[1] / errs[2]).log2();
    let in_window = |p: f64| p >= RICHARDSON_ORDER.0 && p <= RICHARDSON_ORDER.1;
    let pass = errs[2] <= DALEMBERT_SUP_ERR
        && in_window(p1)
        && in_window(p2)
        && secs < DALEMBERT_BUDGET_SECS;
    report(
        1,
        pass,
        &format!(
            "sup err {:.3e} (gate {DALEMBERT_SUP_ERR:.0e}), orders {p1:.2}/{p2:.2}, {secs:.1}s",
            errs[2]
        ),
    );
}

// Criteria 2, 3, 9 share the sphere benchmark runs.

fn sphere_bv_config(nx: usize) -> RunConfig {
    let mut cfg = shipped("sphere3_bv.toml");
    cfg.output_dir = None;
    if let Some(g) = cfg.grid.as_mut() {
        g.nx = nx;
    }
    cfg
}

fn sphere_bv_512() -> &'static Trajectory {
    static T: OnceLock<Trajectory> = OnceLock::new();
    T.get_or_init(|| evolve(&sphere_bv_config(512)))
}

fn sphere_bv_256() -> &'static Trajectory {
    static T: OnceLock<Trajectory> = OnceLock::new();
    T.get_or_init(|| evolve(&sphere_bv_config(256)))
}

#[test]
fn criterion_02_energy_conservation_on_the_sphere() {
    let drift_fine = sphere_bv_512().diagnostics.relative_energy_drift();
    let drift_coarse = sphere_bv_256().diagnostics.relative_energy_drift();
    let ratio = drift_coarse / drift_fine;
    let pass = drift_fine <= ENERGY_DRIFT
        && ratio >= DRIFT_HALVING_RATIO.0
        && ratio <= DRIFT_HALVING_RATIO.1;
    report(
        2,
        pass,
        &format!(
            "drift {drift_fine:.3e} (gate {ENERGY_DRIFT:.0e}), halving ratio {ratio:.2}"
        ),
    );
}

#[test]
fn criterion_03_two_form_does_not_feed_the_energy_balance() {
    let mut cfg0 = sphere_bv_config(256);
    cfg0.two_form = TwoFormConfig::Sphere3Volume { c: 0.0 };
    let with_b = &sphere_bv_256().diagnostics.rows;
    let without_b = evolve(&cfg0);
    let rows0 = &without_b.diagnostics.rows;
    assert_eq!(with_b.len(), rows0.len(), "same grid must give same rows");
    let e0_b = with_b[0].e;
    let e0_0 = rows0[0].e;
    let mut sup_diff = 0.0_f64;
    let mut sup_base = 0.0_f64;
    for (r1, r0) in with_b.iter().zip(rows0) {
        sup_diff = sup_diff.max(((r1.e - e0_b) / e0_b - (r0.e - e0_0) / e0_0).abs());
        sup_base = sup_base.max(((r0.e - e0_0) / e0_0).abs());
    }
    // The recorded E(0) uses the centered t=0 velocity, which feels the
    // two-form through the first step at O(dt^2); only that start-family
    // term may differ, never the physical energy of the shared data.
    let pass = (e0_b - e0_0).abs() <= 1e-6 * e0_b.abs() && sup_diff <= 2.0 * sup_base;
    report(
        3,
        pass,
        &format!(
            "drift-curve gap {sup_diff:.3e} vs 2x baseline {:.3e}, E(0) match {:.1e}",
            2.0 * sup_base,
            (e0_b - e0_0).abs()
        ),
    );
}

// Criteria 4 and 10 share one refinement family of triangle solves.

struct TriangleCase {
    sweeps: usize,
    last_delta: f64,
    residual: f64,
    gap: f64,
    drift: f64,
}

fn triangle_cases() -> &'static Vec<TriangleCase> {
    static C: OnceLock<Vec<TriangleCase>> = OnceLock::new();
    C.get_or_init(|| {
        let cfg = shipped("lightcone_sphere3.toml");
        let chart = cfg.chart();
        let b = cfg.two_form();
        let data = cfg.initial_data().expect("shipped data").clone();
        let run = cfg.lightcone_run().expect("shipped lightcone block");
        let n = chart.dim();
        let probes = 8 * run.n_char + 1;
        let spacing = 2.0 * run.l / (probes - 1) as f64;
        let xs: Vec<f64> = (0..probes).map(|j| -run.l + j as f64 * spacing).collect();
        let (phi0, phi1) = data.chart_samples(&xs, n);
        let params = lightcone::compute_bounds(&phi0, &phi1, &chart, run.l, spacing)
            .expect("bounds from smooth data");
        let k_used = K_SAFETY * params.k;
        [64usize, 128, 256]
            .iter()
            .map(|&n_char| {
                let grid = TriangleGrid::triangle(k_used, n_char);
                let (p0, p1) = data.chart_samples(&grid.base_xs(), n);
                let st0 = lightcone::to_characteristic_data(&p0, &p1, &chart, &grid)
                    .expect("characteristic data");
                let (state, deltas) =
                    lightcone::solve_triangle(st0, &chart, &b, &grid, PICARD_TOL, PICARD_SWEEPS)
                        .expect("fixed point within the sweep budget");
                let residual = lightcone::system_residual(&state, &chart, &b, &grid)
                    .expect("residual evaluates");
                let gap = lightcone::y_z_gap(&state);
                let drift = lightcone::isometry_drift(&state, &chart, &grid)
                    .expect("isometry drift evaluates");
                TriangleCase {
                    sweeps: deltas.len(),
                    last_delta: *deltas.last().expect("at least one sweep"),
                    residual,
                    gap,
                    drift,
                }
            })
            .collect()
    })
}

#[test]
fn criterion_04_picard_fixed_point_and_residual_order() {
    let cases = triangle_cases();
    let r1 = cases[0].residual / cases[1].residual;
    let r2 = cases[1].residual / cases[2].residual;
    let in_window = |r: f64| r >= RESIDUAL_ORDER_RATIO.0 && r <= RESIDUAL_ORDER_RATIO.1;
    let mut pass = in_window(r1) && in_window(r2);
    for c in cases {
        pass = pass
            && c.sweeps <= PICARD_SWEEPS
            && c.last_delta < PICARD_TOL
            && c.gap <= GAP_OVER_RESIDUAL * c.residual;
    }
    report(
        4,
        pass,
        &format!(
            "sweeps {}/{}/{}, residual ratios {r1:.2}/{r2:.2}, gap/res {:.2}",
            cases[0].sweeps,
            cases[1].sweeps,
            cases[2].sweeps,
            cases.iter().map(|c| c.gap / c.residual).fold(0.0_f64, f64::max)
        ),
    );
}

// Criterion 5: both solvers on the same dependence triangle.

fn cross_solver_sup(
    m: &TargetManifold,
    b: &TwoFormPotential,
    data: &InitialData,
    n_char: usize,
) -> f64 {
    assert!(n_char.is_multiple_of(2), "even n_char keeps the grids aligned");
    let chart = m.default_chart();
    let n = chart.dim();
    let l_radius = 1.0;
    let probes = 8 * n_char + 1;
    let spacing = 2.0 * l_radius / (probes - 1) as f64;
    let xs: Vec<f64> = (0..probes).map(|j| -l_radius + j as f64 * spacing).collect();
    let (phi0, phi1) = data.chart_samples(&xs, n);
    let params = lightcone::compute_bounds(&phi0, &phi1, &chart, l_radius, spacing)
        .expect("bounds from smooth data");
    let k_used = K_SAFETY * params.k;

    let tri = TriangleGrid::triangle(k_used, n_char);
    let (p0, p1) = data.chart_samples(&tri.base_xs(), n);
    let st0 =
        lightcone::to_characteristic_data(&p0, &p1, &chart, &tri).expect("characteristic data");
    let (state, _) = lightcone::solve_triangle(
        st0,
        &chart,
        b,
        &tri,
        lightcone::TOL_FIX,
        lightcone::MAX_ITER,
    )
    .expect("triangle solve converges");

    // Matched grid: dx = 2h puts every even lightcone level on grid nodes,
    // dt = h lands a time slice on every level, and the padding keeps the
    // fixed ends causally disconnected from the triangle.
    let h = tri.h();
    let na = tri.na();
    let pad = n_char / 2 + 2;
    let half = (na + 2 * pad) as f64 * h;
    let grid = GridSpec::with_dt(-half, half, na + 2 * pad, h, tri.height(), Boundary::FixedEnds);
    let (u0, u1) = data.ambient_fields(&chart, &grid.xs()).expect("embedded data");
    let traj = extrinsic::solve(u0, u1, &grid, m, b, &ScalarPotential::Zero, 1, false);
    assert!(traj.failure.is_none(), "grid run failed: {:?}", traj.failure);

    let mut sup = 0.0_f64;
    for level in (0..=tri.levels()).step_by(2) {
        let snap = traj.sample_at(level as f64 * h).expect("snapshot at every level");
        for a in level..=na {
            let y = state.y_at(tri.index(level, a));
            let p = chart.embed(y).expect("solution stays in the chart");
            let j = a + pad - level / 2;
            sup = sup.max(p.distance(&snap.u[j]));
        }
    }
    sup
}

#[test]
fn criterion_05_solvers_agree_on_the_common_triangle() {
    let bump = InitialData::GaussianBump {
        amplitude: 0.3,
        width: 0.5,
        center: 0.0,
        component: 0,
        velocity_amplitude: 0.2,
        velocity_component: 1,
    };
    let flat = cross_solver_sup(
        &TargetManifold::flat3(),
        &TwoFormPotential::ConstantVolume3 { c: 1.0 },
        &bump,
        64,
    );
    let sphere = cross_solver_sup(
        &TargetManifold::sphere3(1.0),
        &TwoFormPotential::Sphere3Volume { c: 1.0 },
        &bump,
        64,
    );
    let pass = flat <= CROSS_SOLVER_SUP && sphere <= CROSS_SOLVER_SUP;
    report(
        5,
        pass,
        &format!("sup mismatch flat {flat:.3e}, sphere {sphere:.3e} (gate {CROSS_SOLVER_SUP:.0e})"),
    );
}

// Criterion 6: lambda-rescaled runs match the transformed base run exactly
// when the scalar potential vanishes, and visibly do not when it does not.

fn scaling_mismatch(pot: ScalarPotentialConfig) -> f64 {
    let make = |lambda: f64, pot: ScalarPotentialConfig| RunConfig {
        mode: None,
        target: TargetKind::Flat3,
        radius: None,
        output_dir: None,
        seed: 0,
        grid: Some(GridConfig {
            x_min: -1.0 / lambda,
            x_max: 1.0 / lambda,
            nx: 256,
            cfl: 0.5,
            t_final: 4.0 / lambda,
            boundary: Boundary::Periodic,
        }),
        initial: Some(
            InitialData::SineMode {
                amplitude: 0.3,
                wavenumber: std::f64::consts::PI,
                component: 0,
                velocity_amplitude: 0.2,
                velocity_component: 1,
            }
            .scaled(lambda),
        ),
        scalar_potential: pot,
        two_form: TwoFormConfig::ConstantVolume3 { c: 1.0 },
        lightcone: None,
        sweep: None,
        diagnostics: DiagnosticsConfig { apriori: false, snapshot_every: 10 },
    };
    let base = evolve(&make(1.0, pot.clone()));
    let expected = extrinsic::scaling_transform(&base, 2.0, 0.0).expect("transform");
    let case = evolve(&make(2.0, pot));
    let a = case.final_state();
    let b = expected.final_state();
    assert!((a.t - b.t).abs() <= 1e-9, "final times must line up");
    assert_eq!(a.u.len(), b.u.len());
    a.u.iter().zip(&b.u).map(|(p, q)| p.distance(q)).fold(0.0_f64, f64::max)
}

#[test]
fn criterion_06_scaling_invariance_and_its_falsification() {
    let invariant = scaling_mismatch(ScalarPotentialConfig::Zero);
    // A potential with no definite scaling weight: the rescaled run feels
    // alpha at the wrong strength, so the oscillation frequencies disagree
    // and the mismatch accumulates over the four time units of the base run.
    let broken = scaling_mismatch(ScalarPotentialConfig::Quadratic {
        center: vec![0.0, 0.0, 0.0],
        alpha: -2.0,
    });
    let pass = invariant <= SCALING_SUP && broken > SCALING_BROKEN_SUP;
    report(
        6,
        pass,
        &format!(
            "V = 0 mismatch {invariant:.3e} (gate {SCALING_SUP:.0e}), \
             V != 0 mismatch {broken:.3e} (must exceed {SCALING_BROKEN_SUP:.0e})"
        ),
    );
}

// Criterion 7: conservation-law residuals fall at second order on every
// shipped scenario and vanish on constant solutions.

fn residual_maxima(cfg: &RunConfig) -> [f64; 3] {
    let traj = evolve(cfg);
    let mut m = [0.0_f64; 3];
    for r in &traj.diagnostics.rows {
        m[0] = m[0].max(r.res_f_plus);
        m[1] = m[1].max(r.res_f_minus);
        m[2] = m[2].max(r.res_box_e);
    }
    m
}

#[test]
fn criterion_07_conservation_residuals_fall_at_second_order() {
    let scenarios =
        ["dalembert_flat.toml", "sphere3_bv.toml", "sphere3_b0.toml", "quadratic_well.toml"];
    let mut pass = true;
    let mut worst: (f64, &str) = (4.0, "none");
    for name in scenarios {
        let mut cfg = shipped(name);
        cfg.output_dir = None;
        if let Some(g) = cfg.grid.as_mut() {
            g.t_final = 2.0;
        }
        let mut coarse_cfg = cfg.clone();
        coarse_cfg.grid.as_mut().expect("grid").nx = 128;
        cfg.grid.as_mut().expect("grid").nx = 256;
        let coarse = residual_maxima(&coarse_cfg);
        let fine = residual_maxima(&cfg);
        for i in 0..3 {
            let ratio = coarse[i] / fine[i];
            if !(ratio >= RESIDUAL_ORDER_RATIO.0 && ratio <= RESIDUAL_ORDER_RATIO.1) {
                pass = false;
            }
            if (ratio - 4.0).abs() > (worst.0 - 4.0).abs() {
                worst = (ratio, name);
            }
        }
    }

    let constant = RunConfig {
        mode: None,
        target: TargetKind::Sphere3,
        radius: Some(1.0),
        output_dir: None,
        seed: 0,
        grid: Some(GridConfig {
            x_min: -1.0,
            x_max: 1.0,
            nx: 64,
            cfl: 0.5,
            t_final: 1.0,
            boundary: Boundary::Periodic,
        }),
        initial: Some(InitialData::Constant {
            y: vec![0.2, -0.1, 0.15],
            velocity: vec![0.0, 0.0, 0.0],
        }),
        scalar_potential: ScalarPotentialConfig::Zero,
        two_form: TwoFormConfig::Sphere3Volume { c: 1.0 },
        lightcone: None,
        sweep: None,
        diagnostics: DiagnosticsConfig { apriori: false, snapshot_every: 10 },
    };
    let const_res = residual_maxima(&constant);
    let const_max = const_res.iter().fold(0.0_f64, |m, &r| m.max(r));
    pass = pass && const_max <= CONSTANT_RESIDUAL;
    report(
        7,
        pass,
        &format!(
            "worst refinement ratio {:.2} ({}), constant-solution residual {const_max:.1e}",
            worst.0, worst.1
        ),
    );
}

// Criterion 8: the quartic functional stays under its conserved bound on
// every shipped scenario whose potential is in the admissible class.

#[test]
fn criterion_08_quartic_functional_bound() {
    let scenarios = ["dalembert_flat.toml", "sphere3_b0.toml", "quadratic_well.toml"];
    let mut pass = true;
    let mut worst = f64::NEG_INFINITY;
    for name in scenarios {
        let mut cfg = shipped(name);
        cfg.output_dir = None;
        assert!(cfg.diagnostics.apriori, "{name} must record the functional");
        assert!(
            cfg.scalar_potential().is_nonpositive(),
            "{name} must use an admissible potential"
        );
        let traj = evolve(&cfg);
        for r in &traj.diagnostics.rows {
            let slack = APRIORI_REL_SLACK * r.apriori_bound.abs() + 1e-12;
            if r.apriori_z > r.apriori_bound + slack {
                pass = false;
            }
            worst = worst.max(r.apriori_z - r.apriori_bound);
        }
    }
    report(8, pass, &format!("max excess over the bound {worst:.3e} (slack is relative {APRIORI_REL_SLACK:.0e})"));
}

// Criterion 9: twin runs separated by a 1e-6 data perturbation stay within
// exponential (Gronwall) growth fitted on the first time unit.

fn h1_distance(a: &FieldState, b: &FieldState, grid: &GridSpec) -> f64 {
    let du: Vec<AmbientVector> = a.u.iter().zip(&b.u).map(|(p, q)| p - q).collect();
    let dut: Vec<AmbientVector> = a.ut.iter().zip(&b.ut).map(|(p, q)| p - q).collect();
    let dux = extrinsic::central_dx(&du, grid);
    let mut s = 0.0;
    for j in 0..du.len() {
        s += grid.weight(j) * (du[j].norm_sq() + dux[j].norm_sq() + dut[j].norm_sq());
    }
    s.sqrt()
}

#[test]
fn criterion_09_gronwall_stability_of_twin_runs() {
    let base = sphere_bv_256();
    let mut cfg = sphere_bv_config(256);
    if let Some(InitialData::GaussianBump { amplitude, .. }) = cfg.initial.as_mut() {
        *amplitude += 1e-6;
    } else {
        panic!("sphere scenario carries bump data");
    }
    let pert = evolve(&cfg);
    assert_eq!(base.snapshots.len(), pert.snapshots.len());
    let d: Vec<(f64, f64)> = base
        .snapshots
        .iter()
        .zip(&pert.snapshots)
        .map(|(a, b)| (a.t, h1_distance(a, b, &base.grid)))
        .collect();
    let d0 = d[0].1;
    let c_fit = d
        .iter()
        .filter(|(t, _)| *t > 0.0 && *t <= 1.0)
        .map(|(t, v)| (v / d0).ln() / t)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut pass = d0 > 0.0 && d0 <= 5e-6 && c_fit.is_finite();
    let mut worst = f64::NEG_INFINITY;
    for (t, v) in &d[1..] {
        let excess = (v / d0).ln() - c_fit * t;
        worst = worst.max(excess);
        if excess > GRONWALL_LOG_SLACK {
            pass = false;
        }
    }
    report(
        9,
        pass,
        &format!(
            "d(0) {d0:.2e}, fitted C {c_fit:.3}, max log excess {worst:.3} (slack {GRONWALL_LOG_SLACK})"
        ),
    );
}

// Criterion 10: the g-norm of u transported along characteristics drifts
// only at the discretization order.

#[test]
fn criterion_10_transport_isometry_drift() {
    let cases = triangle_cases();
    let r1 = cases[0].drift / cases[1].drift;
    let r2 = cases[1].drift / cases[2].drift;
    let in_window = |r: f64| r >= ISOMETRY_RATIO.0 && r <= ISOMETRY_RATIO.1;
    let pass = in_window(r1) && in_window(r2);
    report(
        10,
        pass,
        &format!(
            "drift {:.2e}/{:.2e}/{:.2e}, halving ratios {r1:.2}/{r2:.2}",
            cases[0].drift, cases[1].drift, cases[2].drift
        ),
    );
}

// Criterion 11: every shipped scenario runs and passes the full stored-data
// audit within the suite budget.

#[test]
fn criterion_11_shipped_scenarios_check_clean() {
    let t0 = Instant::now();
    let tmp = tempfile::tempdir().expect("tempdir");
    let mut names: Vec<String> = std::fs::read_dir(configs_dir())
        .expect("configs directory")
        .filter_map(|e| {
            let name = e.expect("dir entry").file_name().into_string().expect("utf8 name");
            name.ends_with(".toml").then_some(name)
        })
        .collect();
    names.sort();
    assert!(names.len() >= 8, "expected the full scenario set, found {names:?}");
    let mut breaches = Vec::new();
    let mut checks = 0_usize;
    for name in &names {
        let cfg = shipped(name);
        let mode = cfg.mode.expect("shipped configs pin a mode");
        let dir = tmp.path().join(name.trim_end_matches(".toml"));
        let manifest = match mode {
            Mode::Evolve => runner::run_evolve(cfg, &dir),
            Mode::Lightcone => runner::run_lightcone(cfg, &dir),
            Mode::Sweep => runner::run_sweep(cfg, &dir),
            Mode::Check => panic!("no shipped check configs"),
        }
        .unwrap_or_else(|e| panic!("{name} failed to run: {e}"));
        if let Some(f) = &manifest.failure {
            breaches.push(format!("{name}: run failed at t = {}: {}", f.t, f.message));
        }
        let rep = runner::run_check(&dir).unwrap_or_else(|e| panic!("{name} check errored: {e}"));
        checks += rep.checks;
        breaches.extend(rep.breaches.into_iter().map(|b| format!("{name}: {b}")));
    }
    let secs = t0.elapsed().as_secs_f64();
    let pass = breaches.is_empty() && secs < SUITE_BUDGET_SECS;
    report(
        11,
        pass,
        &format!(
            "{} scenarios, {checks} checks, {} breaches, {secs:.0}s (budget {SUITE_BUDGET_SECS:.0}s){}",
            names.len(),
            breaches.len(),
            if breaches.is_empty() {
                String::new()
            } else {
                format!("; first: {}", breaches[0])
            }
        ),
    );
}
