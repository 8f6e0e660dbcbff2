//! Explicit solver for the second-order form of the equations of motion,
//! u_tt - u_xx = II(u_t, u_t) - II(u_x, u_x) + Z(u_t ^ u_x) + grad V(u),
//! posed for the embedded map u(t, x) in the ambient space of the target.
//! The scheme is leapfrog with nearest-point projection after every step,
//! second order in space and time.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, DiagnosticSeries};
use crate::error::{Error, Result};
use crate::geometry::{AmbientVector, TargetManifold, TOL_ON_MANIFOLD};
use crate::potentials::{ScalarPotential, TwoFormPotential};

/// Hard ceiling on dt/dx; the characteristic speed is 1.
pub const CFL_MAX: f64 = 0.5;

/// Velocity magnitude treated as a numerical fault. The covered settings
/// have global smooth solutions, so reaching this indicates scheme failure,
/// not physics.
pub const BLOWUP_THRESHOLD: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// x_max is identified with x_min; the grid stores nx points.
    Periodic,
    /// nx+1 points with clamped ghost values outside the ends. This leaks
    /// energy through the boundary, so conservation studies use Periodic.
    FixedEnds,
}

/// Uniform space-time grid for the extrinsic solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub dt: f64,
    pub t_final: f64,
    pub boundary: Boundary,
}

impl GridSpec {
    /// Grid with dt chosen as the largest step <= cfl * dx that divides
    /// t_final evenly.
    pub fn with_cfl(
        x_min: f64,
        x_max: f64,
        nx: usize,
        cfl: f64,
        t_final: f64,
        boundary: Boundary,
    ) -> Self {
        let dx = (x_max - x_min) / nx as f64;
        let steps = (t_final / (cfl * dx)).ceil().max(1.0);
        GridSpec { x_min, x_max, nx, dt: t_final / steps, t_final, boundary }
    }

    pub fn with_dt(
        x_min: f64,
        x_max: f64,
        nx: usize,
        dt: f64,
        t_final: f64,
        boundary: Boundary,
    ) -> Self {
        GridSpec { x_min, x_max, nx, dt, t_final, boundary }
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn num_points(&self) -> usize {
        match self.boundary {
            Boundary::Periodic => self.nx,
            Boundary::FixedEnds => self.nx + 1,
        }
    }

    pub fn xs(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.num_points()).map(|j| self.x_min + j as f64 * dx).collect()
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn check_cfl(&self) -> Result<()> {
        let ratio = self.dt / self.dx();
        if ratio > CFL_MAX * (1.0 + 1e-12) {
            return Err(Error::CflViolation { ratio, max: CFL_MAX });
        }
        Ok(())
    }

    /// Stencil neighbors (left, right) of point j, wrapping or clamping.
    pub fn neighbors(&self, j: usize) -> (usize, usize) {
        let np = self.num_points();
        match self.boundary {
            Boundary::Periodic => ((j + np - 1) % np, (j + 1) % np),
            Boundary::FixedEnds => (j.saturating_sub(1), (j + 1).min(np - 1)),
        }
    }

    /// Quadrature weight of point j (trapezoidal; uniform on the circle).
    pub fn weight(&self, j: usize) -> f64 {
        let dx = self.dx();
        match self.boundary {
            Boundary::Periodic => dx,
            Boundary::FixedEnds => {
                if j == 0 || j == self.nx {
                    0.5 * dx
                } else {
                    dx
                }
            }
        }
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().enumerate().map(|(j, v)| self.weight(j) * v).sum()
    }
}

/// The evolving pair (u, u_t) on one time slice.
#[derive(Clone, Debug)]
pub struct FieldState {
    pub t: f64,
    pub u: Vec<AmbientVector>,
    pub ut: Vec<AmbientVector>,
}

impl FieldState {
    pub fn new(t: f64, u: Vec<AmbientVector>, ut: Vec<AmbientVector>) -> Self {
        FieldState { t, u, ut }
    }

    pub fn validate(&self, m: &TargetManifold, grid: &GridSpec) -> Result<()> {
        if self.u.len() != grid.num_points() || self.ut.len() != self.u.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.num_points(),
                got: self.u.len().min(self.ut.len()),
            });
        }
        for (p, w) in self.u.iter().zip(&self.ut) {
            m.check_on_manifold(p, TOL_ON_MANIFOLD)?;
            let defect = m.tangency_defect(p, w);
            let tol = 1e-8 * (1.0 + w.norm());
            if defect > tol {
                return Err(Error::NotTangent { defect, tol });
            }
        }
        Ok(())
    }

    pub fn max_ut_norm(&self) -> f64 {
        self.ut.iter().fold(0.0, |m, w| m.max(w.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().all(|p| p.is_finite()) && self.ut.iter().all(|w| w.is_finite())
    }
}

/// Central x-derivative of a vector field on the grid.
pub fn central_dx(f: &[AmbientVector], grid: &GridSpec) -> Vec<AmbientVector> {
    let s = 0.5 / grid.dx();
    (0..f.len())
        .map(|j| {
            let (jm, jp) = grid.neighbors(j);
            (&f[jp] - &f[jm]).scaled(s)
        })
        .collect()
}

/// Second x-derivative D+D- of a vector field on the grid.
pub fn second_dx(f: &[AmbientVector], grid: &GridSpec) -> Vec<AmbientVector> {
    let s = 1.0 / (grid.dx() * grid.dx());
    (0..f.len())
        .map(|j| {
            let (jm, jp) = grid.neighbors(j);
            let mut d = &f[jp] + &f[jm];
            d.add_scaled(&f[j], -2.0);
            d.scaled(s)
        })
        .collect()
}

/// The full curvature/potential right-hand side
/// II(u_t, u_t) - II(u_x, u_x) + Z(u_t ^ u_x) + grad V(u), pointwise.
/// u_x is the central difference, projected tangent so the Z inputs are
/// admissible.
pub fn rhs(
    state: &FieldState,
    grid: &GridSpec,
    m: &TargetManifold,
    b: &TwoFormPotential,
    v: &ScalarPotential,
) -> Result<Vec<AmbientVector>> {
    let ux = central_dx(&state.u, grid);
    let mut out = Vec::with_capacity(state.u.len());
    for j in 0..state.u.len() {
        let p = &state.u[j];
        let ut = &state.ut[j];
        let uxp = m.project_tangent(p, &ux[j])?;
        let mut f = m.second_fundamental_form(p, ut, ut)?;
        let ii_x = m.second_fundamental_form(p, &uxp, &uxp)?;
        f.add_scaled(&ii_x, -1.0);
        if !b.is_zero() {
            let z = b.z_apply(m, p, ut, &uxp)?;
            f.add_scaled(&z, 1.0);
        }
        if !v.is_zero() {
            let g = v.grad(m, p)?;
            f.add_scaled(&g, 1.0);
        }
        out.push(f);
    }
    Ok(out)
}

/// Acceleration u_tt = D+D- u + rhs, the quantity the time stepper consumes.
pub fn accel(
    state: &FieldState,
    grid: &GridSpec,
    m: &TargetManifold,
    b: &TwoFormPotential,
    v: &ScalarPotential,
) -> Result<Vec<AmbientVector>> {
    let mut a = second_dx(&state.u, grid);
    let f = rhs(state, grid, m, b, v)?;
    for (aj, fj) in a.iter_mut().zip(&f) {
        aj.add_scaled(fj, 1.0);
    }
    Ok(a)
}

/// One time step. With a previous slice this is projected leapfrog; without
/// one it is the second-order Taylor start from (u0, u1). The new velocity
/// is the one-sided second-order difference (3u_new - 4u_cur + u_prev)/(2 dt),
/// projected tangent; the centered difference at the new level would need
/// the step after it, which the velocity-dependent Z term cannot wait for.
/// `solve` keeps this causal velocity internal and re-centers the velocity
/// of every state it emits.
pub fn step(
    state: &FieldState,
    prev: Option<&FieldState>,
    grid: &GridSpec,
    m: &TargetManifold,
    b: &TwoFormPotential,
    v: &ScalarPotential,
) -> Result<FieldState> {
    grid.check_cfl()?;
    let dt = grid.dt;
    let a = accel(state, grid, m, b, v)?;
    let np = state.u.len();
    let mut u_new = Vec::with_capacity(np);
    let mut ut_new = Vec::with_capacity(np);
    for j in 0..np {
        let raw = match prev {
            Some(p) => {
                let mut r = state.u[j].scaled(2.0);
                r.add_scaled(&p.u[j], -1.0);
                r.add_scaled(&a[j], dt * dt);
                r
            }
            None => {
                let mut r = state.u[j].clone();
                r.add_scaled(&state.ut[j], dt);
                r.add_scaled(&a[j], 0.5 * dt * dt);
                r
            }
        };
        if !raw.is_finite() {
            return Err(Error::BlowupDetected { t: state.t + dt, max_ut: f64::INFINITY });
        }
        u_new.push(m.project_point(&raw)?);
    }
    for j in 0..np {
        let raw = match prev {
            Some(p) => {
                let mut r = u_new[j].scaled(3.0);
                r.add_scaled(&state.u[j], -4.0);
                r.add_scaled(&p.u[j], 1.0);
                r.scaled(0.5 / dt)
            }
            None => {
                let mut r = state.ut[j].clone();
                r.add_scaled(&a[j], dt);
                r
            }
        };
        ut_new.push(m.project_tangent(&u_new[j], &raw)?);
    }
    let next = FieldState::new(state.t + dt, u_new, ut_new);
    let max_ut = next.max_ut_norm();
    if !next.is_finite() || max_ut > BLOWUP_THRESHOLD {
        return Err(Error::BlowupDetected { t: next.t, max_ut });
    }
    Ok(next)
}

/// Second-order Taylor ghost slice at t -+ dt. Taken backward from the
/// initial state it coincides with one reverse leapfrog step, which seeds
/// the centered-velocity pipeline; it is also the fallback when an
/// overshoot step past t_final fails.
fn ghost_state(
    state: &FieldState,
    sign: f64,
    grid: &GridSpec,
    m: &TargetManifold,
    b: &TwoFormPotential,
    v: &ScalarPotential,
) -> Result<FieldState> {
    let dt = sign * grid.dt;
    let a = accel(state, grid, m, b, v)?;
    let mut u = Vec::with_capacity(state.u.len());
    let mut ut = Vec::with_capacity(state.u.len());
    for j in 0..state.u.len() {
        let mut r = state.u[j].clone();
        r.add_scaled(&state.ut[j], dt);
        r.add_scaled(&a[j], 0.5 * dt * dt);
        let p = m.project_point(&r)?;
        let mut w = state.ut[j].clone();
        w.add_scaled(&a[j], dt);
        ut.push(m.project_tangent(&p, &w)?);
        u.push(p);
    }
    Ok(FieldState::new(state.t + dt, u, ut))
}

/// One leapfrog position step from `state` away from the slice `prev_u` at
/// state.t - tau: the projected u level at state.t + tau.
fn leap_u(
    state: &FieldState,
    prev_u: &[AmbientVector],
    tau: f64,
    grid: &GridSpec,
    m: &TargetManifold,
    b: &TwoFormPotential,
    v: &ScalarPotential,
) -> Result<Vec<AmbientVector>> {
    let a = accel(state, grid, m, b, v)?;
    let mut u = Vec::with_capacity(state.u.len());
    for j in 0..state.u.len() {
        let mut r = state.u[j].scaled(2.0);
        r.add_scaled(&prev_u[j], -1.0);
        r.add_scaled(&a[j], tau * tau);
        if !r.is_finite() {
            return Err(Error::BlowupDetected { t: state.t + tau, max_ut: f64::INFINITY });
        }
        u.push(m.project_point(&r)?);
    }
    Ok(u)
}

/// The emitted state at the middle of three consecutive u levels: the middle
/// slice paired with the centered velocity (u_next - u_prev) / (2 dt),
/// projected tangent at the middle points.
fn centered_state(
    prev_u: &[AmbientVector],
    t: f64,
    cur_u: &[AmbientVector],
    next_u: &[AmbientVector],
    dt: f64,
    m: &TargetManifold,
) -> Result<FieldState> {
    let mut ut = Vec::with_capacity(cur_u.len());
    for j in 0..cur_u.len() {
        let w = (&next_u[j] - &prev_u[j]).scaled(0.5 / dt);
        ut.push(m.project_tangent(&cur_u[j], &w)?);
    }
    Ok(FieldState::new(t, cur_u.to_vec(), ut))
}

/// Why a solve stopped early.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FailureReport {
    pub t: f64,
    pub step: usize,
    pub message: String,
}

/// A completed (possibly partial) run: snapshots, per-step diagnostics, and
/// the failure report if the run did not reach t_final. `windows[i]` holds
/// the (previous, following) slices around `snapshots[i]`, exactly the pair
/// the diagnostics row at that time was computed from, so a checker can
/// recompute the row from stored data alone; the end windows reach one level
/// beyond [0, t_final] via the reverse-leapfrog and overshoot slices. On a
/// completed run every snapshot has its window; a failed run may leave the
/// initial snapshot unpaired. Transformed trajectories have no windows.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub grid: GridSpec,
    pub snapshots: Vec<FieldState>,
    pub windows: Vec<(FieldState, FieldState)>,
    pub diagnostics: DiagnosticSeries,
    pub failure: Option<FailureReport>,
}

impl Trajectory {
    /// The stored snapshot at time t, which must match a recorded slice.
    pub fn sample_at(&self, t: f64) -> Result<&FieldState> {
        let tol = 1e-9 * (1.0 + t.abs());
        self.snapshots
            .iter()
            .find(|s| (s.t - t).abs() <= tol)
            .ok_or(Error::ResampleOutOfRange { t, x: f64::NAN })
    }

    pub fn final_state(&self) -> &FieldState {
        self.snapshots.last().expect("trajectory always holds the initial snapshot")
    }
}

/// Run the Cauchy problem to t_final. Never panics on solver faults: the
/// trajectory collected so far is returned with a failure report instead.
///
/// The stepper advances on the causal one-sided velocity (see `step`), but
/// every emitted state carries the centered velocity
/// (u_{k+1} - u_{k-1}) / (2 dt), so all diagnostics windows see one uniform
/// discretization and the conservation residuals stay second order at the
/// ends of the run too. The centered stencil needs levels beyond each end:
/// -1 and -2 come from reverse leapfrog steps, steps+1 and steps+2 from
/// overshoot steps past t_final (with a Taylor ghost fallback, so a run that
/// reached t_final is never failed by its own bookkeeping).
#[allow(clippy::too_many_arguments)]
pub fn solve(
    u0: Vec<AmbientVector>,
    u1: Vec<AmbientVector>,
    grid: &GridSpec,
    m: &TargetManifold,
    b: &TwoFormPotential,
    v: &ScalarPotential,
    snapshot_every: usize,
    apriori: bool,
) -> Trajectory {
    let snapshot_every = snapshot_every.max(1);
    let initial = FieldState::new(0.0, u0, u1);
    let dt = grid.dt;
    let steps = grid.steps();
    let mut diag = DiagnosticSeries::new(apriori, !b.has_action_primitive());
    let mut snapshots: Vec<FieldState> = Vec::new();
    let mut windows: Vec<(FieldState, FieldState)> = Vec::new();
    let mut failure: Option<FailureReport> = None;
    let fail = |e: &Error, step: usize, t: f64| FailureReport {
        t,
        step,
        message: e.to_string(),
    };

    'run: {
        if let Err(e) = grid.check_cfl() {
            failure = Some(fail(&e, 0, 0.0));
            break 'run;
        }
        if let Err(e) = initial.validate(m, grid) {
            failure = Some(fail(&e, 0, 0.0));
            break 'run;
        }
        let ghost = match ghost_state(&initial, -1.0, grid, m, b, v) {
            Ok(s) => s,
            Err(e) => {
                failure = Some(fail(&e, 0, 0.0));
                break 'run;
            }
        };
        let um2 = match leap_u(&ghost, &initial.u, -dt, grid, m, b, v) {
            Ok(u) => u,
            Err(e) => {
                failure = Some(fail(&e, 0, 0.0));
                break 'run;
            }
        };

        // Sliding pipeline. `us` holds three consecutive u levels with their
        // times, `ds` the emitted-convention states built from them; the row
        // at level k-1 goes out once the state at level k exists.
        let mut us: VecDeque<(f64, Vec<AmbientVector>)> = VecDeque::with_capacity(4);
        us.push_back((initial.t - 2.0 * dt, um2));
        us.push_back((ghost.t, ghost.u));
        us.push_back((initial.t, initial.u.clone()));
        let mut ds: VecDeque<FieldState> = VecDeque::with_capacity(3);
        match centered_state(&us[0].1, us[1].0, &us[1].1, &us[2].1, dt, m) {
            Ok(d) => ds.push_back(d),
            Err(e) => {
                failure = Some(fail(&e, 0, 0.0));
                break 'run;
            }
        }

        let mut e0 = 0.0;
        let mut prev: Option<FieldState> = None;
        let mut cur = initial.clone();
        for k in 0..steps + 2 {
            // Produce the u level k+1. Past t_final these are overshoot
            // levels feeding the centered stencil only, so their failure
            // must not fail a run that already reached t_final.
            let next = if k < steps {
                match step(&cur, prev.as_ref(), grid, m, b, v) {
                    Ok(s) => s,
                    Err(e) => {
                        failure = Some(fail(&e, k + 1, cur.t));
                        break;
                    }
                }
            } else {
                match step(&cur, prev.as_ref(), grid, m, b, v)
                    .or_else(|_| ghost_state(&cur, 1.0, grid, m, b, v))
                {
                    Ok(s) => s,
                    Err(_) => break,
                }
            };
            us.push_back((next.t, next.u.clone()));
            us.pop_front();
            prev = Some(std::mem::replace(&mut cur, next));

            let d = match centered_state(&us[0].1, us[1].0, &us[1].1, &us[2].1, dt, m) {
                Ok(d) => d,
                Err(e) => {
                    if k <= steps {
                        failure = Some(fail(&e, k, us[1].0));
                    }
                    break;
                }
            };
            if k == 0 {
                e0 = diagnostics::energy_total(&d, v, grid);
            }
            ds.push_back(d);
            if ds.len() < 3 {
                continue;
            }
            let level = k - 1;
            match diagnostics::compute_row(&ds[0], &ds[1], &ds[2], grid, m, b, v, apriori, e0) {
                Ok(row) => diag.push(row),
                Err(e) => {
                    failure = Some(fail(&e, (level + 1).min(steps), ds[1].t));
                    break;
                }
            }
            if level == 0 || level % snapshot_every == 0 || level == steps {
                snapshots.push(ds[1].clone());
                windows.push((ds[0].clone(), ds[2].clone()));
            }
            ds.pop_front();
        }
    }

    if snapshots.is_empty() {
        snapshots.push(initial);
    }
    Trajectory {
        grid: grid.clone(),
        snapshots,
        windows,
        diagnostics: diag,
        failure,
    }
}

/// The rescaled trajectory u_lambda(t, x) = lambda^beta u(lambda t, lambda x),
/// on the grid the rescaled Cauchy problem itself would use, so a rescaled
/// solve and this transform are comparable node by node. Velocities pick up
/// one extra power of lambda.
pub fn scaling_transform(traj: &Trajectory, lambda: f64, beta: f64) -> Result<Trajectory> {
    if !(lambda > 0.0) {
        return Err(Error::Validation(vec![format!(
            "scaling_transform: lambda must be positive, got {lambda}"
        )]));
    }
    let g = &traj.grid;
    let grid = GridSpec {
        x_min: g.x_min / lambda,
        x_max: g.x_max / lambda,
        nx: g.nx,
        dt: g.dt / lambda,
        t_final: g.t_final / lambda,
        boundary: g.boundary,
    };
    let fu = lambda.powf(beta);
    let fut = lambda.powf(beta + 1.0);
    let snapshots = traj
        .snapshots
        .iter()
        .map(|s| {
            FieldState::new(
                s.t / lambda,
                s.u.iter().map(|p| p.scaled(fu)).collect(),
                s.ut.iter().map(|w| w.scaled(fut)).collect(),
            )
        })
        .collect();
    Ok(Trajectory {
        grid,
        snapshots,
        windows: Vec::new(),
        diagnostics: DiagnosticSeries::empty(),
        failure: traj.failure.clone(),
    })
}
