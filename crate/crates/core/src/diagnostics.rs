//! Conserved quantities, conservation-law residuals, and a priori
//! functionals evaluated on time slices of the extrinsic solver. Everything
//! here is read-only post-processing: the same second-order stencils as the
//! solver, trapezoidal quadrature in space, centered differences in time
//! over windows of three consecutive slices.

use crate::error::Result;
use crate::extrinsic::{central_dx, second_dx, FieldState, GridSpec};
use crate::geometry::TargetManifold;
use crate::potentials::{ScalarPotential, TwoFormPotential};

/// One recorded step of the diagnostic suite.
#[derive(Clone, Copy, Debug)]
pub struct DiagnosticRow {
    pub t: f64,
    pub e: f64,
    pub e_half: f64,
    pub e2: f64,
    pub action: f64,
    pub res_f_plus: f64,
    pub res_f_minus: f64,
    pub res_box_e: f64,
    pub res_stress_div: f64,
    pub apriori_z: f64,
    pub apriori_bound: f64,
}

/// Column names for diagnostics.csv, in row order.
pub const CSV_HEADER: &str = "t,E,E_half,E2,action_density_integral,res_F_plus,res_F_minus,res_box_e,res_stress_div,apriori_Z,apriori_bound";

/// The per-run diagnostic table plus the flags that fix how two of its
/// columns are to be read.
#[derive(Clone, Debug, Default)]
pub struct DiagnosticSeries {
    pub rows: Vec<DiagnosticRow>,
    /// When false the apriori columns hold the sentinel 0.0.
    pub apriori_enabled: bool,
    /// When true the action column holds the centered residual of the
    /// equations of motion instead: the two-form has no global primitive,
    /// so no action density exists to integrate.
    pub action_is_el_residual: bool,
}

impl DiagnosticSeries {
    pub fn new(apriori_enabled: bool, action_is_el_residual: bool) -> Self {
        DiagnosticSeries { rows: Vec::new(), apriori_enabled, action_is_el_residual }
    }

    pub fn empty() -> Self {
        DiagnosticSeries::new(false, false)
    }

    pub fn push(&mut self, row: DiagnosticRow) {
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// max_t |E(t) - E(0)| / max(|E(0)|, eps).
    pub fn relative_energy_drift(&self) -> f64 {
        let Some(first) = self.rows.first() else { return 0.0 };
        let e0 = first.e;
        let denom = e0.abs().max(1e-12);
        self.rows.iter().map(|r| (r.e - e0).abs()).fold(0.0, f64::max) / denom
    }

    /// Trapezoidal time integral of the action column; None when the column
    /// holds residuals rather than an action density.
    pub fn action_integral(&self) -> Option<f64> {
        if self.action_is_el_residual || self.rows.len() < 2 {
            return None;
        }
        let mut s = 0.0;
        for w in self.rows.windows(2) {
            s += 0.5 * (w[1].t - w[0].t) * (w[0].action + w[1].action);
        }
        Some(s)
    }

    /// Largest violation apriori_Z - apriori_bound over the run.
    pub fn max_apriori_excess(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.apriori_z - r.apriori_bound)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn scalar_central_dx(f: &[f64], grid: &GridSpec) -> Vec<f64> {
    let s = 0.5 / grid.dx();
    (0..f.len())
        .map(|j| {
            let (jm, jp) = grid.neighbors(j);
            (f[jp] - f[jm]) * s
        })
        .collect()
}

fn scalar_second_dx(f: &[f64], grid: &GridSpec) -> Vec<f64> {
    let s = 1.0 / (grid.dx() * grid.dx());
    (0..f.len())
        .map(|j| {
            let (jm, jp) = grid.neighbors(j);
            (f[jp] - 2.0 * f[j] + f[jm]) * s
        })
        .collect()
}

fn l2_norm(values: &[f64], grid: &GridSpec) -> f64 {
    values
        .iter()
        .enumerate()
        .map(|(j, r)| grid.weight(j) * r * r)
        .sum::<f64>()
        .sqrt()
}

fn potential_values(state: &FieldState, v: &ScalarPotential) -> Vec<f64> {
    state.u.iter().map(|p| v.value(p)).collect()
}

/// E(t) = integral of |u_t|^2 + |u_x|^2 - 2V(u).
pub fn energy_total(state: &FieldState, v: &ScalarPotential, grid: &GridSpec) -> f64 {
    let ux = central_dx(&state.u, grid);
    let vals: Vec<f64> = (0..state.u.len())
        .map(|j| state.ut[j].norm_sq() + ux[j].norm_sq() - 2.0 * v.value(&state.u[j]))
        .collect();
    grid.integrate(&vals)
}

/// The half-normalized energy without potential, integral of e(t, x).
pub fn energy_half(state: &FieldState, grid: &GridSpec) -> f64 {
    grid.integrate(&energy_density(state, grid))
}

/// e(t,x) = |u_t|^2/2 + |u_x|^2/2 pointwise.
pub fn energy_density(state: &FieldState, grid: &GridSpec) -> Vec<f64> {
    let ux = central_dx(&state.u, grid);
    (0..state.u.len())
        .map(|j| 0.5 * state.ut[j].norm_sq() + 0.5 * ux[j].norm_sq())
        .collect()
}

/// E2(t) = half the integral of |u_xx|^2 + 2|u_xt|^2 + |u_tt|^2, from a
/// window of three consecutive slices.
pub fn h2_energy(prev: &FieldState, cur: &FieldState, next: &FieldState, grid: &GridSpec) -> f64 {
    let dt = 0.5 * (next.t - prev.t);
    let uxx = second_dx(&cur.u, grid);
    let ux_prev = central_dx(&prev.u, grid);
    let ux_next = central_dx(&next.u, grid);
    let vals: Vec<f64> = (0..cur.u.len())
        .map(|j| {
            let mut utt = &next.u[j] + &prev.u[j];
            utt.add_scaled(&cur.u[j], -2.0);
            let utt = utt.scaled(1.0 / (dt * dt));
            let uxt = (&ux_next[j] - &ux_prev[j]).scaled(0.5 / dt);
            0.5 * (uxx[j].norm_sq() + 2.0 * uxt.norm_sq() + utt.norm_sq())
        })
        .collect();
    grid.integrate(&vals)
}

fn null_square(state: &FieldState, grid: &GridSpec, sign: f64) -> Vec<f64> {
    let ux = central_dx(&state.u, grid);
    (0..state.u.len())
        .map(|j| {
            let mut f = state.ut[j].clone();
            f.add_scaled(&ux[j], sign);
            f.norm_sq()
        })
        .collect()
}

/// Discrete defects of the two null conservation laws
/// d/dt (F_pm^2 - 2V) = pm d/dx (F_pm^2 + 2V), as L2 norms.
pub fn flux_residuals(
    prev: &FieldState,
    cur: &FieldState,
    next: &FieldState,
    v: &ScalarPotential,
    grid: &GridSpec,
) -> (f64, f64) {
    let dt = 0.5 * (next.t - prev.t);
    let v_prev = potential_values(prev, v);
    let v_cur = potential_values(cur, v);
    let v_next = potential_values(next, v);
    let mut out = [0.0, 0.0];
    for (slot, sign) in [(0, 1.0), (1, -1.0)] {
        let q_prev = null_square(prev, grid, sign);
        let q_cur = null_square(cur, grid, sign);
        let q_next = null_square(next, grid, sign);
        let flux: Vec<f64> = (0..q_cur.len()).map(|j| q_cur[j] + 2.0 * v_cur[j]).collect();
        let dflux = scalar_central_dx(&flux, grid);
        let res: Vec<f64> = (0..q_cur.len())
            .map(|j| {
                let ddt = ((q_next[j] - 2.0 * v_next[j]) - (q_prev[j] - 2.0 * v_prev[j]))
                    / (2.0 * dt);
                ddt - sign * dflux[j]
            })
            .collect();
        out[slot] = l2_norm(&res, grid);
    }
    (out[0], out[1])
}

/// Discrete defect of box e = (d^2/dx^2 + d^2/dt^2) V(u), as an L2 norm.
pub fn box_energy_residual(
    prev: &FieldState,
    cur: &FieldState,
    next: &FieldState,
    v: &ScalarPotential,
    grid: &GridSpec,
) -> f64 {
    let dt = 0.5 * (next.t - prev.t);
    let e_prev = energy_density(prev, grid);
    let e_cur = energy_density(cur, grid);
    let e_next = energy_density(next, grid);
    let v_prev = potential_values(prev, v);
    let v_cur = potential_values(cur, v);
    let v_next = potential_values(next, v);
    let exx = scalar_second_dx(&e_cur, grid);
    let vxx = scalar_second_dx(&v_cur, grid);
    let res: Vec<f64> = (0..e_cur.len())
        .map(|j| {
            let ett = (e_next[j] - 2.0 * e_cur[j] + e_prev[j]) / (dt * dt);
            let vtt = (v_next[j] - 2.0 * v_cur[j] + v_prev[j]) / (dt * dt);
            (ett - exx[j]) - (vtt + vxx[j])
        })
        .collect();
    l2_norm(&res, grid)
}

/// Pointwise stress tensor rows (T_tt, T_tx, T_xx) with h = diag(+1, -1):
/// T_ab = h_ab |dphi|^2 / 2 - <d_a u, d_b u> + V h_ab.
pub fn stress_tensor(
    state: &FieldState,
    v: &ScalarPotential,
    grid: &GridSpec,
) -> Vec<[f64; 3]> {
    let ux = central_dx(&state.u, grid);
    (0..state.u.len())
        .map(|j| {
            let e = 0.5 * state.ut[j].norm_sq() + 0.5 * ux[j].norm_sq();
            let vv = v.value(&state.u[j]);
            [-e + vv, -state.ut[j].dot(&ux[j]), -e - vv]
        })
        .collect()
}

/// L2 norm of the divergence d^a T_ab = d_t T_tb - d_x T_xb over both b.
pub fn stress_divergence_residual(
    prev: &FieldState,
    cur: &FieldState,
    next: &FieldState,
    v: &ScalarPotential,
    grid: &GridSpec,
) -> f64 {
    let dt = 0.5 * (next.t - prev.t);
    let t_prev = stress_tensor(prev, v, grid);
    let t_cur = stress_tensor(cur, v, grid);
    let t_next = stress_tensor(next, v, grid);
    let ttx: Vec<f64> = t_cur.iter().map(|r| r[1]).collect();
    let txx: Vec<f64> = t_cur.iter().map(|r| r[2]).collect();
    let dx_ttx = scalar_central_dx(&ttx, grid);
    let dx_txx = scalar_central_dx(&txx, grid);
    let res: Vec<f64> = (0..t_cur.len())
        .map(|j| {
            let dt_ttt = (t_next[j][0] - t_prev[j][0]) / (2.0 * dt);
            let dt_ttx = (t_next[j][1] - t_prev[j][1]) / (2.0 * dt);
            let rt = dt_ttt - dx_ttx[j];
            let rx = dt_ttx - dx_txx[j];
            rt * rt + rx * rx
        })
        .collect();
    res.iter()
        .enumerate()
        .map(|(j, r)| grid.weight(j) * r)
        .sum::<f64>()
        .sqrt()
}

/// The double integral Z(t) over {x >= y} of
/// (F_-^2 - 2V)(x) (F_+^2 - 2V)(y), with the trapezoidal half weight on the
/// diagonal, plus its proven ceiling 4 E(0)^2. Quadratic in Nx; callers gate
/// it behind a flag.
pub fn apriori_functional(
    state: &FieldState,
    v: &ScalarPotential,
    grid: &GridSpec,
    e0: f64,
) -> (f64, f64) {
    let vals = potential_values(state, v);
    let q_plus = null_square(state, grid, 1.0);
    let q_minus = null_square(state, grid, -1.0);
    let mut prefix = 0.0;
    let mut z = 0.0;
    for j in 0..vals.len() {
        let a = grid.weight(j) * (q_plus[j] - 2.0 * vals[j]);
        let b = grid.weight(j) * (q_minus[j] - 2.0 * vals[j]);
        z += b * (prefix + 0.5 * a);
        prefix += a;
    }
    (z, 4.0 * e0 * e0)
}

/// Spatial integral of F_-^2 F_+^2 - 4V^2, the integrand of the spacetime
/// energy inequality. Kept separate from Z(t): the source text states both
/// and they are not interchangeable.
pub fn apriori_lhs_integral(state: &FieldState, v: &ScalarPotential, grid: &GridSpec) -> f64 {
    let vals = potential_values(state, v);
    let q_plus = null_square(state, grid, 1.0);
    let q_minus = null_square(state, grid, -1.0);
    let integrand: Vec<f64> = (0..vals.len())
        .map(|j| q_minus[j] * q_plus[j] - 4.0 * vals[j] * vals[j])
        .collect();
    grid.integrate(&integrand)
}

/// A(t) = integral of the Lagrangian density
/// |u_t|^2/2 - |u_x|^2/2 + (pullback of B) + V(u); None when the two-form
/// admits no global primitive.
pub fn action_density_integral(
    state: &FieldState,
    b: &TwoFormPotential,
    v: &ScalarPotential,
    grid: &GridSpec,
) -> Option<f64> {
    let ux = central_dx(&state.u, grid);
    let mut vals = Vec::with_capacity(state.u.len());
    for j in 0..state.u.len() {
        let kinetic = 0.5 * state.ut[j].norm_sq() - 0.5 * ux[j].norm_sq();
        let pullback = b.action_density(&state.u[j], &state.ut[j], &ux[j])?;
        vals.push(kinetic + pullback + v.value(&state.u[j]));
    }
    Some(grid.integrate(&vals))
}

/// L2 norm of the centered defect u_tt - u_xx - rhs of the equations of
/// motion; stands in for the action column when no primitive exists.
pub fn el_residual(
    prev: &FieldState,
    cur: &FieldState,
    next: &FieldState,
    grid: &GridSpec,
    m: &TargetManifold,
    b: &TwoFormPotential,
    v: &ScalarPotential,
) -> Result<f64> {
    let dt = 0.5 * (next.t - prev.t);
    let uxx = second_dx(&cur.u, grid);
    let f = crate::extrinsic::rhs(cur, grid, m, b, v)?;
    let res: Vec<f64> = (0..cur.u.len())
        .map(|j| {
            let mut utt = &next.u[j] + &prev.u[j];
            utt.add_scaled(&cur.u[j], -2.0);
            utt = utt.scaled(1.0 / (dt * dt));
            utt.add_scaled(&uxx[j], -1.0);
            utt.add_scaled(&f[j], -1.0);
            utt.norm_sq()
        })
        .collect();
    Ok(res
        .iter()
        .enumerate()
        .map(|(j, r)| grid.weight(j) * r)
        .sum::<f64>()
        .sqrt())
}

/// Assemble one full diagnostics row for the middle slice of a window.
#[allow(clippy::too_many_arguments)]
pub fn compute_row(
    prev: &FieldState,
    cur: &FieldState,
    next: &FieldState,
    grid: &GridSpec,
    m: &TargetManifold,
    b: &TwoFormPotential,
    v: &ScalarPotential,
    apriori: bool,
    e0: f64,
) -> Result<DiagnosticRow> {
    let (res_f_plus, res_f_minus) = flux_residuals(prev, cur, next, v, grid);
    let action = match action_density_integral(cur, b, v, grid) {
        Some(a) => a,
        None => el_residual(prev, cur, next, grid, m, b, v)?,
    };
    let (apriori_z, apriori_bound) = if apriori {
        apriori_functional(cur, v, grid, e0)
    } else {
        (0.0, 0.0)
    };
    Ok(DiagnosticRow {
        t: cur.t,
        e: energy_total(cur, v, grid),
        e_half: energy_half(cur, grid),
        e2: h2_energy(prev, cur, next, grid),
        action,
        res_f_plus,
        res_f_minus,
        res_box_e: box_energy_residual(prev, cur, next, v, grid),
        res_stress_div: stress_divergence_residual(prev, cur, next, v, grid),
        apriori_z,
        apriori_bound,
    })
}
