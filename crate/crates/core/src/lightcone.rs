//! Characteristic-coordinate solver. The second-order problem is rewritten
//! as four first-order transport equations for (u, v, y, z) along the two
//! characteristic families and solved by Picard iteration with frozen
//! coefficients, each sweep integrating the linear transports with the
//! trapezoidal rule.
//!
//! Coordinates: xi = (x + t)/2 along one family and lam = (t - x)/2 along
//! the other, so both advance toward the future and t = xi + lam. The
//! fields are u = phi_xi = phi_x + phi_t and v = phi_lam = phi_t - phi_x,
//! with y integrating u along xi and z integrating v along lam; both y and
//! z represent the chart position phi and their gap is a free consistency
//! diagnostic. In these variables the system is
//!
//!   du/dlam + T(z)(u, v) = 0,    dz/dlam = v,
//!   dv/dxi  + T(y)(u, v) = 0,    dy/dxi  = u,
//!
//! where T(w) = Gamma(w) + Z_chart(w)/2; the sign and argument order are
//! fixed by the flat-target reduction u_tt - u_xx = c u_t x u_x, whose
//! lightcone form is phi_xilam = -(c/2) u x v.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Chart;
use crate::initial::InitialData;
use crate::linalg::{self, Tensor3};
use crate::potentials::TwoFormPotential;

/// Default fixed-point tolerance on the sup-norm sweep delta.
pub const TOL_FIX: f64 = 1e-10;

/// Default sweep budget; the iteration is a contraction on admissible
/// triangles, so hitting this means the triangle was too large.
pub const MAX_ITER: usize = 100;

/// Default safety factor applied to the admissible triangle size.
pub const K_SAFETY: f64 = 0.9;

/// Node count per level above which coefficient assembly uses rayon.
const PAR_NODES: usize = 4096;

/// Trapezoidal grid on a characteristic strip. Level l collects the nodes
/// with t = l h; the base (level 0) has na + 1 nodes spaced 2h apart in x,
/// and each level up loses one node from each end of nothing: the level
/// width shrinks by one node per level, the x half-width by h.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleGrid {
    na: usize,
    levels: usize,
    h: f64,
}

impl TriangleGrid {
    /// The full dependence triangle over the base |x| <= k: n_char levels
    /// rising to the apex (t, x) = (k, 0), spacing h = k / n_char.
    pub fn triangle(k: f64, n_char: usize) -> Self {
        assert!(k > 0.0 && n_char >= 1);
        TriangleGrid { na: n_char, levels: n_char, h: k / n_char as f64 }
    }

    /// A partial strip: `levels` rows over a base of half-width na * h.
    pub fn strip(na: usize, levels: usize, h: f64) -> Self {
        assert!(h > 0.0 && levels >= 1 && levels <= na);
        TriangleGrid { na, levels, h }
    }

    pub fn na(&self) -> usize {
        self.na
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn half_width(&self) -> f64 {
        self.na as f64 * self.h
    }

    pub fn height(&self) -> f64 {
        self.levels as f64 * self.h
    }

    fn offset(&self, l: usize) -> usize {
        l * (self.na + 1) - l * (l.saturating_sub(1)) / 2
    }

    pub fn num_nodes(&self) -> usize {
        self.offset(self.levels + 1)
    }

    /// Flat index of node (level l, xi-index a), a in [l, na].
    pub fn index(&self, l: usize, a: usize) -> usize {
        debug_assert!(l <= self.levels && a >= l && a <= self.na);
        self.offset(l) + (a - l)
    }

    pub fn level_width(&self, l: usize) -> usize {
        self.na + 1 - l
    }

    /// (t, x) of node (l, a) relative to the strip base.
    pub fn node_tx(&self, l: usize, a: usize) -> (f64, f64) {
        (
            l as f64 * self.h,
            (2.0 * a as f64 - self.na as f64 - l as f64) * self.h,
        )
    }

    pub fn base_xs(&self) -> Vec<f64> {
        (0..=self.na).map(|a| self.node_tx(0, a).1).collect()
    }
}

/// The four chart-valued fields on every grid node, flattened node-major.
#[derive(Clone, Debug)]
pub struct CharacteristicState {
    pub n: usize,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl CharacteristicState {
    /// All-zero fields over `num_nodes` nodes of chart dimension n.
    pub fn zeroed(num_nodes: usize, n: usize) -> Self {
        CharacteristicState {
            n,
            y: vec![0.0; num_nodes * n],
            z: vec![0.0; num_nodes * n],
            u: vec![0.0; num_nodes * n],
            v: vec![0.0; num_nodes * n],
        }
    }

    pub fn y_at(&self, idx: usize) -> &[f64] {
        &self.y[idx * self.n..(idx + 1) * self.n]
    }

    pub fn z_at(&self, idx: usize) -> &[f64] {
        &self.z[idx * self.n..(idx + 1) * self.n]
    }

    pub fn u_at(&self, idx: usize) -> &[f64] {
        &self.u[idx * self.n..(idx + 1) * self.n]
    }

    pub fn v_at(&self, idx: usize) -> &[f64] {
        &self.v[idx * self.n..(idx + 1) * self.n]
    }

    fn write(dst: &mut [f64], idx: usize, n: usize, value: &[f64]) {
        dst[idx * n..(idx + 1) * n].copy_from_slice(value);
    }
}

/// Fourth-order finite-difference x-derivative of uniformly spaced samples,
/// one-sided at the ends.
pub fn deriv4(samples: &[Vec<f64>], spacing: f64) -> Result<Vec<Vec<f64>>> {
    let m = samples.len();
    if m < 5 {
        return Err(Error::InsufficientSamples { needed: 5, got: m });
    }
    let n = samples[0].len();
    let s = 1.0 / (12.0 * spacing);
    let stencil_at = |j: usize| -> (usize, [f64; 5]) {
        if j == 0 {
            (0, [-25.0, 48.0, -36.0, 16.0, -3.0])
        } else if j == 1 {
            (0, [-3.0, -10.0, 18.0, -6.0, 1.0])
        } else if j == m - 2 {
            (m - 5, [-1.0, 6.0, -18.0, 10.0, 3.0])
        } else if j == m - 1 {
            (m - 5, [3.0, -16.0, 36.0, -48.0, 25.0])
        } else {
            (j - 2, [1.0, -8.0, 0.0, 8.0, -1.0])
        }
    };
    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let (start, w) = stencil_at(j);
        let mut d = vec![0.0; n];
        for (off, wj) in w.iter().enumerate() {
            for i in 0..n {
                d[i] += wj * samples[start + off][i];
            }
        }
        for di in d.iter_mut() {
            *di *= s;
        }
        out.push(d);
    }
    Ok(out)
}

/// The triangle-size inputs and the resulting admissible k.
#[derive(Clone, Copy, Debug)]
pub struct TriangleParams {
    pub l: f64,
    pub a: f64,
    pub m: f64,
    pub n: usize,
    pub k: f64,
}

/// k = min(L, a / (2 M sqrt(n))); constant data (M = 0) saturates at L.
pub fn k_formula(l: f64, a: f64, m: f64, n: usize) -> f64 {
    if m <= 0.0 {
        l
    } else {
        l.min(a / (2.0 * m * (n as f64).sqrt()))
    }
}

fn g_norm_sq(metric: &[f64], n: usize, w: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += metric[i * n + j] * w[i] * w[j];
        }
    }
    s
}

/// Ellipticity constant, derivative bound, and triangle size from sampled
/// initial data on |x| <= l_radius with the given uniform sample spacing.
pub fn compute_bounds(
    phi0: &[Vec<f64>],
    phi1: &[Vec<f64>],
    chart: &Chart,
    l_radius: f64,
    spacing: f64,
) -> Result<TriangleParams> {
    let n = chart.dim();
    let d = deriv4(phi0, spacing)?;
    let mut a_sq = f64::INFINITY;
    let mut m = 0.0_f64;
    for j in 0..phi0.len() {
        let y = &phi0[j];
        chart.check_domain(y)?;
        a_sq = a_sq.min(chart.min_metric_eigenvalue(y)?);
        let metric = chart.metric(y)?;
        let mut u = vec![0.0; n];
        let mut v = vec![0.0; n];
        for i in 0..n {
            u[i] = d[j][i] + phi1[j][i];
            v[i] = phi1[j][i] - d[j][i];
        }
        m = m.max(g_norm_sq(&metric, n, &u).max(g_norm_sq(&metric, n, &v)).sqrt());
    }
    let a = a_sq.sqrt();
    Ok(TriangleParams { l: l_radius, a, m, n, k: k_formula(l_radius, a, m, n) })
}

/// Populate the zeroth Picard iterate: u constant along lam-characteristics,
/// v constant along xi-characteristics, y and z trapezoid integrals of them
/// as the iteration prescription demands.
fn initial_iterate(
    grid: &TriangleGrid,
    chart: &Chart,
    y_base: &[Vec<f64>],
    z_base: &[Vec<f64>],
    u_base: &[Vec<f64>],
    v_base: &[Vec<f64>],
) -> Result<CharacteristicState> {
    let n = chart.dim();
    let na = grid.na();
    let mut st = CharacteristicState::zeroed(grid.num_nodes(), n);
    for a in 0..=na {
        let idx = grid.index(0, a);
        CharacteristicState::write(&mut st.y, idx, n, &y_base[a]);
        CharacteristicState::write(&mut st.z, idx, n, &z_base[a]);
        CharacteristicState::write(&mut st.u, idx, n, &u_base[a]);
        CharacteristicState::write(&mut st.v, idx, n, &v_base[a]);
    }
    let h2 = 0.5 * grid.h();
    for l in 1..=grid.levels() {
        for a in l..=na {
            let idx = grid.index(l, a);
            let pu = grid.index(l - 1, a);
            let pv = grid.index(l - 1, a - 1);
            CharacteristicState::write(&mut st.u, idx, n, u_base[a].as_slice());
            CharacteristicState::write(&mut st.v, idx, n, v_base[a - l].as_slice());
            for i in 0..n {
                st.y[idx * n + i] =
                    st.y[pv * n + i] + h2 * (st.u[pv * n + i] + st.u[idx * n + i]);
                st.z[idx * n + i] =
                    st.z[pu * n + i] + h2 * (st.v[pu * n + i] + st.v[idx * n + i]);
            }
            chart.check_domain(st.y_at(idx))?;
            chart.check_domain(st.z_at(idx))?;
        }
    }
    Ok(st)
}

/// Base-line data per the characteristic reduction: y = z = phi0,
/// u = phi0' + phi1, v = phi1 - phi0', with phi0' from 4th-order stencils
/// over the base samples (spacing 2h). Returns the full zeroth iterate.
pub fn to_characteristic_data(
    phi0: &[Vec<f64>],
    phi1: &[Vec<f64>],
    chart: &Chart,
    grid: &TriangleGrid,
) -> Result<CharacteristicState> {
    let needed = grid.na() + 1;
    if phi0.len() != needed || phi1.len() != needed {
        return Err(Error::InsufficientSamples { needed, got: phi0.len().min(phi1.len()) });
    }
    let n = chart.dim();
    for y in phi0 {
        if y.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: y.len() });
        }
        chart.check_domain(y)?;
    }
    let d = deriv4(phi0, 2.0 * grid.h())?;
    let mut u_base = Vec::with_capacity(needed);
    let mut v_base = Vec::with_capacity(needed);
    for j in 0..needed {
        let mut u = vec![0.0; n];
        let mut v = vec![0.0; n];
        for i in 0..n {
            u[i] = d[j][i] + phi1[j][i];
            v[i] = phi1[j][i] - d[j][i];
        }
        u_base.push(u);
        v_base.push(v);
    }
    initial_iterate(grid, chart, phi0, phi0, &u_base, &v_base)
}

/// T(w) = Gamma(w) + Z_chart(w) / 2, the frozen transport tensor.
fn transport_tensor(chart: &Chart, b: &TwoFormPotential, w: &[f64]) -> Result<Tensor3> {
    let mut t = chart.christoffel(w)?;
    if !b.is_zero() {
        let z = b.z_chart_components(chart, w)?;
        t.add_scaled(&z, 0.5);
    }
    Ok(t)
}

/// Per-node frozen coefficient matrices: cu = T(z)(., v) acting on u and
/// cv = T(y)(u, .) acting on v.
fn frozen_coefficients(
    state: &CharacteristicState,
    chart: &Chart,
    b: &TwoFormPotential,
    grid: &TriangleGrid,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let n = state.n;
    let per_node = |idx: usize| -> Result<(Vec<f64>, Vec<f64>)> {
        let tz = transport_tensor(chart, b, state.z_at(idx))?;
        let ty = transport_tensor(chart, b, state.y_at(idx))?;
        let mut cu = vec![0.0; n * n];
        let mut cv = vec![0.0; n * n];
        tz.contract_last(state.v_at(idx), &mut cu);
        ty.contract_mid(state.u_at(idx), &mut cv);
        Ok((cu, cv))
    };
    if grid.num_nodes() >= PAR_NODES {
        (0..grid.num_nodes()).into_par_iter().map(per_node).collect()
    } else {
        (0..grid.num_nodes()).map(per_node).collect()
    }
}

/// Solve (I + (h/2) c_new) x = (I - (h/2) c_old) x_prev, the trapezoidal
/// step of a linear transport dx/ds + C(s) x = 0.
fn trapezoid_step(
    n: usize,
    h: f64,
    c_old: &[f64],
    c_new: &[f64],
    x_prev: &[f64],
    level: usize,
    column: usize,
) -> Result<Vec<f64>> {
    let mut rhs = vec![0.0; n];
    let mut lhs = vec![0.0; n * n];
    let h2 = 0.5 * h;
    for i in 0..n {
        let mut s = x_prev[i];
        for j in 0..n {
            s -= h2 * c_old[i * n + j] * x_prev[j];
            lhs[i * n + j] = h2 * c_new[i * n + j];
        }
        lhs[i * n + i] += 1.0;
        rhs[i] = s;
    }
    linalg::solve_small(n, &lhs, &rhs).ok_or(Error::LinearSolveFailure { level, column })
}

/// One Picard sweep: all four fields updated level by level with
/// coefficients frozen at `prev`. Returns the new state and the sup-norm
/// change over all fields.
pub fn picard_sweep(
    prev: &CharacteristicState,
    chart: &Chart,
    b: &TwoFormPotential,
    grid: &TriangleGrid,
) -> Result<(CharacteristicState, f64)> {
    let n = prev.n;
    let coeffs = frozen_coefficients(prev, chart, b, grid)?;
    let mut next = prev.clone();
    let h = grid.h();
    let h2 = 0.5 * h;
    let mut delta = 0.0_f64;
    for l in 1..=grid.levels() {
        for a in l..=grid.na() {
            let idx = grid.index(l, a);
            let pu = grid.index(l - 1, a);
            let pv = grid.index(l - 1, a - 1);
            let u_new = trapezoid_step(
                n,
                h,
                &coeffs[pu].0,
                &coeffs[idx].0,
                next.u_at(pu),
                l,
                a,
            )?;
            let v_new = trapezoid_step(
                n,
                h,
                &coeffs[pv].1,
                &coeffs[idx].1,
                next.v_at(pv),
                l,
                a,
            )?;
            for i in 0..n {
                let y_new = next.y[pv * n + i] + h2 * (next.u[pv * n + i] + u_new[i]);
                let z_new = next.z[pu * n + i] + h2 * (next.v[pu * n + i] + v_new[i]);
                delta = delta
                    .max((u_new[i] - prev.u[idx * n + i]).abs())
                    .max((v_new[i] - prev.v[idx * n + i]).abs())
                    .max((y_new - prev.y[idx * n + i]).abs())
                    .max((z_new - prev.z[idx * n + i]).abs());
                next.u[idx * n + i] = u_new[i];
                next.v[idx * n + i] = v_new[i];
                next.y[idx * n + i] = y_new;
                next.z[idx * n + i] = z_new;
            }
            chart.check_domain(next.y_at(idx))?;
            chart.check_domain(next.z_at(idx))?;
        }
    }
    Ok((next, delta))
}

/// Iterate picard_sweep to the fixed point. Returns the converged state and
/// the per-sweep delta log.
pub fn solve_triangle(
    initial: CharacteristicState,
    chart: &Chart,
    b: &TwoFormPotential,
    grid: &TriangleGrid,
    tol_fix: f64,
    max_iter: usize,
) -> Result<(CharacteristicState, Vec<f64>)> {
    let mut state = initial;
    let mut deltas = Vec::new();
    for _ in 0..max_iter {
        let (next, delta) = picard_sweep(&state, chart, b, grid)?;
        state = next;
        deltas.push(delta);
        if delta < tol_fix {
            return Ok((state, deltas));
        }
    }
    Err(Error::NoConvergence { iters: max_iter, delta: deltas.last().copied().unwrap_or(f64::NAN) })
}

/// Sup-norm defect of the converged state in the nonlinear first-order
/// system, measured with centered differences over interior nodes.
pub fn system_residual(
    state: &CharacteristicState,
    chart: &Chart,
    b: &TwoFormPotential,
    grid: &TriangleGrid,
) -> Result<f64> {
    let n = state.n;
    let inv2h = 0.5 / grid.h();
    let mut worst = 0.0_f64;
    let mut tu = vec![0.0; n];
    let mut tv = vec![0.0; n];
    if grid.levels() < 2 {
        return Ok(0.0);
    }
    for l in 1..grid.levels() {
        for a in (l + 1)..grid.na() {
            let idx = grid.index(l, a);
            let lam_next = grid.index(l + 1, a);
            let lam_prev = grid.index(l - 1, a);
            let xi_next = grid.index(l + 1, a + 1);
            let xi_prev = grid.index(l - 1, a - 1);
            let tz = transport_tensor(chart, b, state.z_at(idx))?;
            let ty = transport_tensor(chart, b, state.y_at(idx))?;
            tz.contract2(state.u_at(idx), state.v_at(idx), &mut tu);
            ty.contract2(state.u_at(idx), state.v_at(idx), &mut tv);
            for i in 0..n {
                let du = (state.u[lam_next * n + i] - state.u[lam_prev * n + i]) * inv2h;
                let dv = (state.v[xi_next * n + i] - state.v[xi_prev * n + i]) * inv2h;
                let dy = (state.y[xi_next * n + i] - state.y[xi_prev * n + i]) * inv2h;
                let dz = (state.z[lam_next * n + i] - state.z[lam_prev * n + i]) * inv2h;
                worst = worst
                    .max((du + tu[i]).abs())
                    .max((dv + tv[i]).abs())
                    .max((dy - state.u[idx * n + i]).abs())
                    .max((dz - state.v[idx * n + i]).abs());
            }
        }
    }
    Ok(worst)
}

/// sup |y - z| over all nodes: both fields represent the same map.
pub fn y_z_gap(state: &CharacteristicState) -> f64 {
    state
        .y
        .iter()
        .zip(&state.z)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
}

/// sup over nodes of |g(z)(u,u) - g(z)(u,u) at the foot of the same
/// lam-characteristic|: discrete isometry of the transport.
pub fn isometry_drift(
    state: &CharacteristicState,
    chart: &Chart,
    grid: &TriangleGrid,
) -> Result<f64> {
    let n = state.n;
    let mut base = vec![0.0; grid.na() + 1];
    for a in 0..=grid.na() {
        let idx = grid.index(0, a);
        let g = chart.metric(state.z_at(idx))?;
        base[a] = g_norm_sq(&g, n, state.u_at(idx));
    }
    let mut worst = 0.0_f64;
    for l in 1..=grid.levels() {
        for a in l..=grid.na() {
            let idx = grid.index(l, a);
            let g = chart.metric(state.z_at(idx))?;
            let q = g_norm_sq(&g, n, state.u_at(idx));
            worst = worst.max((q - base[a]).abs());
        }
    }
    Ok(worst)
}

/// Run parameters for the global extension.
#[derive(Clone, Debug)]
pub struct LightconeRun {
    pub l: f64,
    pub n_char: usize,
    pub t_final: f64,
    pub tol_fix: f64,
    pub max_iter: usize,
    pub safety: f64,
    pub k_override: Option<f64>,
}

impl LightconeRun {
    pub fn new(l: f64, n_char: usize, t_final: f64) -> Self {
        LightconeRun {
            l,
            n_char,
            t_final,
            tol_fix: TOL_FIX,
            max_iter: MAX_ITER,
            safety: K_SAFETY,
            k_override: None,
        }
    }
}

/// One solved strip of the global extension.
#[derive(Clone, Debug)]
pub struct StripSolution {
    pub t0: f64,
    pub grid: TriangleGrid,
    pub state: CharacteristicState,
    pub deltas: Vec<f64>,
    pub residual: f64,
    pub y_z_gap: f64,
    pub isometry_drift: f64,
}

/// The stacked strips plus the restart bookkeeping.
#[derive(Clone, Debug)]
pub struct GlobalSolution {
    pub strips: Vec<StripSolution>,
    pub params: TriangleParams,
    pub k_used: f64,
    pub h: f64,
    pub exhausted: bool,
    pub reached_t: f64,
    pub t_requested: f64,
}

/// Restart data read off a strip top: chart points y with the null
/// derivative fields u and v, one row per node.
type RestartLine = (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Solve to t_final by stacking strips of at most n_char levels, restarting
/// from each strip's top line. The usable half-width shrinks by the strip
/// height as the domain of dependence demands; if the window empties before
/// t_final the partial solution is returned with `exhausted` set. Constant
/// data (M = 0) is globally constant, so its window never shrinks.
pub fn extend_global(
    data: &InitialData,
    chart: &Chart,
    b: &TwoFormPotential,
    run: &LightconeRun,
) -> Result<GlobalSolution> {
    let n = chart.dim();
    let params = if data.is_x_independent() {
        // skip the derivative stencils: phi0' vanishes identically, so the
        // bounds come from the single shared sample
        let y = data.phi0(0.0, n);
        chart.check_domain(&y)?;
        let metric = chart.metric(&y)?;
        let a = chart.min_metric_eigenvalue(&y)?.sqrt();
        let m = g_norm_sq(&metric, n, &data.phi1(0.0, n)).sqrt();
        TriangleParams { l: run.l, a, m, n, k: k_formula(run.l, a, m, n) }
    } else {
        let probes = 8 * run.n_char + 1;
        let spacing = 2.0 * run.l / (probes - 1) as f64;
        let mut phi0 = Vec::with_capacity(probes);
        let mut phi1 = Vec::with_capacity(probes);
        for j in 0..probes {
            let x = -run.l + j as f64 * spacing;
            phi0.push(data.phi0(x, n));
            phi1.push(data.phi1(x, n));
        }
        compute_bounds(&phi0, &phi1, chart, run.l, spacing)?
    };
    let is_static = data.is_x_independent() && params.m == 0.0;
    let k_used = run.k_override.unwrap_or(run.safety * params.k);
    if !(k_used > 0.0) {
        return Err(Error::WindowExhausted { restarts: 0, width: run.l });
    }
    let h = k_used / run.n_char as f64;
    let mut na = (run.l / h + 1e-9).floor() as usize;
    if na < 1 {
        return Err(Error::WindowExhausted { restarts: 0, width: run.l });
    }

    let mut strips: Vec<StripSolution> = Vec::new();
    let mut t0 = 0.0_f64;
    let mut exhausted = false;
    // restart line off the previous strip top: (y, u, v) rows per base node
    let mut base: Option<RestartLine> = None;

    while t0 < run.t_final - 1e-12 {
        let need = ((run.t_final - t0) / h - 1e-9).ceil().max(1.0) as usize;
        let levels = need.min(run.n_char).min(na);
        let grid = TriangleGrid::strip(na, levels, h);
        let state0 = match &base {
            None => {
                let xs = grid.base_xs();
                let p0: Vec<Vec<f64>> = xs.iter().map(|&x| data.phi0(x, n)).collect();
                if is_static {
                    // exact zeros instead of stencil noise on constant rows
                    let zeros = vec![vec![0.0; n]; xs.len()];
                    initial_iterate(&grid, chart, &p0, &p0, &zeros, &zeros)?
                } else {
                    let p1: Vec<Vec<f64>> = xs.iter().map(|&x| data.phi1(x, n)).collect();
                    to_characteristic_data(&p0, &p1, chart, &grid)?
                }
            }
            Some((y0, u0, v0)) => initial_iterate(&grid, chart, y0, y0, u0, v0)?,
        };
        let (state, deltas) =
            solve_triangle(state0, chart, b, &grid, run.tol_fix, run.max_iter)?;
        let residual = system_residual(&state, chart, b, &grid)?;
        let gap = y_z_gap(&state);
        let drift = isometry_drift(&state, chart, &grid)?;
        t0 += grid.height();

        // read the restart line off the strip top before storing it
        let top = grid.levels();
        let mut y0 = Vec::with_capacity(grid.level_width(top));
        let mut u0 = Vec::with_capacity(grid.level_width(top));
        let mut v0 = Vec::with_capacity(grid.level_width(top));
        for a in top..=grid.na() {
            let idx = grid.index(top, a);
            let mut ymid = vec![0.0; n];
            for i in 0..n {
                ymid[i] = 0.5 * (state.y[idx * n + i] + state.z[idx * n + i]);
            }
            y0.push(ymid);
            u0.push(state.u_at(idx).to_vec());
            v0.push(state.v_at(idx).to_vec());
        }

        strips.push(StripSolution {
            t0: t0 - grid.height(),
            grid,
            state,
            deltas,
            residual,
            y_z_gap: gap,
            isometry_drift: drift,
        });

        if t0 >= run.t_final - 1e-12 {
            break;
        }
        if is_static {
            base = None;
        } else {
            na -= levels;
            if na < 1 {
                exhausted = true;
                break;
            }
            base = Some((y0, u0, v0));
        }
    }

    Ok(GlobalSolution {
        strips,
        params,
        k_used,
        h,
        exhausted,
        reached_t: t0,
        t_requested: run.t_final,
    })
}
