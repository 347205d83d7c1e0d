//! Finite-volume time integration of the damped p-system
//!
//!   v_t - u_x = 0,
//!   u_t + p(v)_x = -alpha/(1+t)^lambda * u,
//!
//! on a truncated half-line [0, L] with Dirichlet (u(0)=0) or Neumann
//! (u_x(0)=0) boundary conditions. The flux vector is (-u, p(v)) with
//! characteristic speeds +-sqrt(-p'(v)). Damping is handled by an exact
//! integrating factor per Strang half-step (the source is linear in u), so
//! no source-term stiffness restricts the time step; the hyperbolic part
//! uses LLF or HLL fluxes with optional MUSCL-minmod reconstruction
//! (SSP-RK2 in time; plain forward Euler in first-order mode).

use std::io::{BufWriter, Write};
use std::path::Path;

use crate::correction::Boundary;
use crate::error::{DiffwaveError, Result};
use crate::model::{DampingSchedule, FarFieldState, PressureLaw};

/// Uniform cell-centered grid on [0, length]: x_i = (i + 1/2) dx.
#[derive(Debug, Clone, Copy)]
pub struct Grid1D {
    pub length: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length > 0.0) || n < 16 {
            return Err(DiffwaveError::config(format!(
                "grid needs length > 0 and at least 16 cells, got L={length}, N={n}"
            )));
        }
        Ok(Grid1D { length, n })
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.center(i)).collect()
    }
}

/// Discrete (v, u) state at time t.
#[derive(Debug, Clone)]
pub struct State {
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxKind {
    Llf,
    Hll,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reconstruction {
    FirstOrder,
    MusclMinmod,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub law: PressureLaw,
    pub sched: DampingSchedule,
    pub far: FarFieldState,
    pub boundary: Boundary,
    /// Pinned boundary volume v0(0) for the Neumann ghost; far.v_plus if None.
    pub v_boundary: Option<f64>,
    pub grid: Grid1D,
    pub cfl: f64,
    pub t_end: f64,
    pub sample_times: Vec<f64>,
    pub flux: FluxKind,
    pub reconstruction: Reconstruction,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(DiffwaveError::config(format!("cfl must be in (0,1), got {}", self.cfl)));
        }
        if self.sample_times.is_empty()
            || self.sample_times.windows(2).any(|w| w[0] >= w[1])
            || self.sample_times[0] < 0.0
            || *self.sample_times.last().unwrap() > self.t_end * (1.0 + 1e-12)
        {
            return Err(DiffwaveError::config(
                "sample times must be sorted, distinct and within [0, t_end]",
            ));
        }
        Ok(())
    }
}

/// Ghost-cell values (v, u) outside each end; index 0 is adjacent to the
/// boundary, index 1 one cell further out.
#[derive(Debug, Clone, Copy)]
pub struct GhostCells {
    pub left: [(f64, f64); 2],
    pub right: [(f64, f64); 2],
}

/// Ghost cells enforcing the boundary conditions at time t:
/// Dirichlet at x=0 reflects (v, -u); Neumann mirrors v through the pinned
/// boundary volume and copies u; the far end is pinned to (v_+, u_+ beta(t)).
pub fn apply_boundary(state: &State, config: &SolverConfig, t: f64) -> Result<GhostCells> {
    let n = state.v.len();
    let left = match config.boundary {
        Boundary::Dirichlet => [
            (state.v[0], -state.u[0]),
            (state.v[1], -state.u[1]),
        ],
        Boundary::Neumann => {
            let v_pin = config.v_boundary.unwrap_or(config.far.v_plus);
            [
                (2.0 * v_pin - state.v[0], state.u[0]),
                (2.0 * v_pin - state.v[1], state.u[1]),
            ]
        }
    };
    let u_far = config.far.u_plus * config.sched.beta(t)?;
    let right = [(config.far.v_plus, u_far), (config.far.v_plus, u_far)];
    let _ = n;
    Ok(GhostCells { left, right })
}

/// Numerical flux (flux_v, flux_u) across a face with left/right states.
pub fn hyperbolic_flux(
    v_l: f64,
    u_l: f64,
    v_r: f64,
    u_r: f64,
    law: &PressureLaw,
    kind: FluxKind,
) -> Result<(f64, f64)> {
    let (p_l, c_l) = law.pressure_and_speed(v_l)?;
    let (p_r, c_r) = law.pressure_and_speed(v_r)?;
    Ok(face_flux(v_l, u_l, p_l, c_l, v_r, u_r, p_r, c_r, kind))
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn face_flux(
    v_l: f64,
    u_l: f64,
    p_l: f64,
    c_l: f64,
    v_r: f64,
    u_r: f64,
    p_r: f64,
    c_r: f64,
    kind: FluxKind,
) -> (f64, f64) {
    match kind {
        FluxKind::Llf => {
            let s = c_l.max(c_r);
            (
                0.5 * (-u_l - u_r) - 0.5 * s * (v_r - v_l),
                0.5 * (p_l + p_r) - 0.5 * s * (u_r - u_l),
            )
        }
        FluxKind::Hll => {
            // wave-speed estimates +-max(c); for this system the estimates
            // are symmetric, so hll coincides with llf
            let s_r = c_l.max(c_r);
            let s_l = -s_r;
            if s_l >= 0.0 {
                (-u_l, p_l)
            } else if s_r <= 0.0 {
                (-u_r, p_r)
            } else {
                let inv = 1.0 / (s_r - s_l);
                (
                    inv * (s_r * (-u_l) - s_l * (-u_r) + s_l * s_r * (v_r - v_l)),
                    inv * (s_r * p_l - s_l * p_r + s_l * s_r * (u_r - u_l)),
                )
            }
        }
    }
}

/// Per-step record: realized time step, boundary v-fluxes integrated over
/// the step (for the discrete mass identity), smallest cell volume, and the
/// realized CFL ratio.
#[derive(Debug, Clone, Copy)]
pub struct StepInfo {
    pub dt: f64,
    pub flux_v_left: f64,
    pub flux_v_right: f64,
    pub min_v: f64,
    pub cfl_ratio: f64,
}

struct Workspace {
    ve: Vec<f64>,
    ue: Vec<f64>,
    dv: Vec<f64>,
    du: Vec<f64>,
    v1: Vec<f64>,
    u1: Vec<f64>,
    dv2: Vec<f64>,
    du2: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace {
            ve: vec![0.0; n + 4],
            ue: vec![0.0; n + 4],
            dv: vec![0.0; n],
            du: vec![0.0; n],
            v1: vec![0.0; n],
            u1: vec![0.0; n],
            dv2: vec![0.0; n],
            du2: vec![0.0; n],
        }
    }
}

/// Advance the state by one Strang-split step of size dt:
/// half-step exact damping, full hyperbolic finite-volume update, half-step
/// exact damping. Positivity of v is re-checked after the hyperbolic stage.
pub fn step(state: &mut State, config: &SolverConfig, dt: f64) -> Result<StepInfo> {
    let mut ws = Workspace::new(state.v.len());
    step_with(state, config, dt, &mut ws)
}

fn step_with(
    state: &mut State,
    config: &SolverConfig,
    dt: f64,
    ws: &mut Workspace,
) -> Result<StepInfo> {
    let n = state.v.len();
    let t = state.t;
    let dx = config.grid.dx();
    let t_mid = t + 0.5 * dt;

    // (i) half-step damping, exact integrating factor
    let damp1 = (-config.sched.damping_integral(t, t_mid)?).exp();
    for u in state.u.iter_mut() {
        *u *= damp1;
    }

    // (ii) hyperbolic stage at the frozen mid-step time
    let (fv_l, fv_r, max_s) = match config.reconstruction {
        Reconstruction::FirstOrder => {
            let (fl, fr, s) = rhs(state, config, t_mid, &mut ws.ve, &mut ws.ue, &mut ws.dv, &mut ws.du)?;
            for i in 0..n {
                state.v[i] += dt * ws.dv[i];
                state.u[i] += dt * ws.du[i];
            }
            (fl, fr, s)
        }
        Reconstruction::MusclMinmod => {
            // SSP-RK2 (Heun)
            let (fl0, fr0, s0) =
                rhs(state, config, t_mid, &mut ws.ve, &mut ws.ue, &mut ws.dv, &mut ws.du)?;
            for i in 0..n {
                ws.v1[i] = state.v[i] + dt * ws.dv[i];
                ws.u1[i] = state.u[i] + dt * ws.du[i];
            }
            let stage = State { v: std::mem::take(&mut ws.v1), u: std::mem::take(&mut ws.u1), t: t_mid };
            let rhs2 = rhs(&stage, config, t_mid, &mut ws.ve, &mut ws.ue, &mut ws.dv2, &mut ws.du2);
            ws.v1 = stage.v;
            ws.u1 = stage.u;
            let (fl1, fr1, s1) = rhs2?;
            for i in 0..n {
                state.v[i] = 0.5 * (state.v[i] + ws.v1[i] + dt * ws.dv2[i]);
                state.u[i] = 0.5 * (state.u[i] + ws.u1[i] + dt * ws.du2[i]);
            }
            (0.5 * (fl0 + fl1), 0.5 * (fr0 + fr1), s0.max(s1))
        }
    };

    let mut min_v = f64::INFINITY;
    let mut min_i = 0;
    for (i, &v) in state.v.iter().enumerate() {
        if v < min_v {
            min_v = v;
            min_i = i;
        }
    }
    if min_v <= 0.0 {
        return Err(DiffwaveError::Vacuum { v: min_v, cell: min_i, t: t_mid });
    }

    // (iii) half-step damping
    let damp2 = (-config.sched.damping_integral(t_mid, t + dt)?).exp();
    for u in state.u.iter_mut() {
        *u *= damp2;
    }

    state.t = t + dt;
    Ok(StepInfo {
        dt,
        flux_v_left: fv_l,
        flux_v_right: fv_r,
        min_v,
        cfl_ratio: max_s * dt / dx,
    })
}

/// Finite-volume right-hand side: dv/dt, du/dt from flux differences.
/// Returns the boundary v-fluxes and the largest face signal speed.
#[allow(clippy::too_many_arguments)]
fn rhs(
    state: &State,
    config: &SolverConfig,
    t: f64,
    ve: &mut [f64],
    ue: &mut [f64],
    dv: &mut [f64],
    du: &mut [f64],
) -> Result<(f64, f64, f64)> {
    let n = state.v.len();
    let dx = config.grid.dx();
    let ghosts = apply_boundary(state, config, t)?;
    ve[0] = ghosts.left[1].0;
    ue[0] = ghosts.left[1].1;
    ve[1] = ghosts.left[0].0;
    ue[1] = ghosts.left[0].1;
    ve[2..n + 2].copy_from_slice(&state.v);
    ue[2..n + 2].copy_from_slice(&state.u);
    ve[n + 2] = ghosts.right[0].0;
    ue[n + 2] = ghosts.right[0].1;
    ve[n + 3] = ghosts.right[1].0;
    ue[n + 3] = ghosts.right[1].1;

    let muscl = matches!(config.reconstruction, Reconstruction::MusclMinmod);
    let mut max_s = 0.0f64;
    let mut flux_left = (0.0, 0.0);
    let mut prev_flux = (0.0, 0.0);

    // face i sits between extended cells i+1 and i+2, i = 0..=n
    let (mut v_l, mut u_l) = face_state_left(ve, ue, 1, muscl);
    let (mut p_l, mut c_l) = pressure_speed(&config.law, v_l, 1, t)?;
    for i in 0..=n {
        let (v_r, u_r) = face_state_right(ve, ue, i + 2, muscl);
        let (p_r, c_r) = pressure_speed(&config.law, v_r, i + 2, t)?;
        let f = face_flux(v_l, u_l, p_l, c_l, v_r, u_r, p_r, c_r, config.flux);
        max_s = max_s.max(c_l.max(c_r));
        if i == 0 {
            flux_left = f;
        } else {
            dv[i - 1] = -(f.0 - prev_flux.0) / dx;
            du[i - 1] = -(f.1 - prev_flux.1) / dx;
        }
        prev_flux = f;
        if i < n {
            let (vl_next, ul_next) = face_state_left(ve, ue, i + 2, muscl);
            (v_l, u_l) = (vl_next, ul_next);
            (p_l, c_l) = if vl_next == v_r {
                (p_r, c_r)
            } else {
                pressure_speed(&config.law, vl_next, i + 2, t)?
            };
        }
    }
    Ok((flux_left.0, prev_flux.0, max_s))
}

#[inline]
fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// State at the right edge of extended cell j (feeds the face to its right).
#[inline]
fn face_state_left(ve: &[f64], ue: &[f64], j: usize, muscl: bool) -> (f64, f64) {
    if muscl {
        let sv = minmod(ve[j] - ve[j - 1], ve[j + 1] - ve[j]);
        let su = minmod(ue[j] - ue[j - 1], ue[j + 1] - ue[j]);
        (ve[j] + 0.5 * sv, ue[j] + 0.5 * su)
    } else {
        (ve[j], ue[j])
    }
}

/// State at the left edge of extended cell j (feeds the face to its left).
#[inline]
fn face_state_right(ve: &[f64], ue: &[f64], j: usize, muscl: bool) -> (f64, f64) {
    if muscl {
        let sv = minmod(ve[j] - ve[j - 1], ve[j + 1] - ve[j]);
        let su = minmod(ue[j] - ue[j - 1], ue[j + 1] - ue[j]);
        (ve[j] - 0.5 * sv, ue[j] - 0.5 * su)
    } else {
        (ve[j], ue[j])
    }
}

#[inline]
fn pressure_speed(law: &PressureLaw, v: f64, cell: usize, t: f64) -> Result<(f64, f64)> {
    if v <= 0.0 {
        return Err(DiffwaveError::Vacuum { v, cell, t });
    }
    law.pressure_and_speed(v)
}

/// One stored snapshot of a trajectory.
#[derive(Debug, Clone)]
pub struct Sample {
    pub t: f64,
    pub v: Vec<f64>,
    pub u: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct StepLog {
    pub t: f64,
    pub dt: f64,
    pub min_v: f64,
    pub cfl_ratio: f64,
}

/// Full run output: snapshots at the sample times plus per-step monitors and
/// the time-integrated boundary v-fluxes (for mass accounting).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub steps: Vec<StepLog>,
    pub mass_initial: f64,
    pub flux_integral_left: f64,
    pub flux_integral_right: f64,
}

/// Initial data descriptor; sampled at cell centers.
pub struct InitialData<'a> {
    pub v0: &'a dyn Fn(f64) -> f64,
    pub u0: &'a dyn Fn(f64) -> f64,
}

/// Integrate from the initial data to t_end, storing snapshots at the
/// configured sample times (hit exactly by dt clipping).
pub fn run(init: &InitialData, config: &SolverConfig) -> Result<Trajectory> {
    config.validate()?;
    let n = config.grid.n;
    let dx = config.grid.dx();
    let mut state = State {
        v: (0..n).map(|i| (init.v0)(config.grid.center(i))).collect(),
        u: (0..n).map(|i| (init.u0)(config.grid.center(i))).collect(),
        t: 0.0,
    };
    if let Some((i, &v)) = state.v.iter().enumerate().find(|(_, &v)| v <= 0.0) {
        return Err(DiffwaveError::Vacuum { v, cell: i, t: 0.0 });
    }
    // discrete compatibility with the boundary condition
    match config.boundary {
        Boundary::Dirichlet => {
            let u00 = (init.u0)(0.0);
            if u00.abs() > 1e-10 * (1.0 + config.far.u_plus.abs()) {
                return Err(DiffwaveError::config(format!(
                    "Dirichlet data incompatible: u0(0) = {u00:.3e}"
                )));
            }
        }
        Boundary::Neumann => {
            let h = 1e-3;
            let du = ((init.u0)(h) - (init.u0)(0.0)) / h;
            if du.abs() > 1e-4 * (1.0 + config.far.u_plus.abs()) {
                return Err(DiffwaveError::config(format!(
                    "Neumann data incompatible: u0'(0) ~ {du:.3e}"
                )));
            }
        }
    }

    let mass_initial = state.v.iter().sum::<f64>() * dx;
    let mut traj = Trajectory {
        samples: Vec::with_capacity(config.sample_times.len()),
        steps: Vec::new(),
        mass_initial,
        flux_integral_left: 0.0,
        flux_integral_right: 0.0,
    };

    let mut ws = Workspace::new(n);
    for &t_target in &config.sample_times {
        while state.t < t_target {
            // CFL-admissible dt from the current state, clipped to the target
            let mut max_c = 0.0f64;
            for &v in &state.v {
                let (_, c) = pressure_speed(&config.law, v, 0, state.t)?;
                max_c = max_c.max(c);
            }
            let mut dt = config.cfl * dx / max_c;
            if state.t + dt >= t_target {
                dt = t_target - state.t;
            }
            if dt <= f64::EPSILON * (1.0 + state.t) {
                state.t = t_target;
                break;
            }
            let info = step_with(&mut state, config, dt, &mut ws)?;
            if (state.t - t_target).abs() <= f64::EPSILON * (1.0 + t_target) {
                state.t = t_target;
            }
            traj.flux_integral_left += info.dt * info.flux_v_left;
            traj.flux_integral_right += info.dt * info.flux_v_right;
            traj.steps.push(StepLog {
                t: state.t,
                dt: info.dt,
                min_v: info.min_v,
                cfl_ratio: info.cfl_ratio,
            });
        }
        traj.samples.push(Sample { t: t_target, v: state.v.clone(), u: state.u.clone() });
    }
    Ok(traj)
}

/// Dump one snapshot as `# diffwave-snapshot v1`, key=value header lines,
/// then columns x v u.
pub fn write_snapshot(
    sample: &Sample,
    grid: &Grid1D,
    header: &[(&str, String)],
    path: &Path,
) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(std::fs::File::create(&tmp)?);
        writeln!(w, "# diffwave-snapshot v1")?;
        writeln!(w, "t={}", sample.t)?;
        for (key, value) in header {
            writeln!(w, "{key}={value}")?;
        }
        writeln!(w, "columns=x v u")?;
        for i in 0..sample.v.len() {
            writeln!(w, "{} {} {}", grid.center(i), sample.v[i], sample.u[i])?;
        }
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}
