//! Diffusion-wave targets (v_bar, u_bar)(x,t) for each boundary regime.
//!
//! The wave solves the parabolic problem obtained by replacing momentum
//! balance with Darcy's law p(v_bar)_x = -a(t) u_bar:
//!
//!   dt v_bar = -(1+t)^lambda / alpha * dxx p(v_bar)
//!
//! (forward-parabolic since p' < 0). Four representations are provided:
//! the explicit Gaussian solution of the linearization about v_+, the
//! Dirichlet nonlinear wave computed by an implicit parabolic solve, the
//! Neumann self-similar profile phi(x (1+t)^{-(lambda+1)/2}) computed by
//! shooting, and the trivial constant state. u_bar is always derived from
//! v_bar through the Darcy relation, never stored independently.

mod parabolic;
mod selfsimilar;

pub use parabolic::{dirichlet_diffusion_wave, ParabolicOpts, ParabolicWave};
pub use selfsimilar::{neumann_selfsimilar_profile, SelfSimilarWave, ShootingOpts};

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use crate::correction::Mollifier;
use crate::error::{DiffwaveError, Result};
use crate::model::{DampingSchedule, FarFieldState, PressureLaw};
use crate::quad::adaptive_simpson;

/// Which wave field to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveField {
    VBar,
    UBar,
    VBarX,
    VBarT,
}

/// Evaluable diffusion wave. Immutable after construction.
#[derive(Debug, Clone)]
pub enum WaveProfile {
    Gaussian(GaussianWave),
    DirichletParabolic(ParabolicWave),
    NeumannSelfSimilar(SelfSimilarWave),
    Constant(ConstantWave),
}

impl WaveProfile {
    pub fn far_field(&self) -> &FarFieldState {
        match self {
            WaveProfile::Gaussian(w) => &w.far,
            WaveProfile::DirichletParabolic(w) => &w.far,
            WaveProfile::NeumannSelfSimilar(w) => &w.far,
            WaveProfile::Constant(w) => &w.far,
        }
    }

    pub fn regime_name(&self) -> &'static str {
        match self {
            WaveProfile::Gaussian(_) => "gaussian_linear",
            WaveProfile::DirichletParabolic(_) => "dirichlet_parabolic",
            WaveProfile::NeumannSelfSimilar(_) => "neumann_selfsimilar",
            WaveProfile::Constant(_) => "constant",
        }
    }

    /// Evaluate one field at (x, t), x >= 0. Parabolic stacks reject t
    /// outside their sampled range.
    pub fn eval(&self, x: f64, t: f64, field: WaveField) -> Result<f64> {
        if x < 0.0 || t < 0.0 {
            return Err(DiffwaveError::domain(format!(
                "wave evaluation needs x >= 0, t >= 0, got ({x}, {t})"
            )));
        }
        match self {
            WaveProfile::Gaussian(w) => Ok(w.eval(x, t, field)),
            WaveProfile::DirichletParabolic(w) => w.eval(x, t, field),
            WaveProfile::NeumannSelfSimilar(w) => Ok(w.eval(x, t, field)),
            WaveProfile::Constant(w) => Ok(w.eval(field)),
        }
    }

    pub fn v_bar(&self, x: f64, t: f64) -> Result<f64> {
        self.eval(x, t, WaveField::VBar)
    }

    pub fn u_bar(&self, x: f64, t: f64) -> Result<f64> {
        self.eval(x, t, WaveField::UBar)
    }

    /// int_0^infty (v_bar - v_+) dx at time t, by the representation's own
    /// bookkeeping (conserved for Dirichlet/Gaussian, growing for the
    /// self-similar Neumann wave, zero for the constant wave).
    pub fn half_line_excess(&self, t: f64) -> Result<f64> {
        match self {
            WaveProfile::Gaussian(w) => Ok(0.5 * w.delta0),
            WaveProfile::DirichletParabolic(w) => w.excess_mass_at(t),
            WaveProfile::NeumannSelfSimilar(w) => Ok(w.half_line_excess(t)),
            WaveProfile::Constant(_) => Ok(0.0),
        }
    }
}

/// Explicit solution of the linearized (about v_+) Darcy system on the
/// whole line:
///
///   v(x,t) = v_+ + delta0 sqrt((lambda+1)/(4 kappa pi)) (1+t)^{-(lambda+1)/2}
///            exp(-(lambda+1) x^2 / (4 kappa (1+t)^{lambda+1}))
///   u      = kappa (1+t)^lambda v_x
#[derive(Debug, Clone)]
pub struct GaussianWave {
    pub far: FarFieldState,
    pub delta0: f64,
    pub lambda: f64,
}

pub fn gaussian_linear_wave(far: FarFieldState, delta0: f64, lambda: f64) -> Result<WaveProfile> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(DiffwaveError::domain(format!(
            "the linearized wave requires lambda in [0,1), got {lambda}"
        )));
    }
    if !(far.kappa > 0.0) {
        return Err(DiffwaveError::domain("kappa must be positive".to_string()));
    }
    Ok(WaveProfile::Gaussian(GaussianWave { far, delta0, lambda }))
}

impl GaussianWave {
    pub fn eval(&self, x: f64, t: f64, field: WaveField) -> f64 {
        let lp1 = self.lambda + 1.0;
        let kappa = self.far.kappa;
        let spread = (1.0 + t).powf(lp1);
        let amp = self.delta0 * (lp1 / (4.0 * kappa * std::f64::consts::PI)).sqrt()
            / (1.0 + t).powf(0.5 * lp1);
        let dev = amp * (-lp1 * x * x / (4.0 * kappa * spread)).exp();
        match field {
            WaveField::VBar => self.far.v_plus + dev,
            WaveField::VBarX => dev * (-lp1 * x / (2.0 * kappa * spread)),
            WaveField::UBar => {
                kappa * (1.0 + t).powf(self.lambda) * dev * (-lp1 * x / (2.0 * kappa * spread))
            }
            WaveField::VBarT => {
                dev * (-0.5 * lp1 / (1.0 + t)
                    + lp1 * lp1 * x * x / (4.0 * kappa * spread * (1.0 + t)))
            }
        }
    }
}

/// The trivial wave (v_bar, u_bar) = (v_+, 0) of the constant-state
/// Neumann case.
#[derive(Debug, Clone)]
pub struct ConstantWave {
    pub far: FarFieldState,
}

pub fn constant_wave(far: FarFieldState) -> WaveProfile {
    WaveProfile::Constant(ConstantWave { far })
}

impl ConstantWave {
    pub fn eval(&self, field: WaveField) -> f64 {
        match field {
            WaveField::VBar => self.far.v_plus,
            _ => 0.0,
        }
    }
}

/// Mass bookkeeping that fixes the Dirichlet wave's initial excess:
///
///   int_0^infty (v_bar0 - v_+) = int_0^infty (v0 - v_+) - u_+ B(0),
///   delta0 = 2 int_0^infty (v_bar0 - v_+).
#[derive(Debug, Clone, Copy)]
pub struct MassBudget {
    pub initial_excess: f64,
    pub u_plus: f64,
    pub b0: f64,
    pub delta0: f64,
}

impl MassBudget {
    /// int_0^infty (v_bar0 - v_+) dy.
    pub fn wave_excess(&self) -> f64 {
        self.initial_excess - self.u_plus * self.b0
    }
}

/// Initial profile of the Dirichlet wave: v_bar0 = v_+ + c * shape(x) with a
/// fixed normalized bump shape and c determined by the mass budget.
#[derive(Debug, Clone)]
pub struct DirichletWaveInit {
    pub far: FarFieldState,
    pub c: f64,
    pub shape: Mollifier,
}

impl DirichletWaveInit {
    pub fn v_bar0(&self, x: f64) -> f64 {
        self.far.v_plus + self.c * self.shape.value(x)
    }

    /// Width of the bump support; the parabolic grid must resolve it.
    pub fn feature_width(&self) -> f64 {
        let (lo, hi) = self.shape.support();
        hi - lo
    }
}

/// Construct the Dirichlet wave's initial data from the physical initial
/// profile v0. `x_span` must cover the support of v0 - v_+.
pub fn build_dirichlet_wave_initdata(
    v0: &dyn Fn(f64) -> f64,
    x_span: f64,
    far: FarFieldState,
    sched: &DampingSchedule,
) -> Result<(DirichletWaveInit, MassBudget)> {
    let shape = Mollifier::standard();
    // Integrate in half-unit segments so compactly supported bumps cannot
    // slip between the sample points of a single adaptive pass.
    let mut initial_excess = 0.0;
    let mut lo = 0.0;
    while lo < x_span {
        let hi = (lo + 0.5).min(x_span);
        initial_excess += adaptive_simpson(&|x| v0(x) - far.v_plus, lo, hi, 1e-13);
        lo = hi;
    }
    let b0 = sched.b_tail(0.0)?;
    let c = initial_excess - far.u_plus * b0;
    let budget = MassBudget { initial_excess, u_plus: far.u_plus, b0, delta0: 2.0 * c };
    let init = DirichletWaveInit { far, c, shape };
    let min_v = far.v_plus + (c * init.shape.peak()).min(0.0);
    if min_v <= 0.0 {
        return Err(DiffwaveError::domain(format!(
            "wave amplitude too large: min v_bar0 = {min_v:.3e} <= 0"
        )));
    }
    Ok((init, budget))
}

// ---------------------------------------------------------------------------
// Cubic interpolation on a uniform grid (shared by the table-backed waves).

/// Value and d/dx of the cubic Lagrange interpolant through the four grid
/// nodes nearest to x. `values` must have at least 4 entries.
pub(crate) fn cubic4(values: &[f64], dx: f64, x0: f64, x: f64) -> (f64, f64) {
    let n = values.len();
    let u = (x - x0) / dx;
    let j = (u.floor() as isize).clamp(0, n as isize - 2) as usize;
    let k = j.saturating_sub(1).min(n - 4);
    let t = u - k as f64;
    let f = &values[k..k + 4];
    let l0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
    let l1 = t * (t - 2.0) * (t - 3.0) / 2.0;
    let l2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
    let l3 = t * (t - 1.0) * (t - 2.0) / 6.0;
    let value = f[0] * l0 + f[1] * l1 + f[2] * l2 + f[3] * l3;
    let d0 = -((t - 2.0) * (t - 3.0) + (t - 1.0) * (t - 3.0) + (t - 1.0) * (t - 2.0)) / 6.0;
    let d1 = ((t - 2.0) * (t - 3.0) + t * (t - 3.0) + t * (t - 2.0)) / 2.0;
    let d2 = -((t - 1.0) * (t - 3.0) + t * (t - 3.0) + t * (t - 1.0)) / 2.0;
    let d3 = ((t - 1.0) * (t - 2.0) + t * (t - 1.0) + t * (t - 2.0)) / 6.0;
    let deriv = (f[0] * d0 + f[1] * d1 + f[2] * d2 + f[3] * d3) / dx;
    (value, deriv)
}

/// Rescaled time s(t) = ((1+t)^{lambda+1} - 1)/(lambda+1), in which the
/// Darcy parabolic equation becomes autonomous.
pub fn rescaled_time(lambda: f64, t: f64) -> f64 {
    let lp1 = lambda + 1.0;
    (lp1 * t.ln_1p()).exp_m1() / lp1
}

// ---------------------------------------------------------------------------
// Profile files: `# diffwave-profile v1`, key=value header lines, then
// whitespace-separated numeric columns.

pub fn write_profile(profile: &WaveProfile, path: &Path) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(std::fs::File::create(&tmp)?);
        writeln!(w, "# diffwave-profile v1")?;
        writeln!(w, "regime={}", profile.regime_name())?;
        let far = profile.far_field();
        writeln!(w, "v_plus={}", far.v_plus)?;
        writeln!(w, "u_plus={}", far.u_plus)?;
        match profile {
            WaveProfile::Gaussian(g) => {
                writeln!(w, "lambda={}", g.lambda)?;
                writeln!(w, "kappa={}", g.far.kappa)?;
                writeln!(w, "delta0={}", g.delta0)?;
                writeln!(w, "columns=none")?;
            }
            WaveProfile::Constant(_) => {
                writeln!(w, "kappa={}", far.kappa)?;
                writeln!(w, "columns=none")?;
            }
            WaveProfile::NeumannSelfSimilar(s) => {
                writeln!(w, "alpha={}", s.sched.alpha)?;
                writeln!(w, "lambda={}", s.sched.lambda)?;
                writeln!(w, "gamma={}", gamma_of(&s.law))?;
                writeln!(w, "v_boundary={}", s.v_boundary)?;
                writeln!(w, "xi_max={}", s.xi_max)?;
                writeln!(w, "columns=xi phi dphi")?;
                let h = s.xi_max / (s.phi.len() - 1) as f64;
                for j in 0..s.phi.len() {
                    writeln!(w, "{} {} {}", j as f64 * h, s.phi[j], s.dphi[j])?;
                }
            }
            WaveProfile::DirichletParabolic(p) => {
                writeln!(w, "alpha={}", p.sched.alpha)?;
                writeln!(w, "lambda={}", p.sched.lambda)?;
                writeln!(w, "gamma={}", gamma_of(&p.law))?;
                writeln!(w, "dx={}", p.dx)?;
                let times: Vec<String> = p.times.iter().map(|t| t.to_string()).collect();
                writeln!(w, "times={}", times.join(","))?;
                writeln!(w, "columns=x v...")?;
                for j in 0..p.nodes() {
                    let mut row = String::with_capacity(24 * (1 + p.times.len()));
                    row.push_str(&(j as f64 * p.dx).to_string());
                    for snap in &p.snaps {
                        row.push(' ');
                        row.push_str(&snap[j].to_string());
                    }
                    writeln!(w, "{row}")?;
                }
            }
        }
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn gamma_of(law: &PressureLaw) -> f64 {
    let PressureLaw::GammaLaw { gamma } = *law;
    gamma
}

pub fn read_profile(path: &Path) -> Result<WaveProfile> {
    let file = std::fs::File::open(path)?;
    let mut lines = std::io::BufReader::new(file).lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| DiffwaveError::config("empty profile file".to_string()))?;
    if header.trim() != "# diffwave-profile v1" {
        return Err(DiffwaveError::config(format!("bad profile header: {header}")));
    }
    let mut kv = std::collections::BTreeMap::new();
    let mut body: Vec<Vec<f64>> = Vec::new();
    for line in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some((key, value)) = trimmed.split_once('=') {
            kv.insert(key.trim().to_string(), value.trim().to_string());
        } else {
            let row: std::result::Result<Vec<f64>, _> =
                trimmed.split_whitespace().map(str::parse::<f64>).collect();
            body.push(row.map_err(|e| DiffwaveError::config(format!("bad profile row: {e}")))?);
        }
    }
    let get = |key: &str| -> Result<f64> {
        kv.get(key)
            .ok_or_else(|| DiffwaveError::config(format!("profile missing key {key}")))?
            .parse::<f64>()
            .map_err(|e| DiffwaveError::config(format!("profile key {key}: {e}")))
    };
    let regime = kv
        .get("regime")
        .ok_or_else(|| DiffwaveError::config("profile missing regime".to_string()))?
        .clone();
    let v_plus = get("v_plus")?;
    let u_plus = get("u_plus")?;
    match regime.as_str() {
        "gaussian_linear" => {
            let kappa = get("kappa")?;
            let far = FarFieldState { v_plus, u_plus, kappa };
            gaussian_linear_wave(far, get("delta0")?, get("lambda")?)
        }
        "constant" => {
            let kappa = get("kappa")?;
            Ok(constant_wave(FarFieldState { v_plus, u_plus, kappa }))
        }
        "neumann_selfsimilar" => {
            let sched = DampingSchedule::new(get("alpha")?, get("lambda")?)?;
            let law = PressureLaw::gamma_law(get("gamma")?)?;
            let far = FarFieldState::new(&law, &sched, v_plus, u_plus)?;
            let (mut phi, mut dphi) = (Vec::new(), Vec::new());
            for row in &body {
                if row.len() != 3 {
                    return Err(DiffwaveError::config("selfsimilar rows need 3 columns"));
                }
                phi.push(row[1]);
                dphi.push(row[2]);
            }
            SelfSimilarWave::from_table(far, law, sched, get("v_boundary")?, get("xi_max")?, phi, dphi)
        }
        "dirichlet_parabolic" => {
            let sched = DampingSchedule::new(get("alpha")?, get("lambda")?)?;
            let law = PressureLaw::gamma_law(get("gamma")?)?;
            let far = FarFieldState::new(&law, &sched, v_plus, u_plus)?;
            let times: std::result::Result<Vec<f64>, _> = kv
                .get("times")
                .ok_or_else(|| DiffwaveError::config("profile missing times".to_string()))?
                .split(',')
                .map(str::parse::<f64>)
                .collect();
            let times = times.map_err(|e| DiffwaveError::config(format!("bad times: {e}")))?;
            let dx = get("dx")?;
            let n_t = times.len();
            let mut snaps = vec![Vec::with_capacity(body.len()); n_t];
            for row in &body {
                if row.len() != n_t + 1 {
                    return Err(DiffwaveError::config("parabolic row width mismatch"));
                }
                for (k, snap) in snaps.iter_mut().enumerate() {
                    snap.push(row[k + 1]);
                }
            }
            ParabolicWave::from_table(far, law, sched, dx, times, snaps)
        }
        other => Err(DiffwaveError::config(format!("unknown profile regime {other}"))),
    }
}
