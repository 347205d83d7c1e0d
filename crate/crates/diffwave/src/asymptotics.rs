//! Perturbation fields, weighted energy functionals, and decay-rate
//! measurement.
//!
//! The perturbation variables are
//!
//!   omega(x,t) = -int_x^infty (v - v_bar - v_hat) dy,
//!   z(x,t)     = u - u_bar - u_hat  (= omega_t),
//!
//! and the theorems assert boundedness of weighted functionals
//! (1+t)^w ||dx^k omega||^2 with w from a piecewise-in-lambda table:
//! Dirichlet switches branches at lambda = 3/5, the Neumann wave case at
//! lambda = 1/7, and the constant-wave Neumann case has no cut-off. The
//! predicted L-infinity rates for v - v_bar and u - u_bar follow the same
//! pattern; they exist only in the Dirichlet case.

use serde::Serialize;

use crate::correction::{Boundary, CorrectionField, CorrectionPair};
use crate::error::{DiffwaveError, Result};
use crate::solver::{Grid1D, Sample};
use crate::waves::{WaveField, WaveProfile};

/// Which rate/weight table applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Dirichlet,
    /// Neumann with v0(0) != v_+ (self-similar wave).
    NeumannWave,
    /// Neumann with v0(0) = v_+ (constant wave, no cut-off).
    NeumannConstant,
}

impl Regime {
    pub fn cutoff(&self) -> Option<f64> {
        match self {
            Regime::Dirichlet => Some(3.0 / 5.0),
            Regime::NeumannWave => Some(1.0 / 7.0),
            Regime::NeumannConstant => None,
        }
    }

    pub fn boundary(&self) -> Boundary {
        match self {
            Regime::Dirichlet => Boundary::Dirichlet,
            _ => Boundary::Neumann,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L1,
    L2,
    LInf,
}

/// Discrete norm on a uniform grid: L1 with dx weight, L2 with sqrt(dx).
pub fn norm(field: &[f64], dx: f64, kind: NormKind) -> f64 {
    match kind {
        NormKind::L1 => field.iter().map(|f| f.abs()).sum::<f64>() * dx,
        NormKind::L2 => (field.iter().map(|f| f * f).sum::<f64>() * dx).sqrt(),
        NormKind::LInf => field.iter().fold(0.0f64, |m, &f| m.max(f.abs())),
    }
}

/// Perturbation fields on the snapshot grid, with the wave and correction
/// values they were built from.
#[derive(Debug, Clone)]
pub struct PerturbationFields {
    pub t: f64,
    /// omega by reverse cumulative trapezoid, anchored 0 at the right edge.
    pub omega: Vec<f64>,
    pub z: Vec<f64>,
    /// dx^k omega for k = 1, 2, 3 by repeated centered differencing.
    pub omega_dx: [Vec<f64>; 3],
    /// dx^k z for k = 1, 2.
    pub z_dx: [Vec<f64>; 2],
    /// v - v_bar - v_hat (the integrand of omega).
    pub diff_v: Vec<f64>,
    pub v_bar: Vec<f64>,
    pub u_bar: Vec<f64>,
    pub v_hat: Vec<f64>,
    pub u_hat: Vec<f64>,
}

/// Build the perturbation fields for one snapshot. The wave and correction
/// must belong to the same boundary regime as the snapshot.
pub fn perturbation_fields(
    sample: &Sample,
    grid: &Grid1D,
    wave: &WaveProfile,
    corr: &CorrectionPair,
) -> Result<PerturbationFields> {
    check_regime(wave, corr)?;
    let n = sample.v.len();
    let dx = grid.dx();
    let t = sample.t;
    let at = corr.at_time(t)?;
    let mut v_bar = vec![0.0; n];
    let mut u_bar = vec![0.0; n];
    let mut v_hat = vec![0.0; n];
    let mut u_hat = vec![0.0; n];
    let mut diff_v = vec![0.0; n];
    let mut z = vec![0.0; n];
    for i in 0..n {
        let x = grid.center(i);
        v_bar[i] = wave.eval(x, t, WaveField::VBar)?;
        u_bar[i] = wave.eval(x, t, WaveField::UBar)?;
        v_hat[i] = at.eval(x, CorrectionField::VHat);
        u_hat[i] = at.eval(x, CorrectionField::UHat);
        diff_v[i] = sample.v[i] - v_bar[i] - v_hat[i];
        z[i] = sample.u[i] - u_bar[i] - u_hat[i];
    }
    // omega(x_i) = -int_{x_i}^{edge} diff_v dy, reverse cumulative trapezoid
    let mut omega = vec![0.0; n];
    for i in (0..n - 1).rev() {
        omega[i] = omega[i + 1] - 0.5 * (diff_v[i] + diff_v[i + 1]) * dx;
    }
    // parity at x = 0: omega and z are odd for Dirichlet (omega(0)=z(0)=0),
    // even for Neumann (omega_x(0)=z_x(0)=0); derivatives alternate parity
    let base_parity = match corr.boundary {
        Boundary::Dirichlet => -1.0,
        Boundary::Neumann => 1.0,
    };
    let d1 = centered_diff(&omega, dx, base_parity);
    let d2 = centered_diff(&d1, dx, -base_parity);
    let d3 = centered_diff(&d2, dx, base_parity);
    let zd1 = centered_diff(&z, dx, base_parity);
    let zd2 = centered_diff(&zd1, dx, -base_parity);
    Ok(PerturbationFields {
        t,
        omega,
        z,
        omega_dx: [d1, d2, d3],
        z_dx: [zd1, zd2],
        diff_v,
        v_bar,
        u_bar,
        v_hat,
        u_hat,
    })
}

fn check_regime(wave: &WaveProfile, corr: &CorrectionPair) -> Result<()> {
    let wave_boundary = match wave {
        WaveProfile::DirichletParabolic(_) => Some(Boundary::Dirichlet),
        WaveProfile::NeumannSelfSimilar(_) | WaveProfile::Constant(_) => Some(Boundary::Neumann),
        WaveProfile::Gaussian(_) => None, // linearized target, regime-neutral
    };
    if let Some(b) = wave_boundary {
        if b != corr.boundary {
            return Err(DiffwaveError::domain(format!(
                "regime mismatch: {} wave with {} correction",
                wave.regime_name(),
                corr.boundary
            )));
        }
    }
    Ok(())
}

/// Centered difference on cell centers, with a parity ghost at x = 0
/// (f(-x) = parity * f(x)) and a copy ghost at the right edge.
fn centered_diff(f: &[f64], dx: f64, parity: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    if n < 2 {
        return d;
    }
    d[0] = (f[1] - parity * f[0]) / (2.0 * dx);
    for i in 1..n - 1 {
        d[i] = (f[i + 1] - f[i - 1]) / (2.0 * dx);
    }
    d[n - 1] = (f[n - 1] - f[n - 2]) / (2.0 * dx);
    d
}

/// Quantity whose decay rate is predicted or measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// sup_x |v - v_bar|
    VLinf,
    /// sup_x |u - u_bar|
    ULinf,
    /// ||dx^k omega||_{L2}, k <= 3
    OmegaL2(usize),
    /// ||dx^k omega_t||_{L2} (omega_t identified with z), k <= 2
    OmegaTL2(usize),
}

impl Quantity {
    pub fn name(&self) -> String {
        match self {
            Quantity::VLinf => "v_Linf".to_string(),
            Quantity::ULinf => "u_Linf".to_string(),
            Quantity::OmegaL2(k) => format!("omega_dx{k}_L2"),
            Quantity::OmegaTL2(k) => format!("z_dx{k}_L2"),
        }
    }
}

/// Predicted decay power of (1+t). `exponent` is None where the source
/// theorems state no rate (Neumann L-infinity quantities). At a critical
/// lambda the rate carries an epsilon slack.
#[derive(Debug, Clone, Serialize)]
pub struct RatePrediction {
    pub regime: Regime,
    pub quantity: String,
    pub lambda: f64,
    pub exponent: Option<f64>,
    pub epsilon_slack: f64,
}

const CUTOFF_TOL: f64 = 1e-9;

/// Predicted decay exponent of (1+t) for one quantity.
pub fn predicted_rate(
    regime: Regime,
    quantity: Quantity,
    lambda: f64,
    epsilon: f64,
) -> Result<RatePrediction> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(DiffwaveError::domain(format!(
            "rate predictions require lambda in [0,1), got {lambda}"
        )));
    }
    let critical = regime
        .cutoff()
        .is_some_and(|c| (lambda - c).abs() <= CUTOFF_TOL);
    let slack = if critical { epsilon } else { 0.0 };
    let exponent = match (regime, quantity) {
        (Regime::Dirichlet, Quantity::VLinf) => {
            Some((3.0 * (lambda + 1.0) / 4.0).min((3.0 - lambda) / 2.0))
        }
        (Regime::Dirichlet, Quantity::ULinf) => {
            Some(((lambda + 5.0) / 4.0).min(2.0 - lambda))
        }
        // The source corollary is stated only for Dirichlet; Neumann
        // L-infinity rates are reported without a prediction.
        (_, Quantity::VLinf) | (_, Quantity::ULinf) => None,
        (_, Quantity::OmegaL2(k)) => {
            if k > 3 {
                return Err(DiffwaveError::domain(format!("omega derivative order {k} > 3")));
            }
            Some(0.5 * omega_weight(regime, lambda, k))
        }
        (_, Quantity::OmegaTL2(k)) => {
            if k > 2 {
                return Err(DiffwaveError::domain(format!("omega_t derivative order {k} > 2")));
            }
            Some(0.5 * omega_t_weight(regime, lambda, k))
        }
    };
    Ok(RatePrediction {
        regime,
        quantity: quantity.name(),
        lambda,
        exponent,
        epsilon_slack: slack,
    })
}

/// Weight exponent w such that (1+t)^w ||dx^k omega||^2 is asserted bounded.
pub fn omega_weight(regime: Regime, lambda: f64, k: usize) -> f64 {
    let k = k as f64;
    let base = (lambda + 1.0) * k;
    match regime {
        Regime::Dirichlet => {
            if lambda < 0.6 - CUTOFF_TOL {
                base
            } else if lambda <= 0.6 + CUTOFF_TOL {
                8.0 * k / 5.0
            } else {
                base + 1.5 - 2.5 * lambda
            }
        }
        Regime::NeumannWave => {
            let c = 1.0 / 7.0;
            if lambda < c - CUTOFF_TOL {
                base
            } else if lambda <= c + CUTOFF_TOL {
                8.0 * k / 7.0
            } else {
                base + 0.5 - 3.5 * lambda
            }
        }
        Regime::NeumannConstant => base,
    }
}

/// Weight exponent for (1+t)^w ||dx^k omega_t||^2.
pub fn omega_t_weight(regime: Regime, lambda: f64, k: usize) -> f64 {
    let k = k as f64;
    let base = (lambda + 1.0) * k + 2.0;
    match regime {
        Regime::Dirichlet => {
            if lambda < 0.6 - CUTOFF_TOL {
                base
            } else if lambda <= 0.6 + CUTOFF_TOL {
                8.0 * k / 5.0 + 2.0
            } else {
                base + 1.5 - 2.5 * lambda
            }
        }
        Regime::NeumannWave => {
            let c = 1.0 / 7.0;
            if lambda < c - CUTOFF_TOL {
                base
            } else if lambda <= c + CUTOFF_TOL {
                8.0 * k / 7.0 + 2.0
            } else {
                base + 0.5 - 3.5 * lambda
            }
        }
        Regime::NeumannConstant => base,
    }
}

/// Interior of the admissible interval for the super-critical integrated
/// bound's free exponent (the paper leaves it anywhere inside); midpoint.
pub fn default_b_exponent(regime: Regime, lambda: f64) -> Option<f64> {
    match regime {
        Regime::Dirichlet if lambda > 0.6 => Some(0.5 * (1.5 - 1.5 * lambda + lambda)),
        Regime::NeumannWave if lambda > 1.0 / 7.0 => Some(0.5 * (0.5 - 2.5 * lambda + lambda)),
        _ => None,
    }
}

/// Norm series of one run: per sample time, the L2 norms of the omega and z
/// derivative ladders.
#[derive(Debug, Clone, Default)]
pub struct NormSeries {
    pub t: Vec<f64>,
    /// ||dx^k omega||_{L2}, k = 0..=3
    pub omega: [Vec<f64>; 4],
    /// ||dx^k z||_{L2}, k = 0..=2
    pub z: [Vec<f64>; 3],
}

impl NormSeries {
    pub fn push(&mut self, fields: &PerturbationFields, dx: f64) {
        self.t.push(fields.t);
        self.omega[0].push(norm(&fields.omega, dx, NormKind::L2));
        for k in 1..=3 {
            self.omega[k].push(norm(&fields.omega_dx[k - 1], dx, NormKind::L2));
        }
        self.z[0].push(norm(&fields.z, dx, NormKind::L2));
        for k in 1..=2 {
            self.z[k].push(norm(&fields.z_dx[k - 1], dx, NormKind::L2));
        }
    }
}

/// One weighted functional (1+t)^w ||dx^k field||^2 evaluated along a run.
#[derive(Debug, Clone, Serialize)]
pub struct WeightedFunctional {
    pub name: String,
    /// Exponent the theorem multiplies the squared norm by.
    pub weight: f64,
    /// Epsilon slack at a critical lambda (allowed growth).
    pub slack: f64,
    pub series: Vec<(f64, f64)>,
}

/// Time-accumulated integral int_0^t (1+s)^w ||dx^j field||^2 ds with its
/// asserted growth exponent (0 except in the critical/super-critical cases).
#[derive(Debug, Clone, Serialize)]
pub struct IntegratedFunctional {
    pub name: String,
    pub weight: f64,
    pub growth: f64,
    pub series: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightedSeries {
    pub functionals: Vec<WeightedFunctional>,
    pub integrated: Vec<IntegratedFunctional>,
    /// b exponent used in the super-critical integrated weights, if any.
    pub b_exponent: Option<f64>,
}

/// Apply the applicable theorem's weight table to a run's norm series.
pub fn weighted_energy_series(
    norms: &NormSeries,
    regime: Regime,
    lambda: f64,
    epsilon: f64,
    b_override: Option<f64>,
) -> Result<WeightedSeries> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(DiffwaveError::domain(format!(
            "weighted functionals require lambda in [0,1), got {lambda}"
        )));
    }
    let critical = regime
        .cutoff()
        .is_some_and(|c| (lambda - c).abs() <= CUTOFF_TOL);
    let supercritical = regime.cutoff().is_some_and(|c| lambda > c + CUTOFF_TOL);
    let slack = if critical { epsilon } else { 0.0 };
    let b = b_override.or_else(|| default_b_exponent(regime, lambda));

    let mut functionals = Vec::new();
    for k in 0..=3 {
        let w = omega_weight(regime, lambda, k);
        functionals.push(WeightedFunctional {
            name: format!("omega_dx{k}_L2_sq"),
            weight: w,
            slack,
            series: weight_series(&norms.t, &norms.omega[k], w),
        });
    }
    for k in 0..=2 {
        let w = omega_t_weight(regime, lambda, k);
        functionals.push(WeightedFunctional {
            name: format!("z_dx{k}_L2_sq"),
            weight: w,
            slack,
            series: weight_series(&norms.t, &norms.z[k], w),
        });
    }

    let mut integrated = Vec::new();
    if supercritical {
        let b = b.expect("supercritical regime has a b exponent");
        let growth = match regime {
            Regime::Dirichlet => b + 1.5 * lambda - 1.5,
            _ => b + 2.5 * lambda - 0.5,
        };
        for j in 0..=3 {
            let w = (lambda + 1.0) * (j as f64 - 1.0) + b;
            integrated.push(accumulate(
                format!("int_omega_dx{j}"),
                &norms.t,
                &norms.omega[j],
                w,
                growth,
            ));
        }
        for j in 0..=2 {
            let w = (lambda + 1.0) * j as f64 + b - lambda + 1.0;
            integrated.push(accumulate(format!("int_z_dx{j}"), &norms.t, &norms.z[j], w, growth));
        }
    } else {
        // sub-critical table; at the critical point the same shape holds
        // with (1+t)^epsilon growth on the right-hand side
        let growth = slack;
        for j in 1..=3 {
            let w = (lambda + 1.0) * j as f64 - 1.0;
            integrated.push(accumulate(
                format!("int_omega_dx{j}"),
                &norms.t,
                &norms.omega[j],
                w,
                growth,
            ));
        }
        for j in 0..=2 {
            let w = (lambda + 1.0) * j as f64 + 1.0;
            integrated.push(accumulate(format!("int_z_dx{j}"), &norms.t, &norms.z[j], w, growth));
        }
    }
    Ok(WeightedSeries { functionals, integrated, b_exponent: if supercritical { b } else { None } })
}

fn weight_series(t: &[f64], values: &[f64], w: f64) -> Vec<(f64, f64)> {
    t.iter()
        .zip(values)
        .map(|(&t, &v)| (t, (1.0 + t).powf(w) * v * v))
        .collect()
}

fn accumulate(name: String, t: &[f64], values: &[f64], w: f64, growth: f64) -> IntegratedFunctional {
    let mut series = Vec::with_capacity(t.len());
    let mut acc = 0.0;
    let f = |tt: f64, v: f64| (1.0 + tt).powf(w) * v * v;
    series.push((t[0], 0.0));
    for i in 1..t.len() {
        acc += 0.5 * (f(t[i - 1], values[i - 1]) + f(t[i], values[i])) * (t[i] - t[i - 1]);
        series.push((t[i], acc));
    }
    IntegratedFunctional { name, weight: w, growth, series }
}

/// Least-squares slope of log(value) against log(1+t) on a window;
/// the decay exponent is the negated slope.
pub fn fit_decay(series: &[(f64, f64)], window: (f64, f64)) -> Result<(f64, f64, usize)> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t >= window.0 && *t <= window.1)
        .cloned()
        .collect();
    if pts.len() < 8 {
        return Err(DiffwaveError::domain(format!(
            "need >= 8 samples in the fit window, found {}",
            pts.len()
        )));
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(DiffwaveError::domain(format!(
            "non-positive value {v:.3e} at t = {t}; shrink the fit window"
        )));
    }
    let xs: Vec<f64> = pts.iter().map(|(t, _)| (1.0 + t).ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, v)| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let fit = my + slope * (x - mx);
            (y - fit) * (y - fit)
        })
        .sum();
    let r2 = if ss_tot <= 1e-300 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok((-slope, r2, pts.len()))
}

/// Boundedness verdict for a claimed decay exponent: weight the series by
/// (1+t)^claimed and demand no systematic growth across the final decade.
#[derive(Debug, Clone, Serialize)]
pub struct BoundednessReport {
    pub supremum: f64,
    pub final_decade_slope: f64,
    pub pass: bool,
}

pub fn boundedness_check(series: &[(f64, f64)], claimed_exponent: f64) -> BoundednessReport {
    let weighted: Vec<(f64, f64)> = series
        .iter()
        .map(|&(t, v)| (t, (1.0 + t).powf(claimed_exponent) * v))
        .collect();
    let supremum = weighted.iter().fold(0.0f64, |m, &(_, w)| m.max(w));
    let t_max = weighted.last().map(|&(t, _)| t).unwrap_or(0.0);
    let cut = (1.0 + t_max) / 10.0 - 1.0;
    let tail: Vec<&(f64, f64)> = weighted.iter().filter(|(t, _)| *t >= cut).collect();
    let slope = if tail.len() >= 2 && tail.iter().all(|(_, w)| *w > 0.0) {
        let (t0, w0) = *tail.first().unwrap();
        let (t1, w1) = *tail.last().unwrap();
        (w1 / w0).ln() / ((1.0 + t1) / (1.0 + t0)).ln()
    } else {
        0.0
    };
    BoundednessReport { supremum, final_decade_slope: slope, pass: slope <= 0.1 }
}
