//! Neumann self-similar diffusion wave phi(xi), xi = x (1+t)^{-(lambda+1)/2}.
//!
//! Substituting the self-similar form into the forward-parabolic Darcy
//! equation gives the profile ODE
//!
//!   d^2/dxi^2 [p(phi)] - alpha (lambda+1)/2 * xi * phi'(xi) = 0,
//!   phi(0) = v0(0),  phi(inf) = v_+,
//!
//! solved by bisection shooting on phi'(0). Writing q = (p(phi))' the system
//! is phi' = q / p'(phi), q' = alpha (lambda+1)/2 * xi * q / p'(phi); q never
//! changes sign, so every shot is monotone. The starting slope comes from
//! the linearization about v_+, whose solution is
//! v_+ + (v0(0)-v_+) erfc(xi sqrt((lambda+1)/(4 kappa))).

use super::{WaveField, WaveProfile};
use crate::error::{DiffwaveError, Result};
use crate::model::{DampingSchedule, FarFieldState, PressureLaw};

#[derive(Debug, Clone)]
pub struct ShootingOpts {
    /// Truncation radius of the profile; default 12/sqrt((lambda+1)/(4 kappa)).
    pub xi_max: Option<f64>,
    /// Terminal matching tolerance |phi(xi_max) - v_+|.
    pub tol: f64,
    /// RK4 steps across [0, xi_max].
    pub steps: usize,
}

impl Default for ShootingOpts {
    fn default() -> Self {
        ShootingOpts { xi_max: None, tol: 1e-10, steps: 8192 }
    }
}

/// Tabulated self-similar profile with the ODE-exact nodal derivatives;
/// evaluation is cubic Hermite between nodes.
#[derive(Debug, Clone)]
pub struct SelfSimilarWave {
    pub far: FarFieldState,
    pub law: PressureLaw,
    pub sched: DampingSchedule,
    pub v_boundary: f64,
    pub xi_max: f64,
    pub(crate) phi: Vec<f64>,
    pub(crate) dphi: Vec<f64>,
    excess_per_scale: f64,
}

impl SelfSimilarWave {
    pub(crate) fn from_table(
        far: FarFieldState,
        law: PressureLaw,
        sched: DampingSchedule,
        v_boundary: f64,
        xi_max: f64,
        phi: Vec<f64>,
        dphi: Vec<f64>,
    ) -> Result<WaveProfile> {
        if phi.len() < 4 || phi.len() != dphi.len() {
            return Err(DiffwaveError::config("self-similar table shape mismatch"));
        }
        let h = xi_max / (phi.len() - 1) as f64;
        // int_0^ximax (phi - v_+) dxi by trapezoid; scales like (1+t)^{(lambda+1)/2}
        let mut excess = 0.5 * ((phi[0] - far.v_plus) + (phi[phi.len() - 1] - far.v_plus));
        for &p in &phi[1..phi.len() - 1] {
            excess += p - far.v_plus;
        }
        Ok(WaveProfile::NeumannSelfSimilar(SelfSimilarWave {
            far,
            law,
            sched,
            v_boundary,
            xi_max,
            phi,
            dphi,
            excess_per_scale: excess * h,
        }))
    }

    pub fn eval(&self, x: f64, t: f64, field: WaveField) -> f64 {
        let lambda = self.sched.lambda;
        let scale = (1.0 + t).powf(-(lambda + 1.0) / 2.0);
        let xi = x * scale;
        let (phi, dphi) = self.profile_at(xi);
        match field {
            WaveField::VBar => phi,
            WaveField::VBarX => dphi * scale,
            WaveField::VBarT => -0.5 * (lambda + 1.0) * xi * dphi / (1.0 + t),
            WaveField::UBar => {
                let PressureLaw::GammaLaw { gamma } = self.law;
                let dp = -gamma * phi.powf(-gamma - 1.0);
                -(1.0 + t).powf(lambda) / self.sched.alpha * dp * dphi * scale
            }
        }
    }

    /// (phi, phi') at xi by cubic Hermite with the stored nodal derivatives.
    pub fn profile_at(&self, xi: f64) -> (f64, f64) {
        if xi >= self.xi_max {
            return (self.far.v_plus, 0.0);
        }
        let n = self.phi.len();
        let h = self.xi_max / (n - 1) as f64;
        let j = ((xi / h) as usize).min(n - 2);
        let t = (xi - j as f64 * h) / h;
        let (p0, p1) = (self.phi[j], self.phi[j + 1]);
        let (m0, m1) = (self.dphi[j] * h, self.dphi[j + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let value = (2.0 * t3 - 3.0 * t2 + 1.0) * p0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * p1
            + (t3 - t2) * m1;
        let deriv = ((6.0 * t2 - 6.0 * t) * p0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * p1
            + (3.0 * t2 - 2.0 * t) * m1)
            / h;
        (value, deriv)
    }

    /// int_0^infty (v_bar - v_+) dx = (1+t)^{(lambda+1)/2} int (phi - v_+) dxi.
    pub fn half_line_excess(&self, t: f64) -> f64 {
        (1.0 + t).powf((self.sched.lambda + 1.0) / 2.0) * self.excess_per_scale
    }
}

/// Build the Neumann self-similar wave with phi(0) = v_boundary.
pub fn neumann_selfsimilar_profile(
    v_boundary: f64,
    far: FarFieldState,
    law: PressureLaw,
    sched: DampingSchedule,
    opts: &ShootingOpts,
) -> Result<WaveProfile> {
    if sched.lambda >= 1.0 {
        return Err(DiffwaveError::domain("self-similar wave requires lambda in [0,1)"));
    }
    if !(v_boundary > 0.0) {
        return Err(DiffwaveError::domain("boundary volume must be positive"));
    }
    let lp1 = sched.lambda + 1.0;
    let xi_max = opts
        .xi_max
        .unwrap_or_else(|| 12.0 / (lp1 / (4.0 * far.kappa)).sqrt());
    let n = opts.steps;

    if v_boundary == far.v_plus {
        let phi = vec![far.v_plus; n + 1];
        let dphi = vec![0.0; n + 1];
        return SelfSimilarWave::from_table(far, law, sched, v_boundary, xi_max, phi, dphi);
    }

    // Linearized slope; exact in the small-amplitude limit.
    let slope0 = (far.v_plus - v_boundary) * (lp1 / (std::f64::consts::PI * far.kappa)).sqrt();
    let terminal = |slope: f64| -> f64 { shoot(v_boundary, slope, xi_max, n, &law, &sched).0 };

    // Bracket [0, slope0 * 2^k]: slope 0 leaves phi == v_boundary, so the
    // terminal mismatch starts on the v_boundary side.
    let r_lo = v_boundary - far.v_plus;
    let mut lo = 0.0;
    let mut hi = slope0;
    let mut r_hi = terminal(hi) - far.v_plus;
    let mut expand = 0;
    while r_hi * r_lo > 0.0 {
        lo = hi;
        hi *= 2.0;
        r_hi = terminal(hi) - far.v_plus;
        expand += 1;
        if expand > 60 {
            return Err(DiffwaveError::numerical(
                "shooting bracket not found; amplitude/xi_max mismatch",
            ));
        }
    }
    let (mut lo, mut hi, mut r_lo) = (lo, hi, if expand == 0 { r_lo } else { terminal(lo) - far.v_plus });
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let r_mid = terminal(mid) - far.v_plus;
        if r_mid.abs() <= 0.1 * opts.tol || (hi - lo).abs() <= f64::EPSILON * mid.abs() {
            break;
        }
        if r_mid * r_lo > 0.0 {
            lo = mid;
            r_lo = r_mid;
        } else {
            hi = mid;
        }
    }
    let slope = 0.5 * (lo + hi);
    let (end, phi, dphi) = shoot_table(v_boundary, slope, xi_max, n, &law, &sched);
    if (end - far.v_plus).abs() > opts.tol {
        return Err(DiffwaveError::numerical(format!(
            "shooting did not match the far field: |phi(xi_max) - v_+| = {:.3e}",
            (end - far.v_plus).abs()
        )));
    }
    // q keeps one sign, so the profile must be monotone between its endpoints.
    let increasing = far.v_plus > v_boundary;
    if phi.windows(2).any(|w| if increasing { w[1] < w[0] - 1e-14 } else { w[1] > w[0] + 1e-14 }) {
        return Err(DiffwaveError::numerical("non-monotone self-similar iterate"));
    }
    SelfSimilarWave::from_table(far, law, sched, v_boundary, xi_max, phi, dphi)
}

/// RK4 integration of (phi, q), q = (p(phi))'; returns the terminal phi.
fn shoot(
    v0: f64,
    slope: f64,
    xi_max: f64,
    n: usize,
    law: &PressureLaw,
    sched: &DampingSchedule,
) -> (f64, bool) {
    let mut phi = v0;
    let mut q = match law.pressure_deriv(v0, 1) {
        Ok(dp) => dp * slope,
        Err(_) => return (f64::NEG_INFINITY, false),
    };
    let h = xi_max / n as f64;
    let c = 0.5 * sched.alpha * (sched.lambda + 1.0);
    for i in 0..n {
        let xi = i as f64 * h;
        if !step_rk4(&mut phi, &mut q, xi, h, c, law) {
            return (phi, false);
        }
    }
    (phi, true)
}

fn shoot_table(
    v0: f64,
    slope: f64,
    xi_max: f64,
    n: usize,
    law: &PressureLaw,
    sched: &DampingSchedule,
) -> (f64, Vec<f64>, Vec<f64>) {
    let mut phi = v0;
    let mut q = law.pressure_deriv(v0, 1).map(|dp| dp * slope).unwrap_or(0.0);
    let h = xi_max / n as f64;
    let c = 0.5 * sched.alpha * (sched.lambda + 1.0);
    let mut phis = Vec::with_capacity(n + 1);
    let mut dphis = Vec::with_capacity(n + 1);
    phis.push(phi);
    dphis.push(slope);
    for i in 0..n {
        let xi = i as f64 * h;
        if !step_rk4(&mut phi, &mut q, xi, h, c, law) {
            break;
        }
        phis.push(phi);
        dphis.push(q / law.pressure_deriv(phi, 1).unwrap_or(-1.0));
    }
    while phis.len() < n + 1 {
        phis.push(phi);
        dphis.push(0.0);
    }
    (phi, phis, dphis)
}

/// One RK4 step; false if phi left the positive domain.
fn step_rk4(phi: &mut f64, q: &mut f64, xi: f64, h: f64, c: f64, law: &PressureLaw) -> bool {
    let f = |p: f64, q: f64, xi: f64| -> Option<(f64, f64)> {
        if p <= 1e-12 {
            return None;
        }
        let dp = law.pressure_deriv(p, 1).ok()?;
        Some((q / dp, c * xi * q / dp))
    };
    let Some((k1p, k1q)) = f(*phi, *q, xi) else { return false };
    let Some((k2p, k2q)) = f(*phi + 0.5 * h * k1p, *q + 0.5 * h * k1q, xi + 0.5 * h) else {
        return false;
    };
    let Some((k3p, k3q)) = f(*phi + 0.5 * h * k2p, *q + 0.5 * h * k2q, xi + 0.5 * h) else {
        return false;
    };
    let Some((k4p, k4q)) = f(*phi + h * k3p, *q + h * k3q, xi + h) else { return false };
    *phi += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    *q += h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
    *phi > 1e-12
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(lambda: f64) -> (PressureLaw, DampingSchedule, FarFieldState) {
        let law = PressureLaw::gamma_law(1.4).unwrap();
        let sched = DampingSchedule::new(1.0, lambda).unwrap();
        let far = FarFieldState::new(&law, &sched, 1.0, 0.0).unwrap();
        (law, sched, far)
    }

    #[test]
    fn constant_boundary_gives_constant_profile() {
        let (law, sched, far) = setup(0.3);
        let wave =
            neumann_selfsimilar_profile(1.0, far, law, sched, &ShootingOpts::default()).unwrap();
        assert_eq!(wave.v_bar(2.0, 5.0).unwrap(), 1.0);
        assert_eq!(wave.u_bar(2.0, 5.0).unwrap(), 0.0);
    }

    #[test]
    fn small_amplitude_matches_erfc() {
        // kappa psi'' + (lambda+1)/2 xi psi' = 0 linearized about v_+ has the
        // closed form psi = amp * erfc(xi sqrt((lambda+1)/(4 kappa))).
        for lambda in [0.0, 0.5] {
            let (law, sched, far) = setup(lambda);
            let amp = 1e-3;
            let wave = neumann_selfsimilar_profile(
                1.0 + amp,
                far,
                law,
                sched,
                &ShootingOpts::default(),
            )
            .unwrap();
            let WaveProfile::NeumannSelfSimilar(s) = &wave else { unreachable!() };
            let cscale = ((lambda + 1.0) / (4.0 * far.kappa)).sqrt();
            let mut worst = 0.0f64;
            for k in 0..400 {
                let xi = s.xi_max * k as f64 / 400.0;
                let exact = 1.0 + amp * libm::erfc(xi * cscale);
                let (phi, _) = s.profile_at(xi);
                worst = worst.max((phi - exact).abs());
            }
            assert!(worst <= 1e-2 * amp, "lambda={lambda}: erfc mismatch {worst:.3e}");
        }
    }

    #[test]
    fn profile_is_monotone_and_matches_far_field() {
        let (law, sched, far) = setup(0.4);
        let wave = neumann_selfsimilar_profile(
            1.1,
            far,
            law,
            sched,
            &ShootingOpts::default(),
        )
        .unwrap();
        let WaveProfile::NeumannSelfSimilar(s) = &wave else { unreachable!() };
        assert!((s.phi[0] - 1.1).abs() < 1e-15);
        assert!(s.phi.windows(2).all(|w| w[1] <= w[0] + 1e-14));
        assert!((s.phi.last().unwrap() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn ode_residual_at_doubled_resolution() {
        // 4th-order stencils applied directly to the stored table.
        let (law, sched, far) = setup(0.5);
        let tol = 1e-10;
        let wave = neumann_selfsimilar_profile(
            1.05,
            far,
            law,
            sched,
            &ShootingOpts { steps: 16384, tol, xi_max: None },
        )
        .unwrap();
        let WaveProfile::NeumannSelfSimilar(s) = &wave else { unreachable!() };
        let n = s.phi.len();
        let h = s.xi_max / (n - 1) as f64;
        let p: Vec<f64> = s.phi.iter().map(|&v| law.pressure(v).unwrap()).collect();
        let c = 0.5 * sched.alpha * (sched.lambda + 1.0);
        let mut worst = 0.0f64;
        for j in 2..n - 2 {
            let d2p = (-p[j - 2] + 16.0 * p[j - 1] - 30.0 * p[j] + 16.0 * p[j + 1] - p[j + 2])
                / (12.0 * h * h);
            let dphi = (s.phi[j - 2] - 8.0 * s.phi[j - 1] + 8.0 * s.phi[j + 1] - s.phi[j + 2])
                / (12.0 * h);
            let xi = j as f64 * h;
            worst = worst.max((d2p - c * xi * dphi).abs());
        }
        assert!(worst <= 10.0 * tol, "ODE residual {worst:.3e} > 10 tol");
    }

    #[test]
    fn boundary_derivatives_vanish() {
        // u_bar_x(0,t) = v_bar_t(0,t) = 0 for the self-similar form.
        let (law, sched, far) = setup(0.3);
        let wave =
            neumann_selfsimilar_profile(1.08, far, law, sched, &ShootingOpts::default()).unwrap();
        assert_eq!(wave.eval(0.0, 3.0, WaveField::VBarT).unwrap(), 0.0);
        let h = 1e-5;
        let ux = (wave.u_bar(h, 3.0).unwrap() - wave.u_bar(0.0, 3.0).unwrap()) / h;
        assert!(ux.abs() < 1e-6, "u_bar_x(0) = {ux:.3e}");
    }

    #[test]
    fn darcy_coupled_system_residual_shrinks() {
        // (x,t) |-> phi(x (1+t)^{-(lambda+1)/2}) satisfies v_t = u_x with the
        // Darcy u; check by finite differences at a few points, refined.
        let (law, sched, far) = setup(0.2);
        let wave =
            neumann_selfsimilar_profile(1.05, far, law, sched, &ShootingOpts::default()).unwrap();
        let residual = |h: f64| -> f64 {
            let mut worst = 0.0f64;
            for &(x, t) in &[(1.0, 2.0), (5.0, 10.0), (0.5, 0.0)] {
                let vt = (wave.v_bar(x, t + h).unwrap() - wave.v_bar(x, (t - h).max(0.0)).unwrap())
                    / (h + h.min(t));
                let ux = (wave.u_bar(x + h, t).unwrap() - wave.u_bar(x - h, t).unwrap())
                    / (2.0 * h);
                worst = worst.max((vt - ux).abs());
            }
            worst
        };
        let coarse = residual(1e-2);
        let fine = residual(1e-3);
        assert!(fine < coarse, "residual did not shrink: {coarse:.3e} -> {fine:.3e}");
        assert!(fine < 1e-4);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (law, sched, far) = setup(0.0);
        assert!(neumann_selfsimilar_profile(-1.0, far, law, sched, &ShootingOpts::default())
            .is_err());
        let sched1 = DampingSchedule::new(1.0, 1.0).unwrap();
        let far1 = FarFieldState { v_plus: 1.0, u_plus: 0.0, kappa: 1.4 };
        assert!(neumann_selfsimilar_profile(1.1, far1, law, sched1, &ShootingOpts::default())
            .is_err());
    }
}
