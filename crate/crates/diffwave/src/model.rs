//! Physical closures shared by every other module: the pressure law p(v),
//! the damping schedule a(t) = alpha/(1+t)^lambda, and the scalar time
//! kernels
//!
//!   beta(t) = exp(-alpha/(1-lambda) * [(1+t)^{1-lambda} - 1])   (lambda < 1)
//!   beta(t) = (1+t)^{-alpha}                                    (lambda = 1)
//!   B(t)    = -int_t^infty beta(tau) dtau
//!
//! beta is the decay factor of a freely damped velocity (beta' = -a beta,
//! beta(0) = 1) and B its remaining time integral, negative and increasing
//! to zero.

use crate::error::{DiffwaveError, Result};
use crate::quad::adaptive_simpson;

/// Smooth decreasing pressure p(v) > 0 with derivatives through order 3.
#[derive(Debug, Clone, Copy, PartialEq)]
#[non_exhaustive]
pub enum PressureLaw {
    /// p(v) = v^(-gamma), gamma > 0.
    GammaLaw { gamma: f64 },
}

impl PressureLaw {
    pub fn gamma_law(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(DiffwaveError::domain(format!(
                "gamma-law exponent must be positive and finite, got {gamma}"
            )));
        }
        Ok(PressureLaw::GammaLaw { gamma })
    }

    pub fn pressure(&self, v: f64) -> Result<f64> {
        self.check_volume(v)?;
        match *self {
            PressureLaw::GammaLaw { gamma } => Ok(v.powf(-gamma)),
        }
    }

    /// d^order/dv^order p(v), order in 1..=3, exact for the gamma law.
    pub fn pressure_deriv(&self, v: f64, order: u32) -> Result<f64> {
        self.check_volume(v)?;
        let PressureLaw::GammaLaw { gamma } = *self;
        match order {
            1 => Ok(-gamma * v.powf(-gamma - 1.0)),
            2 => Ok(gamma * (gamma + 1.0) * v.powf(-gamma - 2.0)),
            3 => Ok(-gamma * (gamma + 1.0) * (gamma + 2.0) * v.powf(-gamma - 3.0)),
            _ => Err(DiffwaveError::domain(format!(
                "pressure derivative order {order} unsupported (max 3)"
            ))),
        }
    }

    /// Characteristic speed sqrt(-p'(v)) of the first-order system.
    pub fn sound_speed(&self, v: f64) -> Result<f64> {
        Ok((-self.pressure_deriv(v, 1)?).sqrt())
    }

    /// (p(v), p'(v)) in one evaluation; for the gamma law p' = -gamma p / v,
    /// so the pair costs a single powf. The time-stepping kernels live on
    /// this call.
    pub fn pressure_and_deriv(&self, v: f64) -> Result<(f64, f64)> {
        let p = self.pressure(v)?;
        let PressureLaw::GammaLaw { gamma } = *self;
        Ok((p, -gamma * p / v))
    }

    /// (p(v), sound_speed(v)) in one evaluation.
    pub fn pressure_and_speed(&self, v: f64) -> Result<(f64, f64)> {
        let (p, dp) = self.pressure_and_deriv(v)?;
        Ok((p, (-dp).sqrt()))
    }

    fn check_volume(&self, v: f64) -> Result<()> {
        if !(v > 0.0) || !v.is_finite() {
            return Err(DiffwaveError::domain(format!(
                "specific volume must be positive and finite, got {v}"
            )));
        }
        Ok(())
    }
}

/// The time-dependent damping coefficient a(t) = alpha/(1+t)^lambda,
/// alpha > 0, lambda in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampingSchedule {
    pub alpha: f64,
    pub lambda: f64,
}

impl DampingSchedule {
    pub fn new(alpha: f64, lambda: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(DiffwaveError::domain(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(DiffwaveError::domain(format!(
                "lambda must lie in [0, 1], got {lambda}"
            )));
        }
        Ok(DampingSchedule { alpha, lambda })
    }

    /// a(t) = alpha * (1+t)^(-lambda).
    pub fn damping_coefficient(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.alpha * (1.0 + t).powf(-self.lambda))
    }

    /// Exact integral of a over [t0, t1]. Computed cancellation-free via
    /// expm1/ln_1p so that tiny steps at large t keep full relative accuracy;
    /// the operator-splitting solver relies on this.
    pub fn damping_integral(&self, t0: f64, t1: f64) -> Result<f64> {
        if !(0.0 <= t0 && t0 <= t1) {
            return Err(DiffwaveError::domain(format!(
                "need 0 <= t0 <= t1, got t0={t0}, t1={t1}"
            )));
        }
        let r = (t1 - t0) / (1.0 + t0);
        if self.lambda == 1.0 {
            // integral = alpha * ln((1+t1)/(1+t0))
            return Ok(self.alpha * r.ln_1p());
        }
        let q = 1.0 - self.lambda;
        // (1+t1)^q - (1+t0)^q = (1+t0)^q * expm1(q * ln(1 + r))
        Ok(self.alpha / q * (1.0 + t0).powf(q) * (q * r.ln_1p()).exp_m1())
    }

    /// beta(t): the decay factor of a freely damped velocity,
    /// beta' = -a(t) beta, beta(0) = 1.
    pub fn beta(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        if self.lambda == 1.0 {
            Ok((1.0 + t).powf(-self.alpha))
        } else {
            Ok((-self.damping_integral(0.0, t)?).exp())
        }
    }

    /// Analytic beta'(t) = -a(t) beta(t).
    pub fn beta_deriv(&self, t: f64) -> Result<f64> {
        Ok(-self.damping_coefficient(t)? * self.beta(t)?)
    }

    /// B(t) = -int_t^infty beta(tau) dtau, negative and increasing to 0.
    ///
    /// For lambda < 1 the integral is truncated at T* where the two-sided
    /// sandwich beta(T)(1+T)^lambda/alpha <= |tail| <= 2 beta(T)(1+T)^lambda/alpha
    /// pins the remainder below 1e-13, and the bracket midpoint is added as
    /// the tail estimate. For lambda = 1 the closed form requires alpha > 1.
    pub fn b_tail(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        if self.lambda == 1.0 {
            if self.alpha <= 1.0 {
                return Err(DiffwaveError::domain(format!(
                    "B(t) diverges for lambda = 1 unless alpha > 1 (alpha = {})",
                    self.alpha
                )));
            }
            return Ok(-(1.0 + t).powf(1.0 - self.alpha) / (self.alpha - 1.0));
        }
        const EPS_TAIL: f64 = 1e-13;
        let bound = |s: f64| -> Result<f64> {
            Ok(self.beta(s)? * (1.0 + s).powf(self.lambda) / self.alpha)
        };
        // Truncation point: doubling scan until the sandwich upper bound is
        // below the tail budget.
        let mut t_star = (t + 1.0).max(1.0);
        while 2.0 * bound(t_star)? >= EPS_TAIL {
            t_star *= 2.0;
            if t_star > 1e30 {
                return Err(DiffwaveError::numerical(
                    "B(t) truncation scan failed to terminate",
                ));
            }
        }
        // Integrate [t, T*] over geometric segments; beta spans many orders
        // of magnitude for lambda near 1.
        let f = |s: f64| self.beta(s).unwrap_or(0.0);
        let mut integral = 0.0;
        let mut lo = t;
        while lo < t_star {
            let hi = (2.0 * (lo + 1.0)).min(t_star);
            integral += adaptive_simpson(&f, lo, hi, 3e-14);
            lo = hi;
        }
        let tail_mid = 1.5 * bound(t_star)?;
        Ok(-(integral + tail_mid))
    }

    /// Whether both sandwich bounds
    /// beta(t)(1+t)^lambda/alpha <= |B(t)| <= 2 beta(t)(1+t)^lambda/alpha
    /// hold at time t (the lower one holds for all t >= 0, the upper one
    /// from some onset time T* on). A small slack absorbs quadrature error.
    pub fn sandwich_holds(&self, t: f64) -> Result<bool> {
        let b_abs = self.b_tail(t)?.abs();
        let unit = self.beta(t)? * (1.0 + t).powf(self.lambda) / self.alpha;
        let slack = 1e-11 + 1e-11 * b_abs;
        Ok(unit <= b_abs + slack && b_abs <= 2.0 * unit + slack)
    }

    /// Empirical onset time for the sandwich upper bound: the first time on
    /// a log-spaced scan of [0, t_max] after which `sandwich_holds` is true
    /// at every later scan point.
    pub fn sandwich_onset(&self, t_max: f64, points: usize) -> Result<f64> {
        let times = log_spaced_times(t_max, points);
        let mut onset = 0.0;
        let mut all_hold = true;
        for &t in &times {
            if self.sandwich_holds(t)? {
                if !all_hold {
                    onset = t;
                    all_hold = true;
                }
            } else {
                all_hold = false;
                onset = f64::INFINITY;
            }
        }
        Ok(onset)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(DiffwaveError::domain(format!(
                "time must be nonnegative and finite, got {t}"
            )));
        }
        Ok(())
    }
}

/// Far-field state (v_+, u_+) together with the diffusivity
/// kappa = -p'(v_+)/alpha > 0 of the linearized wave equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarFieldState {
    pub v_plus: f64,
    pub u_plus: f64,
    pub kappa: f64,
}

impl FarFieldState {
    pub fn new(law: &PressureLaw, sched: &DampingSchedule, v_plus: f64, u_plus: f64) -> Result<Self> {
        let kappa = -law.pressure_deriv(v_plus, 1)? / sched.alpha;
        debug_assert!(kappa > 0.0);
        Ok(FarFieldState { v_plus, u_plus, kappa })
    }
}

/// `n` log-spaced times covering [0, t_max]: t_k = exp(k/(n-1) * ln(1+t_max)) - 1.
pub fn log_spaced_times(t_max: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && t_max > 0.0);
    let top = (1.0 + t_max).ln();
    (0..n)
        .map(|k| {
            if k == n - 1 {
                t_max
            } else {
                (top * k as f64 / (n - 1) as f64).exp() - 1.0
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::composite_simpson;
    use proptest::prelude::*;

    fn gamma(g: f64) -> PressureLaw {
        PressureLaw::gamma_law(g).unwrap()
    }

    fn sched(alpha: f64, lambda: f64) -> DampingSchedule {
        DampingSchedule::new(alpha, lambda).unwrap()
    }

    #[test]
    fn pressure_values() {
        assert_eq!(gamma(1.4).pressure(1.0).unwrap(), 1.0);
        assert_eq!(gamma(1.0).pressure(2.0).unwrap(), 0.5);
        assert!((gamma(1.5).pressure(2.0).unwrap() - 0.35355339059327373).abs() < 1e-15);
        assert!(gamma(1.4).pressure(0.0).is_err());
        assert!(gamma(1.4).pressure(-1.0).is_err());
    }

    #[test]
    fn pressure_derivative_values() {
        assert!((gamma(1.4).pressure_deriv(1.0, 1).unwrap() + 1.4).abs() < 1e-15);
        assert!((gamma(2.0).pressure_deriv(1.0, 2).unwrap() - 6.0).abs() < 1e-15);
        assert!(gamma(1.4).pressure_deriv(1.0, 4).is_err());
    }

    #[test]
    fn pressure_derivative_matches_finite_difference() {
        // centered-difference oracle, h = 1e-5
        let law = gamma(1.4);
        let h = 1e-5;
        let v = 1.3;
        let fd = (law.pressure(v + h).unwrap() - law.pressure(v - h).unwrap()) / (2.0 * h);
        let exact = law.pressure_deriv(v, 1).unwrap();
        assert!((fd - exact).abs() / exact.abs() < 1e-7);
    }

    #[test]
    fn sound_speed_values() {
        assert!((gamma(1.0).sound_speed(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((gamma(1.4).sound_speed(1.0).unwrap() - 1.4f64.sqrt()).abs() < 1e-15);
        // independent route: sqrt of the centered difference of -p
        let law = gamma(1.4);
        let h = 1e-6;
        let fd = -(law.pressure(2.0 + h).unwrap() - law.pressure(2.0 - h).unwrap()) / (2.0 * h);
        let c = law.sound_speed(2.0).unwrap();
        assert!((c - fd.sqrt()).abs() < 1e-9);
        assert!((c - 0.5150246587682183).abs() < 1e-12);
    }

    #[test]
    fn damping_coefficient_values() {
        assert_eq!(sched(1.0, 0.5).damping_coefficient(0.0).unwrap(), 1.0);
        assert!((sched(2.0, 0.5).damping_coefficient(3.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(sched(3.0, 0.0).damping_coefficient(100.0).unwrap(), 3.0);
        assert!(sched(1.0, 0.5).damping_coefficient(-1.0).is_err());
    }

    #[test]
    fn beta_values() {
        assert!((sched(1.0, 0.0).beta(1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert!((sched(2.0, 1.0).beta(3.0).unwrap() - 1.0 / 16.0).abs() < 1e-15);
        assert!((sched(1.0, 0.5).beta(3.0).unwrap() - (-2.0f64).exp()).abs() < 1e-15);
        assert_eq!(sched(0.7, 0.3).beta(0.0).unwrap(), 1.0);
    }

    #[test]
    fn damping_integral_values() {
        assert!((sched(1.0, 0.0).damping_integral(0.0, 2.0).unwrap() - 2.0).abs() < 1e-14);
        let log_branch = sched(2.0, 1.0).damping_integral(0.0, 3.0).unwrap();
        assert!((log_branch - 2.0 * 4.0f64.ln()).abs() < 1e-14);
        // quadrature oracle
        let s = sched(1.0, 0.5);
        let q = adaptive_simpson(&|t| s.damping_coefficient(t).unwrap(), 1.0, 5.0, 1e-13);
        assert!((s.damping_integral(1.0, 5.0).unwrap() - q).abs() < 1e-12);
    }

    #[test]
    fn b_tail_closed_forms() {
        // lambda = 0: B(t) = -exp(-alpha t)/alpha
        assert!((sched(1.0, 0.0).b_tail(0.0).unwrap() + 1.0).abs() < 1e-11);
        let b = sched(2.0, 0.0).b_tail(1.0).unwrap();
        assert!((b + (-2.0f64).exp() / 2.0).abs() < 1e-12);
        // lambda = 1, alpha = 2: B(t) = -1/(1+t)
        assert!((sched(2.0, 1.0).b_tail(3.0).unwrap() + 0.25).abs() < 1e-14);
        assert!(sched(1.0, 1.0).b_tail(0.0).is_err());
        assert!(sched(0.5, 1.0).b_tail(0.0).is_err());
    }

    #[test]
    fn b_tail_matches_brute_force_quadrature() {
        // Refinement-converged composite Simpson on a truncated interval,
        // step halving until successive values agree to 1e-12.
        let s = sched(1.0, 0.5);
        let f = |t: f64| s.beta(t).unwrap();
        let t_cut = 600.0; // beta(600)*... < 1e-19, tail negligible
        let mut n = 1 << 10;
        let mut prev = composite_simpson(&f, 0.0, t_cut, n);
        let oracle = loop {
            n *= 2;
            let next = composite_simpson(&f, 0.0, t_cut, n);
            if (next - prev).abs() < 1e-12 || n > (1 << 22) {
                break next;
            }
            prev = next;
        };
        let b0 = s.b_tail(0.0).unwrap();
        assert!((b0 + oracle).abs() < 1e-10, "B(0) = {b0}, oracle = {}", -oracle);
        // cross-check: substitution w = sqrt(1+t) gives B(0) = -3/2 exactly
        assert!((b0 + 1.5).abs() < 1e-10);
    }

    #[test]
    fn b_is_negative_increasing_to_zero() {
        for &(a, l) in &[(1.0, 0.0), (2.0, 0.3), (1.0, 0.6), (1.0, 0.9)] {
            let s = sched(a, l);
            let times = log_spaced_times(500.0, 24);
            let mut prev = f64::NEG_INFINITY;
            for &t in &times {
                let b = s.b_tail(t).unwrap();
                assert!(b < 0.0, "B({t}) = {b} not negative for alpha={a} lambda={l}");
                assert!(b > prev, "B not increasing at t={t} for alpha={a} lambda={l}");
                prev = b;
            }
            let b0 = s.b_tail(0.0).unwrap().abs();
            assert!(prev.abs() < 0.05 * b0, "B(500)/B(0) = {} did not tend to 0", prev.abs() / b0);
        }
    }

    #[test]
    fn sandwich_bounds() {
        for &(a, l) in &[(1.0, 0.0), (1.0, 0.3), (2.0, 0.6), (1.0, 0.9)] {
            let s = sched(a, l);
            // lower bound for all t
            for &t in &log_spaced_times(200.0, 16) {
                let unit = s.beta(t).unwrap() * (1.0 + t).powf(l) / a;
                let b_abs = s.b_tail(t).unwrap().abs();
                assert!(unit <= b_abs + 1e-11, "lower sandwich failed at t={t} ({a},{l})");
            }
            // upper bound from the empirical onset on
            let onset = s.sandwich_onset(500.0, 40).unwrap();
            assert!(onset.is_finite(), "no sandwich onset found for ({a},{l})");
            for &t in &log_spaced_times(500.0, 40) {
                if t >= onset {
                    assert!(s.sandwich_holds(t).unwrap(), "sandwich failed at t={t} >= T*={onset}");
                }
            }
        }
    }

    #[test]
    fn kappa_positive() {
        let law = gamma(1.4);
        let s = sched(2.0, 0.3);
        let ff = FarFieldState::new(&law, &s, 1.0, 0.0).unwrap();
        assert!((ff.kappa - 1.4 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn log_spaced_times_cover_range() {
        let ts = log_spaced_times(100.0, 11);
        assert_eq!(ts[0], 0.0);
        assert_eq!(*ts.last().unwrap(), 100.0);
        assert!(ts.windows(2).all(|w| w[0] < w[1]));
    }

    proptest! {
        // beta' + a beta = 0: exact when beta' is the analytic derivative,
        // O(h^2) by central differences.
        #[test]
        fn beta_ode_identity(alpha in 0.5f64..3.0, lambda in 0.0f64..1.0, t in 0.0f64..50.0) {
            let s = DampingSchedule::new(alpha, lambda).unwrap();
            let analytic = s.beta_deriv(t).unwrap()
                + s.damping_coefficient(t).unwrap() * s.beta(t).unwrap();
            prop_assert!(analytic.abs() < 1e-14);

            let h = 1e-5 * (1.0 + t);
            let t0 = (t - h).max(0.0);
            let fd = (s.beta(t + h).unwrap() - s.beta(t0).unwrap()) / (t + h - t0);
            let mid = 0.5 * (t0 + t + h);
            let resid = fd + s.damping_coefficient(mid).unwrap() * s.beta(mid).unwrap();
            prop_assert!(resid.abs() < 1e-6 * (1.0 + s.beta(mid).unwrap()));
        }

        // gamma-law derivative identities against finite differences on
        // random volumes in [0.5, 2].
        #[test]
        fn gamma_law_derivatives_match_fd(g in 1.0f64..2.5, v in 0.5f64..2.0) {
            let law = PressureLaw::gamma_law(g).unwrap();
            let h = 1e-5;
            for order in 1..=3u32 {
                let f = |x: f64| match order {
                    1 => law.pressure(x).unwrap(),
                    2 => law.pressure_deriv(x, 1).unwrap(),
                    _ => law.pressure_deriv(x, 2).unwrap(),
                };
                let fd = (f(v + h) - f(v - h)) / (2.0 * h);
                let exact = law.pressure_deriv(v, order).unwrap();
                prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0));
            }
        }
    }
}
