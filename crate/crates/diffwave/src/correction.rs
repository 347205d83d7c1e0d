//! Correction pair (v_hat, u_hat) carrying the far-field momentum u_+ beta(t)
//! that the diffusion wave cannot absorb.
//!
//! Dirichlet:  v_hat = u_+ m0(x) B(t),
//!             u_hat = u_+ beta(t) int_0^x m0
//! Neumann:    v_hat = -(u0(0)-u_+) m0(x) B(t),
//!             u_hat = [u_+ + (u0(0)-u_+) int_x^infty m0] beta(t)
//!
//! with m0 a C-infinity bump of unit mass supported in [1,3]. Both pairs
//! satisfy dt v_hat - dx u_hat = 0 and dt u_hat + a(t) u_hat = 0 exactly,
//! and because the support of m0 avoids x = 0 the boundary values
//! u_hat(0,t) = 0 (Dirichlet) and v_hat(0,t) = dx u_hat(0,t) = 0 (Neumann)
//! are exact as well.

use crate::error::{DiffwaveError, Result};
use crate::model::DampingSchedule;

/// Boundary condition imposed on u at x = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// u(0,t) = 0
    Dirichlet,
    /// u_x(0,t) = 0
    Neumann,
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Boundary::Dirichlet => write!(f, "dirichlet"),
            Boundary::Neumann => write!(f, "neumann"),
        }
    }
}

/// Normalized C-infinity bump exp(-1/(1-y^2)) rescaled to a support [lo, hi]
/// with unit mass. The antiderivative has no elementary form and is tabulated
/// once at 2^14 + 1 points (cumulative Simpson), then interpolated cubically.
#[derive(Debug, Clone)]
pub struct Mollifier {
    lo: f64,
    hi: f64,
    norm: f64,
    cum: Vec<f64>,
}

const CUM_TABLE_LEN: usize = (1 << 14) + 1;

impl Mollifier {
    /// The standard mollifier m0: support [1, 3], unit mass.
    pub fn standard() -> Self {
        Mollifier::on_support(1.0, 3.0)
    }

    /// Same bump family rescaled to [lo, hi], still unit mass.
    pub fn on_support(lo: f64, hi: f64) -> Self {
        assert!(hi > lo, "empty mollifier support");
        let raw = |x: f64| raw_bump((2.0 * x - lo - hi) / (hi - lo));
        let n = CUM_TABLE_LEN - 1;
        let h = (hi - lo) / n as f64;
        let mut cum = Vec::with_capacity(CUM_TABLE_LEN);
        cum.push(0.0);
        let mut acc = 0.0;
        for j in 0..n {
            let a = lo + j as f64 * h;
            let b = a + h;
            acc += h / 6.0 * (raw(a) + 4.0 * raw(0.5 * (a + b)) + raw(b));
            cum.push(acc);
        }
        let total = acc;
        for c in &mut cum {
            *c /= total;
        }
        Mollifier { lo, hi, norm: total, cum }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// m0(x), zero outside the support.
    pub fn value(&self, x: f64) -> f64 {
        let y = (2.0 * x - self.lo - self.hi) / (self.hi - self.lo);
        raw_bump(y) / self.norm
    }

    /// int_0^x m0(y) dy, in [0, 1].
    pub fn antiderivative(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        let n = (self.cum.len() - 1) as f64;
        let u = (x - self.lo) / (self.hi - self.lo) * n;
        let j = (u as usize).min(self.cum.len() - 2);
        // cubic Lagrange through the 4 nearest table nodes
        let k = j.saturating_sub(1).min(self.cum.len() - 4);
        let t = u - k as f64;
        let c = &self.cum[k..k + 4];
        lagrange4(c, t)
    }

    /// int_x^infty m0(y) dy = 1 - antiderivative(x).
    pub fn tail_integral(&self, x: f64) -> f64 {
        1.0 - self.antiderivative(x)
    }

    /// Peak value, attained at the support midpoint.
    pub fn peak(&self) -> f64 {
        self.value(0.5 * (self.lo + self.hi))
    }
}

/// exp(-1/(1-y^2)) for |y| < 1, else 0.
fn raw_bump(y: f64) -> f64 {
    if y.abs() < 1.0 {
        (-1.0 / (1.0 - y * y)).exp()
    } else {
        0.0
    }
}

fn lagrange4(f: &[f64], t: f64) -> f64 {
    let l0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
    let l1 = t * (t - 2.0) * (t - 3.0) / 2.0;
    let l2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
    let l3 = t * (t - 1.0) * (t - 2.0) / 6.0;
    f[0] * l0 + f[1] * l1 + f[2] * l2 + f[3] * l3
}

/// Which correction field to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrectionField {
    VHat,
    UHat,
    VHatT,
    UHatX,
    UHatT,
}

/// The correction pair for one boundary regime. `amplitude` is u_+ in the
/// Dirichlet case and u0(0) - u_+ in the Neumann case.
#[derive(Debug, Clone)]
pub struct CorrectionPair {
    pub boundary: Boundary,
    pub u_plus: f64,
    pub u0_at_0: Option<f64>,
    pub sched: DampingSchedule,
    pub m0: Mollifier,
}

impl CorrectionPair {
    pub fn dirichlet(u_plus: f64, sched: DampingSchedule) -> Self {
        CorrectionPair {
            boundary: Boundary::Dirichlet,
            u_plus,
            u0_at_0: None,
            sched,
            m0: Mollifier::standard(),
        }
    }

    pub fn neumann(u_plus: f64, u0_at_0: f64, sched: DampingSchedule) -> Self {
        CorrectionPair {
            boundary: Boundary::Neumann,
            u_plus,
            u0_at_0: Some(u0_at_0),
            sched,
            m0: Mollifier::standard(),
        }
    }

    /// Mass amplitude multiplying m0(x) B(t) in v_hat.
    pub fn amplitude(&self) -> f64 {
        match self.boundary {
            Boundary::Dirichlet => self.u_plus,
            Boundary::Neumann => -(self.u0_at_0.unwrap_or(self.u_plus) - self.u_plus),
        }
    }

    /// Freeze the time kernels at t; x-sweeps then avoid recomputing B(t).
    pub fn at_time(&self, t: f64) -> Result<CorrectionAt<'_>> {
        Ok(CorrectionAt {
            pair: self,
            beta: self.sched.beta(t)?,
            b: self.sched.b_tail(t)?,
            a: self.sched.damping_coefficient(t)?,
        })
    }

    pub fn eval(&self, x: f64, t: f64, field: CorrectionField) -> Result<f64> {
        if x < 0.0 {
            return Err(DiffwaveError::domain(format!("x must be >= 0, got {x}")));
        }
        Ok(self.at_time(t)?.eval(x, field))
    }
}

/// Correction pair with the time kernels evaluated once at a fixed t.
pub struct CorrectionAt<'a> {
    pair: &'a CorrectionPair,
    beta: f64,
    b: f64,
    a: f64,
}

impl CorrectionAt<'_> {
    pub fn eval(&self, x: f64, field: CorrectionField) -> f64 {
        let amp = self.pair.amplitude();
        // dt v_hat and dx u_hat share one expression so the conservation
        // identity dt v_hat - dx u_hat = 0 is exact in floating point.
        let flux = amp * self.pair.m0.value(x) * self.beta;
        match field {
            CorrectionField::VHat => amp * self.pair.m0.value(x) * self.b,
            CorrectionField::VHatT => flux,
            CorrectionField::UHatX => flux,
            CorrectionField::UHat => self.u_hat(x),
            CorrectionField::UHatT => -self.a * self.u_hat(x),
        }
    }

    fn u_hat(&self, x: f64) -> f64 {
        match self.pair.boundary {
            Boundary::Dirichlet => self.pair.u_plus * self.beta * self.pair.m0.antiderivative(x),
            Boundary::Neumann => {
                let theta = self.pair.u0_at_0.unwrap_or(self.pair.u_plus) - self.pair.u_plus;
                (self.pair.u_plus + theta * self.pair.m0.tail_integral(x)) * self.beta
            }
        }
    }
}
