//! Scalar quadrature helpers: adaptive Simpson for smooth integrands and a
//! fixed composite Simpson rule for table construction.

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance
/// `tol`. Recursion depth is capped; smooth integrands converge long before
/// the cap is reached.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson_rule(a, b, fa, fm, fb);
    adaptive_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

fn simpson_rule(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson_rule(a, m, fa, flm, fm);
    let right = simpson_rule(m, b, fm, frm, fb);
    let delta = left + right - whole;
    // Standard Richardson acceptance: Simpson error of the split is delta/15.
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Composite Simpson rule with `n` (even) subintervals.
pub fn composite_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n >= 2 && n % 2 == 0, "composite_simpson needs an even n >= 2");
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adaptive_matches_closed_forms() {
        let f = |x: f64| x.exp();
        let exact = 1.0f64.exp() - 1.0;
        assert!((adaptive_simpson(&f, 0.0, 1.0, 1e-13) - exact).abs() < 1e-12);

        let g = |x: f64| (x * x).sin();
        let by_halving = composite_simpson(&g, 0.0, 2.0, 1 << 14);
        assert!((adaptive_simpson(&g, 0.0, 2.0, 1e-13) - by_halving).abs() < 1e-11);
    }

    #[test]
    fn composite_converges_under_refinement() {
        let f = |x: f64| 1.0 / (1.0 + x * x);
        let exact = 1.0f64.atan();
        let coarse = (composite_simpson(&f, 0.0, 1.0, 8) - exact).abs();
        let fine = (composite_simpson(&f, 0.0, 1.0, 16) - exact).abs();
        assert!(fine < coarse / 8.0); // 4th order
    }
}
