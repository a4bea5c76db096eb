//! Adaptive Simpson quadrature, with a window-growing wrapper for
//! integrands that decay exponentially at both ends of the real line.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 50;

/// Adaptive Simpson rule on `[a, b]` with absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let value = refine(f, a, b, fa, fm, fb, whole, tol, tol * 1e-6, MAX_DEPTH)?;
    if !value.is_finite() {
        return Err(Error::Integration(format!("non-finite result on [{a}, {b}]")));
    }
    Ok(value)
}

#[allow(clippy::too_many_arguments)]
fn refine(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    min_tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // roundoff floor: refining further cannot resolve the difference
    let noise = 64.0 * f64::EPSILON * (left.abs() + right.abs());
    if delta.abs() <= 15.0 * tol.max(noise) {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Integration(format!(
            "recursion limit reached on [{a}, {b}] (error estimate {:e})",
            delta.abs() / 15.0
        )));
    }
    let half = (0.5 * tol).max(min_tol);
    Ok(refine(f, a, m, fa, flm, fm, left, half, min_tol, depth - 1)?
        + refine(f, m, b, fm, frm, fb, right, half, min_tol, depth - 1)?)
}

/// Integral over the real line of an integrand decaying at both ends.
///
/// Starts from `[-start, start]` and extends the window by `start` on each
/// side until the added piece is below `stop` in absolute value.
pub fn integrate_real_line(f: impl Fn(f64) -> f64, start: f64, tol: f64, stop: f64) -> Result<f64> {
    let mut lo = -start;
    let mut hi = start;
    let mut total = adaptive_simpson(&f, lo, hi, tol)?;
    for _ in 0..200 {
        let left = adaptive_simpson(&f, lo - start, lo, tol)?;
        let right = adaptive_simpson(&f, hi, hi + start, tol)?;
        total += left + right;
        lo -= start;
        hi += start;
        if left.abs() + right.abs() < stop {
            return Ok(total);
        }
    }
    Err(Error::Integration(format!(
        "window grew to [{lo}, {hi}] without the tails dropping below {stop:e}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let v = adaptive_simpson(&|x: f64| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-12).unwrap();
        assert_relative_eq!(v, 2.0, epsilon = 1e-13);
    }

    #[test]
    fn gaussian_over_real_line() {
        let v = integrate_real_line(|t: f64| (-t * t).exp(), 2.0, 1e-13, 1e-15).unwrap();
        assert_relative_eq!(v, PI.sqrt(), epsilon = 1e-11);
    }

    #[test]
    fn sech_squared() {
        // integral of sech^2 over R is 2
        let v = integrate_real_line(|t: f64| 1.0 / t.cosh().powi(2), 5.0, 1e-13, 1e-15).unwrap();
        assert_relative_eq!(v, 2.0, epsilon = 1e-11);
    }

    #[test]
    fn non_finite_integrand_errors() {
        assert!(adaptive_simpson(&|_x: f64| f64::NAN, 0.0, 1.0, 1e-8).is_err());
    }
}
