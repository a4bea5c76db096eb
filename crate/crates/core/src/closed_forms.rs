//! Exact solutions and asymptotic constants for both endpoint limits.
//!
//! Small-power side: the Gausson `u0(r) = exp((d - r^2)/2)` and its first
//! order corrector `mu0`. Critical side (`d >= 3`): the Aubin–Talenti
//! profile `w*(rho) = (1 + a rho^2)^{-1/sigma*}`, the kernel element
//! `v(rho)` of the linearization at `w*`, and the leading correction to
//! `w_sigma - w*`.

use crate::error::{Error, Result};

/// `2 / (d - 2)` for `d >= 3`; no finite critical power below.
pub fn critical_power(d: usize) -> Option<f64> {
    (d >= 3).then(|| 2.0 / (d as f64 - 2.0))
}

fn require_critical(d: usize, min_d: usize) -> Result<f64> {
    if d < min_d {
        return Err(Error::Domain(format!("requires d >= {min_d}, got d = {d}")));
    }
    Ok(critical_power(d).expect("d >= 3"))
}

/// Constants attached to one spatial dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormCatalog {
    pub d: usize,
    pub sigma_star: Option<f64>,
    /// `1 / (d (d - 2))`, only for `d >= 3`.
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    /// `alpha(0) = e^{d/2}`.
    pub alpha0: f64,
    /// `alpha'(0) = d (d - 4) / 12 e^{d/2}`.
    pub slope0: f64,
    /// `(sigma* - 1) / (2 sigma* (1 + sigma*) (2 + sigma*))`.
    pub eps_prime_star: Option<f64>,
}

impl ClosedFormCatalog {
    pub fn new(d: usize) -> Self {
        let df = d as f64;
        let sigma_star = critical_power(d);
        let alpha0 = (df / 2.0).exp();
        Self {
            d,
            sigma_star,
            a: sigma_star.map(|s| s * s / (4.0 * (1.0 + s))),
            b: sigma_star.map(|s| -(1.0 + 1.0 / ((1.0 + s) * (2.0 + s))) / (2.0 * s * s)),
            c: sigma_star.map(|s| 1.0 / (8.0 * (1.0 + s) * (2.0 + s))),
            alpha0,
            slope0: df * (df - 4.0) / 12.0 * alpha0,
            eps_prime_star: sigma_star.map(|s| (s - 1.0) / (2.0 * s * (1.0 + s) * (2.0 + s))),
        }
    }
}

/// Gausson `exp((d - r^2) / 2)`.
pub fn gausson(d: usize, r: f64) -> f64 {
    ((d as f64 - r * r) / 2.0).exp()
}

pub fn gausson_derivative(d: usize, r: f64) -> f64 {
    -r * gausson(d, r)
}

/// One-dimensional ground state `(1 + sigma)^{1/(2 sigma)} cosh(x sqrt(sigma))^{-1/sigma}`.
pub fn soliton_1d(sigma: f64, x: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    let amp = (1.0 + sigma).powf(0.5 / sigma);
    // cosh^{-1/sigma} through logs so large |x| underflows gracefully
    let y = x.abs() * sigma.sqrt();
    let log_cosh = y + (-2.0 * y).exp().ln_1p() - std::f64::consts::LN_2;
    Ok(amp * (-log_cosh / sigma).exp())
}

/// Aubin–Talenti profile `(1 + a rho^2)^{-1/sigma*}`.
pub fn aubin_talenti(d: usize, rho: f64) -> Result<f64> {
    let s = require_critical(d, 3)?;
    let a = 1.0 / (d as f64 * (d as f64 - 2.0));
    Ok((1.0 + a * rho * rho).powf(-1.0 / s))
}

pub fn aubin_talenti_derivative(d: usize, rho: f64) -> Result<f64> {
    let s = require_critical(d, 3)?;
    let a = 1.0 / (d as f64 * (d as f64 - 2.0));
    Ok(-2.0 * a * rho / s * (1.0 + a * rho * rho).powf(-1.0 / s - 1.0))
}

/// First-order corrector `mu0(r) = [d(d-4) + 4(1-d) r^2 + r^4] u0(r) / 12`.
pub fn corrector_mu0(d: usize, r: f64) -> f64 {
    let df = d as f64;
    let r2 = r * r;
    (df * (df - 4.0) + 4.0 * (1.0 - df) * r2 + r2 * r2) / 12.0 * gausson(d, r)
}

/// Positive zeros of `mu0`, ascending.
pub fn mu0_positive_roots(d: usize) -> Vec<f64> {
    let df = d as f64;
    let disc = (3.0 * df * df - 4.0 * df + 4.0).sqrt();
    let centre = 2.0 * (df - 1.0);
    let mut roots: Vec<f64> = [centre - disc, centre + disc]
        .into_iter()
        .filter(|&r2| r2 > 1e-12)
        .map(f64::sqrt)
        .collect();
    roots.sort_by(f64::total_cmp);
    roots
}

/// Leading-order `epsilon(sigma) ~ (1 - sigma*)(sigma* - sigma) / (2 sigma* (1+sigma*)(2+sigma*))`,
/// positive for `d >= 5`.
pub fn eps0(d: usize, sigma: f64) -> Result<f64> {
    let s = require_critical(d, 3)?;
    if !(sigma > 0.0) || sigma >= s {
        return Err(Error::Domain(format!(
            "sigma must lie in (0, {s}) for d = {d}, got {sigma}"
        )));
    }
    Ok((1.0 - s) * (s - sigma) / (2.0 * s * (1.0 + s) * (2.0 + s)))
}

/// Upper bound `(sigma* - sigma) / (sigma* (1 + sigma))` on `epsilon(sigma)`.
pub fn eps_upper_bound(d: usize, sigma: f64) -> Result<f64> {
    let s = require_critical(d, 3)?;
    Ok((s - sigma) / (s * (1.0 + sigma)))
}

/// Kernel element `(1 - a rho^2) / (1 + a rho^2)^{1 + 1/sigma*}`.
pub fn kernel_v(d: usize, rho: f64) -> Result<f64> {
    let s = require_critical(d, 3)?;
    let a = 1.0 / (d as f64 * (d as f64 - 2.0));
    let q = a * rho * rho;
    Ok((1.0 - q) / (1.0 + q).powf(1.0 + 1.0 / s))
}

/// Bracket of the leading correction to `w_sigma - w*`:
/// `(ln(1+a rho^2) + s^2 b + s^2 c rho^2) / (s^2 (1+a rho^2)^{1/s}) - b v(rho)`.
///
/// The correction itself is `(sigma - sigma*)` times this value.
pub fn correction_term(d: usize, rho: f64) -> Result<f64> {
    let s = require_critical(d, 5)?;
    let cat = ClosedFormCatalog::new(d);
    let (a, b, c) = (cat.a.unwrap(), cat.b.unwrap(), cat.c.unwrap());
    let q = a * rho * rho;
    let s2 = s * s;
    let first = (q.ln_1p() + s2 * b + s2 * c * rho * rho) / (s2 * (1.0 + q).powf(1.0 / s));
    Ok(first - b * kernel_v(d, rho)?)
}

/// Unique positive zero `rho_0` of [`correction_term`].
pub fn crossing_rho0(d: usize) -> Result<f64> {
    require_critical(d, 5)?;
    const STEP: f64 = 1e-2;
    const LIMIT: f64 = 1e3;
    let f = |rho: f64| correction_term(d, rho).expect("d >= 5 checked");
    let mut lo = STEP;
    let mut f_lo = f(lo);
    while lo < LIMIT {
        let hi = lo + STEP;
        let f_hi = f(hi);
        if f_lo.signum() != f_hi.signum() {
            return Ok(bisect(f, lo, hi, f_lo, 1e-13));
        }
        lo = hi;
        f_lo = f_hi;
    }
    Err(Error::RootNotFound(format!(
        "correction term keeps one sign on (0, {LIMIT}) for d = {d}"
    )))
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut f_lo: f64, tol: f64) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `u(x) = phi(x / sqrt(sigma))`.
pub fn scale_phi_to_u<F: Fn(f64) -> f64>(phi: F, sigma: f64) -> impl Fn(f64) -> f64 {
    let k = 1.0 / sigma.sqrt();
    move |r| phi(r * k)
}

/// `w(rho) = u(sqrt(sigma) rho / alpha^sigma) / alpha`, the inverse of
/// `u(r) = alpha w(alpha^sigma r / sqrt(sigma))`.
pub fn scale_u_to_w<F: Fn(f64) -> f64>(u: F, alpha: f64, sigma: f64) -> impl Fn(f64) -> f64 {
    let k = sigma.sqrt() / alpha.powf(sigma);
    move |rho| u(k * rho) / alpha
}

/// `epsilon = alpha^{-2 sigma}`.
pub fn eps_from_alpha(alpha: f64, sigma: f64) -> f64 {
    alpha.powf(-2.0 * sigma)
}

/// `(|eps'(sigma*)| (sigma* - sigma))^{-1/(2 sigma*)}` for `d >= 5`.
pub fn predicted_alpha_near_star(d: usize, sigma: f64) -> Result<f64> {
    let s = require_critical(d, 5)?;
    if sigma >= s {
        return Err(Error::Domain(format!(
            "sigma must be below sigma* = {s}, got {sigma}"
        )));
    }
    let slope = ClosedFormCatalog::new(d).eps_prime_star.unwrap().abs();
    Ok((slope * (s - sigma)).powf(-1.0 / (2.0 * s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{E, SQRT_2};

    #[test]
    fn gausson_values() {
        assert_relative_eq!(gausson(2, 0.0), E, epsilon = 1e-15);
        for d in 1..=6 {
            assert_relative_eq!(gausson(d, (d as f64).sqrt()), 1.0, epsilon = 1e-15);
        }
        assert_relative_eq!(gausson(1, 2.0), (-1.5f64).exp(), epsilon = 1e-15);
        assert!((gausson(1, 2.0) - 0.223130).abs() < 1e-6);
    }

    #[test]
    fn soliton_amplitudes() {
        assert_relative_eq!(soliton_1d(1.0, 0.0).unwrap(), SQRT_2, epsilon = 1e-15);
        assert_relative_eq!(soliton_1d(0.5, 0.0).unwrap(), 1.5, epsilon = 1e-15);
        assert_relative_eq!(soliton_1d(2.0, 0.0).unwrap(), 3f64.powf(0.25), epsilon = 1e-15);
        assert!(soliton_1d(0.0, 1.0).is_err());
        assert!(soliton_1d(-1.0, 1.0).is_err());
        // direct formula at moderate x
        let x = 1.3;
        let direct = 2f64.powf(0.25) * (x * 0.5f64.sqrt()).cosh().powf(-2.0);
        assert_relative_eq!(soliton_1d(0.5, x).unwrap() / 1.5 * 2f64.powf(0.25), direct, max_relative = 1e-14);
        assert!(soliton_1d(1.0, 800.0).unwrap() >= 0.0);
    }

    #[test]
    fn aubin_talenti_values() {
        assert_eq!(aubin_talenti(5, 0.0).unwrap(), 1.0);
        assert_relative_eq!(aubin_talenti(3, 3f64.sqrt()).unwrap(), 1.0 / SQRT_2, epsilon = 1e-15);
        // d=5: a = 1/15, sigma* = 2/3
        let rho = 2.0f64;
        assert_relative_eq!(
            aubin_talenti(5, rho).unwrap(),
            (1.0 + rho * rho / 15.0).powf(-1.5),
            epsilon = 1e-15
        );
        assert!(aubin_talenti(2, 1.0).is_err());
        let mut prev = 2.0;
        for k in 0..100 {
            let w = aubin_talenti(6, k as f64 * 0.3).unwrap();
            assert!(w < prev);
            prev = w;
        }
    }

    #[test]
    fn aubin_talenti_derivative_matches_difference() {
        for d in 3..=7 {
            for &rho in &[0.3, 1.0, 4.0, 11.0] {
                let h = 1e-5;
                let fd = (aubin_talenti(d, rho + h).unwrap() - aubin_talenti(d, rho - h).unwrap()) / (2.0 * h);
                assert_relative_eq!(aubin_talenti_derivative(d, rho).unwrap(), fd, max_relative = 1e-7);
            }
        }
    }

    #[test]
    fn catalog_constants() {
        for d in 3..=9 {
            let cat = ClosedFormCatalog::new(d);
            let s = cat.sigma_star.unwrap();
            assert_relative_eq!(cat.a.unwrap(), 1.0 / (d as f64 * (d as f64 - 2.0)), epsilon = 1e-14);
            assert_relative_eq!(cat.a.unwrap(), s * s / (4.0 * (1.0 + s)), epsilon = 1e-14);
            let ratio = cat.slope0 / cat.alpha0;
            assert_relative_eq!(ratio, d as f64 * (d as f64 - 4.0) / 12.0, epsilon = 1e-14);
            if d >= 5 {
                assert!(cat.eps_prime_star.unwrap() < 0.0);
            }
        }
        let c5 = ClosedFormCatalog::new(5);
        assert_relative_eq!(c5.b.unwrap(), -441.0 / 320.0, epsilon = 1e-14);
        assert_relative_eq!(c5.c.unwrap(), 9.0 / 320.0, epsilon = 1e-15);
        assert_relative_eq!(c5.eps_prime_star.unwrap(), -9.0 / 160.0, epsilon = 1e-15);
        assert!(ClosedFormCatalog::new(2).sigma_star.is_none());
        assert!(ClosedFormCatalog::new(3).slope0 < 0.0);
        assert_eq!(ClosedFormCatalog::new(4).slope0, 0.0);
    }

    #[test]
    fn corrector_values() {
        assert_eq!(corrector_mu0(4, 0.0), 0.0);
        assert_relative_eq!(corrector_mu0(1, 0.0), -0.25 * 0.5f64.exp(), epsilon = 1e-15);
        assert!((corrector_mu0(1, 0.0) + 0.412180).abs() < 1e-6);
        let r0 = (2.0 + 2.0 * SQRT_2).sqrt();
        assert!(corrector_mu0(2, r0).abs() < 1e-14);
        // d = 1: mu0 = (x^4 - 3) u0 / 12
        let x = 0.7;
        assert_relative_eq!(corrector_mu0(1, x), (x.powi(4) - 3.0) / 12.0 * gausson(1, x), epsilon = 1e-15);
    }

    #[test]
    fn corrector_roots() {
        let r2 = mu0_positive_roots(2);
        assert_eq!(r2.len(), 1);
        assert_relative_eq!(r2[0], (2.0 + 2.0 * SQRT_2).sqrt(), epsilon = 1e-14);
        assert!((r2[0] - 2.19737).abs() < 1e-5);
        for d in 1..=4 {
            assert_eq!(mu0_positive_roots(d).len(), 1, "d = {d}");
        }
        let r5 = mu0_positive_roots(5);
        assert_eq!(r5.len(), 2);
        assert_relative_eq!(r5[0], (8.0 - 59f64.sqrt()).sqrt(), epsilon = 1e-14);
        assert_relative_eq!(r5[1], (8.0 + 59f64.sqrt()).sqrt(), epsilon = 1e-14);
        for d in 1..=8 {
            for r in mu0_positive_roots(d) {
                assert!(corrector_mu0(d, r).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eps0_coefficients() {
        let s = 2.0 / 3.0;
        for &sigma in &[0.5, 0.6, 0.66] {
            assert_relative_eq!(eps0(5, sigma).unwrap(), 9.0 / 160.0 * (s - sigma), epsilon = 1e-15);
        }
        assert_relative_eq!(eps0(6, 0.4).unwrap(), 2.0 / 15.0 * (0.5 - 0.4), epsilon = 1e-15);
        assert!(eps0(5, s).is_err());
        assert!(eps0(5, 0.7).is_err());
        assert!(eps0(2, 0.1).is_err());
        // the sigma -> sigma* limit is zero
        assert!(eps0(5, s - 1e-12).unwrap() < 1e-12);
    }

    #[test]
    fn kernel_values() {
        assert!(kernel_v(5, 15f64.sqrt()).unwrap().abs() < 1e-15);
        for d in 3..=7 {
            assert_eq!(kernel_v(d, 0.0).unwrap(), 1.0);
        }
        assert_relative_eq!(
            kernel_v(5, 1.0).unwrap(),
            (14.0 / 15.0) / (16.0f64 / 15.0).powf(2.5),
            epsilon = 1e-15
        );
        assert!(kernel_v(2, 1.0).is_err());
    }

    #[test]
    fn correction_term_signs_and_root() {
        assert!(correction_term(5, 0.0).unwrap().abs() < 1e-15);
        assert!(correction_term(4, 1.0).is_err());
        // frozen from an independent 30-digit scan-and-refine of the same bracket
        let rho0 = crossing_rho0(5).unwrap();
        assert!((rho0 - 0.910_489_658_357_270).abs() < 1e-10, "rho0 = {rho0}");
        assert!(correction_term(5, rho0).unwrap().abs() < 1e-12);
        // negative inside, positive outside; the correction (sigma - sigma*) K has the opposite pattern
        assert!(correction_term(5, 0.5).unwrap() < 0.0);
        for rho in [10.0, 20.0, 50.0] {
            assert!(correction_term(5, rho).unwrap() > 0.0);
        }
        assert!((crossing_rho0(6).unwrap() - 1.528_862_816_231_286).abs() < 1e-10);
        assert!(crossing_rho0(4).is_err());
    }

    #[test]
    fn scalings() {
        let f = |r: f64| (-r * r).exp() * (1.0 + r);
        let same = scale_phi_to_u(f, 1.0);
        assert_eq!(same(0.7), f(0.7));
        let halved = scale_phi_to_u(f, 4.0);
        assert_eq!(halved(3.0), f(1.5));

        // 1D ground state of -phi'' + phi = phi^{2 sigma + 1}
        let sigma = 0.5;
        let phi = |x: f64| ((1.0 + sigma) / (x * sigma).cosh().powi(2)).powf(0.5 / sigma);
        let u = scale_phi_to_u(phi, sigma);
        for x in [0.0, 0.4, 2.0, 5.0] {
            assert_relative_eq!(u(x), soliton_1d(sigma, x).unwrap(), max_relative = 1e-13);
        }

        let id = scale_u_to_w(f, 1.0, 1.0);
        assert_eq!(id(0.3), f(0.3));
        let alpha = 3.0;
        let w = scale_u_to_w(|r| alpha * f(r), alpha, 0.6);
        assert_relative_eq!(w(0.0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(eps_from_alpha(2.0, 0.5), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn alpha_near_critical_power() {
        let s = 2.0 / 3.0;
        let alpha = predicted_alpha_near_star(5, s - 1e-3).unwrap();
        assert_relative_eq!(alpha, (9.0 / 160.0 * 1e-3f64).powf(-0.75), max_relative = 1e-13);
        let closer = predicted_alpha_near_star(5, s - 1e-4).unwrap();
        assert!(closer > alpha);
        assert!(predicted_alpha_near_star(5, s).is_err());
        assert!(predicted_alpha_near_star(4, 0.5).is_err());
    }
}
