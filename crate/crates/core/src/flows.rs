//! Linearly implicit normalized gradient flows for the radial ground state.
//!
//! Both flows take one tridiagonal solve per step, with the nonlinearity
//! frozen at the previous iterate, and then project back onto a
//! normalization constraint:
//!
//! * [`nehari_flow`] works with `Delta u + (|u|^{2 sigma} - 1) u / sigma = 0`
//!   and renormalizes onto the Nehari-type constraint
//!   `sigma I(phi) = ||phi||^{2 sigma + 2}_{L^{2 sigma + 2}_r}`. Its fixed
//!   point solves the equation only after the `gamma` rescaling in
//!   [`rescale_fixed_point`].
//! * [`linf_flow`] works with the amplitude-normalized equation
//!   `Delta w + |w|^{2 sigma} w = eps w`, `w(0) = 1`, and divides by the
//!   sup norm after each step; `eps` is recovered at the fixed point.

use crate::closed_forms::{aubin_talenti, critical_power, eps0};
use crate::error::{Error, Result};
use crate::grid::{RadialProfile, StaggeredGrid};
use crate::tridiag::TridiagonalOperator;

/// Pseudo-time step, stopping threshold and grid of a flow run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    pub tau: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub radius: f64,
    pub unknowns: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            tau: 0.1,
            tol: 1e-10,
            max_iter: 1_000_000,
            radius: 15.0,
            unknowns: 1500,
        }
    }
}

impl FlowConfig {
    /// Default parameters on `[0, radius]` with mesh width close to `h`.
    pub fn with_grid(radius: f64, h: f64) -> Self {
        let unknowns = (radius / h - 0.5).ceil() as usize;
        Self {
            radius,
            unknowns,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::InvalidConfiguration(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfiguration(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfiguration("max_iter must be >= 1".into()));
        }
        Ok(())
    }

    pub fn grid(&self, d: usize) -> Result<StaggeredGrid> {
        StaggeredGrid::new(self.radius, self.unknowns, d)
    }
}

/// Converged profile and the fixed-point scalars of a flow.
#[derive(Debug, Clone)]
pub struct FlowResult {
    /// `phi_sigma` (Nehari flow, before rescaling) or `w_sigma` (sup-norm flow).
    pub profile: RadialProfile,
    /// `lambda_n` (Nehari flow) or `mu_n` (sup-norm flow), one per step.
    pub scalar_history: Vec<f64>,
    pub iterations: usize,
    /// `||phi^{n+1} - phi^n||_{L^2_r} / tau` at the last step.
    pub final_residual: f64,
    pub sigma: f64,
    pub tau: f64,
    /// `1 + sigma (1 - lambda) / tau` (Nehari flow only).
    pub gamma: Option<f64>,
    /// `eps0(sigma) + (mu - 1) / (mu tau)` (sup-norm flow only).
    pub eps_bar: Option<f64>,
}

impl FlowResult {
    /// Last recorded `lambda` or `mu`.
    pub fn last_scalar(&self) -> f64 {
        *self.scalar_history.last().expect("at least one iteration")
    }
}

fn check_sigma(sigma: f64, d: usize) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    if let Some(s) = critical_power(d) {
        if sigma >= s {
            return Err(Error::Domain(format!(
                "sigma = {sigma} is not below the critical power {s} for d = {d}"
            )));
        }
    }
    Ok(())
}

/// `I(phi) = 1/2 ||phi'||^2 + ||phi||^2 / sigma`, with the discrete Dirichlet form.
pub fn quadratic_functional(phi: &RadialProfile, sigma: f64) -> f64 {
    0.5 * phi.dirichlet_energy() + phi.lp_norm_pow(2.0) / sigma
}

/// Scalar `lambda` such that `lambda phi` satisfies the discrete constraint
/// `sigma I(lambda phi) = ||lambda phi||^{2 sigma + 2}`.
pub fn nehari_scaling(phi: &RadialProfile, sigma: f64) -> Option<f64> {
    let num = sigma * quadratic_functional(phi, sigma);
    let den = phi.lp_norm_pow(2.0 * sigma + 2.0);
    let lambda = (num / den).powf(0.5 / sigma);
    (den > 0.0 && lambda.is_finite() && lambda > 0.0).then_some(lambda)
}

fn step_residual(grid: &StaggeredGrid, new: &[f64], old: &[f64], tau: f64) -> f64 {
    let diff: Vec<f64> = new.iter().zip(old).map(|(a, b)| a - b).collect();
    crate::grid::weighted_dot(grid, &diff, &diff).sqrt() / tau
}

fn check_positive(values: &[f64], iteration: usize) -> Result<()> {
    if let Some(j) = values.iter().position(|v| !(*v >= 0.0)) {
        return Err(Error::DegenerateIterate {
            iteration,
            reason: format!("lost positivity at node {j} (value {})", values[j]),
        });
    }
    Ok(())
}

fn nehari_update(
    base: &TridiagonalOperator,
    grid: &StaggeredGrid,
    phi: &[f64],
    sigma: f64,
    tau: f64,
    iteration: usize,
) -> Result<(Vec<f64>, f64)> {
    let inv_tau = 1.0 / tau;
    let op = base.with_diagonal(|j| inv_tau + (1.0 - phi[j].abs().powf(2.0 * sigma)) / sigma);
    let rhs: Vec<f64> = phi.iter().map(|v| v * inv_tau).collect();
    let star = RadialProfile::from_parts(*grid, op.solve_slice(&rhs)?);
    let lambda = nehari_scaling(&star, sigma).ok_or_else(|| Error::DegenerateIterate {
        iteration,
        reason: "vanishing or non-finite intermediate iterate".into(),
    })?;
    let next: Vec<f64> = star.values().iter().map(|v| lambda * v).collect();
    check_positive(&next, iteration)?;
    Ok((next, lambda))
}

/// One step of [`nehari_flow`]: returns `phi^{n+1}` and `lambda_{n+1}`.
pub fn nehari_step(phi: &RadialProfile, sigma: f64, tau: f64) -> Result<(RadialProfile, f64)> {
    let grid = *phi.grid();
    let base = TridiagonalOperator::negative_laplacian(&grid);
    let (next, lambda) = nehari_update(&base, &grid, phi.values(), sigma, tau, 1)?;
    Ok((RadialProfile::from_parts(grid, next), lambda))
}

fn linf_update(
    base: &TridiagonalOperator,
    grid: &StaggeredGrid,
    w: &[f64],
    sigma: f64,
    shift: f64,
    tau: f64,
    iteration: usize,
) -> Result<(Vec<f64>, f64)> {
    let inv_tau = 1.0 / tau;
    let op = base.with_diagonal(|j| inv_tau + shift - w[j].abs().powf(2.0 * sigma));
    let rhs: Vec<f64> = w.iter().map(|v| v * inv_tau).collect();
    let star = RadialProfile::from_parts(*grid, op.solve_slice(&rhs)?);
    let mu = star.sup_norm();
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::DegenerateIterate {
            iteration,
            reason: format!("sup norm of intermediate iterate is {mu}"),
        });
    }
    let next: Vec<f64> = star.values().iter().map(|v| v / mu).collect();
    check_positive(&next, iteration)?;
    Ok((next, mu))
}

/// One step of [`linf_flow`] with shift `eps0`: returns `w^{n+1}` and `mu_{n+1}`.
pub fn linf_step(w: &RadialProfile, sigma: f64, eps0: f64, tau: f64) -> Result<(RadialProfile, f64)> {
    let grid = *w.grid();
    let base = TridiagonalOperator::negative_laplacian(&grid);
    let (next, mu) = linf_update(&base, &grid, w.values(), sigma, eps0, tau, 1)?;
    Ok((RadialProfile::from_parts(grid, next), mu))
}

/// Gradient flow with renormalization onto the Nehari-type constraint.
///
/// Each step solves `(1/tau)(phi* - phi^n) = Delta_h phi* + (|phi^n|^{2 sigma} - 1) phi* / sigma`
/// and sets `phi^{n+1} = lambda_{n+1} phi*`. The default initial state is
/// `exp(-r^2)`.
pub fn nehari_flow(
    sigma: f64,
    d: usize,
    config: &FlowConfig,
    initial: Option<&RadialProfile>,
) -> Result<FlowResult> {
    config.validate()?;
    check_sigma(sigma, d)?;
    let grid = config.grid(d)?;
    let mut phi = match initial {
        Some(p) => {
            if *p.grid() != grid {
                return Err(Error::GridMismatch);
            }
            p.values().to_vec()
        }
        None => grid.sample(|r| (-r * r).exp()).into_values(),
    };
    let base = TridiagonalOperator::negative_laplacian(&grid);
    let mut history = Vec::new();
    let mut residual = f64::INFINITY;

    for n in 1..=config.max_iter {
        let (next, lambda) = nehari_update(&base, &grid, &phi, sigma, config.tau, n)?;
        check_positive(&next, n)?;
        residual = step_residual(&grid, &next, &phi, config.tau);
        history.push(lambda);
        phi = next;
        if residual <= config.tol {
            return Ok(FlowResult {
                profile: RadialProfile::from_parts(grid, phi),
                scalar_history: history,
                iterations: n,
                final_residual: residual,
                sigma,
                tau: config.tau,
                gamma: Some(1.0 + sigma * (1.0 - lambda) / config.tau),
                eps_bar: None,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: config.max_iter,
        residual,
        history,
    })
}

/// Maps a fixed point of [`nehari_flow`] to a solution of
/// `Delta u + (|u|^{2 sigma} - 1) u / sigma = 0`:
/// `u(r) = gamma^{-1/(2 sigma)} phi(r / sqrt(gamma))` with
/// `gamma = 1 + sigma (1 - lambda) / tau`.
///
/// The result is resampled on the same grid with a monotone cubic
/// interpolant; points mapped beyond `R` are set to zero.
pub fn rescale_fixed_point(
    phi: &RadialProfile,
    lambda: f64,
    tau: f64,
    sigma: f64,
) -> Result<RadialProfile> {
    let gamma = 1.0 + sigma * (1.0 - lambda) / tau;
    if !(gamma > 0.0) {
        return Err(Error::RescaleDomain { gamma });
    }
    if gamma == 1.0 {
        return Ok(phi.clone());
    }
    let amp = gamma.powf(-0.5 / sigma);
    let stretch = 1.0 / gamma.sqrt();
    let interp = phi.interpolant();
    Ok(phi.grid().sample(|r| amp * interp.eval(r * stretch)))
}

impl FlowResult {
    /// Ground-state profile `u_sigma` from a Nehari-flow result.
    pub fn ground_state(&self) -> Result<RadialProfile> {
        match self.gamma {
            Some(_) => rescale_fixed_point(&self.profile, self.last_scalar(), self.tau, self.sigma),
            None => Err(Error::Domain(
                "ground_state() applies to Nehari-flow results".into(),
            )),
        }
    }
}

/// Gradient flow with sup-norm normalization for `Delta w + |w|^{2 sigma} w = eps w`.
///
/// Starts from the sampled Aubin–Talenti profile; each step solves
/// `(1/tau)(w* - w^n) = Delta_h w* + |w^n|^{2 sigma} w* - eps0(sigma) w*` and
/// sets `w^{n+1} = w* / ||w*||_inf`. At the fixed point
/// `eps = eps0 + (mu - 1) / (mu tau)` with `mu = ||w*||_inf`.
pub fn linf_flow(sigma: f64, d: usize, config: &FlowConfig) -> Result<FlowResult> {
    config.validate()?;
    check_sigma(sigma, d)?;
    let shift = eps0(d, sigma)?;
    let grid = config.grid(d)?;
    let mut w = grid
        .sample(|rho| aubin_talenti(d, rho).expect("d >= 3 checked by eps0"))
        .into_values();
    let base = TridiagonalOperator::negative_laplacian(&grid);
    let mut history = Vec::new();
    let mut residual = f64::INFINITY;

    for n in 1..=config.max_iter {
        let (next, mu) = linf_update(&base, &grid, &w, sigma, shift, config.tau, n)?;
        check_positive(&next, n)?;
        residual = step_residual(&grid, &next, &w, config.tau);
        history.push(mu);
        w = next;
        if residual <= config.tol {
            return Ok(FlowResult {
                profile: RadialProfile::from_parts(grid, w),
                scalar_history: history,
                iterations: n,
                final_residual: residual,
                sigma,
                tau: config.tau,
                gamma: None,
                eps_bar: Some(shift + (mu - 1.0) / (mu * config.tau)),
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: config.max_iter,
        residual,
        history,
    })
}

/// Discrete `L^2_r` norm of `Delta_h u + (|u|^{2 sigma} - 1) u / sigma`.
pub fn residual_groundstate(u: &RadialProfile, sigma: f64) -> f64 {
    let lap = u.laplacian();
    let res: Vec<f64> = lap
        .values()
        .iter()
        .zip(u.values())
        .map(|(l, v)| l + (v.abs().powf(2.0 * sigma) - 1.0) * v / sigma)
        .collect();
    crate::grid::weighted_dot(u.grid(), &res, &res).sqrt()
}

/// Discrete `L^2_r` norm of `Delta_h w + |w|^{2 sigma} w - eps w`.
pub fn residual_w(w: &RadialProfile, sigma: f64, eps: f64) -> f64 {
    let lap = w.laplacian();
    let res: Vec<f64> = lap
        .values()
        .iter()
        .zip(w.values())
        .map(|(l, v)| l + v.abs().powf(2.0 * sigma) * v - eps * v)
        .collect();
    crate::grid::weighted_dot(w.grid(), &res, &res).sqrt()
}

/// Samples the rescaled profile `w(rho) = u(sqrt(sigma) rho / alpha^sigma) / alpha`
/// of a ground state `u` onto `target`, with `alpha` the center value of `u`.
pub fn u_profile_to_w(u: &RadialProfile, sigma: f64, target: &StaggeredGrid) -> RadialProfile {
    let alpha = u.center_value();
    let interp = u.interpolant();
    let k = sigma.sqrt() / alpha.powf(sigma);
    target.sample(|rho| interp.eval(k * rho) / alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_forms::{gausson, scale_u_to_w, soliton_1d};
    use approx::assert_relative_eq;

    fn config(radius: f64, unknowns: usize) -> FlowConfig {
        FlowConfig {
            radius,
            unknowns,
            ..FlowConfig::default()
        }
    }

    #[test]
    fn one_dimensional_soliton() {
        let res = nehari_flow(1.0, 1, &config(15.0, 2000), None).unwrap();
        let u = res.ground_state().unwrap();
        assert_relative_eq!(u.center_value(), 2f64.sqrt(), epsilon = 1e-3);
        let exact = u.grid().sample(|x| soliton_1d(1.0, x).unwrap());
        assert!(u.sub(&exact).unwrap().sup_norm() < 1e-3);
        assert!(res.final_residual <= 1e-10);
        assert!(res.scalar_history.iter().all(|&l| l > 0.0));
        // the unscaled fixed point does not solve the equation
        let before = residual_groundstate(&res.profile, 1.0);
        let after = residual_groundstate(&u, 1.0);
        assert!(before >= 10.0 * after, "{before:e} vs {after:e}");
    }

    #[test]
    fn nehari_constraint_holds_after_renormalization() {
        let cfg = FlowConfig {
            max_iter: 25,
            ..config(12.0, 600)
        };
        let Error::NonConvergence { history, .. } = nehari_flow(0.7, 2, &cfg, None).unwrap_err() else {
            panic!("expected the iteration cap")
        };
        assert_eq!(history.len(), 25);
        let mut phi = cfg.grid(2).unwrap().sample(|r| (-r * r).exp());
        for _ in 0..10 {
            let (next, lambda) = nehari_step(&phi, 0.7, 0.1).unwrap();
            assert!(lambda > 0.0);
            let lhs = 0.7 * quadratic_functional(&next, 0.7);
            let rhs = next.lp_norm_pow(2.0 * 0.7 + 2.0);
            assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
            phi = next;
        }
    }

    #[test]
    fn sup_norm_step_keeps_unit_maximum() {
        let g = StaggeredGrid::new(60.0, 600, 5).unwrap();
        let shift = crate::closed_forms::eps0(5, 0.6).unwrap();
        let mut w = g.sample(|rho| crate::closed_forms::aubin_talenti(5, rho).unwrap());
        for _ in 0..10 {
            let (next, mu) = linf_step(&w, 0.6, shift, 0.5).unwrap();
            assert!(mu > 0.0);
            assert!((next.sup_norm() - 1.0).abs() <= 1e-14);
            w = next;
        }
    }

    #[test]
    fn sup_norm_flow_keeps_unit_maximum() {
        let cfg = FlowConfig {
            tau: 0.5,
            ..config(100.0, 1000)
        };
        let res = linf_flow(0.6, 5, &cfg).unwrap();
        assert!((res.profile.sup_norm() - 1.0).abs() <= 1e-14);
        let eps = res.eps_bar.unwrap();
        assert!(eps > 0.0 && eps <= crate::closed_forms::eps_upper_bound(5, 0.6).unwrap());
        assert!(residual_w(&res.profile, 0.6, eps) <= 10.0 * cfg.tol);
    }

    #[test]
    fn fixed_point_does_not_depend_on_tau() {
        let centers: Vec<f64> = [0.05, 0.1, 0.2]
            .iter()
            .map(|&tau| {
                let cfg = FlowConfig {
                    tau,
                    ..config(15.0, 1000)
                };
                nehari_flow(1.0, 2, &cfg, None).unwrap().ground_state().unwrap().center_value()
            })
            .collect();
        for c in &centers[1..] {
            assert!((c - centers[0]).abs() <= 10.0 * 1e-10 + 1e-9, "{centers:?}");
        }
    }

    #[test]
    fn small_power_two_dimensional_amplitude() {
        let u = nehari_flow(0.1, 2, &config(15.0, 1500), None)
            .unwrap()
            .ground_state()
            .unwrap();
        let predicted = std::f64::consts::E * (1.0 - 0.1 / 3.0);
        assert!((u.center_value() - predicted).abs() <= 0.03 * predicted);
    }

    #[test]
    fn large_power_profile_is_steeper() {
        let steepest = |sigma: f64| {
            let u = nehari_flow(sigma, 2, &config(15.0, 3000), None)
                .unwrap()
                .ground_state()
                .unwrap();
            let h = u.grid().h();
            u.values()
                .windows(2)
                .take(100)
                .map(|w| (w[1] - w[0]).abs() / h)
                .fold(0.0, f64::max)
        };
        assert!(steepest(8.0) > steepest(1.0));
    }

    #[test]
    fn rescale_edge_cases() {
        let g = StaggeredGrid::new(10.0, 100, 1).unwrap();
        let phi = g.sample(|r| (-r * r).exp());
        assert_eq!(rescale_fixed_point(&phi, 1.0, 0.1, 0.5).unwrap(), phi);
        assert!(matches!(
            rescale_fixed_point(&phi, 2.0, 0.1, 0.5),
            Err(Error::RescaleDomain { .. })
        ));
    }

    #[test]
    fn residuals_of_simple_profiles() {
        let g = StaggeredGrid::new(30.0, 3000, 1).unwrap();
        assert_eq!(residual_groundstate(&g.zeros(), 1.0), 0.0);
        let coarse = residual_groundstate(&g.sample(|x| soliton_1d(1.0, x).unwrap()), 1.0);
        let g2 = StaggeredGrid::new(30.0, 6000, 1).unwrap();
        let fine = residual_groundstate(&g2.sample(|x| soliton_1d(1.0, x).unwrap()), 1.0);
        assert!(coarse / fine > 3.5, "{coarse:e} {fine:e}");

        let g = StaggeredGrid::new(12.0, 1200, 2).unwrap();
        let u0 = g.sample(|r| gausson(2, r));
        let r1 = residual_groundstate(&u0, 0.05);
        let r2 = residual_groundstate(&u0, 0.025);
        assert!(r1 / r2 > 1.7 && r1 / r2 < 2.3, "{r1} {r2}");

        let g = StaggeredGrid::new(10.0, 100, 5).unwrap();
        assert_eq!(residual_w(&g.zeros(), 0.6, 0.3), 0.0);
    }

    #[test]
    fn both_flows_give_the_same_profile() {
        let sigma = 0.54;
        let d = 5;
        let u = nehari_flow(sigma, d, &config(20.0, 8000), None)
            .unwrap()
            .ground_state()
            .unwrap();
        let cfg = FlowConfig {
            tau: 0.5,
            ..FlowConfig::with_grid(80.0, 0.05)
        };
        let w = linf_flow(sigma, d, &cfg).unwrap().profile;
        let alpha = u.center_value();
        let interp = u.interpolant();
        let mapped = scale_u_to_w(|r| interp.eval(r), alpha, sigma);
        let diff = w
            .grid()
            .nodes()
            .iter()
            .zip(w.values())
            .map(|(rho, v)| (mapped(*rho) - v).abs())
            .fold(0.0, f64::max);
        assert!(diff <= 5e-3, "{diff}");
        let via_helper = u_profile_to_w(&u, sigma, w.grid());
        assert!(via_helper.sub(&w).unwrap().sup_norm() <= 5e-3);
    }

    #[test]
    fn invalid_inputs() {
        let cfg = FlowConfig::default();
        assert!(nehari_flow(0.0, 1, &cfg, None).is_err());
        assert!(nehari_flow(2.5, 3, &cfg, None).is_err());
        assert!(linf_flow(0.5, 2, &cfg).is_err());
        let bad = FlowConfig { tau: 0.0, ..cfg };
        assert!(matches!(nehari_flow(1.0, 1, &bad, None), Err(Error::InvalidConfiguration(_))));
        let other = StaggeredGrid::new(5.0, 10, 1).unwrap().zeros();
        assert_eq!(nehari_flow(1.0, 1, &cfg, Some(&other)).unwrap_err(), Error::GridMismatch);
    }
}
