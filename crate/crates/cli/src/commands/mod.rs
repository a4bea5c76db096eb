//! One module per subcommand. Each turns a [`RunConfig`] into a [`Report`].

mod critical;
mod oracle;
mod small_power;
mod validate;

use groundstate_core::closed_forms::critical_power;
use groundstate_core::flows::residual_groundstate;
use groundstate_core::shooting::ShootingConfig;
use groundstate_core::{linf_flow, nehari_flow, FlowConfig, FlowResult, RadialProfile};
use rayon::prelude::*;

use crate::config::{Command, RunConfig, DEFAULT_TAU};
use crate::error::Result;
use crate::output::{Report, RunRecord};

pub fn execute(cfg: &RunConfig) -> Result<Report> {
    let mut report = match cfg.command {
        Command::SweepMax => small_power::sweep_max(cfg)?,
        Command::Profiles => small_power::profiles(cfg)?,
        Command::SlopeCheck => small_power::slope_check(cfg)?,
        Command::Critical => critical::critical(cfg)?,
        Command::EpsilonCurve => critical::epsilon_curve(cfg)?,
        Command::Crossing => critical::crossing(cfg)?,
        Command::Validate => validate::validate(cfg)?,
        Command::OracleCompare => oracle::oracle_compare(cfg)?,
    };
    report.count_failed_records();
    Ok(report)
}

/// Flow parameters from the config, with `(radius, h)` used where `--R` / `--M`
/// are absent. An explicit `--R` alone keeps the default spacing.
pub(crate) fn flow_config(cfg: &RunConfig, radius: f64, h: f64) -> FlowConfig {
    let radius = cfg.radius.unwrap_or(radius);
    let unknowns = cfg
        .unknowns
        .unwrap_or_else(|| FlowConfig::with_grid(radius, h).unknowns);
    FlowConfig {
        tau: cfg.tau_or(DEFAULT_TAU),
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        radius,
        unknowns,
    }
}

/// Maps `f` over `items` on the current rayon pool, keeping input order.
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.par_iter().map(f).collect()
}

/// Nehari flow plus rescaling; records `alpha`, the stopping `residual`,
/// `equation_residual` of the rescaled profile and `iterations`.
pub(crate) fn ground_state(
    sigma: f64,
    d: usize,
    fc: &FlowConfig,
    rec: &mut RunRecord,
) -> groundstate_core::Result<RadialProfile> {
    let flow = nehari_flow(sigma, d, fc, None)?;
    let u = flow.ground_state()?;
    rec.output("alpha", u.center_value());
    rec.output("residual", flow.final_residual);
    // after resampling; grows with sigma as the interpolant's curvature errors enter
    rec.output("equation_residual", residual_groundstate(&u, sigma));
    rec.iterations = Some(flow.iterations);
    Ok(u)
}

/// Sup-norm flow; records `eps_bar`, `alpha = eps_bar^{-1/(2 sigma)}` and `iterations`.
pub(crate) fn sup_norm_state(
    sigma: f64,
    d: usize,
    fc: &FlowConfig,
    rec: &mut RunRecord,
) -> groundstate_core::Result<FlowResult> {
    let flow = linf_flow(sigma, d, fc)?;
    let eps = flow.eps_bar.expect("sup-norm flow sets eps_bar");
    rec.output("eps_bar", eps);
    rec.output("alpha", eps.powf(-0.5 / sigma));
    rec.output("residual", flow.final_residual);
    rec.iterations = Some(flow.iterations);
    Ok(flow)
}

/// Shooting parameters for the rate problem as run from the command line.
pub(crate) fn rate_shooting() -> ShootingConfig {
    ShootingConfig {
        dr: 1e-3,
        r_max: 400.0,
        ..ShootingConfig::for_rate()
    }
}

/// `sigma* (d)` for the critical-side commands (validation guarantees d >= 5).
pub(crate) fn sigma_star(d: usize) -> f64 {
    critical_power(d).expect("critical-side commands run with d >= 5")
}

/// Explicit `--sigma` values, or `fractions` of `sigma*`, rounded to 1e-10.
pub(crate) fn critical_sigmas(cfg: &RunConfig, d: usize, fractions: &[f64]) -> Vec<f64> {
    cfg.sigmas.clone().unwrap_or_else(|| {
        let s = sigma_star(d);
        fractions.iter().map(|f| (f * s * 1e10).round() / 1e10).collect()
    })
}

/// Sup norm of `a - b` over the shared nodes.
pub(crate) fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Column label for a profile at power `sigma`.
pub(crate) fn sigma_label(prefix: &str, sigma: f64) -> String {
    format!("{prefix}_{sigma}")
}
