//! Commands near the critical power: rescaled profiles, the rate eps(sigma),
//! and the sign change of w_sigma - w*.

use groundstate_core::closed_forms::{
    aubin_talenti, correction_term, ClosedFormCatalog, crossing_rho0, eps0, eps_from_alpha, eps_upper_bound,
};
use groundstate_core::flows::u_profile_to_w;
use groundstate_core::shooting::{find_epsilon, find_epsilon_detailed, Trajectory};
use groundstate_core::{FlowConfig, RadialProfile, StaggeredGrid};
use serde_json::{json, Value};

use super::{
    critical_sigmas, flow_config, ground_state, par_map, rate_shooting, sigma_label, sigma_star,
    sup_diff, sup_norm_state,
};
use crate::config::{RunConfig, DEFAULT_TAU};
use crate::error::Result;
use crate::output::{timed, Cell, Report, RunRecord, Table};

/// Below this fraction of sigma* the Nehari flow is used, above it the sup-norm flow.
const METHOD_SPLIT: f64 = 0.9;
/// Shooting is skipped this close to sigma*, where the tail outruns `r_max`.
const SHOOTING_MARGIN: f64 = 0.005;
const OVERLAP_TOL: f64 = 5e-3;
/// Default box holds this many decay lengths `1 / sqrt(eps0)`, so that the
/// Dirichlet cut does not set eps near sigma*.
const DECAY_LENGTHS: f64 = 6.0;
const MIN_RADIUS: f64 = 60.0;
const MAX_RADIUS: f64 = 1000.0;
const W_SPACING: f64 = 0.01;
/// Default step of the sup-norm flow; the fixed point does not depend on it.
const SUP_NORM_TAU: f64 = 0.5;

/// Sup-norm flow grid for the powers `sigmas` (shared), sized by the smallest rate.
fn w_config(cfg: &RunConfig, d: usize, sigmas: &[f64]) -> FlowConfig {
    let radius = sigmas
        .iter()
        .filter_map(|&s| eps0(d, s).ok())
        .map(|e| DECAY_LENGTHS / e.sqrt())
        .fold(MIN_RADIUS, f64::max);
    if radius > MAX_RADIUS && cfg.radius.is_none() {
        log::warn!("capping the box at R = {MAX_RADIUS}; eps near sigma* will feel the cut");
    }
    let radius = radius.min(MAX_RADIUS);
    FlowConfig {
        tau: cfg.tau_or(SUP_NORM_TAU),
        ..flow_config(cfg, radius.ceil(), W_SPACING)
    }
}

/// Grid of the Nehari runs before rescaling to the w variable.
fn u_grid_config(cfg: &RunConfig) -> FlowConfig {
    FlowConfig {
        tau: cfg.tau_or(DEFAULT_TAU),
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        ..FlowConfig::with_grid(20.0, 0.002)
    }
}

fn w_star(d: usize, grid: &StaggeredGrid) -> RadialProfile {
    grid.sample(|rho| aubin_talenti(d, rho).expect("d >= 5"))
}

/// Amplitude-normalized profile by either method; records `eps` and `sup_diff_to_star`.
fn w_profile(
    sigma: f64,
    d: usize,
    cfg: &RunConfig,
    w_fc: &FlowConfig,
    nehari: bool,
    rec: &mut RunRecord,
) -> groundstate_core::Result<RadialProfile> {
    let grid = w_fc.grid(d)?;
    let w = if nehari {
        let u = ground_state(sigma, d, &u_grid_config(cfg), rec)?;
        let eps = eps_from_alpha(u.center_value(), sigma);
        rec.output("eps", eps);
        u_profile_to_w(&u, sigma, &grid)
    } else {
        let flow = sup_norm_state(sigma, d, w_fc, rec)?;
        rec.output("eps", flow.eps_bar.expect("sup-norm flow"));
        flow.profile
    };
    rec.output("sup_diff_to_star", sup_diff(w.values(), w_star(d, &grid).values()));
    Ok(w)
}

fn method_name(nehari: bool) -> &'static str {
    if nehari {
        "nehari"
    } else {
        "sup-norm"
    }
}

pub fn critical(cfg: &RunConfig) -> Result<Report> {
    let mut report = Report::default();
    let mut summary = serde_json::Map::new();
    for d in cfg.dims() {
        let s = sigma_star(d);
        let split = METHOD_SPLIT * s;
        let sigmas = critical_sigmas(cfg, d, &[0.81, 0.87, 0.93, 0.99]);
        let w_fc = w_config(cfg, d, &sigmas);
        let runs: Vec<(RunRecord, Option<RadialProfile>)> = par_map(&sigmas, |&sigma| {
            let nehari = sigma < split;
            timed(d, sigma, method_name(nehari), |rec| w_profile(sigma, d, cfg, &w_fc, nehari, rec))
        });

        // same power both ways
        let overlap: Vec<(RunRecord, Option<RadialProfile>)> = par_map(&[true, false], |&nehari| {
            timed(d, split, method_name(nehari), |rec| w_profile(split, d, cfg, &w_fc, nehari, rec))
        });
        let overlap_diff = match (&overlap[0].1, &overlap[1].1) {
            (Some(a), Some(b)) => Some(sup_diff(a.values(), b.values())),
            _ => None,
        };

        let grid = w_fc.grid(d)?;
        let star = w_star(d, &grid);
        let mut header = vec!["rho".to_string()];
        header.extend(sigmas.iter().map(|&s| sigma_label("w", s)));
        header.push("w_star".into());
        let mut table = Table::with_header(&format!("critical_d{d}"), header);
        for (j, rho) in grid.nodes().into_iter().enumerate() {
            let mut row = vec![Cell::Num(rho)];
            row.extend(runs.iter().map(|(_, w)| Cell::opt(w.as_ref().map(|w| w.values()[j]))));
            row.push(Cell::Num(star.values()[j]));
            table.push(row);
        }
        report.tables.push(table);

        let diffs: Vec<(f64, Option<f64>)> = runs
            .iter()
            .map(|(r, _)| (r.sigma, r.get("sup_diff_to_star")))
            .collect();
        let converging = match (diffs.first(), diffs.last()) {
            (Some((_, Some(lo))), Some((_, Some(hi)))) if diffs.len() > 1 => Some(hi < lo),
            _ => None,
        };
        summary.insert(
            d.to_string(),
            json!({
                "sigma_star": s,
                "method_split": split,
                "sup_diff_to_star": diffs,
                "approaches_star": converging,
                "overlap": {
                    "sigma": split,
                    "sup_diff": overlap_diff,
                    "tolerance": OVERLAP_TOL,
                    "passed": overlap_diff.map(|x| x <= OVERLAP_TOL),
                    "errors": overlap.iter().filter_map(|(r, _)| r.error.clone()).collect::<Vec<_>>(),
                },
            }),
        );
        report.records.extend(runs.into_iter().map(|(rec, _)| rec));
    }
    report.summary = Value::Object(summary);
    Ok(report)
}

pub fn epsilon_curve(cfg: &RunConfig) -> Result<Report> {
    let mut points = Vec::new();
    for d in cfg.dims() {
        let sigmas = critical_sigmas(cfg, d, &[0.81, 0.84, 0.87, 0.9, 0.93, 0.96, 0.99]);
        points.extend(sigmas.into_iter().map(|s| (d, s)));
    }
    points.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let records: Vec<RunRecord> = par_map(&points, |&(d, sigma)| {
        let w_fc = w_config(cfg, d, &[sigma]);
        timed(d, sigma, "sup-norm", |rec| {
            rec.output("R", w_fc.radius);
            let flow = sup_norm_state(sigma, d, &w_fc, rec)?;
            let eps = flow.eps_bar.expect("sup-norm flow");
            let e0 = eps0(d, sigma)?;
            let bound = eps_upper_bound(d, sigma)?;
            let s = sigma_star(d);
            rec.output("eps0", e0);
            rec.output("gap", (eps - e0).abs() / e0);
            rec.output("ratio", eps / (s - sigma));
            rec.output("upper_bound", bound);
            if s - sigma >= SHOOTING_MARGIN {
                // a failed shot leaves the column empty rather than discarding the flow
                match find_epsilon(sigma, d, &rate_shooting()) {
                    Ok(shot) => {
                        rec.output("shooting_eps", shot);
                        rec.output("shooting_relative_diff", (shot - eps).abs() / shot);
                    }
                    Err(e) => log::warn!("shooting at d = {d}, sigma = {sigma}: {e}"),
                }
            }
            Ok(())
        })
        .0
    });

    let mut table = Table::new(
        "epsilon_curve",
        &[
            "d",
            "sigma",
            "eps_bar",
            "eps0",
            "shooting_eps",
            "gap",
            "ratio",
            "upper_bound",
            "bound_holds",
            "error",
        ],
    );
    let mut report = Report::default();
    let mut violations = Vec::new();
    for r in &records {
        let bound_ok = bound_holds(r, "eps_bar") && bound_holds(r, "shooting_eps");
        if !r.failed() && !bound_ok {
            violations.push(json!({ "d": r.d, "sigma": r.sigma }));
        }
        table.push(vec![
            r.d.into(),
            r.sigma.into(),
            Cell::opt(r.get("eps_bar")),
            Cell::opt(r.get("eps0")),
            Cell::opt(r.get("shooting_eps")),
            Cell::opt(r.get("gap")),
            Cell::opt(r.get("ratio")),
            Cell::opt(r.get("upper_bound")),
            if r.failed() { Cell::Empty } else { bound_ok.into() },
            r.error.clone().map_or(Cell::Empty, Cell::from),
        ]);
    }
    report.failures += violations.len();

    let mut per_d = serde_json::Map::new();
    for d in cfg.dims() {
        let rows: Vec<&RunRecord> = records.iter().filter(|r| r.d == d && !r.failed()).collect();
        let gaps: Vec<f64> = rows.iter().filter_map(|r| r.get("gap")).collect();
        let agreement: Vec<f64> = rows.iter().filter_map(|r| r.get("shooting_relative_diff")).collect();
        let max_diff = agreement.iter().copied().fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
        per_d.insert(
            d.to_string(),
            json!({
                "gap_first": gaps.first(),
                "gap_last": gaps.last(),
                "gap_shrinks_toward_star": match (gaps.first(), gaps.last()) {
                    (Some(a), Some(b)) if gaps.len() > 1 => Some(b < a),
                    _ => None,
                },
                "limit_ratio": ClosedFormCatalog::new(d).eps_prime_star.map(f64::abs),
                "max_shooting_relative_diff": max_diff,
                "three_digit_agreement": max_diff.map(|x| x <= 5e-4),
            }),
        );
    }
    report.summary = json!({ "dimensions": per_d, "bound_violations": violations });
    report.tables.push(table);
    report.records = records;
    Ok(report)
}

fn bound_holds(r: &RunRecord, key: &str) -> bool {
    match (r.get(key), r.get("upper_bound")) {
        (Some(e), Some(b)) => e > 0.0 && e <= b,
        _ => true,
    }
}

/// First radius in `(0, limit)` where the shot drops below `w*`, refined by bisection.
fn trajectory_crossing(traj: &Trajectory, d: usize, limit: f64) -> Option<f64> {
    let f = |rho: f64| traj.eval(rho) - aubin_talenti(d, rho).expect("d >= 5");
    let step = 1e-3;
    let mut lo = 1e-2;
    let end = limit.min(traj.end());
    let sign = f(lo) > 0.0;
    while lo + step < end {
        let hi = lo + step;
        if (f(hi) > 0.0) != sign {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                if (f(m) > 0.0) == sign {
                    a = m;
                } else {
                    b = m;
                }
            }
            return Some(0.5 * (a + b));
        }
        lo = hi;
    }
    None
}

pub fn crossing(cfg: &RunConfig) -> Result<Report> {
    let mut report = Report::default();
    let mut summary = serde_json::Map::new();
    for d in cfg.dims() {
        let rho0 = crossing_rho0(d)?;
        let s = sigma_star(d);
        let sigmas = critical_sigmas(cfg, d, &[0.93, 0.96, 0.99]);
        let w_fc = w_config(cfg, d, &sigmas);
        let grid = w_fc.grid(d)?;
        let star = w_star(d, &grid);
        let runs: Vec<(RunRecord, Option<RadialProfile>)> = par_map(&sigmas, |&sigma| {
            timed(d, sigma, "sup-norm", |rec| {
                let flow = sup_norm_state(sigma, d, &w_fc, rec)?;
                let diff = flow.profile.sub(&star)?;
                let zero = grid.zeros();
                if let Some(r) = diff.first_sign_change(&zero)? {
                    rec.output("flow_crossing", r);
                    rec.output("flow_deviation", (r - rho0).abs() / rho0);
                }
                if s - sigma >= SHOOTING_MARGIN {
                    match find_epsilon_detailed(sigma, d, &rate_shooting().recording()) {
                        Ok(root) => {
                            rec.output("shooting_eps", root.value);
                            let traj = root.outcome.trajectory.as_ref().expect("recording shot");
                            if let Some(r) = trajectory_crossing(traj, d, 50.0) {
                                rec.output("shooting_crossing", r);
                                rec.output("shooting_deviation", (r - rho0).abs() / rho0);
                            }
                        }
                        Err(e) => log::warn!("shooting at d = {d}, sigma = {sigma}: {e}"),
                    }
                }
                Ok(diff)
            })
        });

        let mut header = vec!["rho".to_string()];
        header.extend(sigmas.iter().map(|&s| sigma_label("diff", s)));
        header.push("correction_shape".into());
        let mut table = Table::with_header(&format!("crossing_d{d}"), header);
        for (j, rho) in grid.nodes().into_iter().enumerate() {
            let mut row = vec![Cell::Num(rho)];
            row.extend(runs.iter().map(|(_, w)| Cell::opt(w.as_ref().map(|w| w.values()[j]))));
            row.push(Cell::Num(-correction_term(d, rho)?));
            table.push(row);
        }
        report.tables.push(table);
        summary.insert(d.to_string(), json!({ "rho0": rho0, "sigma_star": s }));
        report.records.extend(runs.into_iter().map(|(rec, _)| rec));
    }

    let mut radii = Table::new(
        "crossing_radii",
        &[
            "d",
            "sigma",
            "flow_crossing",
            "shooting_crossing",
            "rho0",
            "flow_deviation",
            "shooting_deviation",
            "error",
        ],
    );
    for r in &report.records {
        radii.push(vec![
            r.d.into(),
            r.sigma.into(),
            Cell::opt(r.get("flow_crossing")),
            Cell::opt(r.get("shooting_crossing")),
            Cell::opt(crossing_rho0(r.d).ok()),
            Cell::opt(r.get("flow_deviation")),
            Cell::opt(r.get("shooting_deviation")),
            r.error.clone().map_or(Cell::Empty, Cell::from),
        ]);
    }
    report.tables.push(radii);
    report.summary = Value::Object(summary);
    Ok(report)
}
