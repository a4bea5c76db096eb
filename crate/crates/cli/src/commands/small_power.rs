//! Commands on the small-power side: amplitude sweeps, profiles against the
//! Gausson, and slopes at sigma = 0.

use groundstate_core::closed_forms::{critical_power, gausson, mu0_positive_roots, ClosedFormCatalog};
use groundstate_core::diagnostics::{secant_slope, slope_at_zero};
use groundstate_core::RadialProfile;
use serde_json::{json, Value};

use super::{flow_config, ground_state, par_map, sigma_label};
use crate::config::RunConfig;
use crate::error::Result;
use crate::output::{timed, Cell, Report, RunRecord, Table};

const SWEEP_POINTS: usize = 40;
const SWEEP_MIN: f64 = 0.02;

/// Largest default sweep power; d = 3, 4 stop where the flow becomes stiff.
fn sweep_cap(d: usize) -> f64 {
    let cap = critical_power(d).map_or(8.0, |s| (0.97 * s).min(8.0));
    match d {
        3 => cap.min(1.6),
        4 => cap.min(0.9),
        _ => cap,
    }
}

fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Default `(R, h)` for a sweep point: wider boxes for the slow exponential
/// tails of large powers in d = 1, 2, finer meshes for the peaked profiles
/// in the upper half of the subcritical range.
fn sweep_grid(d: usize, sigma: f64) -> (f64, f64) {
    match critical_power(d) {
        None => (15.0 * sigma.sqrt().max(1.0), 0.01),
        Some(s) if sigma > 0.5 * s => (15.0, 0.002),
        Some(_) => (15.0, 0.01),
    }
}

/// Shape of a sequence: `increasing`, `decreasing`, `decreasing-then-increasing`, or `mixed`.
fn trend(values: &[f64]) -> &'static str {
    let signs: Vec<bool> = values.windows(2).map(|w| w[1] > w[0]).collect();
    if signs.is_empty() {
        return "undetermined";
    }
    let turn = signs.iter().position(|&up| up).unwrap_or(signs.len());
    if signs[turn..].iter().all(|&up| up) {
        match turn {
            0 => "increasing",
            t if t == signs.len() => "decreasing",
            _ => "decreasing-then-increasing",
        }
    } else {
        "mixed"
    }
}

fn expected_trend(d: usize) -> &'static str {
    match d {
        1 | 2 => "decreasing",
        3 => "decreasing-then-increasing",
        _ => "increasing",
    }
}

pub fn sweep_max(cfg: &RunConfig) -> Result<Report> {
    let mut points = Vec::new();
    for d in cfg.dims() {
        let sigmas = cfg
            .sigmas
            .clone()
            .unwrap_or_else(|| log_spaced(SWEEP_MIN, sweep_cap(d), SWEEP_POINTS));
        points.extend(sigmas.into_iter().map(|s| (d, s)));
    }
    points.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let records: Vec<RunRecord> = par_map(&points, |&(d, sigma)| {
        let (radius, h) = sweep_grid(d, sigma);
        let fc = flow_config(cfg, radius, h);
        let (mut rec, _) = timed(d, sigma, "nehari", |rec| ground_state(sigma, d, &fc, rec));
        rec.output("R", fc.radius);
        rec.output("M", fc.unknowns as f64);
        rec
    });

    let mut table = Table::new(
        "sweep_max",
        &["d", "sigma", "alpha", "residual", "equation_residual", "iterations", "error"],
    );
    for r in &records {
        table.push(vec![
            r.d.into(),
            r.sigma.into(),
            Cell::opt(r.get("alpha")),
            Cell::opt(r.get("residual")),
            Cell::opt(r.get("equation_residual")),
            r.iterations.map_or(Cell::Empty, Cell::from),
            r.error.clone().map_or(Cell::Empty, Cell::from),
        ]);
    }

    let mut trends = serde_json::Map::new();
    for d in cfg.dims() {
        let curve: Vec<(f64, f64)> = records
            .iter()
            .filter(|r| r.d == d)
            .filter_map(|r| r.get("alpha").map(|a| (r.sigma, a)))
            .collect();
        let alphas: Vec<f64> = curve.iter().map(|p| p.1).collect();
        let observed = trend(&alphas);
        let minimum = curve.iter().copied().min_by(|a, b| a.1.total_cmp(&b.1));
        trends.insert(
            d.to_string(),
            json!({
                "observed": observed,
                "expected": expected_trend(d),
                "matches": observed == expected_trend(d),
                "points": curve.len(),
                "sigma_at_min_alpha": minimum.map(|m| m.0),
                "min_alpha": minimum.map(|m| m.1),
                "alpha0": ClosedFormCatalog::new(d).alpha0,
            }),
        );
    }
    if let Some(t) = trends.values().find(|t| t["matches"] == json!(false)) {
        log::warn!("amplitude trend differs from the expected shape: {t}");
    }

    Ok(Report {
        tables: vec![table],
        records,
        summary: json!({ "trend": trends }),
        ..Report::default()
    })
}

const PROFILE_SIGMAS: [f64; 8] = [0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 4.0, 8.0];

/// Least-squares slope of `ln u` on `[4, 6]`, compared with `-r` at r = 5 for the Gausson.
fn tail_log_slope(u: &RadialProfile) -> Option<f64> {
    let pts: Vec<(f64, f64)> = u
        .grid()
        .nodes()
        .into_iter()
        .zip(u.values())
        .filter(|(r, v)| (4.0..=6.0).contains(r) && **v > 0.0)
        .map(|(r, v)| (r, v.ln()))
        .collect();
    secant_slope(&pts).ok()
}

pub fn profiles(cfg: &RunConfig) -> Result<Report> {
    let mut report = Report::default();
    let mut summary = serde_json::Map::new();
    for d in cfg.dims() {
        let sigmas = cfg.sigmas.clone().unwrap_or_else(|| {
            let cap = critical_power(d).unwrap_or(f64::INFINITY);
            PROFILE_SIGMAS.iter().copied().filter(|&s| s < cap).collect()
        });
        let fc = flow_config(cfg, 30.0, 0.01);
        let runs: Vec<(RunRecord, Option<RadialProfile>)> = par_map(&sigmas, |&sigma| {
            timed(d, sigma, "nehari", |rec| {
                let u = ground_state(sigma, d, &fc, rec)?;
                let u0 = u.grid().sample(|r| gausson(d, r));
                if let Some(r) = u.first_sign_change(&u0)? {
                    rec.output("crossing_radius", r);
                }
                if let Some(s) = tail_log_slope(&u) {
                    rec.output("tail_log_slope", s);
                }
                Ok(u)
            })
        });

        let grid = fc.grid(d)?;
        let mut header = vec!["r".to_string()];
        header.extend(sigmas.iter().map(|&s| sigma_label("u", s)));
        header.push("u0".into());
        let mut table = Table::with_header(&format!("profiles_d{d}"), header);
        for (j, r) in grid.nodes().into_iter().enumerate() {
            let mut row = vec![Cell::Num(r)];
            row.extend(runs.iter().map(|(_, u)| Cell::opt(u.as_ref().map(|u| u.values()[j]))));
            row.push(Cell::Num(gausson(d, r)));
            table.push(row);
        }
        report.tables.push(table);

        let limit = mu0_positive_roots(d).first().copied();
        summary.insert(
            d.to_string(),
            json!({ "limit_crossing_radius": limit, "gausson_tail_log_slope": -5.0 }),
        );
        report.records.extend(runs.into_iter().map(|(rec, _)| rec));
    }

    let mut crossings = Table::new(
        "profiles_crossings",
        &[
            "d",
            "sigma",
            "alpha",
            "crossing_radius",
            "limit_crossing_radius",
            "tail_log_slope",
            "gausson_tail_log_slope",
            "error",
        ],
    );
    for r in &report.records {
        crossings.push(vec![
            r.d.into(),
            r.sigma.into(),
            Cell::opt(r.get("alpha")),
            Cell::opt(r.get("crossing_radius")),
            Cell::opt(mu0_positive_roots(r.d).first().copied()),
            Cell::opt(r.get("tail_log_slope")),
            Cell::Num(-5.0),
            r.error.clone().map_or(Cell::Empty, Cell::from),
        ]);
    }
    report.tables.push(crossings);
    report.summary = Value::Object(summary);
    Ok(report)
}

const SLOPE_SIGMAS: [f64; 9] = [0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.1];

pub fn slope_check(cfg: &RunConfig) -> Result<Report> {
    let sigmas = cfg.sigmas.clone().unwrap_or_else(|| SLOPE_SIGMAS.to_vec());
    let mut points: Vec<(usize, f64)> = cfg
        .dims()
        .into_iter()
        .flat_map(|d| sigmas.iter().map(move |&s| (d, s)))
        .collect();
    points.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let fc = flow_config(cfg, 12.0, 0.01);

    let records: Vec<RunRecord> = par_map(&points, |&(d, sigma)| {
        let alpha0 = ClosedFormCatalog::new(d).alpha0;
        timed(d, sigma, "nehari", |rec| {
            let u = ground_state(sigma, d, &fc, rec)?;
            rec.output("ratio", u.center_value() / alpha0);
            Ok(())
        })
        .0
    });

    let mut ratios = Table::new(
        "slope_check",
        &["d", "sigma", "alpha", "alpha0", "ratio", "residual", "iterations", "error"],
    );
    for r in &records {
        ratios.push(vec![
            r.d.into(),
            r.sigma.into(),
            Cell::opt(r.get("alpha")),
            Cell::Num(ClosedFormCatalog::new(r.d).alpha0),
            Cell::opt(r.get("ratio")),
            Cell::opt(r.get("residual")),
            r.iterations.map_or(Cell::Empty, Cell::from),
            r.error.clone().map_or(Cell::Empty, Cell::from),
        ]);
    }

    let mut fits = Table::new(
        "slope_fit",
        &["d", "points", "fitted_slope", "secant_slope", "expected_slope", "deviation", "within_tolerance"],
    );
    let mut summary = serde_json::Map::new();
    for d in cfg.dims() {
        let pts: Vec<(f64, f64)> = records
            .iter()
            .filter(|r| r.d == d)
            .filter_map(|r| r.get("ratio").map(|y| (r.sigma, y)))
            .collect();
        let df = d as f64;
        let expected = df * (df - 4.0) / 12.0;
        let fitted = slope_at_zero(&pts).ok();
        let secant = secant_slope(&pts).ok();
        // relative deviation, absolute where the expected slope vanishes
        let deviation = fitted.map(|s| {
            if expected == 0.0 {
                s.abs()
            } else {
                ((s - expected) / expected).abs()
            }
        });
        let tolerance = if expected == 0.0 { 0.03 } else { 0.1 };
        let ok = deviation.map(|x| x <= tolerance);
        fits.push(vec![
            d.into(),
            pts.len().into(),
            Cell::opt(fitted),
            Cell::opt(secant),
            Cell::Num(expected),
            Cell::opt(deviation),
            ok.map_or(Cell::Empty, Cell::from),
        ]);
        summary.insert(
            d.to_string(),
            json!({
                "fitted_slope": fitted,
                "secant_slope": secant,
                "expected_slope": expected,
                "deviation": deviation,
                "tolerance": tolerance,
                "within_tolerance": ok,
            }),
        );
    }
    let summary = Value::Object(summary);

    Ok(Report {
        tables: vec![ratios, fits],
        records,
        documents: vec![("slope_check_summary".into(), json!({ "slopes": summary.clone() }))],
        summary,
        ..Report::default()
    })
}
