//! Flow against shooting on the ground-state equation.

use groundstate_core::closed_forms::soliton_1d;
use groundstate_core::shooting::{find_alpha_detailed, trajectory_pohozaev, ShootingConfig};
use serde_json::json;

use super::{flow_config, ground_state, par_map};
use crate::config::RunConfig;
use crate::error::Result;
use crate::output::{timed, Cell, Report, RunRecord, Table};

const DEFAULT_POINTS: [(usize, f64); 6] = [(1, 0.5), (1, 1.0), (1, 2.0), (2, 1.0), (3, 0.5), (3, 1.0)];
const SUP_TOL: f64 = 5e-3;

pub fn oracle_compare(cfg: &RunConfig) -> Result<Report> {
    let mut points: Vec<(usize, f64)> = match (&cfg.dims, &cfg.sigmas) {
        (None, None) => DEFAULT_POINTS.to_vec(),
        _ => {
            let sigmas = cfg.sigmas.clone().unwrap_or_else(|| vec![0.5, 1.0]);
            cfg.dims()
                .into_iter()
                .flat_map(|d| sigmas.iter().map(move |&s| (d, s)))
                .collect()
        }
    };
    points.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let fc = flow_config(cfg, 20.0, 0.01);

    let records: Vec<RunRecord> = par_map(&points, |&(d, sigma)| {
        timed(d, sigma, "nehari+shooting", |rec| {
            let u = ground_state(sigma, d, &fc, rec)?;
            rec.output("alpha_flow", u.center_value());
            let root = find_alpha_detailed(sigma, d, &ShootingConfig::for_amplitude().recording())?;
            rec.output("alpha_shoot", root.value);
            let traj = root.outcome.trajectory.as_ref().expect("recording shot");
            // compare where the shot is still meaningful
            let end = traj.end();
            let diff = u
                .grid()
                .nodes()
                .into_iter()
                .zip(u.values())
                .filter(|(r, _)| *r <= end)
                .map(|(r, v)| (v - traj.eval(r)).abs())
                .fold(0.0, f64::max);
            rec.output("sup_diff", diff);
            let (p1, p2) = trajectory_pohozaev(traj, d, sigma, 1.0 / sigma, 1.0 / sigma);
            rec.output("pohozaev_res1", p1);
            rec.output("pohozaev_res2", p2);
            if d == 1 {
                rec.output("alpha_exact", soliton_1d(sigma, 0.0)?);
            }
            Ok(())
        })
        .0
    });

    let mut table = Table::new(
        "oracle_compare",
        &[
            "d",
            "sigma",
            "alpha_flow",
            "alpha_shoot",
            "alpha_exact",
            "sup_diff",
            "pohozaev_res1",
            "pohozaev_res2",
            "within_tolerance",
            "iterations",
            "error",
        ],
    );
    let mut worst: f64 = 0.0;
    for r in &records {
        let ok = r.get("sup_diff").map(|x| x <= SUP_TOL);
        if let Some(x) = r.get("sup_diff") {
            worst = worst.max(x);
        }
        table.push(vec![
            r.d.into(),
            r.sigma.into(),
            Cell::opt(r.get("alpha_flow")),
            Cell::opt(r.get("alpha_shoot")),
            Cell::opt(r.get("alpha_exact")),
            Cell::opt(r.get("sup_diff")),
            Cell::opt(r.get("pohozaev_res1")),
            Cell::opt(r.get("pohozaev_res2")),
            ok.map_or(Cell::Empty, Cell::from),
            r.iterations.map_or(Cell::Empty, Cell::from),
            r.error.clone().map_or(Cell::Empty, Cell::from),
        ]);
    }

    Ok(Report {
        tables: vec![table],
        records,
        summary: json!({ "sup_tolerance": SUP_TOL, "worst_sup_diff": worst }),
        ..Report::default()
    })
}
