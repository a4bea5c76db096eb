use proptest::prelude::*;

use crate::{MonotoneCubic, RadialProfile, StaggeredGrid, TridiagonalOperator};

fn grid_strategy() -> impl Strategy<Value = StaggeredGrid> {
    (1.0f64..40.0, 4usize..300, 1usize..8).prop_map(|(r, m, d)| StaggeredGrid::new(r, m, d).unwrap())
}

fn profile(grid: StaggeredGrid, seed: &[f64]) -> RadialProfile {
    let values = (0..grid.len()).map(|j| seed[j % seed.len()] * (1.0 + j as f64).sin()).collect();
    RadialProfile::new(grid, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn last_node_sits_on_the_boundary(g in grid_strategy()) {
        let r = g.radius();
        prop_assert!(((g.len() as f64 + 0.5) * g.h() - r).abs() <= 1e-12 * r);
        prop_assert!(g.node(g.len() - 1) < r);
    }

    #[test]
    fn laplacian_kills_constants_away_from_the_boundary(g in grid_strategy(), c in -5.0f64..5.0) {
        let lap = g.sample(|_| c).laplacian();
        let m = g.len();
        let scale = c.abs() / (g.h() * g.h()) + 1.0;
        for v in &lap.values()[..m - 1] {
            prop_assert!(v.abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn laplacian_is_self_adjoint(
        g in grid_strategy(),
        a in prop::collection::vec(-1.0f64..1.0, 1..20),
        b in prop::collection::vec(-1.0f64..1.0, 1..20),
    ) {
        let u = profile(g, &a);
        let v = profile(g, &b);
        let left = u.laplacian().inner_product(&v).unwrap();
        let right = u.inner_product(&v.laplacian()).unwrap();
        let scale = left.abs().max(right.abs()).max(1e-300);
        prop_assert!((left - right).abs() <= 1e-9 * scale + 1e-12);
    }

    #[test]
    fn dominant_systems_are_solved_to_round_off(
        x in prop::collection::vec(-10.0f64..10.0, 2..200),
        seed in 0u64..1000,
    ) {
        let n = x.len();
        let f = |k: usize| ((k as u64 * 7919 + seed) % 1000) as f64 / 1000.0 - 0.5;
        let sub: Vec<f64> = (0..n - 1).map(|k| f(k)).collect();
        let sup: Vec<f64> = (0..n - 1).map(|k| f(k + n)).collect();
        let diag: Vec<f64> = (0..n).map(|k| 1.5 + f(k + 2 * n).abs()).collect();
        let a = TridiagonalOperator::new(sub, diag, sup).unwrap();
        let rhs = a.apply_slice(&x);
        let y = a.solve_slice(&rhs).unwrap();
        let norm = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for (p, q) in x.iter().zip(&y) {
            prop_assert!((p - q).abs() <= 1e-12 * norm);
        }
    }

    #[test]
    fn norms_scale_homogeneously(g in grid_strategy(), c in 0.1f64..10.0, p in 1.0f64..6.0) {
        let u = g.sample(|r| (-r * r / 4.0).exp());
        let lhs = u.scaled(c).lp_norm(p);
        let rhs = c * u.lp_norm(p);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
    }

    #[test]
    fn interpolant_preserves_monotone_data(steps in prop::collection::vec(0.0f64..1.0, 3..40)) {
        let xs: Vec<f64> = (0..steps.len()).map(|k| k as f64 * 0.5).collect();
        let mut ys = Vec::with_capacity(steps.len());
        let mut acc = 10.0;
        for s in &steps {
            acc -= s;
            ys.push(acc);
        }
        let spline = MonotoneCubic::new(xs.clone(), ys.clone());
        let end = *xs.last().unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..=400 {
            let x = end * k as f64 / 400.0;
            let y = spline.eval(x);
            prop_assert!(y <= prev + 1e-12);
            prop_assert!(y >= ys[ys.len() - 1] - 1e-12 && y <= ys[0] + 1e-12);
            prev = y;
        }
    }
}
