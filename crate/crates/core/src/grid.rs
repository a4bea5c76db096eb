//! Staggered radial mesh, the discrete radial Laplacian and the weighted
//! quadrature used for every `L^p_r` norm.
//!
//! Unknowns live on the staggered nodes `r_{j+1/2} = (j + 1/2) h`,
//! `j = 0..M-1`. A ghost value `v_{-1/2} = v_{1/2}` encodes the Neumann
//! condition at the origin and `v_{M+1/2} = 0` the Dirichlet condition at
//! `R = (M + 1/2) h`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Surface area of the unit sphere in `R^d`, `2 pi^{d/2} / Gamma(d/2)`.
///
/// `Gamma(d/2)` is evaluated exactly through `Gamma(1/2) = sqrt(pi)`,
/// `Gamma(1) = 1` and the recursion `Gamma(x + 1) = x Gamma(x)`.
pub fn unit_sphere_area(d: usize) -> f64 {
    assert!(d >= 1, "dimension must be at least 1");
    let half = d as f64 / 2.0;
    let mut gamma = if d % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut x = if d % 2 == 0 { 1.0 } else { 0.5 };
    while x < half {
        gamma *= x;
        x += 1.0;
    }
    2.0 * PI.powf(half) / gamma
}

/// Truncated radial mesh with staggered unknowns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaggeredGrid {
    radius: f64,
    unknowns: usize,
    dim: usize,
    h: f64,
}

impl StaggeredGrid {
    /// Minimum number of unknowns accepted by [`StaggeredGrid::new`].
    pub const MIN_UNKNOWNS: usize = 4;

    pub fn new(radius: f64, unknowns: usize, dim: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidConfiguration(format!(
                "truncation radius must be positive, got {radius}"
            )));
        }
        if unknowns < Self::MIN_UNKNOWNS {
            return Err(Error::InvalidConfiguration(format!(
                "need at least {} unknowns, got {unknowns}",
                Self::MIN_UNKNOWNS
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidConfiguration("dimension must be >= 1".into()));
        }
        let h = 2.0 * radius / (2 * unknowns + 1) as f64;
        Ok(Self {
            radius,
            unknowns,
            dim,
            h,
        })
    }

    /// Grid whose mesh width is as close as possible to `h` (never coarser).
    pub fn with_spacing(radius: f64, h: f64, dim: usize) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidConfiguration(format!(
                "mesh width must be positive, got {h}"
            )));
        }
        let m = (radius / h - 0.5).ceil().max(Self::MIN_UNKNOWNS as f64) as usize;
        Self::new(radius, m, dim)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Number of unknowns `M`.
    pub fn len(&self) -> usize {
        self.unknowns
    }

    pub fn is_empty(&self) -> bool {
        self.unknowns == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Staggered node `r_{j+1/2}`.
    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.h
    }

    /// Regular node `r_j`.
    #[inline]
    pub fn face(&self, j: usize) -> f64 {
        j as f64 * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.unknowns).map(|j| self.node(j)).collect()
    }

    /// Midpoint quadrature weights `C(d) h r_{j+1/2}^{d-1}`.
    pub fn weights(&self) -> Vec<f64> {
        let c = unit_sphere_area(self.dim) * self.h;
        let p = self.dim as i32 - 1;
        (0..self.unknowns).map(|j| c * self.node(j).powi(p)).collect()
    }

    /// Coefficients of the staggered Laplacian stencil, row by row:
    /// `(Delta v)_j = up_j (v_{j+1} - v_j) + low_j (v_{j-1} - v_j)`.
    ///
    /// `low_0` multiplies the ghost difference, which vanishes; it is
    /// returned as zero.
    pub(crate) fn stencil(&self) -> (Vec<f64>, Vec<f64>) {
        let inv_h2 = 1.0 / (self.h * self.h);
        let p = self.dim as i32 - 1;
        let mut low = Vec::with_capacity(self.unknowns);
        let mut up = Vec::with_capacity(self.unknowns);
        for j in 0..self.unknowns {
            let mid = j as f64 + 0.5;
            low.push(if j == 0 {
                0.0
            } else {
                (j as f64 / mid).powi(p) * inv_h2
            });
            up.push(((j + 1) as f64 / mid).powi(p) * inv_h2);
        }
        (low, up)
    }

    /// Samples `f` on the staggered nodes.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> RadialProfile {
        RadialProfile {
            grid: *self,
            values: (0..self.unknowns).map(|j| f(self.node(j))).collect(),
        }
    }

    pub fn zeros(&self) -> RadialProfile {
        RadialProfile {
            grid: *self,
            values: vec![0.0; self.unknowns],
        }
    }
}

/// Radial function sampled on the staggered nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    grid: StaggeredGrid,
    values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(grid: StaggeredGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite sample at node {j}")));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_parts(grid: StaggeredGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &StaggeredGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map(|v| factor * v)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Value at the origin from the even parabola through the first two
    /// samples: `(9 v_{1/2} - v_{3/2}) / 8`.
    pub fn center_value(&self) -> f64 {
        (9.0 * self.values[0] - self.values[1]) / 8.0
    }

    /// Largest absolute sample, including the extrapolated center value.
    pub fn sup_norm(&self) -> f64 {
        self.values
            .iter()
            .fold(self.center_value().abs(), |m, v| m.max(v.abs()))
    }

    /// `(C(d) sum_j h r_{j+1/2}^{d-1} |v_j|^p)^{1/p}`; `p = inf` gives
    /// [`RadialProfile::sup_norm`].
    pub fn lp_norm(&self, p: f64) -> f64 {
        assert!(p >= 1.0, "exponent must be >= 1, got {p}");
        if p.is_infinite() {
            return self.sup_norm();
        }
        self.lp_norm_pow(p).powf(1.0 / p)
    }

    /// `||v||_{L^p_r}^p` without the final root.
    pub fn lp_norm_pow(&self, p: f64) -> f64 {
        let c = unit_sphere_area(self.grid.dim) * self.grid.h;
        let q = self.grid.dim as i32 - 1;
        let sum: f64 = self
            .values
            .iter()
            .enumerate()
            .map(|(j, v)| self.grid.node(j).powi(q) * v.abs().powf(p))
            .sum();
        c * sum
    }

    /// Weighted inner product `C(d) sum_j h r_{j+1/2}^{d-1} u_j v_j`.
    pub fn inner_product(&self, other: &Self) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(weighted_dot(&self.grid, &self.values, &other.values))
    }

    /// Discrete Dirichlet form `-<Delta_h v, v>`, the discrete `||v'||^2_{L^2_r}`.
    pub fn dirichlet_energy(&self) -> f64 {
        let g = &self.grid;
        let c = unit_sphere_area(g.dim) / g.h;
        let q = g.dim as i32 - 1;
        let m = g.len();
        let mut sum = 0.0;
        for f in 1..=m {
            let right = if f < m { self.values[f] } else { 0.0 };
            let diff = right - self.values[f - 1];
            sum += g.face(f).powi(q) * diff * diff;
        }
        c * sum
    }

    /// Discrete radial Laplacian `Delta_r^h v` with the ghost rules applied.
    pub fn laplacian(&self) -> Self {
        let (low, up) = self.grid.stencil();
        let v = &self.values;
        let m = v.len();
        let values = (0..m)
            .map(|j| {
                let right = if j + 1 < m { v[j + 1] } else { 0.0 };
                let left = if j > 0 { v[j - 1] } else { v[0] };
                up[j] * (right - v[j]) + low[j] * (left - v[j])
            })
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    /// Smallest radius at which `self - other` changes sign, by linear
    /// interpolation between neighbouring nodes.
    pub fn first_sign_change(&self, other: &Self) -> Result<Option<f64>> {
        self.check_same_grid(other)?;
        let diff: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(first_root(&self.grid, &diff))
    }

    /// Monotone cubic interpolant through the samples, evenly extended to
    /// negative radii and vanishing at and beyond `R`.
    pub fn interpolant(&self) -> MonotoneCubic {
        let g = &self.grid;
        let m = g.len();
        let mut xs = Vec::with_capacity(m + 2);
        let mut ys = Vec::with_capacity(m + 2);
        xs.push(-0.5 * g.h);
        ys.push(self.values[0]);
        for j in 0..m {
            xs.push(g.node(j));
            ys.push(self.values[j]);
        }
        xs.push(g.radius);
        ys.push(0.0);
        MonotoneCubic::new(xs, ys)
    }
}

pub(crate) fn weighted_dot(grid: &StaggeredGrid, u: &[f64], v: &[f64]) -> f64 {
    let c = unit_sphere_area(grid.dim) * grid.h;
    let q = grid.dim as i32 - 1;
    let sum: f64 = u
        .iter()
        .zip(v)
        .enumerate()
        .map(|(j, (a, b))| grid.node(j).powi(q) * a * b)
        .sum();
    c * sum
}

fn first_root(grid: &StaggeredGrid, diff: &[f64]) -> Option<f64> {
    // skip leading exact zeros so a vanishing prefix does not count as a crossing
    let start = diff.iter().position(|&x| x != 0.0)?;
    let mut prev_j = start;
    for j in start + 1..diff.len() {
        let (a, b) = (diff[prev_j], diff[j]);
        if b == 0.0 {
            continue;
        }
        if a.signum() != b.signum() {
            let (ra, rb) = (grid.node(prev_j), grid.node(j));
            return Some(ra + (rb - ra) * a / (a - b));
        }
        prev_j = j;
    }
    None
}

/// Piecewise cubic Hermite interpolant with Fritsch–Carlson slopes.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        assert_eq!(xs.len(), ys.len());
        assert!(xs.len() >= 2);
        let n = xs.len();
        let delta: Vec<f64> = (0..n - 1)
            .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
            .collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = delta[0];
        slopes[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            let (d0, d1) = (delta[i - 1], delta[i]);
            if d0 * d1 <= 0.0 {
                slopes[i] = 0.0;
            } else {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let w0 = 2.0 * h1 + h0;
                let w1 = h1 + 2.0 * h0;
                slopes[i] = (w0 + w1) / (w0 / d0 + w1 / d1);
            }
        }
        Self { xs, ys, slopes }
    }

    /// Value at `x`; zero beyond the last knot, first value before the first.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x >= self.xs[n - 1] {
            return if x == self.xs[n - 1] { self.ys[n - 1] } else { 0.0 };
        }
        if x <= self.xs[0] {
            return self.ys[0];
        }
        let i = match self.xs.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => return self.ys[i],
            Err(i) => i - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i]
            + h10 * h * self.slopes[i]
            + h01 * self.ys[i + 1]
            + h11 * h * self.slopes[i + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn surface_constants_match_table() {
        assert_relative_eq!(unit_sphere_area(1), 2.0, epsilon = 1e-15);
        assert_relative_eq!(unit_sphere_area(2), 2.0 * PI, epsilon = 1e-14);
        assert_relative_eq!(unit_sphere_area(3), 4.0 * PI, epsilon = 1e-14);
        assert_relative_eq!(unit_sphere_area(4), 2.0 * PI * PI, epsilon = 1e-13);
        assert_relative_eq!(unit_sphere_area(5), 8.0 * PI * PI / 3.0, epsilon = 1e-13);
        // |S^5| = pi^3
        assert_relative_eq!(unit_sphere_area(6), PI.powi(3), epsilon = 1e-12);
    }

    #[test]
    fn mesh_width_and_boundary_node() {
        let g = StaggeredGrid::new(15.0, 1499, 2).unwrap();
        assert_relative_eq!(g.h(), 30.0 / 2999.0, epsilon = 1e-16);
        assert!((g.h() - 0.0100033).abs() < 1e-7);

        let g = StaggeredGrid::new(10.0, 9, 3).unwrap();
        assert_relative_eq!(g.node(9), 10.0, epsilon = 1e-14);
        assert!(g.node(8) < 10.0 && g.node(8) > 0.0);
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(matches!(
            StaggeredGrid::new(0.0, 100, 1),
            Err(Error::InvalidConfiguration(_))
        ));
        assert!(matches!(
            StaggeredGrid::new(-1.0, 100, 1),
            Err(Error::InvalidConfiguration(_))
        ));
        assert!(matches!(
            StaggeredGrid::new(1.0, 3, 1),
            Err(Error::InvalidConfiguration(_))
        ));
        assert!(StaggeredGrid::new(1.0, 10, 0).is_err());
    }

    #[test]
    fn one_dimensional_stencil_is_second_difference() {
        let g = StaggeredGrid::new(10.0, 200, 1).unwrap();
        let v = g.sample(f64::sin);
        let lap = v.laplacian();
        let h2 = g.h() * g.h();
        for j in 1..g.len() - 1 {
            let expected = (v.values()[j + 1] - 2.0 * v.values()[j] + v.values()[j - 1]) / h2;
            assert_relative_eq!(lap.values()[j], expected, epsilon = 1e-9);
        }
    }

    #[test]
    fn constants_are_harmonic_except_at_boundary() {
        for d in 1..=5 {
            let g = StaggeredGrid::new(5.0, 50, d).unwrap();
            let lap = g.sample(|_| 3.0).laplacian();
            for j in 0..g.len() - 1 {
                assert!(lap.values()[j].abs() < 1e-9, "d={d} j={j}");
            }
            assert!(lap.values()[g.len() - 1] < 0.0);
        }
    }

    #[test]
    fn quadratic_in_three_dimensions() {
        // interior rows: 6 + h^2 / (2 r^2) exactly
        let g = StaggeredGrid::new(5.0, 100, 3).unwrap();
        let lap = g.sample(|r| r * r).laplacian();
        let h = g.h();
        for j in 1..g.len() - 1 {
            let r = g.node(j);
            assert_relative_eq!(lap.values()[j], 6.0 + h * h / (2.0 * r * r), epsilon = 1e-8);
        }
    }

    #[test]
    fn gausson_norms() {
        let g = StaggeredGrid::new(15.0, 1499, 1).unwrap();
        let u0 = g.sample(|r| ((1.0 - r * r) / 2.0).exp());
        let e_sqrt_pi = std::f64::consts::E * PI.sqrt();
        assert_relative_eq!(u0.lp_norm_pow(2.0), e_sqrt_pi, max_relative = 1e-5);
        assert_relative_eq!(u0.lp_norm(2.0), e_sqrt_pi.sqrt(), max_relative = 1e-5);
        assert_eq!(g.zeros().lp_norm(2.0), 0.0);
        assert_eq!(g.zeros().lp_norm(f64::INFINITY), 0.0);
    }

    #[test]
    fn center_value_extrapolation() {
        let g = StaggeredGrid::new(3.0, 100, 2).unwrap();
        assert_relative_eq!(g.sample(|_| 4.2).center_value(), 4.2, epsilon = 1e-14);
        assert_relative_eq!(g.sample(|r| 1.0 - r * r).center_value(), 1.0, epsilon = 1e-14);

        let g = StaggeredGrid::with_spacing(10.0, 0.01, 2).unwrap();
        let u0 = g.sample(|r| ((2.0 - r * r) / 2.0).exp());
        assert!((u0.center_value() - std::f64::consts::E).abs() < 1e-4);
    }

    #[test]
    fn sign_change_location() {
        let g = StaggeredGrid::new(4.0, 400, 1).unwrap();
        let u = g.sample(|r| 1.0 - r);
        let z = g.zeros();
        assert_eq!(u.first_sign_change(&u).unwrap(), None);
        let r = u.first_sign_change(&z).unwrap().unwrap();
        assert!((r - 1.0).abs() < g.h());
    }

    #[test]
    fn dirichlet_energy_is_minus_laplacian_form() {
        let g = StaggeredGrid::new(6.0, 80, 3).unwrap();
        let v = g.sample(|r| (-(r * r)).exp() * (1.0 + r));
        let form = -v.laplacian().inner_product(&v).unwrap();
        assert_relative_eq!(v.dirichlet_energy(), form, max_relative = 1e-12);
    }

    #[test]
    fn interpolant_reproduces_nodes_and_vanishes_outside() {
        let g = StaggeredGrid::new(8.0, 200, 2).unwrap();
        let v = g.sample(|r| (-r * r / 2.0).exp());
        let p = v.interpolant();
        for j in [0, 5, 100, 199] {
            assert_relative_eq!(p.eval(g.node(j)), v.values()[j], epsilon = 1e-15);
        }
        assert_eq!(p.eval(8.5), 0.0);
        let mid = 0.5 * (g.node(10) + g.node(11));
        assert!((p.eval(mid) - (-mid * mid / 2.0).exp()).abs() < 1e-6);
    }

    #[test]
    fn profile_construction_validates() {
        let g = StaggeredGrid::new(1.0, 10, 1).unwrap();
        assert!(matches!(
            RadialProfile::new(g, vec![0.0; 9]),
            Err(Error::DimensionMismatch { .. })
        ));
        let mut bad = vec![0.0; 10];
        bad[3] = f64::NAN;
        assert!(RadialProfile::new(g, bad).is_err());
        let other = StaggeredGrid::new(2.0, 10, 1).unwrap();
        assert_eq!(
            g.zeros().inner_product(&other.zeros()),
            Err(Error::GridMismatch)
        );
    }
}
