//! Tridiagonal operators on staggered profiles and their direct solver.

use crate::error::{Error, Result};
use crate::grid::{RadialProfile, StaggeredGrid};

/// Diagonal term added to `shift I - Delta_h` by [`assemble_operator`].
#[derive(Debug, Clone, Copy)]
pub enum Potential<'a> {
    Zero,
    Constant(f64),
    Samples(&'a [f64]),
}

/// Linear map `y_i = sub_{i-1} x_{i-1} + diag_i x_i + sup_i x_{i+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
}

impl TridiagonalOperator {
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(Error::InvalidConfiguration("empty operator".into()));
        }
        for band in [&sub, &sup] {
            if band.len() + 1 != n {
                return Err(Error::DimensionMismatch {
                    expected: n - 1,
                    actual: band.len(),
                });
            }
        }
        Ok(Self { sub, diag, sup })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            sub: vec![0.0; n.saturating_sub(1)],
            diag: vec![1.0; n],
            sup: vec![0.0; n.saturating_sub(1)],
        }
    }

    /// `-Delta_h` on `grid`, ghost rules folded into the first and last rows.
    pub fn negative_laplacian(grid: &StaggeredGrid) -> Self {
        let (low, up) = grid.stencil();
        let m = grid.len();
        let diag = (0..m).map(|j| low[j] + up[j]).collect();
        let sub = (1..m).map(|j| -low[j]).collect();
        let sup = (0..m - 1).map(|j| -up[j]).collect();
        Self { sub, diag, sup }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn sub(&self) -> &[f64] {
        &self.sub
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn sup(&self) -> &[f64] {
        &self.sup
    }

    /// Copy of `self` with `extra(i)` added to each diagonal entry.
    pub fn with_diagonal(&self, extra: impl Fn(usize) -> f64) -> Self {
        Self {
            sub: self.sub.clone(),
            diag: self.diag.iter().enumerate().map(|(i, d)| d + extra(i)).collect(),
            sup: self.sup.clone(),
        }
    }

    pub fn apply_slice(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.sup[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    pub fn apply(&self, v: &RadialProfile) -> Result<RadialProfile> {
        self.check_len(v.values().len())?;
        Ok(RadialProfile::from_parts(*v.grid(), self.apply_slice(v.values())))
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.sub[i - 1].abs();
                }
                if i + 1 < n {
                    s += self.sup[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    /// Interval containing every eigenvalue (Gershgorin discs).
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut radius = 0.0;
            if i > 0 {
                radius += self.sub[i - 1].abs();
            }
            if i + 1 < n {
                radius += self.sup[i].abs();
            }
            lo = lo.min(self.diag[i] - radius);
            hi = hi.max(self.diag[i] + radius);
        }
        (lo, hi)
    }

    /// Thomas elimination without pivoting. Fails on an exactly zero pivot.
    pub fn solve_unchecked(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        self.check_len(rhs.len())?;
        let mut c = vec![0.0; n];
        let mut x = vec![0.0; n];
        let mut pivot = self.diag[0];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::SingularSystem { row: 0 });
        }
        if n > 1 {
            c[0] = self.sup[0] / pivot;
        }
        x[0] = rhs[0] / pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.sub[i - 1] * c[i - 1];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::SingularSystem { row: i });
            }
            if i + 1 < n {
                c[i] = self.sup[i] / pivot;
            }
            x[i] = (rhs[i] - self.sub[i - 1] * x[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        Ok(x)
    }

    /// Direct solve followed by a backward-error check
    /// `||A x - b||_inf <= 1e-11 (||A||_inf ||x||_inf + ||b||_inf)`.
    pub fn solve_slice(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let x = self.solve_unchecked(rhs)?;
        let ax = self.apply_slice(&x);
        let residual = ax
            .iter()
            .zip(rhs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let bound = 1e-11 * (self.inf_norm() * max_abs(&x) + max_abs(rhs));
        if !(residual <= bound) {
            return Err(Error::InaccurateSolve { residual, bound });
        }
        Ok(x)
    }

    pub fn solve(&self, rhs: &RadialProfile) -> Result<RadialProfile> {
        let x = self.solve_slice(rhs.values())?;
        Ok(RadialProfile::from_parts(*rhs.grid(), x))
    }

    /// Number of negative pivots of `A - shift I` in the unpivoted LU
    /// factorization. For operators similar to a symmetric matrix (every
    /// `sub_{i} sup_{i}` positive) this equals the number of eigenvalues
    /// below `shift`.
    pub fn count_below(&self, shift: f64) -> usize {
        let n = self.len();
        let mut count = 0;
        let mut pivot = self.diag[0] - shift;
        for i in 0..n {
            if i > 0 {
                let coupling = self.sub[i - 1] * self.sup[i - 1];
                pivot = self.diag[i] - shift - coupling / pivot;
            }
            if pivot == 0.0 {
                pivot = -f64::EPSILON * (self.diag[i].abs() + shift.abs()).max(f64::MIN_POSITIVE);
            }
            if pivot < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: len,
            });
        }
        Ok(())
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Matrix of `shift I - Delta_h + potential` on `grid`.
pub fn assemble_operator(
    grid: &StaggeredGrid,
    shift: f64,
    potential: Potential<'_>,
) -> Result<TridiagonalOperator> {
    if !(shift >= 0.0) {
        return Err(Error::InvalidConfiguration(format!(
            "shift must be non-negative, got {shift}"
        )));
    }
    let base = TridiagonalOperator::negative_laplacian(grid);
    Ok(match potential {
        Potential::Zero => base.with_diagonal(|_| shift),
        Potential::Constant(c) => base.with_diagonal(|_| shift + c),
        Potential::Samples(v) => {
            if v.len() != grid.len() {
                return Err(Error::DimensionMismatch {
                    expected: grid.len(),
                    actual: v.len(),
                });
            }
            base.with_diagonal(|i| shift + v[i])
        }
    })
}
