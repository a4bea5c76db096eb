//! Linearized operators, their low spectrum, the derivative of the
//! amplitude with respect to the power, and identity-based checks.

use crate::closed_forms::{aubin_talenti, aubin_talenti_derivative, corrector_mu0, critical_power, gausson, kernel_v};
use crate::error::{Error, Result};
use crate::grid::{weighted_dot, RadialProfile, StaggeredGrid};
use crate::quadrature::integrate_real_line;
use crate::tridiag::TridiagonalOperator;

/// Tridiagonal discretization of `-Delta + V(r)` together with the data it came from.
#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    pub base: TridiagonalOperator,
    pub grid: StaggeredGrid,
    /// Samples of the potential `V`.
    pub potential: Vec<f64>,
    pub sigma: f64,
    pub d: usize,
    /// Profile the potential was built from (none for the oscillator).
    pub profile: Option<RadialProfile>,
}

// Exact zeros are allowed: the rescaled flow output vanishes past the
// stretched end of the grid, and every fractional power is fine at 0.
fn positive_samples(u: &RadialProfile) -> Result<()> {
    if let Some(j) = u.values().iter().position(|v| !(*v >= 0.0)) {
        return Err(Error::Domain(format!(
            "profile must be non-negative, sample {j} is {}",
            u.values()[j]
        )));
    }
    Ok(())
}

fn from_potential(
    grid: StaggeredGrid,
    potential: Vec<f64>,
    sigma: f64,
    profile: Option<RadialProfile>,
) -> LinearizedOperator {
    let base = TridiagonalOperator::negative_laplacian(&grid).with_diagonal(|j| potential[j]);
    LinearizedOperator {
        base,
        d: grid.dim(),
        grid,
        potential,
        sigma,
        profile,
    }
}

/// `L_sigma = -Delta + (1 - u^{2 sigma}) / sigma - 2 u^{2 sigma}` at a ground state `u`.
pub fn assemble_linearized(u: &RadialProfile, sigma: f64, d: usize) -> Result<LinearizedOperator> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    if u.grid().dim() != d {
        return Err(Error::GridMismatch);
    }
    positive_samples(u)?;
    let potential = u
        .values()
        .iter()
        .map(|v| {
            let p = v.powf(2.0 * sigma);
            (1.0 - p) / sigma - 2.0 * p
        })
        .collect();
    Ok(from_potential(*u.grid(), potential, sigma, Some(u.clone())))
}

/// `-Delta + eps - (1 + 2 sigma) w^{2 sigma}` at an amplitude-normalized
/// ground state `w`. Up to the positive factor `alpha^{2 sigma} / sigma`
/// and the change of variable `r = sqrt(sigma) rho / alpha^sigma`, this is
/// the same operator as [`assemble_linearized`], so it has the same Morse index.
pub fn assemble_linearized_w(w: &RadialProfile, sigma: f64, eps: f64) -> Result<LinearizedOperator> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    positive_samples(w)?;
    let potential = w
        .values()
        .iter()
        .map(|v| eps - (1.0 + 2.0 * sigma) * v.powf(2.0 * sigma))
        .collect();
    Ok(from_potential(*w.grid(), potential, sigma, Some(w.clone())))
}

/// Shifted radial harmonic oscillator `-Delta + r^2 - d - 2`, the small-power limit of `L_sigma`.
pub fn harmonic_oscillator(grid: &StaggeredGrid) -> LinearizedOperator {
    let d = grid.dim() as f64;
    let potential = grid.nodes().iter().map(|r| r * r - d - 2.0).collect();
    from_potential(*grid, potential, 0.0, None)
}

impl LinearizedOperator {
    /// Largest relative defect of `w_j A_{j,j+1} = w_{j+1} A_{j+1,j}`, i.e.
    /// of self-adjointness in the weighted inner product.
    pub fn symmetry_defect(&self) -> f64 {
        let w = self.grid.weights();
        let (sub, sup) = (self.base.sub(), self.base.sup());
        (0..sup.len())
            .map(|j| {
                let x = w[j] * sup[j];
                let y = w[j + 1] * sub[j];
                (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, v: &RadialProfile) -> Result<RadialProfile> {
        self.base.apply(v)
    }

    /// Number of negative eigenvalues.
    pub fn morse_index(&self) -> usize {
        self.base.count_below(0.0)
    }

    /// `k`-th smallest eigenvalue (0-based) by Sturm bisection.
    pub fn eigenvalue(&self, k: usize) -> Result<f64> {
        let n = self.base.len();
        if k >= n {
            return Err(Error::InvalidConfiguration(format!(
                "eigenvalue index {k} out of range for {n} unknowns"
            )));
        }
        let (mut lo, mut hi) = self.base.gershgorin_bounds();
        let scale = lo.abs().max(hi.abs());
        // invariant: count_below(lo) <= k < count_below(hi)
        lo -= 1e-12 * scale + 1e-300;
        hi += 1e-12 * scale + 1e-300;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.base.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Low end of the spectrum of a linearized operator.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    /// Ascending.
    pub lowest_eigenvalues: Vec<f64>,
    /// Eigenvectors matching `lowest_eigenvalues`, unit in the weighted norm.
    pub eigenvectors: Vec<RadialProfile>,
    /// Number of negative eigenvalues of the whole discrete operator.
    pub morse_index: usize,
    /// Distance from 0 to the nearest eigenvalue.
    pub kernel_gap: f64,
}

const INVERSE_ITERATIONS: usize = 50;

/// The `k` smallest eigenvalues and eigenvectors.
///
/// Each eigenvalue is located by Sturm bisection, then shifted inverse
/// iteration at that shift, deflated against the vectors already found,
/// yields the eigenvector; the eigenvalue reported is its Rayleigh quotient.
pub fn lowest_eigenvalues(op: &LinearizedOperator, k: usize) -> Result<SpectralReport> {
    if k == 0 {
        return Err(Error::InvalidConfiguration("need k >= 1".into()));
    }
    let grid = op.grid;
    let n = op.base.len();
    let k = k.min(n);
    let norm = op.base.inf_norm().max(1.0);
    let mut values = Vec::with_capacity(k);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);

    for i in 0..k {
        let lambda = op.eigenvalue(i)?;
        // a shift exactly on the eigenvalue may give a zero pivot
        let shift = lambda + 1e-10 * norm;
        let shifted = op.base.with_diagonal(|_| -shift);
        let mut x: Vec<f64> = (0..n).map(|j| 1.0 + 0.1 * ((j * 7 + i * 3) % 11) as f64).collect();
        let mut rq = lambda;
        let mut residual = f64::INFINITY;
        for _ in 0..INVERSE_ITERATIONS {
            deflate(&grid, &mut x, &vectors);
            normalize(&grid, &mut x);
            let y = shifted.solve_unchecked(&x)?;
            x = y;
            deflate(&grid, &mut x, &vectors);
            normalize(&grid, &mut x);
            let ax = op.base.apply_slice(&x);
            rq = weighted_dot(&grid, &ax, &x);
            let r: Vec<f64> = ax.iter().zip(&x).map(|(a, v)| a - rq * v).collect();
            residual = weighted_dot(&grid, &r, &r).sqrt();
            if residual <= 1e-9 * norm {
                break;
            }
        }
        if !(residual <= 1e-6 * norm) {
            return Err(Error::SpectralFailure { residual });
        }
        values.push(rq);
        vectors.push(x);
    }

    let morse_index = op.morse_index();
    let mut kernel_gap = f64::INFINITY;
    for idx in [morse_index.checked_sub(1), Some(morse_index)].into_iter().flatten() {
        if idx < n {
            kernel_gap = kernel_gap.min(op.eigenvalue(idx)?.abs());
        }
    }
    Ok(SpectralReport {
        lowest_eigenvalues: values,
        eigenvectors: vectors
            .into_iter()
            .map(|v| RadialProfile::from_parts(grid, v))
            .collect(),
        morse_index,
        kernel_gap,
    })
}

fn deflate(grid: &StaggeredGrid, x: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let c = weighted_dot(grid, x, b);
        for (xi, bi) in x.iter_mut().zip(b) {
            *xi -= c * bi;
        }
    }
}

fn normalize(grid: &StaggeredGrid, x: &mut [f64]) {
    let n = weighted_dot(grid, x, x).sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

/// Solves `L_sigma chi = (1 - u^{2 sigma}) u / sigma^2 + (ln u^2) u^{2 sigma + 1} / sigma`
/// and returns `chi` with `chi(0)`, the derivative of the amplitude in `sigma`.
pub fn solve_chi(u: &RadialProfile, sigma: f64, d: usize) -> Result<(RadialProfile, f64)> {
    let op = assemble_linearized(u, sigma, d)?;
    let gap_index = op.morse_index();
    let gap = [gap_index.checked_sub(1), Some(gap_index)]
        .into_iter()
        .flatten()
        .filter(|&i| i < op.base.len())
        .map(|i| op.eigenvalue(i).map(f64::abs))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if gap <= 1e-8 * op.base.inf_norm() {
        return Err(Error::Conditioning(format!(
            "linearized operator nearly singular (gap {gap:e})"
        )));
    }
    let rhs: Vec<f64> = u
        .values()
        .iter()
        .map(|&v| {
            let p = v.powf(2.0 * sigma);
            let log_sq = 2.0 * v.max(1e-300).ln();
            (1.0 - p) * v / (sigma * sigma) + log_sq * p * v / sigma
        })
        .collect();
    let chi = RadialProfile::from_parts(*u.grid(), op.base.solve_slice(&rhs)?);
    let at_origin = chi.center_value();
    Ok((chi, at_origin))
}

/// Defects of the two Pohozaev identities for `Delta w + w^{2 sigma + 1} = eps w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PohozaevReport {
    /// Relative defect of `N = eps L + G`.
    pub res1: f64,
    /// Relative defect of `d N / (1 + sigma) = d eps L + (d - 2) G`.
    pub res2: f64,
    /// `(sigma* - sigma) G / (sigma (1 + sigma*) L)`, the rate implied by the identities.
    pub eps_check: f64,
}

/// Pohozaev residuals with `L = ||w||^2`, `G = ||w'||^2` (discrete Dirichlet
/// form) and `N = ||w||^{2 sigma + 2}_{L^{2 sigma + 2}}`.
pub fn pohozaev_residuals(w: &RadialProfile, sigma: f64, eps: f64, d: usize) -> Result<PohozaevReport> {
    let s = critical_power(d)
        .ok_or_else(|| Error::Domain(format!("Pohozaev residuals need d >= 3, got {d}")))?;
    if w.grid().dim() != d {
        return Err(Error::GridMismatch);
    }
    let l = w.lp_norm_pow(2.0);
    let g = w.dirichlet_energy();
    let n = w.lp_norm_pow(2.0 * sigma + 2.0);
    let df = d as f64;
    let eps_check = if l > 0.0 {
        (s - sigma) * g / (sigma * (1.0 + s) * l)
    } else {
        0.0
    };
    Ok(PohozaevReport {
        res1: relative_defect(n, eps * l + g),
        res2: relative_defect(df * n / (1.0 + sigma), df * eps * l + (df - 2.0) * g),
        eps_check,
    })
}

fn relative_defect(x: f64, y: f64) -> f64 {
    let scale = x.abs().max(y.abs());
    if scale == 0.0 {
        0.0
    } else {
        (x - y).abs() / scale
    }
}

/// `<v, (ln w*^2) w*^{1 + 2 sigma*}> / <v, w*>` with `v` the kernel element
/// at the critical soliton, by quadrature in `t = ln rho`.
pub fn fredholm_ratio(d: usize) -> Result<f64> {
    if d < 5 {
        return Err(Error::Domain(format!(
            "the critical soliton is square integrable only for d >= 5, got {d}"
        )));
    }
    let s = critical_power(d).expect("d >= 5");
    let a = 1.0 / (d as f64 * (d as f64 - 2.0));
    let measure = |t: f64| (d as f64 * t).exp();
    let num = |t: f64| {
        let rho = t.exp();
        let w = aubin_talenti(d, rho).expect("d >= 5");
        let log_sq = -2.0 / s * (a * rho * rho).ln_1p();
        kernel_v(d, rho).expect("d >= 5") * log_sq * w.powf(1.0 + 2.0 * s) * measure(t)
    };
    let den = |t: f64| {
        let rho = t.exp();
        kernel_v(d, rho).expect("d >= 5") * aubin_talenti(d, rho).expect("d >= 5") * measure(t)
    };
    let top = integrate_real_line(num, 4.0, 1e-14, 1e-13)?;
    let bottom = integrate_real_line(den, 4.0, 1e-14, 1e-13)?;
    if bottom == 0.0 {
        return Err(Error::Integration("vanishing denominator".into()));
    }
    Ok(top / bottom)
}

/// `(||w*'||^2, ||w*||^{2 sigma* + 2}_{L^{2 sigma* + 2}})` for the critical
/// soliton by quadrature in `t = ln rho` (surface factor omitted from both).
/// The two agree because `w*` solves the critical equation.
pub fn critical_soliton_energies(d: usize) -> Result<(f64, f64)> {
    if d < 3 {
        return Err(Error::Domain(format!("critical soliton needs d >= 3, got {d}")));
    }
    let s = critical_power(d).expect("d >= 3");
    let df = d as f64;
    let gradient = |t: f64| {
        let rho = t.exp();
        aubin_talenti_derivative(d, rho).expect("d >= 3").powi(2) * (df * t).exp()
    };
    let potential = |t: f64| {
        let rho = t.exp();
        aubin_talenti(d, rho).expect("d >= 3").powf(2.0 * s + 2.0) * (df * t).exp()
    };
    Ok((
        integrate_real_line(gradient, 4.0, 1e-14, 1e-14)?,
        integrate_real_line(potential, 4.0, 1e-14, 1e-14)?,
    ))
}

/// Slope at `x = 0` of the least-squares fit `y - 1 = s x + q x^2` to points
/// `(x, y)` with `y(0) = 1`, as for normalized amplitudes `alpha(sigma) / alpha(0)`.
///
/// The quadratic term absorbs the curvature over the sampled window, so the
/// returned `s` estimates the derivative at 0 rather than a secant slope.
pub fn slope_at_zero(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidConfiguration("need at least two points".into()));
    }
    let (mut s22, mut s23, mut s24, mut s1y, mut s2y) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let x2 = x * x;
        s22 += x2;
        s23 += x2 * x;
        s24 += x2 * x2;
        s1y += x * (y - 1.0);
        s2y += x2 * (y - 1.0);
    }
    let det = s22 * s24 - s23 * s23;
    if det.abs() <= 1e-14 * s22 * s24 {
        return Err(Error::Conditioning("abscissae do not determine a quadratic".into()));
    }
    Ok((s1y * s24 - s2y * s23) / det)
}

/// Ordinary least-squares slope of `y` against `x`.
pub fn secant_slope(points: &[(f64, f64)]) -> Result<f64> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return Err(Error::InvalidConfiguration("need at least two points".into()));
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Conditioning("all abscissae coincide".into()));
    }
    Ok(sxy / sxx)
}

/// Discrete `L^2_r` norm of `L_0 mu_0 - (d - r^2)^2 u_0 / 2`, with
/// `L_0 = -Delta + r^2 - d - 2` and the sampled closed forms.
pub fn mu0_residual(d: usize, grid: &StaggeredGrid) -> Result<f64> {
    if grid.dim() != d {
        return Err(Error::GridMismatch);
    }
    let op = harmonic_oscillator(grid);
    let mu = grid.sample(|r| corrector_mu0(d, r));
    let lhs = op.apply(&mu)?;
    let df = d as f64;
    let res: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(lhs.values())
        .map(|(&r, l)| l - 0.5 * (df - r * r).powi(2) * gausson(d, r))
        .collect();
    Ok(weighted_dot(grid, &res, &res).sqrt())
}
