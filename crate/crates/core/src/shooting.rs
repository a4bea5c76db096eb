//! Shooting method for the radial initial-value problems, used as an
//! independent check on the gradient flows.
//!
//! Both equations have the form `u'' + (d-1) u'/r + a |u|^{2 sigma} u - b u = 0`
//! with `u'(0) = 0`:
//!
//! * amplitude problem: `a = b = 1/sigma`, `u(0) = alpha` free;
//! * rate problem: `a = 1`, `b = eps` free, `u(0) = 1`.
//!
//! A shot is classified by what happens first: the solution crosses zero,
//! turns back up while still positive, or decays below the threshold with
//! a tail-like slope. Bisection on the free parameter keeps two endpoints
//! with distinct outcome classes.

use crate::closed_forms::{aubin_talenti, critical_power, eps_upper_bound};
use crate::error::{Error, Result};

/// Classification of a single shot. Radii are where the event was detected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShotKind {
    CrossedZero(f64),
    TurnedUp(f64),
    Decayed(f64),
    Inconclusive,
}

impl ShotKind {
    fn is_event(&self) -> bool {
        matches!(self, ShotKind::CrossedZero(_) | ShotKind::TurnedUp(_))
    }

    fn same_class(&self, other: &ShotKind) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other)
    }
}

/// Sampled `(r, u, u')` along a shot, with cubic Hermite evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    r: Vec<f64>,
    u: Vec<f64>,
    du: Vec<f64>,
}

impl Trajectory {
    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn derivatives(&self) -> &[f64] {
        &self.du
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Last sampled radius.
    pub fn end(&self) -> f64 {
        *self.r.last().expect("trajectory has the initial point")
    }

    /// Hermite interpolant of the samples; zero beyond the last sample.
    pub fn eval(&self, r: f64) -> f64 {
        let n = self.r.len();
        if r <= self.r[0] {
            return self.u[0];
        }
        if r > self.r[n - 1] {
            return 0.0;
        }
        let k = match self.r.binary_search_by(|x| x.total_cmp(&r)) {
            Ok(k) => return self.u[k],
            Err(k) => k - 1,
        };
        let h = self.r[k + 1] - self.r[k];
        let t = (r - self.r[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.u[k]
            + (t3 - 2.0 * t2 + t) * h * self.du[k]
            + (-2.0 * t3 + 3.0 * t2) * self.u[k + 1]
            + (t3 - t2) * h * self.du[k + 1]
    }

    /// Composite Simpson (trapezoid on a leftover interval) of
    /// `f(r, u, u') r^{d-1}` over the sampled range.
    pub fn integrate(&self, d: usize, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
        let g: Vec<f64> = (0..self.r.len())
            .map(|i| f(self.r[i], self.u[i], self.du[i]) * self.r[i].powi(d as i32 - 1))
            .collect();
        let mut n = g.len();
        let mut total = 0.0;
        if n % 2 == 0 && n >= 2 {
            total += 0.5 * (self.r[n - 1] - self.r[n - 2]) * (g[n - 1] + g[n - 2]);
            n -= 1;
        }
        // samples after the first are uniform; the first gap may be shorter
        let mut i = 0;
        while i + 2 < n {
            let h0 = self.r[i + 1] - self.r[i];
            let h1 = self.r[i + 2] - self.r[i + 1];
            total += simpson_nonuniform(h0, h1, g[i], g[i + 1], g[i + 2]);
            i += 2;
        }
        total
    }
}

fn simpson_nonuniform(h0: f64, h1: f64, f0: f64, f1: f64, f2: f64) -> f64 {
    let s = h0 + h1;
    s / 6.0 * ((2.0 - h1 / h0) * f0 + s * s / (h0 * h1) * f1 + (2.0 - h0 / h1) * f2)
}

/// Result of one shot.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotOutcome {
    pub kind: ShotKind,
    /// Event that ended the integration after a `Decayed` classification,
    /// if any: in floating point the tail eventually leaves the ground state.
    pub fate: Option<ShotKind>,
    /// Why the shot is `Inconclusive`, when it is.
    pub note: Option<String>,
    pub trajectory: Option<Trajectory>,
}

impl ShotOutcome {
    /// Crossing or turn-up event, whichever ended the shot.
    pub fn event(&self) -> Option<ShotKind> {
        if self.kind.is_event() {
            Some(self.kind)
        } else {
            self.fate
        }
    }
}

/// Integration step, horizon and classification thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingConfig {
    pub dr: f64,
    pub r_max: f64,
    /// Below this value, with `u' < 0` and a tail-like slope, a shot counts as decayed.
    pub decay_threshold: f64,
    /// Absolute tolerance on the bisected parameter.
    pub bisection_tol: f64,
    /// Keep the sampled trajectory in the outcome.
    pub record: bool,
}

const MAX_STEPS: f64 = 1e8;

impl ShootingConfig {
    /// Defaults for the amplitude problem.
    pub fn for_amplitude() -> Self {
        Self {
            dr: 1e-4,
            r_max: 30.0,
            decay_threshold: 1e-6,
            bisection_tol: 1e-13,
            record: false,
        }
    }

    /// Defaults for the rate problem, whose tails are slow near the critical power.
    pub fn for_rate() -> Self {
        Self {
            r_max: 200.0,
            bisection_tol: 1e-15,
            ..Self::for_amplitude()
        }
    }

    pub fn recording(self) -> Self {
        Self { record: true, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dr > 0.0) || !(self.r_max > self.dr) {
            return Err(Error::InvalidConfiguration(format!(
                "need 0 < dr < r_max, got dr = {}, r_max = {}",
                self.dr, self.r_max
            )));
        }
        if self.r_max / self.dr > MAX_STEPS {
            return Err(Error::InvalidConfiguration(format!(
                "r_max / dr = {:e} exceeds the step guard {MAX_STEPS:e}",
                self.r_max / self.dr
            )));
        }
        if !(self.bisection_tol > 0.0) || !(self.decay_threshold > 0.0) {
            return Err(Error::InvalidConfiguration(
                "bisection_tol and decay_threshold must be positive".into(),
            ));
        }
        Ok(())
    }
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self::for_amplitude()
    }
}

#[derive(Debug, Clone, Copy)]
struct Ode {
    d: usize,
    two_sigma: f64,
    a: f64,
    b: f64,
}

impl Ode {
    fn forcing(&self, u: f64) -> f64 {
        self.a * u.abs().powf(self.two_sigma) * u - self.b * u
    }

    fn rhs(&self, r: f64, u: f64, v: f64) -> (f64, f64) {
        (v, -(self.d as f64 - 1.0) * v / r - self.forcing(u))
    }

    fn step(&self, r: f64, u: f64, v: f64, h: f64) -> (f64, f64) {
        let (k1u, k1v) = self.rhs(r, u, v);
        let (k2u, k2v) = self.rhs(r + 0.5 * h, u + 0.5 * h * k1u, v + 0.5 * h * k1v);
        let (k3u, k3v) = self.rhs(r + 0.5 * h, u + 0.5 * h * k2u, v + 0.5 * h * k2v);
        let (k4u, k4v) = self.rhs(r + h, u + h * k3u, v + h * k3v);
        (
            u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
            v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
        )
    }
}

fn shoot(ode: Ode, u0: f64, config: &ShootingConfig) -> ShotOutcome {
    let dr = config.dr;
    let thr = config.decay_threshold;
    let dm1 = ode.d as f64 - 1.0;
    let rate = ode.b.max(0.0).sqrt();
    let curvature = -ode.forcing(u0) / ode.d as f64;

    let mut traj = config.record.then(|| Trajectory {
        r: vec![0.0],
        u: vec![u0],
        du: vec![0.0],
    });
    let mut r = dr;
    let mut u = u0 + 0.5 * curvature * dr * dr;
    let mut v = curvature * dr;
    let mut decayed: Option<f64> = None;
    // u' > 0 right at the start means the solution rises from the origin;
    // a plateau (u'' = 0) has to leave it before a turn-up counts.
    let mut descended = v < 0.0;

    let finish = |kind: ShotKind, decayed: Option<f64>, traj: Option<Trajectory>, note: Option<String>| {
        match decayed {
            Some(rd) if kind.is_event() => ShotOutcome {
                kind: ShotKind::Decayed(rd),
                fate: Some(kind),
                note,
                trajectory: traj,
            },
            _ => ShotOutcome {
                kind,
                fate: None,
                note,
                trajectory: traj,
            },
        }
    };

    loop {
        if let Some(t) = traj.as_mut() {
            t.r.push(r);
            t.u.push(u);
            t.du.push(v);
        }
        if !u.is_finite() || !v.is_finite() {
            return finish(
                ShotKind::Inconclusive,
                None,
                traj,
                Some(format!("non-finite state at r = {r}")),
            );
        }
        if u < 0.0 {
            return finish(ShotKind::CrossedZero(r), decayed, traj, None);
        }
        if v > 0.0 && (descended || curvature > 0.0) {
            return finish(ShotKind::TurnedUp(r), decayed, traj, None);
        }
        if v < 0.0 {
            descended = true;
        }
        if decayed.is_none() && u < thr && v < 0.0 && -v <= 2.0 * (rate + dm1 / r) * thr {
            decayed = Some(r);
        }
        if r + 0.5 * dr > config.r_max {
            break;
        }
        let (nu, nv) = ode.step(r, u, v, dr);
        r += dr;
        u = nu;
        v = nv;
    }

    if let Some(rd) = decayed {
        return finish(ShotKind::Decayed(rd), None, traj, None);
    }
    // algebraic tail of the critical soliton: compare with its envelope
    if ode.b == 0.0 && ode.d >= 3 && v < 0.0 {
        if let Ok(envelope) = aubin_talenti(ode.d, r) {
            if u <= 2.0 * envelope {
                return finish(ShotKind::Decayed(r), None, traj, None);
            }
        }
    }
    finish(
        ShotKind::Inconclusive,
        None,
        traj,
        Some(format!("no event before r_max = {} (u = {u:e})", config.r_max)),
    )
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    Ok(())
}

/// Shot for `u'' + (d-1)u'/r + (u^{2 sigma} - 1) u / sigma = 0`, `u(0) = alpha`.
pub fn integrate_ivp_u(alpha: f64, sigma: f64, d: usize, config: &ShootingConfig) -> Result<ShotOutcome> {
    config.validate()?;
    check_sigma(sigma)?;
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    if d == 0 {
        return Err(Error::Domain("dimension must be >= 1".into()));
    }
    let ode = Ode {
        d,
        two_sigma: 2.0 * sigma,
        a: 1.0 / sigma,
        b: 1.0 / sigma,
    };
    Ok(shoot(ode, alpha, config))
}

/// Shot for `w'' + (d-1)w'/rho + w^{2 sigma + 1} = eps w`, `w(0) = 1`.
pub fn integrate_ivp_w(eps: f64, sigma: f64, d: usize, config: &ShootingConfig) -> Result<ShotOutcome> {
    config.validate()?;
    check_sigma(sigma)?;
    if d < 3 {
        return Err(Error::Domain(format!("rate problem needs d >= 3, got {d}")));
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::Domain(format!("eps must be non-negative, got {eps}")));
    }
    let ode = Ode {
        d,
        two_sigma: 2.0 * sigma,
        a: 1.0,
        b: eps,
    };
    Ok(shoot(ode, 1.0, config))
}

/// Bisection result with the final bracket.
#[derive(Debug, Clone, PartialEq)]
pub struct ShootingRoot {
    pub value: f64,
    /// Final bracket; its endpoints carry distinct event classes.
    pub lower: f64,
    pub upper: f64,
    /// Event class of shots below the root.
    pub below: ShotKind,
    pub bisections: usize,
    /// Half-width of the bracket at the point where shots stopped
    /// resolving the side (no event before `r_max`), or the final half-width.
    pub confidence_radius: f64,
    /// Classification of a shot at `value`.
    pub outcome: ShotOutcome,
}

fn bisect_shots(
    mut lo: f64,
    mut hi: f64,
    lo_event: ShotKind,
    shot: impl Fn(f64) -> Result<ShotOutcome>,
    tol: f64,
    final_shot: impl Fn(f64) -> Result<ShotOutcome>,
) -> Result<ShootingRoot> {
    let mut bisections = 0;
    let mut unresolved = None;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        bisections += 1;
        match shot(mid)?.event() {
            Some(k) if k.same_class(&lo_event) => lo = mid,
            Some(_) => hi = mid,
            None => {
                unresolved = Some(0.5 * (hi - lo));
                lo = mid;
                hi = mid;
                break;
            }
        }
    }
    let value = 0.5 * (lo + hi);
    Ok(ShootingRoot {
        value,
        lower: lo,
        upper: hi,
        below: lo_event,
        bisections,
        confidence_radius: unresolved.unwrap_or(0.5 * (hi - lo)),
        outcome: final_shot(value)?,
    })
}

/// Ground-state amplitude `alpha(sigma)` by bisection.
///
/// The bracket comes from a geometric scan starting at `alpha = 1.5` (always
/// above the equilibrium `u = 1`); which side crosses zero is read off the
/// scan rather than assumed.
pub fn find_alpha_detailed(sigma: f64, d: usize, config: &ShootingConfig) -> Result<ShootingRoot> {
    config.validate()?;
    check_sigma(sigma)?;
    if let Some(s) = critical_power(d) {
        if sigma >= s {
            return Err(Error::Domain(format!(
                "no ground state for sigma = {sigma} >= {s} in d = {d}"
            )));
        }
    }
    let quiet = ShootingConfig {
        record: false,
        ..*config
    };
    let event_at = |alpha: f64| -> Result<Option<ShotKind>> {
        Ok(integrate_ivp_u(alpha, sigma, d, &quiet)?.event())
    };

    let start = 1.5;
    let first = event_at(start)?.ok_or_else(|| {
        Error::NoBracket(format!("shot at alpha = {start} has no crossing or turn-up"))
    })?;
    // probe upward (doubling) and toward 1 (halving the excess over 1),
    // remembering the last probe on each side that matched the start
    let (mut up, mut known_up) = (start, start);
    let (mut down, mut known_down) = (start, start);
    let mut bracket = None;
    for _ in 0..60 {
        up *= 2.0;
        match event_at(up)? {
            Some(k) if !k.same_class(&first) => {
                bracket = Some((known_up, up, first));
                break;
            }
            Some(_) => known_up = up,
            None => {}
        }
        down = 1.0 + 0.5 * (down - 1.0);
        match event_at(down)? {
            Some(k) if !k.same_class(&first) => {
                bracket = Some((down, known_down, k));
                break;
            }
            Some(_) => known_down = down,
            None => {}
        }
    }
    let (lo, hi, lo_event) = bracket.ok_or_else(|| {
        Error::NoBracket(format!(
            "scan from alpha = {start} found only {first:?} outcomes (sigma = {sigma}, d = {d})"
        ))
    })?;
    bisect_shots(
        lo,
        hi,
        lo_event,
        |a| integrate_ivp_u(a, sigma, d, &quiet),
        config.bisection_tol,
        |a| integrate_ivp_u(a, sigma, d, config),
    )
}

/// Ground-state amplitude `alpha(sigma)` by bisection.
pub fn find_alpha(sigma: f64, d: usize, config: &ShootingConfig) -> Result<f64> {
    let root = find_alpha_detailed(sigma, d, config)?;
    check_decayed(&root)?;
    Ok(root.value)
}

/// Rate `eps(sigma)` of the amplitude-normalized ground state by bisection
/// on `(0, (sigma* - sigma)/(sigma* (1 + sigma))]`.
pub fn find_epsilon_detailed(sigma: f64, d: usize, config: &ShootingConfig) -> Result<ShootingRoot> {
    config.validate()?;
    check_sigma(sigma)?;
    let upper = eps_upper_bound(d, sigma)?;
    let quiet = ShootingConfig {
        record: false,
        ..*config
    };
    let lo_event = integrate_ivp_w(0.0, sigma, d, &quiet)?.event();
    let hi_event = integrate_ivp_w(upper, sigma, d, &quiet)?.event();
    let lo_event = match (lo_event, hi_event) {
        (Some(a), Some(b)) if !a.same_class(&b) => a,
        other => {
            return Err(Error::NoBracket(format!(
                "eps endpoints 0 and {upper} give {:?} and {:?}",
                other.0, other.1
            )))
        }
    };
    bisect_shots(
        0.0,
        upper,
        lo_event,
        |e| integrate_ivp_w(e, sigma, d, &quiet),
        config.bisection_tol,
        |e| integrate_ivp_w(e, sigma, d, config),
    )
}

/// Rate `eps(sigma)` by bisection; the result reproduces a decayed shot.
pub fn find_epsilon(sigma: f64, d: usize, config: &ShootingConfig) -> Result<f64> {
    let root = find_epsilon_detailed(sigma, d, config)?;
    check_decayed(&root)?;
    Ok(root.value)
}

fn check_decayed(root: &ShootingRoot) -> Result<()> {
    match root.outcome.kind {
        ShotKind::Decayed(_) => Ok(()),
        other => Err(Error::RootNotFound(format!(
            "bisection ended at {} but the shot there is {other:?}",
            root.value
        ))),
    }
}

/// Relative defects of the two Pohozaev identities for a recorded shot of
/// `Delta u + a u^{2 sigma + 1} - b u = 0`:
/// `a N = b L + G` and `d a N / (1 + sigma) = d b L + (d - 2) G`,
/// with `L`, `G`, `N` the integrals of `u^2`, `u'^2`, `u^{2 sigma + 2}` (weight `r^{d-1}`).
/// The trajectory is cut where the solution stops decaying.
pub fn trajectory_pohozaev(traj: &Trajectory, d: usize, sigma: f64, a: f64, b: f64) -> (f64, f64) {
    let cut = traj
        .u
        .iter()
        .zip(&traj.du)
        .position(|(u, v)| *u < 0.0 || *v > 0.0)
        .unwrap_or(traj.len())
        .max(3);
    let t = Trajectory {
        r: traj.r[..cut].to_vec(),
        u: traj.u[..cut].to_vec(),
        du: traj.du[..cut].to_vec(),
    };
    let p = 2.0 * sigma + 2.0;
    let l = t.integrate(d, |_, u, _| u * u);
    let g = t.integrate(d, |_, _, v| v * v);
    let n = t.integrate(d, |_, u, _| u.abs().powf(p));
    let df = d as f64;
    let lhs1 = a * n;
    let rhs1 = b * l + g;
    let lhs2 = df * a * n / (1.0 + sigma);
    let rhs2 = df * b * l + (df - 2.0) * g;
    (rel_defect(lhs1, rhs1), rel_defect(lhs2, rhs2))
}

fn rel_defect(x: f64, y: f64) -> f64 {
    let scale = x.abs().max(y.abs());
    if scale == 0.0 {
        0.0
    } else {
        (x - y).abs() / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg() -> ShootingConfig {
        ShootingConfig::for_amplitude()
    }

    #[test]
    fn soliton_amplitude_decays() {
        let out = integrate_ivp_u(2f64.sqrt(), 1.0, 1, &cfg()).unwrap();
        assert!(matches!(out.kind, ShotKind::Decayed(_)), "{out:?}");
    }

    #[test]
    fn large_amplitude_crosses_zero() {
        let out = integrate_ivp_u(2.0, 1.0, 1, &cfg()).unwrap();
        assert!(matches!(out.kind, ShotKind::CrossedZero(_)), "{:?}", out.kind);
        let out = integrate_ivp_u(1.2, 1.0, 1, &cfg()).unwrap();
        assert!(matches!(out.kind, ShotKind::TurnedUp(_)), "{:?}", out.kind);
    }

    #[test]
    fn equilibrium_is_inconclusive() {
        let out = integrate_ivp_u(1.0, 0.7, 3, &cfg()).unwrap();
        assert_eq!(out.kind, ShotKind::Inconclusive);
        assert!(out.note.is_some());
        let out = integrate_ivp_w(1.0, 0.5, 3, &ShootingConfig { r_max: 5.0, ..cfg() }).unwrap();
        assert_eq!(out.kind, ShotKind::Inconclusive);
    }

    #[test]
    fn one_dimensional_amplitudes() {
        assert_relative_eq!(find_alpha(0.5, 1, &cfg()).unwrap(), 1.5, epsilon = 1e-6);
        assert_relative_eq!(find_alpha(2.0, 1, &cfg()).unwrap(), 3f64.powf(0.25), epsilon = 1e-6);
    }

    #[test]
    fn three_dimensional_cubic_amplitude() {
        let c = ShootingConfig { r_max: 20.0, ..cfg() };
        let a = find_alpha(1.0, 3, &c).unwrap();
        assert!(a > 4.3 && a < 4.4, "{a}");
    }

    #[test]
    fn critical_soliton_decays_algebraically() {
        let c = ShootingConfig::for_rate();
        let out = integrate_ivp_w(0.0, 2.0 / 3.0, 5, &c).unwrap();
        assert!(matches!(out.kind, ShotKind::Decayed(_)), "{out:?}");
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(integrate_ivp_u(-1.0, 1.0, 1, &cfg()).is_err());
        assert!(integrate_ivp_u(1.5, 0.0, 1, &cfg()).is_err());
        assert!(integrate_ivp_w(0.1, 0.5, 2, &cfg()).is_err());
        assert!(integrate_ivp_w(-0.1, 0.5, 3, &cfg()).is_err());
        let c = ShootingConfig { dr: 1e-9, r_max: 1e3, ..cfg() };
        assert!(matches!(c.validate(), Err(Error::InvalidConfiguration(_))));
        assert!(find_alpha(2.5, 3, &cfg()).is_err());
    }

    #[test]
    fn hermite_evaluation_reproduces_samples() {
        let c = cfg().recording();
        let out = integrate_ivp_u(1.5, 0.5, 1, &c).unwrap();
        let t = out.trajectory.unwrap();
        // exact 1D soliton at sigma = 1/2: 1.5 sech^2(x / (2 sqrt(sigma)))... checked via the closed form
        for x in [0.0, 0.33333, 1.7, 4.2] {
            let exact = crate::closed_forms::soliton_1d(0.5, x).unwrap();
            assert_relative_eq!(t.eval(x), exact, epsilon = 1e-8);
        }
        assert_eq!(t.eval(t.end() + 1.0), 0.0);
    }

    #[test]
    fn pohozaev_on_oracle_output() {
        let c = cfg().recording();
        let root = find_alpha_detailed(1.0, 3, &c).unwrap();
        let t = root.outcome.trajectory.unwrap();
        let (r1, r2) = trajectory_pohozaev(&t, 3, 1.0, 1.0, 1.0);
        assert!(r1 < 1e-5 && r2 < 1e-5, "{r1:e} {r2:e}");
    }
}
