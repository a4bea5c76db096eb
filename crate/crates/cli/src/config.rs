//! Command-line flags, the flat `key = value` config file, and the merged
//! [`RunConfig`] every command runs from.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use groundstate_core::closed_forms::critical_power;
use serde::Serialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Ground-state maximum versus sigma for each dimension.
    SweepMax,
    /// Profiles u_sigma in d = 2 against the Gausson, with crossing radii.
    Profiles,
    /// Amplitude slopes at sigma = 0 for d = 3, 4, 5.
    SlopeCheck,
    /// Amplitude-normalized profiles w_sigma near the critical power.
    Critical,
    /// eps(sigma) from the sup-norm flow against its leading-order prediction.
    EpsilonCurve,
    /// w_sigma - w* and its sign-change radius.
    Crossing,
    /// Invariant and identity checks across all solvers (JSON report).
    Validate,
    /// Flow against shooting on a set of (d, sigma) points.
    OracleCompare,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SweepMax => "sweep-max",
            Command::Profiles => "profiles",
            Command::SlopeCheck => "slope-check",
            Command::Critical => "critical",
            Command::EpsilonCurve => "epsilon-curve",
            Command::Crossing => "crossing",
            Command::Validate => "validate",
            Command::OracleCompare => "oracle-compare",
        }
    }

    /// Whether the command works with the amplitude-normalized critical-side problem.
    pub fn is_critical_side(&self) -> bool {
        matches!(self, Command::Critical | Command::EpsilonCurve | Command::Crossing)
    }
}

#[derive(Debug, Parser)]
#[command(name = "groundstate", version, about = "Radial NLS ground states near the endpoint powers")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,

    /// Dimensions, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub d: Option<Vec<usize>>,

    /// Powers, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "sigma_range")]
    pub sigma: Option<Vec<f64>>,

    /// `lo:hi:n`, n evenly spaced powers including both ends.
    #[arg(long = "sigma-range")]
    pub sigma_range: Option<String>,

    /// Domain radius.
    #[arg(long = "R")]
    pub radius: Option<f64>,

    /// Number of grid unknowns.
    #[arg(long = "M")]
    pub unknowns: Option<usize>,

    #[arg(long)]
    pub tau: Option<f64>,

    #[arg(long)]
    pub tol: Option<f64>,

    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,

    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long)]
    pub threads: Option<usize>,

    /// Flat `key = value` file with the same keys as the long flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Fully resolved run parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    /// `None` means the command's default set.
    pub dims: Option<Vec<usize>>,
    pub sigmas: Option<Vec<f64>>,
    pub radius: Option<f64>,
    pub unknowns: Option<usize>,
    /// `None` means the command's default step (usually [`DEFAULT_TAU`]).
    pub tau: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub out: PathBuf,
    pub threads: Option<usize>,
}

pub const DEFAULT_TAU: f64 = 0.1;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            dims: None,
            sigmas: None,
            radius: None,
            unknowns: None,
            tau: None,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            out: PathBuf::from("."),
            threads: None,
        }
    }

    /// Merges the config file (if any) under the explicit flags and validates.
    pub fn from_cli(cli: &Cli) -> Result<Self> {
        let mut cfg = Self::new(cli.command);
        if let Some(path) = &cli.config {
            for (key, value) in load_config_file(path)? {
                cfg.set(&key, &value)?;
            }
        }
        if let Some(d) = &cli.d {
            cfg.dims = Some(d.clone());
        }
        if let Some(s) = &cli.sigma {
            cfg.sigmas = Some(s.clone());
        }
        if let Some(r) = &cli.sigma_range {
            cfg.sigmas = Some(parse_sigma_range(r)?);
        }
        if cli.radius.is_some() {
            cfg.radius = cli.radius;
        }
        if cli.unknowns.is_some() {
            cfg.unknowns = cli.unknowns;
        }
        if cli.tau.is_some() {
            cfg.tau = cli.tau;
        }
        if let Some(t) = cli.tol {
            cfg.tol = t;
        }
        if let Some(m) = cli.max_iter {
            cfg.max_iter = m;
        }
        if let Some(o) = &cli.out {
            cfg.out = o.clone();
        }
        if cli.threads.is_some() {
            cfg.threads = cli.threads;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| CliError::Config(format!("config key `{key}`: invalid {what} `{value}`"));
        match key {
            "command" => {
                let c = Command::from_str(value, true).map_err(|_| bad("command"))?;
                if c != self.command {
                    return Err(CliError::Config(format!(
                        "config file is for `{value}` but `{}` was requested",
                        self.command.name()
                    )));
                }
            }
            "d" => self.dims = Some(parse_list(value).map_err(|_| bad("dimension list"))?),
            "sigma" => self.sigmas = Some(parse_list(value).map_err(|_| bad("sigma list"))?),
            "sigma-range" => self.sigmas = Some(parse_sigma_range(value)?),
            "R" => self.radius = Some(value.parse().map_err(|_| bad("radius"))?),
            "M" => self.unknowns = Some(value.parse().map_err(|_| bad("unknown count"))?),
            "tau" => self.tau = Some(value.parse().map_err(|_| bad("tau"))?),
            "tol" => self.tol = value.parse().map_err(|_| bad("tol"))?,
            "max-iter" => self.max_iter = value.parse().map_err(|_| bad("max-iter"))?,
            "out" => self.out = PathBuf::from(value),
            "threads" => self.threads = Some(value.parse().map_err(|_| bad("thread count"))?),
            _ => return Err(CliError::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(CliError::Config(msg));
        if let Some(t) = self.tau {
            if !(t > 0.0) || !t.is_finite() {
                return fail(format!("tau must be positive, got {t}"));
            }
        }
        if !(self.tol > 0.0) {
            return fail(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_iter == 0 {
            return fail("max-iter must be at least 1".into());
        }
        if let Some(r) = self.radius {
            if !(r > 0.0) || !r.is_finite() {
                return fail(format!("R must be positive, got {r}"));
            }
        }
        if let Some(m) = self.unknowns {
            if m < 4 {
                return fail(format!("M must be at least 4, got {m}"));
            }
        }
        if self.threads == Some(0) {
            return fail("threads must be at least 1".into());
        }
        if let Some(dims) = &self.dims {
            if dims.is_empty() {
                return fail("empty dimension list".into());
            }
            for &d in dims {
                if d == 0 || d > 12 {
                    return fail(format!("dimension {d} outside 1..=12"));
                }
                let min = if self.command.is_critical_side() { 5 } else { 1 };
                if d < min {
                    return fail(format!("`{}` needs d >= {min}, got {d}", self.command.name()));
                }
                if self.command == Command::SweepMax && d > 5 {
                    return fail(format!("sweep-max covers d in 1..=5, got {d}"));
                }
            }
        }
        if let Some(sigmas) = &self.sigmas {
            if sigmas.is_empty() {
                return fail("empty sigma list".into());
            }
            let dims = self.dims.clone().unwrap_or_else(|| self.default_dims());
            for &s in sigmas {
                for &d in &dims {
                    let upper = critical_power(d).unwrap_or(f64::INFINITY);
                    if !(s > 0.0 && s < upper) {
                        return fail(format!("sigma = {s} is not inside (0, {upper}) for d = {d}"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Dimensions used when `--d` is not given.
    pub fn default_dims(&self) -> Vec<usize> {
        match self.command {
            Command::SweepMax => vec![1, 2, 3, 4, 5],
            Command::Profiles => vec![2],
            Command::SlopeCheck => vec![3, 4, 5],
            Command::Critical | Command::EpsilonCurve | Command::Crossing => vec![5],
            Command::OracleCompare => vec![1, 2, 3],
            Command::Validate => vec![],
        }
    }

    /// Explicit `--tau`, or `default`.
    pub fn tau_or(&self, default: f64) -> f64 {
        self.tau.unwrap_or(default)
    }

    pub fn dims(&self) -> Vec<usize> {
        self.dims.clone().unwrap_or_else(|| self.default_dims())
    }

    /// Creates the output directory and checks that it accepts files.
    pub fn prepare_output(&self) -> Result<()> {
        fs::create_dir_all(&self.out).map_err(|e| {
            CliError::Config(format!("cannot create output directory {}: {e}", self.out.display()))
        })?;
        let probe = self.out.join(".groundstate-write-probe");
        fs::write(&probe, b"").map_err(|e| {
            CliError::Config(format!("output directory {} is not writable: {e}", self.out.display()))
        })?;
        let _ = fs::remove_file(&probe);
        Ok(())
    }

    pub fn output_path(&self, stem: &str, ext: &str) -> PathBuf {
        self.out.join(format!("{stem}.{ext}"))
    }
}

fn parse_list<T: std::str::FromStr>(value: &str) -> std::result::Result<Vec<T>, T::Err> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

/// Parses `lo:hi:n` into `n` evenly spaced values from `lo` to `hi`.
pub fn parse_sigma_range(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let bad = || CliError::Config(format!("sigma range must be lo:hi:n, got `{text}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    if n == 0 || !(hi >= lo) || (n == 1 && hi != lo) {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect())
}

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("config line {}: expected `key = value`", n + 1))
        })?;
        let key = key.trim().trim_start_matches("--").to_string();
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::Config(format!("config key `{key}` given twice")));
        }
    }
    Ok(map)
}

pub fn load_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_text(&text)
}
