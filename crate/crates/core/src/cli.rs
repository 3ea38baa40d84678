//! Run configuration, subcommand execution and CSV output for the
//! command-line front end.
//!
//! Configuration files are UTF-8 `key = value` lines; `#` starts a comment.
//! Every CSV starts with a `# config: ...` line echoing the resolved
//! configuration, followed by a header row. Floats use the shortest
//! representation that round-trips.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error as ThisError;

use crate::detector::{compare_with_closed_form_with, DetectorConfig};
use crate::error::Error;
use crate::quadrature::{linspace, logspace};
use crate::spin::{
    average_works, density_profile, spin_snapshot, sweep_duration, InitialState, SpinAmplitudes,
    SpinParams,
};
use crate::work::{
    analytic_moments, build_work_distribution, characteristic_moments, fdt_residual,
    jarzynski_residual, quadrature_moment, HeisenbergPieces,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    Dist,
    Moments,
    Sweep,
    Jarzynski,
    Oracle,
}

impl Subcommand {
    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::Dist => "dist",
            Subcommand::Moments => "moments",
            Subcommand::Sweep => "sweep",
            Subcommand::Jarzynski => "jarzynski",
            Subcommand::Oracle => "oracle",
        }
    }

    /// `jarzynski` needs a thermal state; the rest default to coherent Gibbs.
    pub fn default_state(&self) -> InitialState {
        match self {
            Subcommand::Jarzynski => InitialState::Thermal,
            _ => InitialState::CoherentGibbs,
        }
    }
}

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure in {stage}: {0}", stage = .0.stage())]
    Numerical(Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } | Error::NotThermal { .. } => {
                CliError::Config(e.to_string())
            }
            other => CliError::Numerical(other),
        }
    }
}

/// Fully resolved run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub nu0: f64,
    pub nu_t: f64,
    pub t_prime: f64,
    pub beta: f64,
    pub sigma: f64,
    /// `None` means the subcommand default.
    pub state: Option<InitialState>,
    pub tol: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub w_points: usize,
    /// Explicit sweep durations; when empty a log grid is used.
    pub t_primes: Vec<f64>,
    pub t_min: f64,
    pub t_max: f64,
    pub t_points: usize,
    /// Oracle Fock cutoff; `None` applies the cutoff rule.
    pub cutoff: Option<usize>,
    /// Oracle grid points per Gaussian width.
    pub grid_points_per_width: f64,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            nu0: 1.0,
            nu_t: 1.8,
            t_prime: 1.0,
            beta: 0.01,
            sigma: 1.0,
            state: None,
            tol: 1e-9,
            w_min: -10.0,
            w_max: 10.0,
            w_points: 401,
            t_primes: Vec::new(),
            t_min: 0.01,
            t_max: 100.0,
            t_points: 61,
            cutoff: None,
            grid_points_per_width: 20.0,
            out: None,
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64, CliError> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|_| CliError::Config(format!("{key}: '{value}' is not a number")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize, CliError> {
    value
        .trim()
        .parse::<usize>()
        .map_err(|_| CliError::Config(format!("{key}: '{value}' is not a non-negative integer")))
}

fn parse_state(value: &str) -> Result<InitialState, CliError> {
    InitialState::from_str(value.trim()).map_err(|e| CliError::Config(format!("state: {e}")))
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "nu0" => self.nu0 = parse_f64(key, value)?,
            "nu_t" => self.nu_t = parse_f64(key, value)?,
            "t_prime" => self.t_prime = parse_f64(key, value)?,
            "beta" => self.beta = parse_f64(key, value)?,
            "sigma" => self.sigma = parse_f64(key, value)?,
            "state" => self.state = Some(parse_state(value)?),
            "tol" => self.tol = parse_f64(key, value)?,
            "w_min" => self.w_min = parse_f64(key, value)?,
            "w_max" => self.w_max = parse_f64(key, value)?,
            "w_points" => self.w_points = parse_usize(key, value)?,
            "t_primes" => {
                self.t_primes = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse_f64(key, s))
                    .collect::<Result<_, _>>()?
            }
            "t_min" => self.t_min = parse_f64(key, value)?,
            "t_max" => self.t_max = parse_f64(key, value)?,
            "t_points" => self.t_points = parse_usize(key, value)?,
            "cutoff" => self.cutoff = Some(parse_usize(key, value)?),
            "grid_points_per_width" => self.grid_points_per_width = parse_f64(key, value)?,
            "out" => self.out = Some(PathBuf::from(value.trim())),
            other => return Err(CliError::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Parses a configuration document on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim()).map_err(|e| match e {
                CliError::Config(msg) => CliError::Config(format!("line {}: {msg}", lineno + 1)),
                other => other,
            })?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Checks field ranges; messages name the offending field.
    pub fn validate(&self) -> Result<(), CliError> {
        let positive = [
            ("nu0", self.nu0),
            ("nu_t", self.nu_t),
            ("t_prime", self.t_prime),
            ("sigma", self.sigma),
            ("tol", self.tol),
            ("t_min", self.t_min),
            ("t_max", self.t_max),
            ("grid_points_per_width", self.grid_points_per_width),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Config(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(CliError::Config(format!(
                "beta must be non-negative, got {}",
                self.beta
            )));
        }
        if !(self.w_min.is_finite() && self.w_max.is_finite() && self.w_min < self.w_max) {
            return Err(CliError::Config("w_min must be below w_max".into()));
        }
        if self.w_points < 2 {
            return Err(CliError::Config("w_points must be at least 2".into()));
        }
        if self.t_points < 1 || self.t_min > self.t_max {
            return Err(CliError::Config(
                "t grid needs t_points >= 1 and t_min <= t_max".into(),
            ));
        }
        if let Some(bad) = self.t_primes.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(CliError::Config(format!(
                "t_primes entries must be positive, got {bad}"
            )));
        }
        if self.t_primes.windows(2).any(|w| w[0] > w[1]) {
            return Err(CliError::Config("t_primes must be sorted ascending".into()));
        }
        if matches!(self.cutoff, Some(n) if n < 2) {
            return Err(CliError::Config("cutoff must be at least 2".into()));
        }
        Ok(())
    }

    pub fn params(&self) -> Result<SpinParams, CliError> {
        Ok(SpinParams::new(
            self.nu0,
            self.nu_t,
            self.t_prime,
            self.beta,
            self.sigma,
        )?)
    }

    pub fn state_for(&self, cmd: Subcommand) -> InitialState {
        self.state.unwrap_or_else(|| cmd.default_state())
    }

    pub fn w_grid(&self) -> Vec<f64> {
        linspace(self.w_min, self.w_max, self.w_points)
    }

    pub fn sweep_grid(&self) -> Vec<f64> {
        if self.t_primes.is_empty() {
            logspace(self.t_min, self.t_max, self.t_points)
        } else {
            self.t_primes.clone()
        }
    }

    /// One-line `key=value` echo of every field.
    pub fn echo(&self, cmd: Subcommand) -> String {
        let t_primes = self
            .t_primes
            .iter()
            .map(|t| fmt(*t))
            .collect::<Vec<_>>()
            .join(",");
        let cutoff = self.cutoff.map_or("auto".to_string(), |n| n.to_string());
        format!(
            "command={} nu0={} nu_t={} t_prime={} beta={} sigma={} state={} tol={} \
             w_min={} w_max={} w_points={} t_primes={} t_min={} t_max={} t_points={} \
             cutoff={} grid_points_per_width={}",
            cmd.name(),
            fmt(self.nu0),
            fmt(self.nu_t),
            fmt(self.t_prime),
            fmt(self.beta),
            fmt(self.sigma),
            self.state_for(cmd).as_str(),
            fmt(self.tol),
            fmt(self.w_min),
            fmt(self.w_max),
            self.w_points,
            if t_primes.is_empty() {
                "-".into()
            } else {
                t_primes
            },
            fmt(self.t_min),
            fmt(self.t_max),
            self.t_points,
            cutoff,
            fmt(self.grid_points_per_width),
        )
    }
}

/// Shortest round-trip decimal form.
pub fn fmt(x: f64) -> String {
    format!("{x:?}")
}

/// CSV text under construction.
struct Csv {
    text: String,
}

impl Csv {
    fn new(cfg: &RunConfig, cmd: Subcommand, header: &[&str]) -> Self {
        let mut text = String::new();
        writeln!(text, "# config: {}", cfg.echo(cmd)).expect("string write");
        writeln!(text, "{}", header.join(",")).expect("string write");
        Self { text }
    }

    fn row(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|v| fmt(*v)).collect();
        writeln!(self.text, "{}", cells.join(",")).expect("string write");
    }

    fn comment(&mut self, line: &str) {
        writeln!(self.text, "# {line}").expect("string write");
    }
}

/// Runs a subcommand and returns the CSV text.
pub fn run(cmd: Subcommand, cfg: &RunConfig) -> Result<String, CliError> {
    cfg.validate()?;
    let p = cfg.params()?;
    let state = cfg.state_for(cmd);
    match cmd {
        Subcommand::Dist => {
            let mut csv = Csv::new(cfg, cmd, &["W", "total", "incoherent", "coherent"]);
            for r in density_profile(&p, state, &cfg.w_grid(), cfg.tol)? {
                csv.row(&[r.w, r.total, r.incoherent, r.coherent]);
            }
            Ok(csv.text)
        }
        Subcommand::Moments => {
            let amps = SpinAmplitudes::propagate(&p, cfg.tol)?;
            let snap = spin_snapshot(&p, &amps, state)?;
            let m = analytic_moments(&snap)?;
            let dist = build_work_distribution(&snap)?;
            let (chi_mean, chi_second) = characteristic_moments(&HeisenbergPieces::new(&snap)?);
            let w_coherent = match state {
                InitialState::CoherentGibbs => average_works(&p, &amps)?.w_coherent,
                InitialState::Thermal => 0.0,
            };
            let (delta_f, fdt, jarzynski) = if p.beta > 0.0 {
                let delta_f = p.free_energy_change();
                let fdt = fdt_residual(&snap, p.beta, delta_f)?.residual;
                let thermal = spin_snapshot(&p, &amps, InitialState::Thermal)?;
                (delta_f, fdt, jarzynski_residual(&thermal, p.beta)?.residual)
            } else {
                (f64::NAN, f64::NAN, f64::NAN)
            };
            let mut csv = Csv::new(
                cfg,
                cmd,
                &[
                    "t_prime",
                    "mean",
                    "second_moment",
                    "variance",
                    "energy_change_variance",
                    "quadrature_mean",
                    "quadrature_second_moment",
                    "chi_mean",
                    "chi_second_moment",
                    "w_coherent",
                    "delta_f",
                    "fdt_residual",
                    "jarzynski_residual",
                ],
            );
            csv.row(&[
                p.t_prime,
                m.mean,
                m.second_moment,
                m.variance,
                m.energy_change_variance,
                quadrature_moment(&dist, 1),
                quadrature_moment(&dist, 2),
                chi_mean,
                chi_second,
                w_coherent,
                delta_f,
                fdt,
                jarzynski,
            ]);
            Ok(csv.text)
        }
        Subcommand::Sweep => {
            require_positive_beta(&p)?;
            let grid = cfg.sweep_grid();
            let mut csv = Csv::new(
                cfg,
                cmd,
                &[
                    "t_prime",
                    "w_incoherent",
                    "half_beta_var",
                    "w_coherent",
                    "fdt_residual",
                    "jarzynski_residual",
                ],
            );
            for (t, row) in grid.iter().zip(sweep_duration(&p, &grid, state, cfg.tol)) {
                match row {
                    Ok(r) => csv.row(&[
                        r.t_prime,
                        r.w_incoherent,
                        r.half_beta_var,
                        r.w_coherent,
                        r.fdt_residual,
                        r.jarzynski_residual,
                    ]),
                    Err(e) => csv.comment(&format!("t_prime = {} failed: {e}", fmt(*t))),
                }
            }
            Ok(csv.text)
        }
        Subcommand::Jarzynski => {
            require_positive_beta(&p)?;
            let amps = SpinAmplitudes::propagate(&p, cfg.tol)?;
            let report = jarzynski_residual(&spin_snapshot(&p, &amps, state)?, p.beta)?;
            let mut csv = Csv::new(
                cfg,
                cmd,
                &[
                    "t_prime",
                    "delta_f",
                    "exponential_average",
                    "prediction",
                    "residual",
                ],
            );
            csv.row(&[
                p.t_prime,
                report.delta_f,
                report.exponential_average,
                report.prediction,
                report.residual,
            ]);
            Ok(csv.text)
        }
        Subcommand::Oracle => {
            let amps = SpinAmplitudes::propagate(&p, cfg.tol)?;
            let snap = spin_snapshot(&p, &amps, state)?;
            let mut det =
                DetectorConfig::for_snapshot_with_density(&snap, cfg.grid_points_per_width);
            if let Some(n) = cfg.cutoff {
                det.cutoff = n;
            }
            let report = compare_with_closed_form_with(&snap, &det)?;
            let mut csv = Csv::new(cfg, cmd, &["W", "closed_form", "oracle", "abs_diff"]);
            for ((w, a), b) in report.w.iter().zip(&report.closed_form).zip(&report.oracle) {
                csv.row(&[*w, *a, *b, (a - b).abs()]);
            }
            csv.comment(&format!("cutoff = {}", report.config.cutoff));
            csv.comment(&format!("fidelity = {}", fmt(report.fidelity)));
            csv.comment(&format!("l1_distance = {}", fmt(report.l1_distance)));
            Ok(csv.text)
        }
    }
}

fn require_positive_beta(p: &SpinParams) -> Result<(), CliError> {
    if p.beta > 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(
            "beta must be positive for free-energy checks".into(),
        ))
    }
}

/// Runs a subcommand and writes the CSV to `cfg.out`, or returns it for
/// printing when no path is set.
pub fn run_to_output(cmd: Subcommand, cfg: &RunConfig) -> Result<Option<String>, CliError> {
    let text = run(cmd, cfg)?;
    match &cfg.out {
        Some(path) => {
            std::fs::write(path, &text).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}
