//! Run configuration: built-in defaults, then a `key=value` file, then flags.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;

use rabi_triangle::ModelParams;

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Cavity frequency.
    #[arg(long, global = true)]
    pub omega: Option<f64>,
    /// Atomic transition frequency.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Reduced coupling g/sqrt(omega*delta).
    #[arg(long, global = true)]
    pub g1: Option<f64>,
    /// Hopping strength.
    #[arg(long, global = true)]
    pub j: Option<f64>,
    /// Hopping phase in radians, within [-pi, pi].
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// Photon cutoff per cavity (dynamics).
    #[arg(long, global = true)]
    pub nmax: Option<usize>,
    /// Time step and sampling interval (dynamics).
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Final time (dynamics); defaults to 2*pi/J.
    #[arg(long, global = true)]
    pub tfinal: Option<f64>,
    /// Lower end of the scan window: reduced distance for `exponents`,
    /// g1/g1c for the coupling scans.
    #[arg(long = "window-min", global = true)]
    pub window_min: Option<f64>,
    /// Upper end of the scan window.
    #[arg(long = "window-max", global = true)]
    pub window_max: Option<f64>,
    /// Number of grid points.
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Seed for the random mean-field starting points.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Configuration file with `key=value` lines using the flag names.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Dynamics,
    PhaseBoundary,
    Fluctuations,
    Exponents,
    Meanfield,
    Spectrum,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Dynamics => "dynamics",
            Command::PhaseBoundary => "phase-boundary",
            Command::Fluctuations => "fluctuations",
            Command::Exponents => "exponents",
            Command::Meanfield => "meanfield",
            Command::Spectrum => "spectrum",
        }
    }
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub omega: f64,
    pub delta: f64,
    /// `None` means the subcommand scans the coupling.
    pub g1: Option<f64>,
    pub j: f64,
    /// `None` lets `exponents` run all four transitions.
    pub theta: Option<f64>,
    pub nmax: usize,
    pub dt: f64,
    pub tfinal: Option<f64>,
    pub window: (f64, f64),
    pub points: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

/// A configuration problem; reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(UsageError(msg.into()))
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        let mut c = Self {
            command,
            omega: 1.0,
            delta: 100.0,
            g1: None,
            j: 0.05,
            theta: Some(0.0),
            nmax: rabi_triangle::dynamics::DEFAULT_N_MAX,
            dt: rabi_triangle::dynamics::DEFAULT_SAMPLE_DT,
            tfinal: None,
            window: (0.5, 1.5),
            points: 100,
            seed: rabi_triangle::meanfield::SolverOptions::<f64>::default().seed,
            out: None,
        };
        match command {
            Command::Dynamics => {
                c.delta = 50.0;
                c.g1 = Some(0.1);
            }
            Command::PhaseBoundary => c.points = 201,
            Command::Exponents => {
                c.theta = None;
                c.window = rabi_triangle::scaling::DEFAULT_WINDOW;
                c.points = rabi_triangle::scaling::DEFAULT_POINTS;
            }
            _ => {}
        }
        c
    }

    pub fn resolve(command: Command, flags: &Flags) -> Result<Self> {
        let mut c = Self::defaults(command);
        if let Some(path) = &flags.config {
            c.apply_file(path)?;
        }
        c.apply_flags(flags);
        c.validate()?;
        Ok(c)
    }

    fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))
            .map_err(|e| usage(format!("{e:#}")))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                usage(format!(
                    "{}:{}: expected key=value",
                    path.display(),
                    lineno + 1
                ))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| usage(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse()
                .map_err(|_| format!("invalid value '{v}' for {key}"))
        }
        match key {
            "omega" => self.omega = num(key, value)?,
            "delta" => self.delta = num(key, value)?,
            "g1" => self.g1 = Some(num(key, value)?),
            "j" => self.j = num(key, value)?,
            "theta" => self.theta = Some(num(key, value)?),
            "nmax" => self.nmax = num(key, value)?,
            "dt" => self.dt = num(key, value)?,
            "tfinal" => self.tfinal = Some(num(key, value)?),
            "window-min" => self.window.0 = num(key, value)?,
            "window-max" => self.window.1 = num(key, value)?,
            "points" => self.points = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    fn apply_flags(&mut self, f: &Flags) {
        macro_rules! take {
            ($($field:ident),*) => { $(if let Some(v) = f.$field { self.$field = v; })* };
        }
        take!(omega, delta, j, nmax, dt, points, seed);
        if f.g1.is_some() {
            self.g1 = f.g1;
        }
        if f.theta.is_some() {
            self.theta = f.theta;
        }
        if f.tfinal.is_some() {
            self.tfinal = f.tfinal;
        }
        if let Some(v) = f.window_min {
            self.window.0 = v;
        }
        if let Some(v) = f.window_max {
            self.window.1 = v;
        }
        if f.out.is_some() {
            self.out = f.out.clone();
        }
    }

    /// Physical parameters with `g1` defaulting to zero.
    pub fn params(&self) -> ModelParams {
        ModelParams {
            omega: self.omega,
            delta: self.delta,
            g1: self.g1.unwrap_or(0.0),
            j: self.j,
            theta: self.theta.unwrap_or(0.0),
        }
    }

    fn validate(&self) -> Result<()> {
        self.params().validate().map_err(|e| usage(e.to_string()))?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            bail!(UsageError(format!("dt must be positive, got {}", self.dt)));
        }
        if let Some(t) = self.tfinal {
            if !(t >= 0.0 && t.is_finite()) {
                bail!(UsageError(format!("tfinal must be non-negative, got {t}")));
            }
        }
        if self.nmax < 1 {
            bail!(UsageError("nmax must be at least 1".into()));
        }
        if self.points < 2 {
            bail!(UsageError(format!(
                "points must be at least 2, got {}",
                self.points
            )));
        }
        let (lo, hi) = self.window;
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
            bail!(UsageError(format!(
                "window must satisfy 0 <= min < max, got ({lo}, {hi})"
            )));
        }
        if self.command == Command::Dynamics && self.tfinal.is_none() && self.j == 0.0 {
            bail!(UsageError("tfinal is required when j = 0".into()));
        }
        Ok(())
    }

    /// `# key=value` lines recording every resolved setting.
    pub fn header(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("auto".to_string(), |x| format!("{x:?}"));
        let mut s = format!("# qrt {}\n", self.command.name());
        for (k, v) in [
            ("omega", format!("{:?}", self.omega)),
            ("delta", format!("{:?}", self.delta)),
            ("g1", opt(self.g1)),
            ("j", format!("{:?}", self.j)),
            ("theta", opt(self.theta)),
            ("nmax", self.nmax.to_string()),
            ("dt", format!("{:?}", self.dt)),
            ("tfinal", opt(self.tfinal)),
            ("window-min", format!("{:?}", self.window.0)),
            ("window-max", format!("{:?}", self.window.1)),
            ("points", self.points.to_string()),
            ("seed", self.seed.to_string()),
        ] {
            s.push_str(&format!("# {k}={v}\n"));
        }
        s
    }
}
