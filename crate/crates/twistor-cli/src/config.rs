//! Command-line flags, JSON config files and the resolved run configuration.

use crate::error::CliError;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use twistor_core::cp3::{CP3Point, WeightPair};
use twistor_core::toda::{Integrator, TodaState};

#[derive(Parser, Debug)]
#[command(name = "toda-twistor", version, about = "Toda dynamics, CP^3 moment geometry and curve checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Integrate the Toda flow and write the trajectory.
    Integrate,
    /// Map seeded random points through p and u and classify them.
    Scan,
    /// Classify a point of CP^3 (--point) or of the plane (--rect).
    Classify,
    /// Toda residual, curvature and flatness checks on periodic grids.
    PdeCheck,
    /// Integrate the frame along a trajectory and project it to CP^3.
    Reconstruct,
    /// Run the property suite.
    Verify,
    /// Flow lines on the disk v- = v+, r- = r+.
    Flowlines,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Use the non-conserved candidate for the second integral.
    WrongH2,
}

#[derive(Args, Debug, Default)]
pub struct Flags {
    /// JSON file whose keys provide defaults for the flags below.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub k: Option<i32>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub m: Option<i32>,
    /// Use the raw ODE with this C^2 instead of reading it off the initial state.
    #[arg(long, global = true)]
    pub c2: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    #[arg(long, global = true)]
    pub t_end: Option<f64>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    #[arg(long, global = true)]
    pub grid_n: Option<usize>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Z0re,Z0im,Z1re,Z1im,Z2re,Z2im,Z3re,Z3im
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub point: Option<String>,
    /// v_minus,v_plus,r_minus,r_plus
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub state: Option<String>,
    /// H2,C2x64
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub rect: Option<String>,
    /// Angle-field grid file for pde-check.
    #[arg(long, global = true)]
    pub grid: Option<PathBuf>,
    /// rk4, leapfrog or yoshida4
    #[arg(long, global = true, value_parser = parse_method)]
    pub method: Option<Integrator>,
    /// Record every `stride` steps.
    #[arg(long, global = true)]
    pub stride: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub quick: bool,
    #[arg(long, global = true, hide = true, value_enum)]
    pub inject_fault: Option<Fault>,
}

/// Keys accepted in a config file.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub k: Option<i32>,
    pub m: Option<i32>,
    pub c2: Option<f64>,
    pub mu: Option<f64>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub grid_n: Option<usize>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub point: Option<Vec<f64>>,
    pub state: Option<[f64; 4]>,
    pub rect: Option<[f64; 2]>,
    pub grid: Option<PathBuf>,
    pub method: Option<Integrator>,
    pub stride: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub quick: Option<bool>,
}

/// Fully resolved configuration, echoed in JSON output.
#[derive(Serialize, Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub k: i32,
    pub m: i32,
    pub c2: Option<f64>,
    pub mu: Option<f64>,
    pub t_end: f64,
    pub dt: f64,
    pub grid_n: usize,
    pub samples: usize,
    pub seed: u64,
    pub point: Option<Vec<f64>>,
    pub state: Option<[f64; 4]>,
    pub rect: Option<[f64; 2]>,
    pub grid: Option<PathBuf>,
    pub method: Integrator,
    pub stride: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub quick: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inject_fault: Option<Fault>,
}

fn parse_method(s: &str) -> Result<Integrator, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown method `{s}` (expected rk4, leapfrog or yoshida4)"))
}

fn parse_list(name: &str, s: &str, len: usize) -> Result<Vec<f64>, CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Invalid(format!("--{name}: {e}")))?;
    if v.len() != len {
        return Err(CliError::Invalid(format!("--{name} expects {len} comma-separated numbers, got {}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Invalid(format!("--{name} must be finite")));
    }
    Ok(v)
}

impl RunConfig {
    pub fn resolve(command: Command, flags: Flags) -> Result<Self, CliError> {
        let file = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Invalid(format!("config {}: {e}", path.display())))?;
                serde_json::from_str::<FileConfig>(&text)
                    .map_err(|e| CliError::Invalid(format!("config {}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        let point = match flags.point.as_deref() {
            Some(s) => Some(parse_list("point", s, 8)?),
            None => file.point,
        };
        let state = match flags.state.as_deref() {
            Some(s) => Some(parse_list("state", s, 4)?.try_into().expect("length checked")),
            None => file.state,
        };
        let rect = match flags.rect.as_deref() {
            Some(s) => Some(parse_list("rect", s, 2)?.try_into().expect("length checked")),
            None => file.rect,
        };
        let quick = flags.quick || file.quick.unwrap_or(false);
        let default_samples = match (command, quick) {
            (Command::Flowlines, _) => 6,
            (_, true) => 1_000,
            (_, false) => 10_000,
        };
        let cfg = RunConfig {
            command,
            k: flags.k.or(file.k).unwrap_or(1),
            m: flags.m.or(file.m).unwrap_or(2),
            c2: flags.c2.or(file.c2),
            mu: flags.mu.or(file.mu),
            t_end: flags.t_end.or(file.t_end).unwrap_or(20.0),
            dt: flags.dt.or(file.dt).unwrap_or(1e-3),
            grid_n: flags.grid_n.or(file.grid_n).unwrap_or(if quick { 16 } else { 32 }),
            samples: flags.samples.or(file.samples).unwrap_or(default_samples),
            seed: flags.seed.or(file.seed).unwrap_or(42),
            point,
            state,
            rect,
            grid: flags.grid.or(file.grid),
            method: flags.method.or(file.method).unwrap_or_default(),
            stride: flags.stride.or(file.stride).unwrap_or(100),
            out: flags.out.or(file.out),
            format: flags.format.or(file.format).unwrap_or_default(),
            quick,
            inject_fault: flags.inject_fault,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Invalid(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t-end must be positive, got {}", self.t_end));
        }
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        if self.grid_n < 4 {
            return bad(format!("grid-n must be at least 4, got {}", self.grid_n));
        }
        if self.stride == 0 {
            return bad("stride must be at least 1".into());
        }
        if let Some(mu) = self.mu {
            if !(-1.0..=1.0).contains(&mu) {
                return bad(format!("mu must lie in [-1, 1], got {mu}"));
            }
        }
        self.weights()?;
        Ok(())
    }

    pub fn weights(&self) -> Result<WeightPair, CliError> {
        WeightPair::new(self.k, self.m).map_err(|e| CliError::Invalid(e.to_string()))
    }

    pub fn cp3_point(&self) -> Result<Option<CP3Point>, CliError> {
        match &self.point {
            None => Ok(None),
            Some(v) => {
                let a: [f64; 8] = v
                    .as_slice()
                    .try_into()
                    .map_err(|_| CliError::Invalid(format!("point needs 8 numbers, got {}", v.len())))?;
                CP3Point::from_reals(a).map(Some).map_err(|e| CliError::Invalid(format!("point: {e}")))
            }
        }
    }

    pub fn toda_state(&self) -> Result<Option<TodaState>, CliError> {
        match self.state {
            None => Ok(None),
            Some([a, b, c, d]) => {
                TodaState::new(a, b, c, d).map(Some).map_err(|e| CliError::Invalid(format!("state: {e}")))
            }
        }
    }
}
