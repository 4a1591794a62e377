//! Run configuration: flags, optional JSON file, and the resolved settings.
//!
//! Defaults:
//!
//! | key          | default                     | used by            |
//! |--------------|-----------------------------|--------------------|
//! | `krad`       | 6                           | every solve        |
//! | `kang`       | 4                           | every solve        |
//! | `quad`       | `default` (64,32,32,24,2.0) | every solve        |
//! | `step`       | auto (`dshape`), 0.1 (`optimize`) | `dshape`, `optimize` |
//! | `iters`      | 40                          | `optimize`         |
//! | `tol`        | 2e-3 (`optimize`), 1e-3 (`symmetry`) | `optimize`, `symmetry` |
//! | `seed`       | 0                           | `selftest`         |
//! | `directions` | 8                           | `symmetry`         |
//! | `field`      | `mode:2`                    | `dshape`           |
//! | `grid`       | 65                          | `solve`            |
//! | `richardson` | true                        | `dshape`           |

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use fracshape::assembly::QuadratureConfig;
use fracshape::geometry::{BoundaryCurve, CurveJson, FlowField};
use fracshape::optimizer::OptimizerParams;
use fracshape::shape::ShapeParams;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Solve,
    Trace,
    Energy,
    Dshape,
    Optimize,
    Symmetry,
    Constants,
    Selftest,
}

impl Command {
    pub fn needs_domain(self) -> bool {
        !matches!(self, Self::Constants | Self::Selftest)
    }
}

/// Everything a run may override. A JSON config file uses the same keys
/// minus `command`; command-line flags win over the file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Overrides {
    pub domain: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub krad: Option<usize>,
    pub kang: Option<usize>,
    /// Preset name or `n_outer_theta,n_outer_rho,n_inner_theta,n_inner_rho[,gamma]`.
    pub quad: Option<String>,
    pub step: Option<f64>,
    pub iters: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub directions: Option<usize>,
    /// `dilation`, `translation` or `mode:K`.
    pub field: Option<String>,
    pub grid: Option<usize>,
    pub richardson: Option<bool>,
}

impl Overrides {
    /// Fields set in `self` win.
    pub fn or(self, base: Overrides) -> Overrides {
        Overrides {
            domain: self.domain.or(base.domain),
            out: self.out.or(base.out),
            krad: self.krad.or(base.krad),
            kang: self.kang.or(base.kang),
            quad: self.quad.or(base.quad),
            step: self.step.or(base.step),
            iters: self.iters.or(base.iters),
            tol: self.tol.or(base.tol),
            seed: self.seed.or(base.seed),
            directions: self.directions.or(base.directions),
            field: self.field.or(base.field),
            grid: self.grid.or(base.grid),
            richardson: self.richardson.or(base.richardson),
        }
    }

    pub fn from_json_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(flatten)]
    pub overrides: Overrides,
}

/// Vector field used by `dshape`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    Dilation,
    Translation,
    Mode { k: u32 },
}

impl FieldSpec {
    pub fn parse(s: &str) -> CliResult<Self> {
        match s {
            "dilation" => Ok(Self::Dilation),
            "translation" => Ok(Self::Translation),
            _ => {
                let k = s
                    .strip_prefix("mode:")
                    .and_then(|k| k.parse::<u32>().ok())
                    .filter(|&k| (1..=32).contains(&k))
                    .ok_or_else(|| CliError::Validation(format!("unknown field '{s}' (dilation, translation, mode:K)")))?;
                Ok(Self::Mode { k })
            }
        }
    }

    /// Normal modes live on the circle of the curve's area radius.
    pub fn build(&self, curve: &BoundaryCurve) -> FlowField {
        match *self {
            Self::Dilation => FlowField::dilation(),
            Self::Translation => FlowField::translation([1.0, 0.0]),
            Self::Mode { k } => {
                let radius = (curve.area() / std::f64::consts::PI).sqrt();
                FlowField::normal_mode(curve.center(), radius, k, 1.0)
            }
        }
    }
}

pub fn parse_quad(arg: &str) -> CliResult<QuadratureConfig> {
    if !arg.contains(',') {
        return Ok(QuadratureConfig::preset(arg)?);
    }
    let parts: Vec<&str> = arg.split(',').map(str::trim).collect();
    if !(4..=5).contains(&parts.len()) {
        return Err(CliError::Validation(format!("custom quadrature '{arg}' needs 4 counts and an optional grading")));
    }
    let count = |s: &str| s.parse::<usize>().map_err(|_| CliError::Validation(format!("bad quadrature count '{s}'")));
    let mut q = QuadratureConfig {
        n_outer_theta: count(parts[0])?,
        n_outer_rho: count(parts[1])?,
        n_inner_theta: count(parts[2])?,
        n_inner_rho: count(parts[3])?,
        ..QuadratureConfig::default()
    };
    if let Some(g) = parts.get(4) {
        q.gamma = g.parse().map_err(|_| CliError::Validation(format!("bad grading exponent '{g}'")))?;
    }
    q.validate()?;
    Ok(q)
}

/// Fully validated settings; building this runs every precondition check.
#[derive(Debug, Clone)]
pub struct Settings {
    pub command: Command,
    pub domain: Option<BoundaryCurve>,
    pub out: PathBuf,
    pub shape: ShapeParams,
    pub optimizer: OptimizerParams,
    pub fd_step: Option<f64>,
    pub symmetry_tol: f64,
    pub seed: u64,
    pub directions: usize,
    pub field: FieldSpec,
    pub grid: usize,
    pub richardson: bool,
}

fn positive(name: &str, v: f64) -> CliResult<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Validation(format!("{name} must be positive and finite, got {v}")))
    }
}

pub fn read_domain(path: &Path) -> CliResult<BoundaryCurve> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read domain {}: {e}", path.display())))?;
    let doc: CurveJson =
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("domain {}: {e}", path.display())))?;
    Ok(BoundaryCurve::from_json(&doc)?)
}

impl RunConfig {
    /// Flat JSON object: `command` plus any [`Overrides`] key.
    pub fn from_json_str(text: &str) -> CliResult<Self> {
        let mut value: serde_json::Value = serde_json::from_str(text)?;
        let command = value
            .as_object_mut()
            .and_then(|m| m.remove("command"))
            .ok_or_else(|| CliError::Validation("run config needs a 'command' key".into()))?;
        Ok(Self { command: serde_json::from_value(command)?, overrides: serde_json::from_value(value)? })
    }

    pub fn resolve(&self) -> CliResult<Settings> {
        let o = &self.overrides;
        let mut shape = ShapeParams::default();
        if let Some(k) = o.krad {
            shape.k_rad = k;
        }
        if let Some(k) = o.kang {
            shape.k_ang = k;
        }
        if shape.k_rad > 64 || shape.k_ang > 64 {
            return Err(CliError::Validation(format!("basis sizes too large: krad={}, kang={}", shape.k_rad, shape.k_ang)));
        }
        if let Some(q) = &o.quad {
            shape.quad = parse_quad(q)?;
        }
        shape.quad.validate()?;
        shape.trace.validate()?;

        let mut optimizer = OptimizerParams { shape: shape.clone(), ..OptimizerParams::default() };
        let mut fd_step = None;
        let mut symmetry_tol = 1e-3;
        if let Some(s) = o.step {
            let s = positive("step", s)?;
            match self.command {
                Command::Optimize => optimizer.step0 = s,
                _ => fd_step = Some(s),
            }
        }
        if let Some(n) = o.iters {
            if n == 0 {
                return Err(CliError::Validation("iters must be at least 1".into()));
            }
            optimizer.max_iters = n;
        }
        if let Some(t) = o.tol {
            let t = positive("tol", t)?;
            optimizer.tol_serrin = t;
            symmetry_tol = t;
        }
        let directions = o.directions.unwrap_or(8);
        if directions == 0 {
            return Err(CliError::Validation("directions must be at least 1".into()));
        }
        let grid = o.grid.unwrap_or(65);
        if grid < 2 {
            return Err(CliError::Validation("grid must be at least 2".into()));
        }
        let field = match &o.field {
            Some(s) => FieldSpec::parse(s)?,
            None => FieldSpec::Mode { k: 2 },
        };
        let domain = match (&o.domain, self.command.needs_domain()) {
            (Some(p), _) => Some(read_domain(p)?),
            (None, true) => return Err(CliError::Validation(format!("{:?} needs --domain", self.command).to_lowercase())),
            (None, false) => None,
        };
        Ok(Settings {
            command: self.command,
            domain,
            out: o.out.clone().unwrap_or_else(|| PathBuf::from("out")),
            shape,
            optimizer,
            fd_step,
            symmetry_tol,
            seed: o.seed.unwrap_or(0),
            directions,
            field,
            grid,
            richardson: o.richardson.unwrap_or(true),
        })
    }
}
