//! Run configuration: a strict TOML schema that rejects unknown keys.

use std::path::{Path, PathBuf};

use obstacle_core::coeff::{CoefficientFamily, ForcingFamily};
use obstacle_core::experiments::{MuPolicy, Perturbation};
use obstacle_core::fixtures::{BoundaryProfile, SyntheticField};
use obstacle_core::solver::Method;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    /// Spatial dimension.
    pub n: usize,
    pub half_width: f64,
    pub nodes_per_axis: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

impl Default for SolverBlock {
    fn default() -> Self {
        Self {
            method: default_method(),
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }
}

fn default_method() -> Method {
    Method::ActiveSet
}

fn default_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    200_000
}

fn default_boundary() -> BoundaryProfile {
    BoundaryProfile::Zero
}

/// Suites to run under `verify`. Radii default to dyadic scales between
/// `r_max` and `r_min_cells * h`; explicit `radii` lists override them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "suite", rename_all = "snake_case", deny_unknown_fields)]
pub enum SuiteConfig {
    OptimalRegularity {
        /// Snapped to the nearest free-boundary node; defaults to the origin.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radii: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r_max: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r_min_cells: Option<f64>,
        #[serde(default)]
        negative_control: bool,
    },
    Nondegeneracy {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radii: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r_max: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r_min_cells: Option<f64>,
        #[serde(default)]
        negative_control: bool,
    },
    Alternative {
        /// Explicit points; otherwise `samples` free-boundary nodes.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        points: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radii: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r_max: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r_min_cells: Option<f64>,
        #[serde(default)]
        negative_control: bool,
    },
    MeasureStability {
        perturbation: Perturbation,
        levels: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mu: Option<MuPolicy>,
        #[serde(default)]
        negative_control: bool,
    },
    Blowup {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eps: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r_max: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r_min_cells: Option<f64>,
        #[serde(default)]
        negative_control: bool,
    },
    Reifenberg {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<usize>,
        /// Sampled points keep `B_reach` inside the box.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reach: Option<f64>,
        /// Restrict samples to the ball of this radius about the origin.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        region: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radii: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r_max: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r_min_cells: Option<f64>,
        #[serde(default)]
        negative_control: bool,
    },
}

impl SuiteConfig {
    pub fn name(&self) -> &'static str {
        match self {
            SuiteConfig::OptimalRegularity { .. } => "optimal_regularity",
            SuiteConfig::Nondegeneracy { .. } => "nondegeneracy",
            SuiteConfig::Alternative { .. } => "alternative",
            SuiteConfig::MeasureStability { .. } => "measure_stability",
            SuiteConfig::Blowup { .. } => "blowup",
            SuiteConfig::Reifenberg { .. } => "reifenberg",
        }
    }

    pub fn negative_control(&self) -> bool {
        match self {
            SuiteConfig::OptimalRegularity { negative_control, .. }
            | SuiteConfig::Nondegeneracy { negative_control, .. }
            | SuiteConfig::Alternative { negative_control, .. }
            | SuiteConfig::MeasureStability { negative_control, .. }
            | SuiteConfig::Blowup { negative_control, .. }
            | SuiteConfig::Reifenberg { negative_control, .. } => *negative_control,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridBlock,
    #[serde(default = "default_coefficients")]
    pub coefficients: CoefficientFamily,
    #[serde(default)]
    pub f: ForcingFamily,
    #[serde(default = "default_boundary")]
    pub boundary: BoundaryProfile,
    #[serde(default)]
    pub solver: SolverBlock,
    /// Analyze a synthetic field instead of solving.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticField>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub suites: Vec<SuiteConfig>,
}

fn default_coefficients() -> CoefficientFamily {
    CoefficientFamily::Identity
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Loads a config; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let BoundaryProfile::File { path: field } = &mut cfg.boundary {
            if Path::new(field).is_relative() {
                *field = base.join(&*field).to_string_lossy().into_owned();
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    /// Grid spacing implied by the grid block.
    pub fn h(&self) -> f64 {
        2.0 * self.grid.half_width / (self.grid.nodes_per_axis as f64 - 1.0)
    }

    /// Current value of a numeric dotted parameter, or a config error naming it.
    pub fn param_value(&self, param: &str) -> Result<f64, CliError> {
        if param == "grid.h" {
            return Ok(self.h());
        }
        let doc = toml::Value::try_from(self).map_err(|e| CliError::Config(e.to_string()))?;
        let mut slot = &doc;
        for key in param.split('.') {
            slot = match slot {
                toml::Value::Table(t) => t.get(key),
                toml::Value::Array(a) => key.parse::<usize>().ok().and_then(|i| a.get(i)),
                _ => None,
            }
            .ok_or_else(|| CliError::Config(format!("unknown parameter `{param}`")))?;
        }
        match slot {
            toml::Value::Integer(i) => Ok(*i as f64),
            toml::Value::Float(f) => Ok(*f),
            _ => Err(CliError::Config(format!("{param}: not a numeric parameter"))),
        }
    }

    /// Copy with one dotted parameter replaced. `grid.h` is an alias that
    /// sets `grid.nodes_per_axis` to `2 half_width / h + 1`.
    pub fn with_param(&self, param: &str, value: f64) -> Result<Self, CliError> {
        if param == "grid.h" {
            if !(value > 0.0) {
                return Err(CliError::Config(format!("grid.h: spacing must be positive, got {value}")));
            }
            let cells = 2.0 * self.grid.half_width / value;
            let rounded = cells.round();
            if (cells - rounded).abs() > 1e-9 * cells {
                return Err(CliError::Config(format!(
                    "grid.h: {value} does not divide the box width {}",
                    2.0 * self.grid.half_width
                )));
            }
            let mut cfg = self.clone();
            cfg.grid.nodes_per_axis = rounded as usize + 1;
            return Ok(cfg);
        }
        let mut doc = toml::Value::try_from(self).map_err(|e| CliError::Config(e.to_string()))?;
        let mut slot = &mut doc;
        for key in param.split('.') {
            slot = match slot {
                toml::Value::Table(t) => t.get_mut(key),
                toml::Value::Array(a) => key.parse::<usize>().ok().and_then(|i| a.get_mut(i)),
                _ => None,
            }
            .ok_or_else(|| CliError::Config(format!("unknown parameter `{param}`")))?;
        }
        *slot = match slot {
            toml::Value::Integer(_) if value.fract() == 0.0 => toml::Value::Integer(value as i64),
            toml::Value::Integer(_) => {
                return Err(CliError::Config(format!("{param}: expected an integer, got {value}")))
            }
            toml::Value::Float(_) => toml::Value::Float(value),
            _ => return Err(CliError::Config(format!("{param}: not a numeric parameter"))),
        };
        doc.try_into().map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))
    }
}

/// Parses a sweep value: a decimal number or a fraction such as `1/64`.
pub fn parse_value(text: &str) -> Result<f64, CliError> {
    let bad = || CliError::Config(format!("bad sweep value `{text}`"));
    let t = text.trim();
    let v = match t.split_once('/') {
        Some((num, den)) => {
            let n: f64 = num.trim().parse().map_err(|_| bad())?;
            let d: f64 = den.trim().parse().map_err(|_| bad())?;
            n / d
        }
        None => t.parse().map_err(|_| bad())?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}
