//! Scenario configuration: JSON parsing, schema validation, semantic checks.

use std::path::PathBuf;

use copycat_core::hilbert::default_labels;
use copycat_core::model::AmpMode;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// The published schema, also shipped in `schema/scenario.schema.json`.
pub const SCHEMA: &str = include_str!("../schema/scenario.schema.json");

pub const SCHEMA_VERSION: u32 = 1;

/// Allowed `| Σ|c|² − 1 |` in a config file. Coefficients are never rescaled.
pub const CONFIG_NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub system: SystemConfig,
    pub environment: EnvironmentConfig,
    pub grid: GridConfig,
    pub outputs: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub dimension: usize,
    pub coeffs: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmpModeConfig {
    #[default]
    Random,
    Equal,
}

impl From<AmpModeConfig> for AmpMode {
    fn from(m: AmpModeConfig) -> Self {
        match m {
            AmpModeConfig::Random => AmpMode::Random,
            AmpModeConfig::Equal => AmpMode::Equal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrawRange {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BranchFactors {
    Explicit(Vec<f64>),
    Draw { draw: DrawRange },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub n: usize,
    pub seed: u64,
    #[serde(default = "one")]
    pub width: f64,
    #[serde(default)]
    pub amp_mode: AmpModeConfig,
    #[serde(default = "one")]
    pub lambda: f64,
    pub branch_factors: BranchFactors,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    #[default]
    Absolute,
    DecoherenceTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_max: f64,
    pub points: usize,
    pub spacing: Spacing,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    #[serde(default)]
    pub unit: TimeUnit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub csv_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg_path: Option<PathBuf>,
    pub curves: Vec<String>,
    #[serde(default)]
    pub log_x: bool,
    #[serde(default)]
    pub log_y: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_range: Option<[f64; 2]>,
}

/// A requested output column, resolved against the system dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curve {
    Coherence,
    EntropyExact,
    /// Eigenvalue `k` (0-based) of the exact reduced state.
    Eigenvalue(usize),
    /// Population of pointer state `s` in tracked eigenstate `k`.
    Population { state: usize, pointer: usize },
    EntropyPerturbative,
    SecondEigenvaluePerturbative,
    SpinExact(Axis),
    SpinPerturbative(Axis),
    CopycatFidelity(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Curve {
    /// Parses `name` for a `d`-level system.
    pub fn parse(name: &str, d: usize) -> Option<Self> {
        let qubit_only = |c: Curve| (d == 2).then_some(c);
        match name {
            "coherence" => return Some(Curve::Coherence),
            "entropy_np" => return Some(Curve::EntropyExact),
            "entropy_p" => return qubit_only(Curve::EntropyPerturbative),
            "p2_p" => return qubit_only(Curve::SecondEigenvaluePerturbative),
            "sx_np" => return qubit_only(Curve::SpinExact(Axis::X)),
            "sy_np" => return qubit_only(Curve::SpinExact(Axis::Y)),
            "sz_np" => return qubit_only(Curve::SpinExact(Axis::Z)),
            "sx_p" => return qubit_only(Curve::SpinPerturbative(Axis::X)),
            "sy_p" => return qubit_only(Curve::SpinPerturbative(Axis::Y)),
            "sz_p" => return qubit_only(Curve::SpinPerturbative(Axis::Z)),
            "copycat_f1" => return qubit_only(Curve::CopycatFidelity(0)),
            "copycat_f2" => return qubit_only(Curve::CopycatFidelity(1)),
            _ => {}
        }
        if let Some(k) = name.strip_prefix('p').and_then(|k| k.parse::<usize>().ok()) {
            return (1..=d).contains(&k).then(|| Curve::Eigenvalue(k - 1));
        }
        let rest = name.strip_prefix("pop_psi")?;
        let (k, label) = rest.split_once('_')?;
        let k: usize = k.parse().ok()?;
        let pointer = default_labels(d).iter().position(|l| l == label)?;
        (1..=d).contains(&k).then(|| Curve::Population {
            state: k - 1,
            pointer,
        })
    }

    /// Eigenstates that must be tracked to produce this curve.
    pub fn tracked(&self) -> usize {
        match *self {
            Curve::Eigenvalue(k) => k + 1,
            Curve::Population { state, .. } => state + 1,
            Curve::CopycatFidelity(_) => 2,
            _ => 0,
        }
    }

    pub fn is_perturbative(&self) -> bool {
        matches!(
            self,
            Curve::EntropyPerturbative | Curve::SecondEigenvaluePerturbative | Curve::SpinPerturbative(_)
        )
    }
}

impl ScenarioConfig {
    /// Schema validation, typed parse, then semantic checks.
    pub fn from_json_str(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::config("", format!("not valid JSON: {e}")))?;
        validate_schema(&value)?;
        let config: ScenarioConfig = serde_path_to_error::deserialize(&value)
            .map_err(|e| CliError::config(&e.path().to_string(), e.inner().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn curves(&self) -> Result<Vec<Curve>, CliError> {
        let d = self.system.dimension;
        self.outputs
            .curves
            .iter()
            .enumerate()
            .map(|(i, name)| {
                Curve::parse(name, d).ok_or_else(|| {
                    CliError::config(
                        &format!("outputs.curves[{i}]"),
                        format!("unknown curve `{name}` for a {d}-level system"),
                    )
                })
            })
            .collect()
    }

    /// Checks the schema cannot express.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        let sys = &self.system;
        if sys.coeffs.len() != sys.dimension {
            return Err(CliError::config(
                "system.coeffs",
                format!("{} coefficients for dimension {}", sys.coeffs.len(), sys.dimension),
            ));
        }
        for (i, c) in sys.coeffs.iter().enumerate() {
            if !c.iter().all(|x| x.is_finite()) {
                return Err(CliError::config(&format!("system.coeffs[{i}]"), "not finite".into()));
            }
        }
        let norm_sq: f64 = sys.coeffs.iter().map(|[re, im]| re * re + im * im).sum();
        if (norm_sq - 1.0).abs() > CONFIG_NORM_TOL {
            return Err(CliError::config(
                "system.coeffs",
                format!("squared norm is {norm_sq}; coefficients must be normalized to within {CONFIG_NORM_TOL:e}"),
            ));
        }

        let env = &self.environment;
        for (path, x) in [("environment.width", env.width), ("environment.lambda", env.lambda)] {
            if !x.is_finite() {
                return Err(CliError::config(path, "not finite".into()));
            }
        }
        match &env.branch_factors {
            BranchFactors::Explicit(f) => {
                if f.len() != sys.dimension {
                    return Err(CliError::config(
                        "environment.branch_factors",
                        format!("{} factors for dimension {}", f.len(), sys.dimension),
                    ));
                }
                if let Some(i) = f.iter().position(|x| !x.is_finite()) {
                    return Err(CliError::config(&format!("environment.branch_factors[{i}]"), "not finite".into()));
                }
            }
            BranchFactors::Draw { draw } => {
                if !(draw.min.is_finite() && draw.max.is_finite() && draw.min < draw.max) {
                    return Err(CliError::config(
                        "environment.branch_factors.draw",
                        "need finite min < max".into(),
                    ));
                }
            }
        }

        let grid = &self.grid;
        if !grid.t_max.is_finite() {
            return Err(CliError::config("grid.t_max", "not finite".into()));
        }
        match (grid.spacing, grid.t_min) {
            (Spacing::Log, None) => {
                return Err(CliError::config("grid.t_min", "required for a log grid".into()));
            }
            (Spacing::Log, Some(t)) if !(t.is_finite() && t > 0.0 && t < grid.t_max) => {
                return Err(CliError::config("grid.t_min", "must lie in (0, t_max)".into()));
            }
            (Spacing::Linear, Some(_)) => {
                return Err(CliError::config("grid.t_min", "only meaningful for a log grid".into()));
            }
            _ => {}
        }
        if grid.spacing == Spacing::Log && grid.points < 3 {
            return Err(CliError::config("grid.points", "a log grid needs at least 3 points".into()));
        }

        if let Some([lo, hi]) = self.outputs.y_range {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(CliError::config("outputs.y_range", "need finite lo < hi".into()));
            }
        }
        self.curves()?;
        Ok(())
    }
}

fn validate_schema(value: &serde_json::Value) -> Result<(), CliError> {
    let schema: serde_json::Value = serde_json::from_str(SCHEMA).expect("embedded schema is JSON");
    let validator = jsonschema::validator_for(&schema).expect("embedded schema compiles");
    if let Some(err) = validator.iter_errors(value).next() {
        let path = err.instance_path().to_string();
        let path = path.trim_start_matches('/').replace('/', ".");
        return Err(CliError::config(&path, format!("schema violation: {err}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_names() {
        assert_eq!(Curve::parse("p2", 2), Some(Curve::Eigenvalue(1)));
        assert_eq!(Curve::parse("p3", 2), None);
        assert_eq!(Curve::parse("p0", 2), None);
        assert_eq!(
            Curve::parse("pop_psi2_up", 2),
            Some(Curve::Population { state: 1, pointer: 0 })
        );
        assert_eq!(
            Curve::parse("pop_psi1_-1", 3),
            Some(Curve::Population { state: 0, pointer: 2 })
        );
        assert_eq!(
            Curve::parse("pop_psi2_7", 30),
            Some(Curve::Population { state: 1, pointer: 7 })
        );
        assert_eq!(Curve::parse("sx_np", 3), None);
        assert_eq!(Curve::parse("pop_psi1_up", 30), None);
        assert_eq!(Curve::parse("pop_psi0_up", 2), None);
        assert_eq!(Curve::parse("bogus", 2), None);
    }
}
