//! TOML scenario files.
//!
//! Matrices are arrays of rows. Exponents are numbers or the string "inf".

use std::path::Path;
use std::sync::Arc;

use ellipsum::geometry::{Exponent, PSumSet};
use ellipsum::linalg::{Matrix, SpdMatrix, Vector};
use ellipsum::outer::{FixedPointConfig, RecursionExponent};
use ellipsum::reach::{
    ControlSets, ControlTiming, ExplicitControls, LtiSystem, ModulatedControls, UncertaintyModel,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const TABLE1: &str = include_str!("../scenarios/table1.toml");
pub const TABLE2: &str = include_str!("../scenarios/table2.toml");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PValue {
    Number(f64),
    Text(InfLiteral),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InfLiteral {
    #[serde(rename = "inf")]
    Inf,
}

impl PValue {
    pub fn exponent(self, field: &str) -> Result<Exponent, CliError> {
        match self {
            PValue::Text(InfLiteral::Inf) => Ok(Exponent::Infinite),
            PValue::Number(p) => Exponent::finite(p).map_err(|e| CliError::Input(format!("{field}: {e}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CriterionChoice {
    Trace,
    Volume,
    #[default]
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Recursion {
    /// Map exponent p/(p+1), the stationary point of log det.
    #[default]
    PPlusOne,
    /// Map exponent p/(3p−1).
    ThreePMinusOne,
}

impl From<Recursion> for RecursionExponent {
    fn from(r: Recursion) -> Self {
        match r {
            Recursion::PPlusOne => RecursionExponent::PPlusOne,
            Recursion::ThreePMinusOne => RecursionExponent::ThreePMinusOne,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Timing {
    #[default]
    AppliedStep,
    CurrentStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Table,
    Log,
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub f: Vec<Vec<f64>>,
    pub g: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetSpec {
    pub p: PValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    pub shapes: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepShapes {
    pub shapes: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Modulation {
    #[serde(rename = "one-plus-cos-squared")]
    OnePlusCosSquared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ControlSpec {
    /// `U_j(t) = (1 + cos²(j t))·B_j`.
    Generator {
        p: PValue,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        modulation: Modulation,
        bases: Vec<Vec<Vec<f64>>>,
        frequencies: Vec<f64>,
        #[serde(default)]
        timing: Timing,
    },
    /// One shape list per step.
    Explicit {
        p: PValue,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        steps: Vec<StepShapes>,
        #[serde(default)]
        timing: Timing,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FixedPointSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recursion: Option<Recursion>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub state_dim: usize,
    pub input_dim: usize,
    pub horizon: usize,
    #[serde(default)]
    pub criterion: CriterionChoice,
    pub system: SystemSpec,
    pub initial: SetSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controls: Option<ControlSpec>,
    #[serde(default)]
    pub fixed_point: FixedPointSpec,
    #[serde(default)]
    pub sampler: SamplerSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// A scenario turned into library objects.
#[derive(Debug, Clone)]
pub struct Built {
    pub system: LtiSystem,
    pub model: UncertaintyModel,
}

fn matrix(rows: &[Vec<f64>], nrows: usize, ncols: usize, field: &str) -> Result<Matrix, CliError> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        let got_cols = rows.first().map_or(0, Vec::len);
        return Err(CliError::Input(format!(
            "{field}: expected a {nrows}x{ncols} matrix, got {} rows of length {got_cols}",
            rows.len()
        )));
    }
    Ok(Matrix::from_fn(nrows, ncols, |r, c| rows[r][c]))
}

fn spd(rows: &[Vec<f64>], d: usize, field: &str) -> Result<SpdMatrix, CliError> {
    SpdMatrix::new(matrix(rows, d, d, field)?).map_err(|e| CliError::Input(format!("{field}: {e}")))
}

fn shapes(list: &[Vec<Vec<f64>>], d: usize, field: &str) -> Result<Vec<SpdMatrix>, CliError> {
    if list.is_empty() {
        return Err(CliError::Input(format!("{field}: at least one shape is required")));
    }
    list.iter()
        .enumerate()
        .map(|(i, m)| spd(m, d, &format!("{field}[{i}]")))
        .collect()
}

fn center(c: &Option<Vec<f64>>, d: usize, field: &str) -> Result<Vector, CliError> {
    match c {
        None => Ok(Vector::zeros(d)),
        Some(v) if v.len() == d => Ok(Vector::from_column_slice(v)),
        Some(v) => Err(CliError::Input(format!("{field}: expected {d} entries, got {}", v.len()))),
    }
}

fn timing(t: Timing) -> ControlTiming {
    match t {
        Timing::AppliedStep => ControlTiming::AppliedStep,
        Timing::CurrentStep => ControlTiming::CurrentStep,
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Input(format!("scenario: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| e.context(path.display()))
    }

    /// A bundled scenario name or a path to a scenario file.
    pub fn resolve(arg: &str) -> Result<Self, CliError> {
        match arg {
            "table1" => Self::parse(TABLE1),
            "table2" => Self::parse(TABLE2),
            path => Self::load(Path::new(path)),
        }
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Input(format!("cannot serialize scenario: {e}")))
    }

    pub fn fixed_point(&self) -> FixedPointConfig {
        let d = FixedPointConfig::default();
        FixedPointConfig {
            tolerance: self.fixed_point.tolerance.unwrap_or(d.tolerance),
            max_iterations: self.fixed_point.max_iterations.unwrap_or(d.max_iterations),
            beta0: self.fixed_point.beta0.unwrap_or(d.beta0),
            exponent: self.fixed_point.recursion.unwrap_or_default().into(),
            ..d
        }
    }

    pub fn build(&self) -> Result<Built, CliError> {
        let (n, m) = (self.state_dim, self.input_dim);
        if n == 0 || m == 0 {
            return Err(CliError::Input("state_dim and input_dim must be positive".into()));
        }
        let f = matrix(&self.system.f, n, n, "system.f")?;
        let g = matrix(&self.system.g, n, m, "system.g")?;
        let system = LtiSystem::new(f, g).map_err(|e| CliError::Input(format!("system: {e}")))?;
        let initial = PSumSet::new(
            self.initial.p.exponent("initial.p")?,
            center(&self.initial.center, n, "initial.center")?,
            shapes(&self.initial.shapes, n, "initial.shapes")?,
        )
        .map_err(|e| CliError::Input(format!("initial: {e}")))?;
        let (controls, t): (Option<Arc<dyn ControlSets>>, ControlTiming) = match &self.controls {
            None => (None, ControlTiming::AppliedStep),
            Some(ControlSpec::Generator {
                p,
                center: c,
                modulation: Modulation::OnePlusCosSquared,
                bases,
                frequencies,
                timing: tm,
            }) => {
                let gen = ModulatedControls::new(
                    p.exponent("controls.p")?,
                    center(c, m, "controls.center")?,
                    shapes(bases, m, "controls.bases")?,
                    frequencies.clone(),
                )
                .map_err(|e| CliError::Input(format!("controls: {e}")))?;
                (Some(Arc::new(gen)), timing(*tm))
            }
            Some(ControlSpec::Explicit {
                p,
                center: c,
                steps,
                timing: tm,
            }) => {
                let p = p.exponent("controls.p")?;
                let c = center(c, m, "controls.center")?;
                let sets = steps
                    .iter()
                    .enumerate()
                    .map(|(k, s)| {
                        let field = format!("controls.steps[{k}].shapes");
                        PSumSet::new(p, c.clone(), shapes(&s.shapes, m, &field)?)
                            .map_err(|e| CliError::Input(format!("{field}: {e}")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let needed = match tm {
                    Timing::AppliedStep => self.horizon,
                    Timing::CurrentStep => self.horizon + 1,
                };
                if sets.len() < needed {
                    return Err(CliError::Input(format!(
                        "controls.steps: horizon {} needs {needed} steps, got {}",
                        self.horizon,
                        sets.len()
                    )));
                }
                let explicit = ExplicitControls::new(sets).map_err(|e| CliError::Input(format!("controls: {e}")))?;
                (Some(Arc::new(explicit)), timing(*tm))
            }
        };
        Ok(Built {
            system,
            model: UncertaintyModel::new(initial, controls, t),
        })
    }
}
