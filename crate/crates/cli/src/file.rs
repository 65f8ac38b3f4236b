//! The problem-file schema and its TOML encoding.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use warpres::operators::{Param, Params};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Inclusion,
    Coupled,
}

/// One problem per file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub kind: Kind,
    /// Dimension of the space; inclusion problems only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Set-valued part `A`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set: Option<OperatorSpec>,
    /// Single-valued part `B`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forward: Option<OperatorSpec>,
    /// `W` of the forward-backward-forward solver.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<OperatorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<OperatorSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub primal: Vec<PrimalSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dual: Vec<DualSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub link: Vec<LinkSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<SolutionSpec>,
}

/// A catalog name with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub name: String,
    #[serde(flatten)]
    pub params: BTreeMap<String, ParamValue>,
}

impl OperatorSpec {
    pub fn named(name: &str) -> Self {
        OperatorSpec {
            name: name.to_string(),
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: ParamValue) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn catalog_params(&self) -> Params {
        self.params
            .iter()
            .map(|(k, v)| {
                let p = match v {
                    ParamValue::Number(x) => Param::Number(*x),
                    ParamValue::List(x) => Param::List(x.clone()),
                    ParamValue::Matrix(x) => Param::Matrix(x.clone()),
                    ParamValue::Text(x) => Param::Text(x.clone()),
                };
                (k.clone(), p)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    List(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrimalSpec {
    pub dim: usize,
    /// `s*`; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<f64>>,
    pub set: OperatorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forward: Option<OperatorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualSpec {
    pub dim: usize,
    /// `r`; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
    pub set: OperatorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forward: Option<OperatorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub dual: usize,
    pub primal: usize,
    pub matrix: Vec<Vec<f64>>,
}

/// A constant or a named rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScheduleSpec {
    Constant(f64),
    Rule(Rule),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase", deny_unknown_fields)]
pub enum Rule {
    /// `limit + (start − limit) · ratio^n`
    Geometric { start: f64, ratio: f64, limit: f64 },
    /// Explicit values, the last one repeating.
    List { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RelaxSpec {
    Schedule(ScheduleSpec),
    /// Only `"tseng"`.
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PolicySpec {
    None,
    Additive {
        direction: Vec<f64>,
        magnitude: ScheduleSpec,
    },
    Inertial {
        alpha: ScheduleSpec,
    },
    Memory {
        weights: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        direction: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        magnitude: Option<ScheduleSpec>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_algo")]
    pub algo: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stall_limit: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<ScheduleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relax: Option<RelaxSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
    /// Haugazeau anchor of the strong solver.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<Vec<f64>>,
    /// `delegated` or `literal`; coupled problems only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicySpec>,
}

fn default_algo() -> String {
    "weak".to_string()
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            algo: default_algo(),
            epsilon: None,
            max_iter: None,
            tol_residual: None,
            tol_step: None,
            stall_limit: None,
            gamma: None,
            relax: None,
            start: None,
            anchor: None,
            mode: None,
            policy: None,
        }
    }
}

/// A known zero. For coupled problems `point` is the primal part and `dual`
/// the dual part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionSpec {
    pub point: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual: Option<Vec<f64>>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    1e-6
}

/// Decode a problem file from TOML text without validating it.
pub fn from_toml(text: &str, origin: &str) -> Result<ProblemFile, CliError> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = e
            .span()
            .map(|s| line_column(text, s.start))
            .unwrap_or((0, 0));
        CliError::Parse {
            origin: origin.to_string(),
            line,
            column,
            message: e.message().to_string(),
        }
    })
}

pub fn to_toml(file: &ProblemFile) -> Result<String, CliError> {
    toml::to_string(file).map_err(|e| CliError::Invalid(format!("cannot encode problem: {e}")))
}

pub fn read_problem(path: &Path) -> Result<ProblemFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    from_toml(&text, &path.display().to_string())
}

/// One-based line and column of a byte offset.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}
