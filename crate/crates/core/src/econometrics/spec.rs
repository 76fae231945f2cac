use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the two inputs of an interaction are residualised before multiplying.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrthoMode {
    /// Keep `x1`, replace `x2` by its residual on `x1`.
    ResidualizeSecond,
    /// Replace each input by its residual on the other.
    #[default]
    Mutual,
    /// Plain product of the raw inputs.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RegressorEntry {
    Name(String),
    Lagged {
        name: String,
        #[serde(default)]
        lag: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Regressor {
    pub name: String,
    pub lag: usize,
}

impl From<RegressorEntry> for Regressor {
    fn from(e: RegressorEntry) -> Self {
        match e {
            RegressorEntry::Name(name) => Regressor { name, lag: 0 },
            RegressorEntry::Lagged { name, lag } => Regressor { name, lag },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub x1: String,
    pub x2: String,
    #[serde(default)]
    pub lag: usize,
    #[serde(default)]
    pub mode: OrthoMode,
}

impl Interaction {
    pub fn label(&self) -> String {
        format!("{}*{}", self.x1, self.x2)
    }
}

/// One column of a model suite: dependent variable, lagged regressors,
/// orthogonalised interactions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawSpec")]
pub struct RegressionSpec {
    pub label: String,
    pub dependent: String,
    pub regressors: Vec<Regressor>,
    pub interactions: Vec<Interaction>,
    pub intercept: bool,
}

#[derive(Deserialize)]
struct RawSpec {
    #[serde(default)]
    label: String,
    dependent: String,
    #[serde(default)]
    regressors: Vec<RegressorEntry>,
    #[serde(default)]
    interactions: Vec<Interaction>,
    #[serde(default = "yes")]
    intercept: bool,
}

fn yes() -> bool {
    true
}

impl From<RawSpec> for RegressionSpec {
    fn from(raw: RawSpec) -> Self {
        Self {
            label: raw.label,
            dependent: raw.dependent,
            regressors: raw.regressors.into_iter().map(Regressor::from).collect(),
            interactions: raw.interactions,
            intercept: raw.intercept,
        }
    }
}

impl RegressionSpec {
    pub fn new(label: &str, dependent: &str) -> Self {
        Self {
            label: label.to_string(),
            dependent: dependent.to_string(),
            regressors: Vec::new(),
            interactions: Vec::new(),
            intercept: true,
        }
    }

    pub fn regressor(mut self, name: &str, lag: usize) -> Self {
        self.regressors.push(Regressor {
            name: name.to_string(),
            lag,
        });
        self
    }

    pub fn interaction(mut self, x1: &str, x2: &str, lag: usize, mode: OrthoMode) -> Self {
        self.interactions.push(Interaction {
            x1: x1.to_string(),
            x2: x2.to_string(),
            lag,
            mode,
        });
        self
    }

    pub fn without_intercept(mut self) -> Self {
        self.intercept = false;
        self
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SpecFile {
    List(Vec<RegressionSpec>),
    Wrapped { specs: Vec<RegressionSpec> },
}

/// Parses a JSON spec file: either a list of specs or `{"specs": [...]}`.
/// A blank file is an empty suite. Unlabelled specs are numbered from 1.
pub fn read_specs<R: Read>(mut source: R) -> Result<Vec<RegressionSpec>> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut specs = match serde_json::from_str::<SpecFile>(&text) {
        Ok(SpecFile::List(s)) | Ok(SpecFile::Wrapped { specs: s }) => s,
        Err(e) => {
            return Err(Error::Parse {
                line: e.line() as u64,
                message: e.to_string(),
            })
        }
    };
    for (i, s) in specs.iter_mut().enumerate() {
        if s.label.is_empty() {
            s.label = (i + 1).to_string();
        }
    }
    Ok(specs)
}
