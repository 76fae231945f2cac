use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::RegionalPanel;
use crate::error::{Error, Result};
use crate::linalg::pearson;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableStats {
    pub variable: String,
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl VariableStats {
    /// Summary of a non-empty sample, sample (n - 1) standard deviation.
    pub fn from_values(variable: &str, values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Self {
            variable: variable.to_string(),
            count: values.len(),
            // pin the mean inside [min, max] against last-bit rounding
            mean: mean.clamp(min, max),
            sd,
            min,
            max,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub rows: Vec<VariableStats>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl DescriptiveStats {
    pub fn get(&self, variable: &str) -> Option<&VariableStats> {
        self.rows.iter().find(|r| r.variable == variable)
    }

    pub fn read_csv<R: Read>(source: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(source);
        let rows = reader
            .deserialize()
            .collect::<std::result::Result<Vec<VariableStats>, _>>()?;
        Ok(Self {
            rows,
            warnings: Vec::new(),
        })
    }

    pub fn write_csv<W: Write>(&self, sink: W, precision: usize) -> Result<()> {
        let mut writer = csv::Writer::from_writer(sink);
        writer.write_record(["variable", "count", "mean", "sd", "min", "max"])?;
        for r in &self.rows {
            writer.write_record([
                r.variable.clone(),
                r.count.to_string(),
                format!("{:.*}", precision, r.mean),
                format!("{:.*}", precision, r.sd),
                format!("{:.*}", precision, r.min),
                format!("{:.*}", precision, r.max),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Per-variable count, mean, sample sd, min and max over non-missing cells.
/// Variables with no observed cell are left out and noted in `warnings`.
pub fn descriptive_stats(panel: &RegionalPanel) -> DescriptiveStats {
    let mut out = DescriptiveStats::default();
    for var in panel.variables() {
        let observed: Vec<f64> = var.values.iter().flatten().copied().collect();
        match VariableStats::from_values(&var.name, &observed) {
            Some(s) => out.rows.push(s),
            None => out
                .warnings
                .push(format!("`{}` has no observed values; skipped", var.name)),
        }
    }
    out
}

/// Named symmetric correlation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: DMatrix<f64>,
}

impl CorrelationMatrix {
    pub fn new(names: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != names.len() || values.ncols() != names.len() {
            return Err(Error::LengthMismatch {
                left: values.nrows(),
                right: names.len(),
            });
        }
        Ok(Self { names, values })
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        Some(self.values[(self.position(a)?, self.position(b)?)])
    }

    /// Square CSV with a leading `variable` column. Blank cells in the upper
    /// triangle are filled from the lower one, so a lower-triangular table
    /// reads as the full symmetric matrix.
    pub fn read_csv<R: Read>(source: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(source);
        let names: Vec<String> = reader.headers()?.iter().skip(1).map(String::from).collect();
        let k = names.len();
        let mut cells = vec![vec![None; k]; k];
        let mut row_names = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if i >= k {
                return Err(Error::Parse {
                    line,
                    message: "more rows than columns".into(),
                });
            }
            row_names.push(record[0].to_string());
            for (j, cell) in cells[i].iter_mut().enumerate() {
                let raw = record.get(j + 1).unwrap_or("").trim();
                if raw.is_empty() {
                    continue;
                }
                *cell = Some(raw.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("`{raw}` is not a number"),
                })?);
            }
        }
        if row_names != names {
            return Err(Error::Parse {
                line: 1,
                message: "row labels must match the header order".into(),
            });
        }
        let mut values = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                values[(i, j)] = match (cells[i][j], cells[j][i]) {
                    (Some(v), _) | (None, Some(v)) => v,
                    (None, None) => {
                        return Err(Error::Parse {
                            line: i as u64 + 2,
                            message: format!("no value for ({}, {})", names[i], names[j]),
                        })
                    }
                };
            }
        }
        Self::new(names, values)
    }

    pub fn write_csv<W: Write>(&self, sink: W, precision: usize) -> Result<()> {
        let mut writer = csv::Writer::from_writer(sink);
        let mut header = vec!["variable".to_string()];
        header.extend(self.names.iter().cloned());
        writer.write_record(&header)?;
        for (i, name) in self.names.iter().enumerate() {
            let mut row = vec![name.clone()];
            row.extend(
                (0..self.names.len()).map(|j| format!("{:.*}", precision, self.values[(i, j)])),
            );
            writer.write_record(&row)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<Vec<f64>> = (0..self.names.len())
            .map(|i| self.values.row(i).iter().copied().collect())
            .collect();
        serde_json::json!({ "variables": self.names, "matrix": rows })
    }
}

/// Pearson correlations over the rows where every listed variable is observed.
pub fn correlation_matrix(panel: &RegionalPanel, variables: &[&str]) -> Result<CorrelationMatrix> {
    if variables.len() < 2 {
        return Err(Error::InvalidSpec(
            "correlation needs at least two variables".into(),
        ));
    }
    let columns = variables
        .iter()
        .map(|v| panel.require(v))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<usize> = (0..panel.n_obs())
        .filter(|&i| columns.iter().all(|c| c[i].is_some()))
        .collect();
    let data: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| rows.iter().map(|&i| c[i].unwrap()).collect())
        .collect();
    for (name, col) in variables.iter().zip(&data) {
        let first = col.first().copied();
        if col.len() < 2 || col.iter().all(|v| Some(*v) == first) {
            return Err(Error::ZeroVariance(name.to_string()));
        }
    }
    let k = variables.len();
    let mut values = DMatrix::identity(k, k);
    for i in 0..k {
        for j in (i + 1)..k {
            let r = pearson(&data[i], &data[j]).clamp(-1.0, 1.0);
            values[(i, j)] = r;
            values[(j, i)] = r;
        }
    }
    CorrelationMatrix::new(variables.iter().map(|s| s.to_string()).collect(), values)
}
