use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::DescriptiveStats;

/// Grand-mean elasticity beta * x_mean / y_mean.
pub fn elasticity(beta: f64, x_mean: f64, y_mean: f64) -> Result<f64> {
    if y_mean == 0.0 {
        return Err(Error::ZeroMean);
    }
    Ok(beta * x_mean / y_mean)
}

/// One provenance row: which coefficient, from which model column, at which
/// means. Blank means can be filled from descriptive stats with
/// [`resolve_means`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticityInput {
    pub variable: String,
    pub beta: f64,
    pub source_column: String,
    #[serde(default)]
    pub x_mean: Option<f64>,
    #[serde(default)]
    pub y_mean: Option<f64>,
    #[serde(default)]
    pub expected: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElasticityRow {
    pub variable: String,
    pub source_column: String,
    pub elasticity: f64,
    pub expected: Option<f64>,
    /// |elasticity - expected|.
    pub delta: Option<f64>,
    /// `delta <= tolerance`, when an expected value exists.
    pub matches: Option<bool>,
}

pub fn read_provenance<R: Read>(source: R) -> Result<Vec<ElasticityInput>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut rows = Vec::new();
    for row in reader.deserialize::<ElasticityInput>() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        if row.source_column.is_empty() {
            return Err(Error::MissingInput(format!(
                "no source column recorded for `{}`",
                row.variable
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Fills blank means from `stats`: x from the row's variable, y from
/// `dependent`. Means already present are kept.
pub fn resolve_means(
    inputs: &mut [ElasticityInput],
    stats: &DescriptiveStats,
    dependent: &str,
) -> Result<()> {
    let lookup = |name: &str| {
        stats
            .get(name)
            .map(|s| s.mean)
            .ok_or_else(|| Error::MissingInput(format!("no descriptive stats for `{name}`")))
    };
    for input in inputs.iter_mut() {
        if input.x_mean.is_none() {
            input.x_mean = Some(lookup(&input.variable)?);
        }
        if input.y_mean.is_none() {
            input.y_mean = Some(lookup(dependent)?);
        }
    }
    Ok(())
}

pub fn compute_elasticities(
    inputs: &[ElasticityInput],
    tolerance: f64,
) -> Result<Vec<ElasticityRow>> {
    inputs
        .iter()
        .map(|i| {
            let missing =
                |what: &str| Error::MissingInput(format!("no {what} mean for `{}`", i.variable));
            let x_mean = i.x_mean.ok_or_else(|| missing("regressor"))?;
            let y_mean = i.y_mean.ok_or_else(|| missing("dependent"))?;
            let e = elasticity(i.beta, x_mean, y_mean)?;
            let delta = i.expected.map(|x| (e - x).abs());
            Ok(ElasticityRow {
                variable: i.variable.clone(),
                source_column: i.source_column.clone(),
                elasticity: e,
                expected: i.expected,
                delta,
                matches: delta.map(|d| d <= tolerance),
            })
        })
        .collect()
}

pub fn write_elasticities_csv<W: Write>(
    rows: &[ElasticityRow],
    sink: W,
    precision: usize,
) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record([
        "variable",
        "source_column",
        "elasticity",
        "expected",
        "delta",
        "within_tolerance",
    ])?;
    let opt = |v: Option<f64>| {
        v.map(|x| format!("{:.*}", precision, x))
            .unwrap_or_default()
    };
    for r in rows {
        writer.write_record([
            r.variable.clone(),
            r.source_column.clone(),
            format!("{:.*}", precision, r.elasticity),
            opt(r.expected),
            opt(r.delta),
            r.matches.map(|m| m.to_string()).unwrap_or_default(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_rows() {
        assert!((elasticity(2.8559, 0.8968, 4.3633).unwrap() - 0.587).abs() < 5e-4);
        assert!((elasticity(0.3407, 1.084, 4.3633).unwrap() - 0.0847).abs() < 5e-4);
    }

    #[test]
    fn zero_cases() {
        assert_eq!(elasticity(0.0, 12.0, 3.0).unwrap(), 0.0);
        assert!(matches!(elasticity(1.0, 1.0, 0.0), Err(Error::ZeroMean)));
    }

    #[test]
    fn scale_free() {
        let (beta, x, y) = (0.37, 5.2, 3.1);
        let base = elasticity(beta, x, y).unwrap();
        for lambda in [1e-3, 0.5, 7.0, 1e4] {
            assert!((elasticity(beta / lambda, x * lambda, y).unwrap() - base).abs() < 1e-12);
        }
    }

    #[test]
    fn provenance_requires_source() {
        let bad = "variable,beta,source_column,x_mean,y_mean,expected\nA,1,,2,3,\n";
        assert!(matches!(
            read_provenance(bad.as_bytes()),
            Err(Error::MissingInput(_))
        ));
        let good =
            "variable,beta,source_column,x_mean,y_mean,expected\nA,1,T4.1,2,4,\nB,1,T4.2,2,4,0.6\n";
        let rows = compute_elasticities(&read_provenance(good.as_bytes()).unwrap(), 0.01).unwrap();
        assert_eq!(rows[0].expected, None);
        assert_eq!(rows[1].matches, Some(false));
    }

    #[test]
    fn blank_means_come_from_stats() {
        let text = "variable,beta,source_column,x_mean,y_mean,expected\nX,2,c1,,,\nZ,1,c2,,,\n";
        let mut inputs = read_provenance(text.as_bytes()).unwrap();
        assert!(matches!(
            compute_elasticities(&inputs, 0.01),
            Err(Error::MissingInput(_))
        ));
        let stats = DescriptiveStats::read_csv(
            "variable,count,mean,sd,min,max\nX,9,3,1,0,5\nY,9,4,1,0,9\n".as_bytes(),
        )
        .unwrap();
        assert!(resolve_means(&mut inputs, &stats, "Y").is_err());
        inputs.truncate(1);
        resolve_means(&mut inputs, &stats, "Y").unwrap();
        let rows = compute_elasticities(&inputs, 0.01).unwrap();
        assert_eq!(rows[0].elasticity, 1.5);
    }
}
