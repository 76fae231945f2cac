use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};

use super::RegionalPanel;
use crate::error::{Error, Result};

fn parse_cell(raw: &str, line: u64, column: &str) -> Result<Option<f64>> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(None);
    }
    raw.parse::<f64>().map(Some).map_err(|_| Error::Parse {
        line,
        message: format!("column `{column}`: `{raw}` is not a number"),
    })
}

/// Reads a wide panel CSV (`region,year,<var>...`). An empty `schema` loads
/// every variable column; otherwise only the named ones, in schema order.
///
/// Repeated `(region, year)` rows are merged when they agree cell for cell and
/// rejected otherwise. Regions keep their first-seen order, years are sorted.
pub fn load_panel<R: Read>(source: R, schema: &[&str]) -> Result<RegionalPanel> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header = reader.headers()?.clone();
    if header.len() < 2 || &header[0] != "region" || &header[1] != "year" {
        return Err(Error::Parse {
            line: 1,
            message: "header must start with `region,year`".into(),
        });
    }
    let available: Vec<&str> = header.iter().skip(2).collect();
    let selected: Vec<(String, usize)> = if schema.is_empty() {
        available
            .iter()
            .enumerate()
            .map(|(i, n)| (n.to_string(), i + 2))
            .collect()
    } else {
        schema
            .iter()
            .map(|name| {
                available
                    .iter()
                    .position(|a| a == name)
                    .map(|i| (name.to_string(), i + 2))
                    .ok_or_else(|| Error::UnknownVariable(name.to_string()))
            })
            .collect::<Result<_>>()?
    };

    let mut regions: Vec<String> = Vec::new();
    let mut years = BTreeSet::new();
    let mut rows: HashMap<(String, i32), Vec<Option<f64>>> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::Parse {
                line,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let region = record[0].to_string();
        if region.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty region".into(),
            });
        }
        let year: i32 = record[1].parse().map_err(|_| Error::Parse {
            line,
            message: format!("year `{}` is not an integer", &record[1]),
        })?;
        let values = selected
            .iter()
            .map(|(name, col)| parse_cell(&record[*col], line, name))
            .collect::<Result<Vec<_>>>()?;

        if !regions.contains(&region) {
            regions.push(region.clone());
        }
        years.insert(year);
        match rows.get(&(region.clone(), year)) {
            Some(existing) => {
                if let Some(i) = existing.iter().zip(&values).position(|(a, b)| a != b) {
                    return Err(Error::DuplicateConflict {
                        region,
                        year,
                        variable: selected[i].0.clone(),
                    });
                }
            }
            None => {
                rows.insert((region, year), values);
            }
        }
    }

    let years: Vec<i32> = years.into_iter().collect();
    let mut absent = Vec::new();
    for r in &regions {
        for &y in &years {
            if !rows.contains_key(&(r.clone(), y)) {
                absent.push(format!("({r}, {y})"));
            }
        }
    }
    if !absent.is_empty() {
        return Err(Error::Validation(format!(
            "unbalanced panel, missing cells: {}",
            absent.join(", ")
        )));
    }

    let mut panel = RegionalPanel::new(regions, years)?;
    for (j, (name, _)) in selected.iter().enumerate() {
        let mut values = Vec::with_capacity(panel.n_obs());
        for r in panel.regions() {
            for &y in panel.years() {
                values.push(rows[&(r.clone(), y)][j]);
            }
        }
        panel.set_variable(name, values)?;
    }
    Ok(panel)
}

/// Writes the panel in the same wide schema `load_panel` reads. Values use
/// the shortest round-trip representation, missing cells are empty.
pub fn write_panel_csv<W: Write>(panel: &RegionalPanel, sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    let mut header = vec!["region".to_string(), "year".to_string()];
    header.extend(panel.variable_names().iter().map(|s| s.to_string()));
    writer.write_record(&header)?;
    for (r, region) in panel.regions().iter().enumerate() {
        for (t, year) in panel.years().iter().enumerate() {
            let mut row = vec![region.clone(), year.to_string()];
            for var in panel.variables() {
                row.push(match var.values[panel.index(r, t)] {
                    Some(v) => v.to_string(),
                    None => String::new(),
                });
            }
            writer.write_record(&row)?;
        }
    }
    writer.flush()?;
    Ok(())
}
