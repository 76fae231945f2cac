//! Balanced region-by-year panels: ingestion, lags, summaries, imputation
//! and synthetic generation.

mod impute;
mod io;
mod stats;
mod synth;

pub use impute::{impute_by_apportionment, Imputation};
pub use io::{load_panel, write_panel_csv};
pub use stats::{
    correlation_matrix, descriptive_stats, CorrelationMatrix, DescriptiveStats, VariableStats,
};
pub use synth::{synthesize_panel, PsdRepair, SynthConfig, SynthOutput, MAX_REPAIR_SHIFT};

use crate::error::{Error, Result};

/// One named variable over the full R x T grid, region-major. `None` marks a
/// missing cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub values: Vec<Option<f64>>,
}

/// Balanced region x year table of named numeric variables.
///
/// Cell `(r, t)` of every variable lives at index `r * T + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionalPanel {
    regions: Vec<String>,
    years: Vec<i32>,
    variables: Vec<Variable>,
}

impl RegionalPanel {
    /// Empty panel over the given grid. Needs at least two distinct regions
    /// and two distinct years; years are kept in the order given.
    pub fn new(regions: Vec<String>, years: Vec<i32>) -> Result<Self> {
        if regions.len() < 2 || years.len() < 2 {
            return Err(Error::Validation(format!(
                "need at least 2 regions and 2 years, got {} x {}",
                regions.len(),
                years.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = regions.iter().find(|r| !seen.insert(r.as_str())) {
            return Err(Error::Validation(format!("duplicate region `{dup}`")));
        }
        let mut sorted = years.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != years.len() {
            return Err(Error::Validation("duplicate year".into()));
        }
        Ok(Self {
            regions,
            years,
            variables: Vec::new(),
        })
    }

    pub fn regions(&self) -> &[String] {
        &self.regions
    }

    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn n_regions(&self) -> usize {
        self.regions.len()
    }

    pub fn n_years(&self) -> usize {
        self.years.len()
    }

    /// Number of cells, R * T.
    pub fn n_obs(&self) -> usize {
        self.regions.len() * self.years.len()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable_names(&self) -> Vec<&str> {
        self.variables.iter().map(|v| v.name.as_str()).collect()
    }

    pub fn index(&self, region: usize, year: usize) -> usize {
        region * self.years.len() + year
    }

    pub fn get(&self, name: &str) -> Option<&[Option<f64>]> {
        self.variables
            .iter()
            .find(|v| v.name == name)
            .map(|v| v.values.as_slice())
    }

    pub fn require(&self, name: &str) -> Result<&[Option<f64>]> {
        self.get(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Complete values of a variable, or an error naming the first missing cell.
    pub fn complete(&self, name: &str) -> Result<Vec<f64>> {
        let values = self.require(name)?;
        values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.ok_or_else(|| {
                    let (r, t) = (i / self.n_years(), i % self.n_years());
                    Error::Validation(format!(
                        "`{name}` is missing at ({}, {})",
                        self.regions[r], self.years[t]
                    ))
                })
            })
            .collect()
    }

    /// Adds or replaces a variable. The value vector must cover the whole grid.
    pub fn set_variable(&mut self, name: &str, values: Vec<Option<f64>>) -> Result<()> {
        if values.len() != self.n_obs() {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: self.n_obs(),
            });
        }
        match self.variables.iter_mut().find(|v| v.name == name) {
            Some(v) => v.values = values,
            None => self.variables.push(Variable {
                name: name.to_string(),
                values,
            }),
        }
        Ok(())
    }

    pub fn with_variable(mut self, name: &str, values: Vec<Option<f64>>) -> Result<Self> {
        self.set_variable(name, values)?;
        Ok(self)
    }

    /// Convenience for fully observed columns.
    pub fn with_complete(self, name: &str, values: Vec<f64>) -> Result<Self> {
        self.with_variable(name, values.into_iter().map(Some).collect())
    }

    /// Copy of the panel with rows permuted region-wise and year-wise. Used to
    /// check order invariance of downstream statistics.
    pub fn reordered(&self, region_order: &[usize], year_order: &[usize]) -> Result<Self> {
        let regions = region_order
            .iter()
            .map(|&r| self.regions[r].clone())
            .collect();
        let years = year_order.iter().map(|&t| self.years[t]).collect();
        let mut out = RegionalPanel::new(regions, years)?;
        for var in &self.variables {
            let mut values = Vec::with_capacity(self.n_obs());
            for &r in region_order {
                for &t in year_order {
                    values.push(var.values[self.index(r, t)]);
                }
            }
            out.set_variable(&var.name, values)?;
        }
        Ok(out)
    }
}

/// Value at `(r, t)` replaced by the value at `(r, year_t - k)`; cells whose
/// source year is outside the panel become missing. Never crosses regions.
pub fn lag(panel: &RegionalPanel, variable: &str, k: usize) -> Result<Vec<Option<f64>>> {
    let values = panel.require(variable)?;
    if k == 0 {
        return Err(Error::InvalidSpec("lag order must be positive".into()));
    }
    if k >= panel.n_years() {
        return Err(Error::InvalidSpec(format!(
            "lag {k} needs more than {} years",
            panel.n_years()
        )));
    }
    let year_pos: std::collections::HashMap<i32, usize> = panel
        .years()
        .iter()
        .enumerate()
        .map(|(i, &y)| (y, i))
        .collect();
    let mut out = vec![None; panel.n_obs()];
    for r in 0..panel.n_regions() {
        for (t, &year) in panel.years().iter().enumerate() {
            if let Some(&src) = year_pos.get(&(year - k as i32)) {
                out[panel.index(r, t)] = values[panel.index(r, src)];
            }
        }
    }
    Ok(out)
}

/// Name used for a lagged copy of a variable.
pub fn lagged_name(variable: &str, k: usize) -> String {
    if k == 0 {
        variable.to_string()
    } else {
        format!("{variable}_L{k}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> RegionalPanel {
        RegionalPanel::new(vec!["A".into(), "B".into()], (2002..=2010).collect())
            .unwrap()
            .with_complete("x", (0..18).map(f64::from).collect())
            .unwrap()
    }

    #[test]
    fn rejects_degenerate_grid() {
        assert!(RegionalPanel::new(vec!["A".into()], vec![2002]).is_err());
        assert!(RegionalPanel::new(vec!["A".into(), "B".into()], vec![2002]).is_err());
    }

    #[test]
    fn lag_one_drops_first_year() {
        let p = toy();
        let l = lag(&p, "x", 1).unwrap();
        assert_eq!(l[p.index(0, 0)], None);
        assert_eq!(l[p.index(1, 0)], None);
        assert_eq!(l[p.index(0, 1)], Some(0.0));
        assert_eq!(l[p.index(1, 8)], Some(16.0));
        assert_eq!(l.iter().filter(|v| v.is_some()).count(), 16);
    }

    #[test]
    fn lag_four_and_bounds() {
        let p = toy();
        let l = lag(&p, "x", 4).unwrap();
        assert_eq!(l[p.index(0, 4)], Some(0.0));
        assert!(l[..4].iter().all(Option::is_none));
        assert!(lag(&p, "x", 0).is_err());
        assert!(lag(&p, "x", 9).is_err());
        assert!(lag(&p, "x", 8).is_ok());
    }

    #[test]
    fn lag_composes() {
        let p = toy();
        let once = lag(&p, "x", 1).unwrap();
        let p2 = p.clone().with_variable("x1", once).unwrap();
        let twice = lag(&p2, "x1", 1).unwrap();
        assert_eq!(twice, lag(&p, "x", 2).unwrap());
    }
}
