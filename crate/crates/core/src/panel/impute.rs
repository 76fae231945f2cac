use std::collections::BTreeMap;

use super::RegionalPanel;
use crate::error::{Error, Result};
use crate::linalg::pearson;

#[derive(Debug, Clone)]
pub struct Imputation {
    pub panel: RegionalPanel,
    /// Years in which at least one target cell was filled.
    pub imputed_years: Vec<i32>,
    /// Number of filled cells.
    pub imputed_cells: usize,
    /// Correlation between observed values and what apportionment would have
    /// produced, pooled over years where target and proxy are fully observed.
    /// `None` when fewer than two such cells exist or either side is constant.
    pub diagnostic_correlation: Option<f64>,
}

/// Fills missing `target` cells with `national[t] * proxy[r,t] / sum_r proxy[r,t]`.
/// Observed cells are left untouched.
///
/// For the diagnostic, years with a complete target use `national[t]` when
/// supplied and the regional sum otherwise.
pub fn impute_by_apportionment(
    panel: &RegionalPanel,
    target: &str,
    national: &BTreeMap<i32, f64>,
    proxy: &str,
) -> Result<Imputation> {
    let target_values = panel.require(target)?;
    let proxy_values = panel.require(proxy)?;
    let n_regions = panel.n_regions();

    let mut filled = target_values.to_vec();
    let mut imputed_years = Vec::new();
    let mut imputed_cells = 0;
    let mut observed = Vec::new();
    let mut apportioned = Vec::new();

    for (t, &year) in panel.years().iter().enumerate() {
        let cells: Vec<usize> = (0..n_regions).map(|r| panel.index(r, t)).collect();
        let missing: Vec<usize> = cells
            .iter()
            .copied()
            .filter(|&i| target_values[i].is_none())
            .collect();
        let proxy_year: Option<Vec<f64>> = cells.iter().map(|&i| proxy_values[i]).collect();

        if missing.is_empty() {
            let Some(proxy_year) = proxy_year else {
                continue;
            };
            let proxy_total: f64 = proxy_year.iter().sum();
            if proxy_total == 0.0 {
                continue;
            }
            let actual: Vec<f64> = cells.iter().map(|&i| target_values[i].unwrap()).collect();
            let total = national
                .get(&year)
                .copied()
                .unwrap_or_else(|| actual.iter().sum());
            observed.extend_from_slice(&actual);
            apportioned.extend(proxy_year.iter().map(|p| total * p / proxy_total));
            continue;
        }

        let total = *national.get(&year).ok_or_else(|| {
            Error::MissingInput(format!(
                "national total for {year} (needed to impute `{target}`)"
            ))
        })?;
        let proxy_year = proxy_year.ok_or_else(|| {
            Error::MissingInput(format!("proxy `{proxy}` has missing cells in {year}"))
        })?;
        let proxy_total: f64 = proxy_year.iter().sum();
        if proxy_total == 0.0 {
            return Err(Error::DegenerateApportionment {
                year,
                proxy: proxy.to_string(),
            });
        }
        for &i in &missing {
            let r = i / panel.n_years();
            filled[i] = Some(total * proxy_year[r] / proxy_total);
        }
        imputed_cells += missing.len();
        imputed_years.push(year);
    }

    let diagnostic_correlation = if observed.len() >= 2 {
        let r = pearson(&observed, &apportioned);
        r.is_finite().then_some(r)
    } else {
        None
    };

    let mut out = panel.clone();
    out.set_variable(target, filled)?;
    Ok(Imputation {
        panel: out,
        imputed_years,
        imputed_cells,
        diagnostic_correlation,
    })
}
