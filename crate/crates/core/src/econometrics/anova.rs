use serde::Serialize;

use super::ols::f_pvalue;
use crate::error::{Error, Result};
use crate::panel::RegionalPanel;

/// Two-way (region, year) decomposition of a variable's total sum of squares
/// without interaction.
#[derive(Debug, Clone, Serialize)]
pub struct VarianceDecomposition {
    pub variable: String,
    pub between_region: f64,
    pub between_time: f64,
    pub residual: f64,
    /// 1 - residual.
    pub systematic: f64,
    pub f_region: f64,
    pub f_time: f64,
    pub p_region: f64,
    pub p_time: f64,
    pub df_region: usize,
    pub df_time: usize,
    pub df_residual: usize,
}

/// Relative size below which a sum of squares counts as exactly zero.
const NEGLIGIBLE: f64 = 1e-12;

fn f_stat(ss: f64, df: usize, ss_res: f64, df_res: usize, sst: f64) -> (f64, f64) {
    if ss <= NEGLIGIBLE * sst {
        // no effect at all
        return (0.0, 1.0);
    }
    if ss_res <= NEGLIGIBLE * sst {
        return (f64::INFINITY, 0.0);
    }
    let f = (ss / df as f64) / (ss_res / df_res as f64);
    (f, f_pvalue(f, df as f64, df_res as f64))
}

pub fn variance_decomposition(
    panel: &RegionalPanel,
    variable: &str,
) -> Result<VarianceDecomposition> {
    let y = panel.complete(variable)?;
    let (nr, nt) = (panel.n_regions(), panel.n_years());
    let grand = y.iter().sum::<f64>() / y.len() as f64;
    let region_means: Vec<f64> = (0..nr)
        .map(|r| (0..nt).map(|t| y[panel.index(r, t)]).sum::<f64>() / nt as f64)
        .collect();
    let year_means: Vec<f64> = (0..nt)
        .map(|t| (0..nr).map(|r| y[panel.index(r, t)]).sum::<f64>() / nr as f64)
        .collect();
    let sst: f64 = y.iter().map(|v| (v - grand).powi(2)).sum();
    if sst == 0.0 {
        return Err(Error::ZeroVariance(variable.to_string()));
    }
    let ss_region = nt as f64
        * region_means
            .iter()
            .map(|m| (m - grand).powi(2))
            .sum::<f64>();
    let ss_time = nr as f64 * year_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let mut ss_res = 0.0;
    for r in 0..nr {
        for t in 0..nt {
            ss_res += (y[panel.index(r, t)] - region_means[r] - year_means[t] + grand).powi(2);
        }
    }
    let total = ss_region + ss_time + ss_res;
    let (df_region, df_time) = (nr - 1, nt - 1);
    let df_residual = df_region * df_time;
    let (f_region, p_region) = f_stat(ss_region, df_region, ss_res, df_residual, sst);
    let (f_time, p_time) = f_stat(ss_time, df_time, ss_res, df_residual, sst);
    let residual = ss_res / total;
    Ok(VarianceDecomposition {
        variable: variable.to_string(),
        between_region: ss_region / total,
        between_time: ss_time / total,
        residual,
        systematic: 1.0 - residual,
        f_region,
        f_time,
        p_region,
        p_time,
        df_region,
        df_time,
        df_residual,
    })
}

pub const DECOMPOSITION_HEADER: [&str; 7] = [
    "Variable",
    "BETWEEN-REGIONS/σ^2",
    "BETWEEN-TIME/σ^2",
    "RESIDUAL/σ^2",
    "SYSTEMATIC(MODEL)/σ^2",
    "F-REGION",
    "F-TIME",
];

fn f_cell(f: f64, p: f64, precision: usize) -> String {
    format!("{:.*} ({:.*})", precision, f, precision, p)
}

/// Table rows in the published column order, F cells as `F (p)`.
pub fn decomposition_rows(rows: &[VarianceDecomposition], precision: usize) -> Vec<Vec<String>> {
    rows.iter()
        .map(|d| {
            vec![
                d.variable.clone(),
                format!("{:.*}", precision, d.between_region),
                format!("{:.*}", precision, d.between_time),
                format!("{:.*}", precision, d.residual),
                format!("{:.*}", precision, d.systematic),
                f_cell(d.f_region, d.p_region, precision),
                f_cell(d.f_time, d.p_time, precision),
            ]
        })
        .collect()
}

pub fn decomposition_markdown(rows: &[VarianceDecomposition], precision: usize) -> String {
    let n = rows
        .first()
        .map(|d| (d.df_region + 1) * (d.df_time + 1))
        .unwrap_or(0);
    let mut out = format!("Variance Decomposition (N={n})\n\n");
    out.push_str(&format!("| {} |\n", DECOMPOSITION_HEADER.join(" | ")));
    out.push_str(&format!("|{}\n", "---|".repeat(DECOMPOSITION_HEADER.len())));
    for row in decomposition_rows(rows, precision) {
        out.push_str(&format!("| {} |\n", row.join(" | ")));
    }
    out.push_str(
        "\nNotes: F-test for regional and time effects (Probability of F in parentheses)\n",
    );
    out
}
