use super::spec::OrthoMode;
use crate::error::{Error, Result};
use crate::linalg::simple_residuals;
use crate::panel::RegionalPanel;

/// A panel column with missing cells.
type Series = Vec<Option<f64>>;

fn is_constant(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] == w[1])
}

/// Residualises a pair of series against each other (each regression
/// includes an intercept). Constant inputs are rejected as `ZeroVariance("x1")`
/// or `ZeroVariance("x2")`.
pub fn orthogonalize_series(
    x1: &[f64],
    x2: &[f64],
    mode: OrthoMode,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if x1.len() != x2.len() {
        return Err(Error::LengthMismatch {
            left: x1.len(),
            right: x2.len(),
        });
    }
    if x1.len() < 2 || is_constant(x1) {
        return Err(Error::ZeroVariance("x1".into()));
    }
    if is_constant(x2) {
        return Err(Error::ZeroVariance("x2".into()));
    }
    Ok(match mode {
        OrthoMode::None => (x1.to_vec(), x2.to_vec()),
        OrthoMode::ResidualizeSecond => (x1.to_vec(), simple_residuals(x2, x1)),
        OrthoMode::Mutual => (simple_residuals(x1, x2), simple_residuals(x2, x1)),
    })
}

/// Panel form of [`orthogonalize_series`], computed over the cells where both
/// variables are observed. Other cells come back missing.
pub fn orthogonalize(
    panel: &RegionalPanel,
    x1: &str,
    x2: &str,
    mode: OrthoMode,
) -> Result<(Series, Series)> {
    let a = panel.require(x1)?;
    let b = panel.require(x2)?;
    let rows: Vec<usize> = (0..panel.n_obs())
        .filter(|&i| a[i].is_some() && b[i].is_some())
        .collect();
    let sa: Vec<f64> = rows.iter().map(|&i| a[i].unwrap()).collect();
    let sb: Vec<f64> = rows.iter().map(|&i| b[i].unwrap()).collect();
    let (oa, ob) = orthogonalize_series(&sa, &sb, mode).map_err(|e| match e {
        Error::ZeroVariance(w) => Error::ZeroVariance(if w == "x1" { x1 } else { x2 }.to_string()),
        other => other,
    })?;
    let mut out_a = vec![None; panel.n_obs()];
    let mut out_b = vec![None; panel.n_obs()];
    for (j, &i) in rows.iter().enumerate() {
        out_a[i] = Some(oa[j]);
        out_b[i] = Some(ob[j]);
    }
    Ok((out_a, out_b))
}

/// Elementwise product.
pub fn interaction_term(s1: &[f64], s2: &[f64]) -> Result<Vec<f64>> {
    if s1.len() != s2.len() {
        return Err(Error::LengthMismatch {
            left: s1.len(),
            right: s2.len(),
        });
    }
    Ok(s1.iter().zip(s2).map(|(a, b)| a * b).collect())
}
