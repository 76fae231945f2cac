use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::qr_fit;

/// Auxiliary R² at or above this is reported as perfect collinearity.
const PERFECT_FIT: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct VifResult {
    pub values: Vec<(String, f64)>,
    pub average: f64,
    pub warnings: Vec<String>,
}

/// Variance inflation factors of the non-intercept columns `regressors`.
///
/// Each column is regressed on an intercept plus all the other columns;
/// VIF_j = 1 / (1 - R_j²). Perfectly collinear columns get `+inf`.
pub fn vif(regressors: &DMatrix<f64>, names: &[String]) -> Result<VifResult> {
    let (n, k) = regressors.shape();
    if k < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            available: k,
        });
    }
    if names.len() != k {
        return Err(Error::LengthMismatch {
            left: names.len(),
            right: k,
        });
    }
    let mut values = Vec::with_capacity(k);
    let mut warnings = Vec::new();
    for (j, name) in names.iter().enumerate() {
        let target = regressors.column(j).into_owned();
        let mean = target.mean();
        let sst: f64 = target.iter().map(|v| (v - mean).powi(2)).sum();
        let aux = DMatrix::from_fn(n, k, |i, c| match c {
            0 => 1.0,
            c if c <= j => regressors[(i, c - 1)],
            c => regressors[(i, c)],
        });
        let r2 = if sst == 0.0 {
            1.0
        } else {
            match qr_fit(&aux, &DVector::from(target)) {
                Ok(fit) => 1.0 - fit.residuals.norm_squared() / sst,
                // the others are collinear among themselves; fall back to a
                // minimum-norm solve
                Err(_) => {
                    let sol = aux
                        .clone()
                        .svd(true, true)
                        .solve(&regressors.column(j).into_owned(), 1e-12)
                        .map_err(|e| Error::InvalidSpec(e.to_string()))?;
                    let resid = regressors.column(j) - &aux * sol;
                    1.0 - resid.norm_squared() / sst
                }
            }
        };
        let value = if r2 >= PERFECT_FIT {
            warnings.push(format!(
                "`{name}` is perfectly collinear with the other regressors"
            ));
            f64::INFINITY
        } else {
            1.0 / (1.0 - r2)
        };
        values.push((name.clone(), value));
    }
    let average = values.iter().map(|(_, v)| v).sum::<f64>() / k as f64;
    Ok(VifResult {
        values,
        average,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn orthogonal_columns() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, -1.0, 1.0, 1.0, -1.0, -1.0, -1.0]);
        let v = vif(&x, &names(2)).unwrap();
        for (_, val) in &v.values {
            assert!((val - 1.0).abs() < 1e-12);
        }
        assert!((v.average - 1.0).abs() < 1e-12);
    }

    #[test]
    fn near_duplicate_column() {
        let n = 50;
        let x = DMatrix::from_fn(n, 2, |i, j| {
            let base = (i as f64 * 0.37).sin() * 10.0;
            if j == 0 {
                base
            } else {
                base + 1e-4 * ((i * 7919 % 13) as f64 - 6.0)
            }
        });
        let v = vif(&x, &names(2)).unwrap();
        assert!(v.values[0].1 > 100.0 && v.values[1].1 > 100.0);
    }

    #[test]
    fn perfect_collinearity_is_infinite() {
        let x = DMatrix::from_fn(20, 3, |i, j| match j {
            0 => i as f64,
            1 => (i * i) as f64,
            _ => 3.0 * i as f64 - 2.0,
        });
        let v = vif(&x, &names(3)).unwrap();
        assert!(v.values[0].1.is_infinite());
        assert!(v.values[2].1.is_infinite());
        assert!(!v.warnings.is_empty());
        assert!(v.average.is_infinite());
    }

    #[test]
    fn needs_two_columns() {
        let x = DMatrix::from_element(5, 1, 1.0);
        assert!(vif(&x, &names(1)).is_err());
    }
}
