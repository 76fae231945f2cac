//! Least-squares plumbing shared by the regression routines.

use nalgebra::{DMatrix, DVector};

/// Relative threshold on the diagonal of R below which a column is treated
/// as linearly dependent on the ones before it.
pub(crate) const RANK_TOL: f64 = 1e-10;

/// Thin QR least-squares fit.
pub(crate) struct QrFit {
    pub r: DMatrix<f64>,
    pub coefficients: DVector<f64>,
    pub residuals: DVector<f64>,
}

/// Index of the first column whose R diagonal collapses relative to its own norm.
pub(crate) fn first_dependent_column(x: &DMatrix<f64>, r: &DMatrix<f64>) -> Option<usize> {
    (0..x.ncols()).find(|&j| {
        let norm = x.column(j).norm();
        norm == 0.0 || r[(j, j)].abs() <= RANK_TOL * norm.max(1.0)
    })
}

/// Solves `min ||y - X b||` by Householder QR. Returns `Err(j)` with the
/// first dependent column when X is not of full column rank.
pub(crate) fn qr_fit(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<QrFit, usize> {
    let qr = x.clone().qr();
    let q = qr.q();
    let r = qr.r();
    if let Some(j) = first_dependent_column(x, &r) {
        return Err(j);
    }
    let qty = q.transpose() * y;
    let coefficients = r
        .solve_upper_triangular(&qty)
        .expect("non-singular triangular factor");
    let residuals = y - x * &coefficients;
    Ok(QrFit {
        r,
        coefficients,
        residuals,
    })
}

/// (X'X)^-1 from the R factor: R^-1 R^-T.
pub(crate) fn xtx_inverse(r: &DMatrix<f64>) -> DMatrix<f64> {
    let k = r.ncols();
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .expect("non-singular triangular factor");
    &r_inv * r_inv.transpose()
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Residuals of `target ~ 1 + regressor`.
pub(crate) fn simple_residuals(target: &[f64], regressor: &[f64]) -> Vec<f64> {
    let mx = mean(regressor);
    let my = mean(target);
    let sxx: f64 = regressor.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = regressor
        .iter()
        .zip(target)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    let slope = sxy / sxx;
    target
        .iter()
        .zip(regressor)
        .map(|(y, x)| (y - my) - slope * (x - mx))
        .collect()
}

/// Pearson correlation; NaN when either side has zero spread.
pub(crate) fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let ma = mean(a);
    let mb = mean(b);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    sab / (saa * sbb).sqrt()
}
