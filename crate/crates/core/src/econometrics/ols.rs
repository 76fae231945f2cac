use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, FisherSnedecor, Normal};

use super::orthogonal::{interaction_term, orthogonalize_series};
use super::spec::RegressionSpec;
use super::vif::vif;
use crate::error::{Error, Result};
use crate::linalg::{qr_fit, xtx_inverse, RANK_TOL};
use crate::panel::{lag, lagged_name, RegionalPanel};

pub const INTERCEPT: &str = "CONS";

/// White-type covariance variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum HcType {
    Hc0,
    #[default]
    Hc1,
    Hc2,
    Hc3,
}

impl HcType {
    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            0 => Some(Self::Hc0),
            1 => Some(Self::Hc1),
            2 => Some(Self::Hc2),
            3 => Some(Self::Hc3),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RobustCovariance {
    pub covariance: DMatrix<f64>,
    pub standard_errors: Vec<f64>,
}

/// Sandwich covariance (X'X)^-1 X' diag(w) X (X'X)^-1 with HC weights.
pub fn robust_se(
    design: &DMatrix<f64>,
    residuals: &DVector<f64>,
    hc: HcType,
) -> Result<RobustCovariance> {
    let (n, k) = design.shape();
    if residuals.len() != n {
        return Err(Error::LengthMismatch {
            left: residuals.len(),
            right: n,
        });
    }
    if n <= k {
        return Err(Error::InsufficientData {
            required: k + 1,
            available: n,
        });
    }
    let qr = design.clone().qr();
    let r = qr.r();
    let q = qr.q();
    if (0..k).any(|j| r[(j, j)].abs() <= RANK_TOL * design.column(j).norm().max(1.0)) {
        return Err(Error::RankDeficient {
            columns: vec!["<design>".into()],
        });
    }
    let bread = xtx_inverse(&r);
    let leverage = |i: usize| q.row(i).norm_squared();
    let weights: Vec<f64> = (0..n)
        .map(|i| {
            let e2 = residuals[i] * residuals[i];
            match hc {
                HcType::Hc0 => e2,
                HcType::Hc1 => e2 * n as f64 / (n - k) as f64,
                HcType::Hc2 => e2 / (1.0 - leverage(i)),
                HcType::Hc3 => e2 / (1.0 - leverage(i)).powi(2),
            }
        })
        .collect();
    let mut meat = DMatrix::zeros(k, k);
    for (i, w) in weights.iter().enumerate() {
        let row = design.row(i);
        meat += row.transpose() * row * *w;
    }
    let cov = &bread * meat * &bread;
    let covariance = (&cov + cov.transpose()) * 0.5;
    let standard_errors = (0..k).map(|j| covariance[(j, j)].max(0.0).sqrt()).collect();
    Ok(RobustCovariance {
        covariance,
        standard_errors,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Coefficient {
    pub term: String,
    pub estimate: f64,
    pub robust_se: f64,
    pub classical_se: f64,
    pub t_robust: f64,
    /// Two-sided normal-approximation p-value of the robust t statistic.
    pub p_robust: f64,
}

impl Coefficient {
    pub fn stars(&self) -> &'static str {
        significance_stars(self.p_robust)
    }
}

pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegressionResult {
    pub label: String,
    /// Intercept, when present, comes last to match the published table layout.
    pub coefficients: Vec<Coefficient>,
    pub r_squared: f64,
    /// Wald F of the slopes under the robust covariance.
    pub f_robust: f64,
    /// Textbook F from R².
    pub f_classical: f64,
    pub vif: Vec<(String, f64)>,
    pub avg_vif: f64,
    pub n: usize,
    pub hc: HcType,
    #[serde(serialize_with = "matrix_rows")]
    pub robust_covariance: DMatrix<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

fn matrix_rows<S: serde::Serializer>(
    m: &DMatrix<f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect();
    serde::Serialize::serialize(&rows, s)
}

impl RegressionResult {
    pub fn coefficient(&self, term: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.term == term)
    }
}

/// Design matrix assembled from a panel for one spec.
#[derive(Debug, Clone)]
pub struct Design {
    pub names: Vec<String>,
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    /// Panel cells used, in panel order.
    pub rows: Vec<usize>,
    pub intercept: bool,
}

fn column(panel: &RegionalPanel, name: &str, k: usize) -> Result<Vec<Option<f64>>> {
    if k == 0 {
        Ok(panel.require(name)?.to_vec())
    } else {
        lag(panel, name, k)
    }
}

/// Lags, listwise deletion, orthogonalised interactions, intercept first.
pub fn build_design(panel: &RegionalPanel, spec: &RegressionSpec) -> Result<Design> {
    let y_all = panel.require(&spec.dependent)?;
    let mut names = Vec::new();
    let mut raw = Vec::new();
    for reg in &spec.regressors {
        names.push(lagged_name(&reg.name, reg.lag));
        raw.push(column(panel, &reg.name, reg.lag)?);
    }
    let mut inter_raw = Vec::new();
    for inter in &spec.interactions {
        names.push(lagged_name(&inter.label(), inter.lag));
        inter_raw.push((
            column(panel, &inter.x1, inter.lag)?,
            column(panel, &inter.x2, inter.lag)?,
        ));
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
        return Err(Error::InvalidSpec(format!("duplicate regressor `{dup}`")));
    }
    if names.iter().any(|n| n == INTERCEPT) {
        return Err(Error::InvalidSpec(format!(
            "`{INTERCEPT}` is reserved for the intercept"
        )));
    }

    let rows: Vec<usize> = (0..panel.n_obs())
        .filter(|&i| {
            y_all[i].is_some()
                && raw.iter().all(|c| c[i].is_some())
                && inter_raw
                    .iter()
                    .all(|(a, b)| a[i].is_some() && b[i].is_some())
        })
        .collect();
    let take = |c: &[Option<f64>]| -> Vec<f64> { rows.iter().map(|&i| c[i].unwrap()).collect() };

    let mut columns: Vec<Vec<f64>> = raw.iter().map(|c| take(c)).collect();
    for ((a, b), inter) in inter_raw.iter().zip(&spec.interactions) {
        let (a, b) = (take(a), take(b));
        let (oa, ob) = orthogonalize_series(&a, &b, inter.mode).map_err(|e| match e {
            Error::ZeroVariance(which) => Error::ZeroVariance(if which == "x1" {
                inter.x1.clone()
            } else {
                inter.x2.clone()
            }),
            other => other,
        })?;
        columns.push(interaction_term(&oa, &ob)?);
    }

    let n = rows.len();
    let mut all_names = Vec::new();
    if spec.intercept {
        all_names.push(INTERCEPT.to_string());
        columns.insert(0, vec![1.0; n]);
    }
    all_names.extend(names);
    let k = columns.len();
    let x = DMatrix::from_fn(n, k, |i, j| columns[j][i]);
    let y = DVector::from_iterator(n, take(y_all));
    Ok(Design {
        names: all_names,
        x,
        y,
        rows,
        intercept: spec.intercept,
    })
}

/// Columns spanned by `j`'s dependence on the independent columns before it.
fn collinear_set(x: &DMatrix<f64>, names: &[String], j: usize) -> Vec<String> {
    let mut set = Vec::new();
    if j > 0 {
        let prev = x.columns(0, j).into_owned();
        let target = x.column(j).into_owned();
        if let Ok(sol) = prev.clone().svd(true, true).solve(&target, 1e-12) {
            let scale = target.norm().max(1e-300);
            for (i, c) in sol.iter().enumerate() {
                if (c * prev.column(i).norm()).abs() > 1e-8 * scale {
                    set.push(names[i].clone());
                }
            }
        }
    }
    set.push(names[j].clone());
    set
}

/// Ordinary least squares with classical and robust errors on a prepared design.
pub fn fit_design(design: &Design, label: &str, hc: HcType) -> Result<RegressionResult> {
    let (n, k) = design.x.shape();
    if n <= k {
        return Err(Error::InsufficientData {
            required: k + 1,
            available: n,
        });
    }
    let fit = qr_fit(&design.x, &design.y).map_err(|j| Error::RankDeficient {
        columns: collinear_set(&design.x, &design.names, j),
    })?;
    let resid = &fit.residuals;
    let ssr = resid.norm_squared();
    let y_mean = design.y.mean();
    let sst = if design.intercept {
        design.y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>()
    } else {
        design.y.norm_squared()
    };
    if sst == 0.0 {
        return Err(Error::ZeroVariance("dependent".into()));
    }
    let r_squared = (1.0 - ssr / sst).clamp(0.0, 1.0);

    let dof = (n - k) as f64;
    let sigma2 = ssr / dof;
    let bread = xtx_inverse(&fit.r);
    let classical: Vec<f64> = (0..k)
        .map(|j| (sigma2 * bread[(j, j)]).max(0.0).sqrt())
        .collect();
    let robust = robust_se(&design.x, resid, hc)?;

    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut coefficients: Vec<Coefficient> = (0..k)
        .map(|j| {
            let estimate = fit.coefficients[j];
            let se = robust.standard_errors[j];
            let t = estimate / se;
            let p = if t.is_nan() {
                1.0
            } else {
                2.0 * (1.0 - normal.cdf(t.abs()))
            };
            Coefficient {
                term: design.names[j].clone(),
                estimate,
                robust_se: se,
                classical_se: classical[j],
                t_robust: t,
                p_robust: p,
            }
        })
        .collect();

    let slopes: Vec<usize> = (0..k).filter(|&j| !(design.intercept && j == 0)).collect();
    let q = slopes.len();
    let f_classical = if q == 0 {
        f64::NAN
    } else if r_squared >= 1.0 {
        f64::INFINITY
    } else {
        (r_squared / q as f64) / ((1.0 - r_squared) / dof)
    };
    let f_robust = if q == 0 {
        f64::NAN
    } else {
        let b = DVector::from_iterator(q, slopes.iter().map(|&j| fit.coefficients[j]));
        let v = DMatrix::from_fn(q, q, |a, c| robust.covariance[(slopes[a], slopes[c])]);
        match v.cholesky() {
            Some(ch) if b.iter().all(|x| x.is_finite()) => b.dot(&ch.solve(&b)) / q as f64,
            _ => f64::INFINITY,
        }
    };

    let mut warnings = Vec::new();
    let slope_names: Vec<String> = slopes.iter().map(|&j| design.names[j].clone()).collect();
    let (vif_values, avg_vif) = if q >= 2 {
        let xs = design.x.select_columns(&slopes);
        let v = vif(&xs, &slope_names)?;
        warnings.extend(v.warnings);
        (v.values, v.average)
    } else {
        (
            slope_names.iter().map(|s| (s.clone(), 1.0)).collect(),
            if q == 1 { 1.0 } else { f64::NAN },
        )
    };

    if design.intercept {
        let cons = coefficients.remove(0);
        coefficients.push(cons);
    }
    Ok(RegressionResult {
        label: label.to_string(),
        coefficients,
        r_squared,
        f_robust,
        f_classical,
        vif: vif_values,
        avg_vif,
        n,
        hc,
        robust_covariance: robust.covariance,
        warnings,
    })
}

/// Pooled OLS of one spec on the panel, reporting achieved N after lags.
pub fn pooled_ols(
    panel: &RegionalPanel,
    spec: &RegressionSpec,
    hc: HcType,
) -> Result<RegressionResult> {
    let design = build_design(panel, spec)?;
    fit_design(&design, &spec.label, hc)
}

/// p-value of an F statistic with the given degrees of freedom.
pub fn f_pvalue(f: f64, df1: f64, df2: f64) -> f64 {
    if f.is_infinite() {
        return 0.0;
    }
    if !(f.is_finite() && f >= 0.0) {
        return f64::NAN;
    }
    let dist = FisherSnedecor::new(df1, df2).expect("positive degrees of freedom");
    (1.0 - dist.cdf(f)).clamp(0.0, 1.0)
}
