use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::{CorrelationMatrix, DescriptiveStats, RegionalPanel, VariableStats};
use crate::error::{Error, Result};
use crate::linalg::pearson;

/// Largest elementwise change the PSD repair may make to the target matrix.
pub const MAX_REPAIR_SHIFT: f64 = 0.25;

/// Eigenvalue floor used when repairing an indefinite target.
const EIGEN_FLOOR: f64 = 1e-4;

const CALIBRATION_ROUNDS: usize = 200;
const CALIBRATION_TOL: f64 = 1e-3;
const CALIBRATION_STEP: f64 = 0.5;
const CALIBRATION_PATIENCE: usize = 25;
const LOGNORMAL_HEADROOM: f64 = 1.5;

/// Grid the synthetic panel is laid out on.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub regions: Vec<String>,
    pub years: Vec<i32>,
}

impl Default for SynthConfig {
    /// Thirteen NUTS-2 regions of Greece over 2002-2010.
    fn default() -> Self {
        let regions = [
            "EL11", "EL12", "EL13", "EL14", "EL21", "EL22", "EL23", "EL24", "EL25", "EL30", "EL41",
            "EL42", "EL43",
        ];
        Self {
            regions: regions.iter().map(|s| s.to_string()).collect(),
            years: (2002..=2010).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PsdRepair {
    pub applied: bool,
    pub min_eigenvalue_before: f64,
    pub max_abs_shift: f64,
    pub frobenius_shift: f64,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub panel: RegionalPanel,
    pub repair: PsdRepair,
    /// Correlation actually imposed on the normal scores.
    pub target: CorrelationMatrix,
    pub achieved: DescriptiveStats,
    /// Largest |target - sample| Pearson correlation after calibration.
    pub max_correlation_gap: f64,
}

fn check_correlation(corr: &CorrelationMatrix) -> Result<()> {
    let k = corr.names.len();
    for i in 0..k {
        if (corr.values[(i, i)] - 1.0).abs() > 1e-9 {
            return Err(Error::NotRepairable(format!(
                "diagonal entry for `{}` is not 1",
                corr.names[i]
            )));
        }
        for j in 0..i {
            let (a, b) = (corr.values[(i, j)], corr.values[(j, i)]);
            if !a.is_finite() || (a - b).abs() > 1e-9 || a.abs() > 1.0 {
                return Err(Error::NotRepairable(format!(
                    "entry ({}, {}) is not a symmetric correlation",
                    corr.names[i], corr.names[j]
                )));
            }
        }
    }
    Ok(())
}

/// Clips eigenvalues at a small floor and rescales back to unit diagonal.
fn project_correlation(values: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(values.clone());
    if eig.eigenvalues.min() >= EIGEN_FLOOR {
        return values.clone();
    }
    let clipped = eig.eigenvalues.map(|l| l.max(EIGEN_FLOOR));
    let rebuilt =
        &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let k = values.nrows();
    let repaired = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            1.0
        } else {
            rebuilt[(i, j)] / (rebuilt[(i, i)] * rebuilt[(j, j)]).sqrt()
        }
    });
    // exact symmetry for the Cholesky factorisation
    (&repaired + repaired.transpose()) * 0.5
}

/// Nearest-correlation repair of the caller's target, bounded by
/// [`MAX_REPAIR_SHIFT`].
fn repair_psd(values: &DMatrix<f64>) -> Result<(DMatrix<f64>, PsdRepair)> {
    let eig = SymmetricEigen::new(values.clone());
    let min_eig = eig.eigenvalues.min();
    if min_eig >= EIGEN_FLOOR {
        return Ok((
            values.clone(),
            PsdRepair {
                applied: false,
                min_eigenvalue_before: min_eig,
                max_abs_shift: 0.0,
                frobenius_shift: 0.0,
            },
        ));
    }
    let repaired = project_correlation(values);
    let diff = &repaired - values;
    let max_abs_shift = diff.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let repair = PsdRepair {
        applied: true,
        min_eigenvalue_before: min_eig,
        max_abs_shift,
        frobenius_shift: diff.norm(),
    };
    if max_abs_shift > MAX_REPAIR_SHIFT {
        return Err(Error::NotRepairable(format!(
            "nearest PSD matrix moves an entry by {max_abs_shift:.4} (limit {MAX_REPAIR_SHIFT})"
        )));
    }
    Ok((repaired, repair))
}

/// Affine rescale to the target moments, clamp to the support, repeat until
/// the clamp stops biting.
fn fit_moments(column: &mut [f64], target: &VariableStats) {
    for _ in 0..500 {
        let n = column.len() as f64;
        let mean = column.iter().sum::<f64>() / n;
        let sd = (column.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let scale = if sd > 0.0 { target.sd / sd } else { 0.0 };
        let mut clamped = false;
        for v in column.iter_mut() {
            let x = target.mean + (*v - mean) * scale;
            let c = x.clamp(target.min, target.max);
            clamped |= c != x;
            *v = c;
        }
        if !clamped {
            break;
        }
    }
}

/// Maps a standardised normal score column onto the variable's scale.
///
/// Variables whose lower bound sits within 1.5 sd of the mean get a shifted
/// lognormal shape so the bulk of the mass stays inside the support; the rest
/// are affine images of the normal score.
fn marginal(scores: &[f64], target: &VariableStats) -> Vec<f64> {
    let headroom = target.mean - target.min;
    let mut column: Vec<f64> = if headroom > 0.0 && headroom < LOGNORMAL_HEADROOM * target.sd {
        let s2 = (1.0 + (target.sd / headroom).powi(2)).ln();
        let mu = headroom.ln() - s2 / 2.0;
        let s = s2.sqrt();
        scores
            .iter()
            .map(|z| target.min + (mu + s * z).exp())
            .collect()
    } else {
        scores.iter().map(|z| target.mean + target.sd * z).collect()
    };
    fit_moments(&mut column, target);
    column
}

/// Draws a panel whose variables follow `stats` and whose Pearson correlation
/// approximates the (repaired) `corr`. The normal-score correlation is tuned
/// iteratively so the transformed columns land near the target; the best
/// iterate is kept. Deterministic in `seed`.
pub fn synthesize_panel(
    stats: &DescriptiveStats,
    corr: &CorrelationMatrix,
    seed: u64,
    config: &SynthConfig,
) -> Result<SynthOutput> {
    check_correlation(corr)?;
    let order: Vec<usize> = stats
        .rows
        .iter()
        .map(|row| {
            corr.position(&row.variable).ok_or_else(|| {
                Error::MissingInput(format!("no correlation row for `{}`", row.variable))
            })
        })
        .collect::<Result<_>>()?;
    if order.len() != corr.names.len() {
        return Err(Error::MissingInput(
            "correlation matrix names variables absent from the stats".into(),
        ));
    }
    for row in &stats.rows {
        if !(row.min <= row.mean && row.mean <= row.max) || row.sd < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "inconsistent stats for `{}`",
                row.variable
            )));
        }
    }
    let k = order.len();
    let target_values = DMatrix::from_fn(k, k, |i, j| corr.values[(order[i], order[j])]);
    let (target_values, repair) = repair_psd(&target_values)?;

    let mut panel = RegionalPanel::new(config.regions.clone(), config.years.clone())?;
    let n = panel.n_obs();
    if n <= k {
        return Err(Error::InsufficientData {
            required: k + 1,
            available: n,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws: DMatrix<f64> = DMatrix::from_fn(n, k, |_, _| StandardNormal.sample(&mut rng));
    for mut col in draws.column_iter_mut() {
        let m: f64 = col.mean();
        col.add_scalar_mut(-m);
    }
    // whiten the sample, then colour it with the target
    let sample_cov = draws.transpose() * &draws / (n as f64 - 1.0);
    let sample_chol = sample_cov
        .cholesky()
        .ok_or_else(|| Error::NotRepairable("degenerate normal draw".into()))?;
    let target_chol = target_values
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotRepairable("repaired matrix is not positive definite".into()))?;
    // D L^-T, computed as (L^-1 D')'
    let whitened = sample_chol
        .l()
        .solve_lower_triangular(&draws.transpose())
        .expect("invertible Cholesky factor")
        .transpose();
    // Pearson correlation is not preserved by the skewed marginals, so the
    // normal-score correlation is nudged until the transformed columns hit
    // the target (best iterate kept).
    let mut gauss = target_values.clone();
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    let mut gauss_chol = target_chol;
    let mut stale = 0;
    for _ in 0..CALIBRATION_ROUNDS {
        let scores = &whitened * gauss_chol.l().transpose();
        let columns: Vec<Vec<f64>> = stats
            .rows
            .iter()
            .enumerate()
            .map(|(j, row)| marginal(&scores.column(j).iter().copied().collect::<Vec<_>>(), row))
            .collect();
        let mut gap = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in (i + 1)..k {
                let d = target_values[(i, j)] - pearson(&columns[i], &columns[j]);
                gap[(i, j)] = d;
                gap[(j, i)] = d;
            }
        }
        let worst = gap.amax();
        if best.as_ref().is_none_or(|(w, _)| worst < *w) {
            best = Some((worst, columns));
            stale = 0;
        } else {
            stale += 1;
        }
        if worst < CALIBRATION_TOL || stale >= CALIBRATION_PATIENCE {
            break;
        }
        gauss = (gauss + gap * CALIBRATION_STEP).map(|v| v.clamp(-0.999, 0.999));
        gauss.fill_diagonal(1.0);
        gauss = project_correlation(&gauss);
        gauss_chol = match gauss.clone().cholesky() {
            Some(ch) => ch,
            None => break,
        };
    }
    let (max_correlation_gap, columns) = best.expect("at least one calibration round");

    let mut achieved = DescriptiveStats::default();
    for (row, column) in stats.rows.iter().zip(columns) {
        if let Some(s) = VariableStats::from_values(&row.variable, &column) {
            achieved.rows.push(s);
        }
        panel.set_variable(&row.variable, column.into_iter().map(Some).collect())?;
    }

    let names = stats.rows.iter().map(|r| r.variable.clone()).collect();
    Ok(SynthOutput {
        panel,
        repair,
        target: CorrelationMatrix::new(names, target_values)?,
        achieved,
        max_correlation_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::correlation_matrix;

    fn stats(rows: &[(&str, f64, f64, f64, f64)]) -> DescriptiveStats {
        DescriptiveStats {
            rows: rows
                .iter()
                .map(|&(v, mean, sd, min, max)| VariableStats {
                    variable: v.into(),
                    count: 117,
                    mean,
                    sd,
                    min,
                    max,
                })
                .collect(),
            warnings: vec![],
        }
    }

    #[test]
    fn independent_pair() {
        let s = stats(&[("x", 0.0, 1.0, -10.0, 10.0), ("y", 5.0, 2.0, -10.0, 20.0)]);
        let c =
            CorrelationMatrix::new(vec!["x".into(), "y".into()], DMatrix::identity(2, 2)).unwrap();
        let out = synthesize_panel(&s, &c, 7, &SynthConfig::default()).unwrap();
        assert_eq!(out.panel.n_obs(), 117);
        let r = correlation_matrix(&out.panel, &["x", "y"]).unwrap();
        assert!(r.values[(0, 1)].abs() < 0.1);
        assert!(!out.repair.applied);
    }

    #[test]
    fn deterministic_in_seed() {
        let s = stats(&[("x", 1.0, 1.0, 0.01, 9.0), ("y", 5.0, 2.0, -10.0, 20.0)]);
        let c = CorrelationMatrix::new(
            vec!["x".into(), "y".into()],
            DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.6, 1.0]),
        )
        .unwrap();
        let a = synthesize_panel(&s, &c, 42, &SynthConfig::default()).unwrap();
        let b = synthesize_panel(&s, &c, 42, &SynthConfig::default()).unwrap();
        let d = synthesize_panel(&s, &c, 43, &SynthConfig::default()).unwrap();
        assert_eq!(a.panel, b.panel);
        assert_ne!(a.panel, d.panel);
    }

    #[test]
    fn indefinite_target_is_repaired() {
        // pairwise consistent but jointly impossible
        let v = DMatrix::from_row_slice(3, 3, &[1.0, 0.9, 0.9, 0.9, 1.0, 0.6, 0.9, 0.6, 1.0]);
        let (fixed, repair) = repair_psd(&v).unwrap();
        assert!(repair.applied);
        assert!(SymmetricEigen::new(fixed).eigenvalues.min() > 0.0);
        assert!(repair.max_abs_shift <= MAX_REPAIR_SHIFT);
    }

    #[test]
    fn hopeless_target_is_rejected() {
        let v = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, -1.0, 1.0, 1.0, 1.0, -1.0, 1.0, 1.0]);
        assert!(matches!(repair_psd(&v), Err(Error::NotRepairable(_))));
    }
}
