//! Fixtures shared by the benchmarks.

use regino_core::RegionalPanel;

/// Deterministic panel with `k` smooth pseudo-random regressors and `y`.
pub fn fixture_panel(n_regions: usize, n_years: usize, k: usize) -> RegionalPanel {
    let n = n_regions * n_years;
    let mut panel = RegionalPanel::new(
        (0..n_regions).map(|r| format!("R{r:02}")).collect(),
        (0..n_years as i32).map(|t| 2000 + t).collect(),
    )
    .expect("valid grid");
    let mut y = vec![1.0; n];
    for j in 0..k {
        let col: Vec<f64> = (0..n)
            .map(|i| ((i * (j + 3)) as f64 * 0.618).sin() + 0.1 * j as f64)
            .collect();
        for (yi, x) in y.iter_mut().zip(&col) {
            *yi += (j as f64 + 1.0) * x;
        }
        panel = panel
            .with_complete(&format!("x{j}"), col)
            .expect("grid-sized");
    }
    let y: Vec<f64> = y
        .iter()
        .enumerate()
        .map(|(i, v)| v + ((i * 7919) % 101) as f64 / 101.0)
        .collect();
    panel.with_complete("y", y).expect("grid-sized")
}
