use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::ols::{pooled_ols, HcType, RegressionResult, INTERCEPT};
use super::spec::RegressionSpec;
use crate::error::Result;
use crate::panel::RegionalPanel;

type SummaryCell<'a> = dyn Fn(&RegressionResult) -> String + 'a;

#[derive(Debug, Clone, Serialize)]
pub struct SuiteColumn {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<RegressionResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ModelSuite {
    pub columns: Vec<SuiteColumn>,
}

impl ModelSuite {
    pub fn succeeded(&self) -> usize {
        self.columns.iter().filter(|c| c.result.is_some()).count()
    }

    pub fn failed(&self) -> usize {
        self.columns.len() - self.succeeded()
    }

    /// Row labels: every non-intercept term in order of first appearance,
    /// then the intercept.
    fn terms(&self) -> Vec<String> {
        let mut terms: Vec<String> = Vec::new();
        let mut has_intercept = false;
        for r in self.columns.iter().filter_map(|c| c.result.as_ref()) {
            for c in &r.coefficients {
                if c.term == INTERCEPT {
                    has_intercept = true;
                } else if !terms.contains(&c.term) {
                    terms.push(c.term.clone());
                }
            }
        }
        if has_intercept {
            terms.push(INTERCEPT.to_string());
        }
        terms
    }

    /// Coefficients with stars and parenthesised robust SEs, then R², F,
    /// average VIF and N; failed columns show `failed`.
    pub fn markdown(&self, precision: usize) -> String {
        let mut out = String::new();
        let header: Vec<String> = std::iter::once("Variables".to_string())
            .chain(self.columns.iter().map(|c| format!("{}.", c.label)))
            .collect();
        out.push_str(&format!("| {} |\n", header.join(" | ")));
        out.push_str(&format!("|{}\n", "---|".repeat(header.len())));
        let cell = |col: &SuiteColumn, f: &dyn Fn(&RegressionResult) -> String| match &col.result {
            Some(r) => f(r),
            None => "failed".to_string(),
        };
        for term in self.terms() {
            let mut row = vec![term.clone()];
            for col in &self.columns {
                row.push(cell(col, &|r| match r.coefficient(&term) {
                    Some(c) => format!(
                        "{:.*}{} ({:.*})",
                        precision,
                        c.estimate,
                        c.stars(),
                        precision,
                        c.robust_se
                    ),
                    None => "-".to_string(),
                }));
            }
            out.push_str(&format!("| {} |\n", row.join(" | ")));
        }
        let summary: [(&str, &SummaryCell); 4] = [
            ("R²", &|r| format!("{:.*}", precision, r.r_squared)),
            ("F", &|r| format!("{:.2}", r.f_robust)),
            ("Avg VIF", &|r| format!("{:.2}", r.avg_vif)),
            ("N", &|r| r.n.to_string()),
        ];
        for (name, f) in summary {
            let mut row = vec![name.to_string()];
            row.extend(self.columns.iter().map(|c| cell(c, f)));
            out.push_str(&format!("| {} |\n", row.join(" | ")));
        }
        out.push_str("\n* significant at 10%, ** significant at 5%, *** significant at 1%\n");
        for col in &self.columns {
            if let Some(e) = &col.error {
                out.push_str(&format!("\nColumn {} failed: {e}\n", col.label));
            }
        }
        out
    }

    /// Long format: one row per (column, term), plus summary rows whose term
    /// is `R2`, `F`, `F_classical`, `avg_VIF` or `N`.
    pub fn write_csv<W: Write>(&self, sink: W, precision: usize) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record([
            "column",
            "term",
            "estimate",
            "robust_se",
            "classical_se",
            "t_robust",
            "p_robust",
            "stars",
            "error",
        ])?;
        let num = |v: f64| format!("{:.*}", precision, v);
        for col in &self.columns {
            let Some(r) = &col.result else {
                w.write_record([
                    col.label.as_str(),
                    "",
                    "",
                    "",
                    "",
                    "",
                    "",
                    "",
                    col.error.as_deref().unwrap_or(""),
                ])?;
                continue;
            };
            for c in &r.coefficients {
                w.write_record([
                    col.label.clone(),
                    c.term.clone(),
                    num(c.estimate),
                    num(c.robust_se),
                    num(c.classical_se),
                    num(c.t_robust),
                    num(c.p_robust),
                    c.stars().to_string(),
                    String::new(),
                ])?;
            }
            for (term, v) in [
                ("R2", r.r_squared),
                ("F", r.f_robust),
                ("F_classical", r.f_classical),
                ("avg_VIF", r.avg_vif),
                ("N", r.n as f64),
            ] {
                w.write_record([col.label.as_str(), term, &num(v), "", "", "", "", "", ""])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Fits every spec; a failing spec is recorded and the rest still run.
/// With `jobs > 1` columns are fitted concurrently; output order always
/// follows `specs`.
pub fn run_model_suite(
    panel: &RegionalPanel,
    specs: &[RegressionSpec],
    hc: HcType,
    jobs: usize,
) -> ModelSuite {
    let fit = |spec: &RegressionSpec| match pooled_ols(panel, spec, hc) {
        Ok(r) => SuiteColumn {
            label: spec.label.clone(),
            result: Some(r),
            error: None,
        },
        Err(e) => SuiteColumn {
            label: spec.label.clone(),
            result: None,
            error: Some(e.to_string()),
        },
    };
    let columns = if jobs > 1 {
        match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            Ok(pool) => pool.install(|| specs.par_iter().map(fit).collect()),
            Err(_) => specs.iter().map(fit).collect(),
        }
    } else {
        specs.iter().map(fit).collect()
    };
    ModelSuite { columns }
}
