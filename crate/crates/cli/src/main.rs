use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use regino_core::diversity::{compute_indices, write_indices_csv, EmploymentTable, HooverFilter};
use regino_core::econometrics::{
    compute_elasticities, decomposition_markdown, decomposition_rows, read_provenance, read_specs,
    resolve_means, run_model_suite, variance_decomposition, write_elasticities_csv, HcType,
    DECOMPOSITION_HEADER,
};
use regino_core::game::{
    feasibility_region, optimal_royalty, spne, verify_equilibrium, write_feasibility_csv,
    Equilibrium, MarketParams, OptimalRoyalty, VerifyOptions,
};
use regino_core::panel::{
    correlation_matrix, descriptive_stats, load_panel, synthesize_panel, write_panel_csv,
    CorrelationMatrix, DescriptiveStats, SynthConfig,
};
use regino_core::{RegionalPanel, DEFAULT_SEED};

mod output;

use output::{csv_bytes, markdown_table, Format, Output};

/// Regional innovation toolkit: diversity indices, pooled OLS suites,
/// variance decomposition, elasticities and the royalty-licensing game.
#[derive(Parser)]
#[command(name = "regino", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Decimal places in rendered numbers.
    #[arg(long, global = true, default_value_t = 4)]
    precision: usize,
    /// Worker threads for model suites.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Theil, related/unrelated variety and Hoover index per region-year.
    Indices {
        /// Employment CSV: region,year,industry,parent,employment.
        employment: PathBuf,
        /// Multiplier for the Hoover column (100 gives percentage points).
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Restrict the Hoover comparison to these parent codes.
        #[arg(long, value_delimiter = ',')]
        hoover_parents: Vec<String>,
    },
    /// Pooled OLS over a suite of specs.
    Regress {
        panel: PathBuf,
        specs: PathBuf,
        /// Robust covariance variant (HC0..HC3).
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=3))]
        hc: u8,
    },
    /// Two-way variance decomposition with region and time F-tests.
    Decompose {
        panel: PathBuf,
        /// Variables to decompose (default: all).
        #[arg(long, value_delimiter = ',')]
        variables: Vec<String>,
    },
    /// Grand-mean elasticities from coefficient provenance.
    Elasticities {
        provenance: PathBuf,
        /// Descriptive stats used to fill blank means.
        #[arg(long)]
        stats: Option<PathBuf>,
        #[arg(long, default_value = "PATINT")]
        dependent: String,
        /// Absolute tolerance for matching the expected value.
        #[arg(long, default_value_t = 0.01)]
        tolerance: f64,
    },
    /// Stackelberg duopoly with royalty licensing.
    #[command(subcommand)]
    Game(GameCommand),
    /// Synthetic panel matching descriptive stats and a correlation target.
    Synth {
        #[arg(long)]
        stats: PathBuf,
        #[arg(long)]
        corr: PathBuf,
    },
    /// Descriptive statistics or correlations of a panel.
    Describe {
        panel: PathBuf,
        #[arg(long, value_delimiter = ',')]
        variables: Vec<String>,
        /// Emit the correlation matrix instead of the summary table.
        #[arg(long)]
        correlations: bool,
    },
}

#[derive(Subcommand)]
enum GameCommand {
    /// Subgame-perfect profile, or the quantity stage at a given royalty.
    Solve {
        #[command(flatten)]
        market: Market,
        #[arg(long, allow_hyphen_values = true)]
        r: Option<f64>,
    },
    /// Numeric oracle checks at a state.
    Verify {
        #[command(flatten)]
        market: Market,
        #[arg(long, allow_hyphen_values = true)]
        r: Option<f64>,
        /// Leader quantity (default: optimal at r).
        #[arg(long, allow_hyphen_values = true)]
        q1: Option<f64>,
        /// Follower quantity (default: equilibrium at r).
        #[arg(long, allow_hyphen_values = true)]
        q2: Option<f64>,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
    },
    /// Feasibility flags of the subgame-perfect profile over an (a, c) grid.
    Region {
        #[arg(long, default_value_t = 0.5)]
        a_min: f64,
        #[arg(long, default_value_t = 10.0)]
        a_max: f64,
        #[arg(long, default_value_t = 0.5)]
        c_min: f64,
        #[arg(long, default_value_t = 10.0)]
        c_max: f64,
        #[arg(long, default_value_t = 20)]
        steps: usize,
    },
}

#[derive(Args)]
struct Market {
    #[arg(long, allow_hyphen_values = true)]
    a: f64,
    #[arg(long, allow_hyphen_values = true)]
    c: f64,
}

impl Market {
    fn params(&self) -> Result<MarketParams> {
        Ok(MarketParams::new(self.a, self.c)?)
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(file))
}

fn read_panel(path: &Path) -> Result<RegionalPanel> {
    load_panel(open(path)?, &[]).with_context(|| format!("in {}", path.display()))
}

fn warn(message: impl AsRef<str>) {
    eprintln!("warning: {}", message.as_ref());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    let out = Output::new(g.out.clone());
    match &cli.command {
        Command::Indices {
            employment,
            scale,
            hoover_parents,
        } => indices(g, &out, employment, *scale, hoover_parents),
        Command::Regress { panel, specs, hc } => regress(g, &out, panel, specs, *hc),
        Command::Decompose { panel, variables } => decompose(g, &out, panel, variables),
        Command::Elasticities {
            provenance,
            stats,
            dependent,
            tolerance,
        } => elasticities(g, &out, provenance, stats.as_deref(), dependent, *tolerance),
        Command::Game(game) => run_game(g, &out, game),
        Command::Synth { stats, corr } => synth(g, &out, stats, corr),
        Command::Describe {
            panel,
            variables,
            correlations,
        } => describe(g, &out, panel, variables, *correlations),
    }
}

fn indices(g: &Global, out: &Output, path: &Path, scale: f64, parents: &[String]) -> Result<()> {
    let table =
        EmploymentTable::read_csv(open(path)?).with_context(|| format!("in {}", path.display()))?;
    let filter = HooverFilter {
        parents: parents.iter().cloned().collect::<BTreeSet<_>>(),
    };
    let rows = compute_indices(&table, &filter)?;
    match g.format.unwrap_or(Format::Csv) {
        Format::Json => {
            let scaled: Vec<_> = rows
                .iter()
                .map(|r| {
                    let mut r = r.clone();
                    r.hoover *= scale;
                    r
                })
                .collect();
            out.write_json(&scaled)
        }
        Format::Csv => {
            let mut buf = Vec::new();
            write_indices_csv(&rows, &mut buf, g.precision, scale)?;
            out.write(&buf)
        }
        Format::Md => {
            let header = ["region", "year", "theil", "related", "unrelated", "hoover"]
                .map(String::from)
                .to_vec();
            let p = g.precision;
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.region.clone(),
                        r.year.to_string(),
                        format!("{:.p$}", r.theil),
                        format!("{:.p$}", r.related),
                        format!("{:.p$}", r.unrelated),
                        format!("{:.p$}", r.hoover * scale),
                    ]
                })
                .collect();
            out.write_str(&markdown_table(&header, &body))
        }
    }
}

fn regress(g: &Global, out: &Output, panel: &Path, specs: &Path, hc: u8) -> Result<()> {
    let panel = read_panel(panel)?;
    let specs = read_specs(open(specs)?).with_context(|| format!("in {}", specs.display()))?;
    let hc = HcType::from_index(hc).context("HC variant must be 0..3")?;
    let suite = run_model_suite(&panel, &specs, hc, g.jobs.max(1));
    for col in &suite.columns {
        if let Some(e) = &col.error {
            warn(format!("column {}: {e}", col.label));
        }
        if let Some(r) = &col.result {
            for w in &r.warnings {
                warn(format!("column {}: {w}", col.label));
            }
        }
    }
    if !suite.columns.is_empty() && suite.succeeded() == 0 {
        bail!("all {} columns failed", suite.columns.len());
    }
    match g.format.unwrap_or(Format::Md) {
        Format::Md => out.write_str(&suite.markdown(g.precision)),
        Format::Json => out.write_json(&suite),
        Format::Csv => {
            let mut buf = Vec::new();
            suite.write_csv(&mut buf, g.precision)?;
            out.write(&buf)
        }
    }
}

fn decompose(g: &Global, out: &Output, panel: &Path, variables: &[String]) -> Result<()> {
    let panel = read_panel(panel)?;
    let names: Vec<String> = if variables.is_empty() {
        panel
            .variable_names()
            .iter()
            .map(|s| s.to_string())
            .collect()
    } else {
        variables.to_vec()
    };
    let rows = names
        .iter()
        .map(|v| variance_decomposition(&panel, v).with_context(|| format!("variable `{v}`")))
        .collect::<Result<Vec<_>>>()?;
    match g.format.unwrap_or(Format::Md) {
        Format::Md => out.write_str(&decomposition_markdown(&rows, g.precision)),
        Format::Json => out.write_json(&rows),
        Format::Csv => {
            let header = DECOMPOSITION_HEADER.map(String::from).to_vec();
            out.write(&csv_bytes(
                &header,
                &decomposition_rows(&rows, g.precision),
            )?)
        }
    }
}

fn elasticities(
    g: &Global,
    out: &Output,
    provenance: &Path,
    stats: Option<&Path>,
    dependent: &str,
    tolerance: f64,
) -> Result<()> {
    let mut inputs = read_provenance(open(provenance)?)
        .with_context(|| format!("in {}", provenance.display()))?;
    if let Some(path) = stats {
        let stats = DescriptiveStats::read_csv(open(path)?)
            .with_context(|| format!("in {}", path.display()))?;
        resolve_means(&mut inputs, &stats, dependent)?;
    }
    let rows = compute_elasticities(&inputs, tolerance)?;
    for r in rows.iter().filter(|r| r.matches == Some(false)) {
        warn(format!(
            "{}: elasticity {:.4} differs from expected {:.4} by {:.4}",
            r.variable,
            r.elasticity,
            r.expected.unwrap_or(f64::NAN),
            r.delta.unwrap_or(f64::NAN)
        ));
    }
    match g.format.unwrap_or(Format::Csv) {
        Format::Json => out.write_json(&rows),
        Format::Csv => {
            let mut buf = Vec::new();
            write_elasticities_csv(&rows, &mut buf, g.precision)?;
            out.write(&buf)
        }
        Format::Md => {
            let p = g.precision;
            let opt = |v: Option<f64>| v.map(|x| format!("{x:.p$}")).unwrap_or_default();
            let header = [
                "Variables",
                "Source column",
                "Elasticity",
                "Expected",
                "Delta",
            ]
            .map(String::from)
            .to_vec();
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.variable.clone(),
                        r.source_column.clone(),
                        format!("{:.p$}", r.elasticity),
                        opt(r.expected),
                        opt(r.delta),
                    ]
                })
                .collect();
            out.write_str(&markdown_table(&header, &body))
        }
    }
}

fn run_game(g: &Global, out: &Output, game: &GameCommand) -> Result<()> {
    match game {
        GameCommand::Solve { market, r } => {
            let params = market.params()?;
            let (eq, royalty) = match r {
                Some(r) => {
                    if !r.is_finite() {
                        bail!("royalty must be finite");
                    }
                    (Equilibrium::at_royalty(&params, *r), None)
                }
                None => (spne(&params), Some(optimal_royalty(&params))),
            };
            if !eq.flags.all() {
                warn(format!("infeasible profile: {:?}", eq.flags));
            }
            game_solution(g, out, &eq, royalty)
        }
        GameCommand::Verify {
            market,
            r,
            q1,
            q2,
            tolerance,
        } => {
            let params = market.params()?;
            let base = match r {
                Some(r) => Equilibrium::at_royalty(&params, *r),
                None => spne(&params),
            };
            let Some(r) = base.r else {
                bail!(
                    "optimal royalty is not real (radicand {}); pass --r to verify another state",
                    base.r_squared
                );
            };
            let state =
                Equilibrium::at_state(&params, r, q1.unwrap_or(base.q1), q2.unwrap_or(base.q2));
            let options = VerifyOptions {
                tolerance: *tolerance,
                ..VerifyOptions::default()
            };
            let report = verify_equilibrium(&params, &state, &options)?;
            let failed = report.checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                warn(format!("{failed} of {} checks failed", report.checks.len()));
            }
            match g.format.unwrap_or(Format::Md) {
                Format::Json => out.write_json(&report),
                Format::Md => out.write_str(&report.to_text()),
                Format::Csv => {
                    let header = [
                        "check",
                        "numeric",
                        "closed_form",
                        "abs_error",
                        "tolerance",
                        "passed",
                    ]
                    .map(String::from)
                    .to_vec();
                    let body: Vec<Vec<String>> = report
                        .checks
                        .iter()
                        .map(|c| {
                            vec![
                                c.name.to_string(),
                                c.numeric.to_string(),
                                c.closed_form.to_string(),
                                c.abs_error.to_string(),
                                c.tolerance.to_string(),
                                c.passed.to_string(),
                            ]
                        })
                        .collect();
                    out.write(&csv_bytes(&header, &body)?)
                }
            }
        }
        GameCommand::Region {
            a_min,
            a_max,
            c_min,
            c_max,
            steps,
        } => {
            let steps = (*steps).max(1);
            let axis = |lo: f64, hi: f64| -> Result<Vec<f64>> {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    bail!("grid bounds must be finite with min <= max");
                }
                Ok((0..=steps)
                    .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
                    .collect())
            };
            let points = feasibility_region(&axis(*a_min, *a_max)?, &axis(*c_min, *c_max)?);
            match g.format.unwrap_or(Format::Csv) {
                Format::Json => out.write_json(&points),
                _ => {
                    let mut buf = Vec::new();
                    write_feasibility_csv(&points, &mut buf)?;
                    out.write(&buf)
                }
            }
        }
    }
}

fn game_solution(
    g: &Global,
    out: &Output,
    eq: &Equilibrium,
    royalty: Option<OptimalRoyalty>,
) -> Result<()> {
    let p = g.precision;
    let r_text = match (eq.r, royalty) {
        (Some(r), _) => format!("{r:.p$}"),
        (None, Some(OptimalRoyalty::NonReal { radicand })) => {
            format!("not real (radicand {radicand:.p$})")
        }
        (None, _) => "not real".to_string(),
    };
    let fields: Vec<(&str, String)> = vec![
        ("a", eq.params.a.to_string()),
        ("c", eq.params.c.to_string()),
        ("r", r_text),
        ("r_squared", format!("{:.p$}", eq.r_squared)),
        ("q1", format!("{:.p$}", eq.q1)),
        ("q2", format!("{:.p$}", eq.q2)),
        ("price", format!("{:.p$}", eq.price)),
        ("leader_profit", format!("{:.p$}", eq.leader_profit)),
        ("follower_profit", format!("{:.p$}", eq.follower_profit)),
        ("r_real", eq.flags.r_real.to_string()),
        ("q1_nonneg", eq.flags.q1_nonneg.to_string()),
        ("q2_nonneg", eq.flags.q2_nonneg.to_string()),
        ("price_nonneg", eq.flags.price_nonneg.to_string()),
    ];
    match g.format.unwrap_or(Format::Md) {
        Format::Json => out.write_json(&serde_json::json!({
            "equilibrium": eq,
            "optimal_royalty": royalty,
        })),
        Format::Csv => {
            let header = vec!["field".to_string(), "value".to_string()];
            let body: Vec<Vec<String>> = fields
                .into_iter()
                .map(|(k, v)| vec![k.to_string(), v])
                .collect();
            out.write(&csv_bytes(&header, &body)?)
        }
        Format::Md => {
            let text: String = fields
                .into_iter()
                .map(|(k, v)| format!("{k:<16} {v}\n"))
                .collect();
            out.write_str(&text)
        }
    }
}

fn synth(g: &Global, out: &Output, stats: &Path, corr: &Path) -> Result<()> {
    let stats = DescriptiveStats::read_csv(open(stats)?)
        .with_context(|| format!("in {}", stats.display()))?;
    let corr = CorrelationMatrix::read_csv(open(corr)?)
        .with_context(|| format!("in {}", corr.display()))?;
    let result = synthesize_panel(&stats, &corr, g.seed, &SynthConfig::default())?;
    if result.repair.applied {
        warn(format!(
            "correlation target was not positive definite (min eigenvalue {:.4}); repaired with max entry shift {:.4}",
            result.repair.min_eigenvalue_before, result.repair.max_abs_shift
        ));
    }
    eprintln!(
        "synth: seed {}, {} cells, largest correlation gap {:.4}",
        g.seed,
        result.panel.n_obs(),
        result.max_correlation_gap
    );
    match g.format.unwrap_or(Format::Csv) {
        Format::Json => {
            let panel = &result.panel;
            let mut records = Vec::with_capacity(panel.n_obs());
            for (r, region) in panel.regions().iter().enumerate() {
                for (t, year) in panel.years().iter().enumerate() {
                    let mut row = serde_json::Map::new();
                    row.insert("region".into(), region.clone().into());
                    row.insert("year".into(), (*year).into());
                    for var in panel.variables() {
                        row.insert(var.name.clone(), var.values[panel.index(r, t)].into());
                    }
                    records.push(serde_json::Value::Object(row));
                }
            }
            out.write_json(&records)
        }
        _ => {
            let mut buf = Vec::new();
            write_panel_csv(&result.panel, &mut buf)?;
            out.write(&buf)
        }
    }
}

fn describe(
    g: &Global,
    out: &Output,
    panel: &Path,
    variables: &[String],
    correlations: bool,
) -> Result<()> {
    let panel = read_panel(panel)?;
    let names: Vec<&str> = if variables.is_empty() {
        panel.variable_names()
    } else {
        variables.iter().map(String::as_str).collect()
    };
    let p = g.precision;
    if correlations {
        let m = correlation_matrix(&panel, &names)?;
        return match g.format.unwrap_or(Format::Csv) {
            Format::Json => out.write_json(&m.to_json()),
            Format::Csv => {
                let mut buf = Vec::new();
                m.write_csv(&mut buf, p)?;
                out.write(&buf)
            }
            Format::Md => {
                let mut header = vec![String::new()];
                header.extend(m.names.iter().cloned());
                let body: Vec<Vec<String>> = m
                    .names
                    .iter()
                    .enumerate()
                    .map(|(i, n)| {
                        std::iter::once(n.clone())
                            .chain((0..=i).map(|j| format!("{:.2}", m.values[(i, j)])))
                            .chain((i + 1..m.names.len()).map(|_| String::new()))
                            .collect()
                    })
                    .collect();
                out.write_str(&markdown_table(&header, &body))
            }
        };
    }
    let mut stats = descriptive_stats(&panel);
    stats.rows.retain(|r| names.contains(&r.variable.as_str()));
    for w in &stats.warnings {
        warn(w);
    }
    match g.format.unwrap_or(Format::Csv) {
        Format::Json => out.write_json(&stats.rows),
        Format::Csv => {
            let mut buf = Vec::new();
            stats.write_csv(&mut buf, p)?;
            out.write(&buf)
        }
        Format::Md => {
            let header = ["Variables", "Obs", "Mean", "Std. Dev.", "Min", "Max"]
                .map(String::from)
                .to_vec();
            let body: Vec<Vec<String>> = stats
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.variable.clone(),
                        r.count.to_string(),
                        format!("{:.p$}", r.mean),
                        format!("{:.p$}", r.sd),
                        format!("{:.p$}", r.min),
                        format!("{:.p$}", r.max),
                    ]
                })
                .collect();
            out.write_str(&markdown_table(&header, &body))
        }
    }
}
