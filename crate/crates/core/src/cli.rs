//! Command-line harness: reproduction of the six published GPN tables and
//! custom sweeps described by a JSON run config.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::GpnError;
use crate::estimators::{family_names, lookup, Estimator, LossFn};
use crate::gpn::{cell_seed, gpn_monte_carlo, gpn_oracle, ComparisonTask, GpnResult};
use crate::models::{
    BivariateNormalSpec, Component, GammaScaleSpec, ModelSpec, RestrictedParams,
};

pub const DEFAULT_SAMPLES: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 42;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_UNKNOWN_ESTIMATOR: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Md,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    UnknownEstimator(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::UnknownEstimator(_) => EXIT_UNKNOWN_ESTIMATOR,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::UnknownEstimator(m) | CliError::Numerical(m) => m,
        }
    }

    /// Classifies an error raised while building an experiment.
    fn setup(e: GpnError) -> Self {
        match e {
            GpnError::UnknownEstimator { .. } => CliError::UnknownEstimator(e.to_string()),
            GpnError::Convergence { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }

    fn numerical(e: GpnError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

/// One (candidate, reference) pair in a run config, either as an object or
/// as a `[candidate, reference]` / `[candidate, reference, nu]` array.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum PairConfig {
    Object {
        candidate: String,
        reference: String,
        #[serde(default)]
        nu: Option<f64>,
    },
    Pair(String, String),
    PairWithNu(String, String, f64),
}

impl PairConfig {
    fn parts(&self) -> (&str, &str, Option<f64>) {
        match self {
            PairConfig::Object { candidate, reference, nu } => (candidate, reference, *nu),
            PairConfig::Pair(a, b) => (a, b, None),
            PairConfig::PairWithNu(a, b, nu) => (a, b, Some(*nu)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub table: Option<u8>,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    /// Index (1 or 2) of the parameter being estimated; defaults to 1.
    #[serde(default)]
    pub component: Option<u8>,
    #[serde(default)]
    pub pairs: Option<Vec<PairConfig>>,
    #[serde(default)]
    pub gaps: Option<Vec<f64>>,
    #[serde(default)]
    pub loss: Option<String>,
    #[serde(default)]
    pub n_samples: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub oracle: Option<bool>,
    #[serde(default)]
    pub output: Option<OutputFormat>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            if path == "." || path.is_empty() {
                CliError::Usage(format!("invalid run config: {}", e.inner()))
            } else {
                CliError::Usage(format!("invalid run config at `{path}`: {}", e.inner()))
            }
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// A single column of results: one model and one estimator pair.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub model: ModelSpec,
    pub candidate: Estimator,
    pub reference: Estimator,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub title: String,
    pub loss: LossFn,
    pub gap_name: &'static str,
    pub gaps: Vec<f64>,
    pub series: Vec<Series>,
    pub n_samples: u64,
    pub seed: u64,
    pub oracle: bool,
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub result: GpnResult,
    pub oracle: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ResultGrid {
    pub experiment: Experiment,
    /// Indexed [series][gap].
    pub cells: Vec<Vec<Cell>>,
}

/// The published table definitions.
#[derive(Debug, Clone)]
pub struct TableSpec {
    pub id: u8,
    pub title: &'static str,
    pub component: Component,
    pub candidate: &'static str,
    pub reference: &'static str,
    pub models: Vec<ModelSpec>,
    pub gaps: Vec<f64>,
    pub loss: LossFn,
}

fn normal_columns(cfgs: &[(f64, f64, f64)]) -> Vec<ModelSpec> {
    cfgs.iter()
        .map(|&(a, b, r)| ModelSpec::Normal(BivariateNormalSpec::new(a, b, r).expect("valid table config")))
        .collect()
}

fn gamma_columns() -> Vec<ModelSpec> {
    [(0.5, 0.2), (0.2, 0.8), (1.0, 1.0), (5.0, 2.0), (1.0, 30.0), (30.0, 1.0)]
        .iter()
        .map(|&(a, b)| ModelSpec::Gamma(GammaScaleSpec::new(a, b).expect("valid table config")))
        .collect()
}

pub fn table_spec(id: u8) -> Result<TableSpec, CliError> {
    let location_gaps: Vec<f64> = (0..=6).map(|i| i as f64 * 0.5).collect();
    let scale_gaps: Vec<f64> = (0..=6).map(|i| 1.0 + i as f64 * 0.5).collect();
    let spec = |title, component, candidate, reference, models, gaps, loss| TableSpec {
        id,
        title,
        component,
        candidate,
        reference,
        models,
        gaps,
        loss,
    };
    Ok(match id {
        1 => spec(
            "GPN of the restricted MLE relative to the PNLEE (theta1, normal)",
            Component::First,
            "rmle",
            "pnlee",
            normal_columns(&[
                (3.0, 0.5, -0.9),
                (0.5, 5.0, -0.5),
                (1.0, 1.0, 0.0),
                (15.0, 2.0, 0.2),
                (1.0, 30.0, 0.5),
                (30.0, 1.0, 0.9),
            ]),
            location_gaps,
            LossFn::LocationAbs,
        ),
        2 => spec(
            "GPN of the improved HP relative to the HP (theta1, normal, alpha > 1)",
            Component::First,
            "hp_star",
            "hp",
            normal_columns(&[
                (0.1, 5.0, 0.2),
                (1.0, 25.0, 0.2),
                (0.5, 2.0, 0.5),
                (5.0, 15.0, 0.5),
                (0.5, 5.0, 0.9),
                (2.0, 15.0, 0.9),
            ]),
            location_gaps,
            LossFn::LocationAbs,
        ),
        3 => spec(
            "GPN of the restricted MLE relative to the PDT (theta1, normal, alpha < 0)",
            Component::First,
            "rmle",
            "pdt",
            normal_columns(&[
                (5.0, 0.1, 0.2),
                (25.0, 1.0, 0.2),
                (2.0, 0.5, 0.5),
                (15.0, 5.0, 0.5),
                (5.0, 0.5, 0.9),
                (15.0, 2.0, 0.9),
            ]),
            location_gaps,
            LossFn::LocationAbs,
        ),
        4 => spec(
            "GPN of the modified restricted MLE relative to the restricted MLE (theta2, gamma)",
            Component::Second,
            "rmle_star",
            "rmle",
            gamma_columns(),
            scale_gaps,
            LossFn::ScaleAbs,
        ),
        5 => spec(
            "GPN of the modified PNSEE relative to the PNSEE (theta2, gamma)",
            Component::Second,
            "pnsee_star",
            "pnsee",
            gamma_columns(),
            scale_gaps,
            LossFn::ScaleAbs,
        ),
        6 => spec(
            "GPN of the restricted MLE relative to the unbiased estimator (theta2, gamma)",
            Component::Second,
            "rmle",
            "ue",
            gamma_columns(),
            scale_gaps,
            LossFn::ScaleAbs,
        ),
        _ => return Err(CliError::Usage(format!("table id must be 1-6, got {id}"))),
    })
}

fn gap_name(model: &ModelSpec) -> &'static str {
    match model.kind() {
        crate::models::ProblemKind::Location => "theta2-theta1",
        crate::models::ProblemKind::Scale => "theta2/theta1",
    }
}

pub fn table_experiment(id: u8, n_samples: u64, seed: u64, oracle: bool) -> Result<Experiment, CliError> {
    let t = table_spec(id)?;
    let mut series = Vec::with_capacity(t.models.len());
    for m in &t.models {
        series.push(Series {
            label: format!("{}/{}@{}", t.candidate, t.reference, m),
            model: *m,
            candidate: lookup(m, t.component, t.candidate, None).map_err(CliError::setup)?,
            reference: lookup(m, t.component, t.reference, None).map_err(CliError::setup)?,
        });
    }
    Ok(Experiment {
        title: format!("Table {id}: {}", t.title),
        loss: t.loss,
        gap_name: gap_name(&t.models[0]),
        gaps: t.gaps,
        series,
        n_samples,
        seed,
        oracle,
    })
}

/// Command-line overrides applied on top of a run config.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub n_samples: Option<u64>,
    pub seed: Option<u64>,
    pub oracle: bool,
    pub output: Option<OutputFormat>,
}

fn resolve_nu(model: &ModelSpec, component: Component, name: &str, nu: Option<f64>) -> Option<f64> {
    if family_names(model, component).contains(&name) {
        nu
    } else {
        None
    }
}

pub fn config_experiment(cfg: &RunConfig, ov: &Overrides) -> Result<(Experiment, OutputFormat), CliError> {
    let n_samples = ov.n_samples.or(cfg.n_samples).unwrap_or(DEFAULT_SAMPLES);
    let seed = ov.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let oracle = ov.oracle || cfg.oracle.unwrap_or(false);
    let output = ov.output.or(cfg.output).unwrap_or_default();
    if n_samples == 0 {
        return Err(CliError::Usage("`n_samples` must be positive".into()));
    }

    if let Some(id) = cfg.table {
        for (field, present) in [
            ("model", cfg.model.is_some()),
            ("component", cfg.component.is_some()),
            ("pairs", cfg.pairs.is_some()),
            ("gaps", cfg.gaps.is_some()),
            ("loss", cfg.loss.is_some()),
        ] {
            if present {
                return Err(CliError::Usage(format!(
                    "`{field}` cannot be combined with `table`; table experiments are fixed"
                )));
            }
        }
        return Ok((table_experiment(id, n_samples, seed, oracle)?, output));
    }

    let model = cfg
        .model
        .ok_or_else(|| CliError::Usage("missing field `model` (or give `table`)".into()))?;
    model
        .validate()
        .map_err(|e| CliError::Usage(format!("invalid `model`: {e}")))?;
    let pairs = cfg
        .pairs
        .as_ref()
        .ok_or_else(|| CliError::Usage("missing field `pairs`".into()))?;
    let gaps = cfg
        .gaps
        .clone()
        .ok_or_else(|| CliError::Usage("missing field `gaps`".into()))?;
    for (i, &g) in gaps.iter().enumerate() {
        model
            .check_gap(g)
            .map_err(|e| CliError::Usage(format!("invalid `gaps[{i}]`: {e}")))?;
    }
    let component = Component::from_index(cfg.component.unwrap_or(1))
        .map_err(|e| CliError::Usage(format!("invalid `component`: {e}")))?;
    let loss = match &cfg.loss {
        None => LossFn::absolute(model.kind()),
        Some(name) => {
            let l = LossFn::from_name(name).ok_or_else(|| {
                let valid: Vec<&str> = LossFn::ALL.iter().map(|l| l.name()).collect();
                CliError::Usage(format!(
                    "invalid `loss`: unknown loss `{name}`; valid: {}",
                    valid.join(", ")
                ))
            })?;
            if l.kind() != model.kind() {
                return Err(CliError::Usage(format!(
                    "invalid `loss`: {name} does not fit a {} model",
                    model.kind()
                )));
            }
            l
        }
    };
    if oracle && !loss.is_absolute() {
        return Err(CliError::Usage(format!(
            "`oracle` needs an absolute-error loss, got {loss}"
        )));
    }

    let mut series = Vec::with_capacity(pairs.len());
    for (i, p) in pairs.iter().enumerate() {
        let (a, b, nu) = p.parts();
        let get = |name: &str| {
            lookup(&model, component, name, resolve_nu(&model, component, name, nu)).map_err(|e| match e {
                GpnError::UnknownEstimator { .. } => CliError::UnknownEstimator(format!("`pairs[{i}]`: {e}")),
                other => CliError::Usage(format!("invalid `pairs[{i}]`: {other}")),
            })
        };
        let (candidate, reference) = (get(a)?, get(b)?);
        series.push(Series {
            label: format!("{}/{}", candidate.label(), reference.label()),
            model,
            candidate,
            reference,
        });
    }

    Ok((
        Experiment {
            title: format!("{model}, theta{}, loss {loss}", component.index()),
            loss,
            gap_name: gap_name(&model),
            gaps,
            series,
            n_samples,
            seed,
            oracle,
        },
        output,
    ))
}

/// Runs every (series, gap) cell in parallel with seed base ⊕ hash(series, gap).
pub fn run_experiment(exp: &Experiment) -> Result<ResultGrid, CliError> {
    let jobs: Vec<(usize, usize)> = (0..exp.series.len())
        .flat_map(|s| (0..exp.gaps.len()).map(move |g| (s, g)))
        .collect();
    let flat: Vec<Cell> = jobs
        .par_iter()
        .map(|&(s, g)| {
            let series = &exp.series[s];
            let params = RestrictedParams::from_gap(series.model.kind(), exp.gaps[g]).map_err(CliError::setup)?;
            let task = ComparisonTask::new(
                series.model,
                params,
                series.candidate.clone(),
                series.reference.clone(),
                exp.loss,
                exp.n_samples,
                cell_seed(exp.seed, s, g),
            )
            .map_err(CliError::setup)?;
            let result = gpn_monte_carlo(&task).map_err(CliError::numerical)?;
            let oracle = if exp.oracle {
                Some(gpn_oracle(&task).map_err(CliError::numerical)?)
            } else {
                None
            };
            Ok(Cell { result, oracle })
        })
        .collect::<Result<_, CliError>>()?;
    let per = exp.gaps.len();
    let cells = (0..exp.series.len())
        .map(|s| flat[s * per..(s + 1) * per].to_vec())
        .collect();
    Ok(ResultGrid {
        experiment: exp.clone(),
        cells,
    })
}

pub fn render_csv(grid: &ResultGrid) -> Result<String, CliError> {
    let exp = &grid.experiment;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let mut header = vec!["pair", "gap", "gpn", "std_error", "tie_fraction", "n", "seed"];
    if exp.oracle {
        header.push("oracle");
    }
    let io = |e: csv::Error| CliError::Usage(format!("csv output failed: {e}"));
    w.write_record(&header).map_err(io)?;
    for (s, series) in exp.series.iter().enumerate() {
        for (g, gap) in exp.gaps.iter().enumerate() {
            let c = &grid.cells[s][g];
            let mut rec = vec![
                series.label.clone(),
                gap.to_string(),
                c.result.estimate.to_string(),
                c.result.std_error.to_string(),
                c.result.tie_fraction.to_string(),
                c.result.n_samples.to_string(),
                c.result.seed.to_string(),
            ];
            if let Some(o) = c.oracle {
                rec.push(o.to_string());
            }
            w.write_record(&rec).map_err(io)?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Usage(format!("csv output failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Usage(e.to_string()))
}

/// Aligned markdown: one row per gap, columns (gpn, se[, oracle]) per series.
pub fn render_markdown(grid: &ResultGrid) -> String {
    let exp = &grid.experiment;
    let mut header = vec![exp.gap_name.to_string()];
    for s in &exp.series {
        header.push(format!("{} gpn", s.label));
        header.push(format!("{} se", s.label));
        if exp.oracle {
            header.push(format!("{} oracle", s.label));
        }
    }
    let mut rows = Vec::with_capacity(exp.gaps.len());
    for (g, gap) in exp.gaps.iter().enumerate() {
        let mut row = vec![gap.to_string()];
        for s in 0..exp.series.len() {
            let c = &grid.cells[s][g];
            row.push(format!("{:.3}", c.result.estimate));
            row.push(format!("{:.3}", c.result.std_error));
            if let Some(o) = c.oracle {
                row.push(format!("{o:.3}"));
            }
        }
        rows.push(row);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|j| rows.iter().map(|r| r[j].len()).chain([header[j].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: &[String]| {
        let mut s = String::from("|");
        for (c, w) in cells.iter().zip(&widths) {
            let _ = write!(s, " {c:>w$} |");
        }
        s.push('\n');
        s
    };
    let mut out = format!(
        "# {}\n\nloss: {}, n_samples: {}, seed: {}\n\n",
        exp.title, exp.loss, exp.n_samples, exp.seed
    );
    out += &line(&header);
    let mut sep = String::from("|");
    for w in &widths {
        let _ = write!(sep, "{}:|", "-".repeat(w + 1));
    }
    out += &sep;
    out.push('\n');
    for r in &rows {
        out += &line(r);
    }
    out
}

pub fn render(grid: &ResultGrid, fmt: OutputFormat) -> Result<String, CliError> {
    match fmt {
        OutputFormat::Csv => render_csv(grid),
        OutputFormat::Md => Ok(render_markdown(grid)),
    }
}

#[derive(Debug, Parser)]
#[command(name = "gpn", version, about = "Generalized Pitman nearness comparisons of order-restricted estimators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// Monte Carlo sample size per cell
    #[arg(long)]
    pub samples: Option<u64>,
    /// Base random seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also compute the quadrature oracle for each cell
    #[arg(long)]
    pub oracle: bool,
    /// Output format
    #[arg(long = "out", value_enum)]
    pub out: Option<OutputFormat>,
    /// Write output to this file instead of stdout
    #[arg(long)]
    pub output_file: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reproduce one of the six published tables
    Table {
        /// Table number, 1-6
        id: u8,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the sweep described by a JSON config file
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn execute(cli: &Cli) -> Result<(String, Option<PathBuf>), CliError> {
    let (exp, fmt, common) = match &cli.command {
        Command::Table { id, common } => {
            let exp = table_experiment(
                *id,
                common.samples.unwrap_or(DEFAULT_SAMPLES),
                common.seed.unwrap_or(DEFAULT_SEED),
                common.oracle,
            )?;
            if exp.n_samples == 0 {
                return Err(CliError::Usage("--samples must be positive".into()));
            }
            (exp, common.out.unwrap_or_default(), common)
        }
        Command::Run { config, common } => {
            let cfg = RunConfig::from_path(config)?;
            let ov = Overrides {
                n_samples: common.samples,
                seed: common.seed,
                oracle: common.oracle,
                output: common.out,
            };
            let (exp, fmt) = config_experiment(&cfg, &ov)?;
            (exp, fmt, common)
        }
    };
    let grid = run_experiment(&exp)?;
    Ok((render(&grid, fmt)?, common.output_file.clone()))
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli) {
        Ok((text, None)) => {
            let _ = out.write_all(text.as_bytes());
            EXIT_OK
        }
        Ok((text, Some(path))) => match std::fs::write(&path, text) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
                EXIT_USAGE
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.exit_code()
        }
    }
}
