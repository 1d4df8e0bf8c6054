//! Command-line front end: exact tables, simulations and exact-versus-Monte
//! Carlo comparisons, written as CSV or JSON.
//!
//! Every output starts with a header echoing the tool version and the full
//! run manifest, so identical manifests produce byte-identical files.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::RecordError;
use crate::exact::{self, ExpectedTerminalIndex, State, TransitionQuery, TruncationPolicy};
use crate::margin::MarginSpec;
use crate::numeric::{inv_pow, NeumaierSum};
use crate::record::Dimension;
use crate::simulate::{self, EmpiricalSummary, SimConfig};
use crate::terminal::{self, KSumMethod, SeriesPolicy};

/// Directory used for outputs when no `--output` is given.
pub const OUT_DIR_ENV: &str = "COMPLETE_RECORDS_OUT_DIR";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_COMPARISON_FAILED: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Command {
    #[serde(rename = "pmf-T")]
    PmfT,
    #[serde(rename = "pmf-R")]
    PmfR,
    #[serde(rename = "transitions")]
    Transitions,
    #[serde(rename = "terminal-df")]
    TerminalDf,
    #[serde(rename = "expected-T")]
    ExpectedT,
    #[serde(rename = "simulate")]
    Simulate,
    #[serde(rename = "compare")]
    Compare,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::PmfT => "pmf-T",
            Command::PmfR => "pmf-R",
            Command::Transitions => "transitions",
            Command::TerminalDf => "terminal-df",
            Command::ExpectedT => "expected-T",
            Command::Simulate => "simulate",
            Command::Compare => "compare",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "complete-records",
    version,
    about = "Exact and simulated distributions of complete records"
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,
    /// Output file; defaults to $COMPLETE_RECORDS_OUT_DIR/<command>.<ext>, else stdout.
    #[arg(long, short = 'o', global = true)]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Terminal index pmf p_k
    #[command(name = "pmf-T")]
    PmfT(PmfTParams),
    /// Record time pmf P(R(n) = k)
    #[command(name = "pmf-R")]
    PmfR(PmfRParams),
    /// Record-time Markov kernel P(R(n) = k | R(n-1) = j)
    Transitions(TransitionsParams),
    /// Distribution function of the terminal record
    TerminalDf(TerminalDfParams),
    /// Expected terminal index E(T)
    #[command(name = "expected-T")]
    ExpectedT(ExpectedTParams),
    /// Monte Carlo histograms of T, R(n) and the record count
    Simulate(SimulateParams),
    /// Exact values against simulation, flagging rows beyond 3 standard errors
    Compare(CompareParams),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct PmfTParams {
    #[arg(long)]
    pub d: u32,
    #[arg(long, default_value_t = 20)]
    pub k_max: u64,
    #[arg(long, default_value_t = 1e-12)]
    pub tail_tol: f64,
    #[arg(long, default_value_t = 1 << 24)]
    pub max_terms: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct PmfRParams {
    #[arg(long)]
    pub d: u32,
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 20)]
    pub k_max: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TransitionsParams {
    #[arg(long)]
    pub d: u32,
    /// Step of the chain: rows give the law of R(n) given R(n-1).
    #[arg(long)]
    pub n: u64,
    /// Largest starting state listed (default n + 3).
    #[arg(long)]
    pub j_max: Option<u64>,
    #[arg(long, default_value_t = 20)]
    pub k_max: u64,
    #[arg(long, default_value_t = 1e-12)]
    pub tail_tol: f64,
    #[arg(long, default_value_t = 1 << 24)]
    pub max_terms: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TerminalDfParams {
    #[arg(long)]
    pub d: u32,
    /// Evaluation point, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    pub x: Vec<f64>,
    #[arg(long, default_value = "uniform")]
    pub margin: String,
    #[arg(long, default_value_t = 200)]
    pub k_max: u64,
    #[arg(long, default_value_t = 20)]
    pub window: u64,
    #[arg(long, default_value_t = 4)]
    pub max_subset_size: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub term_tol: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_offset: u64,
    #[arg(long, default_value = "auto")]
    pub method: KSumMethod,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ExpectedTParams {
    #[arg(long)]
    pub d: u32,
    /// Fixed summation cutoff (d ≥ 3); chosen from the tolerance when absent.
    #[arg(long)]
    pub cutoff: Option<u64>,
    /// d = 2: report the first cutoff whose partial sum exceeds this level.
    #[arg(long, default_value_t = 10.0)]
    pub level: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub tail_tol: f64,
    #[arg(long, default_value_t = 1 << 24)]
    pub max_terms: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SimulateParams {
    #[arg(long)]
    pub d: u32,
    #[arg(long, default_value_t = 100_000)]
    pub reps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Defaults to 3000 for d = 2 and 1000 otherwise.
    #[arg(long)]
    pub horizon: Option<u64>,
    #[arg(long, default_value = "uniform")]
    pub margin: String,
    /// Record numbers n whose arrival times R(n) are tallied.
    #[arg(long = "n", value_delimiter = ',', default_values_t = [2u64, 3])]
    pub n: Vec<u64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CompareParams {
    #[arg(long)]
    pub d: u32,
    #[arg(long, default_value_t = 100_000)]
    pub reps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub horizon: Option<u64>,
    #[arg(long, default_value = "uniform")]
    pub margin: String,
    /// Number of pmf points compared per distribution.
    #[arg(long, default_value_t = 5)]
    pub k_max: u64,
}

/// A fully specified run: the command, every parameter (defaults filled in),
/// the output destination and its format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Command,
    pub params: BTreeMap<String, Value>,
    pub output_path: Option<PathBuf>,
    pub format: Format,
}

fn params_of<T: Serialize>(p: &T) -> BTreeMap<String, Value> {
    match serde_json::to_value(p).expect("params serialize") {
        Value::Object(map) => map.into_iter().filter(|(_, v)| !v.is_null()).collect(),
        _ => unreachable!("params are structs"),
    }
}

impl RunManifest {
    /// Parses command-line arguments (including the program name).
    pub fn from_args<I, T>(args: I) -> Result<Self, clap::Error>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        let cli = Cli::try_parse_from(args)?;
        let (command, params) = match &cli.command {
            CliCommand::PmfT(p) => (Command::PmfT, params_of(p)),
            CliCommand::PmfR(p) => (Command::PmfR, params_of(p)),
            CliCommand::Transitions(p) => (Command::Transitions, params_of(p)),
            CliCommand::TerminalDf(p) => (Command::TerminalDf, params_of(p)),
            CliCommand::ExpectedT(p) => (Command::ExpectedT, params_of(p)),
            CliCommand::Simulate(p) => (Command::Simulate, params_of(p)),
            CliCommand::Compare(p) => (Command::Compare, params_of(p)),
        };
        let output_path = cli.output.or_else(|| {
            std::env::var_os(OUT_DIR_ENV)
                .filter(|dir| !dir.is_empty())
                .map(|dir| {
                    PathBuf::from(dir).join(format!(
                        "{}.{}",
                        command.as_str(),
                        cli.format.extension()
                    ))
                })
        });
        Ok(Self {
            command,
            params,
            output_path,
            format: cli.format,
        })
    }

    /// The manifest as echoed in output headers; the output path is left out
    /// so that the content does not depend on where it is written.
    pub fn echo(&self) -> Value {
        json!({
            "command": self.command,
            "params": self.params,
            "format": self.format,
        })
    }

    fn typed<T: DeserializeOwned>(&self) -> Result<T, CliError> {
        let map = self.params.clone().into_iter().collect();
        serde_json::from_value(Value::Object(map)).map_err(|e| {
            CliError::invalid(format!("parameters for {}: {e}", self.command.as_str()))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    Usage,
    InvalidParams,
    Computation,
    Io,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::InvalidParams,
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> String {
        json!({ "error": self }).to_string()
    }
}

impl From<RecordError> for CliError {
    fn from(e: RecordError) -> Self {
        let kind = match e {
            RecordError::NotConverged { .. } | RecordError::PolicyExhausted { .. } => {
                ErrorKind::Computation
            }
            _ => ErrorKind::InvalidParams,
        };
        Self {
            kind,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<State> for Cell {
    fn from(s: State) -> Self {
        match s {
            State::Finite(k) => Cell::Int(k),
            State::Infinite => Cell::Text("inf".into()),
        }
    }
}

/// Tabular result with extra `key=value` header notes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub notes: Vec<(String, String)>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Self::default()
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.to_string(), value.to_string()));
    }
}

/// Result of [`execute`], before it is written anywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub text: String,
    /// Rows flagged by `compare`.
    pub flagged: usize,
}

/// Where a run ended up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Success,
    ComparisonFailed { flagged: usize },
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Success => EXIT_OK,
            RunStatus::ComparisonFailed { .. } => EXIT_COMPARISON_FAILED,
        }
    }
}

fn dim(d: u32) -> Result<Dimension, CliError> {
    Ok(Dimension::multivariate(d)?)
}

fn trunc_policy(tail_tol: f64, max_terms: u64) -> Result<TruncationPolicy, CliError> {
    Ok(TruncationPolicy::new(tail_tol, max_terms)?)
}

fn margins(name: &str, d: Dimension) -> Result<Vec<MarginSpec>, CliError> {
    let m: MarginSpec = name.parse()?;
    Ok(vec![m; d.get() as usize])
}

fn csv_header(manifest: &RunManifest, notes: &[(String, String)]) -> String {
    let mut out = format!(
        "# complete-records {VERSION}\n# command={}\n",
        manifest.command.as_str()
    );
    for (k, v) in &manifest.params {
        let v = match v {
            Value::String(s) => s.clone(),
            Value::Array(items) => items
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(";"),
            other => other.to_string(),
        };
        out.push_str(&format!("# {k}={v}\n"));
    }
    if !manifest.params.contains_key("seed") {
        out.push_str("# seed=none\n");
    }
    for (k, v) in notes {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out.push_str(&format!("# manifest={}\n", manifest.echo()));
    out
}

fn render_table(manifest: &RunManifest, table: &Table) -> String {
    match manifest.format {
        Format::Csv => {
            let mut out = csv_header(manifest, &table.notes);
            out.push_str(&table.columns.join(","));
            out.push('\n');
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let notes: serde_json::Map<String, Value> = table
                .notes
                .iter()
                .map(|(k, v)| (k.clone(), json!(v)))
                .collect();
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
                .collect();
            let doc = json!({
                "version": VERSION,
                "manifest": manifest.echo(),
                "notes": notes,
                "columns": table.columns,
                "rows": rows,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
            s.push('\n');
            s
        }
    }
}

fn pmf_t(p: &PmfTParams) -> Result<Table, CliError> {
    let d = dim(p.d)?;
    let policy = trunc_policy(p.tail_tol, p.max_terms)?;
    let pmf = exact::terminal_index_pmf(d, p.k_max, &policy)?;
    let mut t = Table::new(&["k", "p_k", "err_bound"]);
    for (k, mass, err) in pmf.iter() {
        t.push(vec![k.into(), mass.into(), err.into()]);
    }
    t.note("tail_mass_bound", format!("{:.16e}", pmf.tail_mass_bound));
    Ok(t)
}

fn pmf_r(p: &PmfRParams) -> Result<Table, CliError> {
    let d = dim(p.d)?;
    let pmf = exact::record_time_distribution(d, p.n, p.k_max)?;
    let mut t = Table::new(&["k", "probability", "err_bound"]);
    for (k, mass, err) in pmf.iter() {
        t.push(vec![k.into(), mass.into(), err.into()]);
    }
    t.note("tail_mass_bound", format!("{:.16e}", pmf.tail_mass_bound));
    Ok(t)
}

fn transitions(p: &TransitionsParams) -> Result<Table, CliError> {
    let d = dim(p.d)?;
    let policy = trunc_policy(p.tail_tol, p.max_terms)?;
    if p.n < 2 {
        return Err(CliError::invalid(format!("n must be ≥ 2, got {}", p.n)));
    }
    let j_min = p.n - 1;
    let j_max = p.j_max.unwrap_or(p.n + 3);
    if j_max < j_min {
        return Err(CliError::invalid(format!(
            "j-max must be ≥ n - 1 = {j_min}"
        )));
    }
    let mut t = Table::new(&["n", "from", "to", "probability", "err_bound"]);
    for j in j_min..=j_max {
        let from = State::Finite(j);
        for k in j + 1..=p.k_max {
            let q = TransitionQuery::new(p.n, from, State::Finite(k))?;
            let prob = exact::transition_probability(d, &q, &policy)?;
            let err = prob * f64::EPSILON * 4.0 * (k - j) as f64;
            t.push(vec![
                p.n.into(),
                from.into(),
                State::Finite(k).into(),
                prob.into(),
                err.into(),
            ]);
        }
        let tp = exact::tail_product(d, j, &policy)?;
        t.push(vec![
            p.n.into(),
            from.into(),
            State::Infinite.into(),
            tp.value.into(),
            (tp.value * tp.rel_err).into(),
        ]);
    }
    if p.n >= 3 {
        let q = TransitionQuery::new(p.n, State::Infinite, State::Infinite)?;
        let prob = exact::transition_probability(d, &q, &policy)?;
        t.push(vec![
            p.n.into(),
            State::Infinite.into(),
            State::Infinite.into(),
            prob.into(),
            0.0.into(),
        ]);
    }
    Ok(t)
}

fn terminal_df(p: &TerminalDfParams) -> Result<Table, CliError> {
    let d = dim(p.d)?;
    if p.x.len() != d.get() as usize {
        return Err(CliError::invalid(format!(
            "--x has {} coordinates, expected d = {d}",
            p.x.len()
        )));
    }
    let margins = margins(&p.margin, d)?;
    let policy = SeriesPolicy {
        k_max: p.k_max,
        window: p.window,
        max_subset_size: p.max_subset_size,
        term_tol: p.term_tol,
        max_offset: p.max_offset,
        method: p.method,
    };
    let point = terminal::EvaluationPoint::new(p.x.clone(), &margins)?;
    let est = terminal::evaluate(&point, &policy)?;
    let join = |v: &[f64]| {
        v.iter()
            .map(|c| format!("{c:.16e}"))
            .collect::<Vec<_>>()
            .join(";")
    };
    let mut t = Table::new(&["x", "u", "value", "err_estimate", "method", "k_terms"]);
    t.push(vec![
        join(&point.coords).into(),
        join(&point.u).into(),
        est.value.into(),
        est.err_estimate.into(),
        est.method.to_string().into(),
        est.k_terms.into(),
    ]);
    let kind = match est.method {
        KSumMethod::Enumerate => "heuristic",
        _ => "truncation-bound",
    };
    t.note("err_estimate_kind", kind);
    Ok(t)
}

fn expected_t(p: &ExpectedTParams) -> Result<Table, CliError> {
    let d = dim(p.d)?;
    let policy = trunc_policy(p.tail_tol, p.max_terms)?;
    let result = match p.cutoff {
        Some(c) => exact::expected_terminal_index_with_cutoff(d, c, &policy)?,
        None => exact::expected_terminal_index(d, &policy)?,
    };
    let mut t = Table::new(&["d", "status", "value", "err_bound", "cutoff"]);
    match result {
        ExpectedTerminalIndex::Finite {
            value,
            err_bound,
            cutoff,
        } => {
            t.push(vec![
                u64::from(p.d).into(),
                "finite".into(),
                value.into(),
                err_bound.into(),
                cutoff.into(),
            ]);
        }
        ExpectedTerminalIndex::Diverges(div) => {
            if !(p.level > 0.0 && p.level < 700.0) {
                return Err(CliError::invalid(format!(
                    "level must lie in (0, 700), got {}",
                    p.level
                )));
            }
            let cutoff = div.first_cutoff_exceeding(p.level);
            let partial = div.partial_sum(cutoff);
            t.push(vec![
                u64::from(p.d).into(),
                "diverges".into(),
                partial.into(),
                (4.0 * f64::EPSILON * partial).into(),
                cutoff.into(),
            ]);
            t.note(
                "partial_sum",
                "H_{K+1} - 1 at the first cutoff K above level",
            );
        }
    }
    Ok(t)
}

fn sim_config(
    d: u32,
    margin: &str,
    reps: u64,
    seed: u64,
    horizon: Option<u64>,
) -> Result<SimConfig, CliError> {
    let dim = dim(d)?;
    let margins = margins(margin, dim)?;
    let cfg = match horizon {
        Some(h) => SimConfig::with_horizon(dim, margins, reps, seed, h)?,
        None => SimConfig::new(dim, margins, reps, seed)?,
    };
    Ok(cfg)
}

fn binomial_se(p: f64, reps: u64) -> f64 {
    (p * (1.0 - p) / reps as f64).sqrt()
}

fn simulate_table(summary: &EmpiricalSummary) -> Table {
    let reps = summary.replications;
    let mut t = Table::new(&["histogram", "n", "value", "count", "frequency", "se"]);
    let emit = |t: &mut Table, name: &str, n: Cell, h: &simulate::Histogram| {
        for (&v, &c) in &h.counts {
            let f = c as f64 / reps as f64;
            t.push(vec![
                name.into(),
                n.clone(),
                v.into(),
                c.into(),
                f.into(),
                binomial_se(f, reps).into(),
            ]);
        }
        if h.infinite > 0 {
            let f = h.infinite as f64 / reps as f64;
            t.push(vec![
                name.into(),
                n.clone(),
                "inf".into(),
                h.infinite.into(),
                f.into(),
                binomial_se(f, reps).into(),
            ]);
        }
    };
    emit(&mut t, "T", "".into(), &summary.t_counts);
    emit(&mut t, "records", "".into(), &summary.record_count_counts);
    for (&n, h) in &summary.r_n_counts {
        emit(&mut t, "R", n.into(), h);
    }
    t.note("replications", reps);
    t.note("horizon", summary.horizon);
    t.note("miss_risk", format!("{:.16e}", summary.miss_risk));
    t.note("miss_count", summary.miss_count);
    t.note("schema_version", summary.schema_version);
    t
}

fn render_summary(manifest: &RunManifest, summary: &EmpiricalSummary) -> String {
    match manifest.format {
        Format::Csv => render_table(manifest, &simulate_table(summary)),
        Format::Json => {
            let doc = json!({
                "version": VERSION,
                "manifest": manifest.echo(),
                "summary": summary,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("summary serializes");
            s.push('\n');
            s
        }
    }
}

struct Comparison {
    table: Table,
    flagged: usize,
}

impl Comparison {
    fn new() -> Self {
        Self {
            table: Table::new(&[
                "quantity",
                "key",
                "exact",
                "err_bound",
                "empirical",
                "se",
                "z",
                "flag",
            ]),
            flagged: 0,
        }
    }

    /// Flags when `|exact - empirical| > 3 se + allowance`, where the
    /// allowance covers the exact error and any known simulation bias.
    fn row(
        &mut self,
        quantity: &str,
        key: Cell,
        (exact, err): (f64, f64),
        (empirical, se): (f64, f64),
        bias: f64,
    ) {
        let diff = (empirical - exact).abs();
        let flag = diff > 3.0 * se + err + bias;
        self.flagged += usize::from(flag);
        let z = if se > 0.0 {
            (empirical - exact) / se
        } else {
            0.0
        };
        self.table.push(vec![
            quantity.into(),
            key,
            exact.into(),
            err.into(),
            empirical.into(),
            se.into(),
            z.into(),
            if flag { "FAIL" } else { "ok" }.into(),
        ]);
    }
}

fn compare(p: &CompareParams) -> Result<Comparison, CliError> {
    let cfg = sim_config(p.d, &p.margin, p.reps, p.seed, p.horizon)?;
    if p.k_max == 0 {
        return Err(CliError::invalid("k-max must be ≥ 1"));
    }
    let d = cfg.dim;
    let reps = cfg.replications;
    let summary = simulate::simulate(&cfg, &[2, 3])?;
    let policy = TruncationPolicy::default();
    let bias = cfg.miss_risk;
    let mut cmp = Comparison::new();

    let pmf = exact::terminal_index_pmf(d, p.k_max, &policy)?;
    for (k, mass, err) in pmf.iter() {
        let emp = summary.t_counts.frequency(k);
        cmp.row(
            "P(T=k)",
            k.into(),
            (mass, err),
            (emp, binomial_se(mass, reps)),
            bias,
        );
    }
    for n in [2u64, 3] {
        let dist = exact::record_time_distribution(d, n, n + p.k_max - 1)?;
        let hist = &summary.r_n_counts[&n];
        for (k, mass, err) in dist.iter() {
            cmp.row(
                &format!("P(R({n})=k)"),
                k.into(),
                (mass, err),
                (hist.frequency(k), binomial_se(mass, reps)),
                bias,
            );
        }
    }

    let expected_records: NeumaierSum = (1..=cfg.horizon).map(|m| inv_pow(m, d.get())).collect();
    let (mean_records, se_records) = summary.record_count_counts.mean_and_se();
    cmp.row(
        "E(records<=N)",
        cfg.horizon.into(),
        (expected_records.value(), 1e-12),
        (mean_records, se_records),
        0.0,
    );

    if let ExpectedTerminalIndex::Finite {
        value, err_bound, ..
    } = exact::expected_terminal_index(d, &policy)?
    {
        let (mean_t, se_t) = summary.t_counts.mean_and_se();
        // E(T 1{T > N}) ≤ Σ_{k>N} k^{1-d}, which bounds the horizon bias
        let horizon_bias =
            crate::numeric::hurwitz_zeta(f64::from(d.get() - 1), cfg.horizon as f64 + 1.0).value;
        cmp.row(
            "E(T)",
            "".into(),
            (value, err_bound),
            (mean_t, se_t),
            horizon_bias,
        );
    }

    let series = SeriesPolicy::default();
    let grid: &[f64] = if d.get() == 2 {
        &[0.5, 0.8, 0.9]
    } else {
        &[0.9]
    };
    for &level in grid {
        let u = vec![level; d.get() as usize];
        let x: Vec<f64> = u
            .iter()
            .zip(&cfg.margins)
            .map(|(&ui, m)| quantile(m, ui))
            .collect();
        let est = match terminal::terminal_record_df(&x, &cfg.margins, &series) {
            Ok(est) if est.err_estimate < 1e-3 => est,
            _ => continue,
        };
        let emp = summary.terminal_df(&x);
        let key = u
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(";");
        cmp.row(
            "P(X_T<=x)",
            key.into(),
            (est.value, est.err_estimate),
            (emp, binomial_se(est.value, reps)),
            bias,
        );
    }
    cmp.table.note("replications", reps);
    cmp.table.note("horizon", cfg.horizon);
    cmp.table
        .note("miss_risk", format!("{:.16e}", cfg.miss_risk));
    cmp.table.note("miss_count", summary.miss_count);
    cmp.table.note("flagged", cmp.flagged);
    Ok(cmp)
}

fn quantile(m: &MarginSpec, u: f64) -> f64 {
    crate::margin::sample_margin(m, u).expect("grid levels lie in (0, 1)")
}

/// Computes the output of a manifest without writing it.
pub fn execute(manifest: &RunManifest) -> Result<Rendered, CliError> {
    let table = match manifest.command {
        Command::PmfT => pmf_t(&manifest.typed()?)?,
        Command::PmfR => pmf_r(&manifest.typed()?)?,
        Command::Transitions => transitions(&manifest.typed()?)?,
        Command::TerminalDf => terminal_df(&manifest.typed()?)?,
        Command::ExpectedT => expected_t(&manifest.typed()?)?,
        Command::Simulate => {
            let p: SimulateParams = manifest.typed()?;
            let cfg = sim_config(p.d, &p.margin, p.reps, p.seed, p.horizon)?;
            let summary = simulate::simulate(&cfg, &p.n)?;
            return Ok(Rendered {
                text: render_summary(manifest, &summary),
                flagged: 0,
            });
        }
        Command::Compare => {
            let cmp = compare(&manifest.typed()?)?;
            return Ok(Rendered {
                text: render_table(manifest, &cmp.table),
                flagged: cmp.flagged,
            });
        }
    };
    Ok(Rendered {
        text: render_table(manifest, &table),
        flagged: 0,
    })
}

/// Executes a manifest and writes its output to the manifest's path, or to
/// stdout when it has none.
pub fn run(manifest: &RunManifest) -> Result<RunStatus, CliError> {
    let rendered = execute(manifest)?;
    let io_err = |e: std::io::Error| CliError {
        kind: ErrorKind::Io,
        message: e.to_string(),
    };
    match &manifest.output_path {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(io_err)?;
            }
            std::fs::write(path, &rendered.text).map_err(io_err)?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(rendered.text.as_bytes()).map_err(io_err)?;
            out.flush().map_err(io_err)?;
        }
    }
    Ok(if rendered.flagged > 0 {
        RunStatus::ComparisonFailed {
            flagged: rendered.flagged,
        }
    } else {
        RunStatus::Success
    })
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let manifest = match RunManifest::from_args(args) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(
                e.kind(),
                K::DisplayHelp | K::DisplayVersion | K::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                print!("{e}");
                return EXIT_OK;
            }
            let err = CliError {
                kind: ErrorKind::Usage,
                message: e.render().to_string().trim_end().to_string(),
            };
            eprintln!("{}", err.to_json());
            return EXIT_ERROR;
        }
    };
    match run(&manifest) {
        Ok(status) => {
            if let RunStatus::ComparisonFailed { flagged } = status {
                eprintln!("{flagged} comparison row(s) outside 3 standard errors");
            }
            status.exit_code()
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            EXIT_ERROR
        }
    }
}
