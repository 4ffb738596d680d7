//! The `respval` command line.
//!
//! ```text
//! respval compute  --graph edges.csv --impacts impacts.csv --gamma 0.6
//! respval validate --instance instance.json
//! respval axioms   --instance instance.json --gamma 0.3
//! respval sweep    --instance instance.json --gammas 0.1:0.9:9 --method exact
//! respval matrix   --instance instance.json --gamma 0.6 --q 5
//! ```
//!
//! Exit codes: 0 success, 2 input or validation error, 1 internal error
//! (including a failed axiom check). Errors are reported on standard error
//! as a single `error[<code>]: <message>` line.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::axioms::{self, AxiomVerdict, Status};
use crate::graph::{
    DiscountFactor, GraphError, ImpactVector, RowStochasticMatrix, ZeroRowPolicy,
    DEFAULT_ROW_TOLERANCE,
};
use crate::io::{self, InstanceMetadata, IoError, MatrixSource};
use crate::solver::{self, ResponsibilityReport, SolverError, SweepMethod, TruncationMode};

pub const DEFAULT_EPSILON: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "respval", version, about = "Responsibility allocation on weighted digraphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the responsibility value and write a JSON report.
    Compute(ComputeArgs),
    /// Check the matrix and list independent players and symmetric pairs.
    Validate(ValidateArgs),
    /// Verify the allocation's properties on the instance.
    Axioms(AxiomsArgs),
    /// Tabulate totals over a grid of discount factors (CSV).
    Sweep(SweepArgs),
    /// Dump the propagation matrix Σ_{k≤q} ((1−γ)A)^k as CSV.
    Matrix(MatrixArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Series,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QepsArg {
    Relative,
    Strict,
}

impl From<QepsArg> for TruncationMode {
    fn from(q: QepsArg) -> Self {
        match q {
            QepsArg::Relative => TruncationMode::Relative,
            QepsArg::Strict => TruncationMode::Strict,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizeArg {
    SelfLoop,
    Reject,
}

impl From<NormalizeArg> for ZeroRowPolicy {
    fn from(n: NormalizeArg) -> Self {
        match n {
            NormalizeArg::SelfLoop => ZeroRowPolicy::SelfLoop,
            NormalizeArg::Reject => ZeroRowPolicy::Reject,
        }
    }
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Edge list CSV (`source,target,weight`).
    #[arg(long, value_name = "PATH", conflicts_with = "instance")]
    pub graph: Option<PathBuf>,
    /// Impacts CSV (`node,impact`), used with --graph.
    #[arg(long, value_name = "PATH", conflicts_with = "instance")]
    pub impacts: Option<PathBuf>,
    /// Single-file JSON instance.
    #[arg(long, value_name = "PATH")]
    pub instance: Option<PathBuf>,
    /// Treat the weights as an already row-stochastic matrix.
    #[arg(long)]
    pub row_stochastic: bool,
    /// Accepted deviation of a row sum from 1 for row-stochastic input.
    #[arg(long, value_name = "X", default_value_t = DEFAULT_ROW_TOLERANCE)]
    pub row_tolerance: f64,
    /// What to do with players that have no outgoing weight.
    #[arg(long, value_enum, default_value = "reject")]
    pub normalize: NormalizeArg,
}

#[derive(Debug, Args)]
pub struct DepthArgs {
    /// Accuracy target for the series (ignored with --q).
    #[arg(long, value_name = "X", conflicts_with = "q")]
    pub epsilon: Option<f64>,
    /// Fixed truncation depth.
    #[arg(long, value_name = "N")]
    pub q: Option<usize>,
    /// Rule turning epsilon into a depth.
    #[arg(long, value_enum, default_value = "strict")]
    pub qeps: QepsArg,
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Discount factor in (0, 1); defaults to the instance's `gamma`.
    #[arg(long, value_name = "X")]
    pub gamma: Option<f64>,
    #[command(flatten)]
    pub depth: DepthArgs,
    #[arg(long, value_enum, default_value = "series")]
    pub method: MethodArg,
    /// Report path; standard output when absent.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Max-norm tolerance when comparing rows and columns of two players.
    #[arg(long, value_name = "X", default_value_t = 0.0)]
    pub pair_tolerance: f64,
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AxiomsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_name = "X")]
    pub gamma: Option<f64>,
    #[command(flatten)]
    pub depth: DepthArgs,
    /// Tolerance of every check.
    #[arg(long, value_name = "X", default_value_t = axioms::DEFAULT_AXIOM_TOLERANCE)]
    pub tol: f64,
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// `MIN:MAX:STEPS` or a comma-separated list of values.
    #[arg(long, value_name = "GRID")]
    pub gammas: String,
    #[arg(long, value_enum, default_value = "series")]
    pub method: MethodArg,
    /// Accuracy of each series row.
    #[arg(long, value_name = "X", default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_name = "X")]
    pub gamma: Option<f64>,
    #[arg(long, value_name = "N")]
    pub q: usize,
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

/// A failure with its exit code and machine-readable code.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub exit_code: i32,
    pub code: String,
    pub message: String,
}

impl CliError {
    fn input(code: &str, message: impl Into<String>) -> Self {
        Self {
            exit_code: 2,
            code: code.to_owned(),
            message: message.into(),
        }
    }

    fn internal(code: &str, message: impl Into<String>) -> Self {
        Self {
            exit_code: 1,
            code: code.to_owned(),
            message: message.into(),
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::input(e.code(), e.to_string())
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::input(e.code(), e.to_string())
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::SingularSystem => CliError::internal(e.code(), e.to_string()),
            other => CliError::input(other.code(), other.to_string()),
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = stdout.write_all(rendered.as_bytes());
            } else {
                let _ = stderr.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    match execute(&cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error[{}]: {}", e.code, e.message.replace('\n', " "));
            e.exit_code
        }
    }
}

fn execute(command: &Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    match command {
        Command::Compute(args) => cmd_compute(args, stdout, stderr),
        Command::Validate(args) => cmd_validate(args, stdout),
        Command::Axioms(args) => cmd_axioms(args, stdout),
        Command::Sweep(args) => cmd_sweep(args, stdout),
        Command::Matrix(args) => cmd_matrix(args, stdout),
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::input("read-failed", format!("{}: {e}", path.display())))
}

fn emit(output: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    let result = match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| format!("{}: {e}", path.display())),
        None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    result.map_err(|m| CliError::internal("write-failed", m))
}

struct Loaded {
    source: MatrixSource,
    impacts: Option<ImpactVector>,
    metadata: InstanceMetadata,
}

fn load(input: &InputArgs, need_impacts: bool) -> Result<Loaded, CliError> {
    let mut loaded = match (&input.instance, &input.graph) {
        (Some(path), _) => {
            let inst = io::parse_instance_json(&read_file(path)?)?;
            Loaded {
                source: inst.matrix,
                impacts: Some(inst.impacts),
                metadata: inst.metadata,
            }
        }
        (None, Some(path)) => {
            let raw = io::parse_edges_csv(&read_file(path)?)?;
            let impacts = match &input.impacts {
                Some(p) => Some(io::parse_impacts_csv(&read_file(p)?, raw.players())?),
                None => None,
            };
            Loaded {
                source: MatrixSource::Raw(raw),
                impacts,
                metadata: InstanceMetadata::default(),
            }
        }
        (None, None) => {
            return Err(CliError::input(
                "missing-input",
                "one of --instance or --graph is required",
            ))
        }
    };
    if need_impacts && loaded.impacts.is_none() {
        return Err(CliError::input(
            "missing-input",
            "--impacts is required together with --graph",
        ));
    }
    if input.row_stochastic {
        if let MatrixSource::Raw(raw) = &loaded.source {
            loaded.source = MatrixSource::RowStochastic {
                players: raw.players().clone(),
                grid: raw.weights().clone(),
            };
        }
    }
    Ok(loaded)
}

fn resolve(loaded: &Loaded, input: &InputArgs) -> Result<RowStochasticMatrix, CliError> {
    Ok(loaded
        .source
        .resolve(input.row_tolerance, input.normalize.into())?)
}

fn gamma_from(flag: Option<f64>, metadata: &InstanceMetadata) -> Result<DiscountFactor, CliError> {
    match (flag, metadata.gamma) {
        (Some(g), _) => Ok(DiscountFactor::new(g)?),
        (None, Some(g)) => Ok(g),
        (None, None) => Err(CliError::input(
            "missing-gamma",
            "--gamma is required (the instance does not define one)",
        )),
    }
}

fn depth_from(
    depth: &DepthArgs,
    gamma: DiscountFactor,
    iota: &ImpactVector,
) -> Result<usize, CliError> {
    match depth.q {
        Some(q) => Ok(q),
        None => Ok(solver::min_truncation_depth(
            gamma,
            iota,
            depth.epsilon.unwrap_or(DEFAULT_EPSILON),
            depth.qeps.into(),
        )?),
    }
}

/// Fixed-width table, 6 decimals.
pub fn summary_table(report: &ResponsibilityReport) -> String {
    let width = report
        .players
        .ids()
        .iter()
        .map(String::len)
        .max()
        .unwrap_or(0)
        .max("player".len());
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>14}  {:>14}  {:>14}",
        "player", "total", "direct", "indirect"
    );
    for i in 0..report.len() {
        let _ = writeln!(
            out,
            "{:<width$}  {:>14.6}  {:>14.6}  {:>14.6}",
            report.players.id(i),
            report.total[i],
            report.direct[i],
            report.indirect[i]
        );
    }
    let _ = write!(
        out,
        "gamma = {}, method = {}",
        report.gamma,
        report.method.as_str()
    );
    if let Some(q) = report.q_used {
        let _ = write!(out, ", q = {q}");
    }
    if let Some(e) = report.certified_error {
        let _ = write!(out, ", certified error <= {e:.3e}");
    }
    out.push('\n');
    out
}

pub fn cmd_compute(
    args: &ComputeArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    let loaded = load(&args.input, true)?;
    let gamma = gamma_from(args.gamma, &loaded.metadata)?;
    if let Some(eps) = args.depth.epsilon {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(SolverError::NonPositiveEpsilon(eps).into());
        }
    }
    let a = resolve(&loaded, &args.input)?;
    let iota = loaded.impacts.as_ref().expect("impacts loaded");
    let report = match args.method {
        MethodArg::Exact => solver::exact_value(&a, iota, gamma)?,
        MethodArg::Series => {
            let q = depth_from(&args.depth, gamma, iota)?;
            solver::truncated_value(&a, iota, gamma, q)?
        }
    };
    emit(args.output.as_deref(), &io::write_report_json(&report), stdout)?;
    let _ = stderr.write_all(summary_table(&report).as_bytes());
    Ok(0)
}

pub fn cmd_validate(args: &ValidateArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    if !(args.pair_tolerance >= 0.0) {
        return Err(CliError::input(
            "invalid-tolerance",
            format!("pair tolerance must be nonnegative, got {}", args.pair_tolerance),
        ));
    }
    let loaded = load(&args.input, false)?;
    let players = loaded.source.players().clone();
    let mut out = String::new();
    let _ = writeln!(out, "players: {}", players.len());
    if let MatrixSource::RowStochastic { grid, .. } = &loaded.source {
        let _ = writeln!(out, "row sums (tolerance {}):", args.input.row_tolerance);
        for d in RowStochasticMatrix::row_diagnostics(grid, &players, args.input.row_tolerance) {
            let _ = writeln!(
                out,
                "  {}  {:.12}  {}",
                d.player,
                d.sum,
                if d.within_tolerance { "ok" } else { "VIOLATION" }
            );
        }
    } else {
        let _ = writeln!(out, "weights: raw, normalized per row");
    }
    let a = match resolve(&loaded, &args.input) {
        Ok(a) => a,
        Err(e) => {
            out.push_str("valid: no\n");
            emit(args.output.as_deref(), &out, stdout)?;
            return Err(e);
        }
    };
    out.push_str("valid: yes\n");
    let ids = players.ids();
    let independent: Vec<&str> = a
        .independent_players()
        .into_iter()
        .map(|i| ids[i].as_str())
        .collect();
    let _ = writeln!(
        out,
        "independent players: {}",
        if independent.is_empty() {
            "none".to_owned()
        } else {
            independent.join(", ")
        }
    );
    let pairs: Vec<String> = a
        .symmetric_pairs(args.pair_tolerance)
        .into_iter()
        .map(|(i, j)| format!("{{{}, {}}}", ids[i], ids[j]))
        .collect();
    let _ = writeln!(
        out,
        "symmetric pairs: {}",
        if pairs.is_empty() {
            "none".to_owned()
        } else {
            pairs.join(", ")
        }
    );
    emit(args.output.as_deref(), &out, stdout)?;
    Ok(0)
}

fn render_verdict(out: &mut String, v: &AxiomVerdict) {
    let status = match v.status {
        Status::Passed => "pass",
        Status::Failed => "FAIL",
        Status::NotApplicable => "n/a",
    };
    let _ = write!(out, "{:<20} {:<5}", v.axiom.as_str(), status);
    if v.status != Status::NotApplicable {
        let _ = write!(out, " max_violation={:.3e} tol={:e}", v.max_violation, v.tolerance);
    }
    if let Some(note) = &v.note {
        let _ = write!(out, " ({note})");
    }
    out.push('\n');
    for d in &v.details {
        let _ = writeln!(
            out,
            "    {}: observed={} expected={} violation={:.3e}",
            d.label,
            io::format_real(d.observed),
            io::format_real(d.expected),
            d.violation
        );
    }
}

pub fn cmd_axioms(args: &AxiomsArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    if !(args.tol >= 0.0) {
        return Err(CliError::input(
            "invalid-tolerance",
            format!("tolerance must be nonnegative, got {}", args.tol),
        ));
    }
    let loaded = load(&args.input, true)?;
    let gamma = gamma_from(args.gamma, &loaded.metadata)?;
    let a = resolve(&loaded, &args.input)?;
    let iota = loaded.impacts.as_ref().expect("impacts loaded");
    let q = depth_from(&args.depth, gamma, iota)?;
    let verdicts = axioms::check_all(&a, iota, gamma, q, args.tol)?;
    let mut out = String::new();
    for v in &verdicts {
        render_verdict(&mut out, v);
    }
    let failed: Vec<&str> = verdicts
        .iter()
        .filter(|v| v.status == Status::Failed)
        .map(|v| v.axiom.as_str())
        .collect();
    let _ = writeln!(
        out,
        "result: {}",
        if failed.is_empty() { "all applicable checks passed" } else { "FAILED" }
    );
    emit(args.output.as_deref(), &out, stdout)?;
    if failed.is_empty() {
        Ok(0)
    } else {
        Err(CliError::internal(
            "axiom-failed",
            format!("checks failed: {}", failed.join(", ")),
        ))
    }
}

/// Parses `MIN:MAX:STEPS` or `g1,g2,…`.
pub fn parse_gamma_grid(text: &str) -> Result<Vec<DiscountFactor>, CliError> {
    let bad = |m: String| CliError::input("invalid-grid", m);
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| bad(format!("`{s}` is not a number")))
    };
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(format!("expected MIN:MAX:STEPS, got `{text}`")));
        }
        let steps = parts[2]
            .trim()
            .parse::<usize>()
            .map_err(|_| bad(format!("`{}` is not a step count", parts[2])))?;
        Ok(solver::gamma_grid(number(parts[0])?, number(parts[1])?, steps)?)
    } else {
        text.split(',')
            .map(|s| Ok(DiscountFactor::new(number(s)?)?))
            .collect()
    }
}

pub fn cmd_sweep(args: &SweepArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let grid = parse_gamma_grid(&args.gammas)?;
    let loaded = load(&args.input, true)?;
    let a = resolve(&loaded, &args.input)?;
    let iota = loaded.impacts.as_ref().expect("impacts loaded");
    let method = match args.method {
        MethodArg::Exact => SweepMethod::Exact,
        MethodArg::Series => SweepMethod::Series {
            epsilon: args.epsilon,
        },
    };
    let table = solver::gamma_sweep(&a, iota, &grid, method)?;
    emit(args.output.as_deref(), &io::write_sweep_csv(&table), stdout)?;
    Ok(0)
}

pub fn cmd_matrix(args: &MatrixArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let loaded = load(&args.input, false)?;
    let gamma = gamma_from(args.gamma, &loaded.metadata)?;
    let a = resolve(&loaded, &args.input)?;
    let p = solver::propagation_matrix(&a, gamma, args.q);
    emit(args.output.as_deref(), &io::write_matrix_csv(a.players(), &p), stdout)?;
    Ok(0)
}
