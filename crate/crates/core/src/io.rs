//! File formats.
//!
//! * edge list CSV, header `source,target,weight`, raw nonnegative weights;
//! * impacts CSV, header `node,impact`;
//! * single-file JSON instance (dense `matrix` rows or an `edges` list);
//! * report JSON, sweep CSV and propagation-matrix CSV writers.
//!
//! Players are ordered by first appearance. Reals are written with 17
//! significant digits, which round-trips every binary64 value.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use crate::graph::{
    is_valid_player_id, DenseMatrix, DiscountFactor, GraphError, ImpactVector, PlayerSet,
    RawWeightMatrix, RowStochasticMatrix, ZeroRowPolicy,
};
use crate::solver::{Method, ResponsibilityReport, SweepTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IoError {
    #[error("line {line}: {message}")]
    MalformedRow { line: u64, message: String },
    #[error("line {line}: duplicate edge {from} -> {to}")]
    DuplicateEdge { line: u64, from: String, to: String },
    #[error("line {line}: weight {value} is negative or not finite")]
    NegativeWeight { line: u64, value: f64 },
    #[error("line {line}: unknown player `{id}`")]
    UnknownPlayer { line: u64, id: String },
    #[error("line {line}: duplicate impact for player `{id}`")]
    DuplicateImpact { line: u64, id: String },
    #[error("{locator}: no impact given for player `{id}`")]
    MissingPlayer { locator: String, id: String },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
}

impl IoError {
    pub fn code(&self) -> &'static str {
        match self {
            IoError::MalformedRow { .. } => "malformed-row",
            IoError::DuplicateEdge { .. } => "duplicate-edge",
            IoError::NegativeWeight { .. } => "negative-weight",
            IoError::UnknownPlayer { .. } => "unknown-player",
            IoError::DuplicateImpact { .. } => "duplicate-impact",
            IoError::MissingPlayer { .. } => "missing-player",
            IoError::Schema { .. } => "schema",
        }
    }
}

fn malformed(line: u64, message: impl Into<String>) -> IoError {
    IoError::MalformedRow {
        line,
        message: message.into(),
    }
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> IoError {
    IoError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn csv_error(err: csv::Error) -> IoError {
    let line = err.position().map_or(0, |p| p.line());
    malformed(line, err.to_string())
}

fn expect_header(reader: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<(), IoError> {
    let header = reader.headers().map_err(csv_error)?;
    let fields: Vec<&str> = header.iter().collect();
    if fields != expected {
        return Err(malformed(
            1,
            format!("expected header `{}`, found `{}`", expected.join(","), fields.join(",")),
        ));
    }
    Ok(())
}

fn parse_real(line: u64, field: &str, what: &str) -> Result<f64, IoError> {
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| malformed(line, format!("{what} `{field}` is not a finite number")))
}

fn check_id(line: u64, id: &str) -> Result<(), IoError> {
    if is_valid_player_id(id) {
        Ok(())
    } else {
        Err(malformed(
            line,
            format!("player id `{id}` must match [A-Za-z0-9_.-]+"),
        ))
    }
}

/// Parses a `source,target,weight` edge list into raw weights.
pub fn parse_edges_csv(text: &str) -> Result<RawWeightMatrix, IoError> {
    let mut reader = csv_reader(text);
    expect_header(&mut reader, &["source", "target", "weight"])?;
    let mut order: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut seen: HashMap<(usize, usize), u64> = HashMap::new();
    let mut intern = |id: &str| -> usize {
        if let Some(&i) = index.get(id) {
            return i;
        }
        order.push(id.to_owned());
        index.insert(id.to_owned(), order.len() - 1);
        order.len() - 1
    };
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(malformed(
                line,
                format!("expected 3 fields, found {}", record.len()),
            ));
        }
        let (source, target) = (&record[0], &record[1]);
        check_id(line, source)?;
        check_id(line, target)?;
        let weight = parse_real(line, &record[2], "weight")?;
        if weight < 0.0 {
            return Err(IoError::NegativeWeight {
                line,
                value: weight,
            });
        }
        let s = intern(source);
        let t = intern(target);
        if seen.insert((s, t), line).is_some() {
            return Err(IoError::DuplicateEdge {
                line,
                from: source.to_owned(),
                to: target.to_owned(),
            });
        }
        edges.push((s, t, weight));
    }
    if order.is_empty() {
        return Err(malformed(2, "edge list has no rows"));
    }
    let players = PlayerSet::new(order).map_err(|e| malformed(0, e.to_string()))?;
    let mut weights = DenseMatrix::zeros(players.len());
    for (s, t, w) in edges {
        weights.set(s, t, w);
    }
    RawWeightMatrix::new(players, weights).map_err(|e| malformed(0, e.to_string()))
}

/// Parses a `node,impact` file; every player must appear exactly once.
pub fn parse_impacts_csv(text: &str, players: &PlayerSet) -> Result<ImpactVector, IoError> {
    let mut reader = csv_reader(text);
    expect_header(&mut reader, &["node", "impact"])?;
    let mut values: Vec<Option<f64>> = vec![None; players.len()];
    let mut last_line = 1;
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        last_line = line;
        if record.len() != 2 {
            return Err(malformed(
                line,
                format!("expected 2 fields, found {}", record.len()),
            ));
        }
        let id = &record[0];
        check_id(line, id)?;
        let i = players.index_of(id).ok_or_else(|| IoError::UnknownPlayer {
            line,
            id: id.to_owned(),
        })?;
        let value = parse_real(line, &record[1], "impact")?;
        if values[i].replace(value).is_some() {
            return Err(IoError::DuplicateImpact {
                line,
                id: id.to_owned(),
            });
        }
    }
    let values = collect_impacts(values, players, &format!("line {last_line}"))?;
    ImpactVector::new(players.clone(), values).map_err(|e| malformed(0, e.to_string()))
}

fn collect_impacts(
    values: Vec<Option<f64>>,
    players: &PlayerSet,
    locator: &str,
) -> Result<Vec<f64>, IoError> {
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            v.ok_or_else(|| IoError::MissingPlayer {
                locator: locator.to_owned(),
                id: players.id(i).to_owned(),
            })
        })
        .collect()
}

/// Optional descriptive fields of a JSON instance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InstanceMetadata {
    pub name: Option<String>,
    pub period: Option<String>,
    /// Default discount factor carried by the file.
    pub gamma: Option<DiscountFactor>,
}

/// Matrix as read from a file, before validation or normalization.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSource {
    /// Entries asserted to already be row-stochastic; goes through
    /// [`RowStochasticMatrix::validate`].
    RowStochastic { players: PlayerSet, grid: DenseMatrix },
    /// Raw weights; goes through [`RowStochasticMatrix::normalize`].
    Raw(RawWeightMatrix),
}

impl MatrixSource {
    pub fn players(&self) -> &PlayerSet {
        match self {
            MatrixSource::RowStochastic { players, .. } => players,
            MatrixSource::Raw(raw) => raw.players(),
        }
    }

    pub fn grid(&self) -> &DenseMatrix {
        match self {
            MatrixSource::RowStochastic { grid, .. } => grid,
            MatrixSource::Raw(raw) => raw.weights(),
        }
    }

    pub fn resolve(
        &self,
        row_tolerance: f64,
        policy: ZeroRowPolicy,
    ) -> Result<RowStochasticMatrix, GraphError> {
        match self {
            MatrixSource::RowStochastic { players, grid } => {
                RowStochasticMatrix::validate(grid.clone(), players.clone(), row_tolerance)
            }
            MatrixSource::Raw(raw) => RowStochasticMatrix::normalize(raw, policy),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub matrix: MatrixSource,
    pub impacts: ImpactVector,
    pub metadata: InstanceMetadata,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    name: Option<String>,
    period: Option<String>,
    gamma: Option<f64>,
    #[serde(default)]
    row_stochastic: bool,
    players: Vec<String>,
    matrix: Option<Vec<Vec<f64>>>,
    edges: Option<Vec<EdgeDoc>>,
    impacts: serde_json::Map<String, Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    source: String,
    target: String,
    weight: f64,
}

/// Parses a single-file JSON instance.
///
/// ```json
/// {
///   "name": "four-player", "period": "2023", "gamma": 0.6,
///   "row_stochastic": true,
///   "players": ["1", "2"],
///   "matrix": [[0.0, 1.0], [0.0, 1.0]],
///   "impacts": {"1": 1.0, "2": 0.0}
/// }
/// ```
///
/// `edges: [{"source": .., "target": .., "weight": ..}]` may replace
/// `matrix`; exactly one of the two must be present.
pub fn parse_instance_json(text: &str) -> Result<Instance, IoError> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(|e| schema("$", e.to_string()))?;

    let players = parse_players(&doc.players)?;
    let n = players.len();
    let grid = match (doc.matrix, doc.edges) {
        (Some(_), Some(_)) => {
            return Err(schema("$", "`matrix` and `edges` are mutually exclusive"))
        }
        (None, None) => return Err(schema("$", "one of `matrix` or `edges` is required")),
        (Some(rows), None) => {
            if rows.len() != n {
                return Err(schema(
                    "$.matrix",
                    format!("expected {n} rows, found {}", rows.len()),
                ));
            }
            for (i, row) in rows.iter().enumerate() {
                if row.len() != n {
                    return Err(schema(
                        format!("$.matrix[{i}]"),
                        format!("expected {n} entries, found {}", row.len()),
                    ));
                }
            }
            DenseMatrix::from_rows(&rows).map_err(|e| schema("$.matrix", e.to_string()))?
        }
        (None, Some(edges)) => {
            let mut grid = DenseMatrix::zeros(n);
            let mut seen = vec![false; n * n];
            for (k, edge) in edges.iter().enumerate() {
                let lookup = |id: &str, field: &str| {
                    players.index_of(id).ok_or_else(|| {
                        schema(format!("$.edges[{k}].{field}"), format!("unknown player `{id}`"))
                    })
                };
                let s = lookup(&edge.source, "source")?;
                let t = lookup(&edge.target, "target")?;
                if std::mem::replace(&mut seen[s * n + t], true) {
                    return Err(schema(
                        format!("$.edges[{k}]"),
                        format!("duplicate edge {} -> {}", edge.source, edge.target),
                    ));
                }
                if !(edge.weight >= 0.0 && edge.weight.is_finite()) {
                    return Err(schema(
                        format!("$.edges[{k}].weight"),
                        format!("weight {} is negative or not finite", edge.weight),
                    ));
                }
                grid.set(s, t, edge.weight);
            }
            grid
        }
    };

    let matrix = if doc.row_stochastic {
        MatrixSource::RowStochastic {
            players: players.clone(),
            grid,
        }
    } else {
        MatrixSource::Raw(
            RawWeightMatrix::new(players.clone(), grid)
                .map_err(|e| schema("$.matrix", e.to_string()))?,
        )
    };

    let mut values: Vec<Option<f64>> = vec![None; n];
    for (id, value) in &doc.impacts {
        let path = format!("$.impacts.{id}");
        let i = players
            .index_of(id)
            .ok_or_else(|| schema(&path, format!("unknown player `{id}`")))?;
        let v = value
            .as_f64()
            .filter(|v| v.is_finite())
            .ok_or_else(|| schema(&path, "impact must be a finite number"))?;
        values[i] = Some(v);
    }
    let values = collect_impacts(values, &players, "$.impacts")?;
    let impacts =
        ImpactVector::new(players, values).map_err(|e| schema("$.impacts", e.to_string()))?;

    let gamma = doc
        .gamma
        .map(DiscountFactor::new)
        .transpose()
        .map_err(|e| schema("$.gamma", e.to_string()))?;

    Ok(Instance {
        matrix,
        impacts,
        metadata: InstanceMetadata {
            name: doc.name,
            period: doc.period,
            gamma,
        },
    })
}

fn parse_players(ids: &[String]) -> Result<PlayerSet, IoError> {
    if ids.is_empty() {
        return Err(schema("$.players", "at least one player is required"));
    }
    let mut seen = HashMap::new();
    for (k, id) in ids.iter().enumerate() {
        if !is_valid_player_id(id) {
            return Err(schema(
                format!("$.players[{k}]"),
                format!("player id `{id}` must match [A-Za-z0-9_.-]+"),
            ));
        }
        if let Some(first) = seen.insert(id.as_str(), k) {
            return Err(schema(
                format!("$.players[{k}]"),
                format!("duplicate player id `{id}` (first at index {first})"),
            ));
        }
    }
    PlayerSet::new(ids.iter().cloned()).map_err(|e| schema("$.players", e.to_string()))
}

/// Formats a real with 17 significant digits, trailing zeros trimmed
/// (the C `%.17g` rendering).
pub fn format_real(x: f64) -> String {
    if !x.is_finite() {
        return "null".to_owned();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.to_owned();
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        trim_fraction(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_fraction(mantissa.to_owned()))
    }
}

fn trim_fraction(mut s: String) -> String {
    if s.contains('.') {
        let trimmed = s.trim_end_matches('0').trim_end_matches('.').len();
        s.truncate(trimmed);
    }
    s
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn opt_real(x: Option<f64>) -> String {
    x.map_or_else(|| "null".to_owned(), format_real)
}

/// Writes a report as JSON with a fixed key order.
pub fn write_report_json(report: &ResponsibilityReport) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"gamma\": {},", format_real(report.gamma.value()));
    let _ = writeln!(out, "  \"method\": {},", json_string(report.method.as_str()));
    let _ = writeln!(
        out,
        "  \"q\": {},",
        report.q_used.map_or_else(|| "null".to_owned(), |q| q.to_string())
    );
    let _ = writeln!(out, "  \"certified_error\": {},", opt_real(report.certified_error));
    let _ = writeln!(out, "  \"impact_total\": {},", format_real(report.impact_total));
    let _ = writeln!(out, "  \"sum_total\": {},", format_real(report.sum_total()));
    out.push_str("  \"players\": [\n");
    let n = report.len();
    for i in 0..n {
        let _ = write!(
            out,
            "    {{\"id\": {}, \"total\": {}, \"direct\": {}, \"indirect\": {}}}",
            json_string(report.players.id(i)),
            format_real(report.total[i]),
            format_real(report.direct[i]),
            format_real(report.indirect[i]),
        );
        out.push_str(if i + 1 < n { ",\n" } else { "\n" });
    }
    out.push_str("  ]\n}\n");
    out
}

#[derive(Deserialize)]
struct ReportDoc {
    gamma: f64,
    method: String,
    q: Option<usize>,
    certified_error: Option<f64>,
    impact_total: f64,
    players: Vec<ReportRowDoc>,
}

#[derive(Deserialize)]
struct ReportRowDoc {
    id: String,
    total: f64,
    direct: f64,
    indirect: f64,
}

/// Reads back a report produced by [`write_report_json`].
pub fn parse_report_json(text: &str) -> Result<ResponsibilityReport, IoError> {
    let doc: ReportDoc = serde_json::from_str(text).map_err(|e| schema("$", e.to_string()))?;
    let players = PlayerSet::new(doc.players.iter().map(|p| p.id.clone()))
        .map_err(|e| schema("$.players", e.to_string()))?;
    let gamma = DiscountFactor::new(doc.gamma).map_err(|e| schema("$.gamma", e.to_string()))?;
    let method = match doc.method.as_str() {
        "series" => Method::Series,
        "exact" => Method::Exact,
        other => return Err(schema("$.method", format!("unknown method `{other}`"))),
    };
    Ok(ResponsibilityReport {
        players,
        gamma,
        total: doc.players.iter().map(|p| p.total).collect(),
        direct: doc.players.iter().map(|p| p.direct).collect(),
        indirect: doc.players.iter().map(|p| p.indirect).collect(),
        method,
        q_used: doc.q,
        certified_error: doc.certified_error,
        impact_total: doc.impact_total,
    })
}

/// Writes a validated instance as dense JSON with `row_stochastic: true`.
pub fn write_instance_json(
    matrix: &RowStochasticMatrix,
    impacts: &ImpactVector,
    metadata: &InstanceMetadata,
) -> String {
    let ids = matrix.players().ids();
    let mut out = String::from("{\n");
    if let Some(name) = &metadata.name {
        let _ = writeln!(out, "  \"name\": {},", json_string(name));
    }
    if let Some(period) = &metadata.period {
        let _ = writeln!(out, "  \"period\": {},", json_string(period));
    }
    if let Some(gamma) = metadata.gamma {
        let _ = writeln!(out, "  \"gamma\": {},", format_real(gamma.value()));
    }
    out.push_str("  \"row_stochastic\": true,\n");
    let quoted: Vec<String> = ids.iter().map(|id| json_string(id)).collect();
    let _ = writeln!(out, "  \"players\": [{}],", quoted.join(", "));
    out.push_str("  \"matrix\": [\n");
    let n = ids.len();
    for (i, row) in matrix.entries().rows().enumerate() {
        let cells: Vec<String> = row.iter().map(|&x| format_real(x)).collect();
        let _ = write!(out, "    [{}]", cells.join(", "));
        out.push_str(if i + 1 < n { ",\n" } else { "\n" });
    }
    out.push_str("  ],\n  \"impacts\": {");
    let entries: Vec<String> = ids
        .iter()
        .zip(impacts.values())
        .map(|(id, &v)| format!("{}: {}", json_string(id), format_real(v)))
        .collect();
    out.push_str(&entries.join(", "));
    out.push_str("}\n}\n");
    out
}

/// `gamma,<player ids…>` followed by one row of totals per discount factor.
pub fn write_sweep_csv(table: &SweepTable) -> String {
    let mut out = String::from("gamma");
    for id in table.players.ids() {
        out.push(',');
        out.push_str(id);
    }
    out.push('\n');
    for (gamma, row) in table.gammas.iter().zip(&table.rows) {
        out.push_str(&format_real(gamma.value()));
        for &t in &row.total {
            out.push(',');
            out.push_str(&format_real(t));
        }
        out.push('\n');
    }
    out
}

/// Dense matrix as CSV: header `node,<ids…>`, then one labelled row per player.
pub fn write_matrix_csv(players: &PlayerSet, matrix: &DenseMatrix) -> String {
    let mut out = String::from("node");
    for id in players.ids() {
        out.push(',');
        out.push_str(id);
    }
    out.push('\n');
    for (id, row) in players.ids().iter().zip(matrix.rows()) {
        out.push_str(id);
        for &x in row {
            out.push(',');
            out.push_str(&format_real(x));
        }
        out.push('\n');
    }
    out
}
