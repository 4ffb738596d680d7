//! Instance types: players, adjacency matrices, impacts and the discount
//! factor, plus the structural detectors for independent and symmetric
//! players.
//!
//! Every type here is validated at construction and immutable afterwards.

use std::collections::HashMap;
use std::fmt;
use std::ops::Index;

use thiserror::Error;

use crate::numeric::compensated_sum;

/// Default tolerance on `|Σ_j A[i, j] − 1|` accepted by [`RowStochasticMatrix::validate`].
pub const DEFAULT_ROW_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("player set must not be empty")]
    EmptyPlayerSet,
    #[error("duplicate player id `{0}`")]
    DuplicatePlayer(String),
    #[error("invalid player id `{0}` (allowed characters: A-Z a-z 0-9 _ . -)")]
    InvalidPlayerId(String),
    #[error("shape mismatch: expected {expected}x{expected}, found {found}")]
    ShapeMismatch { expected: usize, found: String },
    #[error("entry A[{row}, {col}] = {value} lies outside [0, 1]")]
    EntryOutOfRange { row: String, col: String, value: f64 },
    #[error("row `{row}` sums to {sum}, deviating from 1 by more than {tolerance}")]
    RowSumViolation { row: String, sum: f64, tolerance: f64 },
    #[error("row tolerance must be a nonnegative finite number, got {0}")]
    InvalidTolerance(f64),
    #[error("weight W[{row}, {col}] = {value} is negative or not finite")]
    NegativeWeight { row: String, col: String, value: f64 },
    #[error("player `{0}` has no outgoing weight and the zero-row policy is `reject`")]
    ZeroRow(String),
    #[error("impact vector has {found} entries for {expected} players")]
    ImpactLength { expected: usize, found: usize },
    #[error("impact of player `{player}` is not finite ({value})")]
    NonFiniteImpact { player: String, value: f64 },
    #[error("discount factor must lie strictly between 0 and 1, got {0}")]
    GammaOutOfRange(f64),
}

impl GraphError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            GraphError::EmptyPlayerSet => "empty-player-set",
            GraphError::DuplicatePlayer(_) => "duplicate-player",
            GraphError::InvalidPlayerId(_) => "invalid-player-id",
            GraphError::ShapeMismatch { .. } => "shape-mismatch",
            GraphError::EntryOutOfRange { .. } => "entry-out-of-range",
            GraphError::RowSumViolation { .. } => "row-sum-violation",
            GraphError::InvalidTolerance(_) => "invalid-tolerance",
            GraphError::NegativeWeight { .. } => "negative-weight",
            GraphError::ZeroRow(_) => "zero-row",
            GraphError::ImpactLength { .. } => "impact-length",
            GraphError::NonFiniteImpact { .. } => "non-finite-impact",
            GraphError::GammaOutOfRange(_) => "gamma-out-of-range",
        }
    }
}

/// Returns true when `id` only uses `[A-Za-z0-9_.-]` and is non-empty.
pub fn is_valid_player_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'-'))
}

/// Ordered, duplicate-free set of player identifiers.
///
/// The position of an id in the set is its matrix index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlayerSet {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl PlayerSet {
    pub fn new<I, S>(ids: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let ids: Vec<String> = ids.into_iter().map(Into::into).collect();
        if ids.is_empty() {
            return Err(GraphError::EmptyPlayerSet);
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if !is_valid_player_id(id) {
                return Err(GraphError::InvalidPlayerId(id.clone()));
            }
            if index.insert(id.clone(), i).is_some() {
                return Err(GraphError::DuplicatePlayer(id.clone()));
            }
        }
        Ok(Self { ids, index })
    }

    /// Players `1, 2, …, n`.
    pub fn numbered(n: usize) -> Result<Self, GraphError> {
        Self::new((1..=n).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }
}

/// Square dense matrix of `f64`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, GraphError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(GraphError::ShapeMismatch {
                    expected: n,
                    found: format!("a row of length {}", row.len()),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.n + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.n..(row + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n.max(1)).take(self.n)
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |r| self.get(r, col))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &DenseMatrix) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Self {
        debug_assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(&other.data[k * n..(k + 1) * n]) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Row vector times matrix: `out[j] = Σ_i v[i] · M[i, j]`.
    pub fn left_mul(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.n);
        let mut out = vec![0.0; self.n];
        for (row, &vi) in self.rows().zip(v) {
            if vi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(row) {
                *o += vi * a;
            }
        }
        out
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (row, col): (usize, usize)) -> &f64 {
        &self.data[row * self.n + col]
    }
}

/// What [`RowStochasticMatrix::normalize`] does with a player whose
/// outgoing weights are all zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroRowPolicy {
    /// Complete the row with a self-loop (`A[i, i] = 1`).
    SelfLoop,
    /// Treat the row as an error.
    #[default]
    Reject,
}

/// Nonnegative, unnormalized weights (e.g. sales volumes).
#[derive(Debug, Clone, PartialEq)]
pub struct RawWeightMatrix {
    players: PlayerSet,
    weights: DenseMatrix,
}

impl RawWeightMatrix {
    pub fn new(players: PlayerSet, weights: DenseMatrix) -> Result<Self, GraphError> {
        check_shape(&players, &weights)?;
        for (i, row) in weights.rows().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                if !(w >= 0.0 && w.is_finite()) {
                    return Err(GraphError::NegativeWeight {
                        row: players.id(i).to_owned(),
                        col: players.id(j).to_owned(),
                        value: w,
                    });
                }
            }
        }
        Ok(Self { players, weights })
    }

    pub fn players(&self) -> &PlayerSet {
        &self.players
    }

    pub fn weights(&self) -> &DenseMatrix {
        &self.weights
    }
}

fn check_shape(players: &PlayerSet, m: &DenseMatrix) -> Result<(), GraphError> {
    if m.dim() != players.len() {
        return Err(GraphError::ShapeMismatch {
            expected: players.len(),
            found: format!("{0}x{0}", m.dim()),
        });
    }
    Ok(())
}

/// Validated row-stochastic adjacency matrix: entries in `[0, 1]`, every
/// row summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct RowStochasticMatrix {
    players: PlayerSet,
    entries: DenseMatrix,
    row_tolerance: f64,
}

/// Row sum of one input row, for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RowDiagnostic {
    pub player: String,
    pub sum: f64,
    pub deviation: f64,
    pub within_tolerance: bool,
}

impl RowStochasticMatrix {
    /// Checks entries and row sums, then renormalizes every row by its sum.
    ///
    /// Rows that already sum to one within `n` ulps are left untouched so
    /// that validating an already validated matrix is the identity.
    pub fn validate(
        entries: DenseMatrix,
        players: PlayerSet,
        row_tolerance: f64,
    ) -> Result<Self, GraphError> {
        if !(row_tolerance >= 0.0 && row_tolerance.is_finite()) {
            return Err(GraphError::InvalidTolerance(row_tolerance));
        }
        check_shape(&players, &entries)?;
        let n = players.len();
        for (i, row) in entries.rows().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&a) {
                    return Err(GraphError::EntryOutOfRange {
                        row: players.id(i).to_owned(),
                        col: players.id(j).to_owned(),
                        value: a,
                    });
                }
            }
        }
        let mut normalized = entries;
        for i in 0..n {
            let sum = compensated_sum(normalized.row(i));
            if sum == 0.0 || (sum - 1.0).abs() > row_tolerance {
                return Err(GraphError::RowSumViolation {
                    row: players.id(i).to_owned(),
                    sum,
                    tolerance: row_tolerance,
                });
            }
            renormalize_row(&mut normalized, i, sum);
        }
        Ok(Self {
            players,
            entries: normalized,
            row_tolerance,
        })
    }

    /// Divides every row of `raw` by its sum.
    pub fn normalize(raw: &RawWeightMatrix, policy: ZeroRowPolicy) -> Result<Self, GraphError> {
        let players = raw.players.clone();
        let n = players.len();
        let mut entries = raw.weights.clone();
        for i in 0..n {
            let sum = compensated_sum(entries.row(i));
            if sum == 0.0 {
                match policy {
                    ZeroRowPolicy::Reject => {
                        return Err(GraphError::ZeroRow(players.id(i).to_owned()))
                    }
                    ZeroRowPolicy::SelfLoop => entries.set(i, i, 1.0),
                }
                continue;
            }
            for j in 0..n {
                entries.set(i, j, entries.get(i, j) / sum);
            }
            let sum = compensated_sum(entries.row(i));
            renormalize_row(&mut entries, i, sum);
        }
        Ok(Self {
            players,
            entries,
            row_tolerance: 0.0,
        })
    }

    /// Row sums of an unvalidated grid, one entry per row.
    pub fn row_diagnostics(
        entries: &DenseMatrix,
        players: &PlayerSet,
        row_tolerance: f64,
    ) -> Vec<RowDiagnostic> {
        entries
            .rows()
            .enumerate()
            .map(|(i, row)| {
                let sum = compensated_sum(row);
                let deviation = (sum - 1.0).abs();
                RowDiagnostic {
                    player: players.id(i).to_owned(),
                    sum,
                    deviation,
                    within_tolerance: sum != 0.0 && deviation <= row_tolerance,
                }
            })
            .collect()
    }

    pub fn identity(players: PlayerSet) -> Self {
        let n = players.len();
        Self {
            players,
            entries: DenseMatrix::identity(n),
            row_tolerance: 0.0,
        }
    }

    pub fn players(&self) -> &PlayerSet {
        &self.players
    }

    pub fn entries(&self) -> &DenseMatrix {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.players.len()
    }

    pub fn row_tolerance(&self) -> f64 {
        self.row_tolerance
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries.get(row, col)
    }

    /// Players whose column is identically zero: nobody passes
    /// responsibility to them.
    ///
    /// Returned as ascending matrix indices.
    pub fn independent_players(&self) -> Vec<usize> {
        (0..self.dim())
            .filter(|&j| self.entries.column(j).all(|a| a == 0.0))
            .collect()
    }

    /// All pairs `(i, j)`, `i < j`, whose rows and columns agree within
    /// `pair_tolerance` in the max norm.
    pub fn symmetric_pairs(&self, pair_tolerance: f64) -> Vec<(usize, usize)> {
        let n = self.dim();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let rows_match = self
                    .entries
                    .row(i)
                    .iter()
                    .zip(self.entries.row(j))
                    .all(|(a, b)| (a - b).abs() <= pair_tolerance);
                let cols_match = rows_match
                    && self
                        .entries
                        .column(i)
                        .zip(self.entries.column(j))
                        .all(|(a, b)| (a - b).abs() <= pair_tolerance);
                if cols_match {
                    pairs.push((i, j));
                }
            }
        }
        pairs
    }

    /// Relabels the instance: player `perm[k]` of `self` becomes player `k`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.dim();
        assert_eq!(perm.len(), n, "permutation length");
        let players = PlayerSet::new(perm.iter().map(|&p| self.players.id(p).to_owned()))
            .expect("permutation of a valid player set");
        let mut entries = DenseMatrix::zeros(n);
        for (a, &pa) in perm.iter().enumerate() {
            for (b, &pb) in perm.iter().enumerate() {
                entries.set(a, b, self.entries.get(pa, pb));
            }
        }
        Self {
            players,
            entries,
            row_tolerance: self.row_tolerance,
        }
    }
}

fn renormalize_row(m: &mut DenseMatrix, row: usize, sum: f64) {
    let n = m.dim();
    if (sum - 1.0).abs() <= n as f64 * f64::EPSILON {
        return;
    }
    for j in 0..n {
        let v = (m.get(row, j) / sum).min(1.0);
        m.set(row, j, v);
    }
}

/// Impact quantity `ι(p)` per player.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpactVector {
    players: PlayerSet,
    values: Vec<f64>,
    total: f64,
    abs_total: f64,
}

impl ImpactVector {
    pub fn new(players: PlayerSet, values: Vec<f64>) -> Result<Self, GraphError> {
        if values.len() != players.len() {
            return Err(GraphError::ImpactLength {
                expected: players.len(),
                found: values.len(),
            });
        }
        if let Some((i, &v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(GraphError::NonFiniteImpact {
                player: players.id(i).to_owned(),
                value: v,
            });
        }
        let total = compensated_sum(&values);
        let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
        let abs_total = compensated_sum(&abs);
        Ok(Self {
            players,
            values,
            total,
            abs_total,
        })
    }

    pub fn zeros(players: PlayerSet) -> Self {
        let n = players.len();
        Self::new(players, vec![0.0; n]).expect("zero impacts are valid")
    }

    pub fn players(&self) -> &PlayerSet {
        &self.players
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `ι(N) = Σ_p ι(p)`.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// `Σ_p |ι(p)|`, the mass used by all error bounds.
    pub fn abs_total(&self) -> f64 {
        self.abs_total
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    /// Same players, values replaced.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self, GraphError> {
        Self::new(self.players.clone(), values)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, GraphError> {
        self.with_values(self.values.iter().map(|v| v * factor).collect())
    }

    /// Componentwise sum; both vectors must share the same players.
    pub fn try_add(&self, other: &ImpactVector) -> Result<Self, GraphError> {
        if self.players != other.players {
            return Err(GraphError::ImpactLength {
                expected: self.len(),
                found: other.len(),
            });
        }
        self.with_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        let players = PlayerSet::new(perm.iter().map(|&p| self.players.id(p).to_owned()))
            .expect("permutation of a valid player set");
        Self::new(players, perm.iter().map(|&p| self.values[p]).collect())
            .expect("permutation of valid impacts")
    }
}

/// Discount factor `γ`, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct DiscountFactor(f64);

impl DiscountFactor {
    pub fn new(gamma: f64) -> Result<Self, GraphError> {
        if gamma > 0.0 && gamma < 1.0 {
            Ok(Self(gamma))
        } else {
            Err(GraphError::GammaOutOfRange(gamma))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `1 − γ`, the per-step propagation weight.
    pub fn complement(self) -> f64 {
        1.0 - self.0
    }
}

impl fmt::Display for DiscountFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl TryFrom<f64> for DiscountFactor {
    type Error = GraphError;

    fn try_from(gamma: f64) -> Result<Self, GraphError> {
        Self::new(gamma)
    }
}
