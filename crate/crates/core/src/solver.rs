//! Computing the responsibility value.
//!
//! Three routes to the same vector:
//!
//! * [`truncated_value`] sums the first `q + 1` terms of the defining series
//!   by repeated vector–matrix products, `O(q·n²)`;
//! * [`value_via_propagation`] builds `P = Σ_{k≤q} ((1−γ)A)^k` once and
//!   multiplies, `O(q·n³)`, useful when many impact vectors share a matrix;
//! * [`exact_value`] solves `(I − (1−γ)Aᵀ)·x = ι` and returns `γ·x`.
//!
//! The truncation error after `q` terms is at most `Σ|ι|·(1−γ)^{q+1}` in
//! the max norm, which [`min_truncation_depth`] inverts.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::graph::{DenseMatrix, DiscountFactor, GraphError, ImpactVector, PlayerSet,
    RowStochasticMatrix};
use crate::numeric::{compensated_sum, pow_usize, CompensatedSum};

/// Above this many players [`exact_value`] switches from a dense LU solve to
/// the series at [`FALLBACK_EPSILON`].
pub const DEFAULT_DENSE_THRESHOLD: usize = 2000;

/// Accuracy of the series used by [`exact_value`] above the dense threshold.
pub const FALLBACK_EPSILON: f64 = 1e-12;

/// Hard cap on the truncation depth [`min_truncation_depth`] will return.
pub const MAX_TRUNCATION_DEPTH: usize = 1 << 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("impact players {impacts:?} do not match matrix players {matrix:?}")]
    DimensionMismatch {
        matrix: Vec<String>,
        impacts: Vec<String>,
    },
    #[error("epsilon must be a positive finite number, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("relative-mode truncation depth needs a positive total impact, got ι(N) = {0}")]
    DegenerateMass(f64),
    #[error("required truncation depth exceeds {MAX_TRUNCATION_DEPTH} (γ = {gamma}, ε = {epsilon})")]
    DepthLimit { gamma: f64, epsilon: f64 },
    #[error("linear system I − (1−γ)Aᵀ is singular; this indicates an invalid matrix")]
    SingularSystem,
    #[error("gamma grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl SolverError {
    pub fn code(&self) -> &'static str {
        match self {
            SolverError::DimensionMismatch { .. } => "dimension-mismatch",
            SolverError::NonPositiveEpsilon(_) => "non-positive-epsilon",
            SolverError::DegenerateMass(_) => "degenerate-mass",
            SolverError::DepthLimit { .. } => "depth-limit",
            SolverError::SingularSystem => "singular-system",
            SolverError::InvalidGrid(_) => "invalid-grid",
            SolverError::Graph(e) => e.code(),
        }
    }
}

/// How a report was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Series,
    Exact,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Series => "series",
            Method::Exact => "exact",
        }
    }
}

/// Rule used to pick the truncation depth from `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TruncationMode {
    /// Smallest `q` with `(1−γ)^{q+1} ≤ ι(N)·ε`. `ε` is relative to the
    /// total impact, so this does not certify absolute accuracy.
    Relative,
    /// Smallest `q` with `Σ|ι|·(1−γ)^{q+1} ≤ ε`, which does.
    #[default]
    Strict,
}

/// Per-player allocation with its direct/indirect split.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponsibilityReport {
    pub players: PlayerSet,
    pub gamma: DiscountFactor,
    pub total: Vec<f64>,
    pub direct: Vec<f64>,
    pub indirect: Vec<f64>,
    pub method: Method,
    pub q_used: Option<usize>,
    /// Max-norm bound on the distance to the exact value.
    pub certified_error: Option<f64>,
    /// `ι(N)` of the impacts the report was computed from.
    pub impact_total: f64,
}

impl ResponsibilityReport {
    fn assemble(
        iota: &ImpactVector,
        gamma: DiscountFactor,
        total: Vec<f64>,
        method: Method,
        q_used: Option<usize>,
        certified_error: Option<f64>,
    ) -> Self {
        let (direct, indirect) = decompose(&total, iota, gamma);
        // Stored so that total == direct + indirect holds bit for bit.
        let total = direct.iter().zip(&indirect).map(|(d, i)| d + i).collect();
        Self {
            players: iota.players().clone(),
            gamma,
            total,
            direct,
            indirect,
            method,
            q_used,
            certified_error,
            impact_total: iota.total(),
        }
    }

    pub fn len(&self) -> usize {
        self.total.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total.is_empty()
    }

    /// `Σ_i ρ_i`, compensated.
    pub fn sum_total(&self) -> f64 {
        compensated_sum(&self.total)
    }

    pub fn total_of(&self, id: &str) -> Option<f64> {
        self.players.index_of(id).map(|i| self.total[i])
    }
}

fn check_dimensions(a: &RowStochasticMatrix, iota: &ImpactVector) -> Result<(), SolverError> {
    if a.players() != iota.players() {
        return Err(SolverError::DimensionMismatch {
            matrix: a.players().ids().to_vec(),
            impacts: iota.players().ids().to_vec(),
        });
    }
    Ok(())
}

/// Splits totals into `direct = γ·ι` and `indirect = total − direct`.
pub fn decompose(totals: &[f64], iota: &ImpactVector, gamma: DiscountFactor) -> (Vec<f64>, Vec<f64>) {
    let direct: Vec<f64> = iota.values().iter().map(|v| gamma.value() * v).collect();
    let indirect = totals.iter().zip(&direct).map(|(t, d)| t - d).collect();
    (direct, indirect)
}

/// `Σ|ι|·(1−γ)^{q+1}`: max-norm distance between the exact value and its
/// `q`-term truncation.
pub fn truncation_error_bound(gamma: DiscountFactor, abs_total: f64, q: usize) -> f64 {
    abs_total * pow_usize(gamma.complement(), q.saturating_add(1))
}

/// Smallest truncation depth meeting `epsilon` under `mode`.
///
/// Found by stepping the power `(1−γ)^{q+1}` upwards rather than through
/// logarithms, so boundary cases are decided by the same arithmetic the
/// bound uses.
pub fn min_truncation_depth(
    gamma: DiscountFactor,
    iota: &ImpactVector,
    epsilon: f64,
    mode: TruncationMode,
) -> Result<usize, SolverError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(SolverError::NonPositiveEpsilon(epsilon));
    }
    let exceeds: Box<dyn Fn(f64) -> bool> = match mode {
        TruncationMode::Relative => {
            let mass = iota.total();
            if mass <= 0.0 {
                return Err(SolverError::DegenerateMass(mass));
            }
            let target = mass * epsilon;
            Box::new(move |power| power > target)
        }
        TruncationMode::Strict => {
            let mass = iota.abs_total();
            Box::new(move |power| mass * power > epsilon)
        }
    };
    let ratio = gamma.complement();
    let mut power = ratio;
    let mut q = 0usize;
    while exceeds(power) {
        q += 1;
        if q > MAX_TRUNCATION_DEPTH {
            return Err(SolverError::DepthLimit {
                gamma: gamma.value(),
                epsilon,
            });
        }
        power *= ratio;
    }
    Ok(q)
}

/// `ρ|_q`: the first `q + 1` terms of the series.
pub fn truncated_value(
    a: &RowStochasticMatrix,
    iota: &ImpactVector,
    gamma: DiscountFactor,
    q: usize,
) -> Result<ResponsibilityReport, SolverError> {
    check_dimensions(a, iota)?;
    let totals = series_totals(a, iota.values(), gamma, q);
    Ok(ResponsibilityReport::assemble(
        iota,
        gamma,
        totals,
        Method::Series,
        Some(q),
        Some(truncation_error_bound(gamma, iota.abs_total(), q)),
    ))
}

/// Truncated value at the depth `min_truncation_depth` picks for `epsilon`.
pub fn series_value(
    a: &RowStochasticMatrix,
    iota: &ImpactVector,
    gamma: DiscountFactor,
    epsilon: f64,
    mode: TruncationMode,
) -> Result<ResponsibilityReport, SolverError> {
    check_dimensions(a, iota)?;
    let q = min_truncation_depth(gamma, iota, epsilon, mode)?;
    truncated_value(a, iota, gamma, q)
}

fn series_totals(a: &RowStochasticMatrix, iota: &[f64], gamma: DiscountFactor, q: usize) -> Vec<f64> {
    let n = a.dim();
    let ratio = gamma.complement();
    let entries = a.entries();
    let mut acc: Vec<CompensatedSum> = vec![CompensatedSum::default(); n];
    let mut term = iota.to_vec();
    let mut next = vec![0.0; n];
    for (s, &t) in acc.iter_mut().zip(&term) {
        s.add(t);
    }
    for _ in 0..q {
        // next[i] = (1−γ) Σ_p term[p] A[p, i]
        next.iter_mut().for_each(|x| *x = 0.0);
        for (row, &tp) in entries.rows().zip(&term) {
            if tp == 0.0 {
                continue;
            }
            let w = ratio * tp;
            for (x, &apj) in next.iter_mut().zip(row) {
                *x += w * apj;
            }
        }
        std::mem::swap(&mut term, &mut next);
        for (s, &t) in acc.iter_mut().zip(&term) {
            s.add(t);
        }
        if term.iter().all(|&t| t == 0.0) {
            break;
        }
    }
    acc.iter().map(|s| gamma.value() * s.value()).collect()
}

/// `P^q_γ(A) = Σ_{k=0}^{q} ((1−γ)A)^k`, using `q − 1` matrix products.
pub fn propagation_matrix(a: &RowStochasticMatrix, gamma: DiscountFactor, q: usize) -> DenseMatrix {
    let n = a.dim();
    let mut sum = DenseMatrix::identity(n);
    if q == 0 {
        return sum;
    }
    let step = a.entries().scaled(gamma.complement());
    sum.add_assign(&step);
    let mut power = step.clone();
    for _ in 2..=q {
        power = power.matmul(&step);
        sum.add_assign(&power);
    }
    sum
}

/// `ρ|_q = γ · ι · P^q_γ(A)`.
pub fn value_via_propagation(
    a: &RowStochasticMatrix,
    iota: &ImpactVector,
    gamma: DiscountFactor,
    q: usize,
) -> Result<ResponsibilityReport, SolverError> {
    check_dimensions(a, iota)?;
    let p = propagation_matrix(a, gamma, q);
    let totals = p
        .left_mul(iota.values())
        .into_iter()
        .map(|x| gamma.value() * x)
        .collect();
    Ok(ResponsibilityReport::assemble(
        iota,
        gamma,
        totals,
        Method::Series,
        Some(q),
        Some(truncation_error_bound(gamma, iota.abs_total(), q)),
    ))
}

/// Exact value with the default dense threshold.
pub fn exact_value(
    a: &RowStochasticMatrix,
    iota: &ImpactVector,
    gamma: DiscountFactor,
) -> Result<ResponsibilityReport, SolverError> {
    exact_value_with_threshold(a, iota, gamma, DEFAULT_DENSE_THRESHOLD)
}

/// Solves `(I − (1−γ)Aᵀ)·x = ι` and returns `ρ = γ·x`.
///
/// Since `A` is row-stochastic, `‖(1−γ)Aᵀ‖₁ = 1 − γ`, hence
/// `‖(I − (1−γ)Aᵀ)⁻¹‖₁ ≤ 1/γ` and `‖ρ − ρ*‖∞ ≤ γ·‖x − x*‖₁ ≤ ‖r‖₁` for the
/// residual `r`. That 1-norm is what the report certifies.
///
/// For more than `dense_threshold` players the strict-mode series at
/// [`FALLBACK_EPSILON`] is returned instead (reported as a series).
pub fn exact_value_with_threshold(
    a: &RowStochasticMatrix,
    iota: &ImpactVector,
    gamma: DiscountFactor,
    dense_threshold: usize,
) -> Result<ResponsibilityReport, SolverError> {
    check_dimensions(a, iota)?;
    let n = a.dim();
    if n > dense_threshold {
        return series_value(a, iota, gamma, FALLBACK_EPSILON, TruncationMode::Strict);
    }
    let ratio = gamma.complement();
    let entries = a.entries();
    // system[i, j] = δ_ij − (1−γ)·A[j, i]
    let system = DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { 1.0 } else { 0.0 };
        d - ratio * entries.get(j, i)
    });
    let rhs = DVector::from_column_slice(iota.values());
    let x = system
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or(SolverError::SingularSystem)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::SingularSystem);
    }
    let residual = &system * &x - &rhs;
    let residual_l1: Vec<f64> = residual.iter().map(|r| r.abs()).collect();
    let certified = compensated_sum(&residual_l1);
    let totals = x.iter().map(|v| gamma.value() * v).collect();
    Ok(ResponsibilityReport::assemble(
        iota,
        gamma,
        totals,
        Method::Exact,
        None,
        Some(certified),
    ))
}

/// How each row of a sweep is computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepMethod {
    /// Strict-mode series with the given accuracy.
    Series { epsilon: f64 },
    Exact,
}

/// Responsibility totals over a grid of discount factors.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub players: PlayerSet,
    pub gammas: Vec<DiscountFactor>,
    pub rows: Vec<ResponsibilityReport>,
}

/// `steps` evenly spaced values from `min` to `max` inclusive; both ends must
/// lie strictly inside `(0, 1)`.
pub fn gamma_grid(min: f64, max: f64, steps: usize) -> Result<Vec<DiscountFactor>, SolverError> {
    if steps == 0 {
        return Err(SolverError::InvalidGrid("at least one step is required".into()));
    }
    if !(min <= max) {
        return Err(SolverError::InvalidGrid(format!("min {min} exceeds max {max}")));
    }
    if steps == 1 && min != max {
        return Err(SolverError::InvalidGrid(
            "a single step needs min == max".into(),
        ));
    }
    if steps > 1 && min == max {
        return Err(SolverError::InvalidGrid(
            "several steps need min < max".into(),
        ));
    }
    let lo = DiscountFactor::new(min)?;
    let hi = DiscountFactor::new(max)?;
    if steps == 1 {
        return Ok(vec![lo]);
    }
    let span = max - min;
    let last = (steps - 1) as f64;
    (0..steps)
        .map(|k| match k {
            0 => Ok(lo),
            k if k == steps - 1 => Ok(hi),
            k => DiscountFactor::new(min + span * (k as f64) / last).map_err(SolverError::from),
        })
        .collect()
}

/// `steps` evenly spaced interior points `k/(steps+1)`, `k = 1..=steps`:
/// the unit interval with both endpoints pulled in by one grid step.
pub fn interior_gamma_grid(steps: usize) -> Result<Vec<DiscountFactor>, SolverError> {
    if steps == 0 {
        return Err(SolverError::InvalidGrid("at least one step is required".into()));
    }
    let denom = (steps + 1) as f64;
    (1..=steps)
        .map(|k| DiscountFactor::new(k as f64 / denom).map_err(SolverError::from))
        .collect()
}

/// One report per discount factor in `gammas`, which must be nonempty and
/// strictly increasing.
pub fn gamma_sweep(
    a: &RowStochasticMatrix,
    iota: &ImpactVector,
    gammas: &[DiscountFactor],
    method: SweepMethod,
) -> Result<SweepTable, SolverError> {
    check_dimensions(a, iota)?;
    if gammas.is_empty() {
        return Err(SolverError::InvalidGrid("no discount factors given".into()));
    }
    if let Some(w) = gammas.windows(2).find(|w| w[0] >= w[1]) {
        return Err(SolverError::InvalidGrid(format!(
            "values must be strictly increasing ({} is followed by {})",
            w[0], w[1]
        )));
    }
    let rows = gammas
        .iter()
        .map(|&g| match method {
            SweepMethod::Series { epsilon } => {
                series_value(a, iota, g, epsilon, TruncationMode::Strict)
            }
            SweepMethod::Exact => exact_value(a, iota, g),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepTable {
        players: a.players().clone(),
        gammas: gammas.to_vec(),
        rows,
    })
}
