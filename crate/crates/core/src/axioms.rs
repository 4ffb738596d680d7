//! Verdicts for the properties every responsibility allocation must have.
//!
//! Each checker recomputes the value with [`exact_value`] (or the truncated
//! series where the property is about truncation) and lists every identity
//! it compared, not only the failing ones.

use std::fmt;

use crate::graph::{DiscountFactor, ImpactVector, RowStochasticMatrix};
use crate::numeric::pow_usize;
use crate::solver::{exact_value, truncated_value, SolverError};

pub const DEFAULT_AXIOM_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axiom {
    Efficiency,
    Additivity,
    Homogeneity,
    Symmetry,
    IndependentPlayer,
    TruncatedMass,
    Bounds,
}

impl Axiom {
    pub fn as_str(self) -> &'static str {
        match self {
            Axiom::Efficiency => "efficiency",
            Axiom::Additivity => "additivity",
            Axiom::Homogeneity => "homogeneity",
            Axiom::Symmetry => "symmetry",
            Axiom::IndependentPlayer => "independent-player",
            Axiom::TruncatedMass => "truncated-mass",
            Axiom::Bounds => "bounds",
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Passed,
    Failed,
    /// The check's precondition does not hold for this instance.
    NotApplicable,
}

/// One compared identity.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckDetail {
    pub label: String,
    pub observed: f64,
    pub expected: f64,
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomVerdict {
    pub axiom: Axiom,
    pub status: Status,
    pub max_violation: f64,
    pub tolerance: f64,
    pub details: Vec<CheckDetail>,
    /// Set for vacuous passes and not-applicable verdicts.
    pub note: Option<String>,
}

impl AxiomVerdict {
    fn from_details(axiom: Axiom, tolerance: f64, details: Vec<CheckDetail>) -> Self {
        let max_violation = details.iter().map(|d| d.violation).fold(0.0, f64::max);
        let all_finite = details.iter().all(|d| d.violation.is_finite());
        let status = if all_finite && max_violation <= tolerance {
            Status::Passed
        } else {
            Status::Failed
        };
        let note = details
            .is_empty()
            .then(|| "nothing to check".to_owned());
        Self {
            axiom,
            status,
            max_violation,
            tolerance,
            details,
            note,
        }
    }

    fn vacuous(mut self, note: &str) -> Self {
        if self.details.is_empty() {
            self.note = Some(note.to_owned());
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Passed
    }

    pub fn is_vacuous(&self) -> bool {
        self.status == Status::Passed && self.details.is_empty()
    }
}

fn detail(label: impl Into<String>, observed: f64, expected: f64) -> CheckDetail {
    CheckDetail {
        label: label.into(),
        observed,
        expected,
        violation: (observed - expected).abs(),
    }
}

/// `Σ_i ρ_i = ι(N)`.
pub fn check_efficiency(
    a: &RowStochasticMatrix,
    iota: &ImpactVector,
    gamma: DiscountFactor,
    tol: f64,
) -> Result<AxiomVerdict, SolverError> {
    let r = exact_value(a, iota, gamma)?;
    Ok(AxiomVerdict::from_details(
        Axiom::Efficiency,
        tol,
        vec![detail("sum of totals vs impact total", r.sum_total(), iota.total())],
    ))
}

/// `ρ(ι₁) + ρ(ι₂) = ρ(ι₁ + ι₂)` componentwise.
pub fn check_additivity(
    a: &RowStochasticMatrix,
    iota1: &ImpactVector,
    iota2: &ImpactVector,
    gamma: DiscountFactor,
    tol: f64,
) -> Result<AxiomVerdict, SolverError> {
    let combined = iota1.try_add(iota2)?;
    let r1 = exact_value(a, iota1, gamma)?;
    let r2 = exact_value(a, iota2, gamma)?;
    let r12 = exact_value(a, &combined, gamma)?;
    let details = a
        .players()
        .ids()
        .iter()
        .enumerate()
        .map(|(i, id)| detail(format!("player {id}"), r1.total[i] + r2.total[i], r12.total[i]))
        .collect();
    Ok(AxiomVerdict::from_details(Axiom::Additivity, tol, details))
}

/// `ρ(c·ι) = c·ρ(ι)` componentwise.
pub fn check_homogeneity(
    a: &RowStochasticMatrix,
    iota: &ImpactVector,
    factor: f64,
    gamma: DiscountFactor,
    tol: f64,
) -> Result<AxiomVerdict, SolverError> {
    let scaled = iota.scaled(factor)?;
    let r = exact_value(a, iota, gamma)?;
    let rs = exact_value(a, &scaled, gamma)?;
    let details = a
        .players()
        .ids()
        .iter()
        .enumerate()
        .map(|(i, id)| detail(format!("player {id} (factor {factor})"), rs.total[i], factor * r.total[i]))
        .collect();
    Ok(AxiomVerdict::from_details(Axiom::Homogeneity, tol, details))
}

/// Symmetric players (identical rows and columns) carry equal indirect
/// responsibility.
pub fn check_symmetry(
    a: &RowStochasticMatrix,
    iota: &ImpactVector,
    gamma: DiscountFactor,
    tol: f64,
) -> Result<AxiomVerdict, SolverError> {
    let r = exact_value(a, iota, gamma)?;
    let ids = a.players().ids();
    let details = a
        .symmetric_pairs(0.0)
        .into_iter()
        .map(|(i, j)| {
            detail(
                format!("indirect {} vs {}", ids[i], ids[j]),
                r.indirect[i],
                r.indirect[j],
            )
        })
        .collect();
    Ok(AxiomVerdict::from_details(Axiom::Symmetry, tol, details).vacuous("no symmetric pairs found"))
}

/// Independent players (zero column) receive exactly `γ·ι(i)`.
pub fn check_independent(
    a: &RowStochasticMatrix,
    iota: &ImpactVector,
    gamma: DiscountFactor,
    tol: f64,
) -> Result<AxiomVerdict, SolverError> {
    let r = exact_value(a, iota, gamma)?;
    let ids = a.players().ids();
    let details = a
        .independent_players()
        .into_iter()
        .map(|i| {
            detail(
                format!("player {} total vs direct", ids[i]),
                r.total[i],
                gamma.value() * iota.values()[i],
            )
        })
        .collect();
    Ok(AxiomVerdict::from_details(Axiom::IndependentPlayer, tol, details)
        .vacuous("no independent players found"))
}

/// `Σ_i (ρ|_q)_i = (1 − (1−γ)^{q+1})·ι(N)`.
pub fn check_truncated_mass(
    a: &RowStochasticMatrix,
    iota: &ImpactVector,
    gamma: DiscountFactor,
    q: usize,
    tol: f64,
) -> Result<AxiomVerdict, SolverError> {
    let r = truncated_value(a, iota, gamma, q)?;
    let target = (1.0 - pow_usize(gamma.complement(), q.saturating_add(1))) * iota.total();
    Ok(AxiomVerdict::from_details(
        Axiom::TruncatedMass,
        tol,
        vec![detail(format!("sum of truncated totals at q = {q}"), r.sum_total(), target)],
    ))
}

/// `0 ≤ ρ_i ≤ ι(N)` for nonnegative impacts; not applicable otherwise.
pub fn check_bounds(
    a: &RowStochasticMatrix,
    iota: &ImpactVector,
    gamma: DiscountFactor,
    tol: f64,
) -> Result<AxiomVerdict, SolverError> {
    if !iota.is_nonnegative() {
        return Ok(AxiomVerdict {
            axiom: Axiom::Bounds,
            status: Status::NotApplicable,
            max_violation: 0.0,
            tolerance: tol,
            details: Vec::new(),
            note: Some("impacts contain negative entries; the bound needs ι ≥ 0".into()),
        });
    }
    let r = exact_value(a, iota, gamma)?;
    let upper = iota.total();
    let details = a
        .players()
        .ids()
        .iter()
        .zip(&r.total)
        .map(|(id, &t)| {
            let clamped = t.clamp(0.0, upper);
            CheckDetail {
                label: format!("player {id} within [0, {upper}]"),
                observed: t,
                expected: clamped,
                violation: (t - clamped).abs(),
            }
        })
        .collect();
    Ok(AxiomVerdict::from_details(Axiom::Bounds, tol, details))
}

/// Splits `ι` into the entries at even and odd positions, so that the two
/// parts sum back to `ι`.
pub fn alternating_split(iota: &ImpactVector) -> (ImpactVector, ImpactVector) {
    let pick = |parity: usize| -> Vec<f64> {
        iota.values()
            .iter()
            .enumerate()
            .map(|(i, &v)| if i % 2 == parity { v } else { 0.0 })
            .collect()
    };
    (
        iota.with_values(pick(0)).expect("same players"),
        iota.with_values(pick(1)).expect("same players"),
    )
}

/// Runs every checker on one instance. Additivity uses
/// [`alternating_split`], homogeneity the factor `-2.5`.
pub fn check_all(
    a: &RowStochasticMatrix,
    iota: &ImpactVector,
    gamma: DiscountFactor,
    q: usize,
    tol: f64,
) -> Result<Vec<AxiomVerdict>, SolverError> {
    let (iota1, iota2) = alternating_split(iota);
    Ok(vec![
        check_efficiency(a, iota, gamma, tol)?,
        check_additivity(a, &iota1, &iota2, gamma, tol)?,
        check_homogeneity(a, iota, -2.5, gamma, tol)?,
        check_symmetry(a, iota, gamma, tol)?,
        check_independent(a, iota, gamma, tol)?,
        check_truncated_mass(a, iota, gamma, q, tol)?,
        check_bounds(a, iota, gamma, tol)?,
    ])
}
