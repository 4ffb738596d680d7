//! Responsibility allocation on weighted digraphs.
//!
//! Given a row-stochastic adjacency matrix `A` over a set of players, an
//! impact map `ι` (for example carbon emissions per firm) and a discount
//! factor `γ ∈ (0, 1)`, the responsibility value assigns to player `i`
//!
//! ```text
//! ρ_i = γ · Σ_{k ≥ 0} (1 − γ)^k · Σ_p A^k[p, i] · ι(p)
//! ```
//!
//! that is, a discounted share of every impact that reaches `i` through
//! walks of any length. The allocation is efficient (`Σ_i ρ_i = ι(N)`),
//! additive in `ι`, treats symmetric players alike, and leaves players
//! without incoming flow with their direct share `γ·ι(i)` only.
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`graph`] | players, validated matrices, impacts, structural analysis |
//! | [`solver`] | truncated series, propagation matrix, exact solve, sweeps |
//! | [`axioms`] | machine-checkable verdicts for the value's properties |
//! | [`io`] | CSV / JSON instance parsing and report writers |
//! | [`cli`] | the `respval` command-line entry point |

pub mod axioms;
pub mod cli;
pub mod graph;
pub mod io;
pub mod solver;

mod numeric;

pub use graph::{
    DenseMatrix, DiscountFactor, GraphError, ImpactVector, PlayerSet, RawWeightMatrix,
    RowStochasticMatrix, ZeroRowPolicy,
};
pub use solver::{
    Method, ResponsibilityReport, SolverError, SweepMethod, SweepTable, TruncationMode,
};
