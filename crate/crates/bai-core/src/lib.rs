//! Fixed-budget best-arm identification toolkit.
//!
//! The crate simulates adaptive experiments that must name the arm with the
//! highest mean after a fixed number of rounds, and evaluates the
//! large-deviation theory that governs how fast the misidentification
//! probability can decay.
//!
//! - [`model`]: bandit instances, outcome sampling, seeded random streams.
//! - [`allocation`]: target and plug-in sampling weights, baselines, and
//!   max-min oracle solvers.
//! - [`engine`]: the single-trial round loop, estimators, recommendation.
//! - [`bounds`]: rate constants, KL divergences, Fisher information, and the
//!   optimality residuals of the closed-form weights.
//! - [`harness`]: seeded parallel Monte Carlo over (algorithm, budget) grids
//!   with deterministic aggregation and CSV/JSON serialization.

pub mod allocation;
pub mod bounds;
pub mod engine;
pub mod harness;
pub mod model;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input violated a documented precondition.
    #[error("{0}")]
    Validation(String),
    /// A numeric procedure failed to produce a usable result.
    #[error("{0}")]
    Computation(String),
    /// A config or results file could not be read, written, or parsed.
    #[error("{0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Index of the largest entry; ties resolve to the lowest index.
pub(crate) fn argmax_tie_low(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}
