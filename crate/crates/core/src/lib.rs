//! Market-share analysis for competing firms that consider joining a
//! federated learning (FL) collaboration.
//!
//! The crate is organised around a deterministic before/after market model:
//!
//! * [`market`] computes post-FL market shares from loyalty, leaving and
//!   growth rates plus each firm's relative model improvement.
//! * [`stability`] derives the minimum relative improvement every firm needs
//!   so that no firm loses more than `delta` of market share, the resulting
//!   friendliness index `kappa` and the viability verdict.
//! * [`game`] models the data-commitment game behind the improvements and
//!   brute-forces its dominant strategy.
//! * [`sweep`] reproduces the standard parameter studies as CSV tables.
//! * [`document`] and [`report`] hold the JSON scenario format and the
//!   analysis report shared by the CLI and the HTTP service.

pub mod document;
pub mod error;
pub mod game;
pub mod market;
pub mod numfmt;
pub mod report;
pub mod stability;
pub mod sweep;

pub use error::{Error, Result, Violation, ViolationKind};
pub use game::{
    best_response, federated_loss, improvements, payoff, verify_dominant_strategy, DominanceCheck,
    GameSpec, LossCurve, PeerAccess, TradScheme,
};
pub use market::{
    compute_aggregates, compute_outcome, variance, CustomerFlows, ImprovementProfile,
    MarketAggregates, MarketOutcome, MarketScenario,
};
pub use stability::{
    allocate, friendliness, is_delta_stable, min_improvements, stability_report, viability,
    FirmBound, MinImprovements, StabilityReport,
};

/// Tolerance applied to user-supplied vectors (share sums, ranges).
pub const INPUT_TOL: f64 = 1e-9;

/// Tolerance for internal algebraic identities.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Threshold below which the vacillating-customer proportion is treated as
/// zero (a frozen market).
pub const FROZEN_TOL: f64 = 1e-12;

/// Delta used by tooling when none is given.
pub const DEFAULT_DELTA: f64 = 0.05;
