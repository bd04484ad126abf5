//! Delta-stability bounds, market friendliness and FL viability.
//!
//! A market is delta-stable when no firm loses more than `delta` of market
//! share. Since the post-FL share of firm `i` is `r_hat_i + q_i * f_o`, the
//! condition `V_i <= delta` is linear in `q_i` and yields a tight per-firm
//! lower bound on the relative improvement.

use crate::error::{Error, Result};
use crate::market::{compute_aggregates, compute_outcome, ImprovementProfile, MarketAggregates, MarketScenario};
use crate::{IDENTITY_TOL, INPUT_TOL};

/// Lower bound on one firm's relative improvement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FirmBound {
    /// `q_i >= q_hat_min` is necessary and sufficient; `q_hat_min` may be
    /// negative.
    Bounded { q_hat_min: f64 },
    /// Frozen market and the firm already stays within delta.
    Unconstrained,
    /// Frozen market and the firm loses more than delta whatever happens.
    Infeasible,
}

impl FirmBound {
    /// `max(q_hat_min, 0)`; `None` when no relative improvement suffices.
    pub fn q_min(&self) -> Option<f64> {
        match *self {
            FirmBound::Bounded { q_hat_min } => Some(q_hat_min.max(0.0)),
            FirmBound::Unconstrained => Some(0.0),
            FirmBound::Infeasible => None,
        }
    }

    pub fn q_hat_min(&self) -> Option<f64> {
        match *self {
            FirmBound::Bounded { q_hat_min } => Some(q_hat_min),
            _ => None,
        }
    }

    pub fn is_sensitive(&self) -> bool {
        match *self {
            FirmBound::Bounded { q_hat_min } => q_hat_min > 0.0,
            FirmBound::Unconstrained => false,
            FirmBound::Infeasible => true,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            FirmBound::Bounded { .. } => "bounded",
            FirmBound::Unconstrained => "unconstrained",
            FirmBound::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinImprovements {
    pub delta: f64,
    pub aggregates: MarketAggregates,
    pub bounds: Vec<FirmBound>,
    /// Indices of firms whose models must improve to keep the market stable.
    pub sensitive_set: Vec<usize>,
}

impl MinImprovements {
    pub fn is_frozen(&self) -> bool {
        self.aggregates.is_frozen()
    }

    /// Raw bounds, available only when the market is not frozen.
    pub fn q_hat_min(&self) -> Option<Vec<f64>> {
        self.bounds.iter().map(FirmBound::q_hat_min).collect()
    }

    /// Clamped bounds, available unless some firm is infeasible.
    pub fn q_min(&self) -> Option<Vec<f64>> {
        self.bounds.iter().map(FirmBound::q_min).collect()
    }
}

/// Bounds plus friendliness and viability. `kappa` and `viable` are absent
/// for a frozen market.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub bounds: MinImprovements,
    pub kappa: Option<f64>,
    pub viable: Option<bool>,
}

impl StabilityReport {
    pub fn delta(&self) -> f64 {
        self.bounds.delta
    }

    pub fn is_frozen(&self) -> bool {
        self.bounds.is_frozen()
    }
}

pub fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta > -1.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidDelta(delta))
    }
}

/// Direct check: every firm's share loss is at most `delta`.
pub fn is_delta_stable(scenario: &MarketScenario, profile: &ImprovementProfile, delta: f64) -> Result<bool> {
    check_delta(delta)?;
    let outcome = compute_outcome(scenario, profile)?;
    Ok(outcome.variances.iter().all(|&v| v <= delta))
}

pub fn min_improvements(scenario: &MarketScenario, delta: f64) -> Result<MinImprovements> {
    check_delta(delta)?;
    let aggregates = compute_aggregates(scenario);
    let frozen = aggregates.is_frozen();
    let bounds: Vec<FirmBound> = scenario
        .shares()
        .iter()
        .zip(&aggregates.r_hat)
        .map(|(&ms, &r_hat)| {
            let slack = (ms - delta) - r_hat;
            if !frozen {
                FirmBound::Bounded { q_hat_min: slack / aggregates.f_o }
            } else if slack <= 0.0 {
                FirmBound::Unconstrained
            } else {
                FirmBound::Infeasible
            }
        })
        .collect();
    let sensitive_set = bounds
        .iter()
        .enumerate()
        .filter(|(_, b)| b.is_sensitive())
        .map(|(i, _)| i)
        .collect();
    Ok(MinImprovements { delta, aggregates, bounds, sensitive_set })
}

/// Friendliness index `kappa = 1 - sum_i q_min_i`.
pub fn friendliness(scenario: &MarketScenario, delta: f64) -> Result<f64> {
    let bounds = min_improvements(scenario, delta)?;
    kappa_of(&bounds)
}

fn kappa_of(bounds: &MinImprovements) -> Result<f64> {
    if bounds.is_frozen() {
        return Err(Error::DegenerateMarket);
    }
    let total: f64 = bounds.bounds.iter().filter_map(FirmBound::q_min).sum();
    let kappa = 1.0 - total;
    assert!(kappa <= 1.0 + IDENTITY_TOL, "kappa {kappa} exceeds 1");
    Ok(kappa)
}

/// Friendliness written through the sensitive set only:
/// `1 - (sum_{i in C'} (MS_i - r_hat_i) - n' * delta) / f_o`.
pub fn friendliness_closed_form(scenario: &MarketScenario, delta: f64) -> Result<f64> {
    let bounds = min_improvements(scenario, delta)?;
    if bounds.is_frozen() {
        return Err(Error::DegenerateMarket);
    }
    let agg = &bounds.aggregates;
    let excess: f64 = bounds
        .sensitive_set
        .iter()
        .map(|&i| scenario.shares()[i] - agg.r_hat[i])
        .sum();
    let n_sensitive = bounds.sensitive_set.len() as f64;
    Ok(1.0 - (excess - n_sensitive * delta) / agg.f_o)
}

/// FL viability: the sensitive firms' average excess share over the
/// vacillating pool must not exceed `delta`.
pub fn viability(scenario: &MarketScenario, delta: f64) -> Result<bool> {
    let bounds = min_improvements(scenario, delta)?;
    viability_of(scenario, &bounds)
}

fn viability_of(scenario: &MarketScenario, bounds: &MinImprovements) -> Result<bool> {
    if bounds.is_frozen() {
        return Err(Error::DegenerateMarket);
    }
    if bounds.sensitive_set.is_empty() {
        return Ok(true);
    }
    let agg = &bounds.aggregates;
    let excess: f64 = bounds
        .sensitive_set
        .iter()
        .map(|&i| scenario.shares()[i] - agg.r_hat[i])
        .sum();
    Ok((excess - agg.f_o) / bounds.sensitive_set.len() as f64 <= bounds.delta)
}

pub fn stability_report(scenario: &MarketScenario, delta: f64) -> Result<StabilityReport> {
    let bounds = min_improvements(scenario, delta)?;
    if bounds.is_frozen() {
        return Ok(StabilityReport { bounds, kappa: None, viable: None });
    }
    let kappa = kappa_of(&bounds)?;
    let viable = viability_of(scenario, &bounds)?;
    Ok(StabilityReport { bounds, kappa: Some(kappa), viable: Some(viable) })
}

/// Splits the surplus `kappa` among firms by `weights` on top of their
/// minimum improvements: `q_i = q_min_i + weights_i * kappa`.
pub fn allocate(scenario: &MarketScenario, delta: f64, weights: &[f64]) -> Result<ImprovementProfile> {
    let n = scenario.n();
    if weights.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: weights.len() });
    }
    if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::InvalidWeights(format!("weights[{i}] must be finite and >= 0, got {w}")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > INPUT_TOL {
        return Err(Error::InvalidWeights(format!("weights must sum to 1, got {total}")));
    }

    let bounds = min_improvements(scenario, delta)?;
    let kappa = kappa_of(&bounds)?;
    if kappa < 0.0 {
        return Err(Error::NotViable { kappa });
    }
    let q = bounds
        .bounds
        .iter()
        .zip(weights)
        .map(|(b, w)| b.q_min().expect("non-frozen bounds are finite") + w * kappa)
        .collect();
    ImprovementProfile::from_relative(q)
}
