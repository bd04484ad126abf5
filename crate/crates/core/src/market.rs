//! Pre/post-FL market model.
//!
//! Every firm keeps its loyal customers, loses its leaving customers, and
//! competes for the pool of vacillating customers (its own and everybody
//! else's free customers plus the newcomers brought by market growth). The
//! pool is split in proportion to each firm's relative service quality, which
//! equals its relative model improvement `q`.

use crate::error::{Error, Result, Violation};
use crate::{FROZEN_TOL, INPUT_TOL};

/// The market before federated learning.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketScenario {
    population: f64,
    shares: Vec<f64>,
    loyalty: Vec<f64>,
    leave_rate: Vec<f64>,
    growth_rate: f64,
    quality_weight: f64,
}

impl MarketScenario {
    /// Builds and validates a scenario with population 1.
    pub fn new(
        shares: Vec<f64>,
        loyalty: Vec<f64>,
        leave_rate: Vec<f64>,
        growth_rate: f64,
    ) -> Result<Self> {
        let scenario = Self {
            population: 1.0,
            shares,
            loyalty,
            leave_rate,
            growth_rate,
            quality_weight: 1.0,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Sets the absolute market size. Only customer counts depend on it.
    pub fn with_population(mut self, population: f64) -> Result<Self> {
        if !(population.is_finite() && population > 0.0) {
            return Err(Error::InvalidScenario(Violation::field(
                "population",
                format!("must be a positive finite number, got {population}"),
            )));
        }
        self.population = population;
        Ok(self)
    }

    /// Sets the service-quality gain per unit of loss reduction. It cancels
    /// out of every relative quantity and is kept as metadata only.
    pub fn with_quality_weight(mut self, weight: f64) -> Result<Self> {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::InvalidScenario(Violation::field(
                "quality_weight",
                format!("must be a positive finite number, got {weight}"),
            )));
        }
        self.quality_weight = weight;
        Ok(self)
    }

    /// A scenario where every firm keeps exactly the same loyalty and
    /// leaving rate.
    pub fn uniform(shares: Vec<f64>, loyalty: f64, leave_rate: f64, growth_rate: f64) -> Result<Self> {
        let n = shares.len();
        Self::new(shares, vec![loyalty; n], vec![leave_rate; n], growth_rate)
    }

    pub fn n(&self) -> usize {
        self.shares.len()
    }

    pub fn population(&self) -> f64 {
        self.population
    }

    pub fn shares(&self) -> &[f64] {
        &self.shares
    }

    pub fn loyalty(&self) -> &[f64] {
        &self.loyalty
    }

    pub fn leave_rate(&self) -> &[f64] {
        &self.leave_rate
    }

    pub fn growth_rate(&self) -> f64 {
        self.growth_rate
    }

    pub fn quality_weight(&self) -> f64 {
        self.quality_weight
    }

    fn validate(&self) -> Result<()> {
        let n = self.shares.len();
        let bad = |v: Violation| Err(Error::InvalidScenario(v));

        if n == 0 {
            return bad(Violation::field("firms", "at least one firm is required"));
        }
        if self.loyalty.len() != n || self.leave_rate.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: if self.loyalty.len() != n {
                    self.loyalty.len()
                } else {
                    self.leave_rate.len()
                },
            });
        }
        if !(self.growth_rate.is_finite() && self.growth_rate >= 0.0) {
            return bad(Violation::field(
                "growth_rate",
                format!("must be finite and >= 0, got {}", self.growth_rate),
            ));
        }
        for i in 0..n {
            let (ms, r, nu) = (self.shares[i], self.loyalty[i], self.leave_rate[i]);
            if !(ms.is_finite() && ms > 0.0 && ms <= 1.0 + INPUT_TOL) {
                return bad(Violation::field(
                    format!("firms[{i}].share"),
                    format!("must lie in (0, 1], got {ms}"),
                ));
            }
            if !(r.is_finite() && (0.0..=1.0).contains(&r)) {
                return bad(Violation::field(
                    format!("firms[{i}].loyalty"),
                    format!("must lie in [0, 1], got {r}"),
                ));
            }
            if !(nu.is_finite() && (0.0..=1.0).contains(&nu)) {
                return bad(Violation::field(
                    format!("firms[{i}].leave_rate"),
                    format!("must lie in [0, 1], got {nu}"),
                ));
            }
            if r + nu > 1.0 + INPUT_TOL {
                return bad(Violation::cross_field(
                    format!("firms[{i}].leave_rate"),
                    format!("loyalty + leave_rate must not exceed 1, got {r} + {nu}"),
                ));
            }
        }
        let total: f64 = self.shares.iter().sum();
        if (total - 1.0).abs() > INPUT_TOL {
            return bad(Violation::cross_field(
                "firms",
                format!("market shares must sum to 1, got {total}"),
            ));
        }
        let leaving: f64 = self.leave_rate.iter().zip(&self.shares).map(|(nu, ms)| nu * ms).sum();
        if 1.0 + self.growth_rate - leaving <= 0.0 {
            return bad(Violation::cross_field(
                "firms",
                "the post-FL market size must stay positive",
            ));
        }
        Ok(())
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            return Err(Error::IndexOutOfRange { index: i, len: self.n() });
        }
        Ok(())
    }
}

/// Scale-free factors describing the overall market dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketAggregates {
    /// Overall market-leaving rate.
    pub v_o: f64,
    /// Post-FL market size as a multiple of the original population.
    pub e: f64,
    /// Proportion of vacillating customers in the post-FL market.
    pub f_o: f64,
    /// Proportion of each firm's loyal (old) customers in the post-FL market.
    pub r_hat: Vec<f64>,
}

impl MarketAggregates {
    /// True when no customer reconsiders their firm, so shares cannot move
    /// in response to model improvements.
    pub fn is_frozen(&self) -> bool {
        self.f_o <= FROZEN_TOL
    }
}

pub fn compute_aggregates(scenario: &MarketScenario) -> MarketAggregates {
    let ms = &scenario.shares;
    let v_o: f64 = scenario.leave_rate.iter().zip(ms).map(|(nu, m)| nu * m).sum();
    let e = 1.0 + scenario.growth_rate - v_o;
    // Free customers of firm i are (1 - r_i - nu_i) * MS_i.
    let free: f64 = (0..scenario.n())
        .map(|i| (1.0 - scenario.loyalty[i] - scenario.leave_rate[i]) * ms[i])
        .sum();
    let f_o = ((scenario.growth_rate + free) / e).max(0.0);
    let r_hat = scenario.loyalty.iter().zip(ms).map(|(r, m)| r * m / e).collect();
    MarketAggregates { v_o, e, f_o, r_hat }
}

/// Absolute and relative model-performance improvements of every firm.
#[derive(Debug, Clone, PartialEq)]
pub struct ImprovementProfile {
    d: Option<Vec<f64>>,
    q: Vec<f64>,
    degenerate: bool,
}

impl ImprovementProfile {
    /// Normalizes absolute loss reductions into relative improvements. When
    /// nobody improves, every firm is equally attractive and the profile is
    /// flagged as degenerate.
    pub fn from_improvements(d: Vec<f64>) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::InvalidProfile(Violation::field("d", "must not be empty")));
        }
        for (i, &di) in d.iter().enumerate() {
            if !(di.is_finite() && di >= 0.0) {
                return Err(Error::InvalidProfile(Violation::field(
                    format!("d[{i}]"),
                    format!("improvement must be finite and >= 0, got {di}"),
                )));
            }
        }
        let total: f64 = d.iter().sum();
        let n = d.len();
        let (q, degenerate) = if total > 0.0 {
            (d.iter().map(|di| di / total).collect(), false)
        } else {
            (vec![1.0 / n as f64; n], true)
        };
        Ok(Self { d: Some(d), q, degenerate })
    }

    /// Takes relative improvements directly.
    pub fn from_relative(q: Vec<f64>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::InvalidProfile(Violation::field("q", "must not be empty")));
        }
        for (i, &qi) in q.iter().enumerate() {
            if !(qi.is_finite() && (-INPUT_TOL..=1.0 + INPUT_TOL).contains(&qi)) {
                return Err(Error::InvalidProfile(Violation::field(
                    format!("q[{i}]"),
                    format!("must lie in [0, 1], got {qi}"),
                )));
            }
        }
        let total: f64 = q.iter().sum();
        if (total - 1.0).abs() > INPUT_TOL {
            return Err(Error::InvalidProfile(Violation::cross_field(
                "q",
                format!("relative improvements must sum to 1, got {total}"),
            )));
        }
        Ok(Self { d: None, q, degenerate: false })
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn absolute(&self) -> Option<&[f64]> {
        self.d.as_deref()
    }

    pub fn relative(&self) -> &[f64] {
        &self.q
    }

    /// Relative service quality. Identical to the relative improvement
    /// because service quality is proportional to loss reduction.
    pub fn relative_service_quality(&self) -> &[f64] {
        &self.q
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }
}

/// Customers served by one firm after FL, by origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CustomerFlows {
    pub loyal: f64,
    pub free_joining: f64,
    pub new_joining: f64,
}

impl CustomerFlows {
    pub fn total(&self) -> f64 {
        self.loyal + self.free_joining + self.new_joining
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketOutcome {
    pub new_population: f64,
    pub new_shares: Vec<f64>,
    /// Share lost by each firm, `MS_i - MS_i'`.
    pub variances: Vec<f64>,
    pub flows: Vec<CustomerFlows>,
}

pub fn compute_outcome(scenario: &MarketScenario, profile: &ImprovementProfile) -> Result<MarketOutcome> {
    let n = scenario.n();
    if profile.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: profile.n() });
    }
    let (flows, new_population) = customer_flows(scenario, profile.relative_service_quality());
    let new_shares: Vec<f64> = flows.iter().map(|f| f.total() / new_population).collect();
    let variances = scenario.shares.iter().zip(&new_shares).map(|(ms, nms)| ms - nms).collect();

    Ok(MarketOutcome { new_population, new_shares, variances, flows })
}

/// Per-firm customer flows and the post-FL population for an arbitrary
/// attractiveness vector `s` (not required to be a valid profile).
pub(crate) fn customer_flows(scenario: &MarketScenario, s: &[f64]) -> (Vec<CustomerFlows>, f64) {
    let n = scenario.n();
    let p = scenario.population;
    let theta = scenario.growth_rate;

    let free_pool: f64 = (0..n)
        .map(|j| (1.0 - scenario.loyalty[j] - scenario.leave_rate[j]) * scenario.shares[j] * p)
        .sum();
    let leaving: f64 = (0..n).map(|j| scenario.leave_rate[j] * scenario.shares[j] * p).sum();
    let new_population = (1.0 + theta) * p - leaving;

    let flows = (0..n)
        .map(|i| CustomerFlows {
            loyal: scenario.loyalty[i] * scenario.shares[i] * p,
            free_joining: free_pool * s[i],
            new_joining: s[i] * theta * p,
        })
        .collect();
    (flows, new_population)
}

/// Share lost by firm `i` through FL.
pub fn variance(scenario: &MarketScenario, profile: &ImprovementProfile, i: usize) -> Result<f64> {
    scenario.check_index(i)?;
    Ok(compute_outcome(scenario, profile)?.variances[i])
}
