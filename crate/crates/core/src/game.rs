//! The data-commitment game.
//!
//! Each firm chooses how many of its `D_i` samples to commit to FL training.
//! Its federated model's loss follows a power-law learning curve evaluated at
//! an effective data size, and its payoff is its post-FL market share.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::{compute_outcome, customer_flows, ImprovementProfile, MarketScenario};

/// Power-law learning curve `L(m) = a * m^(-b) + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossCurve {
    a: f64,
    b: f64,
    c: f64,
}

impl LossCurve {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let ok = a.is_finite() && a > 0.0 && b.is_finite() && b > 0.0 && c.is_finite() && c >= 0.0;
        if !ok {
            return Err(Error::InvalidGameSpec(format!(
                "loss curve needs a > 0, b > 0, c >= 0; got a={a}, b={b}, c={c}"
            )));
        }
        Ok(Self { a, b, c })
    }

    /// Builds a curve without checking that loss decreases with data.
    /// Only meant for negative controls in tests.
    #[doc(hidden)]
    pub fn new_unchecked(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn loss(&self, effective_data: f64) -> f64 {
        self.a * effective_data.powf(-self.b) + self.c
    }
}

/// How a firm's federated model draws on its peers' data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PeerAccess {
    /// Firm `i` receives peer knowledge in proportion to the fraction of its
    /// own data it commits: `m_i = D_i + lambda*x_i + beta*(x_i/D_i)*sum_{j!=i} D_j`.
    /// A firm's loss then depends on its own commitment only.
    #[default]
    ContributionGated,
    /// Everyone learns from the shared pool:
    /// `m_i = D_i + lambda*x_i + beta*sum_{j!=i} x_j`. Peers' commitments
    /// move each other's losses, which admits free-riding.
    SharedPool,
}

/// Model-exchange scheme: effective-data gain per own committed sample
/// (`self_gain`) and per peer sample (`peer_gain`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradScheme {
    self_gain: f64,
    peer_gain: f64,
    access: PeerAccess,
}

impl TradScheme {
    pub fn new(self_gain: f64, peer_gain: f64) -> Result<Self> {
        Self::with_access(self_gain, peer_gain, PeerAccess::ContributionGated)
    }

    pub fn with_access(self_gain: f64, peer_gain: f64, access: PeerAccess) -> Result<Self> {
        if !(self_gain.is_finite() && self_gain > 0.0) {
            return Err(Error::InvalidGameSpec(format!("self_gain must be > 0, got {self_gain}")));
        }
        if !(peer_gain.is_finite() && (0.0..=self_gain).contains(&peer_gain)) {
            return Err(Error::InvalidGameSpec(format!(
                "peer_gain must lie in [0, self_gain], got {peer_gain}"
            )));
        }
        Ok(Self { self_gain, peer_gain, access })
    }

    /// Server-mediated pooling where every peer sample is worth
    /// `(n-1)/n` of an own sample.
    pub fn centralized(self_gain: f64, n: usize) -> Result<Self> {
        let n = n.max(1) as f64;
        Self::new(self_gain, self_gain * (n - 1.0) / n)
    }

    pub fn self_gain(&self) -> f64 {
        self.self_gain
    }

    pub fn peer_gain(&self) -> f64 {
        self.peer_gain
    }

    pub fn access(&self) -> PeerAccess {
        self.access
    }
}

/// Evaluations allowed for one brute-force dominance check by default.
pub const DEFAULT_EVAL_BUDGET: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    scenario: MarketScenario,
    dataset_sizes: Vec<u64>,
    curves: Vec<LossCurve>,
    trad: TradScheme,
    grid_points: usize,
    eval_budget: u128,
}

impl GameSpec {
    pub fn new(
        scenario: MarketScenario,
        dataset_sizes: Vec<u64>,
        curves: Vec<LossCurve>,
        trad: TradScheme,
        grid_points: usize,
    ) -> Result<Self> {
        let n = scenario.n();
        if dataset_sizes.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: dataset_sizes.len() });
        }
        if curves.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: curves.len() });
        }
        if let Some(i) = dataset_sizes.iter().position(|&d| d == 0) {
            return Err(Error::InvalidGameSpec(format!("dataset_sizes[{i}] must be positive")));
        }
        if grid_points == 0 {
            return Err(Error::InvalidGameSpec("grid_points must be positive".into()));
        }
        Ok(Self {
            scenario,
            dataset_sizes,
            curves,
            trad,
            grid_points,
            eval_budget: DEFAULT_EVAL_BUDGET,
        })
    }

    pub fn with_eval_budget(mut self, budget: u128) -> Self {
        self.eval_budget = budget;
        self
    }

    pub fn n(&self) -> usize {
        self.scenario.n()
    }

    pub fn scenario(&self) -> &MarketScenario {
        &self.scenario
    }

    pub fn dataset_sizes(&self) -> &[u64] {
        &self.dataset_sizes
    }

    pub fn curves(&self) -> &[LossCurve] {
        &self.curves
    }

    pub fn trad(&self) -> &TradScheme {
        &self.trad
    }

    pub fn grid_points(&self) -> usize {
        self.grid_points
    }

    /// Uniform grid over `[0, D_i]`, both endpoints included.
    pub fn strategy_grid(&self, i: usize) -> Vec<f64> {
        let d = self.dataset_sizes[i] as f64;
        let g = self.grid_points;
        if g == 1 {
            return vec![d];
        }
        (0..g)
            .map(|k| if k == g - 1 { d } else { d * k as f64 / (g - 1) as f64 })
            .collect()
    }

    fn check_strategies(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: x.len() });
        }
        for (i, (&xi, &d)) in x.iter().zip(&self.dataset_sizes).enumerate() {
            let max = d as f64;
            if !(xi.is_finite() && xi >= 0.0 && xi <= max) {
                return Err(Error::StrategyOutOfRange { index: i, value: xi, max });
            }
        }
        Ok(())
    }

    /// Effective training-data size behind firm `i`'s federated model.
    pub fn effective_data(&self, x: &[f64], i: usize) -> f64 {
        let own = self.dataset_sizes[i] as f64;
        let lambda = self.trad.self_gain;
        let beta = self.trad.peer_gain;
        match self.trad.access {
            PeerAccess::ContributionGated => {
                let peers: f64 = (0..self.n())
                    .filter(|&j| j != i)
                    .map(|j| self.dataset_sizes[j] as f64)
                    .sum();
                own + lambda * x[i] + beta * (x[i] / own) * peers
            }
            PeerAccess::SharedPool => {
                let peers: f64 = (0..self.n()).filter(|&j| j != i).map(|j| x[j]).sum();
                own + lambda * x[i] + beta * peers
            }
        }
    }

    pub fn standalone_loss(&self, i: usize) -> f64 {
        self.curves[i].loss(self.dataset_sizes[i] as f64)
    }

    fn raw_improvements(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|i| self.standalone_loss(i) - self.curves[i].loss(self.effective_data(x, i)))
            .collect()
    }

    /// Market share of firm `i` computed straight from the loss
    /// reductions, without requiring them to be non-negative. Agrees with
    /// [`payoff`] whenever the latter is defined.
    fn raw_payoff(&self, x: &[f64], i: usize) -> f64 {
        let d = self.raw_improvements(x);
        let total: f64 = d.iter().sum();
        let n = d.len();
        let s: Vec<f64> = if total != 0.0 {
            d.iter().map(|di| di / total).collect()
        } else {
            vec![1.0 / n as f64; n]
        };
        let (flows, new_population) = customer_flows(&self.scenario, &s);
        flows[i].total() / new_population
    }
}

/// Loss of firm `i`'s federated model under strategy profile `x`.
pub fn federated_loss(spec: &GameSpec, x: &[f64], i: usize) -> Result<f64> {
    spec.scenario.check_index(i)?;
    spec.check_strategies(x)?;
    Ok(spec.curves[i].loss(spec.effective_data(x, i)))
}

pub fn improvements(spec: &GameSpec, x: &[f64]) -> Result<ImprovementProfile> {
    spec.check_strategies(x)?;
    let d = spec.raw_improvements(x);
    if let Some((firm, &improvement)) = d.iter().enumerate().find(|(_, di)| **di < 0.0) {
        return Err(Error::AssumptionViolated { firm, improvement });
    }
    ImprovementProfile::from_improvements(d)
}

/// Post-FL market share of firm `i`.
pub fn payoff(spec: &GameSpec, x: &[f64], i: usize) -> Result<f64> {
    spec.scenario.check_index(i)?;
    let profile = improvements(spec, x)?;
    Ok(compute_outcome(&spec.scenario, &profile)?.new_shares[i])
}

/// A profitable deviation from committing the full dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub firm: usize,
    pub deviation: f64,
    /// Full strategy profile with the firm's own entry set to `D_i`.
    pub others: Vec<f64>,
    pub full_commitment_payoff: f64,
    pub deviation_payoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceCheck {
    pub holds: bool,
    pub evaluations: u128,
    pub counterexample: Option<Counterexample>,
}

/// Payoff slack allowed before a deviation counts as profitable.
pub const DOMINANCE_TOL: f64 = 1e-12;

/// Every profile of the discretized strategy space, in odometer order.
fn profiles(grids: &[Vec<f64>]) -> impl Iterator<Item = Vec<f64>> + '_ {
    let total: usize = grids.iter().map(Vec::len).product();
    (0..total).map(move |mut k| {
        let mut x = vec![0.0; grids.len()];
        for (slot, grid) in x.iter_mut().zip(grids).rev() {
            *slot = grid[k % grid.len()];
            k /= grid.len();
        }
        x
    })
}

/// Brute-force check that committing the full dataset is a dominant
/// strategy for every firm on the strategy grid.
pub fn verify_dominant_strategy(spec: &GameSpec) -> Result<DominanceCheck> {
    let n = spec.n();
    let g = spec.grid_points;
    if g < 2 {
        return Err(Error::InvalidGameSpec("dominance check needs grid_points >= 2".into()));
    }
    // Per firm: every profile of the others, times the full commitment plus
    // each deviation.
    let evaluations = (g as u128)
        .checked_pow(n as u32 - 1)
        .and_then(|v| v.checked_mul((g as u128 + 1) * n as u128))
        .unwrap_or(u128::MAX);
    if evaluations > spec.eval_budget {
        return Err(Error::GridTooLarge { evaluations, budget: spec.eval_budget });
    }
    let grids: Vec<Vec<f64>> = (0..n).map(|i| spec.strategy_grid(i)).collect();
    let mut done: u128 = 0;
    for i in 0..n {
        let full = spec.dataset_sizes[i] as f64;
        // Fix firm i at full commitment and enumerate everybody else.
        let mut fixed = grids.clone();
        fixed[i] = vec![full];
        for mut x in profiles(&fixed) {
            let best = spec.raw_payoff(&x, i);
            done += 1;
            for &dev in &grids[i] {
                x[i] = dev;
                let got = spec.raw_payoff(&x, i);
                done += 1;
                if got > best + DOMINANCE_TOL {
                    x[i] = full;
                    return Ok(DominanceCheck {
                        holds: false,
                        evaluations: done,
                        counterexample: Some(Counterexample {
                            firm: i,
                            deviation: dev,
                            others: x,
                            full_commitment_payoff: best,
                            deviation_payoff: got,
                        }),
                    });
                }
            }
        }
    }
    Ok(DominanceCheck { holds: true, evaluations: done, counterexample: None })
}

/// Grid strategy maximizing firm `i`'s payoff against `x_minus_i`; ties go
/// to the larger commitment.
pub fn best_response(spec: &GameSpec, i: usize, x_minus_i: &[f64]) -> Result<f64> {
    spec.scenario.check_index(i)?;
    let n = spec.n();
    if x_minus_i.len() + 1 != n {
        return Err(Error::DimensionMismatch { expected: n - 1, found: x_minus_i.len() });
    }
    let mut x: Vec<f64> = x_minus_i.to_vec();
    x.insert(i, 0.0);
    let mut best: Option<(f64, f64)> = None;
    for xi in spec.strategy_grid(i) {
        x[i] = xi;
        let p = payoff(spec, &x, i)?;
        if best.is_none_or(|(_, bp)| p >= bp) {
            best = Some((xi, p));
        }
    }
    Ok(best.expect("grid is never empty").0)
}
