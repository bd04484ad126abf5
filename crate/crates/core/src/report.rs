//! Analysis report shared by the CLI `analyze` command and the HTTP
//! stability endpoint.

use std::fmt;

use serde::Serialize;

use crate::error::Result;
use crate::market::{compute_outcome, ImprovementProfile, MarketOutcome, MarketScenario};
use crate::numfmt::format_sig;
use crate::stability::{check_delta, stability_report, StabilityReport};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregatesView {
    pub v_o: f64,
    pub e: f64,
    pub f_o: f64,
    pub r_hat: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirmView {
    pub name: String,
    pub share: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_hat_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_min: Option<f64>,
    pub status: &'static str,
    pub sensitive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowView {
    pub loyal: f64,
    pub free_joining: f64,
    pub new_joining: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeView {
    pub q: Vec<f64>,
    pub new_population: f64,
    pub new_shares: Vec<f64>,
    pub variances: Vec<f64>,
    pub flow_breakdown: Vec<FlowView>,
}

impl OutcomeView {
    pub fn new(q: &ImprovementProfile, outcome: &MarketOutcome) -> Self {
        Self {
            q: q.relative().to_vec(),
            new_population: outcome.new_population,
            new_shares: outcome.new_shares.clone(),
            variances: outcome.variances.clone(),
            flow_breakdown: outcome
                .flows
                .iter()
                .map(|f| FlowView { loyal: f.loyal, free_joining: f.free_joining, new_joining: f.new_joining })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    /// `ok`, or `frozen_market` when no customer can switch firms.
    pub status: &'static str,
    pub delta: f64,
    pub aggregates: AggregatesView,
    pub firms: Vec<FirmView>,
    pub sensitive_set: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub viable: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<OutcomeView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stable: Option<bool>,
}

impl AnalysisReport {
    /// Stability bounds for `scenario`, plus the outcome for `q` when given.
    pub fn build(
        scenario: &MarketScenario,
        names: &[String],
        delta: f64,
        q: Option<&ImprovementProfile>,
    ) -> Result<Self> {
        check_delta(delta)?;
        let report = stability_report(scenario, delta)?;
        let (outcome, stable) = match q {
            Some(q) => {
                let outcome = compute_outcome(scenario, q)?;
                let stable = outcome.variances.iter().all(|&v| v <= delta);
                (Some(OutcomeView::new(q, &outcome)), Some(stable))
            }
            None => (None, None),
        };
        Ok(Self::from_parts(scenario, names, &report, outcome, stable))
    }

    fn from_parts(
        scenario: &MarketScenario,
        names: &[String],
        report: &StabilityReport,
        outcome: Option<OutcomeView>,
        stable: Option<bool>,
    ) -> Self {
        let agg = &report.bounds.aggregates;
        let firms = report
            .bounds
            .bounds
            .iter()
            .enumerate()
            .map(|(i, b)| FirmView {
                name: names.get(i).cloned().unwrap_or_else(|| format!("firm_{}", i + 1)),
                share: scenario.shares()[i],
                q_hat_min: b.q_hat_min(),
                q_min: b.q_min(),
                status: b.status(),
                sensitive: b.is_sensitive(),
            })
            .collect();
        Self {
            status: if report.is_frozen() { "frozen_market" } else { "ok" },
            delta: report.delta(),
            aggregates: AggregatesView { v_o: agg.v_o, e: agg.e, f_o: agg.f_o, r_hat: agg.r_hat.clone() },
            firms,
            sensitive_set: report.bounds.sensitive_set.clone(),
            kappa: report.kappa,
            viable: report.viable,
            outcome,
            stable,
        }
    }

    /// Overall verdict: the stability of the given allocation if there is
    /// one, otherwise FL viability. A frozen market passes unless some firm
    /// is bound to lose more than delta.
    pub fn verdict(&self) -> bool {
        if let Some(stable) = self.stable {
            return stable;
        }
        match self.viable {
            Some(v) => v,
            None => self.firms.iter().all(|f| f.status != "infeasible"),
        }
    }
}

impl fmt::Display for AnalysisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = |x: f64| format_sig(x, 6);
        let agg = &self.aggregates;
        writeln!(f, "delta = {}", g(self.delta))?;
        writeln!(
            f,
            "market dynamics: v_o = {}, e = {}, f_o = {}",
            g(agg.v_o),
            g(agg.e),
            g(agg.f_o)
        )?;
        if self.status == "frozen_market" {
            writeln!(f, "frozen market: no customer reconsiders their firm")?;
        }
        writeln!(f, "{:<16} {:>10} {:>10} {:>12} {:>10}  status", "firm", "share", "r_hat", "q_hat_min", "q_min")?;
        for (i, firm) in self.firms.iter().enumerate() {
            let opt = |x: Option<f64>| x.map(g).unwrap_or_else(|| "-".into());
            writeln!(
                f,
                "{:<16} {:>10} {:>10} {:>12} {:>10}  {}{}",
                firm.name,
                g(firm.share),
                g(agg.r_hat[i]),
                opt(firm.q_hat_min),
                opt(firm.q_min),
                firm.status,
                if firm.sensitive { ", sensitive" } else { "" }
            )?;
        }
        if let Some(kappa) = self.kappa {
            writeln!(f, "friendliness kappa = {}", g(kappa))?;
        }
        if let Some(viable) = self.viable {
            writeln!(f, "FL viable: {}", if viable { "yes" } else { "no" })?;
        }
        if let Some(out) = &self.outcome {
            writeln!(f, "{:<16} {:>10} {:>12} {:>12}", "firm", "q", "new_share", "variance")?;
            for (i, firm) in self.firms.iter().enumerate() {
                writeln!(
                    f,
                    "{:<16} {:>10} {:>12} {:>12}",
                    firm.name,
                    g(out.q[i]),
                    g(out.new_shares[i]),
                    g(out.variances[i])
                )?;
            }
        }
        if let Some(stable) = self.stable {
            writeln!(f, "delta-stable: {}", if stable { "yes" } else { "no" })?;
        }
        Ok(())
    }
}
