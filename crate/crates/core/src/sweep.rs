//! Parameter sweeps over uniform-loyalty markets.
//!
//! Every firm shares the same loyalty `r_o` and leaving rate `nu_o`, so the
//! aggregates `e` and `f_o` depend only on `(theta, r_o, nu_o)` and each
//! firm's bound depends only on its own share.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::MarketScenario;
use crate::numfmt::format_sig;
use crate::stability::{check_delta, friendliness, friendliness_closed_form, min_improvements, viability};
use crate::DEFAULT_DELTA;

/// Significant digits of floats in CSV output.
pub const CSV_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub theta_values: Vec<f64>,
    pub r_o_grid: Vec<f64>,
    pub nu_o: f64,
    pub ms_grid: Vec<f64>,
    pub n_prime_values: Vec<usize>,
    pub delta: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            theta_values: vec![0.1, 0.5],
            // 0.70, 0.75, ..., 0.95
            r_o_grid: (0..6).map(|k| (70 + 5 * k) as f64 / 100.0).collect(),
            nu_o: 0.02,
            // 0.2, 0.3, ..., 0.8
            ms_grid: (2..=8).map(|k| k as f64 / 10.0).collect(),
            n_prime_values: vec![1, 2, 3],
            delta: DEFAULT_DELTA,
        }
    }
}

impl SweepConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.theta_values.is_empty() || self.r_o_grid.is_empty() || self.ms_grid.is_empty() {
            return bad("theta_values, r_o_grid and ms_grid must be nonempty".into());
        }
        check_delta(self.delta).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if let Some(ms) = self.ms_grid.iter().find(|ms| !(ms.is_finite() && **ms > 0.0 && **ms <= 1.0)) {
            return bad(format!("market share {ms} outside (0, 1]"));
        }
        // Probe every (theta, r_o) pair with a monopoly; per-firm checks
        // are the same for any share split.
        for &theta in &self.theta_values {
            for &r in &self.r_o_grid {
                let s = MarketScenario::uniform(vec![1.0], r, self.nu_o, theta)
                    .map_err(|e| Error::InvalidConfig(format!("theta={theta}, r_o={r}: {e}")))?;
                if crate::market::compute_aggregates(&s).is_frozen() {
                    return bad(format!("theta={theta}, r_o={r} gives a frozen market"));
                }
            }
        }
        Ok(())
    }
}

/// One cell of the minimum-improvement table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QminRow {
    pub theta: f64,
    pub ms: f64,
    pub r: f64,
    pub q_hat_min: f64,
    pub q_min: f64,
}

/// Minimum relative improvement of a firm with share `ms` and loyalty `r`
/// (the rest of the market is held by one firm with the same rates), for
/// every grid point in `(theta, ms, r)` order.
pub fn sweep_qmin(config: &SweepConfig) -> Result<Vec<QminRow>> {
    config.validate()?;
    let mut rows = Vec::with_capacity(config.theta_values.len() * config.ms_grid.len() * config.r_o_grid.len());
    for &theta in &config.theta_values {
        for &ms in &config.ms_grid {
            for &r in &config.r_o_grid {
                let shares = if ms < 1.0 { vec![ms, 1.0 - ms] } else { vec![1.0] };
                let scenario = MarketScenario::uniform(shares, r, config.nu_o, theta)?;
                let bounds = min_improvements(&scenario, config.delta)?;
                let q_hat_min = bounds.bounds[0].q_hat_min().expect("validated non-frozen");
                rows.push(QminRow { theta, ms, r, q_hat_min, q_min: q_hat_min.max(0.0) });
            }
        }
    }
    Ok(rows)
}

/// One cell of the friendliness table. `kappa` columns are empty when the
/// `n_sensitive` equal-share firms are not all sensitive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaRow {
    pub theta: f64,
    pub n_sensitive: usize,
    pub ms_sensitive: f64,
    pub r_o: f64,
    pub n_firms: usize,
    pub feasible: bool,
    pub kappa: Option<f64>,
    pub kappa_summation: Option<f64>,
    pub viable: Option<bool>,
}

/// Market where `n_sensitive` firms split `ms_sensitive` equally and the
/// remainder is split equally among the fewest firms that are each
/// non-sensitive. All firms share loyalty `r_o` and leaving rate `nu_o`.
pub fn sensitive_market(
    n_sensitive: usize,
    ms_sensitive: f64,
    r_o: f64,
    nu_o: f64,
    theta: f64,
    delta: f64,
) -> Result<MarketScenario> {
    if n_sensitive == 0 {
        return Err(Error::InvalidConfig("n_prime must be at least 1".into()));
    }
    if delta <= 0.0 {
        return Err(Error::InvalidConfig(
            "a positive delta is required to keep the remaining firms non-sensitive".into(),
        ));
    }
    let mut shares = vec![ms_sensitive / n_sensitive as f64; n_sensitive];
    let rest = 1.0 - ms_sensitive;
    if rest > 0.0 {
        // A residual firm with share s is non-sensitive iff s * (1 - r_o/e) <= delta.
        let e = 1.0 + theta - nu_o;
        let per_firm_excess = (1.0 - r_o / e).max(0.0);
        let mut k = ((rest * per_firm_excess / delta).ceil() as usize).max(1);
        loop {
            let probe = MarketScenario::uniform(vec![rest / k as f64, 1.0 - rest / k as f64], r_o, nu_o, theta)?;
            if !min_improvements(&probe, delta)?.bounds[0].is_sensitive() {
                break;
            }
            k += 1;
        }
        shares.extend(std::iter::repeat_n(rest / k as f64, k));
    }
    MarketScenario::uniform(shares, r_o, nu_o, theta)
}

/// Friendliness for every `(theta, n', MS_o', r_o)` grid point.
pub fn sweep_kappa(config: &SweepConfig) -> Result<Vec<KappaRow>> {
    config.validate()?;
    if config.n_prime_values.is_empty() {
        return Err(Error::InvalidConfig("n_prime_values must be nonempty".into()));
    }
    let mut rows = Vec::new();
    for &theta in &config.theta_values {
        for &n_sensitive in &config.n_prime_values {
            for &ms in &config.ms_grid {
                for &r_o in &config.r_o_grid {
                    let scenario = sensitive_market(n_sensitive, ms, r_o, config.nu_o, theta, config.delta)?;
                    let bounds = min_improvements(&scenario, config.delta)?;
                    let feasible = bounds.sensitive_set == (0..n_sensitive).collect::<Vec<_>>();
                    let (kappa, kappa_summation, viable) = if feasible {
                        (
                            Some(friendliness_closed_form(&scenario, config.delta)?),
                            Some(friendliness(&scenario, config.delta)?),
                            Some(viability(&scenario, config.delta)?),
                        )
                    } else {
                        (None, None, None)
                    };
                    rows.push(KappaRow {
                        theta,
                        n_sensitive,
                        ms_sensitive: ms,
                        r_o,
                        n_firms: scenario.n(),
                        feasible,
                        kappa,
                        kappa_summation,
                        viable,
                    });
                }
            }
        }
    }
    Ok(rows)
}

fn num(x: f64) -> String {
    format_sig(x, CSV_DIGITS)
}

fn opt<T>(x: Option<T>, f: impl Fn(T) -> String) -> String {
    x.map(f).unwrap_or_default()
}

pub fn qmin_csv(rows: &[QminRow]) -> String {
    let mut out = String::from("theta,ms,r,q_hat_min,q_min\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            num(row.theta),
            num(row.ms),
            num(row.r),
            num(row.q_hat_min),
            num(row.q_min)
        ));
    }
    out
}

pub fn kappa_csv(rows: &[KappaRow]) -> String {
    let mut out = String::from("theta,n_sensitive,ms_sensitive,r_o,n_firms,feasible,kappa,kappa_summation,viable\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            num(row.theta),
            row.n_sensitive,
            num(row.ms_sensitive),
            num(row.r_o),
            row.n_firms,
            row.feasible,
            opt(row.kappa, num),
            opt(row.kappa_summation, num),
            opt(row.viable, |v| v.to_string()),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grids() {
        let c = SweepConfig::default();
        assert_eq!(c.r_o_grid, vec![0.7, 0.75, 0.8, 0.85, 0.9, 0.95]);
        assert_eq!(c.ms_grid, vec![0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]);
    }

    #[test]
    fn single_point_qmin_by_hand() {
        let config = SweepConfig {
            theta_values: vec![0.1],
            r_o_grid: vec![0.95],
            ms_grid: vec![0.2],
            ..SweepConfig::default()
        };
        let rows = sweep_qmin(&config).unwrap();
        assert_eq!(rows.len(), 1);
        // e = 1.08, f_o = (0.1 + 0.03) / 1.08, r_hat = 0.95 * 0.2 / 1.08.
        let e = 1.08;
        let f_o = 0.13 / e;
        let expected = ((0.2 - 0.05) - 0.19 / e) / f_o;
        assert!((rows[0].q_hat_min - expected).abs() < 1e-12);
        assert_eq!(rows[0].q_min, 0.0);
        assert!(expected < 0.0);
    }

    #[test]
    fn sensitive_market_construction() {
        let s = sensitive_market(2, 0.6, 0.8, 0.02, 0.5, 0.05).unwrap();
        let b = min_improvements(&s, 0.05).unwrap();
        assert_eq!(b.sensitive_set, vec![0, 1]);
        assert!((s.shares().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(sensitive_market(1, 0.5, 0.8, 0.02, 0.1, 0.0).is_err());
    }

    #[test]
    fn kappa_ignores_how_shares_are_split() {
        let kappa = |shares: Vec<f64>| {
            let s = MarketScenario::uniform(shares, 0.8, 0.02, 0.1).unwrap();
            let b = min_improvements(&s, 0.05).unwrap();
            assert_eq!(b.sensitive_set, vec![0, 1]);
            friendliness(&s, 0.05).unwrap()
        };
        let base = kappa(vec![0.3, 0.3, 0.1, 0.1, 0.1, 0.1]);
        for shares in [
            vec![0.35, 0.25, 0.1, 0.1, 0.1, 0.1],
            vec![0.3, 0.3, 0.12, 0.08, 0.1, 0.1],
            vec![0.3, 0.3, 0.05, 0.05, 0.1, 0.1, 0.1],
        ] {
            assert!((kappa(shares) - base).abs() < 1e-12);
        }
    }

    #[test]
    fn kappa_table_shape() {
        let rows = sweep_kappa(&SweepConfig::default()).unwrap();
        assert_eq!(rows.len(), 2 * 3 * 7 * 6);
        for row in rows.iter().filter(|r| r.feasible) {
            let (a, b) = (row.kappa.unwrap(), row.kappa_summation.unwrap());
            assert!((a - b).abs() < 1e-12, "{row:?}");
        }
    }

    #[test]
    fn csv_layout() {
        let rows = vec![QminRow { theta: 0.1, ms: 0.2, r: 0.95, q_hat_min: -0.25, q_min: 0.0 }];
        assert_eq!(qmin_csv(&rows), "theta,ms,r,q_hat_min,q_min\n0.1,0.2,0.95,-0.25,0\n");
    }

    #[test]
    fn rejects_bad_configs() {
        let c = SweepConfig { ms_grid: vec![], ..SweepConfig::default() };
        assert!(matches!(sweep_qmin(&c), Err(Error::InvalidConfig(_))));
        let c = SweepConfig { r_o_grid: vec![0.99], ..SweepConfig::default() };
        assert!(matches!(sweep_qmin(&c), Err(Error::InvalidConfig(_))));
        let c = SweepConfig { delta: 1.5, ..SweepConfig::default() };
        assert!(matches!(sweep_qmin(&c), Err(Error::InvalidConfig(_))));
        let c = SweepConfig { delta: -0.1, ..SweepConfig::default() };
        assert!(sweep_kappa(&c).is_err());
    }
}
