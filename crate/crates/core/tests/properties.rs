use flmarket_core::stability::friendliness_closed_form;
use flmarket_core::*;
use proptest::prelude::*;

/// Random valid scenario: positive shares, loyalty in [0, 1], leave rate in
/// [0, 1 - loyalty], growth in [0, 1].
fn scenario_strategy(max_n: usize) -> impl Strategy<Value = MarketScenario> {
    (1..=max_n)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(0.05f64..1.0, n),
                prop::collection::vec(0.0f64..=1.0, n),
                prop::collection::vec(0.0f64..=1.0, n),
                0.0f64..1.0,
            )
        })
        .prop_filter_map("invalid scenario", |(w, r, u, theta)| {
            let total: f64 = w.iter().sum();
            let shares: Vec<f64> = w.iter().map(|x| x / total).collect();
            let nu: Vec<f64> = r.iter().zip(&u).map(|(r, u)| u * (1.0 - r)).collect();
            MarketScenario::new(shares, r, nu, theta).ok()
        })
}

fn profile_strategy(n: usize) -> impl Strategy<Value = ImprovementProfile> {
    prop::collection::vec(0.0f64..1.0, n).prop_filter_map("all zero", |w| {
        let total: f64 = w.iter().sum();
        (total > 0.0).then(|| ImprovementProfile::from_relative(w.iter().map(|x| x / total).collect()).unwrap())
    })
}

fn scenario_and_profile() -> impl Strategy<Value = (MarketScenario, ImprovementProfile)> {
    scenario_strategy(8).prop_flat_map(|s| {
        let n = s.n();
        (Just(s), profile_strategy(n))
    })
}

proptest! {
    #[test]
    fn outcome_identities((s, q) in scenario_and_profile()) {
        let agg = compute_aggregates(&s);
        let out = compute_outcome(&s, &q).unwrap();

        let share_sum: f64 = out.new_shares.iter().sum();
        prop_assert!((share_sum - 1.0).abs() < 1e-9);
        let var_sum: f64 = out.variances.iter().sum();
        prop_assert!(var_sum.abs() < 1e-9);

        let r_hat_sum: f64 = agg.r_hat.iter().sum();
        prop_assert!((agg.f_o + r_hat_sum - 1.0).abs() < 1e-12);
        prop_assert!(agg.f_o >= 0.0 && agg.r_hat.iter().all(|r| *r >= 0.0));

        for i in 0..s.n() {
            let restated = agg.r_hat[i] + q.relative()[i] * agg.f_o;
            prop_assert!((out.new_shares[i] - restated).abs() < 1e-12);
        }

        prop_assert!((out.new_population - agg.e * s.population()).abs() < 1e-9 * s.population());
        let customers: f64 = out.flows.iter().map(|f| f.total()).sum();
        prop_assert!((customers - agg.e * s.population()).abs() < 1e-9 * s.population());
        for (f, ms) in out.flows.iter().zip(&out.new_shares) {
            prop_assert!((ms * out.new_population - f.total()).abs() < 1e-9 * s.population());
        }
    }

    #[test]
    fn share_grows_with_own_improvement(
        s in scenario_strategy(6),
        raw in prop::collection::vec(0.0f64..1.0, 6),
        i_seed in 0usize..6,
    ) {
        let n = s.n();
        let i = i_seed % n;
        let mut d = raw[..n].to_vec();
        let mut last = f64::NEG_INFINITY;
        for k in 0..=20 {
            d[i] = k as f64 * 0.1;
            if d.iter().sum::<f64>() == 0.0 {
                continue;
            }
            let p = ImprovementProfile::from_improvements(d.clone()).unwrap();
            let share = compute_outcome(&s, &p).unwrap().new_shares[i];
            prop_assert!(share >= last - 1e-15);
            last = share;
        }
    }

    #[test]
    fn bound_agrees_with_direct_check(
        (s, q) in scenario_and_profile(),
        delta in -0.5f64..0.5,
    ) {
        let agg = compute_aggregates(&s);
        prop_assume!(agg.f_o > 1e-6);
        let direct = is_delta_stable(&s, &q, delta).unwrap();
        let bounds = min_improvements(&s, delta).unwrap();
        let q_min = bounds.q_min().unwrap();
        let by_bound = q.relative().iter().zip(&q_min).all(|(qi, mi)| qi >= mi);
        if direct != by_bound {
            // Only allowed right at the boundary.
            let gap = q.relative().iter().zip(&q_min).map(|(qi, mi)| (qi - mi).abs()).fold(f64::INFINITY, f64::min);
            prop_assert!(gap * agg.f_o < 1e-9, "disagreement away from the boundary");
        }
    }

    #[test]
    fn kappa_forms_and_viability(s in scenario_strategy(8), delta in -0.5f64..0.5) {
        prop_assume!(!compute_aggregates(&s).is_frozen());
        let summed = friendliness(&s, delta).unwrap();
        let closed = friendliness_closed_form(&s, delta).unwrap();
        prop_assert!((summed - closed).abs() < 1e-12);
        prop_assert!(summed <= 1.0 + 1e-12);
        prop_assert_eq!(viability(&s, delta).unwrap(), summed >= 0.0);
    }

    #[test]
    fn kappa_non_decreasing_in_delta(s in scenario_strategy(8), d1 in -0.5f64..0.5, d2 in -0.5f64..0.5) {
        prop_assume!(!compute_aggregates(&s).is_frozen());
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(friendliness(&s, lo).unwrap() <= friendliness(&s, hi).unwrap() + 1e-12);
    }

    #[test]
    fn allocation_is_stable(s in scenario_strategy(8), delta in -0.2f64..0.5, w in prop::collection::vec(0.01f64..1.0, 8)) {
        prop_assume!(!compute_aggregates(&s).is_frozen());
        let n = s.n();
        let total: f64 = w[..n].iter().sum();
        let weights: Vec<f64> = w[..n].iter().map(|x| x / total).collect();
        match allocate(&s, delta, &weights) {
            Ok(q) => {
                let q_min = min_improvements(&s, delta).unwrap().q_min().unwrap();
                for (qi, mi) in q.relative().iter().zip(&q_min) {
                    prop_assert!(qi >= mi);
                }
                let out = compute_outcome(&s, &q).unwrap();
                for v in out.variances {
                    prop_assert!(v <= delta + 1e-12);
                }
            }
            Err(Error::NotViable { kappa }) => prop_assert!(kappa < 0.0),
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn bound_moves_with_own_loyalty(s in scenario_strategy(6), delta in -0.3f64..0.3, i_seed in 0usize..6) {
        // Raising one firm's loyalty lowers its bound while the bound is below 1.
        let i = i_seed % s.n();
        let bound = |r_i: f64| {
            let mut r = s.loyalty().to_vec();
            r[i] = r_i;
            let mut nu = s.leave_rate().to_vec();
            nu[i] = nu[i].min(1.0 - r_i);
            let t = MarketScenario::new(s.shares().to_vec(), r, nu, s.growth_rate()).ok()?;
            if compute_aggregates(&t).is_frozen() {
                return None;
            }
            min_improvements(&t, delta).unwrap().bounds[i].q_hat_min()
        };
        let r0 = s.loyalty()[i];
        let r1 = (r0 + 0.05).min(1.0);
        prop_assume!(r1 > r0);
        if let (Some(a), Some(b)) = (bound(r0), bound(r1)) {
            // Keep the leave rate fixed across both evaluations for a clean comparison.
            prop_assume!(s.leave_rate()[i] <= 1.0 - r1);
            if a < 1.0 {
                prop_assert!(b < a, "bound did not decrease: {a} -> {b}");
            }
        }
    }
}

#[test]
fn uniform_market_bound_monotonicity() {
    // With common loyalty r and leave rate nu, q_hat_min = MS - delta / f_o.
    let delta = 0.05;
    for theta in [0.0, 0.1, 0.5, 1.0] {
        for k in 0..19 {
            let r = k as f64 * 0.05;
            let mut prev_ms = f64::NEG_INFINITY;
            for m in 1..10 {
                let ms = m as f64 / 10.0;
                let s = MarketScenario::uniform(vec![ms, 1.0 - ms], r, 0.02, theta).unwrap();
                let b = min_improvements(&s, delta).unwrap().bounds[0].q_hat_min().unwrap();
                assert!(b > prev_ms, "not increasing in MS at theta={theta}, r={r}");
                prev_ms = b;

                if k > 0 {
                    let prev_r = MarketScenario::uniform(vec![ms, 1.0 - ms], r - 0.05, 0.02, theta).unwrap();
                    let a = min_improvements(&prev_r, delta).unwrap().bounds[0].q_hat_min().unwrap();
                    assert!(b < a, "not decreasing in r at theta={theta}, r={r}, ms={ms}");
                }
            }
        }
    }
}

#[test]
fn kappa_drops_when_a_sensitive_firm_grows() {
    // Shift share from a non-sensitive firm to a sensitive one.
    let delta = 0.05;
    let mut prev = f64::INFINITY;
    for k in 0..=10 {
        let big = 0.5 + k as f64 * 0.02;
        let shares = vec![big, 0.5 - big / 2.0 - 0.05, 0.5 - big / 2.0 + 0.05];
        let s = MarketScenario::uniform(shares, 0.85, 0.02, 0.1).unwrap();
        let b = min_improvements(&s, delta).unwrap();
        assert!(b.bounds[0].is_sensitive());
        let kappa = friendliness(&s, delta).unwrap();
        assert!(kappa <= prev + 1e-12);
        prev = kappa;
    }
}
