use flmarket_core::*;
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct GameCase {
    spec: GameSpec,
    x: Vec<f64>,
    firm: usize,
}

fn game_case() -> impl Strategy<Value = GameCase> {
    (2usize..=4)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(0.05f64..1.0, n),
                0.3f64..0.95,
                0.0f64..0.5,
                prop::collection::vec(10u64..500, n),
                prop::collection::vec((0.2f64..3.0, 0.1f64..1.5, 0.0f64..0.2), n),
                0.2f64..2.0,
                0.0f64..=1.0,
                prop::collection::vec(0.0f64..=1.0, n),
                0..n,
            )
        })
        .prop_map(|(w, r, theta, sizes, curves, lambda, beta_frac, frac, firm)| {
            let total: f64 = w.iter().sum();
            let shares = w.iter().map(|x| x / total).collect();
            let scenario = MarketScenario::uniform(shares, r, 0.02, theta).unwrap();
            let curves = curves.iter().map(|&(a, b, c)| LossCurve::new(a, b, c).unwrap()).collect();
            let trad = TradScheme::new(lambda, lambda * beta_frac).unwrap();
            let x = frac.iter().zip(&sizes).map(|(f, d)| f * *d as f64).collect();
            let spec = GameSpec::new(scenario, sizes, curves, trad, 5).unwrap();
            GameCase { spec, x, firm }
        })
}

proptest! {
    #[test]
    fn own_loss_strictly_decreases(case in game_case()) {
        let GameCase { spec, mut x, firm } = case;
        let max = spec.dataset_sizes()[firm] as f64;
        let mut last = f64::INFINITY;
        for k in 0..=10 {
            x[firm] = max * k as f64 / 10.0;
            let l = federated_loss(&spec, &x, firm).unwrap();
            prop_assert!(l < last);
            last = l;
        }
    }

    #[test]
    fn improvements_are_non_negative(case in game_case()) {
        let p = improvements(&case.spec, &case.x).unwrap();
        prop_assert!(p.absolute().unwrap().iter().all(|d| *d >= 0.0));
        let total: f64 = p.relative().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn committing_more_shifts_relative_improvement(case in game_case()) {
        let GameCase { spec, mut x, firm } = case;
        let max = spec.dataset_sizes()[firm] as f64;
        x[firm] = 0.25 * max;
        let lo = improvements(&spec, &x).unwrap();
        x[firm] = 0.75 * max;
        let hi = improvements(&spec, &x).unwrap();
        prop_assume!(!lo.is_degenerate() && !hi.is_degenerate());
        prop_assert!(hi.relative()[firm] > lo.relative()[firm]);
        for j in (0..spec.n()).filter(|&j| j != firm) {
            prop_assert!(hi.relative()[j] <= lo.relative()[j]);
        }
    }

    #[test]
    fn payoff_non_decreasing_in_commitment(case in game_case()) {
        let GameCase { spec, mut x, firm } = case;
        let max = spec.dataset_sizes()[firm] as f64;
        let mut last = f64::NEG_INFINITY;
        for k in 0..=8 {
            x[firm] = max * k as f64 / 8.0;
            let p = payoff(&spec, &x, firm).unwrap();
            prop_assert!(p >= last - 1e-15);
            last = p;
        }
    }

    #[test]
    fn full_commitment_is_best_response(case in game_case()) {
        let GameCase { spec, x, firm } = case;
        let mut others = x.clone();
        others.remove(firm);
        let best = best_response(&spec, firm, &others).unwrap();
        prop_assert_eq!(best, spec.dataset_sizes()[firm] as f64);
    }
}
