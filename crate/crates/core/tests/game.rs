use proptest::prelude::*;

use regino_core::game::{
    central_difference, follower_best_response, follower_equilibrium_quantity, follower_profit,
    golden_section_max, grid_argmax, inverse_demand, leader_optimal_quantity, leader_profit,
    optimal_royalty, spne, Equilibrium, MarketParams,
};

fn scaled(x: f64, params: &MarketParams) -> f64 {
    1e-12 * (1.0 + params.a.abs() + params.c.abs()).powi(2).max(1.0) * x.abs().max(1.0)
}

proptest! {
    #[test]
    fn profit_accounting(a in 0.1f64..50.0, c in 0.1f64..50.0, r in 0.0f64..4.0, q1 in 0.0f64..30.0, q2 in 0.0f64..30.0) {
        let params = MarketParams::new(a, c).unwrap();
        let state = Equilibrium::at_state(&params, r, q1, q2);
        let q = q1 + q2;
        let expected = state.price * q + r * r * (q1 - q2) - c * q;
        let sum = state.leader_profit + state.follower_profit;
        prop_assert!((sum - expected).abs() <= 1e-12 * (1.0 + expected.abs() + a * q + r * r * q));
        prop_assert_eq!(state.price, inverse_demand(q1, q2, &params));
        prop_assert!((state.follower_profit - follower_profit(r, q1, q2, &params)).abs() <= 1e-12 * (1.0 + a * q));
    }

    #[test]
    fn equilibrium_chain(a in 0.1f64..50.0, c in 0.1f64..50.0, r in 0.0f64..4.0) {
        let params = MarketParams::new(a, c).unwrap();
        let chained = follower_best_response(leader_optimal_quantity(r, &params), r, &params);
        let direct = follower_equilibrium_quantity(r, &params);
        prop_assert!((chained - direct).abs() <= scaled(direct, &params));
    }

    #[test]
    fn reduced_leader_profit_matches_primitives(a in 0.1f64..50.0, c in 0.1f64..50.0, r in 0.0f64..4.0, q1 in 0.0f64..30.0) {
        let params = MarketParams::new(a, c).unwrap();
        let q2 = follower_best_response(q1, r, &params);
        let p = inverse_demand(q1, q2, &params);
        let direct = p * q1 + r * r * q1 - c * q1;
        prop_assert!((leader_profit(r, q1, &params) - direct).abs() <= 1e-12 * (1.0 + a * q1 + q1 * q1 + r * r * q1));
    }

    #[test]
    fn optimal_royalty_zeroes_leader_output(a in 0.1f64..50.0, gap in 1e-3f64..50.0) {
        let params = MarketParams::new(a, a + gap).unwrap();
        let r = optimal_royalty(&params).real().unwrap();
        prop_assert!(leader_optimal_quantity(r, &params).abs() <= 1e-12 * (1.0 + a + gap));
        let eq = spne(&params);
        prop_assert!((eq.q2 - 2.0 * (a - (a + gap)) / 3.0).abs() <= 1e-12 * (1.0 + a + gap));
    }

    #[test]
    fn follower_rule_beats_grid(a in 5.0f64..50.0, cf in 0.05f64..0.3, r in 0.0f64..1.0, qf in 0.0f64..0.5) {
        let c = a * cf;
        let q1 = (a - c - r * r) * qf;
        let params = MarketParams::new(a, c).unwrap();
        let rule = follower_best_response(q1, r, &params);
        prop_assume!(rule > 0.0);
        let (best, step) = grid_argmax(|q2| follower_profit(r, q1, q2, &params), 0.0, a, 1e-4 * a);
        prop_assert!((best - rule).abs() <= step);
    }

    #[test]
    fn leader_rule_beats_golden_section(a in 5.0f64..50.0, cf in 0.05f64..0.5, r in 0.0f64..1.5) {
        let c = a * cf;
        let params = MarketParams::new(a, c).unwrap();
        let rule = leader_optimal_quantity(r, &params);
        let found = golden_section_max(|q| leader_profit(r, q, &params), 0.0, 2.0 * a + 3.0 * r * r, 1e-8);
        prop_assert!((found - rule).abs() <= 1e-6);
        let h = 1e-3;
        let curvature = (leader_profit(r, rule + h, &params) - 2.0 * leader_profit(r, rule, &params)
            + leader_profit(r, rule - h, &params)) / (h * h);
        prop_assert!((curvature + 1.0).abs() <= 1e-4);
    }

    #[test]
    fn royalty_derivative(a in 0.5f64..30.0, c in 0.1f64..30.0, r in 0.0f64..3.0, q1 in 0.0f64..20.0) {
        let params = MarketParams::new(a, c).unwrap();
        let fd = central_difference(|x| leader_profit(x, q1, &params), r, 1e-5);
        prop_assert!((fd - 3.0 * r * q1).abs() <= 1e-6 * (1.0 + q1));
    }
}
