use prefmgda::baselines::simplex_grid;
use prefmgda::forecast::{metric_acc, metric_sl};
use prefmgda::mgda::reweight_alpha;
use prefmgda::posterior::{granularity, reweighting1};
use prefmgda::prior::{enumerate_feasible_subsets, reweighting2, ConstraintSet, PriorConfig};
use prefmgda::{
    frank_wolfe_solve, ExploreConfig, FrontierArchive, FwConfig, GradientSet, MetricBounds,
    MetricVector, PreferenceWeights, SimplexWeights,
};
use proptest::prelude::*;

fn gradient_set() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..=4, 1usize..=6).prop_flat_map(|(t, d)| {
        prop::collection::vec(prop::collection::vec(-3.0f64..3.0, d), t)
    })
}

fn positive_weights(t: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..100.0, t)
}

proptest! {
    #[test]
    fn min_norm_is_below_every_gradient(rows in gradient_set()) {
        let g = GradientSet::new(rows.clone()).unwrap();
        let r = frank_wolfe_solve(&g, &FwConfig::default()).unwrap();
        prop_assert!((r.alpha.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(r.alpha.iter().all(|&a| a >= 0.0));
        for row in &rows {
            let sq: f64 = row.iter().map(|v| v * v).sum();
            prop_assert!(r.sq_norm <= sq + 1e-9);
        }
        let direct: f64 = r.direction.iter().map(|v| v * v).sum();
        prop_assert!((direct - r.sq_norm).abs() <= 1e-9 * (1.0 + direct));
    }

    #[test]
    fn min_norm_ignores_objective_order(rows in gradient_set()) {
        let g = GradientSet::new(rows).unwrap();
        let order: Vec<usize> = (0..g.num_objectives()).rev().collect();
        let a = frank_wolfe_solve(&g, &FwConfig::default()).unwrap();
        let b = frank_wolfe_solve(&g.permuted(&order).unwrap(), &FwConfig::default()).unwrap();
        prop_assert!((a.sq_norm - b.sq_norm).abs() <= 1e-7);
    }

    #[test]
    fn reweighting_alpha_ignores_weight_scale(
        alpha in prop::collection::vec(0.01f64..1.0, 3),
        w in positive_weights(3),
        k in 0.1f64..50.0,
    ) {
        let alpha = SimplexWeights::new(alpha).unwrap();
        let a = reweight_alpha(&alpha, &PreferenceWeights::new(w.clone()).unwrap()).unwrap();
        let scaled: Vec<f64> = w.iter().map(|v| v * k).collect();
        let b = reweight_alpha(&alpha, &PreferenceWeights::new(scaled).unwrap()).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        prop_assert!((a.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn granularity_counts_distinct_interior_points(
        points in prop::collection::btree_set(1u32..999, 0..20),
    ) {
        let values: Vec<f64> = points.iter().map(|&p| p as f64 / 1000.0).collect();
        let n = values.len();
        let g = granularity(&values, 0.0, 1.0);
        prop_assert!((g - 1.0 / (n as f64 + 1.0)).abs() <= 1e-12);
        let mut shuffled = values.clone();
        shuffled.reverse();
        shuffled.extend(values.iter().take(2));
        prop_assert!((granularity(&shuffled, 0.0, 1.0) - g).abs() <= 1e-12);
    }

    #[test]
    fn exploration_stops_exactly_when_targets_are_met(
        metrics in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..8),
        phi in 0.05f64..0.6,
    ) {
        let mut archive = FrontierArchive::new();
        for (i, (a, b)) in metrics.iter().enumerate() {
            let w = vec![1.0 + i as f64, 1.0];
            archive.push(w, MetricVector::new(vec![*a, *b]).unwrap());
        }
        let cfg = ExploreConfig {
            bounds: MetricBounds::unit(2),
            granularity_target: vec![phi, phi],
            pace: 2.0,
            max_rounds: 50,
        };
        let met = (0..2).all(|t| granularity(&archive.metric_values(t), 0.0, 1.0) <= phi);
        let next = reweighting1(&archive, &cfg).unwrap();
        prop_assert_eq!(next.is_none(), met);
    }

    #[test]
    fn prior_reweighting_moves_one_weight_by_pace(
        m in (0.0f64..1.0, 0.0f64..1.0),
        a in (0.0f64..1.0, 0.0f64..1.0),
        w in positive_weights(2),
        pace in 1.1f64..4.0,
    ) {
        let c = ConstraintSet::parse(&format!("m1<={} m2>={}", a.0, a.1)).unwrap();
        let m = [m.0, m.1];
        let subset = enumerate_feasible_subsets(&c, &m).unwrap().remove(0);
        prop_assume!(!subset.conditions.iter().all(|c| c.holds(m[c.metric], 1e-3)));
        let cfg = PriorConfig { pace, ..PriorConfig::default() };
        let before = PreferenceWeights::new(w.clone()).unwrap();
        let p = subset.extreme_for(&m);
        let after = reweighting2(&p, &m, &before, &subset, &cfg).unwrap();
        let changed: Vec<usize> = (0..2).filter(|&t| after[t] != before[t]).collect();
        prop_assert_eq!(changed.len(), 1);
        let ratio = after[changed[0]] / before[changed[0]];
        prop_assert!((ratio - pace).abs() <= 1e-9 * pace || (ratio - 1.0 / pace).abs() <= 1e-9);
    }

    #[test]
    fn constraints_round_trip_through_display(
        bounds in prop::collection::vec((0.0f64..1.0, 0.0f64..0.5), 1..4),
    ) {
        let text: Vec<String> = bounds
            .iter()
            .enumerate()
            .map(|(i, (lo, w))| match i % 3 {
                0 => format!("m{}>={lo}|m{}=={}", i + 1, i + 1, lo + w),
                1 => format!("m{}in[{lo},{}]", i + 1, lo + w),
                _ => format!("m{}<={lo}", i + 1),
            })
            .collect();
        let parsed = ConstraintSet::parse(&text.join(" ")).unwrap();
        let shown: Vec<String> = parsed
            .clauses()
            .iter()
            .map(|clause| clause.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("|"))
            .collect();
        prop_assert_eq!(ConstraintSet::parse(&shown.join(" ")).unwrap(), parsed);
    }

    #[test]
    fn metrics_are_fractions_and_perfect_forecasts_score_one(
        y in prop::collection::vec(0.0f64..50.0, 8),
        yhat in prop::collection::vec(-5.0f64..60.0, 8),
    ) {
        prop_assume!(y.chunks(2).any(|c| c.iter().sum::<f64>() > 0.0));
        let acc = metric_acc(&y, &yhat, 2).unwrap();
        let sl = metric_sl(&y, &yhat, 2).unwrap();
        prop_assert!((0.0..=1.0).contains(&acc));
        prop_assert!((0.0..=1.0 + 1e-12).contains(&sl));
        prop_assert!((metric_acc(&y, &y, 2).unwrap() - 1.0).abs() <= 1e-12);
        prop_assert!((metric_sl(&y, &y, 2).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn grid_points_lie_on_the_simplex(t in 1usize..4, res in 2usize..8) {
        let grid = simplex_grid(t, res).unwrap();
        let expected = (1..t).fold(1usize, |acc, i| acc * (res - 1 + i) / i);
        prop_assert_eq!(grid.len(), expected);
        for c in &grid {
            prop_assert!((c.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }
}
