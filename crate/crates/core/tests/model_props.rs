use pgss::model::{b_closed_form, FilterState};
use pgss::{ModelSpec, NegBinPredictive};
use proptest::prelude::*;

proptest! {
    #[test]
    fn iterated_rate_matches_closed_form(b0 in 0.01f64..50.0, gi in 1usize..10) {
        let g = gi as f64 / 10.0;
        let spec = ModelSpec::new(1.0, b0, g).unwrap();
        let mut state = FilterState::initial(&spec);
        for t in 1..=10_000usize {
            state = state.update((t % 3) as u64, &spec).unwrap();
            let closed = b_closed_form(&spec, t);
            prop_assert!((state.b - closed).abs() <= 1e-10 * closed, "t {} {} vs {}", t, state.b, closed);
        }
    }

    #[test]
    fn rate_trajectory_moves_monotonically_toward_b_star(b0 in 0.01f64..50.0, g in 0.05f64..0.95) {
        let spec = ModelSpec::new(1.0, b0, g).unwrap();
        let b_star = spec.b_star();
        let traj = spec.b_trajectory(400);
        for w in traj.windows(2) {
            // Strict while the step is representable, never crossing b*.
            let resolvable = (w[0] - b_star).abs() > 1e-12 * b_star;
            if b0 < b_star {
                prop_assert!(w[1] >= w[0] && w[1] <= b_star * (1.0 + 1e-15));
                if resolvable { prop_assert!(w[1] > w[0]); }
            } else if b0 > b_star {
                prop_assert!(w[1] <= w[0] && w[1] >= b_star * (1.0 - 1e-15));
                if resolvable { prop_assert!(w[1] < w[0]); }
            }
        }
    }

    #[test]
    fn prior_propagation_preserves_mean(a in 1e-3f64..1e3, b in 1e-3f64..1e3, g in 0.01f64..0.99) {
        let spec = ModelSpec::new(1.0, 1.0, g).unwrap();
        let s = FilterState::new(4, a, b).unwrap();
        let p = s.propagate_prior(&spec);
        prop_assert!((p.a / p.b - a / b).abs() <= 4.0 * f64::EPSILON * (a / b));
        prop_assert_eq!(p.t, 4);
    }

    #[test]
    fn negbin_quantile_and_cdf_are_galois_inverse(shape in 0.05f64..60.0, rate in 0.05f64..10.0, q in 0.001f64..0.999, y in 0u64..200) {
        let nb = NegBinPredictive::new(shape, rate).unwrap();
        let qy = nb.quantile(q).unwrap();
        prop_assert!(nb.cdf(qy) >= q);
        if qy > 0 {
            prop_assert!(nb.cdf(qy - 1) < q);
        }
        prop_assert!(nb.quantile(nb.cdf(y).min(1.0 - 1e-15)).unwrap() <= y);
        prop_assert!(nb.pmf(y) >= 0.0);
        if y > 0 {
            prop_assert!(nb.cdf(y) >= nb.cdf(y - 1));
        }
    }

    #[test]
    fn negbin_zero_mass_is_pgf_at_zero(a in 0.01f64..100.0, b in 0.01f64..100.0, g in 0.01f64..0.99) {
        let spec = ModelSpec::new(a, b, g).unwrap();
        let nb = FilterState::initial(&spec).one_step_predictive(&spec);
        let via_pgf = pgss::analytics::pgf(0.0, 1, &spec).unwrap();
        prop_assert!((nb.pmf(0) - via_pgf).abs() <= 1e-12);
        prop_assert!((nb.mean() - a / b).abs() <= 1e-12 * (a / b));
    }
}

#[test]
fn zero_series_drives_shape_to_zero() {
    let spec = ModelSpec::new(6.5, 1.2, 0.75).unwrap();
    let mut s = FilterState::initial(&spec);
    for t in 1..=200 {
        s = s.update(0, &spec).unwrap();
        assert!((s.a - 6.5 * 0.75f64.powi(t)).abs() <= 1e-12 * s.a);
        assert!((s.b - b_closed_form(&spec, t as usize)).abs() < 1e-12);
    }
    assert!(s.a > 0.0 && s.a < 1e-20);
}
