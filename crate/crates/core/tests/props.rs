use approx::assert_relative_eq;
use proptest::prelude::*;

use frontlab_core::grid::{reached_set, Grid, ScalarField};
use frontlab_core::hj::{direction_sample, theta_convex, ConvexSet};
use frontlab_core::io::{field_bytes, read_field};
use frontlab_core::medium::*;
use frontlab_core::solver::*;
use frontlab_core::speed::SpeedTable;

fn canonical() -> IgnitionProfile {
    make_profile(0.25, 1.0, 2.0, 0.5).unwrap()
}

fn brute_width(f: &ScalarField, eta: f64, theta: f64) -> f64 {
    let g = &f.grid;
    let upper: Vec<[f64; 3]> = (0..g.len()).filter(|&i| f.values[i] >= theta).map(|i| g.point(i)).collect();
    (0..g.len())
        .filter(|&i| f.values[i] >= eta)
        .map(|i| {
            let p = g.point(i);
            upper.iter().map(|q| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ordered_data_stay_ordered(base in prop::collection::vec(0.0f64..1.0, 48), gap in prop::collection::vec(0.0f64..0.3, 48)) {
        let g = Grid::new(1, &[48], 0.25, &[0.0]).unwrap();
        let lo = ScalarField { grid: g.clone(), values: base.clone() };
        let hi = ScalarField { grid: g.clone(), values: base.iter().zip(&gap).map(|(b, d)| (b + d).min(1.0)).collect() };
        let mut a = SolverState::new(lo, GridReaction::homogeneous(canonical()), Boundary::frozen(0.0)).unwrap();
        let mut b = SolverState::new(hi, GridReaction::homogeneous(canonical()), Boundary::frozen(0.0)).unwrap();
        run(&mut a, 1.0, &[]).unwrap();
        run(&mut b, 1.0, &[]).unwrap();
        for (u, v) in a.field.values.iter().zip(&b.field.values) {
            prop_assert!(u <= v);
            prop_assert!((0.0..=1.0).contains(u));
        }
    }

    #[test]
    fn width_matches_brute_force(vals in prop::collection::vec(0.0f64..1.0, 144)) {
        let g = Grid::new(2, &[12, 12], 0.5, &[0.0, 0.0]).unwrap();
        let f = ScalarField { grid: g, values: vals };
        let (eta, theta) = (0.2, 0.7);
        let w = transition_width(&f, eta, theta);
        if reached_set(&f, theta).count() == 0 {
            prop_assert_eq!(w, Width::Infinite);
        } else {
            assert_relative_eq!(w.value(), brute_width(&f, eta, theta), epsilon = 1e-9);
        }
    }

    #[test]
    fn site_values_are_deterministic_and_in_unit_interval(seed in any::<u64>(), k in prop::collection::vec(-1000i64..1000, 1..=3)) {
        let v = sample_site(seed, &k);
        prop_assert_eq!(v.to_bits(), sample_site(seed, &k).to_bits());
        prop_assert!((0.0..1.0).contains(&v));
    }

    #[test]
    fn shifted_media_are_translates(seed in 0u64..1000, y in -50i64..50, x in -30.0f64..30.0, u in 0.0f64..1.0) {
        let m = RandomMedium::new(MediumSpec::uniform_hat(1, ProfileSpec::default(), 1.5), seed).unwrap();
        let s = m.shifted(&[y]);
        assert_relative_eq!(s.eval_reaction(&[x], u), m.eval_reaction(&[x + y as f64], u), epsilon = 1e-12);
    }

    #[test]
    fn table_bump_stays_within_its_samples(values in prop::collection::vec(0.0f64..3.0, 1..20), r in 0.0f64..40.0) {
        let b = BumpShape::Table { dr: 0.5, values: values.clone() };
        let v = b.eval(r);
        let hi = values.iter().cloned().fold(0.0, f64::max);
        prop_assert!(v >= 0.0 && v <= hi);
    }

    #[test]
    fn field_files_round_trip(vals in prop::collection::vec(-1e6f64..1e6, 30), t in 0.0f64..1e4) {
        let g = Grid::new(2, &[5, 6], 0.125, &[-1.0, 2.0]).unwrap();
        let f = ScalarField { grid: g, values: vals };
        let (back, tb) = read_field(&field_bytes(&f, t)[..]).unwrap();
        prop_assert_eq!(back, f);
        prop_assert_eq!(tb.to_bits(), t.to_bits());
    }

    #[test]
    fn convex_reach_has_the_predicted_support(r in 0.1f64..3.0, c in 0.1f64..2.0, t in 0.0f64..5.0, cx in -2.0f64..2.0) {
        let a = ConvexSet::Ball { center: vec![cx, 0.0], radius: r };
        let set = theta_convex(&a, &SpeedTable::constant(2, 720, c).unwrap(), t).unwrap();
        for e in direction_sample(2).iter().step_by(37) {
            let want = a.support(e) + c * t;
            assert_relative_eq!(set.support(e), want, max_relative = 1e-4);
        }
    }
}
