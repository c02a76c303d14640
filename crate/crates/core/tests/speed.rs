use frontlab_core::medium::*;
use frontlab_core::speed::*;

fn canonical() -> IgnitionProfile {
    make_profile(0.25, 1.0, 2.0, 0.5).unwrap()
}

#[test]
fn c0_is_below_the_kpp_bound_and_matches_the_canonical_value() {
    let c0 = compute_c0(&canonical()).unwrap();
    assert!(c0 > 0.0 && c0 < 2.0);
    assert!((c0 - 0.583413).abs() < 1e-4, "c0 = {c0}");
}

#[test]
fn c0_matches_the_closed_form_for_a_linear_cap() {
    // f = k (1 - u) on (theta, 1) gives c = (1 - theta) sqrt(k / theta) by matching exponentials
    let (theta, k) = (0.25, 0.5);
    let c = compute_c0_with(|u| if u > theta && u < 1.0 { k * (1.0 - u) } else { 0.0 }, theta, 1.0).unwrap();
    let exact = (1.0 - theta) * (k / theta).sqrt();
    assert!((c / exact - 1.0).abs() < 1e-3, "{c} vs {exact}");
}

#[test]
fn c0_scales_like_the_square_root_of_the_reaction() {
    let p = canonical();
    let c = compute_c0(&p).unwrap();
    let c4 = compute_c0_with(|u| 4.0 * p.eval(u), p.theta0, 4.0 * p.m).unwrap();
    assert!((c4 / c - 2.0).abs() < 1e-3, "ratio {}", c4 / c);
}

#[test]
fn homogeneous_front_speed_is_c0_with_zero_spread() {
    let medium = MediumSpec::homogeneous(1, ProfileSpec::default());
    let spec = EnsembleSpec::new(medium, (1..=8).collect(), 0.1, vec![20.0, 40.0, 60.0, 80.0], 300.0);
    let fit = estimate_front_speed(&spec, &[1.0]).unwrap();
    let c0 = compute_c0(&canonical()).unwrap();
    assert!((fit.c_star / c0 - 1.0).abs() < 0.02, "c* = {} vs c0 = {c0}", fit.c_star);
    for m in &fit.members[1..] {
        assert_eq!(m.times, fit.members[0].times);
    }
}

#[test]
fn truncated_media_are_slower_seed_by_seed() {
    let spec_of = |range| {
        let mut m = MediumSpec::uniform_hat(1, ProfileSpec::default(), 1.5);
        m.bump = BumpShape::Power { core: 1.0, decay: 3.0 };
        m.window_max = 16.0;
        m.range = range;
        EnsembleSpec::new(m, vec![5, 6], 0.1, vec![10.0, 20.0, 30.0], 200.0)
    };
    let full = run_halfspace_ensemble(&spec_of(None), &[1.0]).unwrap();
    let cut = run_halfspace_ensemble(&spec_of(Some(6.0)), &[1.0]).unwrap();
    for (a, b) in full.iter().zip(&cut) {
        for (ta, tb) in a.times.iter().zip(&b.times) {
            assert!(tb >= ta, "truncated arrival {tb} precedes full {ta}");
        }
    }
}

#[test]
fn ensemble_reports_do_not_depend_on_seed_order() {
    let medium = MediumSpec::uniform_hat(1, ProfileSpec::default(), 1.5);
    let a = EnsembleSpec::new(medium.clone(), vec![8, 3, 1, 7, 2, 6, 4, 5], 0.1, vec![10.0, 20.0, 40.0], 120.0);
    let b = EnsembleSpec::new(medium, (1..=8).collect(), 0.1, vec![10.0, 20.0, 40.0], 120.0);
    let fa = estimate_front_speed(&a, &[1.0]).unwrap();
    let fb = estimate_front_speed(&b, &[1.0]).unwrap();
    assert_eq!(fa.c_star.to_bits(), fb.c_star.to_bits());
}

#[test]
fn duplicate_seeds_are_rejected() {
    let spec = EnsembleSpec::new(MediumSpec::homogeneous(1, ProfileSpec::default()), vec![1, 1], 0.1, vec![10.0], 50.0);
    assert!(run_halfspace_ensemble(&spec, &[1.0]).is_err());
}

#[test]
fn speed_table_interpolates_between_samples() {
    let t = SpeedTable::sample(2, 8, |e| 1.0 + 0.5 * e[0] * e[0]).unwrap();
    for k in 0..8 {
        let e = unit_2d(k as f64 * std::f64::consts::PI / 4.0);
        assert!((t.eval(&e) - (1.0 + 0.5 * e[0] * e[0])).abs() < 1e-12);
    }
    let mid = t.eval_angle(std::f64::consts::PI / 8.0);
    assert!(mid >= t.min_speed() && mid <= t.max_speed());
    let back = SpeedTable::from_csv(2, &t.to_csv()).unwrap();
    assert!((back.eval(&unit_2d(0.3)) - t.eval(&unit_2d(0.3))).abs() < 1e-9);
}
