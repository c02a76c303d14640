use frontlab_core::grid::{reached_set, Grid, ScalarField};
use frontlab_core::init::{build_initial_datum, DatumOptions, SourceSet};
use frontlab_core::medium::{make_profile, IgnitionProfile};
use frontlab_core::solver::*;
use frontlab_core::speed::compute_c0;

const THETA_STAR: f64 = 0.0625;

fn canonical() -> IgnitionProfile {
    make_profile(0.25, 1.0, 2.0, 0.5).unwrap()
}

fn c0() -> f64 {
    let p = canonical();
    compute_c0(&p).unwrap()
}

fn open_right() -> Boundary {
    Boundary { lo: [Bc::Neumann; 3], hi: [Bc::Dirichlet(0.0); 3] }
}

fn half_line(h: f64, len: f64, smooth: bool) -> (SolverState, f64) {
    let p = canonical();
    let grid = Grid::covering(1, &[-10.0], &[len], h).unwrap();
    let mut o = DatumOptions::new(THETA_STAR, p.theta1());
    if !smooth {
        o = o.step();
    }
    let d = build_initial_datum(&SourceSet::HalfSpace { normal: vec![1.0], offset: 0.0 }, &p, &grid, &o).unwrap();
    let r0 = d.r0;
    (SolverState::new(d.field, GridReaction::homogeneous(p), open_right()).unwrap(), r0)
}

#[test]
fn constants_zero_and_one_are_fixed_points() {
    for v in [0.0, 1.0] {
        let g = Grid::centered(2, 3.0, 0.25).unwrap();
        let mut s = SolverState::new(ScalarField::constant(g, v), GridReaction::homogeneous(canonical()), Boundary::frozen(v)).unwrap();
        run(&mut s, 2.0, &[]).unwrap();
        assert!(s.field.values.iter().all(|&u| u == v));
    }
}

#[test]
fn sub_threshold_data_follow_the_heat_kernel() {
    // below theta0 the reaction is off, so the Gaussian is exact for the continuum problem
    let amp = 0.2;
    let exact = |x: f64, t: f64| amp * (1.0 / (1.0 + t)).sqrt() * (-x * x / (4.0 * (1.0 + t))).exp();
    let g = Grid::centered(1, 25.0, 0.05).unwrap();
    let u0 = ScalarField::from_fn(g.clone(), |x| exact(x[0], 0.0));
    let mut s = SolverState::new(u0, GridReaction::homogeneous(canonical()), Boundary::frozen(0.0)).unwrap();
    run(&mut s, 1.0, &[]).unwrap();
    let err = (0..g.len()).map(|i| (s.field.values[i] - exact(g.point(i)[0], s.t)).abs()).fold(0.0, f64::max);
    assert!(err < 1e-4, "max error {err}");
}

#[test]
fn comparison_principle_on_ordered_data() {
    let p = canonical();
    let g = Grid::centered(2, 8.0, 0.25).unwrap();
    let lo = ScalarField::from_fn(g.clone(), |x| if x[0].abs() < 2.0 && x[1].abs() < 2.0 { 0.8 } else { 0.0 });
    let hi = ScalarField::from_fn(g.clone(), |x| if x[0].abs() < 3.0 && x[1].abs() < 2.5 { 0.9 } else { 0.1 });
    let mut a = SolverState::new(lo, GridReaction::homogeneous(p.clone()), Boundary::frozen(0.0)).unwrap();
    let mut b = SolverState::new(hi, GridReaction::homogeneous(p), Boundary::frozen(0.1)).unwrap();
    let dt = a.dt.min(b.dt);
    a = a.with_dt(dt).unwrap();
    b = b.with_dt(dt).unwrap();
    run(&mut a, 3.0, &[]).unwrap();
    run(&mut b, 3.0, &[]).unwrap();
    assert!(a.field.values.iter().zip(&b.field.values).all(|(u, v)| u <= v));
}

#[test]
fn zero_length_run_takes_no_steps() {
    let (mut s, _) = half_line(0.1, 20.0, false);
    let before = s.field.clone();
    let sum = run(&mut s, 0.0, &[Observer::Snapshots { times: vec![0.0] }]).unwrap();
    assert_eq!(sum.steps, 0);
    assert_eq!(s.field, before);
    assert_eq!(sum.snapshots.len(), 1);
    assert!(run(&mut s, -1.0, &[]).is_err());
}

#[test]
fn oversized_step_is_rejected() {
    let (s, _) = half_line(0.1, 20.0, false);
    let limit = s.cfl_limit();
    assert!(matches!(s.with_dt(1.01 * limit), Err(frontlab_core::Error::Cfl { .. })));
}

#[test]
fn front_slope_lies_between_half_c0_and_c1() {
    let (mut s, _) = half_line(0.1, 120.0, false);
    let sum = run(&mut s, 80.0, &[Observer::Extent { theta: THETA_STAR, every: 10.0 }]).unwrap();
    let e = &sum.extents;
    let (a, b) = (e.iter().find(|x| x.t >= 40.0 - 1e-9).unwrap(), e.last().unwrap());
    let slope = (b.front - a.front) / (b.t - a.t);
    assert!(slope >= c0() / 2.0 && slope <= 2.0, "slope {slope}");
    // the discrete slope tracks c0 to a few percent
    assert!((slope / c0() - 1.0).abs() < 0.03, "slope {slope} vs c0 {}", c0());
}

#[test]
fn subsolution_datum_gives_monotone_solutions() {
    // the smooth half-space datum has a wide support, so the domain must contain it
    let (mut s, r0) = half_line(0.05, 400.0, true);
    assert!(r0 < 380.0);
    let sum = run(&mut s, 10.0, &[Observer::Rates { every: 1.0 }]).unwrap();
    assert!(sum.min_rate >= -1e-6, "min u_t {}", sum.min_rate);
}

#[test]
fn arrival_map_is_zero_on_the_source_and_grows_at_front_speed() {
    let (mut s, r0) = half_line(0.1, 80.0, false);
    let sum = run(&mut s, 120.0, &[Observer::Arrival { threshold: THETA_STAR, interpolate: true, stop_on: vec![] }]).unwrap();
    let map = sum.arrival.unwrap();
    let g = &map.grid;
    for i in 0..g.len() {
        if g.point(i)[0] < 0.0 {
            assert_eq!(map.times[i], 0.0);
        }
    }
    let at = |x: f64| map.get(g.nearest(&[x]).unwrap()).unwrap();
    let slope = (at(60.0) - at(20.0 + r0)) / (40.0 - r0);
    assert!(slope >= 1.0 / (2.0 * 2.0) && slope <= 2.0 / c0(), "slope {slope}");
}

#[test]
fn reached_sets_are_nested_and_propagation_is_finite() {
    let p = canonical();
    let g = Grid::centered(2, 20.0, 0.25).unwrap();
    let src = SourceSet::Ball { center: vec![0.0, 0.0], radius: 4.0 };
    let d = build_initial_datum(&src, &p, &g, &DatumOptions::new(THETA_STAR, p.theta1()).step()).unwrap();
    let mut s = SolverState::new(d.field, GridReaction::homogeneous(p), Boundary::frozen(0.0)).unwrap();
    let times = vec![2.0, 5.0, 10.0];
    let sum = run(&mut s, 10.0, &[Observer::Snapshots { times: times.clone() }]).unwrap();
    let sets: Vec<_> = sum.snapshots.iter().map(|sn| reached_set(&sn.field, THETA_STAR)).collect();
    for w in sets.windows(2) {
        assert!(w[0].is_subset_of(&w[1]));
    }
    let c1 = 2.0 * 2f64.sqrt();
    for (sn, set) in sum.snapshots.iter().zip(&sets) {
        for i in 0..g.len() {
            if set.values[i] {
                let x = g.point(i);
                assert!((x[0] * x[0] + x[1] * x[1]).sqrt() <= 4.0 + c1 * sn.t + 1.0);
            }
        }
    }
}
