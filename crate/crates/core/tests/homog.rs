use frontlab_core::grid::{Grid, Mask, ScalarField};
use frontlab_core::hj::ConvexSet;
use frontlab_core::homog::*;
use frontlab_core::medium::{MediumSpec, ProfileSpec};
use frontlab_core::par::Exec;
use frontlab_core::solver::Snapshot;
use frontlab_core::Error;

fn snapshots() -> Vec<Snapshot> {
    let g = Grid::centered(2, 4.0, 0.5).unwrap();
    [2.0, 4.0]
        .iter()
        .map(|&t| Snapshot { t, field: ScalarField::from_fn(g.clone(), |x| (x[0] + 2.0 * x[1] + t).sin()) })
        .collect()
}

#[test]
fn rescale_at_unit_epsilon_is_the_identity() {
    let s = snapshots();
    let r = rescale(&s, 1.0, &[2.0, 4.0], 1).unwrap();
    assert_eq!(r, s);
}

#[test]
fn rescale_reports_every_missing_time() {
    match rescale(&snapshots(), 0.5, &[1.0, 3.0, 5.0], 1) {
        Err(Error::MissingSnapshots(m)) => assert_eq!(m, vec![6.0, 10.0]),
        other => panic!("expected missing snapshots, got {other:?}"),
    }
}

#[test]
fn strided_rescale_picks_every_other_node() {
    let s = snapshots();
    let full = rescale(&s, 0.5, &[1.0], 1).unwrap();
    let half = rescale(&s, 0.5, &[1.0], 2).unwrap();
    let (gf, gh) = (&full[0].field.grid, &half[0].field.grid);
    assert_eq!(gh.h, 2.0 * gf.h);
    for j in 0..gh.shape[1] {
        for i in 0..gh.shape[0] {
            assert_eq!(half[0].field.values[gh.index(i, j, 0)], full[0].field.values[gf.index(2 * i, 2 * j, 0)]);
        }
    }
    assert_eq!(gf.h, 0.25);
}

#[test]
fn indicator_of_theta_has_zero_errors() {
    let g = Grid::centered(2, 3.0, 0.05).unwrap();
    let theta = ConvexSet::Ball { center: vec![0.0, 0.0], radius: 1.5 }.mask(&g);
    let u = theta.to_field();
    let e = homog_error(&u, &theta, 1.0, 0.1).unwrap();
    assert_eq!((e.interior_sup, e.exterior_sup, e.symdiff), (0.0, 0.0, 0.0));
    assert!(!e.degenerate);
    assert!((e.theta_volume - std::f64::consts::PI * 2.25).abs() < 0.05);
}

#[test]
fn mismatched_grids_are_rejected() {
    let g = Grid::centered(2, 3.0, 0.1).unwrap();
    let other = Grid::centered(2, 3.0, 0.2).unwrap();
    let m = Mask { grid: other.clone(), values: vec![false; other.len()] };
    assert!(homog_error(&ScalarField::constant(g, 0.0), &m, 1.0, 0.1).is_err());
}

#[test]
fn slab_sup_decreases_as_the_slab_moves_ahead() {
    let g = Grid::covering(1, &[0.0], &[100.0], 0.1).unwrap();
    let f = ScalarField::from_fn(g.clone(), |x| (-(x[0] - 20.0).max(0.0)).exp());
    let dist = |i: usize| g.point(i)[0];
    let mut prev = f64::INFINITY;
    for k in 0..10 {
        let m1 = 0.05 * k as f64;
        let s = slab_sup(&f, dist, 0.5, 40.0, m1, m1 + 0.5);
        assert!(s <= prev);
        prev = s;
    }
}

fn exclusivity(a: f64) -> ExclusivitySpec {
    ExclusivitySpec {
        medium: MediumSpec::homogeneous(1, ProfileSpec::default()),
        seeds: vec![1],
        direction: vec![1.0],
        a,
        horizon: 150.0,
        margins: (0.25, 0.75),
        burn_in: 100.0,
        every: 5.0,
        h: 0.1,
        c_star: None,
        exec: Exec::default(),
    }
}

#[test]
fn exclusivity_at_zero_background_is_small() {
    let r = exclusivity_probe(&exclusivity(0.0), None).unwrap();
    assert!(r.max_after_burn_in <= 0.01, "{}", r.max_after_burn_in);
    assert!(r.in_proven_range.is_none());
}

#[test]
fn exclusivity_rejects_out_of_range_levels() {
    assert!(matches!(exclusivity_probe(&exclusivity(0.5), None), Err(Error::Config(_))));
    let mut s = exclusivity(0.0);
    s.direction = vec![0.6];
    assert!(exclusivity_probe(&s, None).is_err());
}

fn constants() -> CalibratedConstants {
    CalibratedConstants {
        mu_star: 1e-3,
        kappa_star: 18.0,
        kappa0: 0.0,
        m_star: 2000.0,
        d2: 2.0,
        c0: 0.583413,
        theta_star: 0.0625,
        h: 0.1,
        t_end: 200.0,
        min_rate: 0.0,
    }
}

#[test]
fn zero_perturbation_leaves_arrival_times_unchanged() {
    for kind in [PerturbationKind::LevelSet, PerturbationKind::Uniform] {
        let spec = PerturbationSpec {
            medium: MediumSpec::homogeneous(1, ProfileSpec::default()),
            seeds: vec![1, 2],
            eta: 0.0,
            t0: 0.0,
            probe: 20.0,
            radius: None,
            kind,
            h: 0.1,
            t_end: 150.0,
            exec: Exec::default(),
        };
        let r = perturbation_check(&spec, &constants()).unwrap();
        for p in &r.pairs {
            assert_eq!(p.t1, p.t2);
            // the uniform variant counts the cells in its ball even when the offset is zero
            if kind == PerturbationKind::LevelSet {
                assert_eq!(p.modified_cells, 0);
            }
        }
        assert!(r.all_hold);
        assert_eq!(r.slack, 36.0);
    }
}

#[test]
fn calibration_is_stable_under_refinement() {
    let coarse = calibrate(&CalibrationSpec::new(ProfileSpec::default(), 0.1, 120.0)).unwrap();
    let fine = calibrate(&CalibrationSpec::new(ProfileSpec::default(), 0.05, 120.0)).unwrap();
    assert!(coarse.mu_star > 0.0);
    assert!((fine.mu_star / coarse.mu_star - 1.0).abs() <= 0.1, "{} vs {}", fine.mu_star, coarse.mu_star);
    assert!((coarse.m_star - 2.0 / coarse.mu_star).abs() < 1e-9 * coarse.m_star);
    assert_eq!(coarse.d2, 2.0);
}

#[test]
fn homogenization_errors_shrink_with_epsilon_in_one_dimension() {
    let exp = HomogExperiment {
        a: ConvexSet::Ball { center: vec![0.0], radius: 1.0 },
        medium: MediumSpec::homogeneous(1, ProfileSpec::default()),
        seeds: vec![1],
        epsilons: vec![0.25, 0.125, 0.0625],
        t_probes: vec![1.0],
        speed: SpeedSource::C0,
        h: 0.1,
        delta: 0.1,
        amplitude: 1.0,
        y_shift: vec![],
        psi_margin: 0.0,
        margin: 0.25,
        exec: Exec::default(),
    };
    let rep = run_homogenization(&exp).unwrap();
    assert_eq!(rep.rows.len(), 3);
    let sd: Vec<f64> = rep.rows.iter().map(|r| r.symdiff).collect();
    assert!(sd[2] < sd[0], "symdiff {sd:?}");
    // Theta_1 is the segment of half-length 1 + c0
    assert!((rep.rows[0].theta_volume - 2.0 * (1.0 + 0.583413)).abs() < 0.1);
}
