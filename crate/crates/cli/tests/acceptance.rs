//! Desk-scale acceptance suite. Prints one pass/fail line per criterion and exits
//! nonzero if any fails. Pass criterion numbers as arguments to run a subset.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use frontlab_cli::manifest::read_manifest;
use frontlab_core::grid::Grid;
use frontlab_core::hj::{levelset_evolve, polygon_perimeter, signed_distance, theta_convex, ConvexSet, LevelSetOptions};
use frontlab_core::homog::*;
use frontlab_core::init::{build_initial_datum, subsolution_defect, DatumOptions, SourceSet};
use frontlab_core::medium::*;
use frontlab_core::par::Exec;
use frontlab_core::solver::{self, Boundary, Observer, SolverState};
use frontlab_core::speed::*;

type Outcome = (bool, String);

const C0_REL_TOL: f64 = 0.02;
const DATUM_DEFECT_TOL: f64 = 1e-6;
const SPEED_LOWER: f64 = 0.98;
const SPEED_UPPER: f64 = 1.02;
const SD_SLOPE_MAX: f64 = 0.9;
const WIDTH_LATE_ALLOWANCE: f64 = 1.10;
const HJ_HALVING_RATIO: f64 = 0.6;
const SYMDIFF_FRACTION: f64 = 0.1;
const EXCLUSIVITY_BOUND: f64 = 0.06;

fn canonical() -> IgnitionProfile {
    make_profile(0.25, 1.0, 2.0, 0.5).unwrap()
}

fn c0() -> f64 {
    compute_c0(&canonical()).unwrap()
}

fn random_1d() -> MediumSpec {
    MediumSpec::uniform_hat(1, ProfileSpec::default(), 1.5)
}

fn random_2d() -> MediumSpec {
    MediumSpec::uniform_hat(2, ProfileSpec::default(), 1.5)
}

/// Shooting speed against the slope of a simulated 1D front.
fn traveling_front() -> Outcome {
    let c0 = c0();
    let spec = EnsembleSpec::new(MediumSpec::homogeneous(1, ProfileSpec::default()), (0..8).collect(), 0.05, vec![32.0, 64.0, 128.0], 400.0);
    let fit = estimate_front_speed(&spec, &[1.0]).unwrap();
    let rel = (fit.c_star / c0 - 1.0).abs();
    (rel <= C0_REL_TOL && c0 < 2.0 && fit.c_star < 2.0, format!("c0 = {c0:.6}, simulated slope = {:.6}, relative gap {rel:.2e}", fit.c_star))
}

/// Smooth ball datum: sandwich on every node and discrete defect.
fn initial_datum() -> Outcome {
    let p = canonical();
    let h = 0.05;
    let top = 1.0 - 0.0625;
    let opts = DatumOptions::new(0.0625, p.theta1());
    let mut notes = Vec::new();
    let mut ok = true;
    for dim in [1usize, 2] {
        // scale search on a coarse copy gives R0; the verified grid then covers B_{5 + R0}
        let probe = build_initial_datum(&SourceSet::Ball { center: vec![0.0; dim], radius: 5.0 }, &p, &Grid::centered(dim, 8.0, h).unwrap(), &opts).unwrap();
        let reach = 5.0 + probe.r0 + 2.0 * h;
        // in 2D the datum is radial and the grid is node-aligned, so one quadrant (plus a ghost row) covers every value
        let grid = if dim == 1 {
            Grid::centered(1, reach, h).unwrap()
        } else {
            let n = (reach / h).ceil() as usize + 2;
            Grid::new(2, &[n, n], h, &[-h, -h]).unwrap()
        };
        let mut o = opts.clone();
        o.scale = probe.construction.as_ref().map(|c| c.scale);
        let d = build_initial_datum(&SourceSet::Ball { center: vec![0.0; dim], radius: 5.0 }, &p, &grid, &o).unwrap();
        let mut bad = 0usize;
        for (i, &v) in d.field.values.iter().enumerate() {
            let x = grid.point(i);
            let r = x[..dim].iter().map(|c| c * c).sum::<f64>().sqrt();
            let inside_ok = r >= 5.0 || v == top;
            let outside_ok = r < 5.0 + d.r0 || v == 0.0;
            if !(inside_ok && outside_ok && (0.0..=top).contains(&v)) {
                bad += 1;
            }
        }
        let (defect, _) = subsolution_defect(&d.field, &|u| p.eval(u), Exec::default());
        ok &= bad == 0 && defect >= -DATUM_DEFECT_TOL;
        notes.push(format!("d={dim}: R0 = {:.1}, {} nodes, sandwich violations {bad}, min defect {defect:.2e}", d.r0, grid.len()));
    }
    (ok, notes.join("; "))
}

fn directions8() -> Vec<Vec<f64>> {
    (0..8).map(|k| unit_2d(k as f64 * std::f64::consts::FRAC_PI_4)).collect()
}

/// Speed table over 8 directions of the 2D random medium (shared with the homogenization run).
fn speed_table_2d() -> (SpeedTable, Vec<SpeedFit>) {
    let spec = EnsembleSpec::new(random_2d(), (0..16).collect(), 0.25, vec![16.0, 32.0, 64.0], 250.0);
    estimate_speed_table(&spec, &directions8(), 1.0).unwrap()
}

fn speed_bounds(fits: &[SpeedFit]) -> Outcome {
    let (lo, hi) = (SPEED_LOWER * c0(), SPEED_UPPER * 2.0 * 2f64.sqrt());
    let speeds: Vec<f64> = fits.iter().map(|f| f.c_star).collect();
    let ok = speeds.iter().all(|c| (lo..=hi).contains(c));
    (ok, format!("c* over 8 directions in [{:.4}, {:.4}], allowed [{lo:.4}, {hi:.4}]", speeds.iter().cloned().fold(f64::INFINITY, f64::min), speeds.iter().cloned().fold(0.0, f64::max)))
}

/// Transition widths stay within a single multiple of `1 + |ln eta|` for all times.
fn bounded_width() -> Outcome {
    let etas = [1e-1, 1e-2, 1e-3];
    let spec = EnsembleSpec::new(random_1d(), vec![7], 0.1, vec![170.0], 200.0);
    let setup = halfspace_setup(&spec, &[1.0], 7, Exec::default(), 0.0).unwrap();
    let theta = 1.0 - setup.params.theta_star;
    let mut s = SolverState::new(setup.field, setup.reaction, Boundary::strip(0.0)).unwrap();
    let sum = solver::run(&mut s, 200.0, &[Observer::Width { etas: etas.to_vec(), theta, every: 2.0 }]).unwrap();
    let ratio = |lo: f64, hi: f64| {
        sum.widths.iter().filter(|w| w.t >= lo && w.t <= hi).map(|w| w.width.value() / (1.0 + w.eta.ln().abs())).fold(0.0, f64::max)
    };
    let (early, late) = (ratio(20.0, 110.0), ratio(110.0, 200.0));
    let whole = early.max(late);
    // a width growing with t would push the late window above the early one; window maxima
    // of a stationary front fluctuate by about 5% here, so the allowance is 10%
    let ok = whole.is_finite() && late <= early * WIDTH_LATE_ALLOWANCE;
    (ok, format!("max L/(1+|ln eta|) = {whole:.3} (t in [20,110]: {early:.3}, t in [110,200]: {late:.3})"))
}

fn ensemble_1d() -> Vec<MemberRecord> {
    let spec = EnsembleSpec::new(random_1d(), (0..64).collect(), 0.2, vec![32.0, 64.0, 128.0, 256.0], 800.0);
    run_halfspace_ensemble(&spec, &[1.0]).unwrap()
}

fn fluctuations(runs: &[MemberRecord]) -> Outcome {
    let medium = RandomMedium::new(random_1d(), 0).unwrap();
    let params = HypothesisParams::for_medium(&medium, &Default::default()).unwrap();
    let rep = fluctuations_from_runs(runs, dependence_range(&medium), params.beta1).unwrap();
    let (p, ci) = (rep.exponent.unwrap(), rep.exponent_ci.unwrap());
    let sds: Vec<String> = rep.rows.iter().map(|r| format!("{:.3}", r.sd)).collect();
    (p <= SD_SLOPE_MAX && ci.1 < 1.0, format!("sd[T] slope {p:.3}, 95% CI ({:.3}, {:.3}), sd = [{}]", ci.0, ci.1, sds.join(", ")))
}

fn additivity(runs: &[MemberRecord]) -> Outcome {
    let rep = linearity_from_runs(runs, &[(32.0, 32.0), (64.0, 64.0), (128.0, 128.0)]).unwrap();
    let d: Vec<String> = rep.rows.iter().map(|r| format!("{:.3}", r.defect)).collect();
    match rep.exponent {
        Some(p) => (p < 1.0, format!("defect exponent {p:.3}, defects [{}]", d.join(", "))),
        None => (true, format!("a defect vanishes exactly, defects [{}]", d.join(", "))),
    }
}

fn hj_symdiff(h: f64, table: &SpeedTable) -> (f64, f64) {
    let a = ConvexSet::square([0.0, 0.0], 1.0);
    let t = 0.5;
    let grid = Grid::centered(2, 0.5 + table.max_speed() * t + 0.25, h).unwrap();
    let explicit = theta_convex(&a, table, t).unwrap();
    let ls = levelset_evolve(&signed_distance(&a.mask(&grid)), table, t, &LevelSetOptions::default()).unwrap();
    let sd = ls.mask().symmetric_difference_volume(&explicit.mask(&grid, &Default::default()));
    (sd, 3.0 * h * polygon_perimeter(&explicit.polygon()))
}

fn hj_consistency() -> Outcome {
    // two speeds, 1 along x and 1/2 along y, joined as the support function of an ellipse;
    // a piecewise-constant table is not a support function and the two methods then target different sets
    let table = SpeedTable::sample(2, 720, |e| (e[0] * e[0] + 0.25 * e[1] * e[1]).sqrt()).unwrap();
    let (sd1, bound) = hj_symdiff(1.0 / 128.0, &table);
    let (sd2, _) = hj_symdiff(1.0 / 256.0, &table);
    let ratio = sd2 / sd1;
    (sd1 <= bound && ratio <= HJ_HALVING_RATIO, format!("symdiff {sd1:.4} at h=1/128 (bound {bound:.4}), {sd2:.4} at h=1/256, ratio {ratio:.3}"))
}

fn homogenization(table: &SpeedTable) -> Outcome {
    let exp = HomogExperiment {
        a: ConvexSet::Ball { center: vec![0.0, 0.0], radius: 1.0 },
        medium: random_2d(),
        seeds: (0..8).collect(),
        epsilons: vec![0.125, 0.0625, 0.03125],
        t_probes: vec![1.0],
        speed: SpeedSource::Table { table: table.clone() },
        h: 0.25,
        delta: 0.1,
        amplitude: 1.0,
        y_shift: vec![],
        psi_margin: 0.0,
        margin: 0.25,
        exec: Exec::default(),
    };
    let rep = run_homogenization(&exp).unwrap();
    let r = &rep.rows;
    let nonincreasing = |f: fn(&HomogRow) -> f64| r.windows(2).all(|w| f(&w[1]) <= f(&w[0]));
    let last = r.last().unwrap();
    let ok = nonincreasing(|x| x.interior_sup) && nonincreasing(|x| x.exterior_sup) && last.symdiff <= SYMDIFF_FRACTION * last.theta_volume;
    let fmt = |f: fn(&HomogRow) -> f64| r.iter().map(|x| format!("{:.3}", f(x))).collect::<Vec<_>>().join(" ");
    (
        ok,
        format!(
            "interior [{}], exterior [{}], symdiff [{}] vs 0.1|Theta| = {:.3}",
            fmt(|x| x.interior_sup),
            fmt(|x| x.exterior_sup),
            fmt(|x| x.symdiff),
            SYMDIFF_FRACTION * last.theta_volume
        ),
    )
}

fn exclusivity() -> Outcome {
    let spec = ExclusivitySpec {
        medium: MediumSpec::homogeneous(1, ProfileSpec::default()),
        seeds: vec![0],
        direction: vec![1.0],
        a: 0.05,
        horizon: 300.0,
        margins: (0.25, 0.75),
        burn_in: 100.0,
        every: 5.0,
        h: 0.1,
        c_star: None,
        exec: Exec::default(),
    };
    let r = exclusivity_probe(&spec, None).unwrap();
    (r.max_after_burn_in <= EXCLUSIVITY_BOUND, format!("max slab sup past burn-in {:.6} (bound {EXCLUSIVITY_BOUND})", r.max_after_burn_in))
}

fn perturbation() -> Outcome {
    let k = calibrate(&CalibrationSpec::new(ProfileSpec::default(), 0.1, 200.0)).unwrap();
    let mut notes = vec![format!("M* = {:.0}, slack {:.0}", k.m_star, 2.0 * k.kappa_star + k.kappa0)];
    let mut ok = true;
    for kind in [PerturbationKind::LevelSet, PerturbationKind::Uniform] {
        let spec = PerturbationSpec {
            medium: random_1d(),
            seeds: (0..20).collect(),
            eta: 0.02,
            t0: 100.0,
            probe: 128.0,
            radius: None,
            kind,
            h: 0.1,
            t_end: 400.0,
            exec: Exec::default(),
        };
        let r = perturbation_check(&spec, &k).unwrap();
        let held = r.pairs.iter().filter(|p| p.holds).count();
        let touched = r.pairs.iter().filter(|p| p.modified_cells > 0).count();
        ok &= r.all_hold && touched == r.pairs.len();
        notes.push(format!("{kind:?}: {held}/{} hold, {touched} pairs modified", r.pairs.len()));
    }
    (ok, notes.join("; "))
}

const DETERMINISM_CONFIG: &str = r#"
t_end_time = 200.0
probes_len = [16.0, 32.0, 64.0]
seeds = { start = 0, count = 8 }

[command]
kind = "front-speed"
directions = [[1.0]]

[medium]
dim = 1
bump = { kind = "hat", radius = 1.5 }
law = { kind = "uniform", max = 1.0 }

[grid]
spacing_len = 0.2
"#;

fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("frontlab-acceptance-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("front_speed.toml");
    std::fs::write(&cfg, DETERMINISM_CONFIG).unwrap();
    let run = |out: &Path, workers: &str| {
        let st = Command::new(env!("CARGO_BIN_EXE_frontlab"))
            .args(["front-speed", "--workers", workers, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .output()
            .unwrap();
        assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
        read_manifest(out).unwrap()
    };
    let a = run(&dir.join("a"), "1");
    let b = run(&dir.join("b"), "2");
    let same = a.files == b.files && a.config_hash == b.config_hash;
    let _ = std::fs::remove_dir_all(&dir);
    (same, format!("{} artifacts, identical digests across reruns: {same}", a.files.len()))
}

fn main() -> ExitCode {
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let want = |n: usize| only.is_empty() || only.contains(&n);
    let mut failed = Vec::new();
    let mut report = |n: usize, title: &str, f: &mut dyn FnMut() -> Outcome| {
        if !want(n) {
            return;
        }
        let start = Instant::now();
        let (ok, detail) = f();
        println!("criterion {n:>2} [{}] {title}: {detail} ({:.0} s)", if ok { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
        if !ok {
            failed.push(n);
        }
    };
    report(1, "traveling-front oracle", &mut traveling_front);
    report(2, "initial-datum contract", &mut initial_datum);
    let needs_table = want(3) || want(8);
    let (table, fits) = if needs_table { speed_table_2d() } else { (SpeedTable::constant(2, 8, 1.0).unwrap(), vec![]) };
    report(3, "speed bounds", &mut || speed_bounds(&fits));
    report(4, "bounded transition width", &mut bounded_width);
    let runs = if want(5) || want(6) { ensemble_1d() } else { vec![] };
    report(5, "fluctuation sublinearity", &mut || fluctuations(&runs));
    report(6, "additivity defect", &mut || additivity(&runs));
    report(7, "HJ consistency", &mut hj_consistency);
    report(8, "homogenization proxy", &mut || homogenization(&table));
    report(9, "exclusivity probe", &mut exclusivity);
    report(10, "perturbation inequality", &mut perturbation);
    report(11, "determinism", &mut determinism);
    if failed.is_empty() {
        println!("acceptance: all selected criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
