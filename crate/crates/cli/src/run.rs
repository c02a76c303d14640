//! Dispatch of an [`ExperimentConfig`] to the core and artifact persistence.

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use frontlab_core::grid::{Frame, Grid, Mask, ScalarField};
use frontlab_core::hj::{levelset_evolve, polygon_perimeter, signed_distance, theta_convex, LevelSetOptions};
use frontlab_core::homog::{
    calibrate, exclusivity_probe, perturbation_check, run_homogenization, CalibratedConstants, CalibrationSpec,
    ExclusivitySpec, HomogExperiment, PerturbationSpec, SpeedSource,
};
use frontlab_core::init::{build_initial_datum, DatumOptions, SourceSet};
use frontlab_core::io::{field_bytes, mask_bytes, read_field};
use frontlab_core::medium::{HypothesisParams, RandomMedium};
use frontlab_core::par::{self, Exec};
use frontlab_core::solver::{self, Bc, Boundary, GridReaction, Observer, SolverState};
use frontlab_core::speed::{
    compute_c0, dependence_range, estimate_wulff, fluctuations_from_runs, linearity_from_runs, run_halfspace_ensemble,
    speed_from_runs, EnsembleSpec, MemberRecord, SpeedTable, DEFAULT_DEFECT_EXPONENT,
};

use crate::config::{Command, ConstantsSource, ExperimentConfig, HjMethod, SpeedSpec};
use crate::csv::{num, Csv};
use crate::error::{CliError, CliResult};
use crate::manifest::{write_manifest, ArtifactWriter, AssertionRecord, JobRecord, RunManifest};

/// Relative tolerance of the homogeneous front-speed check against `c0`.
pub const C0_REL_TOL: f64 = 0.02;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Overrides `output_dir` of the config.
    pub out: Option<PathBuf>,
    /// Added to every seed before the config is hashed.
    pub seed_offset: u64,
    /// Thread count of the job pool; the global pool when absent.
    pub workers: Option<usize>,
    /// Failed assertions turn into an error after the manifest is written.
    pub strict: bool,
}

/// Constants file written by `calibrate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsFile {
    pub config_hash: String,
    pub constants: CalibratedConstants,
}

pub fn constants_file_name(hash: &str) -> String {
    format!("constants-{}.json", &hash[..16])
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    hash: String,
    out: ArtifactWriter,
    jobs: Vec<JobRecord>,
    assertions: Vec<AssertionRecord>,
    constants: Option<serde_json::Value>,
}

impl Ctx<'_> {
    fn assert(&mut self, name: &str, passed: bool, detail: String) {
        self.assertions.push(AssertionRecord { name: name.into(), passed, detail });
    }

    fn job(&mut self, name: String, seed: Option<u64>, wall: f64) {
        self.jobs.push(JobRecord { name, seed, status: "ok".into(), wall_secs: wall });
    }

    /// CSV with a leading `# config <hash>` comment.
    fn csv(&mut self, rel: &str, body: String) -> CliResult<()> {
        let text = format!("# config {}\n{body}", self.hash);
        self.out.write(rel, text.as_bytes())
    }

    fn field(&mut self, rel: &str, field: &ScalarField, t: f64, seed: Option<u64>, kind: &str) -> CliResult<()> {
        self.out.write(&format!("{rel}.field"), &field_bytes(field, t))?;
        self.sidecar(rel, field.grid.clone(), t, seed, kind)
    }

    fn mask(&mut self, rel: &str, mask: &Mask, t: f64, kind: &str) -> CliResult<()> {
        self.out.write(&format!("{rel}.field"), &mask_bytes(mask, t))?;
        self.sidecar(rel, mask.grid.clone(), t, None, kind)
    }

    fn sidecar(&mut self, rel: &str, grid: Grid, t: f64, seed: Option<u64>, kind: &str) -> CliResult<()> {
        let meta = FieldMeta { config_hash: self.hash.clone(), kind: kind.into(), seed, t, grid };
        self.out.write_json(&format!("{rel}.json"), &meta)
    }

    fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> CliResult<()> {
        let wrapped = Tagged { config_hash: &self.hash, result: value };
        self.out.write_json(rel, &wrapped)
    }
}

#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    config_hash: &'a str,
    result: &'a T,
}

#[derive(Serialize)]
struct FieldMeta {
    config_hash: String,
    kind: String,
    seed: Option<u64>,
    t: f64,
    grid: Grid,
}

/// Runs the configured command, writes every artifact and the manifest, and returns the manifest.
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> CliResult<RunManifest> {
    match opts.workers {
        #[cfg(feature = "parallel")]
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| CliError::Usage(format!("workers: {e}")))?;
            pool.install(|| run_inner(config, opts))
        }
        _ => run_inner(config, opts),
    }
}

fn run_inner(config: &ExperimentConfig, opts: &RunOptions) -> CliResult<RunManifest> {
    let mut cfg = config.clone();
    cfg.seeds = cfg.seeds.offset(opts.seed_offset);
    cfg.validate()?;
    let root = opts.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let hash = cfg.hash();
    let mut ctx = Ctx {
        cfg: &cfg,
        hash: hash.clone(),
        out: ArtifactWriter::new(&root)?,
        jobs: Vec::new(),
        assertions: Vec::new(),
        constants: None,
    };
    let mut canonical = cfg.clone();
    canonical.output_dir = None;
    ctx.out.write("config.toml", canonical.to_toml()?.as_bytes())?;
    let outcome = dispatch(&mut ctx);
    if let Err(e) = &outcome {
        ctx.jobs.push(JobRecord { name: cfg.command.name().into(), seed: None, status: format!("failed: {e}"), wall_secs: 0.0 });
    }
    let manifest = RunManifest {
        config_hash: hash,
        command: cfg.command.name().into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        jobs: ctx.jobs,
        constants: ctx.constants,
        assertions: ctx.assertions,
        files: ctx.out.into_files(),
    };
    write_manifest(&root, &manifest)?;
    outcome?;
    let failed = manifest.failed_assertions();
    if opts.strict && !failed.is_empty() {
        return Err(CliError::Assertions(failed));
    }
    Ok(manifest)
}

fn dispatch(ctx: &mut Ctx) -> CliResult<()> {
    match &ctx.cfg.command {
        Command::Simulate { .. } => simulate(ctx),
        Command::FrontSpeed { directions, defect_exponent } => {
            front_speed(ctx, directions.clone(), defect_exponent.unwrap_or(DEFAULT_DEFECT_EXPONENT))
        }
        Command::Fluctuations { direction } => fluctuations(ctx, direction.clone()),
        Command::Additivity { direction, pairs_len } => additivity(ctx, direction.clone(), pairs_len.clone()),
        Command::Wulff { source_radius_len, at_time, angles } => wulff(ctx, *source_radius_len, *at_time, *angles),
        Command::Hj { .. } => hj(ctx),
        Command::Homogenize { .. } => homogenize(ctx),
        Command::Exclusivity { .. } => exclusivity(ctx),
        Command::Perturb { .. } => perturb(ctx),
        Command::Calibrate { every_time } => calibrate_cmd(ctx, *every_time),
    }
}

fn first_axis(dim: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[0] = 1.0;
    e
}

fn ensemble_spec(cfg: &ExperimentConfig) -> EnsembleSpec {
    let mut s = EnsembleSpec::new(cfg.medium.clone(), cfg.seeds.seeds(), cfg.grid.spacing_len, cfg.probes_len.clone(), cfg.t_end_time);
    s.solver.dt = cfg.grid.dt_time;
    s.overrides = cfg.tolerances.clone();
    s
}

fn params_for(cfg: &ExperimentConfig, seed: u64) -> CliResult<(RandomMedium, HypothesisParams)> {
    let medium = RandomMedium::new(cfg.medium.clone(), seed)?;
    let params = HypothesisParams::for_medium(&medium, &cfg.tolerances)?;
    Ok((medium, params))
}

fn record_members(ctx: &mut Ctx, tag: &str, runs: &[MemberRecord]) -> CliResult<()> {
    let mut csv = Csv::new(&["seed", "distance", "arrival_time"]);
    for r in runs {
        for (d, t) in r.distances.iter().zip(&r.times) {
            csv.row(&[r.seed.to_string(), num(*d), num(*t)]);
        }
        ctx.job(format!("{tag}/seed-{}", r.seed), Some(r.seed), r.wall_secs);
    }
    ctx.csv(&format!("{tag}/arrivals.csv"), csv.finish())
}

fn simulate(ctx: &mut Ctx) -> CliResult<()> {
    let cfg = ctx.cfg;
    let Command::Simulate { source, datum, domain_lo_len, domain_hi_len, snapshot_times, width_etas, width_every_time } =
        &cfg.command
    else {
        unreachable!()
    };
    let dim = cfg.medium.dim;
    let grid = Grid::covering(dim, domain_lo_len, domain_hi_len, cfg.grid.spacing_len)?;
    let source = resolve_source(source, &grid)?;
    let mut seeds = cfg.seeds.seeds();
    seeds.sort_unstable();
    let inner = if seeds.len() > 1 { Exec::Sequential } else { Exec::Parallel };
    let t_end = cfg.t_end_time;
    let results = par::map(Exec::Parallel, &seeds, |&seed| -> CliResult<_> {
        let clock = Instant::now();
        let (medium, params) = params_for(cfg, seed)?;
        let mut opts = DatumOptions::new(params.theta_star, params.theta1);
        opts.kind = *datum;
        opts.exec = inner;
        let init = build_initial_datum(&source, &medium.profile, &grid, &opts)?;
        let reaction = GridReaction::from_medium(&medium, &grid, &Frame::identity(), inner);
        let zero_flux = Boundary { lo: [Bc::Neumann; 3], hi: [Bc::Neumann; 3] };
        let mut state = SolverState::new(init.field.clone(), reaction, zero_flux)?.with_exec(inner);
        if let Some(dt) = cfg.grid.dt_time {
            state = state.with_dt(dt)?;
        }
        let theta = 1.0 - params.theta_star;
        let mut times: Vec<f64> = snapshot_times.iter().copied().filter(|t| *t > 0.0 && *t < t_end).collect();
        if t_end > 0.0 {
            times.push(t_end);
        }
        let mut obs = vec![
            Observer::Arrival { threshold: theta, interpolate: true, stop_on: Vec::new() },
            Observer::Snapshots { times },
        ];
        if !width_etas.is_empty() && t_end > 0.0 {
            obs.push(Observer::Width { etas: width_etas.clone(), theta, every: *width_every_time });
        }
        let summary = solver::run(&mut state, t_end, &obs)?;
        Ok((seed, init, summary, clock.elapsed().as_secs_f64()))
    });
    for r in results {
        let (seed, init, summary, wall) = r?;
        let dir = format!("seed-{seed}");
        ctx.field(&format!("{dir}/snapshot-0"), &init.field, 0.0, Some(seed), "snapshot")?;
        for (k, s) in summary.snapshots.iter().enumerate() {
            ctx.field(&format!("{dir}/snapshot-{}", k + 1), &s.field, s.t, Some(seed), "snapshot")?;
        }
        if let Some(arr) = &summary.arrival {
            ctx.field(&format!("{dir}/arrival"), &arr.to_field(), summary.t_end, Some(seed), "arrival")?;
        }
        if !summary.widths.is_empty() {
            let mut csv = Csv::new(&["t", "eta", "width"]);
            for w in &summary.widths {
                csv.nums(&[w.t, w.eta, w.width.value()]);
            }
            ctx.csv(&format!("{dir}/widths.csv"), csv.finish())?;
        }
        let record = SimulateRecord {
            seed,
            t_end: summary.t_end,
            steps: summary.steps,
            stopped_early: summary.stopped_early,
            min_rate: summary.min_rate,
            clamp_total: summary.clamp_total,
            r0: init.r0,
            defect_min: init.defect_min,
        };
        ctx.json(&format!("{dir}/summary.json"), &record)?;
        ctx.job(format!("simulate/seed-{seed}"), Some(seed), wall);
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateRecord {
    seed: u64,
    t_end: f64,
    steps: u64,
    stopped_early: bool,
    min_rate: f64,
    clamp_total: f64,
    r0: f64,
    defect_min: f64,
}

fn resolve_source(source: &crate::config::SourceSpec, grid: &Grid) -> CliResult<SourceSet> {
    use crate::config::SourceSpec as S;
    Ok(match source {
        S::Everywhere => SourceSet::Everywhere,
        S::Ball { center, radius } => SourceSet::Ball { center: center.clone(), radius: *radius },
        S::HalfSpace { normal, offset } => SourceSet::HalfSpace { normal: normal.clone(), offset: *offset },
        S::Polytope { normals, offsets } => SourceSet::Polytope { normals: normals.clone(), offsets: offsets.clone() },
        S::Raster { path } => {
            let file = std::fs::File::open(path).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })?;
            let (field, _) = read_field(std::io::BufReader::new(file))?;
            if field.grid != *grid {
                return Err(CliError::Usage("command.source.path: raster grid differs from the simulation grid".into()));
            }
            SourceSet::Raster { mask: Mask { grid: grid.clone(), values: field.values.iter().map(|v| *v > 0.5).collect() } }
        }
    })
}

#[derive(Serialize)]
struct FitRecord {
    direction: Vec<f64>,
    tbar: f64,
    c_star: f64,
    stderr: f64,
    ci95: (f64, f64),
    gamma: f64,
    l_range: (f64, f64),
    residuals: Vec<f64>,
}

fn front_speed(ctx: &mut Ctx, directions: Vec<Vec<f64>>, gamma: f64) -> CliResult<()> {
    let cfg = ctx.cfg;
    let dim = cfg.medium.dim;
    let directions = if directions.is_empty() {
        if dim == 1 {
            vec![vec![1.0], vec![-1.0]]
        } else {
            vec![first_axis(dim)]
        }
    } else {
        directions
    };
    let spec = ensemble_spec(cfg);
    let mut fits = Vec::new();
    for (k, e) in directions.iter().enumerate() {
        let runs = run_halfspace_ensemble(&spec, e)?;
        record_members(ctx, &format!("direction-{k}"), &runs)?;
        let f = speed_from_runs(&runs, e, gamma)?;
        fits.push(f);
    }
    let records: Vec<FitRecord> = fits
        .iter()
        .map(|f| FitRecord {
            direction: f.direction.clone(),
            tbar: f.tbar,
            c_star: f.c_star,
            stderr: f.stderr,
            ci95: f.ci95,
            gamma: f.gamma,
            l_range: f.l_range,
            residuals: f.residuals.clone(),
        })
        .collect();
    ctx.json("fits.json", &records)?;
    if dim <= 2 {
        let table = SpeedTable::from_entries(dim, fits.iter().map(|f| f.entry()).collect())?;
        ctx.out.write("speed_table.csv", table.to_csv().as_bytes())?;
    }
    if cfg.medium.is_homogeneous() {
        let c0 = compute_c0(&RandomMedium::new(cfg.medium.clone(), 0)?.profile)?;
        for f in &fits {
            let rel = (f.c_star / c0 - 1.0).abs();
            ctx.assert("c_star_matches_c0", rel <= C0_REL_TOL, format!("c* = {} vs c0 = {c0} (rel {rel:.4})", f.c_star));
        }
    }
    Ok(())
}

fn fluctuations(ctx: &mut Ctx, direction: Option<Vec<f64>>) -> CliResult<()> {
    let cfg = ctx.cfg;
    let e = direction.unwrap_or_else(|| first_axis(cfg.medium.dim));
    let spec = ensemble_spec(cfg);
    let runs = run_halfspace_ensemble(&spec, &e)?;
    record_members(ctx, "ensemble", &runs)?;
    let (medium, params) = params_for(cfg, spec.sorted_seeds()[0])?;
    let report = fluctuations_from_runs(&runs, dependence_range(&medium), params.beta1)?;
    let mut csv = Csv::new(&["distance", "mean", "sd", "q05", "q25", "q50", "q75", "q95"]);
    for r in &report.rows {
        let mut v = vec![r.distance, r.mean, r.sd];
        v.extend(r.quantiles);
        csv.nums(&v);
    }
    ctx.csv("fluctuations.csv", csv.finish())?;
    ctx.json("fluctuations.json", &report)?;
    if let (Some(x), Some(ci)) = (report.exponent, report.exponent_ci) {
        ctx.assert("fluctuations_sublinear", ci.1 < 1.0, format!("exponent {x}, 95% interval {ci:?}"));
    }
    Ok(())
}

fn additivity(ctx: &mut Ctx, direction: Option<Vec<f64>>, pairs: Vec<(f64, f64)>) -> CliResult<()> {
    let cfg = ctx.cfg;
    let e = direction.unwrap_or_else(|| first_axis(cfg.medium.dim));
    let runs = run_halfspace_ensemble(&ensemble_spec(cfg), &e)?;
    record_members(ctx, "ensemble", &runs)?;
    let report = linearity_from_runs(&runs, &pairs)?;
    let mut csv = Csv::new(&["l", "m", "defect", "stderr"]);
    for r in &report.rows {
        csv.nums(&[r.l, r.m, r.defect, r.stderr]);
    }
    ctx.csv("additivity.csv", csv.finish())?;
    ctx.json("additivity.json", &report)?;
    if let Some(x) = report.exponent {
        ctx.assert("additivity_sublinear", x < 1.0, format!("growth exponent {x}"));
    }
    Ok(())
}

fn wulff(ctx: &mut Ctx, radius: f64, t: f64, angles: usize) -> CliResult<()> {
    let cfg = ctx.cfg;
    let mut spec = ensemble_spec(cfg);
    if spec.probes.is_empty() {
        spec.probes = vec![1.0];
    }
    let clock = Instant::now();
    let est = estimate_wulff(&spec, radius, t, angles)?;
    ctx.job("wulff".into(), None, clock.elapsed().as_secs_f64());
    let mut csv = Csv::new(&["angle", "radius", "support"]);
    for i in 0..est.angles.len() {
        csv.nums(&[est.angles[i], est.radius[i], est.support[i]]);
    }
    ctx.csv("wulff.csv", csv.finish())?;
    ctx.json("wulff.json", &est)
}

fn speed_table(spec: &SpeedSpec, cfg: &ExperimentConfig) -> CliResult<SpeedTable> {
    let dim = cfg.medium.dim;
    let n = match dim {
        2 => frontlab_core::hj::DIRECTIONS_2D,
        3 => 3,
        _ => 2,
    };
    Ok(match spec {
        SpeedSpec::C0 => SpeedTable::constant(dim, n, compute_c0(&RandomMedium::new(cfg.medium.clone(), 0)?.profile)?)?,
        SpeedSpec::Constant { c } => SpeedTable::constant(dim, n, *c)?,
        SpeedSpec::File { path } => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })?;
            SpeedTable::from_csv(dim, &text)?
        }
        SpeedSpec::Lobed { base, amplitude, lobes } => {
            if dim != 2 {
                return Err(CliError::Usage("command.speed: lobed speeds are 2D only".into()));
            }
            let (b, a, k) = (*base, *amplitude, *lobes as f64);
            SpeedTable::sample(2, n, |e| b * (1.0 + a * (k * e[1].atan2(e[0])).cos()))?
        }
    })
}

#[derive(Serialize)]
struct HjRecord {
    t: f64,
    h: f64,
    perimeter: Option<f64>,
    convex_volume: Option<f64>,
    levelset_volume: Option<f64>,
    symmetric_difference: Option<f64>,
    levelset_steps: Option<u64>,
    gradient_warning: Option<bool>,
}

fn hj(ctx: &mut Ctx) -> CliResult<()> {
    let cfg = ctx.cfg;
    let Command::Hj { set, speed, at_time, method, half_width_len } = &cfg.command else { unreachable!() };
    let dim = cfg.medium.dim;
    if set.dim() != dim {
        return Err(CliError::Usage("command.set: dimension differs from medium.dim".into()));
    }
    let table = speed_table(speed, cfg)?;
    let h = cfg.grid.spacing_len;
    let t = *at_time;
    let reach = (0..dim)
        .flat_map(|k| {
            let mut e = vec![0.0; dim];
            e[k] = 1.0;
            let p = set.support(&e);
            e[k] = -1.0;
            [p, set.support(&e)]
        })
        .fold(0.0, f64::max);
    let half = half_width_len.unwrap_or(reach + table.max_speed() * t + 8.0 * h);
    let grid = Grid::centered(dim, half, h)?;
    let mut rec = HjRecord {
        t,
        h,
        perimeter: None,
        convex_volume: None,
        levelset_volume: None,
        symmetric_difference: None,
        levelset_steps: None,
        gradient_warning: None,
    };
    let clock = Instant::now();
    let convex = if matches!(method, HjMethod::Convex | HjMethod::Both) {
        let theta = theta_convex(set, &table, t)?;
        let mask = theta.mask(&grid, &Frame::identity());
        if dim == 2 {
            let poly = theta.polygon();
            rec.perimeter = Some(polygon_perimeter(&poly));
            let mut csv = Csv::new(&["x", "y"]);
            for p in &poly {
                csv.nums(p);
            }
            ctx.csv("theta_polygon.csv", csv.finish())?;
        }
        rec.convex_volume = Some(mask.volume());
        ctx.mask("theta_convex", &mask, t, "theta_convex")?;
        Some(mask)
    } else {
        None
    };
    let level = if matches!(method, HjMethod::LevelSet | HjMethod::Both) {
        let v0 = signed_distance(&set.mask(&grid));
        let r = levelset_evolve(&v0, &table, t, &LevelSetOptions::default())?;
        rec.levelset_steps = Some(r.steps);
        rec.gradient_warning = Some(r.gradient_warning);
        let mask = r.mask();
        rec.levelset_volume = Some(mask.volume());
        ctx.mask("theta_levelset", &mask, t, "theta_levelset")?;
        Some(mask)
    } else {
        None
    };
    ctx.job("hj".into(), None, clock.elapsed().as_secs_f64());
    if let (Some(a), Some(b)) = (&convex, &level) {
        let sd = a.symmetric_difference_volume(b);
        rec.symmetric_difference = Some(sd);
        if let Some(p) = rec.perimeter {
            ctx.assert("hj_consistency", sd <= 3.0 * h * p, format!("symmetric difference {sd} vs 3 h perimeter {}", 3.0 * h * p));
        }
    }
    ctx.json("hj.json", &rec)
}

fn homogenize(ctx: &mut Ctx) -> CliResult<()> {
    let cfg = ctx.cfg;
    let Command::Homogenize { set, speed, epsilons, probe_times, delta_len, amplitude, y_shift_len, psi_margin_len } =
        &cfg.command
    else {
        unreachable!()
    };
    let speed = match speed {
        SpeedSpec::C0 => SpeedSource::C0,
        other => SpeedSource::Table { table: speed_table(other, cfg)? },
    };
    let exp = HomogExperiment {
        a: set.clone(),
        medium: cfg.medium.clone(),
        seeds: cfg.seeds.seeds(),
        epsilons: epsilons.clone(),
        t_probes: probe_times.clone(),
        speed,
        h: cfg.grid.spacing_len,
        delta: *delta_len,
        amplitude: *amplitude,
        y_shift: y_shift_len.clone(),
        psi_margin: *psi_margin_len,
        margin: 0.25,
        exec: Exec::Parallel,
    };
    let clock = Instant::now();
    let report = run_homogenization(&exp)?;
    ctx.job("homogenize".into(), None, clock.elapsed().as_secs_f64());
    let mut csv = Csv::new(&["epsilon", "t", "interior_sup", "exterior_sup", "symdiff", "interior_se", "exterior_se", "symdiff_se", "theta_volume"]);
    for r in &report.rows {
        csv.nums(&[r.epsilon, r.t, r.interior_sup, r.exterior_sup, r.symdiff, r.interior_se, r.exterior_se, r.symdiff_se, r.theta_volume]);
    }
    ctx.csv("homog_errors.csv", csv.finish())?;
    ctx.json("homog_rows.json", &report.rows)?;
    let t_last = probe_times.iter().cloned().fold(0.0, f64::max);
    for (k, (eps, field)) in report.fields.iter().enumerate() {
        ctx.field(&format!("u_eps-{k}"), field, t_last, None, &format!("u_eps epsilon={eps}"))?;
    }
    for (k, (t, mask)) in report.theta_masks.iter().enumerate() {
        ctx.mask(&format!("theta-{k}"), mask, *t, "theta_convex")?;
    }
    for &t in probe_times {
        let rows: Vec<_> = report.rows.iter().filter(|r| r.t == t).collect();
        let mono = rows.windows(2).all(|w| {
            w[1].interior_sup <= w[0].interior_sup + 2.0 * (w[0].interior_se + w[1].interior_se)
                && w[1].exterior_sup <= w[0].exterior_sup + 2.0 * (w[0].exterior_se + w[1].exterior_se)
        });
        ctx.assert("homog_errors_non_increasing", mono, format!("t = {t}"));
    }
    Ok(())
}

fn constants(ctx: &mut Ctx, src: &ConstantsSource) -> CliResult<CalibratedConstants> {
    let k = match &src.constants_file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })?;
            let f: ConstantsFile = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            f.constants
        }
        None => {
            let cfg = ctx.cfg;
            let mut spec = CalibrationSpec::new(
                cfg.medium.profile,
                src.calibration_spacing_len.unwrap_or(cfg.grid.spacing_len),
                src.calibration_t_end_time.unwrap_or(200.0),
            );
            spec.overrides = cfg.tolerances.clone();
            let clock = Instant::now();
            let k = calibrate(&spec)?;
            ctx.job("calibrate".into(), None, clock.elapsed().as_secs_f64());
            k
        }
    };
    ctx.constants = Some(serde_json::to_value(&k).expect("constants serialize"));
    Ok(k)
}

fn exclusivity(ctx: &mut Ctx) -> CliResult<()> {
    let cfg = ctx.cfg;
    let Command::Exclusivity { direction, a, margins, burn_in_time, every_time, c_star, constants: src } = &cfg.command
    else {
        unreachable!()
    };
    let k = constants(ctx, src)?;
    let mut spec: ExclusivitySpec = serde_json::from_value(serde_json::json!({
        "medium": cfg.medium,
        "seeds": cfg.seeds.seeds(),
        "direction": direction.clone().unwrap_or_else(|| first_axis(cfg.medium.dim)),
        "a": a,
        "horizon": cfg.t_end_time,
        "h": cfg.grid.spacing_len,
    }))
    .expect("exclusivity spec");
    if let Some(m) = margins {
        spec.margins = *m;
    }
    if let Some(b) = burn_in_time {
        spec.burn_in = *b;
    }
    if let Some(e) = every_time {
        spec.every = *e;
    }
    spec.c_star = *c_star;
    let clock = Instant::now();
    let rec = exclusivity_probe(&spec, Some(&k))?;
    ctx.job("exclusivity".into(), None, clock.elapsed().as_secs_f64());
    let mut csv = Csv::new(&["seed", "t", "slab_sup"]);
    for (seed, samples) in &rec.per_seed {
        for s in samples {
            csv.row(&[seed.to_string(), num(s.t), num(s.sup)]);
        }
    }
    ctx.csv("exclusivity.csv", csv.finish())?;
    ctx.json("exclusivity.json", &rec)?;
    let bound = a + 0.01;
    ctx.assert("exclusivity_ceiling", rec.max_after_burn_in <= bound, format!("max {} vs {bound}", rec.max_after_burn_in));
    Ok(())
}

fn perturb(ctx: &mut Ctx) -> CliResult<()> {
    let cfg = ctx.cfg;
    let Command::Perturb { eta, t0_time, probe_len, radius_len, modification, constants: src } = &cfg.command else {
        unreachable!()
    };
    let k = constants(ctx, src)?;
    let spec = PerturbationSpec {
        medium: cfg.medium.clone(),
        seeds: cfg.seeds.seeds(),
        eta: *eta,
        t0: *t0_time,
        probe: *probe_len,
        radius: *radius_len,
        kind: *modification,
        h: cfg.grid.spacing_len,
        t_end: cfg.t_end_time,
        exec: Exec::Parallel,
    };
    let clock = Instant::now();
    let rec = perturbation_check(&spec, &k)?;
    ctx.job("perturb".into(), None, clock.elapsed().as_secs_f64());
    let mut csv = Csv::new(&["seed", "t1", "t2", "bound", "holds", "radius", "modified_cells"]);
    for p in &rec.pairs {
        csv.row(&[p.seed.to_string(), num(p.t1), num(p.t2), num(p.bound), p.holds.to_string(), num(p.radius), p.modified_cells.to_string()]);
    }
    ctx.csv("perturb.csv", csv.finish())?;
    ctx.json("perturb.json", &rec)?;
    let held = rec.pairs.iter().filter(|p| p.holds).count();
    ctx.assert("perturbation_inequality", rec.all_hold, format!("{held}/{} pairs", rec.pairs.len()));
    Ok(())
}

fn calibrate_cmd(ctx: &mut Ctx, every: f64) -> CliResult<()> {
    let cfg = ctx.cfg;
    if !cfg.medium.is_homogeneous() {
        return Err(CliError::Usage("medium: calibration needs a homogeneous medium block".into()));
    }
    let mut spec = CalibrationSpec::new(cfg.medium.profile, cfg.grid.spacing_len, cfg.t_end_time);
    spec.every = every;
    spec.overrides = cfg.tolerances.clone();
    let clock = Instant::now();
    let k = calibrate(&spec)?;
    ctx.job("calibrate".into(), None, clock.elapsed().as_secs_f64());
    ctx.assert("mu_star_positive", k.mu_star > 0.0, format!("mu* = {}", k.mu_star));
    ctx.assert("kappa0_within_half_horizon", k.kappa0 <= 0.5 * k.t_end, format!("kappa0 = {}", k.kappa0));
    ctx.constants = Some(serde_json::to_value(&k).expect("constants serialize"));
    let file = ConstantsFile { config_hash: ctx.hash.clone(), constants: k };
    let name = constants_file_name(&ctx.hash);
    ctx.out.write_json(&name, &file)
}
