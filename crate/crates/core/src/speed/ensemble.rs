use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::grid::{reached_set, Frame, Grid};
use crate::init::{build_initial_datum, halfspace_scale, support_inflation, DatumKind, DatumOptions, SourceSet, INFLATION_N, MOLLIFIER_A};
use crate::medium::{HypothesisOverrides, HypothesisParams, MediumSpec, RandomMedium};
use crate::par::{self, Exec};
use crate::solver::{self, Boundary, GridReaction, Observer, Snapshot, SolverState};

/// Largest integer component searched for a lattice direction.
const LATTICE_SEARCH: i64 = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub h: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "yes")]
    pub interpolate: bool,
}

fn yes() -> bool {
    true
}

impl SolverSettings {
    pub fn new(h: f64) -> Self {
        SolverSettings { h, dt: None, interpolate: true }
    }
}

/// Seeds, medium, solver and probe layout shared by every member of an ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub medium: MediumSpec,
    pub seeds: Vec<u64>,
    pub solver: SolverSettings,
    /// Probe distances ahead of the launch line (the outer edge of the datum support).
    pub probes: Vec<f64>,
    pub t_end: f64,
    #[serde(default = "step_kind")]
    pub datum: DatumKind,
    /// Minimal transverse period of half-space strips.
    #[serde(default = "default_period")]
    pub transverse_period: f64,
    /// Strip length kept behind the fully ignited zone.
    #[serde(default = "default_behind")]
    pub behind: f64,
    /// Strip length kept ahead of the furthest probe.
    #[serde(default = "default_ahead")]
    pub ahead: f64,
    #[serde(default)]
    pub overrides: HypothesisOverrides,
    #[serde(skip)]
    pub exec: Exec,
}

fn step_kind() -> DatumKind {
    DatumKind::Step
}
fn default_period() -> f64 {
    8.0
}
fn default_behind() -> f64 {
    10.0
}
fn default_ahead() -> f64 {
    30.0
}

impl EnsembleSpec {
    pub fn new(medium: MediumSpec, seeds: Vec<u64>, h: f64, probes: Vec<f64>, t_end: f64) -> Self {
        EnsembleSpec {
            medium,
            seeds,
            solver: SolverSettings::new(h),
            probes,
            t_end,
            datum: DatumKind::Step,
            transverse_period: default_period(),
            behind: default_behind(),
            ahead: default_ahead(),
            overrides: HypothesisOverrides::default(),
            exec: Exec::default(),
        }
    }

    fn check(&self) -> Result<()> {
        let mut s = self.seeds.clone();
        s.sort_unstable();
        if s.windows(2).any(|w| w[0] == w[1]) {
            return config("ensemble seeds must be pairwise distinct");
        }
        if s.is_empty() {
            return config("ensemble needs at least one seed");
        }
        if self.probes.is_empty() || self.probes.iter().any(|p| !(*p > 0.0)) {
            return config("probe distances must be positive and nonempty");
        }
        if !(self.t_end > 0.0) || !(self.solver.h > 0.0) {
            return config("t_end and h must be positive");
        }
        Ok(())
    }

    /// Seeds in ascending order, the aggregation order of every report.
    pub fn sorted_seeds(&self) -> Vec<u64> {
        let mut s = self.seeds.clone();
        s.sort_unstable();
        s
    }
}

/// Rotated frame and transverse periodicity of a half-space strip.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripLayout {
    pub frame: Frame,
    /// Transverse period (physical length), 0 in 1D.
    pub period: f64,
    /// Lattice vectors spanning the transverse period; empty if the direction is not rational.
    pub lattice: Vec<Vec<i64>>,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Frame whose first axis is `e`, with a lattice-compatible transverse period of at least `min_period`.
pub fn strip_layout(e: &[f64], min_period: f64) -> Result<StripLayout> {
    let d = e.len();
    let norm = e.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(1..=3).contains(&d) || (norm - 1.0).abs() > 1e-9 {
        return config(format!("direction {e:?} must be a unit vector in dimension 1..3"));
    }
    match d {
        1 => {
            let mut frame = Frame::identity();
            frame.axes[0] = [e[0].signum(), 0.0, 0.0];
            Ok(StripLayout { frame, period: 0.0, lattice: Vec::new() })
        }
        2 => {
            let angle = e[1].atan2(e[0]);
            let frame = Frame::rotation_2d(angle);
            let mut best: Option<(i64, i64)> = None;
            for p in -LATTICE_SEARCH..=LATTICE_SEARCH {
                for q in -LATTICE_SEARCH..=LATTICE_SEARCH {
                    if (p == 0 && q == 0) || gcd(p, q) != 1 {
                        continue;
                    }
                    let n = ((p * p + q * q) as f64).sqrt();
                    let cross = (p as f64 * e[1] - q as f64 * e[0]) / n;
                    let dot = (p as f64 * e[0] + q as f64 * e[1]) / n;
                    if cross.abs() < 1e-9 && dot > 0.0 && best.map_or(true, |(a, b)| p * p + q * q < a * a + b * b) {
                        best = Some((p, q));
                    }
                }
            }
            match best {
                Some((p, q)) => {
                    let n = ((p * p + q * q) as f64).sqrt();
                    let k = (min_period / n).ceil().max(1.0) as i64;
                    Ok(StripLayout { frame, period: k as f64 * n, lattice: vec![vec![-q * k, p * k]] })
                }
                None => {
                    log::warn!("direction {e:?} is not a lattice direction; transverse period {min_period} breaks stationarity");
                    Ok(StripLayout { frame, period: min_period, lattice: Vec::new() })
                }
            }
        }
        _ => {
            let axis = e.iter().position(|v| (v.abs() - 1.0).abs() < 1e-12);
            let Some(axis) = axis else {
                return config("3D half-space runs support axis directions only");
            };
            let others: Vec<usize> = (0..3).filter(|&a| a != axis).collect();
            let mut frame = Frame::identity();
            frame.axes = [[0.0; 3]; 3];
            frame.axes[0][axis] = e[axis];
            frame.axes[1][others[0]] = 1.0;
            frame.axes[2][others[1]] = 1.0;
            let k = min_period.ceil().max(1.0) as i64;
            let lattice = others
                .iter()
                .map(|&a| {
                    let mut v = vec![0; 3];
                    v[a] = k;
                    v
                })
                .collect();
            Ok(StripLayout { frame, period: k as f64, lattice })
        }
    }
}

/// Arrival record of one half-space realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberRecord {
    pub seed: u64,
    /// Probe distances actually used (snapped to grid nodes).
    pub distances: Vec<f64>,
    /// Arrival times, `inf` where unreached.
    pub times: Vec<f64>,
    pub steps: u64,
    pub wall_secs: f64,
    pub r0: f64,
    pub h: f64,
    pub clamp_total: f64,
}

impl MemberRecord {
    pub fn reached_all(&self) -> bool {
        self.times.iter().all(|t| t.is_finite())
    }
}

/// Half-space run in direction `e` for one seed.
pub fn run_halfspace_member(spec: &EnsembleSpec, e: &[f64], seed: u64, exec: Exec) -> Result<MemberRecord> {
    run_halfspace_member_with(spec, e, seed, exec, 0.0, &|_, _| {})
}

/// Grid, datum, reaction and probe layout of one half-space realization.
#[derive(Clone, Debug)]
pub struct HalfSpaceSetup {
    pub grid: Grid,
    pub frame: Frame,
    pub field: crate::grid::ScalarField,
    pub reaction: GridReaction,
    pub params: HypothesisParams,
    pub medium: RandomMedium,
    /// Node indices of the probes on the first transverse row.
    pub probe_nodes: Vec<usize>,
    pub distances: Vec<f64>,
    pub r0: f64,
    pub h: f64,
}

impl HalfSpaceSetup {
    /// Physical signed distance from the launch line of node `idx`.
    pub fn distance_of(&self, idx: usize) -> f64 {
        self.grid.point(idx)[0] - self.r0
    }
}

/// Build the strip for direction `e`: datum behind the launch line, the given background ahead.
pub fn halfspace_setup(spec: &EnsembleSpec, e: &[f64], seed: u64, exec: Exec, a_shift: f64) -> Result<HalfSpaceSetup> {
    let dim = spec.medium.dim;
    if e.len() != dim {
        return config(format!("direction has {} components, medium is {dim}-dimensional", e.len()));
    }
    let layout = strip_layout(e, spec.transverse_period)?;
    let mut medium = RandomMedium::new(spec.medium.clone(), seed)?;
    if !layout.lattice.is_empty() {
        medium = medium.with_site_periods(&layout.lattice)?;
    }
    let params = HypothesisParams::for_medium(&medium, &spec.overrides)?;
    let mut h = spec.solver.h;
    let mut n_trans = 1usize;
    if dim > 1 {
        n_trans = ((layout.period / h).round() as usize).max(1);
        h = layout.period / n_trans as f64;
    }
    let mut opts = DatumOptions::new(params.theta_star, params.theta1);
    opts.kind = spec.datum;
    opts.frame = layout.frame.clone();
    opts.exec = exec;
    opts.a_shift = a_shift;
    let (scale, r0) = match spec.datum {
        DatumKind::Step => (None, 0.0),
        DatumKind::Smooth => {
            let r = halfspace_scale(&medium.profile, &opts, h)?;
            (Some(r), support_inflation(r))
        }
    };
    let full = scale.map_or(0.0, |r| (INFLATION_N - MOLLIFIER_A) * r);
    let lo = full - spec.behind;
    let far = spec.probes.iter().cloned().fold(0.0, f64::max);
    let back = ((r0 - lo) / h).ceil() as usize;
    let n0 = back + ((far + spec.ahead) / h).ceil() as usize + 1;
    let origin0 = r0 - back as f64 * h;
    let mut shape = vec![n0];
    let mut origin = vec![origin0];
    for _ in 1..dim {
        shape.push(n_trans);
        origin.push(0.0);
    }
    let grid = Grid::new(dim, &shape, h, &origin)?;
    let source = SourceSet::HalfSpace { normal: e.to_vec(), offset: 0.0 };
    opts.scale = scale;
    let datum = build_initial_datum(&source, &medium.profile, &grid, &opts)?;
    let reaction = GridReaction::from_medium(&medium, &grid, &layout.frame, exec);
    let probe_nodes: Vec<usize> = spec.probes.iter().map(|l| back + (l / h).round() as usize).collect();
    let distances: Vec<f64> = probe_nodes.iter().map(|&i| (i - back) as f64 * h).collect();
    Ok(HalfSpaceSetup {
        grid,
        frame: layout.frame,
        field: datum.field,
        reaction,
        params,
        medium,
        probe_nodes,
        distances,
        r0,
        h,
    })
}

/// Half-space member with an a-shifted datum and a reaction edit applied before the run.
pub fn run_halfspace_member_with(
    spec: &EnsembleSpec,
    e: &[f64],
    seed: u64,
    exec: Exec,
    a_shift: f64,
    edit: &(dyn Fn(&mut GridReaction, &Grid) + Sync),
) -> Result<MemberRecord> {
    let started = Instant::now();
    let mut setup = halfspace_setup(spec, e, seed, exec, a_shift)?;
    edit(&mut setup.reaction, &setup.grid);
    let mut state = SolverState::new(setup.field, setup.reaction, Boundary::strip(a_shift))?.with_exec(exec);
    if let Some(dt) = spec.solver.dt {
        state = state.with_dt(dt)?;
    }
    let threshold = 1.0 - setup.params.theta_star;
    let observers =
        [Observer::Arrival { threshold, interpolate: spec.solver.interpolate, stop_on: setup.probe_nodes.clone() }];
    let summary = solver::run(&mut state, spec.t_end, &observers)?;
    let arrival = summary.arrival.as_ref().expect("arrival observer");
    let times = setup.probe_nodes.iter().map(|&i| arrival.times[i]).collect();
    Ok(MemberRecord {
        seed,
        distances: setup.distances,
        times,
        steps: summary.steps,
        wall_secs: started.elapsed().as_secs_f64(),
        r0: setup.r0,
        h: setup.h,
        clamp_total: summary.clamp_total,
    })
}

/// All members of a half-space ensemble, seed-sorted. Homogeneous media are run once.
pub fn run_halfspace_ensemble(spec: &EnsembleSpec, e: &[f64]) -> Result<Vec<MemberRecord>> {
    spec.check()?;
    let seeds = spec.sorted_seeds();
    if spec.medium.is_homogeneous() {
        let first = run_halfspace_member(spec, e, seeds[0], spec.exec)?;
        return Ok(seeds.iter().map(|&s| MemberRecord { seed: s, ..first.clone() }).collect());
    }
    let inner = if seeds.len() > 1 { Exec::Sequential } else { spec.exec };
    par::map(spec.exec, &seeds, |&s| run_halfspace_member(spec, e, s, inner)).into_iter().collect()
}

/// Error if any member left a probe unreached.
pub fn require_reached(runs: &[MemberRecord]) -> Result<()> {
    let seeds: Vec<u64> = runs.iter().filter(|r| !r.reached_all()).map(|r| r.seed).collect();
    if seeds.is_empty() {
        Ok(())
    } else {
        Err(Error::Unreached { seeds })
    }
}

/// Ball-source run keeping snapshots at `times`.
#[derive(Clone, Debug)]
pub struct BallRun {
    pub seed: u64,
    pub snapshots: Vec<Snapshot>,
    pub threshold: f64,
    pub source_radius: f64,
}

/// Ball of radius `radius` at the origin; the domain is sized from the fastest homogeneous speed.
pub fn run_ball_member(spec: &EnsembleSpec, radius: f64, times: &[f64], seed: u64, exec: Exec) -> Result<BallRun> {
    let dim = spec.medium.dim;
    let medium = RandomMedium::new(spec.medium.clone(), seed)?;
    let params = HypothesisParams::for_medium(&medium, &spec.overrides)?;
    let t_end = times.iter().cloned().fold(0.0, f64::max);
    let c0 = super::compute_c0(&medium.profile)?;
    // comparison with the homogeneous medium at the largest envelope bounds the speed
    let c_top = c0 * medium.envelope_max().sqrt();
    let mut opts = DatumOptions::new(params.theta_star, params.theta1);
    opts.kind = spec.datum;
    opts.exec = exec;
    let r0 = match spec.datum {
        DatumKind::Step => 0.0,
        DatumKind::Smooth => support_inflation(halfspace_scale(&medium.profile, &opts, spec.solver.h)? * 1.2),
    };
    let half = radius + r0 + c_top * t_end * 1.1 + 10.0;
    let grid = Grid::centered(dim, half, spec.solver.h)?;
    let source = SourceSet::Ball { center: vec![0.0; dim], radius };
    let datum = build_initial_datum(&source, &medium.profile, &grid, &opts)?;
    let reaction = GridReaction::from_medium(&medium, &grid, &Frame::identity(), exec);
    let mut state = SolverState::new(datum.field, reaction, Boundary::frozen(0.0))?.with_exec(exec);
    if let Some(dt) = spec.solver.dt {
        state = state.with_dt(dt)?;
    }
    let summary = solver::run(&mut state, t_end, &[Observer::Snapshots { times: times.to_vec() }])?;
    let threshold = 1.0 - params.theta_star;
    for s in &summary.snapshots {
        if reached_set(&s.field, threshold).touches_border(2) {
            return Err(Error::Domain(format!("reached set touches the domain margin at t = {}", s.t)));
        }
    }
    Ok(BallRun { seed, snapshots: summary.snapshots, threshold, source_radius: radius })
}
