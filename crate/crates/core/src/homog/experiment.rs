use serde::{Deserialize, Serialize};

use super::compare::{homog_error, rescale, HomogError};
use crate::error::{config, Result};
use crate::grid::{Frame, Grid, ScalarField};
use crate::hj::{theta_convex, ConvexSet};
use crate::medium::{MediumSpec, RandomMedium};
use crate::par::{self, Exec};
use crate::solver::{self, Boundary, GridReaction, Observer, SolverState};
use crate::speed::{compute_c0, stats, SpeedTable};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpeedSource {
    /// Isotropic `c0` of the medium profile (homogeneous media).
    C0,
    Table { table: SpeedTable },
}

/// Parabolic-rescaling experiment comparing `u_eps` against `Theta^{A, c*}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogExperiment {
    pub a: ConvexSet,
    pub medium: MediumSpec,
    pub seeds: Vec<u64>,
    /// Strictly decreasing.
    pub epsilons: Vec<f64>,
    pub t_probes: Vec<f64>,
    pub speed: SpeedSource,
    /// Microscopic grid spacing.
    pub h: f64,
    /// Margin `delta` of the sup errors (macroscopic length).
    pub delta: f64,
    /// Initial amplitude on `A`: 1 or `1 - theta1`.
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Shift `y_eps` of the initial data (microscopic length).
    #[serde(default)]
    pub y_shift: Vec<f64>,
    /// `A` is shrunk by this macroscopic margin before seeding.
    #[serde(default)]
    pub psi_margin: f64,
    /// Extra macroscopic room around the predicted reach.
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(skip)]
    pub exec: Exec,
}

fn one() -> f64 {
    1.0
}
fn default_margin() -> f64 {
    0.25
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogRow {
    pub epsilon: f64,
    pub t: f64,
    pub interior_sup: f64,
    pub exterior_sup: f64,
    pub symdiff: f64,
    pub interior_se: f64,
    pub exterior_se: f64,
    pub symdiff_se: f64,
    pub theta_volume: f64,
    pub macro_h: f64,
    pub degenerate: bool,
    pub per_seed: Vec<HomogError>,
}

#[derive(Clone, Debug)]
pub struct HomogReport {
    pub rows: Vec<HomogRow>,
    pub macro_grid: Grid,
    /// `u_eps` at the last probe time for the first seed and each epsilon.
    pub fields: Vec<(f64, ScalarField)>,
    pub theta_masks: Vec<(f64, crate::grid::Mask)>,
}

fn se(v: &[f64]) -> f64 {
    if v.len() < 2 {
        0.0
    } else {
        stats::sd(v) / (v.len() as f64).sqrt()
    }
}

impl HomogExperiment {
    fn check(&self) -> Result<()> {
        if self.epsilons.is_empty() || self.epsilons.windows(2).any(|w| !(w[1] < w[0])) || self.epsilons.iter().any(|e| !(*e > 0.0)) {
            return config("epsilon list must be positive and strictly decreasing");
        }
        if self.seeds.is_empty() || self.t_probes.is_empty() || self.t_probes.iter().any(|t| !(*t > 0.0)) {
            return config("homogenization needs seeds and positive probe times");
        }
        let emax = self.epsilons[0];
        for e in &self.epsilons {
            let r = emax / e;
            if (r - r.round()).abs() > 1e-9 {
                return config("the largest epsilon must be an integer multiple of every other one");
            }
        }
        if self.a.dim() != self.medium.dim {
            return config("initial set and medium dimensions differ");
        }
        Ok(())
    }
}

/// Microscopic runs per (seed, epsilon), rescaled onto one macroscopic grid and compared with `Theta_t`.
pub fn run_homogenization(exp: &HomogExperiment) -> Result<HomogReport> {
    exp.check()?;
    let dim = exp.medium.dim;
    let probe_medium = RandomMedium::new(exp.medium.clone(), exp.seeds[0])?;
    let table = match &exp.speed {
        SpeedSource::C0 => SpeedTable::constant(dim, if dim == 2 { 720 } else { 2 }, compute_c0(&probe_medium.profile)?)?,
        SpeedSource::Table { table } => table.clone(),
    };
    let c0 = compute_c0(&probe_medium.profile)?;
    let c_top = (c0 * probe_medium.envelope_max().sqrt()).max(table.max_speed());
    let t_max = exp.t_probes.iter().cloned().fold(0.0, f64::max);
    let a_reach = (0..dim)
        .map(|k| {
            let mut e = vec![0.0; dim];
            e[k] = 1.0;
            let p = exp.a.support(&e);
            e[k] = -1.0;
            p.max(exp.a.support(&e))
        })
        .fold(0.0, f64::max);
    // snapshots of smaller epsilon are subsampled onto the grid of the largest one
    let emax = exp.epsilons[0];
    let macro_h = emax * exp.h;
    let half_macro = ((a_reach + c_top * t_max + exp.margin) / macro_h).ceil() * macro_h;
    let macro_grid = Grid::centered(dim, half_macro, macro_h)?;
    let theta_masks: Vec<_> = exp
        .t_probes
        .iter()
        .map(|&t| Ok((t, theta_convex(&exp.a, &table, t)?.mask(&macro_grid, &Frame::identity()))))
        .collect::<Result<_>>()?;

    let mut seeds = exp.seeds.clone();
    seeds.sort_unstable();
    let homogeneous = exp.medium.is_homogeneous();
    let run_seeds = if homogeneous { vec![seeds[0]] } else { seeds.clone() };
    let jobs: Vec<(u64, f64)> = run_seeds.iter().flat_map(|&s| exp.epsilons.iter().map(move |&e| (s, e))).collect();
    let inner = if jobs.len() > 1 { Exec::Sequential } else { exp.exec };
    let results: Vec<Result<Vec<ScalarField>>> = par::map(exp.exec, &jobs, |&(seed, eps)| {
        let stride = (emax / eps).round() as usize;
        let half_micro = half_macro / eps;
        let micro = Grid::centered(dim, half_micro, exp.h)?;
        let medium = RandomMedium::new(exp.medium.clone(), seed)?;
        let shrink = exp.psi_margin;
        let y = &exp.y_shift;
        let field = ScalarField::from_fn(micro.clone(), |p| {
            let mut x = [0.0; 3];
            for k in 0..dim {
                x[k] = (p[k] - y.get(k).copied().unwrap_or(0.0)) * eps;
            }
            if exp.a.contains_shrunk(&x[..dim], shrink) {
                exp.amplitude
            } else {
                0.0
            }
        });
        let reaction = GridReaction::from_medium(&medium, &micro, &Frame::identity(), inner);
        let mut state = SolverState::new(field, reaction, Boundary::frozen(0.0))?.with_exec(inner);
        let times: Vec<f64> = exp.t_probes.iter().map(|t| t / eps).collect();
        let t_end = times.iter().cloned().fold(0.0, f64::max);
        let summary = solver::run(&mut state, t_end, &[Observer::Snapshots { times }])?;
        let snaps = rescale(&summary.snapshots, eps, &exp.t_probes, stride)?;
        Ok(snaps.into_iter().map(|s| align(s.field, &macro_grid)).collect())
    });
    let mut fields_by_job = Vec::with_capacity(results.len());
    for r in results {
        fields_by_job.push(r?);
    }
    let mut rows = Vec::new();
    for (ei, &eps) in exp.epsilons.iter().enumerate() {
        for (ti, &(t, ref mask)) in theta_masks.iter().enumerate() {
            let per_seed: Vec<HomogError> = (0..run_seeds.len())
                .map(|si| homog_error(&fields_by_job[si * exp.epsilons.len() + ei][ti], mask, t, exp.delta))
                .collect::<Result<_>>()?;
            let col = |f: fn(&HomogError) -> f64| per_seed.iter().map(f).collect::<Vec<f64>>();
            let (i, o, s) = (col(|e| e.interior_sup), col(|e| e.exterior_sup), col(|e| e.symdiff));
            rows.push(HomogRow {
                epsilon: eps,
                t,
                interior_sup: stats::mean(&i),
                exterior_sup: stats::mean(&o),
                symdiff: stats::mean(&s),
                interior_se: se(&i),
                exterior_se: se(&o),
                symdiff_se: se(&s),
                theta_volume: per_seed[0].theta_volume,
                macro_h,
                degenerate: per_seed.iter().any(|e| e.degenerate),
                per_seed,
            });
        }
    }
    let fields = exp
        .epsilons
        .iter()
        .enumerate()
        .map(|(ei, &e)| (e, fields_by_job[ei].last().expect("probe").clone()))
        .collect();
    Ok(HomogReport { rows, macro_grid, fields, theta_masks })
}

/// Point of `A` at distance more than `margin` from its complement (convex `A`).
/// Copy a rescaled field onto the shared macroscopic grid (identical up to rounding of the metadata).
fn align(field: ScalarField, target: &Grid) -> ScalarField {
    debug_assert_eq!(field.grid.shape, target.shape);
    ScalarField { grid: target.clone(), values: field.values }
}
