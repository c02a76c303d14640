use serde::{Deserialize, Serialize};

use super::calibrate::CalibratedConstants;
use crate::error::{config, Result};
use crate::grid::ScalarField;
use crate::medium::{HypothesisParams, MediumSpec, RandomMedium};
use crate::par::{self, Exec};
use crate::solver::{self, Boundary, Observer, SolverState};
use crate::speed::{compute_c0, compute_c0_with, halfspace_setup, EnsembleSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExclusivitySpec {
    pub medium: MediumSpec,
    pub seeds: Vec<u64>,
    /// Axis direction `e`.
    pub direction: Vec<f64>,
    /// Background level ahead of the front.
    pub a: f64,
    pub horizon: f64,
    /// Slab `{x.e - c* t in [m1 t, m2 t]}`.
    #[serde(default = "default_margins")]
    pub margins: (f64, f64),
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
    #[serde(default = "default_every")]
    pub every: f64,
    pub h: f64,
    /// `c*(e)`; the profile's `c0` when absent (homogeneous media only).
    #[serde(default)]
    pub c_star: Option<f64>,
    #[serde(skip)]
    pub exec: Exec,
}

fn default_margins() -> (f64, f64) {
    (0.25, 0.75)
}
fn default_burn_in() -> f64 {
    100.0
}
fn default_every() -> f64 {
    5.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlabSample {
    pub t: f64,
    pub sup: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExclusivityRecord {
    pub a: f64,
    pub c_star: f64,
    pub margins: (f64, f64),
    pub burn_in: f64,
    pub per_seed: Vec<(u64, Vec<SlabSample>)>,
    /// Largest slab supremum over seeds and sampled times past burn-in.
    pub max_after_burn_in: f64,
    /// Whether `a <= min(theta*, 1 / M*) / 2` holds for the calibrated `M*`.
    pub in_proven_range: Option<bool>,
    /// Speed of the homogeneous front invading the constant state `a`; the slab must start beyond it.
    pub a_front_speed: Option<f64>,
}

/// `sup w` over nodes whose distance `s` from the launch line satisfies `c t + m1 t <= s <= c t + m2 t`.
pub fn slab_sup(field: &ScalarField, distance: impl Fn(usize) -> f64, c: f64, t: f64, m1: f64, m2: f64) -> f64 {
    let (lo, hi) = (c * t + m1 * t, c * t + m2 * t);
    field
        .values
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let s = distance(*i);
            s >= lo && s <= hi
        })
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Run `w_{e,a}` from `chi_{H_e^-} + a chi_{H_e^+}` and record the ahead-slab supremum.
pub fn exclusivity_probe(spec: &ExclusivitySpec, constants: Option<&CalibratedConstants>) -> Result<ExclusivityRecord> {
    let probe = RandomMedium::new(spec.medium.clone(), spec.seeds.first().copied().unwrap_or(0))?;
    let params = HypothesisParams::for_medium(&probe, &Default::default())?;
    if !(0.0..=params.theta_star).contains(&spec.a) {
        return config(format!("a = {} must lie in [0, theta*] = [0, {}]", spec.a, params.theta_star));
    }
    if spec.direction.iter().filter(|v| v.abs() == 1.0).count() != 1 || spec.direction.iter().filter(|v| **v != 0.0).count() != 1 {
        return config("exclusivity probes need an axis direction");
    }
    let (m1, m2) = spec.margins;
    if !(m1 >= 0.0 && m2 > m1) {
        return config("slab margins must satisfy 0 <= m1 < m2");
    }
    let c_star = match spec.c_star {
        Some(c) => c,
        None if spec.medium.is_homogeneous() => compute_c0(&probe.profile)?,
        None => return config("c_star is required for random media"),
    };
    let a_front_speed = if spec.medium.is_homogeneous() && spec.a < probe.profile.theta0 {
        let (f, a) = (&probe.profile, spec.a);
        Some(compute_c0_with(|v| f.eval(a + (1.0 - a) * v) / (1.0 - a), (f.theta0 - a) / (1.0 - a), f.m)?)
    } else {
        None
    };
    let in_proven_range = constants.map(|k| spec.a <= 0.5 * params.theta_star.min(1.0 / k.m_star));
    let reach = (c_star + m2) * spec.horizon;
    let mut ens = EnsembleSpec::new(spec.medium.clone(), spec.seeds.clone(), spec.h, vec![reach], spec.horizon);
    ens.ahead = 30.0;
    ens.behind = 20.0;
    let mut seeds = spec.seeds.clone();
    seeds.sort_unstable();
    let times: Vec<f64> = {
        let n = (spec.horizon / spec.every).floor() as usize;
        (1..=n).map(|k| k as f64 * spec.every).collect()
    };
    let inner = if seeds.len() > 1 { Exec::Sequential } else { spec.exec };
    let per_seed: Vec<Result<(u64, Vec<SlabSample>)>> = par::map(spec.exec, &seeds, |&seed| {
        let setup = halfspace_setup(&ens, &spec.direction, seed, inner, 0.0)?;
        let field = ScalarField {
            grid: setup.grid.clone(),
            values: (0..setup.grid.len()).map(|i| if setup.distance_of(i) < 0.0 { 1.0 } else { spec.a }).collect(),
        };
        let mut state = SolverState::new(field, setup.reaction.clone(), Boundary::strip(spec.a))?.with_exec(inner);
        let summary = solver::run(&mut state, spec.horizon, &[Observer::Snapshots { times: times.clone() }])?;
        let samples = summary
            .snapshots
            .iter()
            .map(|s| SlabSample { t: s.t, sup: slab_sup(&s.field, |i| setup.distance_of(i), c_star, s.t, m1, m2) })
            .collect();
        Ok((seed, samples))
    });
    let per_seed: Vec<(u64, Vec<SlabSample>)> = per_seed.into_iter().collect::<Result<_>>()?;
    let max_after_burn_in = per_seed
        .iter()
        .flat_map(|(_, v)| v.iter().filter(|s| s.t >= spec.burn_in).map(|s| s.sup))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ExclusivityRecord {
        a: spec.a,
        c_star,
        margins: spec.margins,
        burn_in: spec.burn_in,
        per_seed,
        max_after_burn_in,
        in_proven_range,
        a_front_speed,
    })
}
