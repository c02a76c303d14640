use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::init::{build_initial_datum, DatumOptions, SourceSet, INFLATION_N, MOLLIFIER_A};
use crate::medium::{HypothesisOverrides, HypothesisParams, MediumSpec, ProfileSpec, RandomMedium};
use crate::par::Exec;
use crate::solver::{self, Boundary, GridReaction, Observer, SolverState};
use crate::speed::compute_c0;

/// Tolerated negative `u_t` before a calibration run counts as non-monotone.
pub const MONOTONE_TOL: f64 = 1e-6;

/// Empirical stand-ins for the existence constants, measured on the homogeneous medium.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibratedConstants {
    /// Half the smallest `u_t` over the state band `[theta*, 1 - theta*]` in the late half of the run.
    pub mu_star: f64,
    /// First time after which the band minimum of `u_t` stays above `mu_star`.
    pub kappa_star: f64,
    /// Catch-up lag: `max_t (t - 2 rho(t) / c0)`, floored at 0.
    pub kappa0: f64,
    /// `(1 + M) / mu_star`.
    pub m_star: f64,
    /// Spreading bound `c1 = 2 sqrt(M d)`.
    pub d2: f64,
    pub c0: f64,
    pub theta_star: f64,
    pub h: f64,
    pub t_end: f64,
    pub min_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSpec {
    pub profile: ProfileSpec,
    pub h: f64,
    pub t_end: f64,
    /// Cadence of the band-rate and extent samples.
    #[serde(default = "default_every")]
    pub every: f64,
    #[serde(default)]
    pub overrides: HypothesisOverrides,
    #[serde(skip)]
    pub exec: Exec,
}

fn default_every() -> f64 {
    1.0
}

impl CalibrationSpec {
    pub fn new(profile: ProfileSpec, h: f64, t_end: f64) -> Self {
        CalibrationSpec { profile, h, t_end, every: 1.0, overrides: HypothesisOverrides::default(), exec: Exec::default() }
    }
}

/// 1D homogeneous half-space run from a smooth monotone datum.
pub fn calibrate(spec: &CalibrationSpec) -> Result<CalibratedConstants> {
    let medium = RandomMedium::new(MediumSpec::homogeneous(1, spec.profile), 0)?;
    let params = HypothesisParams::for_medium(&medium, &spec.overrides)?;
    let c0 = compute_c0(&medium.profile)?;
    let mut opts = DatumOptions::new(params.theta_star, params.theta1);
    opts.exec = spec.exec;
    let scale = crate::init::halfspace_scale(&medium.profile, &opts, spec.h)?;
    let r0 = crate::init::support_inflation(scale);
    let lo = (INFLATION_N - MOLLIFIER_A) * scale - 10.0;
    let hi = r0 + params.c1 * spec.t_end + 20.0;
    let grid = Grid::covering(1, &[lo], &[hi], spec.h)?;
    opts.scale = Some(scale);
    let datum = build_initial_datum(&SourceSet::HalfSpace { normal: vec![1.0], offset: 0.0 }, &medium.profile, &grid, &opts)?;
    let reaction = GridReaction::homogeneous(medium.profile.clone());
    let mut state = SolverState::new(datum.field, reaction, Boundary::strip(0.0))?.with_exec(spec.exec);
    state.band = (params.theta_star, 1.0 - params.theta_star);
    let theta = 1.0 - params.theta_star;
    let obs = [Observer::Rates { every: spec.every }, Observer::Extent { theta, every: spec.every }];
    let summary = solver::run(&mut state, spec.t_end, &obs)?;
    if summary.min_rate < -MONOTONE_TOL {
        return Err(Error::Numeric(format!("calibration run is not monotone in time: min u_t = {}", summary.min_rate)));
    }
    let late: Vec<f64> =
        summary.rates.iter().filter(|r| r.t > 0.5 * spec.t_end && r.band_min.is_finite()).map(|r| r.band_min).collect();
    if late.is_empty() {
        return Err(Error::Numeric("no band samples in the late half of the calibration run".into()));
    }
    let mu_star = 0.5 * late.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(mu_star > 0.0) {
        return Err(Error::Numeric(format!("minimum interface slope {mu_star} is not positive")));
    }
    let mut kappa_star = 0.0;
    for r in &summary.rates {
        if r.band_min.is_finite() && r.band_min < mu_star {
            kappa_star = r.t;
        }
    }
    let kappa0 = summary
        .extents
        .iter()
        .map(|e| e.t - 2.0 * e.front.max(0.0) / c0)
        .fold(0.0, f64::max);
    if kappa0 > 0.5 * spec.t_end {
        return Err(Error::Numeric(format!("catch-up lag {kappa0} exceeds half the run")));
    }
    Ok(CalibratedConstants {
        mu_star,
        kappa_star,
        kappa0,
        m_star: (1.0 + params.m) / mu_star,
        d2: params.c1,
        c0,
        theta_star: params.theta_star,
        h: spec.h,
        t_end: spec.t_end,
        min_rate: summary.min_rate,
    })
}
