use serde::{Deserialize, Serialize};

use super::calibrate::CalibratedConstants;
use crate::error::{config, Error, Result};
use crate::medium::MediumSpec;
use crate::par::{self, Exec};
use crate::solver::{self, Boundary, CellValues, Observer, SolverState};
use crate::speed::{halfspace_setup, EnsembleSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    /// `f2` raised to the Lipschitz cap where `u1(t0) >= 1 - eta`, equal to `f1` elsewhere.
    LevelSet,
    /// `f2 = f1 - alpha3 eta^m3` (clipped at 0) on `B_R(y)`.
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub medium: MediumSpec,
    pub seeds: Vec<u64>,
    pub eta: f64,
    pub t0: f64,
    /// Probe distance `y` ahead of the launch line along the first axis.
    pub probe: f64,
    /// Radius of the uniform perturbation; `D2 (1 + T_{u1}(y))` when absent.
    #[serde(default)]
    pub radius: Option<f64>,
    pub kind: PerturbationKind,
    pub h: f64,
    pub t_end: f64,
    #[serde(skip)]
    pub exec: Exec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationPair {
    pub seed: u64,
    pub t1: f64,
    pub t2: f64,
    /// `(1 + M* eta)^{-1} (T1 - t0 - slack)`.
    pub bound: f64,
    pub holds: bool,
    pub radius: f64,
    /// Cells whose reaction was modified.
    pub modified_cells: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationRecord {
    pub eta: f64,
    pub kind: PerturbationKind,
    pub t0: f64,
    pub slack: f64,
    pub m_star: f64,
    pub pairs: Vec<PerturbationPair>,
    pub all_hold: bool,
    /// `eta <= min(theta*, 1 / M*) / 2`.
    pub in_proven_range: bool,
    /// Every pair used a radius of at least `D2 (1 + T1)`.
    pub radius_ok: bool,
}

/// Paired runs `u1` (medium `f1`) and `u2` (perturbed `f2`) from the same half-space datum.
pub fn perturbation_check(spec: &PerturbationSpec, k: &CalibratedConstants) -> Result<PerturbationRecord> {
    let mut ens = EnsembleSpec::new(spec.medium.clone(), spec.seeds.clone(), spec.h, vec![spec.probe], spec.t_end);
    ens.exec = spec.exec;
    if !(spec.t0 >= 0.0) {
        return config("t0 must be nonnegative");
    }
    let slack = 2.0 * k.kappa_star + k.kappa0;
    let mut seeds = spec.seeds.clone();
    seeds.sort_unstable();
    let dim = spec.medium.dim;
    let mut e = vec![0.0; dim];
    e[0] = 1.0;
    let inner = if seeds.len() > 1 { Exec::Sequential } else { spec.exec };
    let pairs: Vec<Result<PerturbationPair>> = par::map(spec.exec, &seeds, |&seed| {
        let setup = halfspace_setup(&ens, &e, seed, inner, 0.0)?;
        let theta_star = setup.params.theta_star;
        if !(0.0..=theta_star).contains(&spec.eta) {
            return config(format!("eta = {} must lie in [0, theta*] = [0, {theta_star}]", spec.eta));
        }
        let probe = setup.probe_nodes[0];
        let threshold = 1.0 - theta_star;
        let arrival = Observer::Arrival { threshold, interpolate: true, stop_on: vec![probe] };
        let mut s1 = SolverState::new(setup.field.clone(), setup.reaction.clone(), Boundary::strip(0.0))?.with_exec(inner);
        let r1 = solver::run(&mut s1, spec.t_end, &[arrival.clone(), Observer::Snapshots { times: vec![spec.t0] }])?;
        let t1 = r1.arrival.as_ref().expect("arrival").times[probe];
        if !t1.is_finite() {
            return Err(Error::Unreached { seeds: vec![seed] });
        }
        let n = setup.grid.len();
        let mut reaction = setup.reaction.clone();
        let need = k.d2 * (1.0 + t1);
        let radius = spec.radius.unwrap_or(need);
        let mut modified = 0usize;
        match spec.kind {
            PerturbationKind::LevelSet => {
                let snap = r1
                    .snapshots
                    .iter()
                    .find(|s| (s.t - spec.t0).abs() < 1e-9 * spec.t0.max(1.0))
                    .ok_or_else(|| config::<()>("t0 must precede the probe arrival").unwrap_err())?;
                let cap = setup.params.m / setup.medium.profile.m;
                let mut env = reaction.envelope.to_cells(n);
                for (i, v) in env.iter_mut().enumerate() {
                    if snap.field.values[i] >= 1.0 - spec.eta {
                        *v = v.max(cap);
                        modified += 1;
                    }
                }
                reaction.envelope = CellValues::Cells(env);
            }
            PerturbationKind::Uniform => {
                let shift = setup.params.alpha3 * spec.eta.powf(setup.params.m3);
                let y = setup.grid.point(probe);
                let off: Vec<f64> = (0..n)
                    .map(|i| {
                        let p = setup.grid.point(i);
                        let d2: f64 = (0..dim).map(|a| (p[a] - y[a]) * (p[a] - y[a])).sum();
                        if d2.sqrt() <= radius {
                            modified += 1;
                            -shift
                        } else {
                            0.0
                        }
                    })
                    .collect();
                reaction.offset = CellValues::Cells(off);
            }
        }
        let mut s2 = SolverState::new(setup.field.clone(), reaction, Boundary::strip(0.0))?.with_exec(inner);
        let r2 = solver::run(&mut s2, spec.t_end, &[arrival])?;
        let t2 = r2.arrival.as_ref().expect("arrival").times[probe];
        if !t2.is_finite() {
            return Err(Error::Unreached { seeds: vec![seed] });
        }
        let bound = (t1 - spec.t0 - slack) / (1.0 + k.m_star * spec.eta);
        Ok(PerturbationPair { seed, t1, t2, bound, holds: t2 >= bound, radius, modified_cells: modified })
    });
    let pairs: Vec<PerturbationPair> = pairs.into_iter().collect::<Result<_>>()?;
    let radius_ok = pairs.iter().all(|p| p.radius >= k.d2 * (1.0 + p.t1));
    Ok(PerturbationRecord {
        eta: spec.eta,
        kind: spec.kind,
        t0: spec.t0,
        slack,
        m_star: k.m_star,
        all_hold: pairs.iter().all(|p| p.holds),
        pairs,
        in_proven_range: spec.eta <= 0.5 * k.theta_star.min(1.0 / k.m_star),
        radius_ok,
    })
}
