use serde::{Deserialize, Serialize};

use crate::edt;
use crate::error::{Error, Result};
use crate::grid::{Mask, ScalarField};
use crate::solver::Snapshot;

/// Relative tolerance when matching snapshot times.
const TIME_TOL: f64 = 1e-9;

/// `u_eps(t, x) = u(t / eps, x / eps)` at each probe time, subsampled by `stride` without interpolation.
pub fn rescale(snapshots: &[Snapshot], epsilon: f64, probe_times: &[f64], stride: usize) -> Result<Vec<Snapshot>> {
    let mut out = Vec::with_capacity(probe_times.len());
    let mut missing = Vec::new();
    for &t in probe_times {
        let micro = t / epsilon;
        match snapshots.iter().find(|s| (s.t - micro).abs() <= TIME_TOL * micro.max(1.0)) {
            Some(s) => out.push(Snapshot { t, field: s.field.subsample(stride.max(1), epsilon) }),
            None => missing.push(micro),
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingSnapshots(missing));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogError {
    pub t: f64,
    pub delta: f64,
    /// `sup |u - 1|` over `Theta_t` shrunk by `delta`.
    pub interior_sup: f64,
    /// `sup |u|` outside `Theta_t` inflated by `delta`.
    pub exterior_sup: f64,
    /// Measure of `{u >= 1/2}` symmetric-difference `Theta_t`.
    pub symdiff: f64,
    pub theta_volume: f64,
    /// No interior or exterior nodes survive the margin.
    pub degenerate: bool,
}

/// Errors of `u_eps` against the mask of `Theta_t` on the same grid.
pub fn homog_error(u: &ScalarField, theta: &Mask, t: f64, delta: f64) -> Result<HomogError> {
    if u.grid != theta.grid {
        return Err(Error::Domain("snapshot and reachable-set grids differ".into()));
    }
    let to_out = edt::distance(&theta.complement());
    let to_in = edt::distance(theta);
    let (mut interior_sup, mut exterior_sup) = (0.0f64, 0.0f64);
    let (mut n_in, mut n_out) = (0usize, 0usize);
    for (i, &v) in u.values.iter().enumerate() {
        if theta.values[i] {
            if to_out[i] > delta {
                interior_sup = interior_sup.max((v - 1.0).abs());
                n_in += 1;
            }
        } else if to_in[i] > delta {
            exterior_sup = exterior_sup.max(v.abs());
            n_out += 1;
        }
    }
    let half = Mask { grid: u.grid.clone(), values: u.values.iter().map(|&v| v >= 0.5).collect() };
    let degenerate = n_in == 0 || n_out == 0;
    if degenerate {
        log::warn!("margin {delta} leaves no interior or exterior nodes");
    }
    Ok(HomogError {
        t,
        delta,
        interior_sup,
        exterior_sup,
        symdiff: half.symmetric_difference_volume(theta),
        theta_volume: theta.volume(),
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn margin_is_a_physical_length() {
        let g = Grid::centered(1, 2.0, 0.1).unwrap();
        let theta = Mask { grid: g.clone(), values: (0..g.len()).map(|i| g.point(i)[0] < 0.0).collect() };
        let u = ScalarField::from_fn(g.clone(), |p| if p[0] < -0.45 { 1.0 } else if p[0] > 0.45 { 0.0 } else { 0.5 });
        let e = homog_error(&u, &theta, 1.0, 0.5).unwrap();
        assert_eq!((e.interior_sup, e.exterior_sup), (0.0, 0.0));
        assert!(!e.degenerate);
        let e = homog_error(&u, &theta, 1.0, 0.3).unwrap();
        assert_eq!((e.interior_sup, e.exterior_sup), (0.5, 0.5));
    }
}
