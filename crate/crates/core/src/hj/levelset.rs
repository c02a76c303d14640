use serde::{Deserialize, Serialize};

use crate::edt;
use crate::error::{config, Error, Result};
use crate::grid::{Mask, ScalarField};
use crate::par::{self, Exec};
use crate::speed::SpeedTable;

pub const LEVELSET_CFL: f64 = 0.9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSetOptions {
    /// Step size; `LEVELSET_CFL h / (max c* sqrt d)` when absent.
    pub dt: Option<f64>,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for LevelSetOptions {
    fn default() -> Self {
        LevelSetOptions { dt: None, exec: Exec::default() }
    }
}

#[derive(Clone, Debug)]
pub struct LevelSetResult {
    pub t: f64,
    pub field: ScalarField,
    pub steps: u64,
    /// Set when the initial field looked non-Lipschitz on the grid.
    pub gradient_warning: bool,
}

impl LevelSetResult {
    /// `{v > 0}`.
    pub fn mask(&self) -> Mask {
        Mask { grid: self.field.grid.clone(), values: self.field.values.iter().map(|&v| v > 0.0).collect() }
    }
}

/// Signed distance, positive inside `mask`, in physical units.
pub fn signed_distance(mask: &Mask) -> ScalarField {
    let h = mask.grid.h;
    let d_out = edt::distance(mask);
    let d_in = edt::distance(&mask.complement());
    let values = d_out.iter().zip(&d_in).map(|(o, i)| if *o == 0.0 { i - 0.5 * h } else { 0.5 * h - o }).collect();
    ScalarField { grid: mask.grid.clone(), values }
}

fn max_gradient(v: &ScalarField) -> f64 {
    let g = &v.grid;
    let strides = [1, g.shape[0], g.shape[0] * g.shape[1]];
    let mut m = 0.0f64;
    for idx in 0..g.len() {
        let c = g.coords(idx);
        for a in 0..g.dim {
            if c[a] + 1 < g.shape[a] {
                m = m.max((v.values[idx + strides[a]] - v.values[idx]).abs());
            }
        }
    }
    m / g.h
}

/// Evolve `v_t = c*(n) |grad v|`, `n = -grad v / |grad v|`, with a first-order upwind
/// (Rouy-Tourin) gradient; the normal is built from the selected one-sided differences.
pub fn levelset_evolve(v0: &ScalarField, speed: &SpeedTable, t_end: f64, opts: &LevelSetOptions) -> Result<LevelSetResult> {
    let g = v0.grid.clone();
    let dim = g.dim;
    if speed.dim != dim {
        return config(format!("speed table is {}-dimensional, field is {dim}-dimensional", speed.dim));
    }
    if !(t_end >= 0.0) {
        return config("t_end must be nonnegative");
    }
    let limit = LEVELSET_CFL * g.h / (speed.max_speed() * (dim as f64).sqrt());
    let dt = opts.dt.unwrap_or(limit);
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, limit });
    }
    let range = v0.max() - v0.min();
    let gradient_warning = max_gradient(v0) * g.h > 0.25 * range.max(f64::MIN_POSITIVE);
    if gradient_warning {
        log::warn!("initial level-set field is not resolved as a Lipschitz function on this grid");
    }
    let mut cur = v0.values.clone();
    let mut next = vec![0.0; cur.len()];
    let strides = [1usize, g.shape[0], g.shape[0] * g.shape[1]];
    let mut t = 0.0;
    let mut steps = 0u64;
    let inv_h = 1.0 / g.h;
    let n0 = g.shape[0];
    while t < t_end * (1.0 - 1e-12) {
        let tau = dt.min(t_end - t);
        {
            let src = &cur;
            par::for_each_chunk(opts.exec, &mut next, n0, |row, out| {
                let base = row * n0;
                let rc = g.coords(base);
                for (i, o) in out.iter_mut().enumerate() {
                    let idx = base + i;
                    let mut c = rc;
                    c[0] = i;
                    let v = src[idx];
                    let mut grad = [0.0f64; 3];
                    let mut norm2 = 0.0;
                    for a in 0..dim {
                        let s = strides[a];
                        let vm = if c[a] > 0 { src[idx - s] } else { v };
                        let vp = if c[a] + 1 < g.shape[a] { src[idx + s] } else { v };
                        let back = (v - vm) * inv_h;
                        let fwd = (vp - v) * inv_h;
                        // -D^- v > 0: v grows from the minus side, so the outward normal points to +a
                        let (gm, gp) = ((-back).max(0.0), fwd.max(0.0));
                        let comp = if gm >= gp { gm } else { -gp };
                        grad[a] = comp;
                        norm2 += comp * comp;
                    }
                    *o = if norm2 > 0.0 {
                        let norm = norm2.sqrt();
                        for x in grad[..dim].iter_mut() {
                            *x /= norm;
                        }
                        v + tau * speed.eval(&grad[..dim]) * norm
                    } else {
                        v
                    };
                }
            });
        }
        std::mem::swap(&mut cur, &mut next);
        t += tau;
        steps += 1;
    }
    Ok(LevelSetResult { t, field: ScalarField { grid: g, values: cur }, steps, gradient_warning })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn signed_distance_of_a_disc() {
        let g = Grid::centered(2, 3.0, 0.05).unwrap();
        let r = 1.3;
        let mask = Mask { grid: g.clone(), values: (0..g.len()).map(|i| g.point(i)[0].hypot(g.point(i)[1]) < r).collect() };
        let sd = signed_distance(&mask);
        for i in 0..g.len() {
            let p = g.point(i);
            let exact = r - p[0].hypot(p[1]);
            assert!((sd.values[i] - exact).abs() <= 1.5 * g.h, "at {p:?}: {} vs {exact}", sd.values[i]);
        }
    }

    #[test]
    fn constant_speed_grows_a_disc_by_ct() {
        let g = Grid::centered(2, 3.0, 0.025).unwrap();
        let v0 = ScalarField::from_fn(g.clone(), |p| 1.0 - p[0].hypot(p[1]));
        let table = SpeedTable::constant(2, 64, 1.5).unwrap();
        let r = levelset_evolve(&v0, &table, 0.8, &LevelSetOptions::default()).unwrap();
        let area = r.mask().volume();
        let exact = std::f64::consts::PI * 2.2f64.powi(2);
        assert!((area / exact - 1.0).abs() < 0.02, "area {area} vs {exact}");
    }
}
