//! Explicit Euler integration of `u_t = Δu + f(x, u)` with a central Laplacian.

mod boundary;
mod observe;
mod reaction;

pub use boundary::{Bc, Boundary};
pub use observe::{
    arrival_times, transition_width, ArrivalTimeMap, ExtentSample, Observer, RatesSample, RunSummary, Snapshot, Width,
    WidthSample,
};
pub use reaction::{CellValues, GridReaction};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::par::{self, Exec};

/// Fraction of the stability bound used for the default step.
pub const CFL_SAFETY: f64 = 0.9;

/// Cells per parallel work item.
const CHUNK_CELLS: usize = 1 << 14;

/// Largest stable step: the scheme is monotone when `dt (2d / h^2 + Lip_u) <= 1`.
pub fn cfl_limit(grid: &Grid, lipschitz_u: f64) -> f64 {
    let h2 = grid.h * grid.h;
    h2 / (2.0 * grid.dim as f64 + h2 * lipschitz_u)
}

#[derive(Clone, Debug)]
struct ArrivalTracker {
    threshold: f64,
    interpolate: bool,
    times: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
struct StepStats {
    min_rate: f64,
    band_min: f64,
    clamp: f64,
    clamp_events: u64,
    nonfinite: Option<usize>,
}

impl StepStats {
    fn empty() -> Self {
        StepStats { min_rate: f64::INFINITY, band_min: f64::INFINITY, clamp: 0.0, clamp_events: 0, nonfinite: None }
    }

    fn merge(mut self, o: StepStats) -> Self {
        self.min_rate = self.min_rate.min(o.min_rate);
        self.band_min = self.band_min.min(o.band_min);
        self.clamp += o.clamp;
        self.clamp_events += o.clamp_events;
        self.nonfinite = self.nonfinite.or(o.nonfinite);
        self
    }
}

/// Mutable integration state owned by a single driver.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub field: ScalarField,
    pub t: f64,
    pub dt: f64,
    pub reaction: Arc<GridReaction>,
    pub boundary: Boundary,
    pub step_count: u64,
    pub exec: Exec,
    /// State band `[lo, hi]` over which the minimum of `u_t` is monitored.
    pub band: (f64, f64),
    pub clamp_total: f64,
    pub clamp_events: u64,
    /// Minimum discrete `u_t` over all steps so far.
    pub min_rate: f64,
    band_min: f64,
    arrival: Option<ArrivalTracker>,
    scratch: Vec<f64>,
}

impl SolverState {
    /// State at `t = 0` with the default step `CFL_SAFETY * cfl_limit`.
    pub fn new(field: ScalarField, reaction: GridReaction, boundary: Boundary) -> Result<Self> {
        let reaction = Arc::new(reaction);
        if let CellValues::Cells(c) = &reaction.envelope {
            if c.len() != field.values.len() {
                return Err(Error::Config("reaction table does not match the grid".into()));
            }
        }
        let dt = CFL_SAFETY * cfl_limit(&field.grid, reaction.lipschitz_u());
        let n = field.values.len();
        Ok(SolverState {
            field,
            t: 0.0,
            dt,
            reaction,
            boundary,
            step_count: 0,
            exec: Exec::default(),
            band: (0.0, 1.0),
            clamp_total: 0.0,
            clamp_events: 0,
            min_rate: f64::INFINITY,
            band_min: f64::INFINITY,
            arrival: None,
            scratch: vec![0.0; n],
        })
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Result<Self> {
        let limit = self.cfl_limit();
        if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
            return Err(Error::Cfl { dt, limit });
        }
        self.dt = dt;
        Ok(self)
    }

    pub fn cfl_limit(&self) -> f64 {
        cfl_limit(&self.field.grid, self.reaction.lipschitz_u())
    }

    /// Start recording first-crossing times of `threshold` (closed crossing `u >= threshold`).
    pub fn track_arrivals(&mut self, threshold: f64, interpolate: bool) {
        let t = self.t;
        let times = self.field.values.iter().map(|&u| if u >= threshold { t } else { f64::INFINITY }).collect();
        self.arrival = Some(ArrivalTracker { threshold, interpolate, times });
    }

    pub fn arrival_map(&self) -> Option<ArrivalTimeMap> {
        self.arrival.as_ref().map(|a| ArrivalTimeMap {
            threshold: a.threshold,
            interpolated: a.interpolate,
            grid: self.field.grid.clone(),
            times: a.times.clone(),
        })
    }

    pub(crate) fn arrival_time(&self, idx: usize) -> Option<f64> {
        self.arrival.as_ref().map(|a| a.times[idx])
    }

    /// Minimum of `u_t` over the monitored band since the last call.
    pub fn take_band_min(&mut self) -> f64 {
        std::mem::replace(&mut self.band_min, f64::INFINITY)
    }

    /// One step of size `self.dt`.
    pub fn step(&mut self) -> Result<()> {
        let dt = self.dt;
        self.advance(dt)
    }

    /// One step of size `dt <= self.dt`.
    pub(crate) fn advance(&mut self, dt: f64) -> Result<()> {
        let limit = self.cfl_limit();
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::Cfl { dt, limit });
        }
        let grid = &self.field.grid;
        let n0 = grid.shape[0];
        let rows_per_chunk = (CHUNK_CELLS / n0).max(1);
        let chunk = rows_per_chunk * n0;
        let ctx = Kernel {
            old: &self.field.values,
            grid,
            bc: &self.boundary,
            reaction: &self.reaction,
            dt,
            inv_h2: 1.0 / (grid.h * grid.h),
            t: self.t,
            band: self.band,
        };
        let stats = match &mut self.arrival {
            Some(arr) => {
                let (thr, interp) = (arr.threshold, arr.interpolate);
                par::map_chunks2(self.exec, &mut self.scratch, &mut arr.times, chunk, |ci, new, times| {
                    ctx.rows(ci * rows_per_chunk, new, Some((times, thr, interp)))
                })
            }
            None => {
                let mut out = Vec::new();
                let exec = self.exec;
                let parts: Vec<(usize, &mut [f64])> = self.scratch.chunks_mut(chunk).enumerate().collect();
                out.extend(par::map_vec(exec, parts, |(ci, new)| ctx.rows(ci * rows_per_chunk, new, None)));
                out
            }
        };
        let stats = stats.into_iter().fold(StepStats::empty(), StepStats::merge);
        if let Some(index) = stats.nonfinite {
            return Err(Error::NonFinite { index, t: self.t });
        }
        std::mem::swap(&mut self.field.values, &mut self.scratch);
        self.t += dt;
        self.step_count += 1;
        self.clamp_total += stats.clamp;
        self.clamp_events += stats.clamp_events;
        self.min_rate = self.min_rate.min(stats.min_rate);
        self.band_min = self.band_min.min(stats.band_min);
        Ok(())
    }
}

/// Free-function form of [`SolverState::step`].
pub fn step(mut state: SolverState) -> Result<SolverState> {
    state.step()?;
    Ok(state)
}

struct Kernel<'a> {
    old: &'a [f64],
    grid: &'a Grid,
    bc: &'a Boundary,
    reaction: &'a GridReaction,
    dt: f64,
    inv_h2: f64,
    t: f64,
    band: (f64, f64),
}

#[inline]
fn ghost(bc: Bc, own: f64, wrap: f64) -> f64 {
    match bc {
        Bc::Dirichlet(v) => v,
        Bc::Neumann => own,
        Bc::Periodic => wrap,
    }
}

impl Kernel<'_> {
    fn rows(&self, first_row: usize, new: &mut [f64], mut times: Option<(&mut [f64], f64, bool)>) -> StepStats {
        let g = self.grid;
        let n0 = g.shape[0];
        let mut lap = vec![0.0; n0];
        let mut stats = StepStats::empty();
        let inv_dt = 1.0 / self.dt;
        for (r, new_row) in new.chunks_mut(n0).enumerate() {
            let row = first_row + r;
            let base = row * n0;
            let c = &self.old[base..base + n0];
            // axis 0
            let left = ghost(self.bc.lo[0], c[0], c[n0 - 1]);
            let right = ghost(self.bc.hi[0], c[n0 - 1], c[0]);
            if n0 == 1 {
                lap[0] = left + right - 2.0 * c[0];
            } else {
                lap[0] = left + c[1] - 2.0 * c[0];
                lap[n0 - 1] = c[n0 - 2] + right - 2.0 * c[n0 - 1];
                for i in 1..n0 - 1 {
                    lap[i] = c[i - 1] + c[i + 1] - 2.0 * c[i];
                }
            }
            // transverse axes
            let coords = [0, row % g.shape[1], row / g.shape[1]];
            for a in 1..g.dim {
                let na = g.shape[a];
                let stride = if a == 1 { n0 } else { n0 * g.shape[1] };
                let ja = coords[a];
                for (side, bc) in [(-1i64, self.bc.lo[a]), (1i64, self.bc.hi[a])] {
                    let jn = ja as i64 + side;
                    let src = if jn >= 0 && (jn as usize) < na {
                        Some(base as i64 + side * stride as i64)
                    } else {
                        match bc {
                            Bc::Dirichlet(v) => {
                                for i in 0..n0 {
                                    lap[i] += v - c[i];
                                }
                                None
                            }
                            Bc::Neumann => None,
                            Bc::Periodic => Some(base as i64 - side * ((na - 1) * stride) as i64),
                        }
                    };
                    if let Some(s) = src {
                        let nb = &self.old[s as usize..s as usize + n0];
                        for i in 0..n0 {
                            lap[i] += nb[i] - c[i];
                        }
                    }
                }
            }
            for i in 0..n0 {
                let u = c[i];
                let mut v = u + self.dt * (lap[i] * self.inv_h2 + self.reaction.rate(base + i, u));
                if !v.is_finite() {
                    stats.nonfinite.get_or_insert(base + i);
                    v = u;
                }
                if v < 0.0 || v > 1.0 {
                    let w = v.clamp(0.0, 1.0);
                    stats.clamp += (v - w).abs();
                    stats.clamp_events += 1;
                    v = w;
                }
                let rate = (v - u) * inv_dt;
                stats.min_rate = stats.min_rate.min(rate);
                if u >= self.band.0 && u <= self.band.1 {
                    stats.band_min = stats.band_min.min(rate);
                }
                if let Some((tm, thr, interp)) = times.as_mut() {
                    let slot = &mut tm[r * n0 + i];
                    if *slot == f64::INFINITY && v >= *thr {
                        let frac = if *interp && v > u { ((*thr - u) / (v - u)).clamp(0.0, 1.0) } else { 1.0 };
                        *slot = self.t + frac * self.dt;
                    }
                }
                new_row[i] = v;
            }
        }
        stats
    }
}

/// Integrate to `t_end`, firing observers at their cadence.
pub fn run(state: &mut SolverState, t_end: f64, observers: &[Observer]) -> Result<RunSummary> {
    observe::run(state, t_end, observers)
}
