use serde::{Deserialize, Serialize};

use super::SolverState;
use crate::edt;
use crate::error::{config, Result};
use crate::grid::{reached_set, Grid, Mask, ScalarField};

/// Relative tolerance for landing on event times.
const EVENT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum Observer {
    /// First crossing of `threshold`; stop early once every node in `stop_on` is reached.
    Arrival { threshold: f64, interpolate: bool, stop_on: Vec<usize> },
    /// Transition widths `L_{u, eta, theta}` for each `eta`, every `every` time units.
    Width { etas: Vec<f64>, theta: f64, every: f64 },
    /// Field copies at the listed times.
    Snapshots { times: Vec<f64> },
    /// Minimum of `u_t` over the monitored state band, per cadence interval.
    Rates { every: f64 },
    /// Extent of `{u >= theta}`: furthest axis-0 coordinate and volume.
    Extent { theta: f64, every: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Width {
    Finite(f64),
    Infinite,
}

impl Width {
    pub fn value(self) -> f64 {
        match self {
            Width::Finite(v) => v,
            Width::Infinite => f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthSample {
    pub t: f64,
    pub eta: f64,
    pub width: Width,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub field: ScalarField,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatesSample {
    pub t: f64,
    pub band_min: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtentSample {
    pub t: f64,
    /// Largest axis-0 coordinate with `u >= theta`, linearly interpolated between nodes.
    pub front: f64,
    pub volume: f64,
}

/// First-crossing times; `f64::INFINITY` marks unreached nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct ArrivalTimeMap {
    pub threshold: f64,
    pub interpolated: bool,
    pub grid: Grid,
    pub times: Vec<f64>,
}

impl ArrivalTimeMap {
    pub fn get(&self, idx: usize) -> Option<f64> {
        let t = self.times[idx];
        t.is_finite().then_some(t)
    }

    pub fn reached(&self) -> usize {
        self.times.iter().filter(|t| t.is_finite()).count()
    }

    pub fn to_field(&self) -> ScalarField {
        ScalarField { grid: self.grid.clone(), values: self.times.clone() }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunSummary {
    pub t_start: f64,
    pub t_end: f64,
    pub steps: u64,
    pub clamp_total: f64,
    pub clamp_events: u64,
    pub min_rate: f64,
    pub stopped_early: bool,
    pub arrival: Option<ArrivalTimeMap>,
    pub widths: Vec<WidthSample>,
    pub snapshots: Vec<Snapshot>,
    pub rates: Vec<RatesSample>,
    pub extents: Vec<ExtentSample>,
}

/// Arrival map recorded during a run.
pub fn arrival_times(summary: &RunSummary) -> Option<ArrivalTimeMap> {
    summary.arrival.clone()
}

/// Smallest `L` with `{u >= eta}` inside the `L`-neighbourhood of `{u >= theta}`, quantized to the grid.
pub fn transition_width(field: &ScalarField, eta: f64, theta: f64) -> Width {
    let upper = reached_set(field, theta);
    let lower: Vec<usize> = (0..field.values.len()).filter(|&i| field.values[i] >= eta).collect();
    if lower.is_empty() {
        return Width::Finite(0.0);
    }
    if upper.count() == 0 {
        return Width::Infinite;
    }
    if field.grid.dim == 1 {
        return Width::Finite(width_1d(&upper, &lower));
    }
    let d2 = edt::squared_distance(&upper);
    let worst = lower.iter().map(|&i| d2[i]).fold(0.0, f64::max);
    Width::Finite(worst.sqrt() * field.grid.h)
}

fn width_1d(upper: &Mask, lower: &[usize]) -> f64 {
    let n = upper.values.len();
    let mut left = vec![usize::MAX; n];
    let mut last = usize::MAX;
    for i in 0..n {
        if upper.values[i] {
            last = i;
        }
        left[i] = last;
    }
    let mut right = vec![usize::MAX; n];
    last = usize::MAX;
    for i in (0..n).rev() {
        if upper.values[i] {
            last = i;
        }
        right[i] = last;
    }
    let worst = lower
        .iter()
        .map(|&i| {
            let l = if left[i] == usize::MAX { usize::MAX } else { i - left[i] };
            let r = if right[i] == usize::MAX { usize::MAX } else { right[i] - i };
            l.min(r)
        })
        .max()
        .unwrap_or(0);
    worst as f64 * upper.grid.h
}

fn front_extent(field: &ScalarField, theta: f64) -> ExtentSample {
    let g = &field.grid;
    let n0 = g.shape[0];
    let mut front = f64::NEG_INFINITY;
    let mut count = 0usize;
    for (r, row) in field.values.chunks(n0).enumerate() {
        let _ = r;
        count += row.iter().filter(|&&u| u >= theta).count();
        if let Some(i) = row.iter().rposition(|&u| u >= theta) {
            let mut x = g.origin[0] + i as f64 * g.h;
            if i + 1 < n0 {
                let (a, b) = (row[i], row[i + 1]);
                if a > b {
                    x += g.h * ((a - theta) / (a - b)).clamp(0.0, 1.0);
                }
            }
            front = front.max(x);
        }
    }
    ExtentSample { t: 0.0, front, volume: count as f64 * g.cell_volume() }
}

fn cadence_times(t0: f64, t_end: f64, every: f64) -> Vec<f64> {
    let mut v = Vec::new();
    let mut k = (t0 / every - EVENT_TOL).ceil().max(0.0) as u64;
    loop {
        let t = k as f64 * every;
        if t > t_end * (1.0 + EVENT_TOL) + EVENT_TOL {
            break;
        }
        v.push(t.min(t_end));
        k += 1;
    }
    v
}

pub(super) fn run(state: &mut SolverState, t_end: f64, observers: &[Observer]) -> Result<RunSummary> {
    let t0 = state.t;
    if !(t_end >= t0) {
        return config(format!("t_end = {t_end} precedes current time {t0}"));
    }
    let mut events: Vec<f64> = vec![t_end];
    let mut stop_on: Vec<usize> = Vec::new();
    for ob in observers {
        match ob {
            Observer::Arrival { threshold, interpolate, stop_on: s } => {
                if state.arrival.is_none() {
                    state.track_arrivals(*threshold, *interpolate);
                }
                stop_on.extend_from_slice(s);
            }
            Observer::Width { every, etas, theta } => {
                if !(*every > 0.0) || etas.iter().any(|e| !(*e > 0.0 && e < theta && *theta < 1.0)) {
                    return config("width observer needs every > 0 and 0 < eta < theta < 1");
                }
                events.extend(cadence_times(t0, t_end, *every));
            }
            Observer::Rates { every } | Observer::Extent { every, .. } => {
                if !(*every > 0.0) {
                    return config("observer cadence must be positive");
                }
                events.extend(cadence_times(t0, t_end, *every));
            }
            Observer::Snapshots { times } => {
                events.extend(times.iter().cloned().filter(|t| *t >= t0 && *t <= t_end));
            }
        }
    }
    events.sort_by(|a, b| a.partial_cmp(b).unwrap());
    events.dedup_by(|a, b| (*a - *b).abs() <= EVENT_TOL * (1.0 + b.abs()));

    let mut summary = RunSummary { t_start: t0, ..Default::default() };
    let steps0 = state.step_count;
    state.take_band_min();
    let reached = |st: &SolverState| stop_on.iter().all(|&i| st.arrival_time(i).map_or(false, |t| t.is_finite()));

    let fire = |st: &mut SolverState, t: f64, summary: &mut RunSummary| {
        let mut band = None;
        for ob in observers {
            let due = |every: f64| {
                let k = (t / every).round();
                (k * every - t).abs() <= EVENT_TOL * (1.0 + t.abs()) || (t - t_end).abs() <= EVENT_TOL * (1.0 + t.abs())
            };
            match ob {
                Observer::Width { etas, theta, every } if due(*every) => {
                    for &eta in etas {
                        summary.widths.push(WidthSample { t, eta, width: transition_width(&st.field, eta, *theta) });
                    }
                }
                Observer::Snapshots { times } if times.iter().any(|s| (s - t).abs() <= EVENT_TOL * (1.0 + t.abs())) => {
                    summary.snapshots.push(Snapshot { t, field: st.field.clone() });
                }
                Observer::Rates { every } if due(*every) && t > t0 => {
                    let b = *band.get_or_insert_with(|| st.take_band_min());
                    summary.rates.push(RatesSample { t, band_min: b });
                }
                Observer::Extent { theta, every } if due(*every) => {
                    let mut e = front_extent(&st.field, *theta);
                    e.t = t;
                    summary.extents.push(e);
                }
                _ => {}
            }
        }
    };

    let mut next = 0usize;
    while next < events.len() && events[next] <= t0 + EVENT_TOL * (1.0 + t0.abs()) {
        fire(state, events[next].max(t0), &mut summary);
        next += 1;
    }
    let early_check = !stop_on.is_empty();
    while next < events.len() {
        if early_check && reached(state) {
            summary.stopped_early = true;
            break;
        }
        let target = events[next];
        let remaining = target - state.t;
        if remaining <= state.dt * (1.0 + 1e-9) {
            state.advance(remaining)?;
            state.t = target;
            fire(state, target, &mut summary);
            next += 1;
        } else {
            // avoid a sliver step right before the event
            let dt = if remaining < 2.0 * state.dt { 0.5 * remaining } else { state.dt };
            state.advance(dt)?;
        }
    }
    summary.t_end = state.t;
    summary.steps = state.step_count - steps0;
    summary.clamp_total = state.clamp_total;
    summary.clamp_events = state.clamp_events;
    summary.min_rate = state.min_rate;
    summary.arrival = state.arrival_map();
    let n = state.field.values.len() as f64;
    if state.clamp_total > 1e-8 * n {
        log::warn!("clamp total {} exceeds 1e-8 N; dt may be too large", state.clamp_total);
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn width_of_indicator_is_zero() {
        let g = Grid::new(2, &[20, 20], 0.5, &[0.0, 0.0]).unwrap();
        let f = ScalarField::from_fn(g, |p| if p[0] < 4.0 { 1.0 } else { 0.0 });
        assert_eq!(transition_width(&f, 0.1, 0.9), Width::Finite(0.0));
    }

    #[test]
    fn width_infinite_without_upper_set() {
        let g = Grid::new(1, &[10], 1.0, &[0.0]).unwrap();
        let f = ScalarField::constant(g, 0.3);
        assert_eq!(transition_width(&f, 0.1, 0.9), Width::Infinite);
    }

    #[test]
    fn width_brute_force_64() {
        let g = Grid::new(2, &[64, 64], 1.0, &[0.0, 0.0]).unwrap();
        let f = ScalarField::from_fn(g.clone(), |p| {
            let a = ((p[0] - 20.0).powi(2) + (p[1] - 30.0).powi(2)).sqrt();
            let b = ((p[0] - 45.0).powi(2) + (p[1] - 12.0).powi(2)).sqrt();
            (1.0 - a / 25.0).max(0.0).max((0.9 - b / 14.0).max(0.0))
        });
        let (eta, theta) = (0.05, 0.7);
        let mut worst = 0.0f64;
        for i in 0..g.len() {
            if f.values[i] < eta {
                continue;
            }
            let p = g.point(i);
            let mut best = f64::INFINITY;
            for j in 0..g.len() {
                if f.values[j] >= theta {
                    let q = g.point(j);
                    best = best.min(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
                }
            }
            worst = worst.max(best);
        }
        assert_eq!(transition_width(&f, eta, theta), Width::Finite(worst));
    }

    #[test]
    fn cadence_includes_end() {
        assert_eq!(cadence_times(0.0, 1.0, 0.25), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(cadence_times(0.3, 1.0, 0.5), vec![0.5, 1.0]);
    }
}
