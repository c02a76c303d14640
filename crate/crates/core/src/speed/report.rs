use serde::{Deserialize, Serialize};

use super::ensemble::{require_reached, run_ball_member, run_halfspace_ensemble, EnsembleSpec, MemberRecord};
use super::stats::{self, bootstrap, linear_fit, percentile_interval, stream_seed, BOOTSTRAP_REPS};
use super::table::{SpeedEntry, SpeedTable};
use crate::error::{config, Error, Result};
use crate::medium::{HypothesisParams, RandomMedium};
use crate::par::{self, Exec};

/// Exponent of the `l^{-gamma}` correction in `T(l)/l = Tbar + A l^{-gamma}`.
pub const DEFAULT_DEFECT_EXPONENT: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedFit {
    pub direction: Vec<f64>,
    pub tbar: f64,
    pub c_star: f64,
    pub stderr: f64,
    /// 95% bootstrap interval of `c*`.
    pub ci95: (f64, f64),
    pub gamma: f64,
    pub l_range: (f64, f64),
    /// Residuals of the mean slopes `E T(l) / l` around the fit.
    pub residuals: Vec<f64>,
    pub members: Vec<MemberRecord>,
}

impl SpeedFit {
    pub fn entry(&self) -> SpeedEntry {
        SpeedEntry {
            direction: self.direction.clone(),
            tbar: self.tbar,
            c_star: self.c_star,
            stderr: self.stderr,
            l_range: self.l_range,
        }
    }
}

fn distances(runs: &[MemberRecord]) -> Vec<f64> {
    runs[0].distances.clone()
}

/// Mean arrival slope per probe over the members `idx`.
fn mean_times(runs: &[MemberRecord], idx: &[usize]) -> Vec<f64> {
    let np = runs[0].times.len();
    (0..np).map(|p| idx.iter().map(|&i| runs[i].times[p]).sum::<f64>() / idx.len() as f64).collect()
}

fn intercept(l: &[f64], t: &[f64], gamma: f64) -> (f64, Vec<f64>) {
    let x: Vec<f64> = l.iter().map(|v| v.powf(-gamma)).collect();
    let y: Vec<f64> = l.iter().zip(t).map(|(l, t)| t / l).collect();
    let f = linear_fit(&x, &y, None);
    (f.intercept, f.residuals)
}

/// Extrapolated `Tbar` from member records.
pub fn speed_from_runs(runs: &[MemberRecord], direction: &[f64], gamma: f64) -> Result<SpeedFit> {
    if runs.is_empty() {
        return config("no ensemble members");
    }
    require_reached(runs)?;
    let l = distances(runs);
    let all: Vec<usize> = (0..runs.len()).collect();
    let (tbar, residuals) = intercept(&l, &mean_times(runs, &all), gamma);
    if !(tbar > 0.0) {
        return Err(Error::Numeric(format!("extrapolated arrival slope {tbar} is not positive")));
    }
    let seeds: Vec<u64> = runs.iter().map(|r| r.seed).collect();
    let reps = bootstrap(runs.len(), BOOTSTRAP_REPS, stream_seed(&seeds, 1), |ix| {
        let tb = intercept(&l, &mean_times(runs, ix), gamma).0;
        1.0 / tb
    });
    let ci95 = percentile_interval(&reps, 0.95);
    let finite: Vec<f64> = reps.into_iter().filter(|v| v.is_finite()).collect();
    let lmin = l.iter().cloned().fold(f64::INFINITY, f64::min);
    let lmax = l.iter().cloned().fold(0.0, f64::max);
    Ok(SpeedFit {
        direction: direction.to_vec(),
        tbar,
        c_star: 1.0 / tbar,
        stderr: stats::sd(&finite),
        ci95,
        gamma,
        l_range: (lmin, lmax),
        residuals,
        members: runs.to_vec(),
    })
}

/// Front speed `c*(e)` from a half-space ensemble.
pub fn estimate_front_speed(spec: &EnsembleSpec, e: &[f64]) -> Result<SpeedFit> {
    estimate_front_speed_with(spec, e, DEFAULT_DEFECT_EXPONENT)
}

pub fn estimate_front_speed_with(spec: &EnsembleSpec, e: &[f64], gamma: f64) -> Result<SpeedFit> {
    let lmin = spec.probes.iter().cloned().fold(f64::INFINITY, f64::min);
    let lmax = spec.probes.iter().cloned().fold(0.0, f64::max);
    if spec.probes.len() < 2 || lmax < 4.0 * lmin {
        return config("front speed needs at least 2 probe offsets spanning a factor of 4");
    }
    if spec.seeds.len() < 8 {
        return config(format!("front speed needs at least 8 seeds, got {}", spec.seeds.len()));
    }
    let runs = run_halfspace_ensemble(spec, e)?;
    speed_from_runs(&runs, e, gamma)
}

/// Speed table over several directions; directions run one after another, members in parallel.
pub fn estimate_speed_table(spec: &EnsembleSpec, directions: &[Vec<f64>], gamma: f64) -> Result<(SpeedTable, Vec<SpeedFit>)> {
    let fits: Vec<SpeedFit> = directions.iter().map(|e| estimate_front_speed_with(spec, e, gamma)).collect::<Result<_>>()?;
    let table = SpeedTable::from_entries(spec.medium.dim, fits.iter().map(|f| f.entry()).collect())?;
    Ok((table, fits))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectRow {
    pub l: f64,
    pub m: f64,
    /// `|E T((l+m)e) - E T(le) - E T(me)|`.
    pub defect: f64,
    /// Bootstrap standard error.
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearityReport {
    pub rows: Vec<DefectRow>,
    /// Log-log growth exponent of the defect against `l + m`; `None` if any defect vanishes.
    pub exponent: Option<f64>,
    pub exponent_ci: Option<(f64, f64)>,
}

fn probe_index(l: &[f64], v: f64, tol: f64) -> Option<usize> {
    l.iter().position(|x| (x - v).abs() <= tol)
}

fn defect(runs: &[MemberRecord], idx: &[usize], a: usize, b: usize, c: usize) -> f64 {
    let t = mean_times(runs, idx);
    (t[c] - t[a] - t[b]).abs()
}

/// Additivity defects from half-space members. `pairs` lists `(l, m)` whose sum is also a probe.
pub fn linearity_from_runs(runs: &[MemberRecord], pairs: &[(f64, f64)]) -> Result<LinearityReport> {
    require_reached(runs)?;
    let l = distances(runs);
    let tol = 0.5 * runs[0].h;
    let mut triples = Vec::new();
    for &(a, b) in pairs {
        let (Some(i), Some(j), Some(k)) = (probe_index(&l, a, tol), probe_index(&l, b, tol), probe_index(&l, a + b, tol)) else {
            return config(format!("probe set lacks the triple ({a}, {b}, {})", a + b));
        };
        triples.push((i, j, k));
    }
    if triples.is_empty() {
        return config("additivity needs at least one (l, m, l + m) triple");
    }
    let all: Vec<usize> = (0..runs.len()).collect();
    let seeds: Vec<u64> = runs.iter().map(|r| r.seed).collect();
    let rows: Vec<DefectRow> = triples
        .iter()
        .map(|&(i, j, k)| {
            let reps = bootstrap(runs.len(), BOOTSTRAP_REPS, stream_seed(&seeds, 2 + k as u64), |ix| defect(runs, ix, i, j, k));
            DefectRow { l: l[i], m: l[j], defect: defect(runs, &all, i, j, k), stderr: stats::sd(&reps) }
        })
        .collect();
    let slope = |ix: &[usize]| -> f64 {
        let x: Vec<f64> = triples.iter().map(|&(_, _, k)| l[k].ln()).collect();
        let y: Vec<f64> = triples.iter().map(|&(i, j, k)| defect(runs, ix, i, j, k).max(1e-300).ln()).collect();
        linear_fit(&x, &y, None).slope
    };
    let distinct = {
        let mut s: Vec<usize> = triples.iter().map(|t| t.2).collect();
        s.sort_unstable();
        s.dedup();
        s.len()
    };
    let (exponent, exponent_ci) = if distinct >= 2 && rows.iter().all(|r| r.defect > 0.0) {
        let reps = bootstrap(runs.len(), BOOTSTRAP_REPS, stream_seed(&seeds, 99), slope);
        (Some(slope(&all)), Some(percentile_interval(&reps, 0.95)))
    } else {
        (None, None)
    };
    Ok(LinearityReport { rows, exponent, exponent_ci })
}

pub fn mean_linearity(spec: &EnsembleSpec, e: &[f64], pairs: &[(f64, f64)]) -> Result<LinearityReport> {
    let runs = run_halfspace_ensemble(spec, e)?;
    linearity_from_runs(&runs, pairs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceStats {
    pub distance: f64,
    pub mean: f64,
    pub sd: f64,
    /// 5%, 25%, 50%, 75%, 95% quantiles.
    pub quantiles: [f64; 5],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    /// Smallest `C` for which the envelope dominates every tail point.
    pub c_envelope: f64,
    pub c_median: f64,
    /// `ln P_emp - ln envelope` at each tail point with `C = c_envelope` (all <= 0).
    pub residuals: Vec<f64>,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluctuationReport {
    pub rows: Vec<DistanceStats>,
    /// Log-log slope of `sd[T]` against distance; `None` if some sd vanishes.
    pub exponent: Option<f64>,
    pub exponent_ci: Option<(f64, f64)>,
    pub exponent_residuals: Vec<f64>,
    pub tail: Option<TailFit>,
    pub rho: f64,
    pub beta1: f64,
}

pub const MIN_FLUCTUATION_SEEDS: usize = 32;
/// Tail fits use deviations above this empirical quantile.
pub const TAIL_QUANTILE: f64 = 0.6;

/// Range of dependence of a medium realization.
pub fn dependence_range(medium: &RandomMedium) -> f64 {
    match medium.spec.range {
        Some(n) => n,
        None => 2.0 * medium.window,
    }
}

pub fn fluctuations_from_runs(runs: &[MemberRecord], rho: f64, beta1: f64) -> Result<FluctuationReport> {
    if runs.len() < MIN_FLUCTUATION_SEEDS {
        return config(format!("fluctuation statistics need at least {MIN_FLUCTUATION_SEEDS} seeds, got {}", runs.len()));
    }
    require_reached(runs)?;
    let l = distances(runs);
    let column = |p: usize, ix: &[usize]| -> Vec<f64> { ix.iter().map(|&i| runs[i].times[p]).collect() };
    let all: Vec<usize> = (0..runs.len()).collect();
    let rows: Vec<DistanceStats> = (0..l.len())
        .map(|p| {
            let v = column(p, &all);
            let q = [0.05, 0.25, 0.5, 0.75, 0.95].map(|q| stats::quantile(&v, q));
            DistanceStats { distance: l[p], mean: stats::mean(&v), sd: stats::sd(&v), quantiles: q }
        })
        .collect();
    let x: Vec<f64> = l.iter().map(|v| v.ln()).collect();
    let slope = |ix: &[usize]| -> f64 {
        let y: Vec<f64> = (0..l.len()).map(|p| stats::sd(&column(p, ix)).max(1e-300).ln()).collect();
        linear_fit(&x, &y, None).slope
    };
    let seeds: Vec<u64> = runs.iter().map(|r| r.seed).collect();
    let noisy = rows.iter().all(|r| r.sd > 1e-9 * r.mean.abs().max(1.0));
    let (exponent, exponent_ci, exponent_residuals) = if noisy && l.len() >= 2 {
        let y: Vec<f64> = rows.iter().map(|r| r.sd.ln()).collect();
        let fit = linear_fit(&x, &y, None);
        let reps = bootstrap(runs.len(), BOOTSTRAP_REPS, stream_seed(&seeds, 7), slope);
        (Some(fit.slope), Some(percentile_interval(&reps, 0.95)), fit.residuals)
    } else {
        (None, None, Vec::new())
    };
    let tail = if noisy { Some(tail_fit(runs, &l, &rows, rho, beta1)) } else { None };
    Ok(FluctuationReport { rows, exponent, exponent_ci, exponent_residuals, tail, rho, beta1 })
}

/// Fit `C` in `P(|T - E T| >= lambda) <= 2 exp(-lambda^2 / (C (1 + D)(rho + D^beta1)))`.
fn tail_fit(runs: &[MemberRecord], l: &[f64], rows: &[DistanceStats], rho: f64, beta1: f64) -> TailFit {
    let n = runs.len() as f64;
    let mut pts: Vec<(f64, f64, f64)> = Vec::new();
    for (p, row) in rows.iter().enumerate() {
        let mut dev: Vec<f64> = runs.iter().map(|r| (r.times[p] - row.mean).abs()).collect();
        dev.sort_by(f64::total_cmp);
        let cut = stats::quantile_sorted(&dev, TAIL_QUANTILE);
        let scale = (1.0 + l[p]) * (rho + l[p].powf(beta1));
        for (k, &lam) in dev.iter().enumerate() {
            if lam <= cut || lam == 0.0 {
                continue;
            }
            let prob = (dev.len() - k) as f64 / n;
            pts.push((lam, prob, scale));
        }
    }
    let cs: Vec<f64> = pts.iter().map(|&(lam, prob, scale)| -lam * lam / (scale * (prob / 2.0).ln())).collect();
    let c_envelope = cs.iter().cloned().fold(0.0, f64::max);
    let c_median = if cs.is_empty() { 0.0 } else { stats::quantile(&cs, 0.5) };
    let residuals = pts
        .iter()
        .map(|&(lam, prob, scale)| prob.ln() - (2.0f64.ln() - lam * lam / (c_envelope * scale)))
        .collect();
    TailFit { c_envelope, c_median, residuals, points: pts.len() }
}

pub fn fluctuation_stats(spec: &EnsembleSpec, e: &[f64]) -> Result<FluctuationReport> {
    if spec.seeds.len() < MIN_FLUCTUATION_SEEDS {
        return config(format!("fluctuation statistics need at least {MIN_FLUCTUATION_SEEDS} seeds, got {}", spec.seeds.len()));
    }
    let mut d: Vec<f64> = spec.probes.clone();
    d.sort_by(f64::total_cmp);
    d.dedup();
    if d.len() < 4 || d[d.len() - 1] < 4.0 * d[0] {
        return config("fluctuation statistics need probes at 4 or more distances spanning a factor of 4");
    }
    let runs = run_halfspace_ensemble(spec, e)?;
    let medium = RandomMedium::new(spec.medium.clone(), spec.seeds[0])?;
    let params = HypothesisParams::for_medium(&medium, &spec.overrides)?;
    fluctuations_from_runs(&runs, dependence_range(&medium), params.beta1)
}

/// Normalized reached set `Gamma(t) / t` of ball-source runs, sampled along rays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WulffEstimate {
    pub t: f64,
    pub angles: Vec<f64>,
    /// Seed-averaged boundary radius divided by `t`.
    pub radius: Vec<f64>,
    /// Support function `sup_{y in Gamma/t} y . e(angle)` at the same angles.
    pub support: Vec<f64>,
    pub per_seed: Vec<Vec<f64>>,
}

impl WulffEstimate {
    /// Support function at an arbitrary direction.
    pub fn support_at(&self, e: &[f64]) -> f64 {
        self.angles
            .iter()
            .zip(&self.radius)
            .map(|(a, r)| r * (a.cos() * e[0] + a.sin() * e[1]))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Outermost radius along the ray at `angle` whose node interpolant stays at or above `theta`.
pub fn ray_boundary(field: &crate::grid::ScalarField, angle: f64, theta: f64) -> f64 {
    let g = &field.grid;
    let step = 0.25 * g.h;
    let rmax = (0..2).map(|a| (g.origin[a].abs()).min((g.origin[a] + (g.shape[a] - 1) as f64 * g.h).abs())).fold(f64::INFINITY, f64::min);
    let (s, c) = angle.sin_cos();
    let val = |r: f64| field.sample_2d([r * c, r * s]);
    let mut r = 0.0;
    let mut last_in = if val(0.0) >= theta { Some(0.0) } else { None };
    while r + step <= rmax {
        r += step;
        if val(r) >= theta {
            last_in = Some(r);
        }
    }
    let Some(r_in) = last_in else { return 0.0 };
    // refine between r_in and r_in + step by bisection on the interpolant
    let (mut a, mut b) = (r_in, (r_in + step).min(rmax));
    for _ in 0..30 {
        let m = 0.5 * (a + b);
        if val(m) >= theta {
            a = m;
        } else {
            b = m;
        }
    }
    a
}

pub fn estimate_wulff(spec: &EnsembleSpec, source_radius: f64, t: f64, n_angles: usize) -> Result<WulffEstimate> {
    if spec.medium.dim != 2 {
        return config("Wulff estimates need a 2D medium");
    }
    let seeds = spec.sorted_seeds();
    let seeds = if spec.medium.is_homogeneous() { vec![seeds[0]] } else { seeds };
    let inner = if seeds.len() > 1 { Exec::Sequential } else { spec.exec };
    let runs = par::map(spec.exec, &seeds, |&s| run_ball_member(spec, source_radius, &[t], s, inner))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let angles: Vec<f64> = (0..n_angles).map(|i| 2.0 * std::f64::consts::PI * i as f64 / n_angles as f64).collect();
    let per_seed: Vec<Vec<f64>> = runs
        .iter()
        .map(|r| {
            let snap = r.snapshots.last().expect("snapshot at t");
            angles.iter().map(|&a| ray_boundary(&snap.field, a, r.threshold) / t).collect()
        })
        .collect();
    let radius: Vec<f64> = (0..n_angles).map(|i| per_seed.iter().map(|v| v[i]).sum::<f64>() / per_seed.len() as f64).collect();
    let diam = 2.0 * radius.iter().cloned().fold(f64::INFINITY, f64::min) * t;
    if diam < 20.0 * source_radius {
        log::warn!("reached-set diameter {diam} is below ten source diameters");
    }
    let mut est = WulffEstimate { t, angles: angles.clone(), radius, support: Vec::new(), per_seed };
    est.support = angles.iter().map(|a| est.support_at(&[a.cos(), a.sin()])).collect();
    Ok(est)
}
