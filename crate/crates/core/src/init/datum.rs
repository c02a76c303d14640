use serde::{Deserialize, Serialize};

use super::mollifier::{sphere_area, MollifiedBump};
use super::psi::Psi;
use crate::edt;
use crate::error::{config, Error, Result};
use crate::grid::{Frame, Grid, Mask, ScalarField};
use crate::medium::IgnitionProfile;
use crate::par::{self, Exec};
use crate::quad::Rule;

/// Mollification radius `a` of the construction.
pub const MOLLIFIER_A: f64 = 0.03125;
/// Inflation factor `N`: the indicator of `B_{NR}(S)` is mollified at scale `R`.
pub const INFLATION_N: f64 = 1.0;
/// Largest scale tried by the search.
const SCALE_MAX: f64 = 1e5;
/// Samples per unit of `aR` used by the scale search.
const SEARCH_RESOLUTION: f64 = 16.0;

/// Source set `S` of an initial datum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceSet {
    /// `S = R^d`.
    Everywhere,
    Ball { center: Vec<f64>, radius: f64 },
    /// `{x : x·normal < offset}` with a unit normal.
    HalfSpace { normal: Vec<f64>, offset: f64 },
    /// Intersection of `{x : x·normals[i] < offsets[i]}`.
    Polytope { normals: Vec<Vec<f64>>, offsets: Vec<f64> },
    /// Raster on the target grid.
    Raster { mask: Mask },
}

impl SourceSet {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            SourceSet::Everywhere => true,
            SourceSet::Ball { center, radius } => dist(x, center) < *radius,
            SourceSet::HalfSpace { normal, offset } => dot(x, normal) < *offset,
            SourceSet::Polytope { normals, offsets } => normals.iter().zip(offsets).all(|(n, b)| dot(x, n) < *b),
            SourceSet::Raster { .. } => false,
        }
    }

    fn check(&self, dim: usize) -> Result<()> {
        let unit = |n: &Vec<f64>| n.len() == dim && (dot(n, n).sqrt() - 1.0).abs() < 1e-9;
        match self {
            SourceSet::Ball { center, radius } if center.len() != dim || !(*radius > 0.0) => {
                config(format!("ball needs a {dim}-dimensional center and positive radius"))
            }
            SourceSet::HalfSpace { normal, .. } if !unit(normal) => config("half-space normal must be a unit vector"),
            SourceSet::Polytope { normals, offsets } if normals.len() != offsets.len() || !normals.iter().all(unit) => {
                config("polytope needs unit normals and one offset per normal")
            }
            _ => Ok(()),
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatumKind {
    /// Smooth sub-solution obtained by mollification and reparameterization.
    #[default]
    Smooth,
    /// `(1 - theta*) chi_S`.
    Step,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatumOptions {
    pub theta_star: f64,
    pub theta1: f64,
    #[serde(default)]
    pub a_shift: f64,
    #[serde(default)]
    pub kind: DatumKind,
    /// Fixed mollification scale `R`; searched when absent.
    #[serde(default)]
    pub scale: Option<f64>,
    /// Admissible negative defect in the sub-solution check.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub frame: Frame,
    #[serde(skip)]
    pub exec: Exec,
}

fn default_tol() -> f64 {
    1e-6
}

impl DatumOptions {
    pub fn new(theta_star: f64, theta1: f64) -> Self {
        DatumOptions {
            theta_star,
            theta1,
            a_shift: 0.0,
            kind: DatumKind::Smooth,
            scale: None,
            tol: default_tol(),
            frame: Frame::identity(),
            exec: Exec::default(),
        }
    }

    pub fn step(mut self) -> Self {
        self.kind = DatumKind::Step;
        self
    }
}

/// Constants of a smooth construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Construction {
    pub a: f64,
    pub n: f64,
    pub scale: f64,
    pub psi: Psi,
    /// `max(|psi'|, |psi''|)`.
    pub l_const: f64,
    /// `min F0` on `[1 - 2 theta1 / 3, 1 - theta*]`.
    pub delta: f64,
}

#[derive(Clone, Debug)]
pub struct InitialDatum {
    pub field: ScalarField,
    pub source: SourceSet,
    pub frame: Frame,
    pub r0: f64,
    pub theta_star: f64,
    pub a_shift: f64,
    pub kind: DatumKind,
    pub construction: Option<Construction>,
    /// Minimum over interior nodes of `Δ_h u + F(u)`.
    pub defect_min: f64,
    pub defect_argmin: Option<usize>,
}

impl InitialDatum {
    /// Outer edge of the support along the half-space normal (`offset + R0`).
    pub fn launch_offset(&self) -> Option<f64> {
        match &self.source {
            SourceSet::HalfSpace { offset, .. } => Some(offset + self.r0),
            _ => None,
        }
    }
}

/// Reaction lower bound used in the sub-solution check, including the a-shift rescaling.
fn shifted_f0(profile: &IgnitionProfile, a: f64) -> impl Fn(f64) -> f64 + Sync + '_ {
    move |v| (1.0 - a) * profile.eval((v - a) / (1.0 - a))
}

/// Radial or planar profile `W` of a smooth datum before the a-shift.
struct Profile1d<'a> {
    bump: MollifiedBump,
    psi: &'a Psi,
    top: f64,
    /// Radius of `B_{NR}(S)` for balls, `NR` for half-spaces.
    rho: f64,
    ball: bool,
    rule: Rule,
    mass: f64,
}

impl<'a> Profile1d<'a> {
    fn new(dim: usize, scale: f64, psi: &'a Psi, top: f64, ball_radius: Option<f64>) -> Result<Self> {
        let kdim = if ball_radius.is_some() { dim } else { 1 };
        let bump = MollifiedBump::new(kdim, MOLLIFIER_A, scale)?;
        let rule = Rule::new(8);
        let rho = ball_radius.unwrap_or(0.0) + INFLATION_N * scale;
        let mut p = Profile1d { bump, psi, top, rho, ball: ball_radius.is_some(), rule, mass: 1.0 };
        if p.ball && kdim > 1 {
            p.mass = p.radial_mass(p.bump.support());
        }
        Ok(p)
    }

    fn radial_mass(&self, b: f64) -> f64 {
        let d = self.bump.dim as i32;
        let area = sphere_area(self.bump.dim);
        self.rule.composite(0.0, b, 32, |s| area * s.powi(d - 1) * self.bump.eval(s))
    }

    /// Fraction of `phi_{a,R}` mass lying in `B_rho` seen from radius `r` (balls, `dim >= 2`).
    fn ball_fraction(&self, r: f64) -> f64 {
        let supp = self.bump.support();
        let rho = self.rho;
        if r + supp <= rho {
            return 1.0;
        }
        if r - supp >= rho {
            return 0.0;
        }
        let d = self.bump.dim;
        let b1 = (rho - r).abs();
        let inner = if r < rho { self.radial_mass(b1) } else { 0.0 };
        let c = (rho + r).min(supp);
        let area = |s: f64| -> f64 {
            if s <= 0.0 || r == 0.0 {
                return 0.0;
            }
            let cosine = ((r * r + s * s - rho * rho) / (2.0 * r * s)).clamp(-1.0, 1.0);
            match d {
                2 => 2.0 * s * cosine.acos(),
                _ => 2.0 * std::f64::consts::PI * s * s * (1.0 - cosine),
            }
        };
        // cosine map removes the square-root endpoint behaviour of the spherical measure
        let len = c - b1;
        let partial = if len > 0.0 {
            self.rule.composite(0.0, 1.0, 16, |tau| {
                let th = std::f64::consts::PI * tau;
                let s = b1 + 0.5 * len * (1.0 - th.cos());
                let js = 0.5 * len * std::f64::consts::PI * th.sin();
                self.bump.eval(s) * area(s) * js
            })
        } else {
            0.0
        };
        ((inner + partial) / self.mass).clamp(0.0, 1.0)
    }

    /// `u_L` at signed distance `z` (half-spaces) or radius `r` (balls).
    fn ul(&self, z: f64) -> f64 {
        let frac = if !self.ball {
            1.0 - self.bump.cdf_1d(z - self.rho)
        } else if self.bump.dim == 1 {
            self.bump.cdf_1d(z + self.rho) - self.bump.cdf_1d(z - self.rho)
        } else {
            self.ball_fraction(z)
        };
        self.top * frac
    }

    fn w(&self, z: f64) -> f64 {
        self.psi.eval(self.ul(z))
    }
}

enum Geometry {
    Plane,
    Ball { radius: f64 },
}

/// Smallest scale `R` on a geometric ladder for which the continuous-profile defect is nonnegative.
fn search_scale(
    profile: &IgnitionProfile,
    psi: &Psi,
    opts: &DatumOptions,
    dim: usize,
    geom: &Geometry,
    h: f64,
) -> Result<f64> {
    let r_min = (4.0 * h / MOLLIFIER_A).max(1.0);
    let passes = |scale: f64| -> Result<bool> {
        let ball = match geom {
            Geometry::Plane => None,
            Geometry::Ball { radius } => Some(*radius),
        };
        let prof = Profile1d::new(dim, scale, psi, psi.top, ball)?;
        let hs = h.min(MOLLIFIER_A * scale / SEARCH_RESOLUTION);
        let (lo, hi) = match geom {
            Geometry::Plane => (INFLATION_N * scale - 0.6 * scale, INFLATION_N * scale + 0.6 * scale),
            Geometry::Ball { radius } => ((radius + (INFLATION_N - 0.6) * scale).max(0.0), radius + (INFLATION_N + 0.6) * scale),
        };
        let n = ((hi - lo) / hs).ceil() as usize;
        let f = shifted_f0(profile, 0.0);
        let ok = par::map_range(opts.exec, n + 1, |j| {
            let z = lo + j as f64 * hs;
            let (wm, w0, wp) = (prof.w((z - hs).abs()), prof.w(z), prof.w(z + hs));
            let mut lap = (wm - 2.0 * w0 + wp) / (hs * hs);
            if let Geometry::Ball { .. } = geom {
                if z > hs {
                    lap += (dim as f64 - 1.0) / z * (wp - wm) / (2.0 * hs);
                } else {
                    lap *= dim as f64;
                }
            }
            lap + f(w0) >= 0.0
        });
        Ok(ok.into_iter().all(|b| b))
    };
    let mut hi = r_min;
    while !passes(hi)? {
        hi *= 1.25;
        if hi > SCALE_MAX {
            return Err(Error::Numeric(format!("no admissible mollification scale below {SCALE_MAX}")));
        }
    }
    if hi == r_min {
        return Ok(hi);
    }
    let mut r = hi / 1.25;
    while r < hi {
        r *= 1.04;
        if passes(r)? {
            return Ok(r);
        }
    }
    Ok(hi)
}

/// Mollification scale the planar search selects for spacing `h`.
pub fn halfspace_scale(profile: &IgnitionProfile, opts: &DatumOptions, h: f64) -> Result<f64> {
    let psi = Psi::new(opts.theta_star, opts.theta1)?;
    search_scale(profile, &psi, opts, 1, &Geometry::Plane, h)
}

/// Support inflation `R0 = (N + 1/2 + a) R` of a smooth datum at scale `R`.
pub fn support_inflation(scale: f64) -> f64 {
    (INFLATION_N + 0.5 + MOLLIFIER_A) * scale
}

/// Minimum over interior nodes of `Δ_h u + F(u)` and its location.
pub fn subsolution_defect(field: &ScalarField, f: &(dyn Fn(f64) -> f64 + Sync), exec: Exec) -> (f64, Option<usize>) {
    let g = &field.grid;
    let n0 = g.shape[0];
    let rows = g.len() / n0;
    let inv_h2 = 1.0 / (g.h * g.h);
    let v = &field.values;
    let per_row = par::map_range(exec, rows, |row| {
        let j = row % g.shape[1];
        let k = row / g.shape[1];
        let interior_row = (g.dim < 2 || (j > 0 && j + 1 < g.shape[1])) && (g.dim < 3 || (k > 0 && k + 1 < g.shape[2]));
        let mut best = (f64::INFINITY, None);
        if !interior_row || n0 < 3 {
            return best;
        }
        let base = row * n0;
        for i in 1..n0 - 1 {
            let idx = base + i;
            let u = v[idx];
            let mut lap = v[idx - 1] + v[idx + 1] - 2.0 * u;
            if g.dim > 1 {
                lap += v[idx - n0] + v[idx + n0] - 2.0 * u;
            }
            if g.dim > 2 {
                let s = n0 * g.shape[1];
                lap += v[idx - s] + v[idx + s] - 2.0 * u;
            }
            let d = lap * inv_h2 + f(u);
            if d < best.0 {
                best = (d, Some(idx));
            }
        }
        best
    });
    per_row.into_iter().fold((f64::INFINITY, None), |a, b| if b.0 < a.0 { b } else { a })
}

/// Build `psi((1 - theta*) chi_{B_{NR}(S)} * phi_{a,R})`, then apply the a-shift.
pub fn build_initial_datum(source: &SourceSet, profile: &IgnitionProfile, grid: &Grid, opts: &DatumOptions) -> Result<InitialDatum> {
    let dim = grid.dim;
    source.check(dim)?;
    let a = opts.a_shift;
    if !(0.0..1.0).contains(&a) {
        return config(format!("a_shift = {a} must lie in [0, 1)"));
    }
    let top = 1.0 - opts.theta_star;
    let frame = &opts.frame;
    let phys = |idx: usize| -> [f64; 3] { frame.map(&grid.point(idx)) };
    let shift = |w: f64| (1.0 - a) * w + a;

    if opts.kind == DatumKind::Step || matches!(source, SourceSet::Everywhere) {
        let values: Vec<f64> = match source {
            SourceSet::Raster { mask } => mask.values.iter().map(|&m| shift(if m { top } else { 0.0 })).collect(),
            _ => (0..grid.len()).map(|i| shift(if source.contains(&phys(i)[..dim]) { top } else { 0.0 })).collect(),
        };
        let field = ScalarField { grid: grid.clone(), values };
        let f = shifted_f0(profile, a);
        let (defect_min, defect_argmin) = subsolution_defect(&field, &f, opts.exec);
        let datum = InitialDatum {
            field,
            source: source.clone(),
            frame: frame.clone(),
            r0: 0.0,
            theta_star: opts.theta_star,
            a_shift: a,
            kind: opts.kind,
            construction: None,
            defect_min,
            defect_argmin,
        };
        if matches!(source, SourceSet::Everywhere) && defect_min < -opts.tol {
            return Err(defect_error(&datum));
        }
        return Ok(datum);
    }

    let psi = Psi::new(opts.theta_star, opts.theta1)?;
    if !(grid.h <= MOLLIFIER_A * opts.scale.unwrap_or(f64::INFINITY) / 4.0) && opts.scale.is_some() {
        return config(format!("grid spacing {} does not resolve the bump scale aR/4", grid.h));
    }
    let geom = match source {
        SourceSet::Ball { radius, .. } => Geometry::Ball { radius: *radius },
        _ => Geometry::Plane,
    };
    let mut scale = match opts.scale {
        Some(s) => s,
        None => {
            let s = search_scale(profile, &psi, opts, dim, &geom, grid.h)?;
            if matches!(source, SourceSet::Polytope { .. } | SourceSet::Raster { .. }) {
                // corners of general sets are not covered by the planar search
                s * 1.1
            } else {
                s
            }
        }
    };
    let f = shifted_f0(profile, a);
    let mut attempts = 0;
    loop {
        let datum = build_smooth(source, profile, grid, opts, &psi, scale, &f)?;
        if datum.defect_min >= -opts.tol {
            return Ok(datum);
        }
        attempts += 1;
        if opts.scale.is_some() || attempts > 8 {
            return Err(defect_error(&datum));
        }
        scale *= 1.04;
    }
}

fn defect_error(d: &InitialDatum) -> Error {
    let at = d.defect_argmin.map(|i| d.frame.map(&d.field.grid.point(i)));
    Error::Construction {
        invariant: "sub-solution (Δu + F(u) >= -tol)".into(),
        detail: format!("defect {} at grid index {:?}, point {:?}", d.defect_min, d.defect_argmin, at),
    }
}

fn build_smooth(
    source: &SourceSet,
    profile: &IgnitionProfile,
    grid: &Grid,
    opts: &DatumOptions,
    psi: &Psi,
    scale: f64,
    f: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<InitialDatum> {
    let dim = grid.dim;
    let top = psi.top;
    let a = opts.a_shift;
    let frame = &opts.frame;
    let r0 = support_inflation(scale);
    let phys = |idx: usize| -> [f64; 3] { frame.map(&grid.point(idx)) };
    let ul: Vec<f64> = match source {
        SourceSet::HalfSpace { normal, offset } => {
            let prof = Profile1d::new(dim, scale, psi, top, None)?;
            par::map_range(opts.exec, grid.len(), |i| prof.ul(dot(&phys(i)[..dim], normal) - offset))
        }
        SourceSet::Ball { center, radius } => {
            let prof = Profile1d::new(dim, scale, psi, top, Some(*radius))?;
            if dim == 1 {
                par::map_range(opts.exec, grid.len(), |i| prof.ul(phys(i)[0] - center[0]))
            } else {
                let table = RadialTable::build(&prof, (radius + r0) * 1.0 + 4.0 * grid.h, grid.h / 4.0, opts.exec);
                par::map_range(opts.exec, grid.len(), |i| table.eval(dist(&phys(i)[..dim], center)))
            }
        }
        SourceSet::Polytope { .. } | SourceSet::Raster { .. } => convolve_general(source, grid, frame, scale, top)?,
        SourceSet::Everywhere => unreachable!(),
    };
    let values: Vec<f64> = ul.iter().map(|&u| (1.0 - a) * psi.eval(u.min(top)) + a).collect();
    let field = ScalarField { grid: grid.clone(), values };
    let (defect_min, defect_argmin) = subsolution_defect(&field, f, opts.exec);
    let delta = profile.min_on(psi.lift, psi.top);
    let datum = InitialDatum {
        field,
        source: source.clone(),
        frame: frame.clone(),
        r0,
        theta_star: opts.theta_star,
        a_shift: a,
        kind: DatumKind::Smooth,
        construction: Some(Construction {
            a: MOLLIFIER_A,
            n: INFLATION_N,
            scale,
            psi: psi.clone(),
            l_const: psi.lipschitz_pair(),
            delta,
        }),
        defect_min,
        defect_argmin,
    };
    check_sandwich(&datum)?;
    Ok(datum)
}

/// Sandwich `(1 - theta*) chi_S <= W <= (1 - theta*) chi_{B_R0(S)}` before the shift.
fn check_sandwich(d: &InitialDatum) -> Result<()> {
    let g = &d.field.grid;
    let dim = g.dim;
    let a = d.a_shift;
    let top = 1.0 - d.theta_star;
    let unshift = |v: f64| (v - a) / (1.0 - a);
    let outer: Box<dyn Fn(usize) -> bool> = match &d.source {
        SourceSet::Ball { center, radius } => {
            let c = center.clone();
            let r = *radius;
            Box::new(move |i| dist(&d.frame.map(&g.point(i))[..dim], &c) >= r + d.r0)
        }
        SourceSet::HalfSpace { normal, offset } => {
            let n = normal.clone();
            let o = *offset;
            Box::new(move |i| dot(&d.frame.map(&g.point(i))[..dim], &n) >= o + d.r0)
        }
        _ => {
            let m = source_mask(&d.source, g, &d.frame);
            let dd = edt::distance(&m);
            Box::new(move |i| dd[i] >= d.r0 + g.h)
        }
    };
    let inner_mask = source_mask(&d.source, g, &d.frame);
    for i in 0..g.len() {
        let w = unshift(d.field.values[i]);
        let bad_in = inner_mask.values[i] && w < top - 1e-12;
        let bad_out = outer(i) && w > 1e-12;
        if bad_in || bad_out || w > top + 1e-12 || w < -1e-12 {
            return Err(Error::Construction {
                invariant: "sandwich (1-θ*)χ_S ≤ u ≤ (1-θ*)χ_{B_R0(S)}".into(),
                detail: format!("value {w} at grid index {i}"),
            });
        }
    }
    Ok(())
}

/// Raster of `S` on the grid.
pub fn source_mask(source: &SourceSet, grid: &Grid, frame: &Frame) -> Mask {
    match source {
        SourceSet::Raster { mask } => mask.clone(),
        _ => Mask {
            grid: grid.clone(),
            values: (0..grid.len()).map(|i| source.contains(&frame.map(&grid.point(i))[..grid.dim])).collect(),
        },
    }
}

/// `u_L` tabulated on a radial grid and read back by cubic Lagrange interpolation.
struct RadialTable {
    dr: f64,
    values: Vec<f64>,
}

impl RadialTable {
    fn build(prof: &Profile1d, rmax: f64, dr: f64, exec: Exec) -> Self {
        let n = (rmax / dr).ceil() as usize + 4;
        let values = par::map_range(exec, n, |j| prof.ul(j as f64 * dr));
        RadialTable { dr, values }
    }

    fn eval(&self, r: f64) -> f64 {
        let s = r / self.dr;
        let n = self.values.len();
        let i = (s.floor() as usize).clamp(1, n - 3);
        let t = s - i as f64;
        let v = &self.values;
        let (p0, p1, p2, p3) = (v[i - 1], v[i], v[i + 1], v[i + 2]);
        if p0 == p1 && p1 == p2 && p2 == p3 {
            return p1;
        }
        -t * (t - 1.0) * (t - 2.0) / 6.0 * p0 + (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0 * p1
            - (t + 1.0) * t * (t - 2.0) / 2.0 * p2
            + (t + 1.0) * t * (t - 1.0) / 6.0 * p3
    }
}

/// Discrete convolution of the inflated indicator with the sampled kernel.
fn convolve_general(source: &SourceSet, grid: &Grid, frame: &Frame, scale: f64, top: f64) -> Result<Vec<f64>> {
    let mask = source_mask(source, grid, frame);
    if mask.count() == 0 {
        return config("source set has no grid nodes");
    }
    let d = edt::distance(&mask);
    let inflated: Vec<f64> = d.iter().map(|&x| if x <= INFLATION_N * scale { 1.0 } else { 0.0 }).collect();
    let bump = MollifiedBump::new(grid.dim, MOLLIFIER_A, scale)?;
    let rad = (bump.support() / grid.h).ceil() as usize;
    let out = crate::fftconv::convolve_radial(&inflated, grid, rad, |r| bump.eval(r))?;
    Ok(out.into_iter().map(|v| if v < 1e-12 { 0.0 } else { (top * v).min(top) }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::make_profile;

    fn canonical() -> (IgnitionProfile, DatumOptions) {
        let p = make_profile(0.25, 1.0, 2.0, 0.5).unwrap();
        let t1 = p.theta1();
        (p, DatumOptions::new(t1 / 4.0, t1))
    }

    #[test]
    fn halfspace_1d_is_subsolution() {
        let (p, opts) = canonical();
        let g = Grid::covering(1, &[-50.0], &[400.0], 0.1).unwrap();
        let src = SourceSet::HalfSpace { normal: vec![1.0], offset: 0.0 };
        let d = build_initial_datum(&src, &p, &g, &opts).unwrap();
        assert!(d.defect_min >= -opts.tol, "defect {}", d.defect_min);
        let c = d.construction.as_ref().unwrap();
        assert!((d.r0 - (1.5 + MOLLIFIER_A) * c.scale).abs() < 1e-12);
        // monotone non-increasing along the normal
        assert!(d.field.values.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        assert_eq!(d.field.values[0], 1.0 - opts.theta_star);
    }

    #[test]
    fn shifted_datum_keeps_floor() {
        let (p, mut opts) = canonical();
        opts.a_shift = 0.05;
        let g = Grid::covering(1, &[-50.0], &[400.0], 0.1).unwrap();
        let src = SourceSet::HalfSpace { normal: vec![1.0], offset: 0.0 };
        let d = build_initial_datum(&src, &p, &g, &opts).unwrap();
        assert!((d.field.min() - 0.05).abs() < 1e-12);
        assert!(d.defect_min >= -opts.tol);
    }

    #[test]
    fn ball_2d_is_subsolution_with_sandwich() {
        let (p, opts) = canonical();
        let h = 0.5;
        let coarse = build_initial_datum(
            &SourceSet::HalfSpace { normal: vec![1.0], offset: 0.0 },
            &p,
            &Grid::covering(1, &[-10.0], &[10.0], h).unwrap(),
            &opts,
        );
        assert!(coarse.is_ok());
        let radius = 5.0;
        let probe = Grid::covering(2, &[0.0, 0.0], &[1.0, 1.0], h).unwrap();
        let geom = Geometry::Ball { radius };
        let psi = Psi::new(opts.theta_star, opts.theta1).unwrap();
        let scale = search_scale(&p, &psi, &opts, 2, &geom, probe.h).unwrap();
        let half = radius + (1.5 + MOLLIFIER_A) * scale + 4.0;
        let g = Grid::centered(2, half, h).unwrap();
        let src = SourceSet::Ball { center: vec![0.0, 0.0], radius };
        let d = build_initial_datum(&src, &p, &g, &DatumOptions { scale: Some(scale), ..opts.clone() }).unwrap();
        assert!(d.defect_min >= -opts.tol, "defect {}", d.defect_min);
        assert_eq!(d.field.max(), 1.0 - opts.theta_star);
    }

    #[test]
    fn inflated_ball_carries_a_third_of_the_mass() {
        // mass of phi_a in B_N((N + a) e1), checked by Monte Carlo-free quadrature in 1D..3D
        for dim in 1..=3 {
            let b = MollifiedBump::new(dim, MOLLIFIER_A, 1.0).unwrap();
            let n = INFLATION_N;
            let c = n + MOLLIFIER_A;
            let m = match dim {
                1 => b.cdf_1d(-c + n) - b.cdf_1d(-c - n),
                _ => {
                    let prof = Profile1d {
                        bump: b.clone(),
                        psi: &Psi::new(0.0625, 0.25).unwrap(),
                        top: 1.0,
                        rho: n,
                        ball: true,
                        rule: Rule::new(8),
                        mass: 1.0,
                    };
                    let total = prof.radial_mass(b.support());
                    let p = Profile1d { mass: total, ..prof };
                    p.ball_fraction(c)
                }
            };
            assert!(m >= 1.0 / 3.0, "dim {dim}: {m}");
        }
    }

    #[test]
    fn step_datum_has_zero_r0() {
        let (p, opts) = canonical();
        let g = Grid::centered(2, 5.0, 0.25).unwrap();
        let src = SourceSet::Polytope { normals: vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]], offsets: vec![1.0; 4] };
        let d = build_initial_datum(&src, &p, &g, &opts.step()).unwrap();
        assert_eq!(d.r0, 0.0);
        assert!(d.field.values.iter().all(|&v| v == 0.0 || v == 0.9375));
    }

    #[test]
    fn polytope_smooth_datum_in_1d() {
        let (p, opts) = canonical();
        let g = Grid::covering(1, &[-600.0], &[600.0], 0.25).unwrap();
        let src = SourceSet::Polytope { normals: vec![vec![1.0], vec![-1.0]], offsets: vec![3.0, 3.0] };
        let d = build_initial_datum(&src, &p, &g, &opts).unwrap();
        assert!(d.defect_min >= -opts.tol);
    }
}
