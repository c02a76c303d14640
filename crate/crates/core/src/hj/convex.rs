use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::grid::{Frame, Grid, Mask};
use crate::speed::{icosphere, unit_2d, SpeedTable};

/// Default direction samples: 720 angles in 2D, icosphere level 4 in 3D.
pub const DIRECTIONS_2D: usize = 720;
pub const ICOSPHERE_LEVEL: usize = 4;

/// Convex initial set for the explicit formula.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexSet {
    Ball { center: Vec<f64>, radius: f64 },
    /// Convex hull of the vertices.
    Polytope { vertices: Vec<Vec<f64>> },
    HalfSpace { normal: Vec<f64>, offset: f64 },
}

impl ConvexSet {
    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Ball { center, .. } => center.len(),
            ConvexSet::Polytope { vertices } => vertices.first().map_or(0, |v| v.len()),
            ConvexSet::HalfSpace { normal, .. } => normal.len(),
        }
    }

    /// Axis-aligned square `[c - s/2, c + s/2]^2`.
    pub fn square(center: [f64; 2], side: f64) -> Self {
        let h = 0.5 * side;
        ConvexSet::Polytope {
            vertices: vec![
                vec![center[0] - h, center[1] - h],
                vec![center[0] + h, center[1] - h],
                vec![center[0] + h, center[1] + h],
                vec![center[0] - h, center[1] + h],
            ],
        }
    }

    /// `sup_{y in A} y . e`.
    pub fn support(&self, e: &[f64]) -> f64 {
        match self {
            ConvexSet::Ball { center, radius } => dot(center, e) + radius * dot(e, e).sqrt(),
            ConvexSet::Polytope { vertices } => vertices.iter().map(|v| dot(v, e)).fold(f64::NEG_INFINITY, f64::max),
            ConvexSet::HalfSpace { normal, offset } => {
                if (dot(normal, e) - 1.0).abs() < 1e-12 {
                    *offset
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Membership in the set shrunk by `margin`; polytopes go through sampled support values.
    pub fn contains_shrunk(&self, x: &[f64], margin: f64) -> bool {
        match self {
            ConvexSet::Ball { center, radius } => {
                let d: f64 = x.iter().zip(center).map(|(p, c)| (p - c) * (p - c)).sum::<f64>().sqrt();
                d < radius - margin
            }
            ConvexSet::HalfSpace { normal, offset } => dot(x, normal) < offset - margin,
            ConvexSet::Polytope { .. } => direction_sample(x.len()).iter().all(|e| dot(x, e) < self.support(e) - margin),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.contains_shrunk(x, 0.0)
    }

    pub fn mask(&self, grid: &Grid) -> Mask {
        let d = grid.dim;
        Mask { grid: grid.clone(), values: (0..grid.len()).map(|i| self.contains(&grid.point(i)[..d])).collect() }
    }

    fn check(&self) -> Result<()> {
        let d = self.dim();
        if !(1..=3).contains(&d) {
            return config("convex set must live in dimension 1..3");
        }
        match self {
            ConvexSet::Ball { radius, .. } if !(*radius >= 0.0) => config("ball radius must be nonnegative"),
            ConvexSet::Polytope { vertices } if vertices.is_empty() || vertices.iter().any(|v| v.len() != d) => {
                config("polytope needs at least one vertex of consistent dimension")
            }
            ConvexSet::HalfSpace { normal, .. } if (dot(normal, normal).sqrt() - 1.0).abs() > 1e-9 => {
                config("half-space normal must be a unit vector")
            }
            _ => Ok(()),
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Intersection of half-spaces `{x . dirs[i] < offsets[i]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfSpaces {
    pub dim: usize,
    pub dirs: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
}

impl HalfSpaces {
    pub fn contains(&self, x: &[f64]) -> bool {
        self.dirs.iter().zip(&self.offsets).all(|(e, o)| dot(x, e) < *o)
    }

    /// Nodes of `grid` (mapped through `frame`) inside the set.
    pub fn mask(&self, grid: &Grid, frame: &Frame) -> Mask {
        let values = (0..grid.len()).map(|i| self.contains(&frame.map(&grid.point(i))[..self.dim])).collect();
        Mask { grid: grid.clone(), values }
    }

    /// Support function `sup_{y in set} y . e` of a bounded 2D set, from its polygon.
    pub fn support(&self, e: &[f64]) -> f64 {
        self.polygon().iter().map(|v| v[0] * e[0] + v[1] * e[1]).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Vertices of the 2D intersection, counter-clockwise, by successive clipping of a large box.
    pub fn polygon(&self) -> Vec<[f64; 2]> {
        assert_eq!(self.dim, 2, "polygon() is 2D only");
        let big = self.offsets.iter().fold(1.0f64, |m, o| m.max(o.abs())) * 8.0;
        let mut poly = vec![[-big, -big], [big, -big], [big, big], [-big, big]];
        for (e, &o) in self.dirs.iter().zip(&self.offsets) {
            if !o.is_finite() {
                continue;
            }
            let f = |p: &[f64; 2]| p[0] * e[0] + p[1] * e[1] - o;
            let mut out = Vec::with_capacity(poly.len() + 1);
            for i in 0..poly.len() {
                let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
                let (fp, fq) = (f(&p), f(&q));
                if fp <= 0.0 {
                    out.push(p);
                }
                if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
                    let s = fp / (fp - fq);
                    out.push([p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])]);
                }
            }
            poly = out;
            if poly.is_empty() {
                break;
            }
        }
        poly
    }

    /// Scaled copy `{x / s : x in set}`.
    pub fn scaled(&self, s: f64) -> HalfSpaces {
        HalfSpaces { dim: self.dim, dirs: self.dirs.clone(), offsets: self.offsets.iter().map(|o| o / s).collect() }
    }
}

/// Direction sample used by the explicit formula.
pub fn direction_sample(dim: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..DIRECTIONS_2D).map(|i| unit_2d(2.0 * std::f64::consts::PI * i as f64 / DIRECTIONS_2D as f64)).collect(),
        _ => icosphere(ICOSPHERE_LEVEL).0.into_iter().map(|v| v.to_vec()).collect(),
    }
}

/// `{x : x . e < sup_{y in A} y . e + c*(e) t for all sampled e}`.
pub fn theta_convex(a: &ConvexSet, speed: &SpeedTable, t: f64) -> Result<HalfSpaces> {
    a.check()?;
    let dim = a.dim();
    if speed.dim != dim {
        return config(format!("speed table is {}-dimensional, set is {dim}-dimensional", speed.dim));
    }
    if !(t >= 0.0) {
        return config("time must be nonnegative");
    }
    if let ConvexSet::HalfSpace { normal, offset } = a {
        return Ok(HalfSpaces { dim, dirs: vec![normal.clone()], offsets: vec![offset + speed.eval(normal) * t] });
    }
    let dirs = direction_sample(dim);
    let offsets = dirs.iter().map(|e| a.support(e) + speed.eval(e) * t).collect();
    Ok(HalfSpaces { dim, dirs, offsets })
}

/// `{y : y . e < c*(e)}` over the sampled directions.
pub fn wulff_shape(speed: &SpeedTable) -> Result<HalfSpaces> {
    let origin = ConvexSet::Ball { center: vec![0.0; speed.dim], radius: 0.0 };
    theta_convex(&origin, speed, 1.0)
}

/// Symmetric Hausdorff distance between two finite point sets.
pub fn hausdorff(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let one = |p: &[[f64; 2]], q: &[[f64; 2]]| {
        p.iter()
            .map(|x| q.iter().map(|y| ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

/// Points spaced at most `ds` apart along the closed polygon.
pub fn densify(poly: &[[f64; 2]], ds: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let len = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
        let n = (len / ds).ceil().max(1.0) as usize;
        for k in 0..n {
            let s = k as f64 / n as f64;
            out.push([p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])]);
        }
    }
    out
}

pub fn polygon_perimeter(poly: &[[f64; 2]]) -> f64 {
    (0..poly.len())
        .map(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
            ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt()
        })
        .sum()
}

pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    0.5 * (0..poly.len())
        .map(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
        .abs()
}
