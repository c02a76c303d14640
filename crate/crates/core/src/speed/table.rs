use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedEntry {
    pub direction: Vec<f64>,
    /// Mean arrival slope (time per length).
    pub tbar: f64,
    pub c_star: f64,
    pub stderr: f64,
    /// Probe distances used by the fit.
    pub l_range: (f64, f64),
}

impl SpeedEntry {
    pub fn exact(direction: Vec<f64>, c: f64) -> Self {
        SpeedEntry { direction, tbar: 1.0 / c, c_star: c, stderr: 0.0, l_range: (0.0, 0.0) }
    }
}

/// Sampled direction-to-speed map `e -> c*(e)`.
///
/// Between samples the speed is interpolated linearly in angle (2D) or barycentrically on
/// the triangles of the sampling sphere (3D).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedTable {
    pub dim: usize,
    pub entries: Vec<SpeedEntry>,
    /// Triangles over entry indices (3D).
    #[serde(default)]
    pub triangles: Vec<[usize; 3]>,
    /// Cached sample angles (2D), ascending.
    #[serde(skip)]
    angles: Vec<f64>,
}

/// Unit vector at polar angle `angle` in the plane.
pub fn unit_2d(angle: f64) -> Vec<f64> {
    vec![angle.cos(), angle.sin()]
}

/// Icosphere vertices and faces after `level` midpoint subdivisions.
pub fn icosphere(level: usize) -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<[f64; 3]> = vec![
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let norm = |p: [f64; 3]| {
        let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        [p[0] / n, p[1] / n, p[2] / n]
    };
    for p in v.iter_mut() {
        *p = norm(*p);
    }
    let mut f: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut cache = std::collections::HashMap::new();
        let mut mid = |a: usize, b: usize, v: &mut Vec<[f64; 3]>| -> usize {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                let (p, q) = (v[a], v[b]);
                v.push(norm([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                v.len() - 1
            })
        };
        let mut nf = Vec::with_capacity(f.len() * 4);
        for [a, b, c] in f {
            let ab = mid(a, b, &mut v);
            let bc = mid(b, c, &mut v);
            let ca = mid(c, a, &mut v);
            nf.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        f = nf;
    }
    (v, f)
}

impl SpeedTable {
    /// Table sampled from `c(e)`: `n` equispaced angles in 2D, an icosphere of level `n` in 3D,
    /// both signs in 1D.
    pub fn sample(dim: usize, n: usize, c: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let (dirs, triangles): (Vec<Vec<f64>>, Vec<[usize; 3]>) = match dim {
            1 => (vec![vec![1.0], vec![-1.0]], Vec::new()),
            2 => {
                if n < 3 {
                    return config("2D speed tables need at least 3 directions");
                }
                ((0..n).map(|i| unit_2d(2.0 * PI * i as f64 / n as f64)).collect(), Vec::new())
            }
            3 => {
                let (v, f) = icosphere(n);
                (v.into_iter().map(|p| p.to_vec()).collect(), f)
            }
            _ => return config(format!("dim = {dim} must be 1, 2 or 3")),
        };
        let entries = dirs
            .into_iter()
            .map(|e| {
                let v = c(&e);
                SpeedEntry::exact(e, v)
            })
            .collect();
        let mut t = SpeedTable { dim, entries, triangles, angles: Vec::new() };
        if dim == 2 {
            t.entries.sort_by(|a, b| angle_of(&a.direction).total_cmp(&angle_of(&b.direction)));
        }
        t.validate()?;
        Ok(t)
    }

    pub fn constant(dim: usize, n: usize, c: f64) -> Result<Self> {
        Self::sample(dim, n, |_| c)
    }

    pub fn from_entries(dim: usize, entries: Vec<SpeedEntry>) -> Result<Self> {
        let mut t = SpeedTable { dim, entries, triangles: Vec::new(), angles: Vec::new() };
        if dim == 3 {
            return config("3D tables need triangles; use SpeedTable::sample");
        }
        if dim == 2 {
            t.entries.sort_by(|a, b| angle_of(&a.direction).total_cmp(&angle_of(&b.direction)));
        }
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&mut self) -> Result<()> {
        if self.dim == 2 {
            self.entries.sort_by(|a, b| angle_of(&a.direction).total_cmp(&angle_of(&b.direction)));
            self.angles = self.entries.iter().map(|e| angle_of(&e.direction)).collect();
        }
        self.check()
    }

    fn check(&self) -> Result<()> {
        if self.entries.is_empty() {
            return config("speed table is empty");
        }
        for e in &self.entries {
            if e.direction.len() != self.dim || !(e.c_star > 0.0) || !e.c_star.is_finite() {
                return config(format!("speed entry {e:?} needs a {}-vector and positive finite speed", self.dim));
            }
        }
        Ok(())
    }

    pub fn max_speed(&self) -> f64 {
        self.entries.iter().map(|e| e.c_star).fold(0.0, f64::max)
    }

    pub fn min_speed(&self) -> f64 {
        self.entries.iter().map(|e| e.c_star).fold(f64::INFINITY, f64::min)
    }

    /// Largest angular gap between consecutive 2D samples.
    pub fn max_gap(&self) -> f64 {
        if self.dim != 2 {
            return 0.0;
        }
        let mut a: Vec<f64> = self.entries.iter().map(|e| angle_of(&e.direction)).collect();
        a.sort_by(f64::total_cmp);
        let mut gap = a[0] + 2.0 * PI - a[a.len() - 1];
        for w in a.windows(2) {
            gap = gap.max(w[1] - w[0]);
        }
        gap
    }

    /// Interpolated `c*(e)` for any nonzero `e`.
    pub fn eval(&self, e: &[f64]) -> f64 {
        match self.dim {
            1 => {
                let s = if e[0] >= 0.0 { 1.0 } else { -1.0 };
                self.entries
                    .iter()
                    .find(|x| x.direction[0] * s > 0.0)
                    .map_or(self.entries[0].c_star, |x| x.c_star)
            }
            2 => self.eval_angle(e[1].atan2(e[0])),
            _ => self.eval_3d(e),
        }
    }

    /// Piecewise-linear interpolation in angle.
    pub fn eval_angle(&self, theta: f64) -> f64 {
        let n = self.entries.len();
        if n == 1 {
            return self.entries[0].c_star;
        }
        let owned;
        let angles: &[f64] = if self.angles.len() == n {
            &self.angles
        } else {
            owned = self.entries.iter().map(|e| angle_of(&e.direction)).collect::<Vec<_>>();
            &owned
        };
        let th = theta.rem_euclid(2.0 * PI);
        let k = angles.partition_point(|&a| a <= th);
        let (i0, i1) = ((k + n - 1) % n, k % n);
        let (a0, mut a1) = (angles[i0], angles[i1]);
        let mut t = th;
        if a1 <= a0 {
            a1 += 2.0 * PI;
        }
        if t < a0 {
            t += 2.0 * PI;
        }
        let w = if a1 > a0 { (t - a0) / (a1 - a0) } else { 0.0 };
        (1.0 - w) * self.entries[i0].c_star + w * self.entries[i1].c_star
    }

    fn eval_3d(&self, e: &[f64]) -> f64 {
        let n = (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt();
        let p = [e[0] / n, e[1] / n, e[2] / n];
        let dir = |i: usize| &self.entries[i].direction;
        let mut best: Option<(f64, [f64; 3], [usize; 3])> = None;
        for tri in &self.triangles {
            // ray-triangle barycentrics on the flat face
            let (a, b, c) = (dir(tri[0]), dir(tri[1]), dir(tri[2]));
            let m = [[a[0], b[0], c[0]], [a[1], b[1], c[1]], [a[2], b[2], c[2]]];
            let Some(w) = solve3(m, p) else { continue };
            let lo = w[0].min(w[1]).min(w[2]);
            if best.as_ref().map_or(true, |(l, _, _)| lo > *l) {
                best = Some((lo, w, *tri));
            }
        }
        let (_, w, tri) = best.expect("triangulated table");
        let s = w[0] + w[1] + w[2];
        (0..3).map(|k| w[k] / s * self.entries[tri[k]].c_star).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match self.dim {
            3 => {
                out.push_str("polar,azimuth,c_star,stderr\n");
                for e in &self.entries {
                    let d = &e.direction;
                    let _ = writeln!(out, "{},{},{},{}", d[2].clamp(-1.0, 1.0).acos(), d[1].atan2(d[0]), e.c_star, e.stderr);
                }
            }
            _ => {
                out.push_str("angle,c_star,stderr\n");
                for e in &self.entries {
                    let a = if self.dim == 1 { if e.direction[0] > 0.0 { 0.0 } else { PI } } else { angle_of(&e.direction) };
                    let _ = writeln!(out, "{},{},{}", a, e.c_star, e.stderr);
                }
            }
        }
        out
    }

    /// Parse the CSV written by [`SpeedTable::to_csv`]; 3D tables are re-triangulated by
    /// matching rows against an icosphere with the same vertex count.
    pub fn from_csv(dim: usize, text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Config("empty speed table".into()))?;
        let cols = header.split(',').count();
        let want = if dim == 3 { 4 } else { 3 };
        if cols != want {
            return config(format!("speed table header `{header}` needs {want} columns"));
        }
        let mut entries = Vec::new();
        for (ln, l) in lines.enumerate() {
            let v: std::result::Result<Vec<f64>, _> = l.split(',').map(|x| x.trim().parse::<f64>()).collect();
            let v = v.map_err(|e| Error::Config(format!("speed table row {}: {e}", ln + 2)))?;
            if v.len() != want {
                return config(format!("speed table row {} has {} fields", ln + 2, v.len()));
            }
            let (dir, c, se) = match dim {
                1 => (vec![v[0].cos().signum()], v[1], v[2]),
                2 => (unit_2d(v[0]), v[1], v[2]),
                _ => {
                    let (s, cth) = v[0].sin_cos();
                    (vec![s * v[1].cos(), s * v[1].sin(), cth], v[2], v[3])
                }
            };
            entries.push(SpeedEntry { direction: dir, tbar: 1.0 / c, c_star: c, stderr: se, l_range: (0.0, 0.0) });
        }
        if dim != 3 {
            return SpeedTable::from_entries(dim, entries);
        }
        let level = (0..8).find(|&l| icosphere(l).0.len() == entries.len());
        let Some(level) = level else {
            return config("3D speed table rows must match an icosphere vertex count");
        };
        let (verts, faces) = icosphere(level);
        let mut ordered = Vec::with_capacity(verts.len());
        for v in &verts {
            let k = entries
                .iter()
                .position(|e| e.direction.iter().zip(v).all(|(a, b)| (a - b).abs() < 1e-6))
                .ok_or_else(|| Error::Config("3D speed table directions do not match the icosphere".into()))?;
            ordered.push(entries[k].clone());
        }
        let mut t = SpeedTable { dim, entries: ordered, triangles: faces, angles: Vec::new() };
        t.validate()?;
        Ok(t)
    }
}

pub fn angle_of(d: &[f64]) -> f64 {
    d[1].atan2(d[0]).rem_euclid(2.0 * PI)
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(m);
    if d.abs() < 1e-300 {
        return None;
    }
    let mut out = [0.0; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let mut mc = m;
        for r in 0..3 {
            mc[r][c] = b[r];
        }
        *o = det(mc) / d;
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_interpolation_is_piecewise_linear() {
        let t = SpeedTable::sample(2, 4, |e| 1.0 + e[0].abs()).unwrap();
        assert!((t.eval_angle(0.0) - 2.0).abs() < 1e-12);
        assert!((t.eval_angle(PI / 4.0) - 1.5).abs() < 1e-12);
        assert!((t.eval_angle(-PI / 4.0) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        for dim in 1..=3 {
            let t = SpeedTable::sample(dim, if dim == 2 { 16 } else { 1 }, |e| 1.0 + 0.1 * e[0]).unwrap();
            let back = SpeedTable::from_csv(dim, &t.to_csv()).unwrap();
            for e in &t.entries {
                assert!((back.eval(&e.direction) - e.c_star).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn icosphere_counts() {
        assert_eq!(icosphere(0).0.len(), 12);
        assert_eq!(icosphere(4).0.len(), 2562);
        assert_eq!(icosphere(4).1.len(), 5120);
    }

    #[test]
    fn barycentric_exact_at_vertices_and_linear_between() {
        let t = SpeedTable::sample(3, 2, |e| 2.0 + e[2]).unwrap();
        for e in &t.entries {
            assert!((t.eval(&e.direction) - e.c_star).abs() < 1e-9);
        }
        let v = t.eval(&[0.3, -0.2, 0.9]);
        assert!(v > 2.0 && v < 3.0);
    }
}
