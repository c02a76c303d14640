//! Uniform grids, scalar fields and masks.

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Uniform grid with `x` (axis 0) varying fastest. Unused axes have extent 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub shape: [usize; 3],
    pub h: f64,
    pub origin: [f64; 3],
}

impl Grid {
    pub fn new(dim: usize, shape: &[usize], h: f64, origin: &[f64]) -> Result<Grid> {
        if !(1..=3).contains(&dim) || shape.len() != dim || origin.len() != dim {
            return config(format!("grid needs dim in 1..=3 and matching shape/origin (dim = {dim})"));
        }
        if !(h > 0.0 && h.is_finite()) || shape.iter().any(|&n| n == 0) {
            return config(format!("grid spacing {h} and extents {shape:?} must be positive"));
        }
        let mut s = [1usize; 3];
        let mut o = [0.0; 3];
        s[..dim].copy_from_slice(shape);
        o[..dim].copy_from_slice(origin);
        Ok(Grid { dim, shape: s, h, origin: o })
    }

    /// Smallest grid with spacing `h` whose nodes cover the box `[lo, hi]`, node-aligned at `lo`.
    pub fn covering(dim: usize, lo: &[f64], hi: &[f64], h: f64) -> Result<Grid> {
        let shape: Vec<usize> = (0..dim).map(|i| ((hi[i] - lo[i]) / h - 1e-9).ceil().max(0.0) as usize + 1).collect();
        Grid::new(dim, &shape, h, &lo[..dim])
    }

    /// Grid centred on the origin with nodes at integer multiples of `h`, covering `[-half, half]^dim`.
    pub fn centered(dim: usize, half: f64, h: f64) -> Result<Grid> {
        let n = (half / h - 1e-9).ceil() as usize;
        let lo = vec![-(n as f64) * h; dim];
        Grid::new(dim, &vec![2 * n + 1; dim], h, &lo)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1] * self.shape[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.shape[0] * (j + self.shape[1] * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.shape[0];
        let r = idx / self.shape[0];
        [i, r % self.shape[1], r / self.shape[1]]
    }

    /// Grid coordinates of node `idx` (before any frame map).
    #[inline]
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        let mut p = [0.0; 3];
        for a in 0..self.dim {
            p[a] = self.origin[a] + c[a] as f64 * self.h;
        }
        p
    }

    /// Nearest node to `p`, if inside the grid.
    pub fn nearest(&self, p: &[f64]) -> Option<usize> {
        let mut c = [0usize; 3];
        for a in 0..self.dim {
            let s = ((p[a] - self.origin[a]) / self.h).round();
            if s < 0.0 || s >= self.shape[a] as f64 {
                return None;
            }
            c[a] = s as usize;
        }
        Some(self.index(c[0], c[1], c[2]))
    }

    pub fn upper(&self) -> [f64; 3] {
        let mut u = self.origin;
        for a in 0..self.dim {
            u[a] += (self.shape[a] - 1) as f64 * self.h;
        }
        u
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Every `stride`-th node along each axis, with coordinates scaled by `scale`.
    pub fn subsampled(&self, stride: usize, scale: f64) -> Grid {
        let mut g = self.clone();
        for a in 0..self.dim {
            g.shape[a] = (self.shape[a] - 1) / stride + 1;
            g.origin[a] = self.origin[a] * scale;
        }
        g.h = self.h * stride as f64 * scale;
        g
    }
}

/// Affine map from grid coordinates to physical space: `x = origin + sum_a q_a axes[a]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub origin: [f64; 3],
    pub axes: [[f64; 3]; 3],
}

impl Default for Frame {
    fn default() -> Self {
        Frame::identity()
    }
}

impl Frame {
    pub fn identity() -> Frame {
        Frame { origin: [0.0; 3], axes: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] }
    }

    /// 2D frame whose first axis is the direction at `angle` and second axis its left normal.
    pub fn rotation_2d(angle: f64) -> Frame {
        let (s, c) = angle.sin_cos();
        Frame { origin: [0.0; 3], axes: [[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]] }
    }

    pub fn is_identity(&self) -> bool {
        *self == Frame::identity()
    }

    #[inline]
    pub fn map(&self, q: &[f64; 3]) -> [f64; 3] {
        let mut x = self.origin;
        for (a, qa) in q.iter().enumerate() {
            if *qa != 0.0 {
                for (b, xb) in x.iter_mut().enumerate() {
                    *xb += qa * self.axes[a][b];
                }
            }
        }
        x
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn constant(grid: Grid, v: f64) -> ScalarField {
        let n = grid.len();
        ScalarField { grid, values: vec![v; n] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64; 3]) -> f64) -> ScalarField {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        ScalarField { grid, values }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Every `stride`-th node, coordinates scaled by `scale`; values copied without interpolation.
    pub fn subsample(&self, stride: usize, scale: f64) -> ScalarField {
        let grid = self.grid.subsampled(stride, scale);
        let mut values = Vec::with_capacity(grid.len());
        for k in 0..grid.shape[2] {
            for j in 0..grid.shape[1] {
                for i in 0..grid.shape[0] {
                    let (si, sj, sk) = (
                        i * stride,
                        if self.grid.dim > 1 { j * stride } else { 0 },
                        if self.grid.dim > 2 { k * stride } else { 0 },
                    );
                    values.push(self.values[self.grid.index(si, sj, sk)]);
                }
            }
        }
        ScalarField { grid, values }
    }

    /// Linear interpolation along axis 0 at grid coordinate `x` in row `row`.
    pub fn sample_row(&self, row: usize, x: f64) -> f64 {
        let n0 = self.grid.shape[0];
        let s = ((x - self.grid.origin[0]) / self.grid.h).clamp(0.0, (n0 - 1) as f64);
        let i = (s.floor() as usize).min(n0.saturating_sub(2));
        let w = s - i as f64;
        let base = row * n0;
        if n0 == 1 {
            return self.values[base];
        }
        self.values[base + i] * (1.0 - w) + self.values[base + i + 1] * w
    }

    /// Bilinear interpolation (2D) at grid coordinates `p`.
    pub fn sample_2d(&self, p: [f64; 2]) -> f64 {
        let g = &self.grid;
        let sx = ((p[0] - g.origin[0]) / g.h).clamp(0.0, (g.shape[0] - 1) as f64);
        let sy = ((p[1] - g.origin[1]) / g.h).clamp(0.0, (g.shape[1] - 1) as f64);
        let i = (sx.floor() as usize).min(g.shape[0] - 2);
        let j = (sy.floor() as usize).min(g.shape[1] - 2);
        let (wx, wy) = (sx - i as f64, sy - j as f64);
        let v = |a, b| self.values[g.index(a, b, 0)];
        (1.0 - wy) * ((1.0 - wx) * v(i, j) + wx * v(i + 1, j)) + wy * ((1.0 - wx) * v(i, j + 1) + wx * v(i + 1, j + 1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mask {
    pub grid: Grid,
    pub values: Vec<bool>,
}

impl Mask {
    pub fn count(&self) -> usize {
        self.values.iter().filter(|v| **v).count()
    }

    pub fn volume(&self) -> f64 {
        self.count() as f64 * self.grid.cell_volume()
    }

    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.values.iter().zip(&other.values).all(|(a, b)| !*a || *b)
    }

    pub fn symmetric_difference_volume(&self, other: &Mask) -> f64 {
        let n = self.values.iter().zip(&other.values).filter(|(a, b)| a != b).count();
        n as f64 * self.grid.cell_volume()
    }

    pub fn complement(&self) -> Mask {
        Mask { grid: self.grid.clone(), values: self.values.iter().map(|v| !v).collect() }
    }

    pub fn to_field(&self) -> ScalarField {
        ScalarField { grid: self.grid.clone(), values: self.values.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect() }
    }

    /// True if any set node lies within `margin` nodes of the grid boundary.
    pub fn touches_border(&self, margin: usize) -> bool {
        let g = &self.grid;
        self.values.iter().enumerate().any(|(idx, &v)| {
            v && {
                let c = g.coords(idx);
                (0..g.dim).any(|a| c[a] < margin || c[a] + margin >= g.shape[a])
            }
        })
    }
}

/// Super-level set `{u >= theta}`.
pub fn reached_set(field: &ScalarField, theta: f64) -> Mask {
    Mask { grid: field.grid.clone(), values: field.values.iter().map(|&u| u >= theta).collect() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_round_trip() {
        let g = Grid::new(3, &[4, 5, 6], 0.5, &[-1.0, 0.0, 2.0]).unwrap();
        for idx in [0, 7, 33, g.len() - 1] {
            let c = g.coords(idx);
            assert_eq!(g.index(c[0], c[1], c[2]), idx);
        }
        assert_eq!(g.point(g.index(1, 2, 3)), [-0.5, 1.0, 3.5]);
    }

    #[test]
    fn reached_set_extremes() {
        let g = Grid::new(2, &[8, 8], 1.0, &[0.0, 0.0]).unwrap();
        let f = ScalarField::from_fn(g, |p| (p[0] + p[1]) / 14.0);
        assert_eq!(reached_set(&f, 0.0).count(), 64);
        assert_eq!(reached_set(&f, f.max() + 1e-12).count(), 0);
    }

    #[test]
    fn rotation_frame_is_orthonormal() {
        let f = Frame::rotation_2d(0.7);
        let x = f.map(&[2.0, 0.0, 0.0]);
        assert!((x[0] - 2.0 * 0.7f64.cos()).abs() < 1e-15 && (x[1] - 2.0 * 0.7f64.sin()).abs() < 1e-15);
    }
}
