use crate::grid::{Frame, Grid};
use crate::medium::{IgnitionProfile, RandomMedium};
use crate::par::{self, Exec};

/// Per-cell scalar that is either uniform or tabulated on the grid.
#[derive(Clone, Debug, PartialEq)]
pub enum CellValues {
    Uniform(f64),
    Cells(Vec<f64>),
}

impl CellValues {
    #[inline]
    pub fn at(&self, idx: usize) -> f64 {
        match self {
            CellValues::Uniform(v) => *v,
            CellValues::Cells(c) => c[idx],
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            CellValues::Uniform(v) => *v,
            CellValues::Cells(c) => c.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn to_cells(&self, n: usize) -> Vec<f64> {
        match self {
            CellValues::Uniform(v) => vec![*v; n],
            CellValues::Cells(c) => c.clone(),
        }
    }
}

/// Reaction sampled on a grid: `rate = max(0, envelope * F0(u) + offset)` where `F0(u) > 0`, else 0.
#[derive(Clone, Debug)]
pub struct GridReaction {
    pub profile: IgnitionProfile,
    pub envelope: CellValues,
    pub offset: CellValues,
    square_cap: bool,
}

impl GridReaction {
    pub fn new(profile: IgnitionProfile, envelope: CellValues) -> Self {
        let square_cap = profile.m1 == 2.0;
        GridReaction { profile, envelope, offset: CellValues::Uniform(0.0), square_cap }
    }

    pub fn homogeneous(profile: IgnitionProfile) -> Self {
        GridReaction::new(profile, CellValues::Uniform(1.0))
    }

    /// Sample the envelope of `medium` at the physical images of the grid nodes.
    pub fn from_medium(medium: &RandomMedium, grid: &Grid, frame: &Frame, exec: Exec) -> Self {
        if medium.window == 0.0 {
            return GridReaction::homogeneous(medium.profile.clone());
        }
        let d = medium.dim();
        let env = par::map_range(exec, grid.len(), |idx| {
            let x = frame.map(&grid.point(idx));
            medium.envelope(&x[..d])
        });
        GridReaction::new(medium.profile.clone(), CellValues::Cells(env))
    }

    #[inline]
    pub fn f0(&self, u: f64) -> f64 {
        let p = &self.profile;
        if !(u > p.theta0 && u < 1.0) {
            return 0.0;
        }
        let ramp = p.m * (u - p.theta0);
        let v = 1.0 - u;
        let cap = if self.square_cap { p.alpha1 * v * v } else { p.alpha1 * v.powf(p.m1) };
        ramp.min(cap)
    }

    #[inline]
    pub fn rate(&self, idx: usize, u: f64) -> f64 {
        let f0 = self.f0(u);
        if f0 == 0.0 {
            return 0.0;
        }
        let r = self.envelope.at(idx) * f0;
        match &self.offset {
            CellValues::Uniform(o) if *o == 0.0 => r,
            off => (r + off.at(idx)).max(0.0),
        }
    }

    /// Lipschitz constant of the rate in `u`.
    pub fn lipschitz_u(&self) -> f64 {
        self.envelope.max() * self.profile.m
    }
}
