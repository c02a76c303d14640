//! Effective Hamilton-Jacobi dynamics: explicit convex formula and a level-set scheme.

mod convex;
mod levelset;

pub use convex::{
    densify, direction_sample, hausdorff, polygon_area, polygon_perimeter, theta_convex, wulff_shape, ConvexSet,
    HalfSpaces, DIRECTIONS_2D, ICOSPHERE_LEVEL,
};
pub use levelset::{levelset_evolve, signed_distance, LevelSetOptions, LevelSetResult, LEVELSET_CFL};

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::grid::{Frame, Grid, Mask, ScalarField};

/// Reachable set `Theta_t` in explicit or level-set form.
#[derive(Clone, Debug)]
pub enum ReachabilitySet {
    Explicit { t: f64, set: HalfSpaces },
    LevelSet { t: f64, field: ScalarField },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolygonRecord {
    pub t: f64,
    pub vertices: Vec<[f64; 2]>,
}

impl ReachabilitySet {
    pub fn t(&self) -> f64 {
        match self {
            ReachabilitySet::Explicit { t, .. } | ReachabilitySet::LevelSet { t, .. } => *t,
        }
    }

    /// Mask on `grid`; level-set forms must live on the same grid.
    pub fn mask(&self, grid: &Grid) -> Result<Mask> {
        match self {
            ReachabilitySet::Explicit { set, .. } => Ok(set.mask(grid, &Frame::identity())),
            ReachabilitySet::LevelSet { field, .. } => {
                if field.grid != *grid {
                    return config("level-set field and target grid differ");
                }
                Ok(Mask { grid: grid.clone(), values: field.values.iter().map(|&v| v > 0.0).collect() })
            }
        }
    }
}
