//! Smooth compactly supported sub-solution initial data.

mod datum;
mod mollifier;
mod psi;

pub use datum::{
    build_initial_datum, halfspace_scale, source_mask, support_inflation, subsolution_defect, Construction, DatumKind, DatumOptions, InitialDatum, SourceSet,
    INFLATION_N, MOLLIFIER_A,
};
pub use mollifier::{mollified_bump, sphere_area, xi, zeta_l1, MollifiedBump};
pub use psi::{Psi, PSI_ORDER};
