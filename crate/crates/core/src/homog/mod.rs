//! Homogenization experiments: rescaling, error against the effective set, exclusivity and
//! perturbation checks, plus calibration of the empirical constants.

mod calibrate;
mod compare;
mod exclusivity;
mod experiment;
mod perturb;

pub use calibrate::{calibrate, CalibratedConstants, CalibrationSpec, MONOTONE_TOL};
pub use compare::{homog_error, rescale, HomogError};
pub use exclusivity::{exclusivity_probe, slab_sup, ExclusivityRecord, ExclusivitySpec, SlabSample};
pub use experiment::{run_homogenization, HomogExperiment, HomogReport, HomogRow, SpeedSource};
pub use perturb::{perturbation_check, PerturbationKind, PerturbationPair, PerturbationRecord, PerturbationSpec};
