//! Monte-Carlo front-speed, additivity, fluctuation and Wulff-shape estimates.

mod c0;
mod ensemble;
mod report;
pub mod stats;
mod table;

pub use c0::{compute_c0, compute_c0_with};
pub use ensemble::{
    halfspace_setup, require_reached, run_ball_member, run_halfspace_ensemble, run_halfspace_member, run_halfspace_member_with, strip_layout,
    BallRun, EnsembleSpec, HalfSpaceSetup, MemberRecord, SolverSettings, StripLayout,
};
pub use report::{
    dependence_range, estimate_front_speed, estimate_front_speed_with, estimate_speed_table, estimate_wulff,
    fluctuation_stats, fluctuations_from_runs, linearity_from_runs, mean_linearity, ray_boundary, speed_from_runs,
    DefectRow, DistanceStats, FluctuationReport, LinearityReport, SpeedFit, TailFit, WulffEstimate,
    DEFAULT_DEFECT_EXPONENT, MIN_FLUCTUATION_SEEDS, TAIL_QUANTILE,
};
pub use table::{angle_of, icosphere, unit_2d, SpeedEntry, SpeedTable};
