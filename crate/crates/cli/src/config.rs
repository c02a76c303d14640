//! Experiment configuration. Lengths carry a `_len` suffix and times a `_time` suffix;
//! both are in the nondimensional units of the equation.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use frontlab_core::hj::ConvexSet;
use frontlab_core::homog::PerturbationKind;
use frontlab_core::init::DatumKind;
use frontlab_core::medium::{HypothesisOverrides, MediumSpec};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    pub medium: MediumSpec,
    pub grid: GridBlock,
    #[serde(default)]
    pub seeds: SeedBlock,
    /// Probe distances ahead of the launch line.
    #[serde(default)]
    pub probes_len: Vec<f64>,
    #[serde(default)]
    pub t_end_time: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: HypothesisOverrides,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub spacing_len: f64,
    #[serde(default)]
    pub dt_time: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedBlock {
    List(Vec<u64>),
    Range { start: u64, count: u64 },
}

impl Default for SeedBlock {
    fn default() -> Self {
        SeedBlock::Range { start: 0, count: 1 }
    }
}

impl SeedBlock {
    pub fn seeds(&self) -> Vec<u64> {
        match self {
            SeedBlock::List(v) => v.clone(),
            SeedBlock::Range { start, count } => (*start..start + count).collect(),
        }
    }

    pub fn offset(&self, k: u64) -> SeedBlock {
        match self {
            SeedBlock::List(v) => SeedBlock::List(v.iter().map(|s| s + k).collect()),
            SeedBlock::Range { start, count } => SeedBlock::Range { start: start + k, count: *count },
        }
    }
}

/// Initial source set; rasters are read from a field file on the simulation grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    Everywhere,
    Ball { center: Vec<f64>, radius: f64 },
    HalfSpace { normal: Vec<f64>, offset: f64 },
    Polytope { normals: Vec<Vec<f64>>, offsets: Vec<f64> },
    Raster { path: PathBuf },
}

/// Where an effective speed comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpeedSpec {
    /// `c0` of the medium profile.
    C0,
    Constant { c: f64 },
    /// Speed table CSV as written by `front-speed`.
    File { path: PathBuf },
    /// `c(theta) = base * (1 + amplitude * cos(lobes * theta))` in 2D.
    Lobed { base: f64, amplitude: f64, lobes: u32 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HjMethod {
    Convex,
    LevelSet,
    Both,
}

/// Calibrated constants: loaded from a file or measured inline.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSource {
    #[serde(default)]
    pub constants_file: Option<PathBuf>,
    #[serde(default)]
    pub calibration_spacing_len: Option<f64>,
    #[serde(default)]
    pub calibration_t_end_time: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Command {
    Simulate {
        source: SourceSpec,
        #[serde(default)]
        datum: DatumKind,
        domain_lo_len: Vec<f64>,
        domain_hi_len: Vec<f64>,
        #[serde(default)]
        snapshot_times: Vec<f64>,
        #[serde(default)]
        width_etas: Vec<f64>,
        #[serde(default = "default_every")]
        width_every_time: f64,
    },
    FrontSpeed {
        #[serde(default)]
        directions: Vec<Vec<f64>>,
        #[serde(default)]
        defect_exponent: Option<f64>,
    },
    Fluctuations {
        #[serde(default)]
        direction: Option<Vec<f64>>,
    },
    Additivity {
        #[serde(default)]
        direction: Option<Vec<f64>>,
        pairs_len: Vec<(f64, f64)>,
    },
    Wulff {
        source_radius_len: f64,
        at_time: f64,
        #[serde(default = "default_angles")]
        angles: usize,
    },
    Hj {
        set: ConvexSet,
        speed: SpeedSpec,
        at_time: f64,
        method: HjMethod,
        /// Half width of the level-set box.
        #[serde(default)]
        half_width_len: Option<f64>,
    },
    Homogenize {
        set: ConvexSet,
        speed: SpeedSpec,
        epsilons: Vec<f64>,
        probe_times: Vec<f64>,
        delta_len: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        y_shift_len: Vec<f64>,
        #[serde(default)]
        psi_margin_len: f64,
    },
    Exclusivity {
        #[serde(default)]
        direction: Option<Vec<f64>>,
        a: f64,
        #[serde(default)]
        margins: Option<(f64, f64)>,
        #[serde(default)]
        burn_in_time: Option<f64>,
        #[serde(default)]
        every_time: Option<f64>,
        #[serde(default)]
        c_star: Option<f64>,
        #[serde(default)]
        constants: ConstantsSource,
    },
    Perturb {
        eta: f64,
        t0_time: f64,
        probe_len: f64,
        #[serde(default)]
        radius_len: Option<f64>,
        modification: PerturbationKind,
        #[serde(default)]
        constants: ConstantsSource,
    },
    Calibrate {
        #[serde(default = "default_every")]
        every_time: f64,
    },
}

fn default_every() -> f64 {
    1.0
}
fn default_angles() -> usize {
    64
}
fn one() -> f64 {
    1.0
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::FrontSpeed { .. } => "front-speed",
            Command::Fluctuations { .. } => "fluctuations",
            Command::Additivity { .. } => "additivity",
            Command::Wulff { .. } => "wulff",
            Command::Hj { .. } => "hj",
            Command::Homogenize { .. } => "homogenize",
            Command::Exclusivity { .. } => "exclusivity",
            Command::Perturb { .. } => "perturb",
            Command::Calibrate { .. } => "calibrate",
        }
    }
}

pub const COMMAND_NAMES: [&str; 10] =
    ["simulate", "front-speed", "fluctuations", "additivity", "wulff", "hj", "homogenize", "exclusivity", "perturb", "calibrate"];

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Usage(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Usage(e.to_string()))
    }

    /// Structural checks with field paths; numerical admissibility is left to the core.
    pub fn validate(&self) -> CliResult<()> {
        let bad = |path: &str, msg: &str| Err(CliError::Usage(format!("{path}: {msg}")));
        if !(self.grid.spacing_len > 0.0) {
            return bad("grid.spacing_len", "must be positive");
        }
        if self.seeds.seeds().is_empty() {
            return bad("seeds", "must list at least one seed");
        }
        if self.medium.dim == 0 || self.medium.dim > 3 {
            return bad("medium.dim", "must be 1, 2 or 3");
        }
        let ensemble = matches!(
            self.command,
            Command::FrontSpeed { .. } | Command::Fluctuations { .. } | Command::Additivity { .. }
        );
        if ensemble && self.probes_len.is_empty() {
            return bad("probes_len", "ensemble commands need probe distances");
        }
        let needs_horizon = !matches!(self.command, Command::Hj { .. } | Command::Homogenize { .. } | Command::Wulff { .. });
        if needs_horizon && !(self.t_end_time >= 0.0) {
            return bad("t_end_time", "must be nonnegative");
        }
        if let Command::Simulate { domain_lo_len, domain_hi_len, .. } = &self.command {
            if domain_lo_len.len() != self.medium.dim || domain_hi_len.len() != self.medium.dim {
                return bad("command.domain_lo_len", "box corners need one entry per dimension");
            }
        }
        if let Command::Homogenize { epsilons, .. } = &self.command {
            if epsilons.windows(2).any(|w| !(w[1] < w[0])) {
                return bad("command.epsilons", "must be strictly decreasing");
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialization, with the output directory removed.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        let text = c.to_toml().expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}
