//! Stationary random ignition reactions `f(x, u, omega) = (1 + sup_k a(omega_k) g(x - k)) F0(u)`.

mod bump;
mod params;
mod profile;
mod site;

pub use bump::BumpShape;
pub use params::{HypothesisParams, HypothesisOverrides};
pub use profile::{make_profile, make_profile_from, IgnitionProfile, ProfileSpec, PROFILE_SAMPLES};
pub use site::sample_site;

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Relative cutoff below which decaying bump contributions are ignored.
pub const ENVELOPE_CUTOFF: f64 = 1e-12;

/// Law of the lattice amplitudes `a(omega_k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SiteLaw {
    /// `a = 0`: deterministic homogeneous medium.
    Homogeneous,
    /// `a(omega) = max * omega`.
    Uniform { max: f64 },
    /// `a(omega) = value` with probability `p`, else 0.
    Bernoulli { p: f64, value: f64 },
    /// Random bump index `j` with `P(j) = j^-gamma / zeta(gamma)`, capped at `j_max`;
    /// site `k` carries the dilated bump `g(x / j)`.
    Sticks { gamma: f64, j_max: u32 },
}

fn default_window() -> f64 {
    32.0
}

/// Serializable description of a medium family; a seed selects the realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MediumSpec {
    pub dim: usize,
    #[serde(default)]
    pub profile: ProfileSpec,
    pub bump: BumpShape,
    /// Per-axis dilation of the bump; `g(y)` is evaluated at `|y ./ stretch|`.
    #[serde(default)]
    pub stretch: Option<Vec<f64>>,
    pub law: SiteLaw,
    /// Truncation radius `n` (finite range of dependence).
    #[serde(default)]
    pub range: Option<f64>,
    /// Largest search radius for the envelope supremum.
    #[serde(default = "default_window")]
    pub window_max: f64,
}

impl MediumSpec {
    pub fn homogeneous(dim: usize, profile: ProfileSpec) -> Self {
        MediumSpec {
            dim,
            profile,
            bump: BumpShape::Zero,
            stretch: None,
            law: SiteLaw::Homogeneous,
            range: None,
            window_max: default_window(),
        }
    }

    /// Uniform amplitudes in `[0, 1]` on a hat of the given radius, so `sup a * sup g = 1`.
    pub fn uniform_hat(dim: usize, profile: ProfileSpec, radius: f64) -> Self {
        MediumSpec {
            dim,
            profile,
            bump: BumpShape::Hat { radius },
            stretch: None,
            law: SiteLaw::Uniform { max: 1.0 },
            range: None,
            window_max: default_window(),
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        matches!(self.law, SiteLaw::Homogeneous) || matches!(self.bump, BumpShape::Zero)
    }
}

/// One realization of a random ignition medium. Immutable and cheap to share.
#[derive(Clone, Debug)]
pub struct RandomMedium {
    pub spec: MediumSpec,
    pub profile: IgnitionProfile,
    pub seed: u64,
    shift: [i64; 3],
    /// Mutually orthogonal lattice vectors along which site variables repeat.
    site_periods: Vec<[i64; 3]>,
    stretch: [f64; 3],
    max_stretch: f64,
    /// Effective search radius for the supremum.
    pub window: f64,
    /// True when `window_max` cut the search below the decay cutoff.
    pub window_capped: bool,
    stick_cdf: Vec<f64>,
    /// Probability mass of stick indices above `j_max` folded into `j_max`.
    pub capped_mass: f64,
}

impl RandomMedium {
    pub fn new(spec: MediumSpec, seed: u64) -> Result<Self> {
        if !(1..=3).contains(&spec.dim) {
            return config(format!("dim = {} must be 1, 2 or 3", spec.dim));
        }
        spec.bump.validate()?;
        let profile = make_profile_from(&spec.profile)?;
        let mut stretch = [1.0; 3];
        if let Some(s) = &spec.stretch {
            if s.len() != spec.dim || s.iter().any(|v| !(*v > 0.0)) {
                return config(format!("stretch {s:?} must have {} positive entries", spec.dim));
            }
            stretch[..spec.dim].copy_from_slice(s);
        }
        let max_stretch = stretch[..spec.dim].iter().cloned().fold(0.0, f64::max);
        let (a_max, j_scale) = match &spec.law {
            SiteLaw::Homogeneous => (0.0, 1.0),
            SiteLaw::Uniform { max } => {
                if !(0.0..=1.0).contains(max) {
                    return config(format!("uniform amplitude max = {max} must lie in [0, 1]"));
                }
                (*max, 1.0)
            }
            SiteLaw::Bernoulli { p, value } => {
                if !(0.0..=1.0).contains(p) || !(0.0..=1.0).contains(value) {
                    return config(format!("bernoulli law p = {p}, value = {value} must lie in [0, 1]"));
                }
                (*value, 1.0)
            }
            SiteLaw::Sticks { gamma, j_max } => {
                let need = 3.0 * spec.dim as f64 + 2.0;
                if !(*gamma > need) || *j_max < 1 {
                    return config(format!("sticks law needs gamma > {need} and j_max >= 1"));
                }
                if spec.bump.support().map_or(true, |s| s > 1.0) {
                    return config("sticks law needs a bump supported in the unit ball");
                }
                (1.0, *j_max as f64)
            }
        };
        let (stick_cdf, capped_mass) = match &spec.law {
            SiteLaw::Sticks { gamma, j_max } => stick_table(*gamma, *j_max),
            _ => (Vec::new(), 0.0),
        };
        if !(spec.window_max > 0.0) {
            return config("window_max must be positive");
        }
        if let Some(n) = spec.range {
            if !(n > 0.0) {
                return config(format!("truncation radius {n} must be positive"));
            }
        }
        let natural = if a_max == 0.0 {
            0.0
        } else {
            match (&spec.bump, spec.bump.support()) {
                (_, Some(s)) => s * max_stretch * j_scale,
                (BumpShape::Power { core, decay }, None) => {
                    let x2 = (a_max / ENVELOPE_CUTOFF).powf(2.0 / decay) - 1.0;
                    core * x2.max(0.0).sqrt() * max_stretch * j_scale
                }
                _ => unreachable!(),
            }
        };
        let truncated = spec.range.map_or(natural, |n| natural.min(0.5 * n));
        let window_capped = truncated > spec.window_max;
        let window = truncated.min(spec.window_max);
        if window_capped {
            log::info!("envelope window capped at {window} (decay cutoff radius {truncated})");
        }
        Ok(RandomMedium {
            spec,
            profile,
            seed,
            shift: [0; 3],
            site_periods: Vec::new(),
            stretch,
            max_stretch,
            window,
            window_capped,
            stick_cdf,
            capped_mass,
        })
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    /// Same medium with lattice variables relabeled by `y`: `omega'_k = omega_{k + y}`.
    pub fn shifted(&self, y: &[i64]) -> Self {
        let mut m = self.clone();
        for (i, v) in y.iter().enumerate().take(self.dim()) {
            m.shift[i] += v;
        }
        m
    }

    /// Same law with site variables made periodic along the given orthogonal lattice vectors,
    /// so the realization is exactly invariant under those shifts.
    pub fn with_site_periods(&self, periods: &[Vec<i64>]) -> Result<Self> {
        let d = self.dim();
        let mut out = Vec::new();
        for p in periods {
            if p.len() != d || p.iter().all(|&v| v == 0) {
                return config(format!("site period {p:?} must be a nonzero {d}-vector"));
            }
            let mut v = [0i64; 3];
            v[..d].copy_from_slice(p);
            if out.iter().any(|w: &[i64; 3]| (0..3).map(|i| w[i] * v[i]).sum::<i64>() != 0) {
                return config("site periods must be mutually orthogonal");
            }
            out.push(v);
        }
        let mut m = self.clone();
        m.site_periods = out;
        Ok(m)
    }

    #[inline]
    fn canonical_site(&self, k: &mut [i64; 3]) {
        for v in &self.site_periods {
            let n2: i64 = v.iter().map(|a| a * a).sum();
            let kv: i64 = (0..3).map(|i| k[i] * v[i]).sum();
            let m = kv.div_euclid(n2);
            for i in 0..3 {
                k[i] -= m * v[i];
            }
        }
    }

    /// Truncated medium with bump `g_n`.
    pub fn truncate_range(&self, n: f64, params: &HypothesisParams) -> Result<Self> {
        if !(n >= params.n4) {
            return config(format!("truncation radius {n} below n4 = {}", params.n4));
        }
        let mut spec = self.spec.clone();
        spec.range = Some(spec.range.map_or(n, |r| r.min(n)));
        let mut m = RandomMedium::new(spec, self.seed)?;
        m.shift = self.shift;
        m.site_periods = self.site_periods.clone();
        Ok(m)
    }

    /// Largest amplitude `a` can take.
    pub fn amplitude_max(&self) -> f64 {
        match &self.spec.law {
            SiteLaw::Homogeneous => 0.0,
            SiteLaw::Uniform { max } => *max,
            SiteLaw::Bernoulli { value, .. } => *value,
            SiteLaw::Sticks { .. } => 1.0,
        }
    }

    /// Upper bound of the envelope: `1 + sup a * sup g`.
    pub fn envelope_max(&self) -> f64 {
        1.0 + self.amplitude_max() * self.spec.bump.peak()
    }

    /// Lipschitz constant of `f` in `u`.
    pub fn lipschitz_u(&self) -> f64 {
        self.envelope_max() * self.profile.m
    }

    #[inline]
    fn stick_index(&self, omega: f64) -> u32 {
        self.stick_cdf.partition_point(|&c| c <= omega) as u32 + 1
    }

    #[inline]
    fn site_term(&self, x: &[f64], k: &[i64; 3], omega: f64) -> f64 {
        let d = self.dim();
        let (mut r2, mut s2) = (0.0, 0.0);
        for i in 0..d {
            let y = x[i] - k[i] as f64;
            r2 += y * y;
            let ys = y / self.stretch[i];
            s2 += ys * ys;
        }
        let r = r2.sqrt();
        let (amp, scale, trunc_slope) = match &self.spec.law {
            SiteLaw::Homogeneous => return 0.0,
            SiteLaw::Uniform { max } => (max * omega, 1.0, 1.0),
            SiteLaw::Bernoulli { p, value } => (if omega < *p { *value } else { 0.0 }, 1.0, 1.0),
            SiteLaw::Sticks { .. } => (1.0, self.stick_index(omega) as f64, 2.0),
        };
        if amp == 0.0 {
            return 0.0;
        }
        let mut g = self.spec.bump.eval(s2.sqrt() / scale);
        if let Some(n) = self.spec.range {
            g *= (trunc_slope * (0.5 * n - r)).clamp(0.0, 1.0);
        }
        amp * g
    }

    /// Envelope `1 + sup_k a(omega_k) g(x - k)`; `visit` sees every lattice site read.
    pub fn envelope_visit(&self, x: &[f64], mut visit: impl FnMut(&[i64])) -> f64 {
        let d = self.dim();
        if self.window == 0.0 {
            return 1.0;
        }
        let a_max = self.amplitude_max();
        let j_scale = match self.spec.law {
            SiteLaw::Sticks { j_max, .. } => j_max as f64,
            _ => 1.0,
        };
        let mut c = [0i64; 3];
        for i in 0..d {
            c[i] = x[i].floor() as i64;
        }
        let reach = self.window;
        let shells = reach.ceil() as i64 + 1;
        let mut best = 0.0f64;
        let mut k = [0i64; 3];
        let mut shifted = [0i64; 3];
        for s in 0..=shells {
            let lo = [-s, if d > 1 { -s } else { 0 }, if d > 2 { -s } else { 0 }];
            let hi = [s, if d > 1 { s } else { 0 }, if d > 2 { s } else { 0 }];
            for o2 in lo[2]..=hi[2] {
                for o1 in lo[1]..=hi[1] {
                    for o0 in lo[0]..=hi[0] {
                        if o0.abs().max(o1.abs()).max(o2.abs()) != s {
                            continue;
                        }
                        k[0] = c[0] + o0;
                        k[1] = c[1] + o1;
                        k[2] = c[2] + o2;
                        let mut r2 = 0.0;
                        for i in 0..d {
                            let y = x[i] - k[i] as f64;
                            r2 += y * y;
                        }
                        if r2 >= reach * reach {
                            continue;
                        }
                        for i in 0..d {
                            shifted[i] = k[i] + self.shift[i];
                        }
                        self.canonical_site(&mut shifted);
                        visit(&shifted[..d]);
                        let omega = sample_site(self.seed, &shifted[..d]);
                        best = best.max(self.site_term(x, &k, omega));
                    }
                }
            }
            // every site in later shells is at distance >= s
            let bound = a_max * self.spec.bump.tail_sup(s as f64 / self.max_stretch / j_scale);
            if bound <= best {
                break;
            }
        }
        1.0 + best
    }

    #[inline]
    pub fn envelope(&self, x: &[f64]) -> f64 {
        self.envelope_visit(x, |_| {})
    }

    /// `f(x, u, omega)`; states outside `[0, 1]` react at rate 0.
    pub fn eval_reaction(&self, x: &[f64], u: f64) -> f64 {
        let f0 = self.profile.eval(u);
        if f0 == 0.0 {
            return 0.0;
        }
        self.envelope(x) * f0
    }
}

/// Free-function form of [`RandomMedium::eval_reaction`].
pub fn eval_reaction(medium: &RandomMedium, x: &[f64], u: f64) -> f64 {
    medium.eval_reaction(x, u)
}

fn stick_table(gamma: f64, j_max: u32) -> (Vec<f64>, f64) {
    // zeta(gamma) by direct summation plus an integral tail estimate
    let n = 100_000u64;
    let mut zeta: f64 = (1..=n).map(|j| (j as f64).powf(-gamma)).sum();
    zeta += (n as f64).powf(1.0 - gamma) / (gamma - 1.0);
    let mut cdf = Vec::with_capacity(j_max as usize);
    let mut acc = 0.0;
    for j in 1..j_max {
        acc += (j as f64).powf(-gamma) / zeta;
        cdf.push(acc);
    }
    (cdf, 1.0 - acc - (j_max as f64).powf(-gamma) / zeta)
}
