use serde::{Deserialize, Serialize};

use super::{BumpShape, RandomMedium, SiteLaw};
use crate::error::{config, Result};

/// Optional overrides for constants that the medium does not determine.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HypothesisOverrides {
    pub theta_star: Option<f64>,
    pub m2: Option<f64>,
    pub m4_prime: Option<f64>,
    pub a2: Option<f64>,
    pub alpha2_prime: Option<f64>,
}

/// Constants of the structural hypotheses together with the derived quantities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisParams {
    pub dim: usize,
    pub theta1: f64,
    pub m1: f64,
    pub alpha1: f64,
    #[serde(rename = "lipschitz")]
    pub m: f64,
    pub m2: f64,
    pub alpha2: f64,
    pub m3: f64,
    pub alpha3: f64,
    pub m4: f64,
    pub m4_prime: f64,
    pub alpha4: f64,
    pub n4: f64,
    pub a2: f64,
    pub alpha2_prime: f64,
    pub theta_star: f64,
    pub c1: f64,
    pub kappa1: f64,
    pub beta1: f64,
    pub beta3: f64,
}

/// Exponent used for `m4` when the bump has compact support and `f = f_n` for large `n`.
const COMPACT_M4: f64 = 8.0;

impl HypothesisParams {
    pub fn for_medium(medium: &RandomMedium, ov: &HypothesisOverrides) -> Result<Self> {
        let p = &medium.profile;
        let dim = medium.dim();
        let theta1 = p.theta1();
        let env_max = medium.envelope_max();
        let f0_max = p.max_value();
        let grad_x = f0_max * medium.amplitude_max() * medium.spec.bump.lipschitz();
        let m = (env_max * p.m).max(grad_x).max(1.0);
        let m2 = ov.m2.unwrap_or(1.0);
        let alpha2 = 0.0;
        let a_max = medium.amplitude_max();
        let (m4, alpha4, n4) = match (&medium.spec.bump, &medium.spec.law) {
            (_, SiteLaw::Homogeneous) | (BumpShape::Zero, _) => (COMPACT_M4, 0.0, 1.0),
            (BumpShape::Power { core, decay }, SiteLaw::Uniform { .. } | SiteLaw::Bernoulli { .. }) => {
                // g - g_n vanishes on B_{n/2-1}; beyond it g <= (core / r)^decay and r >= n/4 for n >= 4
                let stretch = medium.spec.stretch.as_ref().map_or(1.0, |s| s.iter().cloned().fold(0.0, f64::max));
                (*decay, f0_max * a_max * (4.0 * core * stretch).powf(*decay), 4.0)
            }
            (shape, _) => {
                // compact bumps: f_n = f once n exceeds the support diameter
                let j = match medium.spec.law {
                    SiteLaw::Sticks { j_max, .. } => j_max as f64,
                    _ => 1.0,
                };
                let stretch = medium.spec.stretch.as_ref().map_or(1.0, |s| s.iter().cloned().fold(0.0, f64::max));
                let diam = 2.0 * shape.support().unwrap_or(0.0) * stretch * j + 2.0;
                (COMPACT_M4, 0.0, diam.max(1.0))
            }
        };
        let theta_star = ov.theta_star.unwrap_or(theta1 / 4.0);
        let m4_prime = ov.m4_prime.unwrap_or(1.0);
        let params = HypothesisParams {
            dim,
            theta1,
            m1: p.m1,
            alpha1: p.alpha1,
            m,
            m2,
            alpha2,
            m3: p.m1,
            alpha3: p.alpha1,
            m4,
            m4_prime,
            alpha4,
            n4,
            a2: ov.a2.unwrap_or(0.0),
            alpha2_prime: ov.alpha2_prime.unwrap_or(0.0),
            theta_star,
            c1: 2.0 * (m * dim as f64).sqrt(),
            kappa1: 1.0 + (dim as f64 / m).sqrt() * (2.0 * dim as f64 / (1.0 - 2.0 * theta1)).ln(),
            beta1: beta1(p.m1, m2, alpha2),
            beta3: 0.0,
        };
        let mut params = params;
        params.beta3 = params
            .beta1
            .max(params.m3 / (params.m3 + 2.0 * params.m4))
            .max((2.0 * dim as f64 + 2.0) / (2.0 * dim as f64 + 2.0 + params.m4_prime));
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let cap = self.theta1.min(0.5) / 2.0;
        if !(self.theta_star > 0.0 && self.theta_star <= cap) {
            return config(format!("theta_star = {} must lie in (0, {cap}]", self.theta_star));
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0) {
            return config(format!("beta1 = {} must lie in (0, 1)", self.beta1));
        }
        if !(self.m2 > 0.0) {
            return config("m2 must be positive");
        }
        Ok(())
    }

    /// Exponent `(1 + beta1) / 2` of the mean-linearity defect.
    pub fn beta(&self) -> f64 {
        0.5 * (1.0 + self.beta1)
    }
}

pub fn beta1(m1: f64, m2: f64, alpha2: f64) -> f64 {
    ((m1 - 1.0) / m1).max((m2 + alpha2) / (m2 + 1.0))
}
