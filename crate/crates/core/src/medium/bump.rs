use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Radial envelope bump `g`, peak value 1 at the origin unless tabulated otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BumpShape {
    Zero,
    /// `(1 - r / radius)_+`
    Hat { radius: f64 },
    /// `exp(1 - 1 / (1 - (r / radius)^2))` inside the ball.
    Smooth { radius: f64 },
    /// `(1 + (r / core)^2)^(-decay / 2)`, algebraic decay exponent `decay`.
    Power { core: f64, decay: f64 },
    /// Piecewise-linear radial table with spacing `dr`, zero beyond the last sample.
    Table { dr: f64, values: Vec<f64> },
}

impl BumpShape {
    pub fn validate(&self) -> Result<()> {
        match self {
            BumpShape::Zero => Ok(()),
            BumpShape::Hat { radius } | BumpShape::Smooth { radius } if *radius > 0.0 => Ok(()),
            BumpShape::Power { core, decay } if *core > 0.0 && *decay > 0.0 => Ok(()),
            BumpShape::Table { dr, values }
                if *dr > 0.0 && !values.is_empty() && values.iter().all(|v| v.is_finite() && *v >= 0.0) =>
            {
                Ok(())
            }
            other => config(format!("invalid bump shape {other:?}")),
        }
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            BumpShape::Zero => 0.0,
            BumpShape::Hat { radius } => (1.0 - r / radius).max(0.0),
            BumpShape::Smooth { radius } => {
                let s = r / radius;
                if s >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - s * s)).exp()
                }
            }
            BumpShape::Power { core, decay } => (1.0 + (r / core) * (r / core)).powf(-0.5 * decay),
            BumpShape::Table { dr, values } => {
                let s = r / dr;
                let i = s.floor() as usize;
                if i + 1 >= values.len() {
                    if i + 1 == values.len() && s == i as f64 {
                        values[i]
                    } else {
                        0.0
                    }
                } else {
                    let w = s - i as f64;
                    values[i] * (1.0 - w) + values[i + 1] * w
                }
            }
        }
    }

    /// Radius of the support, `None` when unbounded.
    pub fn support(&self) -> Option<f64> {
        match self {
            BumpShape::Zero => Some(0.0),
            BumpShape::Hat { radius } | BumpShape::Smooth { radius } => Some(*radius),
            BumpShape::Power { .. } => None,
            BumpShape::Table { dr, values } => Some(dr * (values.len() - 1) as f64),
        }
    }

    /// Upper bound for `g` at radii `>= r`.
    pub fn tail_sup(&self, r: f64) -> f64 {
        match self {
            BumpShape::Table { dr, values } => {
                let i = (r / dr).floor().max(0.0) as usize;
                if i >= values.len() {
                    0.0
                } else {
                    values[i..].iter().cloned().fold(0.0, f64::max)
                }
            }
            // monotone radial shapes
            _ => self.eval(r.max(0.0)),
        }
    }

    pub fn peak(&self) -> f64 {
        self.tail_sup(0.0)
    }

    /// Lipschitz constant of the radial profile.
    pub fn lipschitz(&self) -> f64 {
        match self {
            BumpShape::Zero => 0.0,
            BumpShape::Hat { radius } => 1.0 / radius,
            // max |d/ds exp(1 - 1/(1-s^2))| is attained near s = 0.5505
            BumpShape::Smooth { radius } => {
                let n = 2000;
                let mut best = 0.0f64;
                for i in 0..n {
                    let s0 = i as f64 / n as f64;
                    let s1 = (i + 1) as f64 / n as f64;
                    let a = BumpShape::Smooth { radius: 1.0 };
                    best = best.max((a.eval(s1) - a.eval(s0)).abs() * n as f64);
                }
                best / radius
            }
            // max of d/dr (1 + x^2)^(-q/2) with x = r/core is at x = 1/sqrt(q+1)
            BumpShape::Power { core, decay } => {
                let x = 1.0 / (decay + 1.0).sqrt();
                decay * x * (1.0 + x * x).powf(-0.5 * decay - 1.0) / core
            }
            BumpShape::Table { dr, values } => {
                values.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max).max(values[values.len() - 1])
                    / dr
            }
        }
    }
}
