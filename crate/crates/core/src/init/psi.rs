use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Decay order of the transition polynomial; larger values shorten the bend of `psi`.
pub const PSI_ORDER: i32 = 8;

/// Monotone reparameterization with `psi(0) = 0`, `psi(p) = lift`, `psi(top) = top`,
/// linear on `[0, p]` (`p = top / 3`) and C² everywhere.
///
/// On `[p, p + w]` the slope decays as `s (1 - τ)^k (1 + k τ)`, which matches the
/// linear piece to second order at `p` and reaches zero slope and curvature at `p + w`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Psi {
    pub top: f64,
    pub lift: f64,
    pub p: f64,
    pub slope: f64,
    pub width: f64,
    pub order: i32,
}

impl Psi {
    pub fn new(theta_star: f64, theta1: f64) -> Result<Psi> {
        let top = 1.0 - theta_star;
        let lift = 1.0 - 2.0 * theta1 / 3.0;
        let p = top / 3.0;
        if !(lift <= top && lift > 0.0) {
            return Err(Error::Construction {
                invariant: "psi lift".into(),
                detail: format!("1 - 2 theta1 / 3 = {lift} exceeds 1 - theta* = {top}"),
            });
        }
        let slope = lift / p;
        let k = PSI_ORDER;
        let width = (top - lift) * (k + 2) as f64 / (2.0 * slope);
        if p + width > top {
            return Err(Error::Construction {
                invariant: "psi bend fits below 1 - theta*".into(),
                detail: format!("bend [{p}, {}] overruns {top}", p + width),
            });
        }
        Ok(Psi { top, lift, p, slope, width, order: k })
    }

    /// Integral of `(1 - σ)^k (1 + k σ)` over `[0, τ]`.
    fn q(&self, tau: f64) -> f64 {
        let k = self.order;
        let kf = k as f64;
        let v = 1.0 - tau;
        let vk1 = v.powi(k + 1);
        (1.0 - vk1) / (kf + 1.0) + kf * (1.0 / ((kf + 1.0) * (kf + 2.0)) - vk1 / (kf + 1.0) + vk1 * v / (kf + 2.0))
    }

    pub fn eval(&self, u: f64) -> f64 {
        if u <= 0.0 {
            0.0
        } else if u <= self.p {
            self.slope * u
        } else if u < self.p + self.width {
            self.lift + self.slope * self.width * self.q((u - self.p) / self.width)
        } else {
            self.top
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        if u < 0.0 {
            0.0
        } else if u <= self.p {
            self.slope
        } else if u < self.p + self.width {
            let t = (u - self.p) / self.width;
            self.slope * (1.0 - t).powi(self.order) * (1.0 + self.order as f64 * t)
        } else {
            0.0
        }
    }

    pub fn second_derivative(&self, u: f64) -> f64 {
        if u <= self.p || u >= self.p + self.width {
            0.0
        } else {
            let t = (u - self.p) / self.width;
            let k = self.order as f64;
            -self.slope * k * (k + 1.0) * t * (1.0 - t).powi(self.order - 1) / self.width
        }
    }

    /// `L = max(|psi'|, |psi''|)`.
    pub fn lipschitz_pair(&self) -> f64 {
        let k = self.order as f64;
        let t = 1.0 / k;
        let curv = self.slope * k * (k + 1.0) * t * (1.0 - t).powf(k - 1.0) / self.width;
        self.slope.max(curv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchor_values() {
        let psi = Psi::new(0.0625, 0.25).unwrap();
        assert_eq!(psi.eval(0.0), 0.0);
        assert!((psi.eval(0.9375) - 0.9375).abs() < 1e-15);
        assert!((psi.eval(0.3125) - (1.0 - 0.5 / 3.0)).abs() < 1e-15);
        assert!((psi.eval(psi.p + psi.width) - psi.top).abs() < 1e-14);
    }

    #[test]
    fn tabulation_is_monotone_c2_and_linear_below() {
        let psi = Psi::new(0.0625, 0.25).unwrap();
        let n = 20_000;
        let h = psi.top / n as f64;
        let mut prev = psi.eval(0.0);
        for i in 1..=n {
            let u = i as f64 * h;
            let v = psi.eval(u);
            assert!(v >= prev - 1e-15);
            prev = v;
            // finite-difference consistency of the analytic derivatives
            if u > 2.0 * h && u < psi.top - 2.0 * h {
                let d1 = (psi.eval(u + 1e-6) - psi.eval(u - 1e-6)) / 2e-6;
                assert!((d1 - psi.derivative(u)).abs() < 1e-5 * psi.slope.max(1.0));
            }
            if u < psi.p - h {
                let d2 = (psi.eval(u + h) - 2.0 * psi.eval(u) + psi.eval(u - h.min(u))) / (h * h);
                assert!(u < h || d2.abs() < 1e-6);
            }
        }
        // continuity of psi'' across the breakpoints
        assert!(psi.second_derivative(psi.p + 1e-9).abs() < 1e-5);
        assert!(psi.second_derivative(psi.p + psi.width - 1e-9).abs() < 1e-5);
    }
}
