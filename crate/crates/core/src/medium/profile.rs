use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of intervals in the stored tabulation of `F0`.
pub const PROFILE_SAMPLES: usize = 1024;

/// Parameters of the canonical ignition profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub theta0: f64,
    #[serde(rename = "lipschitz")]
    pub m: f64,
    pub m1: f64,
    pub alpha1: f64,
}

impl Default for ProfileSpec {
    fn default() -> Self {
        ProfileSpec { theta0: 0.25, m: 1.0, m1: 2.0, alpha1: 0.5 }
    }
}

/// `F0(u) = min(M (u - theta0)_+, alpha1 (1 - u)^m1)` on `(theta0, 1)`, zero elsewhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IgnitionProfile {
    pub theta0: f64,
    pub m: f64,
    pub m1: f64,
    pub alpha1: f64,
    /// Point where the ramp meets the cap.
    pub join: f64,
    /// `F0` on the uniform grid `i / PROFILE_SAMPLES`.
    pub samples: Vec<f64>,
}

impl IgnitionProfile {
    pub fn spec(&self) -> ProfileSpec {
        ProfileSpec { theta0: self.theta0, m: self.m, m1: self.m1, alpha1: self.alpha1 }
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        if !(u > self.theta0 && u < 1.0) {
            return 0.0;
        }
        let ramp = self.m * (u - self.theta0);
        let cap = self.alpha1 * (1.0 - u).powf(self.m1);
        ramp.min(cap)
    }

    /// Largest admissible `theta1`: `F0` vanishes on `[0, theta1]` and follows the cap on `[1 - theta1, 1)`.
    pub fn theta1(&self) -> f64 {
        self.theta0.min(1.0 - self.join)
    }

    pub fn max_value(&self) -> f64 {
        self.m * (self.join - self.theta0)
    }

    /// Minimum of `F0` over `[lo, hi]` inside `(theta0, 1)`; the profile is unimodal.
    pub fn min_on(&self, lo: f64, hi: f64) -> f64 {
        self.eval(lo).min(self.eval(hi))
    }
}

/// Build the canonical profile, checking every profile invariant.
pub fn make_profile(theta0: f64, m: f64, m1: f64, alpha1: f64) -> Result<IgnitionProfile> {
    let finite = [theta0, m, m1, alpha1].iter().all(|v| v.is_finite());
    if !finite || !(theta0 > 0.0 && theta0 < 0.5) {
        return Err(Error::Config(format!("theta0 = {theta0} must lie in (0, 1/2)")));
    }
    if !(m >= 1.0) {
        return Err(Error::Config(format!("lipschitz bound M = {m} must be >= 1")));
    }
    if !(m1 >= 1.0) {
        return Err(Error::Config(format!("m1 = {m1} must be >= 1")));
    }
    if !(alpha1 > 0.0) {
        return Err(Error::Config(format!("alpha1 = {alpha1} must be > 0")));
    }
    // ramp - cap is increasing in u, negative at theta0 and positive at 1.
    let (mut lo, mut hi) = (theta0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if m * (mid - theta0) < alpha1 * (1.0 - mid).powf(m1) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let join = 0.5 * (lo + hi);
    let cap_slope = alpha1 * m1 * (1.0 - join).powf(m1 - 1.0);
    if cap_slope > m * (1.0 + 1e-12) {
        return Err(Error::Construction {
            invariant: "Lipschitz bound M".into(),
            detail: format!("cap slope {cap_slope} at the join u = {join} exceeds M = {m}"),
        });
    }
    if 1.0 - join <= 0.0 || join <= theta0 {
        return Err(Error::Construction {
            invariant: "near-1 lower bound band".into(),
            detail: format!("join u = {join} leaves no cap band"),
        });
    }
    let mut p = IgnitionProfile { theta0, m, m1, alpha1, join, samples: Vec::new() };
    p.samples = (0..=PROFILE_SAMPLES).map(|i| p.eval(i as f64 / PROFILE_SAMPLES as f64)).collect();
    Ok(p)
}

pub fn make_profile_from(spec: &ProfileSpec) -> Result<IgnitionProfile> {
    make_profile(spec.theta0, spec.m, spec.m1, spec.alpha1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical() -> IgnitionProfile {
        make_profile(0.25, 1.0, 2.0, 0.5).unwrap()
    }

    #[test]
    fn vanishes_below_threshold_and_at_one() {
        let p = canonical();
        assert_eq!(p.eval(0.2), 0.0);
        assert_eq!(p.eval(1.0), 0.0);
        assert_eq!(p.eval(0.0), 0.0);
        assert!(p.eval(0.3) > 0.0 && p.eval(0.999) > 0.0);
    }

    #[test]
    fn slope_scan_respects_lipschitz_bound() {
        let p = canonical();
        let n = 10_000;
        let mut worst = 0.0f64;
        for i in 0..n {
            let (a, b) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
            worst = worst.max(((p.eval(b) - p.eval(a)) / (b - a)).abs());
        }
        assert!(worst <= 1.0 + 1e-9, "slope {worst}");
    }

    #[test]
    fn join_of_canonical_profile() {
        let p = canonical();
        // (u - 1/4) = (1 - u)^2 / 2  =>  u^2 - 4u + 3/2 = 0
        let expected = 2.0 - (2.5f64).sqrt();
        assert!((p.join - expected).abs() < 1e-12);
        assert_eq!(p.theta1(), 0.25);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(make_profile(0.6, 1.0, 2.0, 0.5), Err(Error::Config(_))));
        assert!(matches!(make_profile(0.25, 0.5, 2.0, 0.5), Err(Error::Config(_))));
        assert!(matches!(make_profile(0.25, 1.0, 0.5, 0.5), Err(Error::Config(_))));
        assert!(matches!(make_profile(0.25, 1.0, 1.0, 3.0), Err(Error::Construction { .. })));
    }
}
