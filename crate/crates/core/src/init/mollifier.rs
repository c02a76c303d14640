//! Normalized mollification `phi_a = zeta * xi_a / |zeta * xi_a|_1` of the kernel `zeta`.
//!
//! `zeta` is `(1/2 - |x|)_+` in 1D, `ln_-(2|x|)` in 2D and `(|x|^{-1} - 2)_+` in 3D.
//! Its distributional Laplacian is a point mass at the origin plus a uniform layer on
//! the sphere of radius 1/2, so `Δphi_a` is known in closed form. The radial profile is
//! recovered from that density with the radial Green's function, which keeps the
//! tabulation accurate to roundoff.

use std::f64::consts::PI;

use crate::error::{config, Result};
use crate::quad::Rule;

const TABLE_CELLS: usize = 8192;

/// Radial bump `exp(-1 / (1 - (r/a)^2))` on `B_a`.
#[inline]
pub fn xi(r: f64, a: f64) -> f64 {
    let s = r / a;
    if s >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

/// Surface measure of the unit sphere in `R^dim`.
pub fn sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    }
}

pub fn zeta_l1(dim: usize) -> f64 {
    match dim {
        1 => 0.25,
        2 => PI / 8.0,
        _ => PI / 6.0,
    }
}

/// Tabulated radial profile of `phi_{a,R}(x) = R^{-d} phi_a(x / R)`.
#[derive(Clone, Debug)]
pub struct MollifiedBump {
    pub dim: usize,
    pub a: f64,
    pub scale: f64,
    ds: f64,
    phi: Vec<f64>,
    dphi: Vec<f64>,
    rho: Vec<f64>,
    /// `int_0^s phi_a` at the nodes (used for 1D cumulative mass).
    cum: Vec<f64>,
}

pub fn mollified_bump(dim: usize, a: f64, scale: f64) -> Result<MollifiedBump> {
    MollifiedBump::new(dim, a, scale)
}

impl MollifiedBump {
    pub fn new(dim: usize, a: f64, scale: f64) -> Result<Self> {
        if !(a > 0.0 && a < 0.125) {
            return config(format!("mollification radius a = {a} must lie in (0, 1/8)"));
        }
        if !(scale >= 1.0) {
            return config(format!("scale R = {scale} must be >= 1"));
        }
        if !(1..=3).contains(&dim) {
            return config(format!("dim = {dim} must be 1, 2 or 3"));
        }
        let rule = Rule::new(4);
        let fine = Rule::new(48);
        let xi_mass = sphere_area(dim) * fine.composite(0.0, a, 8, |t| xi(t, a) * t.powi(dim as i32 - 1));
        let norm = zeta_l1(dim) * xi_mass;
        let layer = match dim {
            1 => 1.0,
            2 => 2.0,
            _ => 4.0,
        };
        // surface layer on the sphere of radius 1/2, convolved with xi
        let shell = |r: f64| -> f64 {
            if (r - 0.5).abs() >= a {
                return 0.0;
            }
            match dim {
                1 => xi(r - 0.5, a) + xi(r + 0.5, a),
                2 => {
                    // (1/2) int_0^{2 pi} xi(|x - y|) dtheta over the arc inside B_a(x)
                    let c = (r * r + 0.25 - a * a) / r;
                    let tmax = if c <= -1.0 { PI } else { c.min(1.0).acos() };
                    fine.integrate(0.0, tmax, |th| xi((r * r + 0.25 - r * th.cos()).max(0.0).sqrt(), a))
                }
                _ => PI / r * fine.integrate((r - 0.5).abs(), (r + 0.5).min(a), |t| xi(t, a) * t),
            }
        };
        let rho = |r: f64| -> f64 { -sphere_area(dim) * xi(r, a) + layer * shell(r) };
        let kernel = |r: f64| -> f64 {
            match dim {
                1 => r,
                2 => r.ln(),
                _ => -1.0 / r,
            }
        };
        let rmax = 0.5 + a;
        let n = TABLE_CELLS;
        let ds = rmax / n as f64;
        let w = |s: f64| s.powi(dim as i32 - 1);
        let mut inner = vec![0.0; n + 1];
        for i in 0..n {
            let (lo, hi) = (i as f64 * ds, (i + 1) as f64 * ds);
            inner[i + 1] = inner[i] + rule.integrate(lo, hi, |s| w(s) * rho(s));
        }
        let mut outer = vec![0.0; n + 1];
        for i in (0..n).rev() {
            let (lo, hi) = (i as f64 * ds, (i + 1) as f64 * ds);
            outer[i] = outer[i + 1] + rule.integrate(lo, hi, |s| kernel(s) * w(s) * rho(s));
        }
        let mut phi = vec![0.0; n + 1];
        let mut dphi = vec![0.0; n + 1];
        let mut rho_t = vec![0.0; n + 1];
        for i in 0..=n {
            let r = i as f64 * ds;
            let near = if i == 0 { 0.0 } else { kernel(r) * inner[i] };
            phi[i] = (near + outer[i]) / norm;
            dphi[i] = if i == 0 { 0.0 } else { inner[i] / w(r) / norm };
            rho_t[i] = rho(r) / norm;
        }
        phi[n] = 0.0;
        dphi[n] = 0.0;
        let mut cum = vec![0.0; n + 1];
        for i in 0..n {
            cum[i + 1] = cum[i] + ds * 0.5 * (phi[i] + phi[i + 1]) + ds * ds * (dphi[i] - dphi[i + 1]) / 12.0;
        }
        Ok(MollifiedBump { dim, a, scale, ds, phi, dphi, rho: rho_t, cum })
    }

    /// Support radius of `phi_{a,R}`.
    pub fn support(&self) -> f64 {
        (0.5 + self.a) * self.scale
    }

    #[inline]
    fn cell(&self, s: f64) -> Option<(usize, f64)> {
        if s >= 0.5 + self.a {
            return None;
        }
        let x = s / self.ds;
        let i = (x.floor() as usize).min(self.phi.len() - 2);
        Some((i, x - i as f64))
    }

    /// Unscaled profile `phi_a(s)`.
    pub fn profile(&self, s: f64) -> f64 {
        let s = s.abs();
        match self.cell(s) {
            None => 0.0,
            Some((i, t)) => {
                let (t2, t3) = (t * t, t * t * t);
                (2.0 * t3 - 3.0 * t2 + 1.0) * self.phi[i]
                    + (t3 - 2.0 * t2 + t) * self.ds * self.dphi[i]
                    + (-2.0 * t3 + 3.0 * t2) * self.phi[i + 1]
                    + (t3 - t2) * self.ds * self.dphi[i + 1]
            }
        }
    }

    /// Unscaled radial derivative `phi_a'(s)`.
    pub fn profile_derivative(&self, s: f64) -> f64 {
        match self.cell(s.abs()) {
            None => 0.0,
            Some((i, t)) => {
                let t2 = t * t;
                ((6.0 * t2 - 6.0 * t) * self.phi[i] + (-6.0 * t2 + 6.0 * t) * self.phi[i + 1]) / self.ds
                    + (3.0 * t2 - 4.0 * t + 1.0) * self.dphi[i]
                    + (3.0 * t2 - 2.0 * t) * self.dphi[i + 1]
            }
        }
    }

    /// `phi_{a,R}` at physical radius `r`.
    pub fn eval(&self, r: f64) -> f64 {
        self.profile(r / self.scale) / self.scale.powi(self.dim as i32)
    }

    /// Exact Laplacian of `phi_{a,R}` at radius `r` (linear interpolation of the density table).
    pub fn laplacian(&self, r: f64) -> f64 {
        match self.cell(r.abs() / self.scale) {
            None => 0.0,
            Some((i, t)) => {
                (self.rho[i] * (1.0 - t) + self.rho[i + 1] * t) / self.scale.powi(self.dim as i32 + 2)
            }
        }
    }

    /// Mass of `phi_a` in `[0, s]` along a line (1D profiles only).
    fn half_mass(&self, s: f64) -> f64 {
        match self.cell(s) {
            None => self.cum[self.cum.len() - 1],
            Some((i, t)) => {
                let (t2, t3, t4) = (t * t, t * t * t, t * t * t * t);
                self.cum[i]
                    + self.ds * ((0.5 * t4 - t3 + t) * self.phi[i] + (-0.5 * t4 + t3) * self.phi[i + 1])
                    + self.ds
                        * self.ds
                        * ((0.25 * t4 - 2.0 * t3 / 3.0 + 0.5 * t2) * self.dphi[i] + (0.25 * t4 - t3 / 3.0) * self.dphi[i + 1])
            }
        }
    }

    /// Cumulative distribution `int_{-inf}^z phi_{a,R}` of the 1D kernel, exactly 0 and 1 outside the support.
    pub fn cdf_1d(&self, z: f64) -> f64 {
        debug_assert_eq!(self.dim, 1);
        let s = z / self.scale;
        let total = self.cum[self.cum.len() - 1];
        let m = self.half_mass(s.abs()) / total;
        if s >= 0.0 {
            0.5 + 0.5 * m
        } else {
            0.5 - 0.5 * m
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mass(b: &MollifiedBump) -> f64 {
        let rule = Rule::new(16);
        sphere_area(b.dim) * rule.composite(0.0, b.support(), 4096, |r| b.eval(r) * r.powi(b.dim as i32 - 1))
    }

    #[test]
    fn unit_mass_in_every_dimension() {
        for dim in 1..=3 {
            let b = mollified_bump(dim, 0.0625, 3.0).unwrap();
            assert!((mass(&b) - 1.0).abs() < 1e-6, "dim {dim}: mass {}", mass(&b));
        }
    }

    #[test]
    fn vanishes_outside_unit_ball() {
        for dim in 1..=3 {
            let b = mollified_bump(dim, 0.1, 4.0).unwrap();
            for r in [4.0, 4.5, 100.0, 2.4 + 1e-9] {
                assert_eq!(b.eval(r), 0.0);
            }
        }
    }

    #[test]
    fn harmonic_band_matches_zeta() {
        // on a <= |x| <= 1/2 - a the mollified kernel equals zeta / |zeta|_1 times the xi mass ratio
        let b = mollified_bump(2, 0.0625, 1.0).unwrap();
        let r0 = 0.2;
        let ratio = b.profile(r0) / -(2.0 * r0).ln();
        for r in [0.1, 0.15, 0.3, 0.4] {
            assert!((b.profile(r) / -(2.0 * r).ln() - ratio).abs() < 1e-9 * ratio);
        }
    }

    #[test]
    fn rejects_bad_radius() {
        assert!(mollified_bump(2, 0.2, 4.0).is_err());
        assert!(mollified_bump(2, 0.0, 4.0).is_err());
    }

    #[test]
    fn cdf_1d_limits() {
        let b = mollified_bump(1, 0.0625, 10.0).unwrap();
        assert_eq!(b.cdf_1d(-5.7), 0.0);
        assert_eq!(b.cdf_1d(5.7), 1.0);
        assert!((b.cdf_1d(0.0) - 0.5).abs() < 1e-15);
        let rule = Rule::new(16);
        let direct = rule.composite(-b.support(), 1.3, 2048, |z| b.eval(z));
        assert!((b.cdf_1d(1.3) - direct).abs() < 1e-9);
    }
}
