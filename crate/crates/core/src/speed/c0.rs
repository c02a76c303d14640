use crate::error::{Error, Result};
use crate::medium::IgnitionProfile;

/// Phase-plane steps per unit of `u`.
const SHOOT_STEPS: usize = 200_000;
const BISECTION_TOL: f64 = 1e-10;

/// Outcome of one shot: `Some(P(1))` if `P = -U'` stays positive up to `u = 1`, `None` if it dies first.
fn shoot(f: &dyn Fn(f64) -> f64, theta0: f64, c: f64) -> Option<f64> {
    // below the ignition threshold U'' + cU' = 0 forces U = A e^{-c x}, so P = cU there
    let mut u = theta0;
    let mut p = c * theta0;
    let du = (1.0 - theta0) / SHOOT_STEPS as f64;
    let rhs = |u: f64, p: f64| c - f(u) / p;
    for _ in 0..SHOOT_STEPS {
        let k1 = rhs(u, p);
        let p2 = p + 0.5 * du * k1;
        if p2 <= 0.0 {
            return None;
        }
        let k2 = rhs(u + 0.5 * du, p2);
        let p3 = p + 0.5 * du * k2;
        if p3 <= 0.0 {
            return None;
        }
        let k3 = rhs(u + 0.5 * du, p3);
        let p4 = p + du * k3;
        if p4 <= 0.0 {
            return None;
        }
        let k4 = rhs(u + du, p4);
        p += du / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        u += du;
        if p <= 0.0 {
            return None;
        }
    }
    Some(p)
}

/// Front speed of `U'' + cU' + f(U) = 0`, `U(-inf) = 1`, `U(inf) = 0`, for an ignition
/// nonlinearity vanishing on `[0, theta0]` with Lipschitz constant `m`.
pub fn compute_c0_with(f: impl Fn(f64) -> f64, theta0: f64, m: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, 2.0 * m.sqrt());
    if shoot(&f, theta0, hi).is_none() {
        return Err(Error::Numeric(format!("no front speed below 2 sqrt(M) = {hi}")));
    }
    if shoot(&f, theta0, 1e-9).is_some() {
        return Err(Error::Numeric("shooting succeeds at c = 0; profile carries no reaction".into()));
    }
    while hi - lo > BISECTION_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if shoot(&f, theta0, mid).is_some() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Ignition front speed `c0` of the profile.
pub fn compute_c0(profile: &IgnitionProfile) -> Result<f64> {
    compute_c0_with(|u| profile.eval(u), profile.theta0, profile.m)
}
