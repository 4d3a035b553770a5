use num_complex::Complex64;
use std::f64::consts::PI;

use super::{build_contour, integrate, HankelContour, Rotation};
use crate::error::{Error, Result};
use crate::special::{gamma_ratio, ln_gamma};

/// Right-hand side of the Hankel representation of e^{ux}:
/// uΓ(c)·(1/2πi)∮ e^{uz} (u(z − x))^{−c} dz over the loop rotated by sgn(u).
pub fn gamma_identity_check(c: f64, u: Complex64, x: f64, tol: f64) -> Result<Complex64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "c must be positive, got {c}"
        )));
    }
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("x must be finite, got {x}")));
    }
    let contour = build_contour(x, u, x.abs() + 21.0)?;
    let r = contour.rotation;
    // u(z − x) = v·ζ with ζ = (z − x)/r and Re v > 0; the principal powers of
    // v and ζ are continuous along the rotated loop.
    let v = u * r.as_complex();
    let ln_v = v.ln();
    let prefactor = u * ln_gamma(Complex64::new(c, 0.0)).exp() * (-c * ln_v).exp();
    let f = |z: Complex64| (u * z - c * r.unrotate(z - x).ln()).exp();
    let q = integrate(f, &contour, tol / prefactor.norm().max(f64::MIN_POSITIVE))?;
    Ok(q.value * prefactor)
}

/// Right-hand side of the Hankel representation of x^u:
/// Γ(c)Γ(u+1)/Γ(u+c)·(1/2πi)∮ e^{uz} (1 − x e^{−z})^{−c} dz around (−∞, log x].
pub fn beta_identity_check(c: f64, u: Complex64, x: f64, tol: f64) -> Result<Complex64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "c must be positive, got {c}"
        )));
    }
    if !(u.re > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Re u must be positive, got u = {u}"
        )));
    }
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "x must be positive, got {x}"
        )));
    }
    let log_x = x.ln();
    let base = build_contour(log_x, u, log_x.abs() + 21.0)?;
    // The cut repeats at every log x + 2πik; rays at height ≤ π keep the
    // neighbouring copies outside the loop.
    let contour = HankelContour::new(
        0.0,
        base.stem_x,
        base.half_height.min(PI),
        base.tail_length,
        Rotation::One,
    )?;
    let prefactor = ln_gamma(Complex64::new(c, 0.0)).exp() * gamma_ratio(u + 1.0, u + c);
    let f = |z: Complex64| (u * z - c * (1.0 - x * (-z).exp()).ln()).exp();
    let q = integrate(f, &contour, tol / prefactor.norm().max(f64::MIN_POSITIVE))?;
    Ok(q.value * prefactor)
}
