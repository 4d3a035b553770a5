//! Rank-one multivariate Bessel functions 𝓑_ā(u; N, θ).

use num_complex::Complex64;

use crate::contour::{
    default_margin, integrate, loop_integrand, HankelContour, QuadratureResult, Rotation,
};
use crate::error::{Error, Result};
use crate::special::ln_gamma;

#[derive(Debug, Clone, PartialEq)]
pub struct BesselQuery {
    points: Vec<f64>,
    pub u: Complex64,
    pub theta: f64,
    pub tol: f64,
}

impl BesselQuery {
    /// Atoms may repeat; they are sorted on construction.
    pub fn new(points: &[f64], u: Complex64, theta: f64, tol: f64) -> Result<Self> {
        let points = sorted_points(points)?;
        Rotation::of(u)?;
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "θ must be positive, got {theta}"
            )));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {tol}"
            )));
        }
        Ok(Self {
            points,
            u,
            theta,
            tol,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }
}

pub(crate) fn sorted_points(points: &[f64]) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(Error::InvalidMeasure("need at least one point".into()));
    }
    if let Some(bad) = points.iter().find(|a| !a.is_finite()) {
        return Err(Error::InvalidMeasure(format!("point {bad} is not finite")));
    }
    let mut points = points.to_vec();
    points.sort_by(f64::total_cmp);
    Ok(points)
}

/// Drops a negligible imaginary part of a value that must be real.
pub(crate) fn enforce_real(mut r: QuadratureResult, tol: f64, what: &str) -> QuadratureResult {
    if r.value.im.abs() <= 10.0 * tol {
        r.value.im = 0.0;
    } else {
        log::warn!(
            "{what}: imaginary part {:.3e} of a real-input value exceeds 10·tol",
            r.value.im
        );
    }
    r
}

/// 𝓑_ā(u; N, θ) = Γ(θN)/u^{θN−1} · (1/2πi)∮ e^{uz} ∏(z − aⱼ)^{−θ} dz over the
/// loop rotated by sgn(u).
///
/// With r = sgn(u) and v = u·r (so Re v > 0) the integrand is evaluated as
/// e^{uz} ∏((z − aⱼ)/r)^{−θ} with principal powers, which is continuous on
/// the rotated loop, and the prefactor becomes Γ(θN)·v^{1−θN}/r.
pub fn bessel_rank_one(q: &BesselQuery) -> Result<QuadratureResult> {
    // 𝓑_ā(u) = 𝓑_{|u|ā}(u/|u|): work at unit |u| so the loop geometry and
    // the prefactor stay of order one however small or large u is.
    let scale = q.u.norm();
    let u = q.u / scale;
    let points: Vec<f64> = q.points.iter().map(|a| a * scale).collect();
    let rotation = Rotation::of(u)?;
    let r = rotation.as_complex();
    let c = q.theta * q.n() as f64;
    let (lo, hi) = (points[0], points[points.len() - 1]);
    // Clearance c/|u| puts the stem near the saddle of e^{uz}·dist^{−c}, which
    // avoids cancellation when c is large.
    let contour = HankelContour::enclosing(lo, hi, u, default_margin(u).max(c))?;

    let theta = q.theta;
    let log_kernel = |z: Complex64| {
        let s: Complex64 = points.iter().map(|&a| rotation.unrotate(z - a).ln()).sum();
        -theta * s
    };
    // Rescale so the integrand is of order one at the tip of the stem.
    let tip = contour.to_plane(Complex64::new(contour.stem_x, 0.0));
    let shift = (u * tip + log_kernel(tip)).re;
    let v = u * r;
    let log_prefactor = ln_gamma(Complex64::new(c, 0.0)) + (1.0 - c) * v.ln() + shift;
    let prefactor = log_prefactor.exp() / r;
    let f = loop_integrand(u, shift, log_kernel, c < 1.0);
    let raw = integrate(f, &contour, q.tol / prefactor.norm().max(f64::MIN_POSITIVE))?;
    let result = raw.scaled(prefactor);
    Ok(if q.u.im == 0.0 {
        enforce_real(result, q.tol, "bessel")
    } else {
        result
    })
}

/// Residue form at θ = 1: Γ(N)·u^{1−N}·Σⱼ e^{uaⱼ}/∏_{k≠j}(aⱼ − a_k).
pub fn bessel_theta_one(points: &[f64], u: Complex64) -> Result<Complex64> {
    let points = sorted_points(points)?;
    Rotation::of(u)?;
    if points.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::DegenerateSpectrum(
            "θ = 1 residue form needs distinct points".into(),
        ));
    }
    let n = points.len();
    let mut sum = Complex64::new(0.0, 0.0);
    for (j, &aj) in points.iter().enumerate() {
        let denom: f64 = points
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != j)
            .map(|(_, &ak)| aj - ak)
            .product();
        sum += (u * aj).exp() / denom;
    }
    let ln_gamma_n = ln_gamma(Complex64::new(n as f64, 0.0));
    Ok(sum * (ln_gamma_n + (1.0 - n as f64) * u.ln()).exp())
}
