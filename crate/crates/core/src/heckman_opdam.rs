//! Rank-one Heckman–Opdam hypergeometric functions 𝓕_{log ā}(u; N, θ).

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::bessel::{enforce_real, sorted_points};
use crate::contour::{
    default_margin, integrate, loop_integrand, HankelContour, QuadratureResult, Rotation,
};
use crate::error::{Error, Result};
use crate::special::{gamma_ratio, ln_gamma};

#[derive(Debug, Clone, PartialEq)]
pub struct HOQuery {
    points: Vec<f64>,
    pub u: Complex64,
    pub theta: f64,
    pub tol: f64,
}

impl HOQuery {
    pub fn new(points: &[f64], u: Complex64, theta: f64, tol: f64) -> Result<Self> {
        let points = sorted_points(points)?;
        if points[0] <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "points must be positive, got {}",
                points[0]
            )));
        }
        check_mellin_variable(u)?;
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

pub(crate) fn check_mellin_variable(u: Complex64) -> Result<()> {
    if u.re > 0.0 && u.re.is_finite() && u.im.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "Re u must be positive, got u = {u}"
        )))
    }
}

/// Loop around (−∞, log a_max]. Its rays stay inside the strip |Im z| ≤ π,
/// so the copies of the cuts at log aⱼ + 2πik remain outside. They run
/// closer to the cut when Im u is large, since |e^{uz}| grows like
/// e^{|Im u|·|Im z|} along them.
pub(crate) fn log_scale_contour(log_max: f64, u: Complex64, c: f64) -> Result<HankelContour> {
    // the saddle of e^{uz}(1 − a e^{−z})^{−c} sits at log a + log(1 + c/u)
    let margin = default_margin(u).max((1.0 + c / u.norm()).ln());
    let height = if u.im == 0.0 {
        PI
    } else {
        (1.0 / u.im.abs()).clamp(0.25, PI)
    };
    HankelContour::new(log_max, margin, height, margin + 10.0, Rotation::One)
}

/// 𝓕_{log ā}(u; N, θ) = Γ(θN)Γ(u+1)/Γ(u+θN) · (1/2πi)∮ e^{uz} ∏(1 − aⱼe^{−z})^{−θ} dz
/// with the loop enclosing (−∞, log a_N].
pub fn ho_rank_one(q: &HOQuery) -> Result<QuadratureResult> {
    let u = q.u;
    let c = q.theta * q.n() as f64;
    let log_max = q.points[q.n() - 1].ln();
    let contour = log_scale_contour(log_max, u, c)?;
    let theta = q.theta;
    let points = &q.points;
    let log_kernel = |z: Complex64| {
        let e = (-z).exp();
        let s: Complex64 = points.iter().map(|&a| (1.0 - a * e).ln()).sum();
        -theta * s
    };
    let tip = contour.to_plane(Complex64::new(contour.stem_x, 0.0));
    let shift = (u * tip + log_kernel(tip)).re;
    let prefactor = (ln_gamma(Complex64::new(c, 0.0)) + shift).exp() * gamma_ratio(u + 1.0, u + c);
    let f = loop_integrand(u, shift, log_kernel, c < 1.0);
    let raw = integrate(f, &contour, q.tol / prefactor.norm().max(f64::MIN_POSITIVE))?;
    let result = raw.scaled(prefactor);
    Ok(if u.im == 0.0 {
        enforce_real(result, q.tol, "heckman-opdam")
    } else {
        result
    })
}

/// Residue form at θ = 1: Γ(N)Γ(u+1)/Γ(u+N)·Σⱼ aⱼ^u ∏_{k≠j}(1 − a_k/aⱼ)^{−1}.
pub fn ho_theta_one(points: &[f64], u: Complex64) -> Result<Complex64> {
    let points = sorted_points(points)?;
    if points[0] <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "points must be positive, got {}",
            points[0]
        )));
    }
    check_mellin_variable(u)?;
    if points.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::DegenerateSpectrum(
            "θ = 1 residue form needs distinct points".into(),
        ));
    }
    let n = points.len() as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for (j, &aj) in points.iter().enumerate() {
        let denom: f64 = points
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != j)
            .map(|(_, &ak)| 1.0 - ak / aj)
            .product();
        sum += (u * aj.ln()).exp() / denom;
    }
    Ok(sum * ln_gamma(Complex64::new(n, 0.0)).exp() * gamma_ratio(u + 1.0, u + n))
}
