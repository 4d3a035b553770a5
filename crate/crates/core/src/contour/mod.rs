//! Hankel loops, the four-way contour rotation rule, adaptive quadrature
//! along piecewise-linear contours and the two scalar contour identities
//! that serve as quadrature self-tests.

mod identities;
mod quadrature;

pub use identities::{beta_identity_check, gamma_identity_check};
pub use quadrature::{integrate, integrate_line, integrate_with, QuadOptions, QuadratureResult};

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

/// Rotation applied to a Hankel loop so that e^{uz} decays along its rays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Rotation {
    /// Re u > 0.
    One,
    /// Re u < 0.
    MinusOne,
    /// Re u = 0, Im u > 0.
    MinusI,
    /// Re u = 0, Im u < 0.
    PlusI,
}

impl Rotation {
    /// The rotation rule for a nonzero u.
    pub fn of(u: Complex64) -> Result<Self> {
        if !(u.re.is_finite() && u.im.is_finite()) {
            return Err(Error::InvalidArgument(format!("u = {u} is not finite")));
        }
        if u.re > 0.0 {
            Ok(Rotation::One)
        } else if u.re < 0.0 {
            Ok(Rotation::MinusOne)
        } else if u.im > 0.0 {
            Ok(Rotation::MinusI)
        } else if u.im < 0.0 {
            Ok(Rotation::PlusI)
        } else {
            Err(Error::InvalidArgument("u must be nonzero".into()))
        }
    }

    pub fn as_complex(self) -> Complex64 {
        match self {
            Rotation::One => Complex64::new(1.0, 0.0),
            Rotation::MinusOne => Complex64::new(-1.0, 0.0),
            Rotation::MinusI => Complex64::new(0.0, -1.0),
            Rotation::PlusI => Complex64::new(0.0, 1.0),
        }
    }

    pub fn is_real(self) -> bool {
        matches!(self, Rotation::One | Rotation::MinusOne)
    }

    /// Principal logarithm of the rotation itself.
    pub fn log_unit(self) -> Complex64 {
        match self {
            Rotation::One => Complex64::new(0.0, 0.0),
            Rotation::MinusOne => Complex64::new(0.0, PI),
            Rotation::MinusI => Complex64::new(0.0, -FRAC_PI_2),
            Rotation::PlusI => Complex64::new(0.0, FRAC_PI_2),
        }
    }

    /// w / r, exact for the four unit rotations.
    pub fn unrotate(self, w: Complex64) -> Complex64 {
        match self {
            Rotation::One => w,
            Rotation::MinusOne => -w,
            Rotation::MinusI => Complex64::new(-w.im, w.re),
            Rotation::PlusI => Complex64::new(w.im, -w.re),
        }
    }

    /// Logarithm with its cut along r·(−∞, 0]: Log(w / r) + Log r.
    /// Coincides with the principal branch when r = 1.
    pub fn log(self, w: Complex64) -> Complex64 {
        self.unrotate(w).ln() + self.log_unit()
    }

    /// r^p = exp(p Log r).
    pub fn powf(self, p: f64) -> Complex64 {
        (self.log_unit() * p).exp()
    }
}

/// sgn(u) as a rotation value.
pub fn sgn_rotation(u: Complex64) -> Result<Rotation> {
    Rotation::of(u)
}

/// e^{uz − shift}·K(z) for K = exp(log_kernel), or e^{uz − shift}·(K(z) − 1)
/// when `subtract_entire` is set. The entire term e^{uz} integrates to zero
/// around a Hankel loop, and dropping it avoids the cancellation that costs
/// a factor of about 1/c in accuracy when the kernel exponent c is small.
pub(crate) fn loop_integrand<K>(
    u: Complex64,
    shift: f64,
    log_kernel: K,
    subtract_entire: bool,
) -> impl Fn(Complex64) -> Complex64
where
    K: Fn(Complex64) -> Complex64,
{
    move |z| {
        let k = log_kernel(z);
        if subtract_entire {
            (u * z - shift).exp() * crate::special::expm1(k)
        } else {
            (u * z + k - shift).exp()
        }
    }
}

/// Square-shouldered Hankel loop z = center + r·ζ, where ζ runs from
/// −T − iH to X − iH, up to X + iH and back out to −T + iH
/// (counter-clockwise around the half-strip it encloses).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HankelContour {
    pub center: f64,
    /// X, abscissa of the stem in local coordinates.
    pub stem_x: f64,
    /// H, distance of the rays from the local real axis.
    pub half_height: f64,
    /// T, initial extent of the rays towards −∞ (extended when needed).
    pub tail_length: f64,
    pub rotation: Rotation,
}

/// Default clearance between the contour and the enclosed atoms.
pub fn default_margin(u: Complex64) -> f64 {
    (2.0 / u.norm()).min(1.0)
}

impl HankelContour {
    pub fn new(
        center: f64,
        stem_x: f64,
        half_height: f64,
        tail_length: f64,
        rotation: Rotation,
    ) -> Result<Self> {
        if !(half_height > 0.0 && half_height.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "half height must be positive, got {half_height}"
            )));
        }
        if !(tail_length > stem_x && tail_length.is_finite() && center.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tail length {tail_length} must exceed stem abscissa {stem_x}"
            )));
        }
        Ok(Self {
            center,
            stem_x,
            half_height,
            tail_length,
            rotation,
        })
    }

    /// Loop enclosing the real segment [lo, hi] after rotation by sgn(u),
    /// keeping `margin` of clearance on every side.
    pub fn enclosing(lo: f64, hi: f64, u: Complex64, margin: f64) -> Result<Self> {
        if !(lo <= hi) || !(margin > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "bad hull [{lo}, {hi}] / margin {margin}"
            )));
        }
        let rotation = Rotation::of(u)?;
        let center = 0.5 * (lo + hi);
        let half_width = 0.5 * (hi - lo);
        let (stem_x, half_height) = if rotation.is_real() {
            (half_width + margin, margin)
        } else {
            (margin, half_width + margin)
        };
        Self::new(center, stem_x, half_height, stem_x + 10.0, rotation)
    }

    /// z = center + r·ζ.
    pub fn to_plane(&self, local: Complex64) -> Complex64 {
        self.rotation.as_complex() * local + self.center
    }

    /// Corners of the loop in the z-plane, in traversal order: far end of
    /// the incoming ray, the two stem ends, far end of the outgoing ray.
    pub fn vertices(&self) -> [Complex64; 4] {
        let (x, h, t) = (self.stem_x, self.half_height, self.tail_length);
        [
            self.to_plane(Complex64::new(-t, -h)),
            self.to_plane(Complex64::new(x, -h)),
            self.to_plane(Complex64::new(x, h)),
            self.to_plane(Complex64::new(-t, h)),
        ]
    }
}

/// Loop for the Hankel identities: stem at M = max(|cut_end| + 1, 1), rays at
/// ±iM, rotated by sgn(u); encloses (−∞, cut_end] before rotation.
pub fn build_contour(cut_end: f64, u: Complex64, tail_length: f64) -> Result<HankelContour> {
    let rotation = Rotation::of(u)?;
    if !(tail_length > cut_end.abs() + 1.0) {
        return Err(Error::InvalidArgument(format!(
            "tail length {tail_length} must exceed |cut_end| + 1 = {}",
            cut_end.abs() + 1.0
        )));
    }
    let m = (cut_end.abs() + 1.0).max(1.0);
    HankelContour::new(0.0, m, m, tail_length, rotation)
}

/// The horizontal line ℝ − iδ·sgn(t), usable in place of the rotated loop
/// when u = it. It is traversed left to right for t > 0 and right to left
/// for t < 0, matching the orientation of the loop it replaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineContour {
    pub center: f64,
    pub delta: f64,
    /// t in u = it.
    pub frequency: f64,
    /// Half-length of the directly integrated window (extended when needed).
    pub tail_length: f64,
}

impl LineContour {
    pub fn new(center: f64, delta: f64, frequency: f64, tail_length: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "δ must be positive, got {delta}"
            )));
        }
        if frequency == 0.0 || !frequency.is_finite() {
            return Err(Error::InvalidArgument(
                "line contour needs u = it with t ≠ 0".into(),
            ));
        }
        if !(tail_length > 0.0) {
            return Err(Error::InvalidArgument(
                "tail length must be positive".into(),
            ));
        }
        Ok(Self {
            center,
            delta,
            frequency,
            tail_length,
        })
    }

    pub fn imag_offset(&self) -> f64 {
        -self.delta * self.frequency.signum()
    }

    pub fn orientation(&self) -> f64 {
        self.frequency.signum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rotation_rule() {
        assert_eq!(sgn_rotation(c(2.0, 0.0)).unwrap(), Rotation::One);
        assert_eq!(sgn_rotation(c(0.0, 3.0)).unwrap(), Rotation::MinusI);
        assert_eq!(sgn_rotation(c(-1.0, -1.0)).unwrap(), Rotation::MinusOne);
        assert_eq!(sgn_rotation(c(0.0, -0.5)).unwrap(), Rotation::PlusI);
        assert_eq!(sgn_rotation(c(1e-300, -5.0)).unwrap(), Rotation::One);
        assert!(matches!(
            sgn_rotation(c(0.0, 0.0)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn rotated_log_cut_direction() {
        // exp(log_r(w)) == w for every rotation, and the imaginary part stays
        // within (arg r − π, arg r + π]
        for r in [
            Rotation::One,
            Rotation::MinusOne,
            Rotation::MinusI,
            Rotation::PlusI,
        ] {
            for w in [c(1.0, 0.5), c(-2.0, 0.1), c(-2.0, -0.1), c(0.3, -4.0)] {
                let l = r.log(w);
                assert!((l.exp() - w).norm() < 1e-14);
                let centre = r.log_unit().im;
                assert!(l.im > centre - PI - 1e-15 && l.im <= centre + PI + 1e-15);
            }
        }
        // across the negative real axis the rotated branches (other than r = 1) are continuous
        let above = Rotation::MinusI.log(c(-2.0, 1e-12));
        let below = Rotation::MinusI.log(c(-2.0, -1e-12));
        assert!((above - below).norm() < 1e-9);
    }

    #[test]
    fn build_contour_geometry() {
        let k = build_contour(1.0, c(1.0, 0.0), 50.0).unwrap();
        assert_eq!(
            (k.stem_x, k.half_height, k.rotation),
            (2.0, 2.0, Rotation::One)
        );
        let v = k.vertices();
        assert_eq!(v[1], c(2.0, -2.0));
        assert_eq!(v[2], c(2.0, 2.0));
        assert_eq!(v[0], c(-50.0, -2.0));

        // u = i: same loop multiplied by −i, so the rays become vertical
        let k = build_contour(1.0, c(0.0, 1.0), 50.0).unwrap();
        assert_eq!(k.rotation, Rotation::MinusI);
        let v = k.vertices();
        assert!((v[0] - c(-2.0, 50.0)).norm() < 1e-14);
        assert!((v[3] - c(2.0, 50.0)).norm() < 1e-14);
        assert_eq!(v[0].re, v[1].re);

        // u = −1 opens towards +∞
        let k = build_contour(0.0, c(-1.0, 0.0), 50.0).unwrap();
        assert_eq!(k.rotation, Rotation::MinusOne);
        assert!(k.vertices()[0].re > 0.0);

        assert!(build_contour(0.0, c(0.0, 0.0), 50.0).is_err());
        assert!(build_contour(3.0, c(1.0, 0.0), 3.5).is_err());
    }

    #[test]
    fn enclosing_loop_clears_the_hull() {
        for u in [c(1.0, 0.0), c(-1.0, 2.0), c(0.0, 3.0), c(0.0, -3.0)] {
            let k = HankelContour::enclosing(-2.0, 5.0, u, 0.5).unwrap();
            let v = k.vertices();
            // stem endpoints and the ray lines stay at distance ≥ margin from [−2, 5]
            for z in &v[1..3] {
                let dx = if z.re < -2.0 {
                    -2.0 - z.re
                } else if z.re > 5.0 {
                    z.re - 5.0
                } else {
                    0.0
                };
                assert!((dx * dx + z.im * z.im).sqrt() >= 0.5 - 1e-12);
            }
        }
    }
}
