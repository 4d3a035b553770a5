//! Complex log-Gamma by the Lanczos approximation (g = 7, nine terms),
//! with reflection for the left half-plane.

use num_complex::Complex64;
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(z) for complex z away from the poles. The imaginary part is only
/// determined modulo 2π; use it through `exp` or through differences.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // Γ(z)Γ(1−z) = π / sin(πz)
        let s = (Complex64::from(PI) * z).sin();
        return Complex64::from(PI.ln()) - s.ln() - ln_gamma(Complex64::from(1.0) - z);
    }
    let z = z - 1.0;
    let mut acc = Complex64::from(LANCZOS_COEF[0]);
    for (k, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    Complex64::from(0.5 * (2.0 * PI).ln()) + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Γ(x) for real x > 0.
pub fn gamma(x: f64) -> f64 {
    ln_gamma(Complex64::from(x)).re.exp()
}

/// ln Γ(x) for real x > 0.
pub fn ln_gamma_real(x: f64) -> f64 {
    ln_gamma(Complex64::from(x)).re
}

/// Γ(a)/Γ(b) for complex arguments, via log-Gamma.
pub fn gamma_ratio(a: Complex64, b: Complex64) -> Complex64 {
    (ln_gamma(a) - ln_gamma(b)).exp()
}

/// e^w − 1 without cancellation for small |w|.
pub fn expm1(w: Complex64) -> Complex64 {
    let (x, y) = (w.re, w.im);
    let half = (0.5 * y).sin();
    Complex64::new(x.exp_m1() * y.cos() - 2.0 * half * half, x.exp() * y.sin())
}
