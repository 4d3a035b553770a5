//! Dirichlet processes over discrete base measures: random-mean sampling and
//! the contour formulas for the transforms of the random-mean law ρ^(c).

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::Serialize;

use crate::bessel::enforce_real;
use crate::contour::{
    default_margin, integrate, integrate_line, loop_integrand, HankelContour, LineContour,
    QuadratureResult, Rotation,
};
use crate::error::{Error, Result};
use crate::heckman_opdam::{check_mellin_variable, log_scale_contour};
use crate::measures::DiscreteMeasure;
use crate::special::{gamma_ratio, ln_gamma};

#[derive(Debug, Clone, PartialEq)]
pub struct DPConfig {
    pub base: DiscreteMeasure,
    pub concentration: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub shards: usize,
}

impl DPConfig {
    pub fn new(
        base: DiscreteMeasure,
        concentration: f64,
        n_samples: usize,
        seed: u64,
        shards: usize,
    ) -> Result<Self> {
        let cfg = Self {
            base,
            concentration,
            n_samples,
            seed,
            shards,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.concentration > 0.0 && self.concentration.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "c must be positive, got {}",
                self.concentration
            )));
        }
        if self.n_samples == 0 {
            return Err(Error::InvalidArgument("need at least one sample".into()));
        }
        if self.shards == 0 {
            return Err(Error::InvalidArgument("need at least one shard".into()));
        }
        Ok(())
    }
}

/// Monte Carlo draws of the random mean ∫x D_{cρ}(dx).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalSample {
    pub values: Vec<f64>,
    pub seed_used: u64,
    pub shards_used: usize,
}

impl EmpiricalSample {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sample mean and its standard error of φ(X).
    pub fn mean_of<F: Fn(f64) -> f64>(&self, phi: F) -> (f64, f64) {
        let n = self.values.len() as f64;
        let vals: Vec<f64> = self.values.iter().map(|&x| phi(x)).collect();
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        (mean, (var / n).sqrt())
    }

    /// Empirical E[e^{uX}] and the standard error of its complex modulus,
    /// √(E|e^{uX} − mean|² / n).
    pub fn transform(&self, u: Complex64) -> (Complex64, f64) {
        let n = self.values.len() as f64;
        let vals: Vec<Complex64> = self.values.iter().map(|&x| (u * x).exp()).collect();
        let mean = vals.iter().sum::<Complex64>() / n;
        let var = vals.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (n - 1.0).max(1.0);
        (mean, (var / n).sqrt())
    }
}

/// One draw from Dir(α) by normalised Gamma variates, computed in log space.
/// Shapes below one use Gamma(a) = Gamma(a + 1)·U^{1/a}, which keeps tiny
/// shapes from underflowing to zero.
pub fn sample_dirichlet_weights<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if alpha.is_empty() {
        return Err(Error::InvalidArgument("α must be nonempty".into()));
    }
    if let Some(bad) = alpha.iter().find(|&&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "Dirichlet parameters must be positive, got {bad}"
        )));
    }
    let mut logs = Vec::with_capacity(alpha.len());
    for &a in alpha {
        let boosted = if a < 1.0 { a + 1.0 } else { a };
        let g: f64 = Gamma::new(boosted, 1.0)
            .map_err(|e| Error::InvalidArgument(format!("gamma shape {boosted}: {e}")))?
            .sample(rng);
        let mut l = g.ln();
        if a < 1.0 {
            let u: f64 = rng.gen::<f64>();
            // gen::<f64>() lies in [0, 1); map to (0, 1]
            l += (1.0 - u).ln() / a;
        }
        logs.push(l);
    }
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    Ok(w)
}

fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Draws n_samples random means Σ xⱼσⱼ with σ ~ Dir(c·w).
///
/// Sample j always comes from the ChaCha8 stream j of the seed, so the
/// multiset of values depends only on the seed. Shard s handles indices
/// s, s + S, s + 2S, ... and the output lists shard 0 first, then shard 1
/// and so on.
pub fn random_mean_samples(cfg: &DPConfig) -> Result<EmpiricalSample> {
    cfg.validate()?;
    let alpha: Vec<f64> = cfg
        .base
        .weights()
        .iter()
        .map(|w| cfg.concentration * w)
        .collect();
    let atoms = cfg.base.atoms();
    let (lo, hi) = (cfg.base.min_atom(), cfg.base.max_atom());
    let shards = cfg.shards.min(cfg.n_samples);
    let per_shard: Vec<Vec<f64>> = (0..shards)
        .into_par_iter()
        .map(|s| {
            (s..cfg.n_samples)
                .step_by(shards)
                .map(|j| {
                    let mut rng = sample_rng(cfg.seed, j);
                    let sigma = sample_dirichlet_weights(&alpha, &mut rng)?;
                    let x: f64 = atoms.iter().zip(&sigma).map(|(a, s)| a * s).sum();
                    Ok(x.clamp(lo, hi))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EmpiricalSample {
        values: per_shard.concat(),
        seed_used: cfg.seed,
        shards_used: cfg.shards,
    })
}

/// Which contour `fourier_rho_c_with` integrates over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TransformContour {
    /// Hankel loop rotated by sgn(u).
    Hankel,
    /// The line ℝ − iδ·sgn(t); only for u = it.
    Line { delta: f64 },
}

fn check_common(c: f64, tol: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "c must be positive, got {c}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    Ok(())
}

/// ∫e^{ux} ρ^(c)(dx) = Γ(c)/u^{c−1} · (1/2πi)∮ exp(uz − c·g_ρ(z)) dz.
pub fn fourier_rho_c(
    rho: &DiscreteMeasure,
    c: f64,
    u: Complex64,
    tol: f64,
) -> Result<QuadratureResult> {
    fourier_rho_c_with(rho, c, u, tol, TransformContour::Hankel)
}

/// `fourier_rho_c` on a chosen contour.
///
/// g_ρ is taken with every logarithm cut along aⱼ + r·(−∞, 0], r = sgn(u),
/// so exp(−c·g_ρ) is continuous on the rotated loop; the matching prefactor
/// is Γ(c)·r^{c−1}·(ur)^{1−c} with principal powers.
pub fn fourier_rho_c_with(
    rho: &DiscreteMeasure,
    c: f64,
    u: Complex64,
    tol: f64,
    contour: TransformContour,
) -> Result<QuadratureResult> {
    check_common(c, tol)?;
    let rotation = Rotation::of(u)?;
    let result = match contour {
        TransformContour::Hankel => {
            // ρ^(c) of the measure scaled by |u| at u/|u| gives the same
            // value; work at unit modulus.
            let scale = u.norm();
            let scaled_atoms: Vec<f64> = rho.atoms().iter().map(|a| a * scale).collect();
            let scaled = DiscreteMeasure::new(&scaled_atoms, Some(rho.weights()))?;
            let u1 = u / scale;
            let loop_ = HankelContour::enclosing(
                scaled.min_atom(),
                scaled.max_atom(),
                u1,
                default_margin(u1).max(c),
            )?;
            transform_on(
                &scaled,
                c,
                u1,
                rotation,
                tol,
                |f, tol| integrate(f, &loop_, tol),
                loop_.to_plane(Complex64::new(loop_.stem_x, 0.0)),
                c < 1.0,
            )?
        }
        TransformContour::Line { delta } => {
            if u.re != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "line contour needs Re u = 0, got u = {u}"
                )));
            }
            let center = 0.5 * (rho.min_atom() + rho.max_atom());
            let line = LineContour::new(
                center,
                delta,
                u.im,
                0.5 * (rho.max_atom() - rho.min_atom()) + 20.0,
            )?;
            let anchor = Complex64::new(center, line.imag_offset());
            transform_on(
                rho,
                c,
                u,
                rotation,
                tol,
                |f, tol| integrate_line(f, &line, tol),
                anchor,
                false,
            )?
        }
    };
    Ok(if u.im == 0.0 {
        enforce_real(result, tol, "fourier transform")
    } else {
        result
    })
}

#[allow(clippy::too_many_arguments)]
fn transform_on<Q>(
    rho: &DiscreteMeasure,
    c: f64,
    u: Complex64,
    rotation: Rotation,
    tol: f64,
    quad: Q,
    anchor: Complex64,
    subtract_entire: bool,
) -> Result<QuadratureResult>
where
    Q: FnOnce(&dyn Fn(Complex64) -> Complex64, f64) -> Result<QuadratureResult>,
{
    let log_kernel = |z: Complex64| -> Complex64 {
        match rho.g_function_rotated(z, rotation) {
            Ok(g) => -c * g,
            Err(_) => Complex64::new(f64::NAN, f64::NAN),
        }
    };
    let shift = (u * anchor + log_kernel(anchor)).re;
    let r = rotation.as_complex();
    let log_prefactor = ln_gamma(Complex64::new(c, 0.0))
        + (c - 1.0) * rotation.log_unit()
        + (1.0 - c) * (u * r).ln()
        + shift;
    let prefactor = log_prefactor.exp();
    let f = loop_integrand(u, shift, log_kernel, subtract_entire);
    let raw = quad(&f, tol / prefactor.norm().max(f64::MIN_POSITIVE))?;
    Ok(raw.scaled(prefactor))
}

/// ∫x^u ρ^(c)(dx) = Γ(c)Γ(u+1)/Γ(u+c) · (1/2πi)∮ exp(uz − c∫log(1 − s e^{−z}) ρ(ds)) dz.
pub fn mellin_rho_c(
    rho: &DiscreteMeasure,
    c: f64,
    u: Complex64,
    tol: f64,
) -> Result<QuadratureResult> {
    check_common(c, tol)?;
    check_mellin_variable(u)?;
    if rho.min_atom() <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "atoms must be positive, got {}",
            rho.min_atom()
        )));
    }
    let contour = log_scale_contour(rho.max_atom().ln(), u, c)?;
    let log_kernel = |z: Complex64| {
        let e = (-z).exp();
        let s: Complex64 = rho.iter().map(|(a, w)| w * (1.0 - a * e).ln()).sum();
        -c * s
    };
    let tip = contour.to_plane(Complex64::new(contour.stem_x, 0.0));
    let shift = (u * tip + log_kernel(tip)).re;
    let prefactor = (ln_gamma(Complex64::new(c, 0.0)) + shift).exp() * gamma_ratio(u + 1.0, u + c);
    let f = loop_integrand(u, shift, log_kernel, c < 1.0);
    let raw = integrate(f, &contour, tol / prefactor.norm().max(f64::MIN_POSITIVE))?;
    let result = raw.scaled(prefactor);
    Ok(if u.im == 0.0 {
        enforce_real(result, tol, "mellin transform")
    } else {
        result
    })
}
