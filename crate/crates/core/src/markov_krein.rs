//! Markov–Krein correspondence checks, the moment recursion between ρ and
//! ρ^(c), c-cumulants and the additive positivity probe.

use num_complex::Complex64;
use serde::Serialize;

use crate::dirichlet::EmpiricalSample;
use crate::error::{Error, Result};
use crate::measures::{DiscreteMeasure, MomentVector};

/// Highest moment order the recursions accept.
pub const MAX_ORDER: usize = 24;
/// Orders above this trigger a conditioning warning in `mk_moments`.
pub const WARN_ORDER: usize = 20;
/// Orders above this mark the probe's inversion as ill-conditioned.
pub const PROBE_WARN_ORDER: usize = 16;
/// A Hankel eigenvalue below this is reported as a candidate counterexample.
pub const COUNTEREXAMPLE_THRESHOLD: f64 = -1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MKPoint {
    pub z: Complex64,
    /// Monte Carlo mean of (z − X)^{−c}.
    pub lhs: Complex64,
    /// exp(−c·g_ρ(z)).
    pub rhs: Complex64,
    pub residual: f64,
    /// Standard error of `lhs`.
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MKReport {
    pub z_grid: Vec<Complex64>,
    pub max_residual: f64,
    pub per_point: Vec<MKPoint>,
}

impl MKReport {
    /// Whether every residual lies within k standard errors (plus `slack`).
    pub fn within_band(&self, k: f64, slack: f64) -> bool {
        self.per_point
            .iter()
            .all(|p| p.residual <= k * p.sigma + slack)
    }
}

/// Compares the sample mean of (z − X)^{−c} with exp(−c·g_ρ(z)) on a grid.
///
/// Grid points must keep |Im z| ≥ 0.5, or lie on the real axis at least 0.5
/// to the right of every atom, where both sides are real-analytic.
pub fn mk_residual(
    rho: &DiscreteMeasure,
    c: f64,
    samples: &EmpiricalSample,
    z_grid: &[Complex64],
) -> Result<MKReport> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "c must be positive, got {c}"
        )));
    }
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let right_edge = rho.max_atom().max(
        samples
            .values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max),
    );
    let mut per_point = Vec::with_capacity(z_grid.len());
    for &z in z_grid {
        if !(z.im.abs() >= 0.5 || z.re >= right_edge + 0.5) {
            return Err(Error::InvalidArgument(format!(
                "grid point {z} is too close to the support (need |Im z| ≥ 0.5 or Re z ≥ {})",
                right_edge + 0.5
            )));
        }
        let n = samples.len() as f64;
        let vals: Vec<Complex64> = samples
            .values
            .iter()
            .map(|&x| (-c * (z - x).ln()).exp())
            .collect();
        let lhs = vals.iter().sum::<Complex64>() / n;
        let var = vals.iter().map(|v| (v - lhs).norm_sqr()).sum::<f64>() / (n - 1.0).max(1.0);
        let rhs = (-c * rho.g_function(z)?).exp();
        per_point.push(MKPoint {
            z,
            lhs,
            rhs,
            residual: (lhs - rhs).norm(),
            sigma: (var / n).sqrt(),
        });
    }
    let max_residual = per_point.iter().map(|p| p.residual).fold(0.0, f64::max);
    Ok(MKReport {
        z_grid: z_grid.to_vec(),
        max_residual,
        per_point,
    })
}

fn check_order(n_max: usize) -> Result<()> {
    if n_max == 0 || n_max > MAX_ORDER {
        return Err(Error::InvalidArgument(format!(
            "moment order must be in 1..={MAX_ORDER}, got {n_max}"
        )));
    }
    Ok(())
}

/// binom(c + n − 1, n) for n = 0..=n_max by the rising-factorial recurrence.
fn rising_binomials(c: f64, n_max: usize) -> Vec<f64> {
    let mut g = vec![1.0; n_max + 1];
    for n in 1..=n_max {
        g[n] = g[n - 1] * (c + n as f64 - 1.0) / n as f64;
    }
    g
}

/// Moments of ρ^(c) from those of ρ, by matching z^{−n} coefficients in
/// Σ binom(c+n−1, n) m′_n z^{−n} = exp(c Σ m_k z^{−k}/k).
pub fn mk_moments(m: &MomentVector, c: f64, n_max: usize) -> Result<MomentVector> {
    check_order(n_max)?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "c must be positive, got {c}"
        )));
    }
    if m.order() < n_max {
        return Err(Error::InvalidArgument(format!(
            "need {n_max} input moments, got {}",
            m.order()
        )));
    }
    if n_max > WARN_ORDER {
        log::warn!("moment recursion to order {n_max} is poorly conditioned in floating point");
    }
    // b_n: coefficients of exp(c Σ m_k w^k / k), from n b_n = c Σ_k m_k b_{n−k}
    let mut b = vec![1.0; n_max + 1];
    for n in 1..=n_max {
        let s: f64 = (1..=n).map(|k| m.get(k) * b[n - k]).sum();
        b[n] = c * s / n as f64;
    }
    let g = rising_binomials(c, n_max);
    MomentVector::new((1..=n_max).map(|n| b[n] / g[n]).collect())
}

/// Inverse of `mk_moments`: recovers the moments of ρ from those of ρ^(c).
pub fn mk_moments_inverse(m_prime: &MomentVector, c: f64) -> Result<MomentVector> {
    let n_max = m_prime.order();
    check_order(n_max)?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "c must be positive, got {c}"
        )));
    }
    let g = rising_binomials(c, n_max);
    let b: Vec<f64> = (0..=n_max).map(|n| g[n] * m_prime.get(n)).collect();
    let mut m = vec![0.0; n_max + 1];
    for n in 1..=n_max {
        let s: f64 = (1..n).map(|k| m[k] * b[n - k]).sum();
        m[n] = n as f64 * b[n] / c - s;
    }
    MomentVector::new(m[1..].to_vec())
}

/// Classical cumulants κ̃_l and c-cumulants κ_l = κ̃_l/(l−1)!.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CCumulantVector {
    kappa: Vec<f64>,
    kappa_tilde: Vec<f64>,
}

impl CCumulantVector {
    pub fn from_kappa_tilde(kappa_tilde: Vec<f64>) -> Result<Self> {
        check_order(kappa_tilde.len().max(1)).and_then(|_| {
            if kappa_tilde.is_empty() {
                Err(Error::InvalidArgument(
                    "cumulant vector must have order ≥ 1".into(),
                ))
            } else {
                Ok(())
            }
        })?;
        let mut factorial = 1.0;
        let kappa = kappa_tilde
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                if i > 0 {
                    factorial *= i as f64;
                }
                k / factorial
            })
            .collect();
        Ok(Self { kappa, kappa_tilde })
    }

    pub fn order(&self) -> usize {
        self.kappa.len()
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn kappa_tilde(&self) -> &[f64] {
        &self.kappa_tilde
    }

    /// Termwise sum, truncated to the shorter order.
    pub fn add(&self, other: &Self) -> Result<Self> {
        let n = self.order().min(other.order());
        Self::from_kappa_tilde(
            (0..n)
                .map(|i| self.kappa_tilde[i] + other.kappa_tilde[i])
                .collect(),
        )
    }
}

fn binomial_table(n: usize) -> Vec<Vec<f64>> {
    let mut t = vec![vec![1.0; 1]];
    for i in 1..=n {
        let prev = &t[i - 1];
        let mut row = vec![1.0; i + 1];
        for k in 1..i {
            row[k] = prev[k - 1] + prev[k];
        }
        t.push(row);
    }
    t
}

/// Cumulants of a measure with moments `m_prime` (read as the moments of
/// ρ^(c)), via κ̃_n = m_n − Σ_{k<n} C(n−1, k−1) κ̃_k m_{n−k}.
pub fn c_cumulants(m_prime: &MomentVector) -> Result<CCumulantVector> {
    let n_max = m_prime.order();
    check_order(n_max)?;
    let binom = binomial_table(n_max);
    let mut kt = vec![0.0; n_max + 1];
    for n in 1..=n_max {
        let s: f64 = (1..n)
            .map(|k| binom[n - 1][k - 1] * kt[k] * m_prime.get(n - k))
            .sum();
        kt[n] = m_prime.get(n) - s;
    }
    CCumulantVector::from_kappa_tilde(kt[1..].to_vec())
}

/// Moments from cumulants: m_n = Σ_{k=1}^{n} C(n−1, k−1) κ̃_k m_{n−k}.
pub fn cumulants_to_moments(kappa: &CCumulantVector) -> Result<MomentVector> {
    let n_max = kappa.order();
    let binom = binomial_table(n_max);
    let mut m = vec![1.0; n_max + 1];
    for n in 1..=n_max {
        m[n] = (1..=n)
            .map(|k| binom[n - 1][k - 1] * kappa.kappa_tilde[k - 1] * m[n - k])
            .sum();
    }
    MomentVector::new(m[1..].to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeVerdict {
    Consistent,
    CandidateCounterexample,
}

impl ProbeVerdict {
    pub fn label(self) -> &'static str {
        match self {
            ProbeVerdict::Consistent => "consistent",
            ProbeVerdict::CandidateCounterexample => "candidate counterexample",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjectureReport {
    pub mu_moments: MomentVector,
    pub hankel_min_eig: f64,
    pub verdict: ProbeVerdict,
    pub ill_conditioned: bool,
}

/// Adds the cumulants of ρ₁^(c) and ρ₂^(c), maps the sum back through the
/// inverse moment recursion and inspects the Hankel matrix of the resulting
/// moment sequence μ.
pub fn conjecture_probe(
    rho1: &DiscreteMeasure,
    rho2: &DiscreteMeasure,
    c: f64,
    n_max: usize,
) -> Result<ConjectureReport> {
    check_order(n_max)?;
    if !n_max.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "probe order must be even, got {n_max}"
        )));
    }
    let ill_conditioned = n_max > PROBE_WARN_ORDER;
    if ill_conditioned {
        log::warn!("probe inversion at order {n_max} is ill-conditioned; treat small eigenvalues with care");
    }
    let k1 = c_cumulants(&mk_moments(&rho1.moments(n_max)?, c, n_max)?)?;
    let k2 = c_cumulants(&mk_moments(&rho2.moments(n_max)?, c, n_max)?)?;
    let convolved = cumulants_to_moments(&k1.add(&k2)?)?;
    let mu_moments = mk_moments_inverse(&convolved, c)?;
    let hankel_min_eig = mu_moments.hankel_min_eigenvalue();
    let verdict = if hankel_min_eig < COUNTEREXAMPLE_THRESHOLD {
        ProbeVerdict::CandidateCounterexample
    } else {
        ProbeVerdict::Consistent
    };
    Ok(ConjectureReport {
        mu_moments,
        hankel_min_eig,
        verdict,
        ill_conditioned,
    })
}
