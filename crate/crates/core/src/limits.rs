//! Convergence experiments: quantile discretisations ρ_N of named targets,
//! β_N schedules, and sweeps over (N, u) comparing finite-N Bessel and
//! Heckman–Opdam values with their limits.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Mutex;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::bessel::{bessel_rank_one, BesselQuery};
use crate::contour::QuadratureResult;
use crate::dirichlet::{fourier_rho_c, mellin_rho_c, random_mean_samples, DPConfig};
use crate::error::{Error, Result};
use crate::heckman_opdam::{ho_rank_one, HOQuery};
use crate::measures::DiscreteMeasure;
use crate::special::ln_gamma;
use crate::stats::spearman;

/// Number of atoms in the discretisation used for ρ^(c) references.
pub const REFERENCE_ATOMS: usize = 2000;
/// Quadrature tolerance for references.
pub const REFERENCE_TOL: f64 = 1e-9;

/// Named limit distributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    Uniform {
        a: f64,
        b: f64,
    },
    /// Semicircle law of radius r centred at 0.
    Semicircle {
        r: f64,
    },
    /// Mass 1 − p at `lo` and p at `hi`.
    TwoPoint {
        p: f64,
        lo: f64,
        hi: f64,
    },
    Beta {
        alpha: f64,
        beta: f64,
    },
}

impl Target {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Target::Uniform { a, b } => a.is_finite() && b.is_finite() && a < b,
            Target::Semicircle { r } => r > 0.0 && r.is_finite(),
            Target::TwoPoint { p, lo, hi } => {
                (0.0..=1.0).contains(&p) && lo.is_finite() && hi.is_finite() && lo < hi
            }
            Target::Beta { alpha, beta } => {
                alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::UnsupportedDistribution(format!(
                "invalid parameters in {self}"
            )))
        }
    }

    /// Support hull [lo, hi].
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Target::Uniform { a, b } => (a, b),
            Target::Semicircle { r } => (-r, r),
            Target::TwoPoint { lo, hi, .. } => (lo, hi),
            Target::Beta { .. } => (0.0, 1.0),
        }
    }

    /// Quantile function at level q ∈ (0, 1).
    pub fn quantile(&self, q: f64) -> f64 {
        match *self {
            Target::Uniform { a, b } => a + q * (b - a),
            Target::Semicircle { r } => semicircle_quantile(q, r),
            Target::TwoPoint { p, lo, hi } => {
                if q < 1.0 - p {
                    lo
                } else {
                    hi
                }
            }
            Target::Beta { alpha, beta } => {
                Beta::new(alpha, beta).expect("validated").inverse_cdf(q)
            }
        }
    }

    /// ∫e^{ux} ρ(dx).
    pub fn fourier(&self, u: Complex64) -> Complex64 {
        match *self {
            Target::Uniform { a, b } => {
                let w = u * (b - a);
                (u * a).exp() * exprel(w)
            }
            Target::Semicircle { r } => {
                // x = r cos φ, ρ(dx) = (2/π) sin²φ dφ; the integrand extends to
                // a smooth periodic function, so the trapezoid rule converges
                // geometrically.
                let m = 4096;
                let h = PI / m as f64;
                let s: Complex64 = (1..m)
                    .map(|k| {
                        let phi = k as f64 * h;
                        (u * (r * phi.cos())).exp() * phi.sin().powi(2)
                    })
                    .sum();
                s * (2.0 / PI) * h
            }
            Target::TwoPoint { p, lo, hi } => (u * lo).exp() * (1.0 - p) + (u * hi).exp() * p,
            Target::Beta { alpha, beta } => kummer_1f1(alpha, alpha + beta, u),
        }
    }

    /// ∫x^u ρ(dx) for targets on [0, ∞) and Re u > 0.
    pub fn mellin(&self, u: Complex64) -> Result<Complex64> {
        let (lo, _) = self.support();
        if lo < 0.0 {
            return Err(Error::UnsupportedDistribution(format!(
                "{self} is not supported on [0, ∞)"
            )));
        }
        if !(u.re > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "Re u must be positive, got u = {u}"
            )));
        }
        let pow = |x: f64| {
            if x == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                (u * x.ln()).exp()
            }
        };
        Ok(match *self {
            Target::Uniform { a, b } => (pow(b) * b - pow(a) * a) / ((u + 1.0) * (b - a)),
            Target::TwoPoint { p, lo, hi } => pow(lo) * (1.0 - p) + pow(hi) * p,
            Target::Beta { alpha, beta } => {
                let a = Complex64::new(alpha, 0.0);
                let ab = Complex64::new(alpha + beta, 0.0);
                (ln_gamma(a + u) + ln_gamma(ab) - ln_gamma(a) - ln_gamma(ab + u)).exp()
            }
            Target::Semicircle { .. } => unreachable!("semicircle support includes negatives"),
        })
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Target::Uniform { a, b } => write!(f, "uniform:{a},{b}"),
            Target::Semicircle { r } => write!(f, "semicircle:{r}"),
            Target::TwoPoint { p, lo, hi } => write!(f, "two_point:{p},{lo},{hi}"),
            Target::Beta { alpha, beta } => write!(f, "beta:{alpha},{beta}"),
        }
    }
}

impl FromStr for Target {
    type Err = Error;

    /// `uniform:a,b`, `semicircle:r`, `two_point:p[,lo,hi]`, `beta:α,β`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let nums: Vec<f64> = if args.trim().is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| {
                    Error::UnsupportedDistribution(format!("bad parameters in '{s}': {e}"))
                })?
        };
        let target = match (
            name.trim().to_ascii_lowercase().replace('-', "_").as_str(),
            nums.as_slice(),
        ) {
            ("uniform", [a, b]) => Target::Uniform { a: *a, b: *b },
            ("uniform", []) => Target::Uniform { a: 0.0, b: 1.0 },
            ("semicircle", [r]) => Target::Semicircle { r: *r },
            ("semicircle", []) => Target::Semicircle { r: 2.0 },
            ("two_point", [p]) => Target::TwoPoint {
                p: *p,
                lo: 0.0,
                hi: 1.0,
            },
            ("two_point", [p, lo, hi]) => Target::TwoPoint {
                p: *p,
                lo: *lo,
                hi: *hi,
            },
            ("beta", [a, b]) => Target::Beta {
                alpha: *a,
                beta: *b,
            },
            _ => {
                return Err(Error::UnsupportedDistribution(format!(
                    "unknown target '{s}'"
                )))
            }
        };
        target.validate()?;
        Ok(target)
    }
}

/// (e^w − 1)/w, with a series near 0.
fn exprel(w: Complex64) -> Complex64 {
    if w.norm() < 1e-3 {
        1.0 + w / 2.0 + w * w / 6.0 + w * w * w / 24.0
    } else {
        (w.exp() - 1.0) / w
    }
}

/// ₁F₁(a; b; u) by its power series, applying Kummer's transformation
/// ₁F₁(a; b; u) = e^u ₁F₁(b − a; b; −u) when Re u < 0 to avoid cancellation.
fn kummer_1f1(a: f64, b: f64, u: Complex64) -> Complex64 {
    if u.re < 0.0 {
        return u.exp() * kummer_1f1(b - a, b, -u);
    }
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for n in 0..10_000 {
        let n = n as f64;
        term = term * u * ((a + n) / ((b + n) * (n + 1.0)));
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() && n > u.norm() {
            break;
        }
    }
    sum
}

fn semicircle_cdf(x: f64, r: f64) -> f64 {
    let t = (x / r).clamp(-1.0, 1.0);
    0.5 + (t * (1.0 - t * t).sqrt() + t.asin()) / PI
}

fn semicircle_quantile(q: f64, r: f64) -> f64 {
    let (mut lo, mut hi) = (-r, r);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if semicircle_cdf(mid, r) < q {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * r {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Atoms at the quantiles (j − 1/2)/N, j = 1..N, in increasing order.
pub fn quantile_points(target: &Target, n: usize) -> Result<Vec<f64>> {
    target.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    Ok((1..=n)
        .map(|j| target.quantile((j as f64 - 0.5) / n as f64))
        .collect())
}

/// ρ_N: uniform weights on the quantile atoms (duplicates merged).
pub fn quantile_discretize(target: &Target, n: usize) -> Result<DiscreteMeasure> {
    DiscreteMeasure::uniform(&quantile_points(target, n)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Classical,
    HighTemperature,
    Free,
}

impl FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "classical" => Ok(Regime::Classical),
            "high-temp" | "high-temperature" => Ok(Regime::HighTemperature),
            "free" => Ok(Regime::Free),
            other => Err(Error::InvalidArgument(format!("unknown regime '{other}'"))),
        }
    }
}

/// β_N rule for a regime; θ_N = β_N/2 and c_N = Nθ_N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeSchedule {
    pub regime: Regime,
    pub c_target: f64,
}

impl RegimeSchedule {
    /// β_N = 1/N².
    pub fn classical() -> Self {
        Self {
            regime: Regime::Classical,
            c_target: 0.0,
        }
    }

    /// β_N = 2c/N.
    pub fn high_temperature(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "c must be positive, got {c}"
            )));
        }
        Ok(Self {
            regime: Regime::HighTemperature,
            c_target: c,
        })
    }

    /// β_N = N (β ≫ 1/N); sweeps reject it.
    pub fn free() -> Self {
        Self {
            regime: Regime::Free,
            c_target: 0.0,
        }
    }

    pub fn beta(&self, n: usize) -> f64 {
        let n = n as f64;
        match self.regime {
            Regime::Classical => 1.0 / (n * n),
            Regime::HighTemperature => 2.0 * self.c_target / n,
            Regime::Free => n,
        }
    }

    pub fn theta(&self, n: usize) -> f64 {
        self.beta(n) / 2.0
    }

    pub fn c_n(&self, n: usize) -> f64 {
        n as f64 * self.theta(n)
    }

    fn require_supported(&self) -> Result<()> {
        if self.regime == Regime::Free {
            return Err(Error::InvalidArgument(
                "the free regime has no implemented limit; use classical or high-temp".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    FourierRho,
    FourierRhoC,
    MellinRho,
    MellinRhoC,
}

/// Monte Carlo estimate of the reference transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McCheck {
    pub value: Complex64,
    pub std_error: f64,
    pub abs_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub u: Complex64,
    pub value: Complex64,
    pub err_est: f64,
    pub target: Complex64,
    pub abs_err: f64,
    /// |𝓑 − transform of ρ_N^(c_N)| at the same N.
    pub identity_residual: Option<f64>,
    pub mc: Option<McCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub target: Target,
    pub schedule: RegimeSchedule,
    pub target_kind: TargetKind,
    pub n_values: Vec<usize>,
    pub u_grid: Vec<Complex64>,
    /// Row-major over (u, N) in the order of `u_grid` then `n_values`.
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    /// Errors against N for the u at `u_index`, ordered like `n_values`.
    pub fn errors_for(&self, u_index: usize) -> Vec<f64> {
        let k = self.n_values.len();
        self.rows[u_index * k..(u_index + 1) * k]
            .iter()
            .map(|r| r.abs_err)
            .collect()
    }

    /// Spearman correlation between N and the error at the u at `u_index`.
    pub fn trend(&self, u_index: usize) -> f64 {
        let n: Vec<f64> = self.n_values.iter().map(|&n| n as f64).collect();
        spearman(&n, &self.errors_for(u_index))
    }

    /// Whether the error at the largest N is below the error at the smallest.
    pub fn improves(&self, u_index: usize) -> bool {
        let e = self.errors_for(u_index);
        e.last() < e.first()
    }

    /// CSV with columns `N,u_re,u_im,value_re,value_im,target_re,target_im,abs_err`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "N",
            "u_re",
            "u_im",
            "value_re",
            "value_im",
            "target_re",
            "target_im",
            "abs_err",
        ])?;
        for r in &self.rows {
            w.write_record(&[
                r.n.to_string(),
                r.u.re.to_string(),
                r.u.im.to_string(),
                r.value.re.to_string(),
                r.value.im.to_string(),
                r.target.re.to_string(),
                r.target.im.to_string(),
                r.abs_err.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Knobs shared by the sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepOptions {
    pub tol: f64,
    /// Also evaluate the transform of ρ_N^(c_N) at each cell.
    pub check_identity: bool,
    /// Monte Carlo sample count for the ρ^(c) reference (0 = skip).
    pub mc_samples: usize,
    pub seed: u64,
    pub shards: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            check_identity: false,
            mc_samples: 0,
            seed: 42,
            shards: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum EvalKind {
    Bessel,
    HeckmanOpdam,
}

type CacheKey = (EvalKind, Vec<u64>, u64, u64, u64, u64);

/// Memoises finite-N evaluations keyed by (points, u, θ, tol) so that
/// sweeps sharing cells do not recompute them.
#[derive(Debug, Default)]
pub struct EvalCache {
    map: Mutex<HashMap<CacheKey, QuadratureResult>>,
}

impl EvalCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get_or_eval(
        &self,
        kind: EvalKind,
        points: &[f64],
        u: Complex64,
        theta: f64,
        tol: f64,
    ) -> Result<QuadratureResult> {
        let key = (
            kind,
            points.iter().map(|x| x.to_bits()).collect(),
            u.re.to_bits(),
            u.im.to_bits(),
            theta.to_bits(),
            tol.to_bits(),
        );
        if let Some(hit) = self.map.lock().expect("cache poisoned").get(&key) {
            return Ok(*hit);
        }
        let value = match kind {
            EvalKind::Bessel => bessel_rank_one(&BesselQuery::new(points, u, theta, tol)?)?,
            EvalKind::HeckmanOpdam => ho_rank_one(&HOQuery::new(points, u, theta, tol)?)?,
        };
        self.map.lock().expect("cache poisoned").insert(key, value);
        Ok(value)
    }
}

fn check_grid(n_list: &[usize], u_grid: &[Complex64]) -> Result<()> {
    if n_list.is_empty() || u_grid.is_empty() {
        return Err(Error::InvalidArgument(
            "sweep needs at least one N and one u".into(),
        ));
    }
    if n_list.contains(&0) {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    Ok(())
}

/// Target kind, reference value per u, and optional (MC mean, standard error) per u.
type References = (TargetKind, Vec<Complex64>, Option<Vec<(Complex64, f64)>>);

/// Reference values of the limit transform at each u, and optional MC checks.
fn references(
    target: &Target,
    schedule: &RegimeSchedule,
    mellin: bool,
    u_grid: &[Complex64],
    opts: &SweepOptions,
) -> Result<References> {
    match (schedule.regime, mellin) {
        (Regime::Classical, false) => Ok((
            TargetKind::FourierRho,
            u_grid.iter().map(|&u| target.fourier(u)).collect(),
            None,
        )),
        (Regime::Classical, true) => {
            let v = u_grid
                .iter()
                .map(|&u| target.mellin(u))
                .collect::<Result<Vec<_>>>()?;
            Ok((TargetKind::MellinRho, v, None))
        }
        (Regime::HighTemperature, _) => {
            let c = schedule.c_target;
            let rho = quantile_discretize(target, REFERENCE_ATOMS)?;
            let values = u_grid
                .par_iter()
                .map(|&u| {
                    if mellin {
                        mellin_rho_c(&rho, c, u, REFERENCE_TOL).map(|r| r.value)
                    } else {
                        fourier_rho_c(&rho, c, u, REFERENCE_TOL).map(|r| r.value)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let mc = if opts.mc_samples > 0 {
                let sample = random_mean_samples(&DPConfig::new(
                    rho,
                    c,
                    opts.mc_samples,
                    opts.seed,
                    opts.shards,
                )?)?;
                let est = u_grid
                    .iter()
                    .map(|&u| {
                        if mellin {
                            let vals: Vec<Complex64> =
                                sample.values.iter().map(|&x| (u * x.ln()).exp()).collect();
                            let n = vals.len() as f64;
                            let mean = vals.iter().sum::<Complex64>() / n;
                            let var = vals.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>()
                                / (n - 1.0).max(1.0);
                            (mean, (var / n).sqrt())
                        } else {
                            sample.transform(u)
                        }
                    })
                    .collect();
                Some(est)
            } else {
                None
            };
            let kind = if mellin {
                TargetKind::MellinRhoC
            } else {
                TargetKind::FourierRhoC
            };
            Ok((kind, values, mc))
        }
        (Regime::Free, _) => unreachable!("rejected earlier"),
    }
}

fn sweep(
    target: &Target,
    u_grid: &[Complex64],
    n_list: &[usize],
    schedule: &RegimeSchedule,
    mellin: bool,
    opts: &SweepOptions,
    cache: &EvalCache,
) -> Result<SweepReport> {
    target.validate()?;
    schedule.require_supported()?;
    check_grid(n_list, u_grid)?;
    if mellin {
        if target.support().0 < 0.0 {
            return Err(Error::UnsupportedDistribution(format!(
                "{target} must be supported on [0, ∞) for Mellin sweeps"
            )));
        }
        if let Some(u) = u_grid.iter().find(|u| !(u.re > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "Mellin sweeps need Re u > 0, got {u}"
            )));
        }
        if schedule.regime == Regime::HighTemperature {
            if let Some(u) = u_grid.iter().find(|u| u.re < 1.0) {
                log::warn!(
                    "u = {u}: the high-temperature Mellin limit is only guaranteed for Re u ≥ 1"
                );
            }
        }
    } else if let Some(u) = u_grid.iter().find(|u| u.norm() == 0.0) {
        return Err(Error::InvalidArgument(format!(
            "u must be nonzero, got {u}"
        )));
    }

    let (target_kind, refs, mc) = references(target, schedule, mellin, u_grid, opts)?;
    let kind = if mellin {
        EvalKind::HeckmanOpdam
    } else {
        EvalKind::Bessel
    };
    let cells: Vec<(usize, usize)> = (0..u_grid.len())
        .flat_map(|i| (0..n_list.len()).map(move |k| (i, k)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(i, k)| {
            let (u, n) = (u_grid[i], n_list[k]);
            let points = quantile_points(target, n)?;
            let theta = schedule.theta(n);
            let q = cache.get_or_eval(kind, &points, u, theta, opts.tol)?;
            let identity_residual = if opts.check_identity {
                let rho_n = DiscreteMeasure::uniform(&points)?;
                let c_n = schedule.c_n(n);
                let other = if mellin {
                    mellin_rho_c(&rho_n, c_n, u, opts.tol)?
                } else {
                    fourier_rho_c(&rho_n, c_n, u, opts.tol)?
                };
                Some((other.value - q.value).norm())
            } else {
                None
            };
            let mc = mc.as_ref().map(|m| {
                let (value, std_error) = m[i];
                McCheck {
                    value,
                    std_error,
                    abs_err: (value - q.value).norm(),
                }
            });
            Ok(SweepRow {
                n,
                u,
                value: q.value,
                err_est: q.error_bound(),
                target: refs[i],
                abs_err: (q.value - refs[i]).norm(),
                identity_residual,
                mc,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport {
        target: *target,
        schedule: *schedule,
        target_kind,
        n_values: n_list.to_vec(),
        u_grid: u_grid.to_vec(),
        rows,
    })
}

/// 𝓑_{ā(N)}(u; N, β_N/2) with β_N = 1/N² against ∫e^{ux}ρ(dx).
pub fn classical_sweep(
    target: &Target,
    u_grid: &[Complex64],
    n_list: &[usize],
    opts: &SweepOptions,
    cache: &EvalCache,
) -> Result<SweepReport> {
    sweep(
        target,
        u_grid,
        n_list,
        &RegimeSchedule::classical(),
        false,
        opts,
        cache,
    )
}

/// 𝓑_{ā(N)}(u; N, c/N) against ∫e^{ux}ρ^(c)(dx), the latter from the
/// contour formula on a 2000-atom discretisation of ρ (and optionally by
/// Monte Carlo).
pub fn high_temp_sweep(
    target: &Target,
    u_grid: &[Complex64],
    n_list: &[usize],
    c: f64,
    opts: &SweepOptions,
    cache: &EvalCache,
) -> Result<SweepReport> {
    sweep(
        target,
        u_grid,
        n_list,
        &RegimeSchedule::high_temperature(c)?,
        false,
        opts,
        cache,
    )
}

/// 𝓕_{log ā(N)}(u; N, θ_N) against ∫x^u ρ(dx) (classical) or
/// ∫x^u ρ^(c)(dx) (high temperature).
pub fn mellin_sweep(
    target: &Target,
    u_grid: &[Complex64],
    n_list: &[usize],
    schedule: &RegimeSchedule,
    opts: &SweepOptions,
    cache: &EvalCache,
) -> Result<SweepReport> {
    sweep(target, u_grid, n_list, schedule, true, opts, cache)
}
