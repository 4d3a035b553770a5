//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::collections::hash_map::DefaultHasher;
use std::f64::consts::E;
use std::hash::{Hash, Hasher};
use std::io::Write;
use std::time::{Duration, Instant};

use mkrein::bessel::{bessel_rank_one, bessel_theta_one, BesselQuery};
use mkrein::contour::{beta_identity_check, gamma_identity_check};
use mkrein::dirichlet::{fourier_rho_c, mellin_rho_c, random_mean_samples, DPConfig};
use mkrein::heckman_opdam::{ho_rank_one, HOQuery};
use mkrein::limits::{
    classical_sweep, high_temp_sweep, mellin_sweep, EvalCache, RegimeSchedule, SweepOptions,
    SweepReport, Target,
};
use mkrein::markov_krein::mk_moments;
use mkrein::measures::{DiscreteMeasure, MomentVector};
use mkrein::stats::{ks_critical, ks_statistic};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Beta, ContinuousCDF};

const TOL: f64 = 1e-8;
const SEED: u64 = 42;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

struct Outcome {
    pass: bool,
    detail: String,
    /// Bytes that must repeat exactly across runs (criteria 5-8).
    output: Vec<u8>,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self {
            pass,
            detail,
            output: Vec::new(),
        }
    }
}

fn digest(values: &[f64]) -> u64 {
    let mut h = DefaultHasher::new();
    for v in values {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

fn criterion_1() -> mkrein::Result<Outcome> {
    let mut gamma_err: f64 = 0.0;
    let mut beta_err: f64 = 0.0;
    for &cc in &[0.5, 1.0, 2.5] {
        for &u in &[
            c(1.0, 0.0),
            c(-1.0, 0.0),
            c(0.0, 2.0),
            c(0.0, -2.0),
            c(1.0, 1.0),
        ] {
            for &x in &[-1.0, 0.0, 0.7] {
                gamma_err =
                    gamma_err.max((gamma_identity_check(cc, u, x, TOL)? - (u * x).exp()).norm());
                if x > 0.0 && u.re > 0.0 {
                    beta_err = beta_err
                        .max((beta_identity_check(cc, u, x, TOL)? - c(x, 0.0).powc(u)).norm());
                }
            }
        }
    }
    Ok(Outcome::new(
        gamma_err <= 1e-6 && beta_err <= 1e-6,
        format!(
            "max |gamma - e^ux| = {gamma_err:.2e}, max |beta - x^u| = {beta_err:.2e} (limit 1e-6)"
        ),
    ))
}

fn criterion_2() -> mkrein::Result<Outcome> {
    let mut worst: f64 = 0.0;
    for n in 2..=8 {
        let atoms: Vec<f64> = (0..n).map(|j| j as f64).collect();
        for &u in &[
            c(1.0, 0.0),
            c(-2.0, 0.0),
            c(0.0, 3.0),
            c(0.0, -3.0),
            c(1.0, 2.0),
        ] {
            let got = bessel_rank_one(&BesselQuery::new(&atoms, u, 1.0, TOL)?)?.value;
            let want = bessel_theta_one(&atoms, u)?;
            worst = worst.max((got - want).norm() / want.norm());
        }
    }
    Ok(Outcome::new(
        worst <= 1e-6,
        format!("max relative error {worst:.2e} (limit 1e-6)"),
    ))
}

fn criterion_3() -> mkrein::Result<Outcome> {
    let mut fourier_gap: f64 = 0.0;
    let mut mellin_gap: f64 = 0.0;
    for &n in &[2usize, 4, 6] {
        let zero_based: Vec<f64> = (0..n).map(|j| j as f64).collect();
        let one_based: Vec<f64> = (1..=n).map(|j| j as f64).collect();
        let rho0 = DiscreteMeasure::uniform(&zero_based)?;
        let rho1 = DiscreteMeasure::uniform(&one_based)?;
        for &cc in &[0.5, 1.0, 2.0, 3.5] {
            let theta = cc / n as f64;
            for &u in &[c(1.0, 0.0), c(0.0, 2.0)] {
                let b = bessel_rank_one(&BesselQuery::new(&zero_based, u, theta, TOL)?)?.value;
                let f = fourier_rho_c(&rho0, cc, u, TOL)?.value;
                fourier_gap = fourier_gap.max((b - f).norm());
            }
            for &u in &[c(1.0, 0.0), c(2.0, 0.0)] {
                let h = ho_rank_one(&HOQuery::new(&one_based, u, theta, TOL)?)?.value;
                let m = mellin_rho_c(&rho1, cc, u, TOL)?.value;
                mellin_gap = mellin_gap.max((h - m).norm());
            }
        }
    }
    Ok(Outcome::new(
        fourier_gap <= 2e-6 && mellin_gap <= 2e-6,
        format!("max |bessel - fourier| = {fourier_gap:.2e}, max |ho - mellin| = {mellin_gap:.2e} (limit 2e-6)"),
    ))
}

fn criterion_4() -> mkrein::Result<Outcome> {
    let half = DiscreteMeasure::uniform(&[0.0, 1.0])?;
    let one_two = DiscreteMeasure::uniform(&[1.0, 2.0])?;
    let e1 = (fourier_rho_c(&half, 2.0, c(1.0, 0.0), TOL)?.value - (E - 1.0)).norm();
    let e2 = (mellin_rho_c(&one_two, 2.0, c(1.0, 0.0), TOL)?.value - 1.5).norm();
    let e3 = (mellin_rho_c(&one_two, 2.0, c(2.0, 0.0), TOL)?.value - 7.0 / 3.0).norm();
    let worst = e1.max(e2).max(e3);
    Ok(Outcome::new(
        worst <= 1e-6,
        format!("errors e-1: {e1:.2e}, 3/2: {e2:.2e}, 7/3: {e3:.2e} (limit 1e-6)"),
    ))
}

fn criterion_5() -> mkrein::Result<Outcome> {
    let half = DiscreteMeasure::uniform(&[0.0, 1.0])?;
    let mut pass = true;
    let mut worst_z: f64 = 0.0;
    let mut worst_ks: f64 = 0.0;
    let mut output = Vec::new();
    for &cc in &[0.5, 1.0, 2.0] {
        let sample = random_mean_samples(&DPConfig::new(half.clone(), cc, 1_000_000, SEED, 8)?)?;
        for &t in &[0.5, 1.0, 2.0] {
            let u = c(0.0, t);
            let (mc, se) = sample.transform(u);
            let exact = fourier_rho_c(&half, cc, u, TOL)?.value;
            let z = (mc - exact).norm() / se;
            worst_z = worst_z.max(z);
            pass &= z <= 3.0;
            writeln!(
                output,
                "c={cc} t={t} mc={:016x},{:016x}",
                mc.re.to_bits(),
                mc.im.to_bits()
            )
            .unwrap();
        }
        let law = Beta::new(cc / 2.0, cc / 2.0).expect("valid Beta parameters");
        let d = ks_statistic(&sample.values, |x| law.cdf(x));
        let crit = ks_critical(sample.len(), 1.628);
        worst_ks = worst_ks.max(d / crit);
        pass &= d <= crit;
        writeln!(output, "c={cc} samples={:016x}", digest(&sample.values)).unwrap();
    }
    Ok(Outcome {
        pass,
        detail: format!("max |MC - contour|/sigma = {worst_z:.2} (limit 3), max KS D/critical(1%) = {worst_ks:.2} (limit 1)"),
        output,
    })
}

fn random_base(rng: &mut ChaCha8Rng, n_atoms: usize) -> mkrein::Result<DiscreteMeasure> {
    let atoms: Vec<f64> = (0..n_atoms).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let weights: Vec<f64> = (0..n_atoms).map(|_| rng.gen_range(0.05..1.0)).collect();
    DiscreteMeasure::new(&atoms, Some(&weights))
}

fn criterion_6() -> mkrein::Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut violations = 0usize;
    let mut total = 0usize;
    let mut output = Vec::new();
    for b in 0..100 {
        let base = random_base(&mut rng, 5)?;
        let cc = rng.gen_range(0.1..10.0);
        let (lo, hi) = (base.min_atom(), base.max_atom());
        let slack = 1e-12 * (hi - lo);
        let sample = random_mean_samples(&DPConfig::new(base, cc, 10_000, SEED + b, 8)?)?;
        violations += sample
            .values
            .iter()
            .filter(|&&x| x < lo - slack || x > hi + slack)
            .count();
        total += sample.len();
        writeln!(output, "base={b} samples={:016x}", digest(&sample.values)).unwrap();
    }
    Ok(Outcome {
        pass: violations == 0 && total == 1_000_000,
        detail: format!(
            "{violations} hull violations in {total} samples over 100 random 5-atom bases"
        ),
        output,
    })
}

fn criterion_7() -> mkrein::Result<Outcome> {
    let half = DiscreteMeasure::uniform(&[0.0, 1.0])?;
    let m = half.moments(8)?;
    let uniform = mk_moments(&m, 2.0, 8)?;
    let arcsine = mk_moments(&m, 1.0, 8)?;
    let mut moment_err: f64 = 0.0;
    let mut arcsine_n = 1.0;
    for n in 1..=8 {
        // Beta(1/2, 1/2): m_n = m_{n-1}·(n − 1/2)/n.
        arcsine_n *= (n as f64 - 0.5) / n as f64;
        moment_err = moment_err.max((uniform.get(n) - 1.0 / (n as f64 + 1.0)).abs());
        moment_err = moment_err.max((arcsine.get(n) - arcsine_n).abs());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut min_eig = f64::INFINITY;
    let mut output = Vec::new();
    for case in 0..100 {
        let n_atoms = rng.gen_range(1..=6);
        let atoms: Vec<f64> = (0..n_atoms).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let weights: Vec<f64> = (0..n_atoms).map(|_| rng.gen_range(0.05..1.0)).collect();
        let rho = DiscreteMeasure::new(&atoms, Some(&weights))?;
        let cc = rng.gen_range(0.1..5.0);
        let image: MomentVector = mk_moments(&rho.moments(8)?, cc, 8)?;
        let eig = image.hankel_min_eigenvalue();
        min_eig = min_eig.min(eig);
        writeln!(
            output,
            "case={case} c={:016x} min_eig={:016x}",
            cc.to_bits(),
            eig.to_bits()
        )
        .unwrap();
    }
    Ok(Outcome {
        pass: moment_err <= 1e-10 && min_eig >= -1e-9,
        detail: format!(
            "max moment error {moment_err:.2e} (limit 1e-10), min Hankel eigenvalue over 100 cases {min_eig:.2e} (limit -1e-9)"
        ),
        output,
    })
}

fn criterion_8() -> mkrein::Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let mut worst_margin = f64::NEG_INFINITY;
    let mut output = Vec::new();
    for b in 0..20 {
        let n_atoms = rng.gen_range(2..=8);
        let base = random_base(&mut rng, n_atoms)?;
        let cc = rng.gen_range(0.1..5.0);
        let sample = random_mean_samples(&DPConfig::new(base.clone(), cc, 20_000, SEED + b, 8)?)?;
        for &alpha in &[1.0, 2.0, 3.0] {
            let (mc, se) = sample.mean_of(|x: f64| x.abs().powf(alpha));
            let bound = base.expect(|x| x.abs().powf(alpha));
            // Positive margin means the inequality is violated beyond 3σ.
            worst_margin = worst_margin.max((mc - bound - 3.0 * se) / bound.max(1e-300));
            writeln!(
                output,
                "base={b} alpha={alpha} mc={:016x} se={:016x}",
                mc.to_bits(),
                se.to_bits()
            )
            .unwrap();
        }
    }
    Ok(Outcome {
        pass: worst_margin <= 0.0,
        detail: format!("max (E_c|X|^a - E|X|^a - 3 sigma)/E|X|^a = {worst_margin:.3} over 20 bases, a in 1,2,3 (limit 0)"),
        output,
    })
}

fn opts() -> SweepOptions {
    SweepOptions {
        tol: 1e-9,
        ..SweepOptions::default()
    }
}

const N_LIST: [usize; 4] = [10, 20, 40, 80];

fn criterion_9() -> mkrein::Result<Outcome> {
    let report = classical_sweep(
        &Target::Uniform { a: 0.0, b: 1.0 },
        &[c(1.0, 0.0)],
        &N_LIST,
        &opts(),
        &EvalCache::new(),
    )?;
    let errs = report.errors_for(0);
    Ok(Outcome::new(
        errs[3] < errs[0] && errs[3] < 0.05,
        format!(
            "|B - (e-1)| at N=10,20,40,80: {} (N=80 limit 0.05)",
            fmt_errs(&errs)
        ),
    ))
}

fn fmt_errs(errs: &[f64]) -> String {
    errs.iter()
        .map(|e| format!("{e:.2e}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn trend_ok(report: &SweepReport, u_index: usize, limit: f64, detail: &mut String) -> bool {
    let errs = report.errors_for(u_index);
    let rho = report.trend(u_index);
    let last = *errs.last().expect("nonempty sweep");
    detail.push_str(&format!(
        "u={}: errors {} spearman {rho:.2}; ",
        report.u_grid[u_index],
        fmt_errs(&errs)
    ));
    rho < 0.0 && last < limit
}

fn criterion_10() -> mkrein::Result<Outcome> {
    // Reference values carry quadrature error ≤ 1e-9, added to the limit.
    let limit = 0.02 + 1e-9;
    let cache = EvalCache::new();
    let fourier = high_temp_sweep(
        &Target::Uniform { a: 0.0, b: 1.0 },
        &[c(1.0, 0.0), c(0.0, 2.0)],
        &N_LIST,
        1.0,
        &opts(),
        &cache,
    )?;
    let mellin = mellin_sweep(
        &Target::Uniform { a: 1.0, b: 2.0 },
        &[c(2.0, 0.0)],
        &N_LIST,
        &RegimeSchedule::high_temperature(1.0)?,
        &opts(),
        &cache,
    )?;
    let mut detail = String::new();
    let mut pass = true;
    for i in 0..fourier.u_grid.len() {
        pass &= trend_ok(&fourier, i, limit, &mut detail);
    }
    detail.push_str("mellin ");
    pass &= trend_ok(&mellin, 0, limit, &mut detail);
    detail.push_str("(N=80 limit 0.02, spearman < 0)");
    Ok(Outcome::new(pass, detail))
}

type Criterion = fn() -> mkrein::Result<Outcome>;

fn main() {
    let criteria: [(u32, &str, Criterion, Option<u64>); 10] = [
        (1, "quadrature self-tests", criterion_1, Some(10)),
        (2, "theta=1 oracle equivalence", criterion_2, Some(30)),
        (3, "finite-N transform identity", criterion_3, Some(60)),
        (4, "closed forms", criterion_4, Some(5)),
        (5, "Monte Carlo vs contour", criterion_5, Some(60)),
        (6, "convex hull", criterion_6, None),
        (
            7,
            "moment recursion and Hankel positivity",
            criterion_7,
            None,
        ),
        (8, "tail inequality", criterion_8, None),
        (9, "classical-regime trend", criterion_9, Some(120)),
        (10, "high-temperature trend", criterion_10, Some(300)),
    ];
    // Written straight to stderr so the lines survive output capture.
    let mut log = std::io::stderr().lock();
    let mut failures = 0;
    let mut first_outputs = Vec::new();
    for (id, name, run, budget) in criteria {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(o) => {
                if (5..=8).contains(&id) {
                    first_outputs.push((id, run, o.output));
                }
                let in_time = budget.is_none_or(|s| elapsed < Duration::from_secs(s));
                let timing = match budget {
                    Some(s) => format!("{:.2} s (limit {s} s)", elapsed.as_secs_f64()),
                    None => format!("{:.2} s", elapsed.as_secs_f64()),
                };
                (o.pass && in_time, format!("{}; {timing}", o.detail))
            }
            Err(e) => (false, format!("error: {e}")),
        };
        failures += usize::from(!pass);
        writeln!(
            log,
            "{} criterion {id} ({name}): {detail}",
            if pass { "PASS" } else { "FAIL" }
        )
        .unwrap();
    }

    let mut identical = first_outputs.len() == 4;
    for (id, run, first) in &first_outputs {
        let same = matches!(run(), Ok(o) if o.output == *first && !first.is_empty());
        if !same {
            writeln!(log, "  criterion {id} output differs on rerun").unwrap();
        }
        identical &= same;
    }
    failures += usize::from(!identical);
    writeln!(
        log,
        "{} criterion 11 (determinism): criteria 5-8 rerun with seed {SEED}: {}",
        if identical { "PASS" } else { "FAIL" },
        if identical {
            "byte-identical"
        } else {
            "outputs differ"
        }
    )
    .unwrap();

    if failures > 0 {
        writeln!(log, "{failures} acceptance criteria failed").unwrap();
        std::process::exit(1);
    }
}
