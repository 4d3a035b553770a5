//! `mkrein` command line: argument parsing, dispatch and CSV/JSON output.
//!
//! Every output starts with the resolved configuration: a `# config {...}`
//! comment line for CSV, a leading `"config"` key for JSON.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::bessel::{bessel_rank_one, bessel_theta_one, BesselQuery};
use crate::contour::{beta_identity_check, gamma_identity_check, QuadratureResult};
use crate::dirichlet::{
    fourier_rho_c, fourier_rho_c_with, mellin_rho_c, random_mean_samples, DPConfig,
    TransformContour,
};
use crate::error::{Error, Result};
use crate::heckman_opdam::{ho_rank_one, ho_theta_one, HOQuery};
use crate::limits::{
    classical_sweep, high_temp_sweep, mellin_sweep, EvalCache, Regime, RegimeSchedule,
    SweepOptions, Target,
};
use crate::markov_krein::{c_cumulants, conjecture_probe, mk_moments, mk_residual};
use crate::measures::{read_measure_csv, read_points_csv, DiscreteMeasure};

pub const THREADS_ENV: &str = "MKREIN_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "mkrein",
    version,
    about = "Rank-one Bessel / Heckman-Opdam functions by contour quadrature, Dirichlet-process random means and Markov-Krein checks"
)]
pub struct Cli {
    /// Worker threads [default: physical cores]. The MKREIN_THREADS
    /// environment variable takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rank-one multivariate Bessel function B_a(u; N, θ).
    Bessel(FunctionArgs),
    /// Rank-one Heckman-Opdam function F_{log a}(u; N, θ) (positive points, Re u > 0).
    Ho(FunctionArgs),
    /// Fourier or Mellin transform of the random-mean law ρ^(c).
    Transform(TransformArgs),
    /// Monte Carlo samples of the Dirichlet-process random mean.
    DpMean(DpMeanArgs),
    /// Compare both sides of the Markov-Krein identity on a grid of z.
    MkCheck(MkCheckArgs),
    /// Moments of ρ^(c) from those of ρ, plus c-cumulants.
    MkMoments(MkMomentsArgs),
    /// Positivity probe: add c-cumulants of two measures and test the Hankel matrix.
    Conjecture(ConjectureArgs),
    /// Convergence sweep over N and u.
    Sweep(SweepArgs),
    /// Quick internal consistency checks; exits 1 if any fails.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Args)]
struct PointsArgs {
    /// Inline points, comma separated; repeats allowed.
    #[arg(long, allow_hyphen_values = true)]
    points: Option<String>,
    /// CSV with an `atom` column (one row per point).
    #[arg(long)]
    points_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct MeasureArgs {
    /// CSV with columns `atom[,weight]`; weights default to uniform.
    #[arg(long)]
    base: Option<PathBuf>,
    /// Inline atoms, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    points: Option<String>,
    /// Inline weights matching --points (normalised).
    #[arg(long, requires = "points")]
    weights: Option<String>,
}

#[derive(Debug, Args)]
struct FunctionArgs {
    #[command(flatten)]
    points: PointsArgs,
    /// θ > 0.
    #[arg(long)]
    theta: f64,
    /// Argument(s) u, comma separated; complex as `1+2i`, `-3i`.
    #[arg(long, allow_hyphen_values = true)]
    u: String,
    /// Absolute quadrature tolerance on the returned value.
    #[arg(long, default_value = "1e-8")]
    tol: f64,
    /// Output file [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TransformKind {
    Fourier,
    Mellin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ContourKind {
    Hankel,
    Line,
}

#[derive(Debug, Args)]
struct TransformArgs {
    #[command(flatten)]
    measure: MeasureArgs,
    /// Concentration c > 0.
    #[arg(long)]
    c: f64,
    /// Fourier E[e^{uX}] or Mellin E[X^u] (positive atoms, Re u > 0).
    #[arg(long, value_enum, default_value_t = TransformKind::Fourier)]
    kind: TransformKind,
    /// Real part of u.
    #[arg(long, allow_hyphen_values = true)]
    u_re: f64,
    /// Imaginary part of u.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    u_im: f64,
    /// Absolute quadrature tolerance on the returned value.
    #[arg(long, default_value = "1e-8")]
    tol: f64,
    /// Hankel loop, or the line R − iδ·sgn(t) (Fourier with u = it only).
    #[arg(long, value_enum, default_value_t = ContourKind::Hankel)]
    contour: ContourKind,
    /// Offset δ > 0 of the line contour below/above the real axis.
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Output file [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct SamplingArgs {
    /// Number of random-mean samples.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// RNG seed; equal seeds give identical output.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Work partitions; changes sample order, not the sample multiset.
    #[arg(long, default_value_t = 8)]
    shards: usize,
}

#[derive(Debug, Args)]
struct DpMeanArgs {
    #[command(flatten)]
    measure: MeasureArgs,
    /// Concentration c > 0.
    #[arg(long)]
    c: f64,
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Output file [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MkCheckArgs {
    #[command(flatten)]
    measure: MeasureArgs,
    /// Concentration c > 0.
    #[arg(long)]
    c: f64,
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Grid points z, comma separated complex numbers.
    #[arg(
        long,
        default_value = "1+1i,0.5+2i,-1+0.5i,0-1i",
        allow_hyphen_values = true
    )]
    z: String,
    /// Output file [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MkMomentsArgs {
    #[command(flatten)]
    measure: MeasureArgs,
    /// Concentration c > 0.
    #[arg(long)]
    c: f64,
    /// Highest moment order (at most 24).
    #[arg(long, default_value_t = 8)]
    n_max: usize,
    /// Output file [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ConjectureArgs {
    /// First measure, CSV `atom[,weight]`.
    #[arg(long)]
    base1: Option<PathBuf>,
    /// First measure, inline atoms (uniform weights).
    #[arg(long, allow_hyphen_values = true)]
    points1: Option<String>,
    /// Second measure, CSV `atom[,weight]`.
    #[arg(long)]
    base2: Option<PathBuf>,
    /// Second measure, inline atoms (uniform weights).
    #[arg(long, allow_hyphen_values = true)]
    points2: Option<String>,
    /// Concentration c > 0.
    #[arg(long)]
    c: f64,
    /// Even moment order (at most 24).
    #[arg(long, default_value_t = 8)]
    n_max: usize,
    /// Output file [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// uniform:a,b | semicircle:r | two_point:p[,lo,hi] | beta:α,β
    #[arg(long, default_value = "uniform:0,1")]
    target: String,
    /// classical (β_N = 1/N²) or high-temp (β_N = 2c/N).
    #[arg(long, default_value = "classical")]
    regime: String,
    /// Limit c for the high-temperature regime.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Comma separated N values.
    #[arg(long = "N", default_value = "10,20,40,80")]
    n: String,
    /// Comma separated u values.
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    u: String,
    /// Fourier E[e^{uX}] or Mellin E[X^u] (positive atoms, Re u > 0).
    #[arg(long, value_enum, default_value_t = TransformKind::Fourier)]
    kind: TransformKind,
    /// Absolute quadrature tolerance on the returned value.
    #[arg(long, default_value = "1e-8")]
    tol: f64,
    /// Monte Carlo samples for the high-temperature reference (0 = off); reported on stderr.
    #[arg(long, default_value_t = 0)]
    mc_samples: usize,
    /// RNG seed; equal seeds give identical output.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output file [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SelftestArgs {
    /// Absolute quadrature tolerance on the returned value.
    #[arg(long, default_value = "1e-8")]
    tol: f64,
}

/// Parses `1`, `-2.5`, `3i`, `-i`, `1+2i`, `1e-3-4.5e2i`.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::InvalidArgument(format!("cannot parse `{s}` as a complex number"));
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return t
            .parse::<f64>()
            .map(|x| Complex64::new(x, 0.0))
            .map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |part: &str| -> Result<f64> {
        match part {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            p => p.parse::<f64>().map_err(|_| bad()),
        }
    };
    match split {
        Some(k) => Ok(Complex64::new(
            body[..k].parse::<f64>().map_err(|_| bad())?,
            imag(&body[k..])?,
        )),
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

fn parse_list<T, F: Fn(&str) -> Result<T>>(s: &str, what: &str, f: F) -> Result<Vec<T>> {
    let items: Vec<T> = s
        .split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| f(x.trim()))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "--{what} needs at least one value"
        )));
    }
    Ok(items)
}

fn parse_reals(s: &str, what: &str) -> Result<Vec<f64>> {
    parse_list(s, what, |x| {
        x.parse::<f64>().map_err(|_| {
            Error::InvalidArgument(format!("--{what}: cannot parse `{x}` as a number"))
        })
    })
}

fn resolve_points(p: &PointsArgs) -> Result<Vec<f64>> {
    match (&p.points, &p.points_file) {
        (Some(_), Some(_)) => Err(Error::InvalidArgument(
            "give either --points or --points-file, not both".into(),
        )),
        (Some(s), None) => parse_reals(s, "points"),
        (None, Some(path)) => read_points_csv(path),
        (None, None) => Err(Error::InvalidArgument(
            "one of --points or --points-file is required".into(),
        )),
    }
}

fn resolve_measure(m: &MeasureArgs) -> Result<DiscreteMeasure> {
    match (&m.base, &m.points) {
        (Some(_), Some(_)) => Err(Error::InvalidArgument(
            "give either --base or --points, not both".into(),
        )),
        (Some(path), None) => read_measure_csv(path),
        (None, Some(s)) => {
            let atoms = parse_reals(s, "points")?;
            let weights = m
                .weights
                .as_deref()
                .map(|w| parse_reals(w, "weights"))
                .transpose()?;
            if let Some(w) = &weights {
                if w.len() != atoms.len() {
                    return Err(Error::InvalidArgument(format!(
                        "--weights has {} entries but --points has {}",
                        w.len(),
                        atoms.len()
                    )));
                }
            }
            DiscreteMeasure::new(&atoms, weights.as_deref())
        }
        (None, None) => Err(Error::InvalidArgument(
            "one of --base or --points is required".into(),
        )),
    }
}

fn resolve_pair(
    base: &Option<PathBuf>,
    points: &Option<String>,
    which: &str,
) -> Result<DiscreteMeasure> {
    match (base, points) {
        (Some(_), Some(_)) => Err(Error::InvalidArgument(format!(
            "give either --base{which} or --points{which}, not both"
        ))),
        (Some(path), None) => read_measure_csv(path),
        (None, Some(s)) => DiscreteMeasure::uniform(&parse_reals(s, &format!("points{which}"))?),
        (None, None) => Err(Error::InvalidArgument(format!(
            "one of --base{which} or --points{which} is required"
        ))),
    }
}

fn measure_json(m: &DiscreteMeasure) -> Value {
    json!({ "atoms": m.atoms(), "weights": m.weights() })
}

fn complex_json(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn open_out<'a>(path: &Option<PathBuf>, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(stdout),
    })
}

fn write_config_line(out: &mut dyn Write, config: &Value) -> Result<()> {
    writeln!(out, "# config {}", serde_json::to_string(config)?)?;
    Ok(())
}

fn write_json(out: &mut dyn Write, config: Value, body: Value) -> Result<()> {
    let mut doc = serde_json::Map::new();
    doc.insert("config".into(), config);
    if let Value::Object(fields) = body {
        doc.extend(fields);
    }
    serde_json::to_writer_pretty(&mut *out, &Value::Object(doc))?;
    writeln!(out)?;
    Ok(())
}

fn write_value_rows(out: &mut dyn Write, rows: &[(Complex64, QuadratureResult)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["u_re", "u_im", "value_re", "value_im", "err_est"])?;
    for (u, r) in rows {
        w.write_record(&[
            u.re.to_string(),
            u.im.to_string(),
            r.value.re.to_string(),
            r.value.im.to_string(),
            r.error_bound().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn run_function(
    args: &FunctionArgs,
    ho: bool,
    threads: usize,
    stdout: &mut dyn Write,
) -> Result<()> {
    let points = resolve_points(&args.points)?;
    let us = parse_list(&args.u, "u", parse_complex)?;
    let rows = us
        .iter()
        .map(|&u| {
            let r = if ho {
                ho_rank_one(&HOQuery::new(&points, u, args.theta, args.tol)?)?
            } else {
                bessel_rank_one(&BesselQuery::new(&points, u, args.theta, args.tol)?)?
            };
            Ok((u, r))
        })
        .collect::<Result<Vec<_>>>()?;
    let config = json!({
        "command": if ho { "ho" } else { "bessel" },
        "points": points,
        "theta": args.theta,
        "u": us.iter().map(|&u| complex_json(u)).collect::<Vec<_>>(),
        "tol": args.tol,
        "threads": threads,
    });
    let mut out = open_out(&args.out, stdout)?;
    write_config_line(&mut out, &config)?;
    write_value_rows(&mut out, &rows)?;
    out.flush()?;
    Ok(())
}

fn run_transform(args: &TransformArgs, threads: usize, stdout: &mut dyn Write) -> Result<()> {
    let rho = resolve_measure(&args.measure)?;
    let u = Complex64::new(args.u_re, args.u_im);
    let r = match (args.kind, args.contour) {
        (TransformKind::Fourier, ContourKind::Hankel) => fourier_rho_c(&rho, args.c, u, args.tol)?,
        (TransformKind::Fourier, ContourKind::Line) => fourier_rho_c_with(
            &rho,
            args.c,
            u,
            args.tol,
            TransformContour::Line { delta: args.delta },
        )?,
        (TransformKind::Mellin, ContourKind::Hankel) => mellin_rho_c(&rho, args.c, u, args.tol)?,
        (TransformKind::Mellin, ContourKind::Line) => {
            return Err(Error::InvalidArgument(
                "the line contour applies to Fourier transforms only".into(),
            ))
        }
    };
    let config = json!({
        "command": "transform",
        "base": measure_json(&rho),
        "c": args.c,
        "kind": format!("{:?}", args.kind).to_lowercase(),
        "u": complex_json(u),
        "tol": args.tol,
        "contour": format!("{:?}", args.contour).to_lowercase(),
        "delta": args.delta,
        "threads": threads,
    });
    let mut out = open_out(&args.out, stdout)?;
    write_config_line(&mut out, &config)?;
    write_value_rows(&mut out, &[(u, r)])?;
    out.flush()?;
    Ok(())
}

fn sampling_config(s: &SamplingArgs) -> Value {
    json!({ "samples": s.samples, "seed": s.seed, "shards": s.shards })
}

fn run_dp_mean(args: &DpMeanArgs, threads: usize, stdout: &mut dyn Write) -> Result<()> {
    let rho = resolve_measure(&args.measure)?;
    let s = &args.sampling;
    let sample = random_mean_samples(&DPConfig::new(
        rho.clone(),
        args.c,
        s.samples,
        s.seed,
        s.shards,
    )?)?;
    let config = json!({
        "command": "dp-mean",
        "base": measure_json(&rho),
        "c": args.c,
        "sampling": sampling_config(s),
        "threads": threads,
    });
    let mut out = open_out(&args.out, stdout)?;
    write_config_line(&mut out, &config)?;
    writeln!(out, "sample")?;
    for x in &sample.values {
        writeln!(out, "{x}")?;
    }
    out.flush()?;
    Ok(())
}

fn run_mk_check(args: &MkCheckArgs, threads: usize, stdout: &mut dyn Write) -> Result<()> {
    let rho = resolve_measure(&args.measure)?;
    let grid = parse_list(&args.z, "z", parse_complex)?;
    let s = &args.sampling;
    let sample = random_mean_samples(&DPConfig::new(
        rho.clone(),
        args.c,
        s.samples,
        s.seed,
        s.shards,
    )?)?;
    let report = mk_residual(&rho, args.c, &sample, &grid)?;
    let config = json!({
        "command": "mk-check",
        "base": measure_json(&rho),
        "c": args.c,
        "sampling": sampling_config(s),
        "z": grid.iter().map(|&z| complex_json(z)).collect::<Vec<_>>(),
        "threads": threads,
    });
    let body = json!({
        "max_residual": report.max_residual,
        "within_3_sigma": report.within_band(3.0, 1e-12),
        "per_point": report.per_point.iter().map(|p| json!({
            "z": complex_json(p.z),
            "mc_lhs": complex_json(p.lhs),
            "exp_rhs": complex_json(p.rhs),
            "residual": p.residual,
            "sigma": p.sigma,
        })).collect::<Vec<_>>(),
    });
    let mut out = open_out(&args.out, stdout)?;
    write_json(&mut out, config, body)?;
    out.flush()?;
    Ok(())
}

fn run_mk_moments(args: &MkMomentsArgs, threads: usize, stdout: &mut dyn Write) -> Result<()> {
    let rho = resolve_measure(&args.measure)?;
    let m = rho.moments(args.n_max)?;
    let m_prime = mk_moments(&m, args.c, args.n_max)?;
    let kappa = c_cumulants(&m_prime)?;
    let config = json!({
        "command": "mk-moments",
        "base": measure_json(&rho),
        "c": args.c,
        "n_max": args.n_max,
        "threads": threads,
    });
    let body = json!({
        "moments": m.values(),
        "image_moments": m_prime.values(),
        "kappa": kappa.kappa(),
        "kappa_tilde": kappa.kappa_tilde(),
        "hankel_min_eig": m_prime.hankel_min_eigenvalue(),
    });
    let mut out = open_out(&args.out, stdout)?;
    write_json(&mut out, config, body)?;
    out.flush()?;
    Ok(())
}

fn run_conjecture(args: &ConjectureArgs, threads: usize, stdout: &mut dyn Write) -> Result<()> {
    let rho1 = resolve_pair(&args.base1, &args.points1, "1")?;
    let rho2 = resolve_pair(&args.base2, &args.points2, "2")?;
    let report = conjecture_probe(&rho1, &rho2, args.c, args.n_max)?;
    let config = json!({
        "command": "conjecture",
        "rho1": measure_json(&rho1),
        "rho2": measure_json(&rho2),
        "c": args.c,
        "n_max": args.n_max,
        "threads": threads,
    });
    let body = json!({
        "mu_moments": report.mu_moments.values(),
        "hankel_min_eig": report.hankel_min_eig,
        "verdict": report.verdict.label(),
        "ill_conditioned": report.ill_conditioned,
    });
    let mut out = open_out(&args.out, stdout)?;
    write_json(&mut out, config, body)?;
    out.flush()?;
    Ok(())
}

fn run_sweep(
    args: &SweepArgs,
    threads: usize,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<()> {
    let target: Target = args.target.parse()?;
    let regime: Regime = args.regime.parse()?;
    let schedule = match regime {
        Regime::Classical => RegimeSchedule::classical(),
        Regime::HighTemperature => RegimeSchedule::high_temperature(args.c)?,
        Regime::Free => RegimeSchedule::free(),
    };
    let n_list = parse_list(&args.n, "N", |x| {
        x.parse::<usize>()
            .map_err(|_| Error::InvalidArgument(format!("--N: cannot parse `{x}` as a count")))
    })?;
    let u_grid = parse_list(&args.u, "u", parse_complex)?;
    let opts = SweepOptions {
        tol: args.tol,
        check_identity: false,
        mc_samples: args.mc_samples,
        seed: args.seed,
        shards: 8,
    };
    let cache = EvalCache::new();
    let report = match (args.kind, regime) {
        (TransformKind::Mellin, _) => {
            mellin_sweep(&target, &u_grid, &n_list, &schedule, &opts, &cache)?
        }
        (TransformKind::Fourier, Regime::HighTemperature) => {
            high_temp_sweep(&target, &u_grid, &n_list, args.c, &opts, &cache)?
        }
        (TransformKind::Fourier, Regime::Classical) => {
            classical_sweep(&target, &u_grid, &n_list, &opts, &cache)?
        }
        (TransformKind::Fourier, Regime::Free) => {
            return Err(Error::InvalidArgument(
                "the free regime has no implemented limit; use classical or high-temp".into(),
            ))
        }
    };
    let config = json!({
        "command": "sweep",
        "target": target.to_string(),
        "regime": regime,
        "c": if regime == Regime::HighTemperature { Some(args.c) } else { None },
        "N": n_list,
        "u": u_grid.iter().map(|&u| complex_json(u)).collect::<Vec<_>>(),
        "kind": format!("{:?}", args.kind).to_lowercase(),
        "tol": args.tol,
        "mc_samples": args.mc_samples,
        "seed": args.seed,
        "target_kind": report.target_kind,
        "threads": threads,
    });
    let mut out = open_out(&args.out, stdout)?;
    write_config_line(&mut out, &config)?;
    report.write_csv(&mut out)?;
    out.flush()?;
    for (i, u) in report.u_grid.iter().enumerate() {
        writeln!(
            stderr,
            "u = {u}: spearman(N, error) = {:.3}",
            report.trend(i)
        )?;
    }
    for row in report.rows.iter().filter(|r| r.mc.is_some()) {
        let mc = row.mc.expect("filtered");
        writeln!(
            stderr,
            "N = {}, u = {}: Monte Carlo reference {} ± {:.2e}, |value − MC| = {:.3e}",
            row.n, row.u, mc.value, mc.std_error, mc.abs_err
        )?;
    }
    Ok(())
}

fn run_selftest(args: &SelftestArgs, stdout: &mut dyn Write) -> Result<bool> {
    let tol = args.tol;
    let mut all = true;
    let mut check = |name: &str, err: f64, bound: f64, out: &mut dyn Write| -> Result<()> {
        let ok = err <= bound;
        all &= ok;
        writeln!(
            out,
            "{} {name}: error {err:.3e} (bound {bound:.1e})",
            if ok { "PASS" } else { "FAIL" }
        )?;
        Ok(())
    };
    let c = |re, im| Complex64::new(re, im);
    let e = std::f64::consts::E;

    let mut worst: f64 = 0.0;
    for &cc in &[0.5, 1.0, 2.5] {
        for &u in &[
            c(1.0, 0.0),
            c(-1.0, 0.0),
            c(0.0, 2.0),
            c(0.0, -2.0),
            c(1.0, 1.0),
        ] {
            for &x in &[-1.0, 0.0, 0.7] {
                worst = worst.max((gamma_identity_check(cc, u, x, tol)? - (u * x).exp()).norm());
                if x > 0.0 && u.re > 0.0 {
                    worst =
                        worst.max((beta_identity_check(cc, u, x, tol)? - c(x, 0.0).powc(u)).norm());
                }
            }
        }
    }
    check("gamma/beta contour identities", worst, 10.0 * tol, stdout)?;

    let mut worst: f64 = 0.0;
    let pts = [0.0, 1.0, 2.0, 3.0];
    for &u in &[
        c(1.0, 0.0),
        c(-2.0, 0.0),
        c(0.0, 3.0),
        c(0.0, -3.0),
        c(1.0, 2.0),
    ] {
        let got = bessel_rank_one(&BesselQuery::new(&pts, u, 1.0, tol)?)?.value;
        worst = worst.max((got - bessel_theta_one(&pts, u)?).norm());
    }
    check("bessel vs theta=1 residues", worst, 10.0 * tol, stdout)?;

    let ho_pts = [1.0, 2.0, 4.0];
    let mut worst: f64 = 0.0;
    for &u in &[c(1.0, 0.0), c(2.0, 0.0), c(1.5, 0.5)] {
        let got = ho_rank_one(&HOQuery::new(&ho_pts, u, 1.0, tol)?)?.value;
        worst = worst.max((got - ho_theta_one(&ho_pts, u)?).norm());
    }
    check(
        "heckman-opdam vs theta=1 residues",
        worst,
        10.0 * tol,
        stdout,
    )?;

    let half = DiscreteMeasure::uniform(&[0.0, 1.0])?;
    let err = (fourier_rho_c(&half, 2.0, c(1.0, 0.0), tol)?.value - (e - 1.0)).norm();
    check(
        "fourier transform of uniform random mean",
        err,
        10.0 * tol,
        stdout,
    )?;
    let one_two = DiscreteMeasure::uniform(&[1.0, 2.0])?;
    let err = (mellin_rho_c(&one_two, 2.0, c(2.0, 0.0), tol)?.value - 7.0 / 3.0).norm();
    check(
        "mellin transform of uniform random mean",
        err,
        10.0 * tol,
        stdout,
    )?;

    let m = mk_moments(&half.moments(8)?, 2.0, 8)?;
    let err = (1..=8)
        .map(|n| (m.get(n) - 1.0 / (n as f64 + 1.0)).abs())
        .fold(0.0, f64::max);
    check("moment recursion", err, 1e-12, stdout)?;
    Ok(all)
}

fn physical_cores() -> usize {
    num_cpus::get_physical().max(1)
}

fn resolve_threads(flag: Option<usize>) -> Result<usize> {
    let from_env = match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => Some(v.trim().parse::<usize>().map_err(|_| {
            Error::InvalidArgument(format!("{THREADS_ENV}={v} is not a thread count"))
        })?),
        _ => None,
    };
    let threads = from_env.or(flag).unwrap_or_else(physical_cores);
    if threads == 0 {
        return Err(Error::InvalidArgument(
            "thread count must be at least 1".into(),
        ));
    }
    Ok(threads)
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let threads = resolve_threads(cli.threads)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {threads} threads: {e}")))?;
    // Output is buffered so the closure stays `Send`.
    let (code, out, err) = pool.install(|| {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = match &cli.command {
            Command::Bessel(a) => run_function(a, false, threads, &mut out).map(|_| 0),
            Command::Ho(a) => run_function(a, true, threads, &mut out).map(|_| 0),
            Command::Transform(a) => run_transform(a, threads, &mut out).map(|_| 0),
            Command::DpMean(a) => run_dp_mean(a, threads, &mut out).map(|_| 0),
            Command::MkCheck(a) => run_mk_check(a, threads, &mut out).map(|_| 0),
            Command::MkMoments(a) => run_mk_moments(a, threads, &mut out).map(|_| 0),
            Command::Conjecture(a) => run_conjecture(a, threads, &mut out).map(|_| 0),
            Command::Sweep(a) => run_sweep(a, threads, &mut out, &mut err).map(|_| 0),
            Command::Selftest(a) => run_selftest(a, &mut out).map(|ok| if ok { 0 } else { 1 }),
        };
        (code, out, err)
    });
    stdout.write_all(&out)?;
    stderr.write_all(&err)?;
    code
}

/// Runs the CLI on `argv` (including the program name) and returns the exit
/// code: 0 success, 1 numerical failure, 2 invalid arguments or input.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{rendered}")
            } else {
                write!(stderr, "{rendered}")
            };
            return code;
        }
    };
    log::set_max_level(match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    });
    match dispatch(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_numerical() {
                1
            } else {
                2
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_parsing() {
        let c = |re, im| Complex64::new(re, im);
        assert_eq!(parse_complex("1").unwrap(), c(1.0, 0.0));
        assert_eq!(parse_complex("-2.5").unwrap(), c(-2.5, 0.0));
        assert_eq!(parse_complex("3i").unwrap(), c(0.0, 3.0));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("i").unwrap(), c(0.0, 1.0));
        assert_eq!(parse_complex("1+2i").unwrap(), c(1.0, 2.0));
        assert_eq!(parse_complex("1 - i").unwrap(), c(1.0, -1.0));
        assert_eq!(parse_complex("1e-3-4.5e2i").unwrap(), c(1e-3, -450.0));
        assert_eq!(parse_complex("-1e+2+1e-1i").unwrap(), c(-100.0, 0.1));
        for bad in ["", "abc", "1+", "2ii", "1+xi"] {
            assert!(parse_complex(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn lists() {
        assert_eq!(
            parse_reals("0, 1,2", "points").unwrap(),
            vec![0.0, 1.0, 2.0]
        );
        assert!(parse_reals("", "points").is_err());
        assert!(parse_reals("0,x", "points").is_err());
    }
}
