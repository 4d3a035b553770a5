//! Globally adaptive 15-point Gauss–Kronrod quadrature along the pieces of a
//! contour. Panels are refined worst-first; the final sum runs over panels in
//! contour order so that results are bit-stable for a given tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::{HankelContour, LineContour};
use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_TAIL: f64 = 1e8;

/// Outcome of a contour integral (1/2πi)∮ f dz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: Complex64,
    pub abs_error_estimate: f64,
    pub n_evals: usize,
    /// Estimated magnitude of the discarded tails.
    pub truncation_bound: f64,
}

impl QuadratureResult {
    /// Multiplies value and error bounds by a constant prefactor.
    pub fn scaled(self, factor: Complex64) -> Self {
        let s = factor.norm();
        Self {
            value: self.value * factor,
            abs_error_estimate: self.abs_error_estimate * s,
            n_evals: self.n_evals,
            truncation_bound: self.truncation_bound * s,
        }
    }

    /// Total error budget: quadrature estimate plus truncated tails.
    pub fn error_bound(&self) -> f64 {
        self.abs_error_estimate + self.truncation_bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    /// Absolute tolerance on (1/2πi)∮ f dz.
    pub tol: f64,
    pub max_evals: usize,
    /// Width of the panels the contour pieces are first cut into.
    pub initial_panel: f64,
}

impl QuadOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            max_evals: 4_000_000,
            initial_panel: 1.0,
        }
    }
}

/// A straight piece z(t) = origin + direction·t, t ∈ [0, length],
/// contributing weight·∫ f(z(t)) dt.
#[derive(Debug, Clone, Copy)]
struct Piece {
    origin: Complex64,
    direction: Complex64,
    weight: Complex64,
    length: f64,
}

impl Piece {
    fn at(&self, t: f64) -> Complex64 {
        self.origin + self.direction * t
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    piece: usize,
    a: f64,
    b: f64,
    value: Complex64,
    err: f64,
}

struct ByError(Panel);

impl PartialEq for ByError {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for ByError {}
impl PartialOrd for ByError {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for ByError {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .err
            .total_cmp(&other.0.err)
            .then_with(|| other.0.piece.cmp(&self.0.piece))
            .then_with(|| other.0.a.total_cmp(&self.0.a))
    }
}

struct Engine<'f, F: Fn(Complex64) -> Complex64> {
    f: &'f F,
    evals: usize,
}

impl<'f, F: Fn(Complex64) -> Complex64> Engine<'f, F> {
    fn eval(&mut self, z: Complex64) -> Result<Complex64> {
        self.evals += 1;
        let v = (self.f)(z);
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteSample { re: z.re, im: z.im })
        }
    }

    /// Gauss–Kronrod 7/15 on [a, b] of the piece, with the QUADPACK error
    /// rescaling.
    fn gk15(&mut self, piece: &Piece, index: usize, a: f64, b: f64) -> Result<Panel> {
        let center = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let fc = self.eval(piece.at(center))?;
        let mut kronrod = fc * WGK[7];
        let mut gauss = fc * WG[3];
        let mut res_abs = WGK[7] * fc.norm();
        let mut fv1 = [Complex64::new(0.0, 0.0); 7];
        let mut fv2 = [Complex64::new(0.0, 0.0); 7];
        for j in 0..7 {
            let dx = half * XGK[j];
            let f1 = self.eval(piece.at(center - dx))?;
            let f2 = self.eval(piece.at(center + dx))?;
            fv1[j] = f1;
            fv2[j] = f2;
            kronrod += (f1 + f2) * WGK[j];
            res_abs += WGK[j] * (f1.norm() + f2.norm());
            if j % 2 == 1 {
                gauss += (f1 + f2) * WG[j / 2];
            }
        }
        let mean = kronrod * 0.5;
        let mut res_asc = WGK[7] * (fc - mean).norm();
        for j in 0..7 {
            res_asc += WGK[j] * ((fv1[j] - mean).norm() + (fv2[j] - mean).norm());
        }
        let scale = half.abs() * piece.weight.norm();
        let mut err = (kronrod - gauss).norm() * scale;
        let res_abs = res_abs * scale;
        let res_asc = res_asc * scale;
        if res_asc != 0.0 && err != 0.0 {
            err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
        }
        if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            err = err.max(50.0 * f64::EPSILON * res_abs);
        }
        Ok(Panel {
            piece: index,
            a,
            b,
            value: kronrod * half * piece.weight,
            err,
        })
    }

    fn run(
        &mut self,
        pieces: &[Piece],
        opts: &QuadOptions,
        tail_bound: f64,
    ) -> Result<QuadratureResult> {
        let mut done: Vec<Panel> = Vec::new();
        let mut heap = BinaryHeap::new();
        for (index, piece) in pieces.iter().enumerate() {
            let n = ((piece.length / opts.initial_panel).ceil() as usize).clamp(1, 512);
            let step = piece.length / n as f64;
            for k in 0..n {
                let a = k as f64 * step;
                let b = if k + 1 == n { piece.length } else { a + step };
                heap.push(ByError(self.gk15(piece, index, a, b)?));
            }
        }

        let mut total_err: f64 = heap.iter().map(|p| p.0.err).sum();
        while total_err > opts.tol {
            let Some(ByError(worst)) = heap.pop() else {
                break;
            };
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a
                || mid >= worst.b
                || (worst.b - worst.a) < 1e-13 * worst.a.abs().max(1.0)
            {
                done.push(worst);
                continue;
            }
            if self.evals + 30 > opts.max_evals {
                heap.push(ByError(worst));
                let value = assemble(&done, &heap);
                return Err(Error::NonConvergence(format!(
                    "evaluation budget {} exhausted with error estimate {total_err:.3e} (value {value})",
                    opts.max_evals
                )));
            }
            let piece = &pieces[worst.piece];
            let left = self.gk15(piece, worst.piece, worst.a, mid)?;
            let right = self.gk15(piece, worst.piece, mid, worst.b)?;
            total_err += left.err + right.err - worst.err;
            heap.push(ByError(left));
            heap.push(ByError(right));
            // guard against drift from the running update
            if total_err <= opts.tol {
                total_err = heap
                    .iter()
                    .map(|p| p.0.err)
                    .chain(done.iter().map(|p| p.err))
                    .sum();
            }
        }
        let total_err: f64 = heap
            .iter()
            .map(|p| p.0.err)
            .chain(done.iter().map(|p| p.err))
            .sum();
        if total_err > opts.tol {
            return Err(Error::NonConvergence(format!(
                "panels cannot be refined further; error estimate {total_err:.3e} exceeds {:.3e}",
                opts.tol
            )));
        }
        let scale = 1.0 / (2.0 * PI);
        Ok(QuadratureResult {
            value: assemble(&done, &heap) * Complex64::new(0.0, -scale),
            abs_error_estimate: total_err * scale,
            n_evals: self.evals,
            truncation_bound: tail_bound * scale,
        })
    }

    /// Tail mass beyond t = len on a ray, estimated from the local decay
    /// rate of |f|: |f(len)| / λ with λ = −d ln|f| / dt.
    fn tail_estimate(&mut self, piece: &Piece, len: f64) -> Result<f64> {
        let h = (0.1 * len).max(1.0).min(len);
        let g_far = self.eval(piece.at(len))?.norm() * piece.weight.norm();
        if g_far == 0.0 {
            return Ok(0.0);
        }
        let g_near = self.eval(piece.at(len - h))?.norm() * piece.weight.norm();
        let rate = (g_near / g_far).ln() / h;
        Ok(if rate > 0.0 {
            g_far / rate
        } else {
            f64::INFINITY
        })
    }
}

fn assemble(done: &[Panel], heap: &BinaryHeap<ByError>) -> Complex64 {
    let mut panels: Vec<&Panel> = done.iter().chain(heap.iter().map(|p| &p.0)).collect();
    panels.sort_by(|x, y| x.piece.cmp(&y.piece).then(x.a.total_cmp(&y.a)));
    panels
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, p| acc + p.value)
}

/// (1/2πi)∮ f dz over the Hankel loop with the default options.
pub fn integrate<F>(f: F, contour: &HankelContour, tol: f64) -> Result<QuadratureResult>
where
    F: Fn(Complex64) -> Complex64,
{
    integrate_with(f, contour, &QuadOptions::new(tol))
}

/// (1/2πi)∮ f dz over the Hankel loop. Rays start at the initial tail length
/// and are doubled until the estimated discarded mass on each falls below
/// tol/10.
pub fn integrate_with<F>(
    f: F,
    contour: &HankelContour,
    opts: &QuadOptions,
) -> Result<QuadratureResult>
where
    F: Fn(Complex64) -> Complex64,
{
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let r = contour.rotation.as_complex();
    let (x, h) = (contour.stem_x, contour.half_height);
    let lower_corner = contour.to_plane(Complex64::new(x, -h));
    let upper_corner = contour.to_plane(Complex64::new(x, h));
    let mut engine = Engine { f: &f, evals: 0 };

    // Incoming ray is parameterised from the stem outward, hence weight +r.
    let mut lower = Piece {
        origin: lower_corner,
        direction: -r,
        weight: r,
        length: x + contour.tail_length,
    };
    let stem = Piece {
        origin: lower_corner,
        direction: r * Complex64::i(),
        weight: r * Complex64::i(),
        length: 2.0 * h,
    };
    let mut upper = Piece {
        origin: upper_corner,
        direction: -r,
        weight: -r,
        length: x + contour.tail_length,
    };

    let per_ray = opts.tol / 10.0;
    let mut tail_bound = 0.0;
    for ray in [&mut lower, &mut upper] {
        let mut bound = engine.tail_estimate(ray, ray.length)?;
        while bound > per_ray {
            if ray.length > MAX_TAIL {
                return Err(Error::NonConvergence(format!(
                    "integrand does not decay along the rays (tail estimate {bound:.3e} at length {:.3e})",
                    ray.length
                )));
            }
            ray.length *= 2.0;
            bound = match engine.tail_estimate(ray, ray.length) {
                Err(Error::NonFiniteSample { .. }) => f64::INFINITY,
                other => other?,
            };
        }
        tail_bound += bound;
    }

    let quad_opts = QuadOptions {
        tol: opts.tol * 0.8,
        ..*opts
    };
    engine.run(&[lower, stem, upper], &quad_opts, tail_bound)
}

/// (1/2πi)∫ f dz along the horizontal line of `line`, for integrands of the
/// form e^{itz}·g(z) with g slowly varying at infinity. The window [−L, L]
/// is integrated directly and the two tails by the first three terms of
/// their integration-by-parts expansion; the window grows until the size of
/// the last term falls below tol/10.
pub fn integrate_line<F>(f: F, line: &LineContour, tol: f64) -> Result<QuadratureResult>
where
    F: Fn(Complex64) -> Complex64,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let t = line.frequency;
    let y0 = line.imag_offset();
    let origin = Complex64::new(line.center, y0);
    let it = Complex64::new(0.0, t);
    let mut engine = Engine { f: &f, evals: 0 };

    // g(x) = f(origin + x)·e^{−itx}
    let g = |engine: &mut Engine<F>, x: f64| -> Result<Complex64> {
        let v = engine.eval(origin + x)?;
        Ok(v * Complex64::new(0.0, -t * x).exp())
    };
    let mut window = line.tail_length;
    let (tails, bound) = loop {
        let mut total = Complex64::new(0.0, 0.0);
        let mut last_term = 0.0;
        for side in [1.0, -1.0] {
            let x = side * window;
            let step = 1e-2 * window;
            let g0 = g(&mut engine, x)?;
            let gp = g(&mut engine, x + step)?;
            let gm = g(&mut engine, x - step)?;
            let d1 = (gp - gm) / (2.0 * step);
            let d2 = (gp - g0 * 2.0 + gm) / (step * step);
            // ∫_L^∞ e^{itx} g = −e^{itL}(g/(it) − g'/(it)² + g''/(it)³ − …)
            // ∫_{−∞}^{−L} e^{itx} g = +e^{−itL}(same series at −L)
            let series = g0 / it - d1 / (it * it) + d2 / (it * it * it);
            let phase = Complex64::new(0.0, t * x).exp();
            total += -side * phase * series;
            last_term += (d2 / (it * it * it)).norm();
        }
        if last_term <= tol / 10.0 {
            break (total, last_term);
        }
        if window > MAX_TAIL {
            return Err(Error::NonConvergence(format!(
                "line integrand decays too slowly (tail term {last_term:.3e} at half-width {window:.3e})"
            )));
        }
        window *= 2.0;
    };

    let orientation = line.orientation();
    let pieces = [Piece {
        origin: origin - window,
        direction: Complex64::new(1.0, 0.0),
        weight: Complex64::new(orientation, 0.0),
        length: 2.0 * window,
    }];
    let body = engine.run(&pieces, &QuadOptions::new(tol * 0.8), 0.0)?;
    let scale = Complex64::new(0.0, -1.0 / (2.0 * PI));
    Ok(QuadratureResult {
        value: body.value + tails * orientation * scale,
        abs_error_estimate: body.abs_error_estimate,
        n_evals: body.n_evals,
        truncation_bound: bound / (2.0 * PI),
    })
}
