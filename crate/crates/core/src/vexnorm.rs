//! Modulars and Luxemburg norms of simple test functions in `L^{p(.)}[0, 1]`.
//!
//! A test function is reduced to pieces on which `|f|` is either a constant
//! `c` or `c/x`. Each piece is split along the flat and monotone segments of
//! the exponent; flat segments are integrated in closed form, monotone ones
//! by log-domain quadrature in the branch chart, and unresolved residue is
//! bounded from above and folded into the result.

use crate::error::{Result, VexError};
use crate::exponents::{decompose, Decomp, ExponentSpec, Segment, Shape};
use crate::integrate::{adaptive_log, chart_base, exp_cuts, Interval, Point, CMP_DEPTH, DEFAULT_DEPTH, MAX_CHANNELS};
use crate::logscale::{ln_sum_exp, softplus, LogReal};

/// Default tolerance on `ln(lambda)`.
pub const DEFAULT_NORM_TOL: f64 = 1e-10;
const QUAD_TOL: f64 = 1e-12;
const MAX_BISECT: usize = 200;
/// Segments whose contribution is bounded this far (in ln) below the running
/// total are bounded rather than integrated.
const NEGLIGIBLE_LN: f64 = 80.0;

#[derive(Clone, Debug, PartialEq)]
pub enum TestFunction {
    /// Indicator of an interval.
    Chi(Interval),
    /// `x^{-1}` times the indicator of an interval.
    InvX(Interval),
    /// The constant `c` on [0, 1].
    Const(LogReal),
    /// Piecewise constant on `n` equal cells of [0, 1].
    Grid(Vec<f64>),
    Scaled(LogReal, Box<TestFunction>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Profile {
    Level,
    InvX,
}

#[derive(Clone, Copy, Debug)]
struct Piece {
    q: Interval,
    ln_c: f64,
    profile: Profile,
}

impl TestFunction {
    pub fn scaled(self, c: LogReal) -> Self {
        TestFunction::Scaled(c.abs(), Box::new(self))
    }

    fn pieces(&self) -> Result<Vec<Piece>> {
        let mut out = Vec::new();
        self.collect(0.0, &mut out)?;
        out.retain(|p| p.ln_c > f64::NEG_INFINITY);
        Ok(out)
    }

    fn collect(&self, ln_c: f64, out: &mut Vec<Piece>) -> Result<()> {
        match self {
            TestFunction::Chi(q) => out.push(Piece { q: *q, ln_c, profile: Profile::Level }),
            TestFunction::InvX(q) => out.push(Piece { q: *q, ln_c, profile: Profile::InvX }),
            TestFunction::Const(c) => out.push(Piece { q: Interval::unit(), ln_c: ln_c + c.abs().ln(), profile: Profile::Level }),
            TestFunction::Grid(values) => {
                let n = values.len();
                for (i, v) in values.iter().enumerate() {
                    if !v.is_finite() {
                        return Err(VexError::NonFinite(*v));
                    }
                    let lo = if i == 0 { Point::zero() } else { Point::from_f64(i as f64 / n as f64)? };
                    let hi = Point::from_f64((i + 1) as f64 / n as f64)?;
                    let q = Interval::new(lo, hi)?;
                    out.push(Piece { q, ln_c: ln_c + v.abs().ln(), profile: Profile::Level });
                }
            }
            TestFunction::Scaled(c, f) => f.collect(ln_c + c.abs().ln(), out)?,
        }
        Ok(())
    }
}

/// `ln |expm1(z)|`.
fn ln_abs_expm1(z: f64) -> f64 {
    if z > 30.0 {
        z + (-(-z).exp()).ln_1p()
    } else {
        z.exp_m1().abs().ln()
    }
}

/// `ln int_{x1}^{x1+len} x^{-p} dx`.
fn ln_int_pow(p: f64, ln_x1: f64, ln_len: f64) -> f64 {
    let r = softplus(ln_len - ln_x1);
    if p == 1.0 {
        return r.ln();
    }
    let z = (1.0 - p) * r;
    (1.0 - p) * ln_x1 + ln_abs_expm1(z) - (1.0 - p).abs().ln()
}

#[derive(Clone, Debug)]
struct Prepared {
    flats: Vec<(f64, f64, Profile, f64, f64)>,
    varying: Vec<(Segment, f64, Profile)>,
    residuals: Vec<(f64, f64, f64, f64, Profile, f64)>,
    divergent: bool,
    p_lo: f64,
    p_hi: f64,
}

/// Value of a modular: integrated part and an upper bound on what was not integrated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModularValue {
    pub resolved: LogReal,
    pub tail_bound: LogReal,
}

impl ModularValue {
    pub fn total(&self) -> LogReal {
        self.resolved + self.tail_bound
    }
}

impl Prepared {
    fn new(f: &TestFunction, spec: &ExponentSpec) -> Result<Self> {
        if !spec.is_exponent() {
            return Err(VexError::Domain(format!("{spec} is not an exponent with p >= 1")));
        }
        let pieces = f.pieces()?;
        if pieces.is_empty() {
            return Err(VexError::Domain("test function vanishes a.e.".into()));
        }
        let mut out = Prepared {
            flats: Vec::new(),
            varying: Vec::new(),
            residuals: Vec::new(),
            divergent: false,
            p_lo: f64::INFINITY,
            p_hi: f64::NEG_INFINITY,
        };
        for piece in pieces {
            if piece.profile == Profile::InvX && piece.q.touches_zero() {
                out.divergent = true;
                continue;
            }
            let d: Decomp = decompose(spec, &piece.q, DEFAULT_DEPTH)?;
            let (lo, hi) = d.value_bounds();
            out.p_lo = out.p_lo.min(lo);
            out.p_hi = out.p_hi.max(hi);
            for s in d.segments {
                match s.shape {
                    Shape::Flat(p) => {
                        let ln_m = s.ln_measure();
                        let ln_x1 = s.x_lower().ln();
                        out.flats.push((p, piece.ln_c, piece.profile, ln_m, ln_x1));
                    }
                    Shape::Varying => out.varying.push((s, piece.ln_c, piece.profile)),
                }
            }
            for r in d.residuals {
                if r.measure.is_zero() {
                    continue;
                }
                out.residuals.push((r.measure.ln(), r.lo, r.hi, piece.ln_c, piece.profile, piece.q.lo.x().ln()));
            }
        }
        Ok(out)
    }

    fn eval(&self, ln_lambda: f64, tol: f64) -> Result<ModularValue> {
        if self.divergent {
            return Ok(ModularValue { resolved: LogReal::INFINITY, tail_bound: LogReal::ZERO });
        }
        let mut terms: Vec<f64> = self
            .flats
            .iter()
            .map(|&(p, ln_c, profile, ln_m, ln_x1)| match profile {
                Profile::Level => p * (ln_c - ln_lambda) + ln_m,
                Profile::InvX => p * (ln_c - ln_lambda) + ln_int_pow(p, ln_x1, ln_m),
            })
            .collect();
        let mut tail = Vec::new();
        for &(ln_m, lo, hi, ln_c, profile, ln_xlo) in &self.residuals {
            let k = ln_c - ln_lambda - if profile == Profile::InvX { ln_xlo } else { 0.0 };
            tail.push((lo * k).max(hi * k) + ln_m);
        }
        let mut order: Vec<(f64, usize)> = self
            .varying
            .iter()
            .enumerate()
            .map(|(i, (s, ln_c, profile))| {
                let (a, b) = s.value_range();
                let k = ln_c - ln_lambda - if *profile == Profile::InvX { s.x_lower().ln() } else { 0.0 };
                ((a * k).max(b * k) + s.ln_measure(), i)
            })
            .collect();
        order.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut running = ln_sum_exp(&terms);
        for (bound, i) in order {
            if bound < running - NEGLIGIBLE_LN {
                tail.push(bound);
                continue;
            }
            let (s, ln_c, profile) = &self.varying[i];
            let v = integrate_power(s, *ln_c - ln_lambda, *profile, tol)?;
            terms.push(v);
            running = ln_sum_exp(&terms);
        }
        Ok(ModularValue { resolved: LogReal::from_ln(running), tail_bound: LogReal::from_ln(ln_sum_exp(&tail)) })
    }
}

/// `ln int_seg (c/lambda)^p [x^{-p}] dx` with `k = ln(c/lambda)`.
fn integrate_power(s: &Segment, k: f64, profile: Profile, tol: f64) -> Result<f64> {
    let (v0, v1) = s.v_range();
    let f = |t: f64, out: &mut [f64; MAX_CHANNELS]| {
        let p = s.value_v(t);
        let shift = if profile == Profile::InvX { s.x_at(s.coord_of_v(v0 + t)).ln() } else { 0.0 };
        out[0] = p * (k - shift) - t;
    };
    let q = adaptive_log(&f, 1, &exp_cuts(v1 - v0), tol)?;
    Ok(q.total[0] - v0 - chart_base(s.chart.region()))
}

/// `int (|f|/lambda)^{p(x)} dx`, including the bound on unresolved parts.
/// Divergent modulars come back as [`LogReal::INFINITY`].
pub fn modular(f: &TestFunction, spec: &ExponentSpec, lambda: LogReal) -> Result<LogReal> {
    Ok(modular_parts(f, spec, lambda)?.total())
}

pub fn modular_parts(f: &TestFunction, spec: &ExponentSpec, lambda: LogReal) -> Result<ModularValue> {
    if !lambda.is_positive() {
        return Err(VexError::Domain("lambda must be positive".into()));
    }
    Prepared::new(f, spec)?.eval(lambda.ln(), QUAD_TOL)
}

/// `inf{lambda > 0 : modular(f/lambda) <= 1}` by bisection on `ln(lambda)`.
pub fn luxemburg_norm(f: &TestFunction, spec: &ExponentSpec, tol: f64) -> Result<LogReal> {
    if !(tol > 0.0) {
        return Err(VexError::Domain(format!("tolerance {tol} must be positive")));
    }
    let prep = Prepared::new(f, spec)?;
    if prep.divergent {
        return Ok(LogReal::INFINITY);
    }
    let g = |l: f64| -> Result<f64> { Ok(prep.eval(l, QUAD_TOL)?.total().ln()) };
    let p_mid = 0.5 * (prep.p_lo + prep.p_hi);
    let g0 = g(0.0)?;
    let guess = g0 / p_mid;
    let (mut lo, mut hi) = (guess, guess);
    let mut step = 0.5;
    let (mut g_lo, mut g_hi) = (g(lo)?, g(hi)?);
    let mut expansions = 0;
    while g_lo < 0.0 || g_hi > 0.0 {
        if expansions > 80 {
            return Err(VexError::Bracketing { lo, hi });
        }
        if g_lo < 0.0 {
            lo -= step;
            g_lo = g(lo)?;
        }
        if g_hi > 0.0 {
            hi += step;
            g_hi = g(hi)?;
        }
        step *= 2.0;
        expansions += 1;
    }
    let width = tol / prep.p_hi.max(1.0);
    for _ in 0..MAX_BISECT {
        if hi - lo <= width {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(LogReal::from_ln(0.5 * (lo + hi)))
}

/// `||chi_Q||_{p(.)}`.
pub fn chi_norm(spec: &ExponentSpec, q: &Interval, tol: f64) -> Result<LogReal> {
    luxemburg_norm(&TestFunction::Chi(*q), spec, tol)
}

/// Flat pieces of the block exponents sit exactly at one of these levels of `1/p`.
const BLOCK_LEVELS: [f64; 3] = [0.5, 63.0 / 64.0, 1.0 / 64.0];

fn flat_inv_p(s: &Segment, p: f64) -> f64 {
    if s.spec.is_block() {
        BLOCK_LEVELS.into_iter().min_by(|a, b| (1.0 / a - p).abs().total_cmp(&(1.0 / b - p).abs())).expect("nonempty")
    } else {
        1.0 / p
    }
}

fn dev_parts(x: [f64; 3], m0: [f64; 3]) -> f64 {
    (x[0] - m0[0]) + ((x[1] - m0[1]) + (x[2] - m0[2]))
}

/// The mean of `1/p` over an interval split as `m0 + delta`, where `m0` is the
/// exact value on the heaviest piece and `delta` collects the signed
/// deviations, together with what is needed to evaluate the modular of
/// `chi_Q` at `lambda = |Q|^{m0 + delta} e^{rho}` without forming `ln lambda`.
struct MeanSplit {
    ln_len: f64,
    /// `m0` in parts, see [`Segment::inv_p_parts`].
    m0: [f64; 3],
    delta: f64,
    /// `(ln(|piece|/|Q|), p, 1/p - m0)`.
    flats: Vec<(f64, f64, f64)>,
    /// `(segment, ln(|segment|/|Q|))`.
    varying: Vec<(Segment, f64)>,
    /// `(ln(|part|/|Q|), p_lo, p_hi)`.
    residuals: Vec<(f64, f64, f64)>,
}

impl MeanSplit {
    fn new(spec: &ExponentSpec, q: &Interval, tol: f64) -> Result<Self> {
        if !spec.is_exponent() {
            return Err(VexError::Domain(format!("{spec} is not an exponent with p >= 1")));
        }
        let d = decompose(spec, q, CMP_DEPTH)?;
        let mut parts: Vec<(f64, f64)> = d.segments.iter().map(|s| s.ln_measure_parts()).collect();
        parts.extend(d.residuals.iter().map(|r| (r.measure.ln(), 0.0)));
        let top = parts.iter().copied().max_by(|a, b| a.0.total_cmp(&b.0)).unwrap_or((f64::NEG_INFINITY, 0.0));
        if top.0 == f64::NEG_INFINITY {
            return Err(VexError::Domain("empty interval".into()));
        }
        // logs of the measures relative to the largest one
        let ln_ms: Vec<f64> = parts.iter().map(|&(hi, lo)| (hi - top.0) + (lo - top.1)).collect();
        let ln_rel = ln_sum_exp(&ln_ms);
        let ln_len = top.0 + (top.1 + ln_rel);
        let heaviest = (0..d.segments.len()).max_by(|&i, &j| ln_ms[i].total_cmp(&ln_ms[j]));
        let m0 = match heaviest.map(|i| &d.segments[i]) {
            Some(s) => match s.shape {
                Shape::Flat(p) => [flat_inv_p(s, p), 0.0, 0.0],
                // the heavy end
                Shape::Varying => s.inv_p_parts(0.0),
            },
            None => {
                let r = &d.residuals[0];
                [0.5 * (1.0 / r.lo + 1.0 / r.hi), 0.0, 0.0]
            }
        };
        let dev_of = |x: [f64; 3]| dev_parts(x, m0);
        let ln_len_abs = ln_len;
        let ln_len = ln_rel;
        let mut out = MeanSplit { ln_len: ln_len_abs, m0, delta: 0.0, flats: Vec::new(), varying: Vec::new(), residuals: Vec::new() };
        let mut delta = 0.0;
        for (s, ln_m) in d.segments.into_iter().zip(&ln_ms) {
            let ln_w = ln_m - ln_len;
            match s.shape {
                Shape::Flat(p) => {
                    let dev = dev_of([flat_inv_p(&s, p), 0.0, 0.0]);
                    delta += ln_w.exp() * dev;
                    out.flats.push((ln_w, p, dev));
                }
                Shape::Varying => {
                    let w = ln_w.exp();
                    if ln_w + ln_len_abs.abs().ln_1p() < -NEGLIGIBLE_LN {
                        delta += w * dev_of(s.inv_p_parts(0.0));
                    } else if w > 0.0 {
                        let (v0, v1) = s.v_range();
                        let f = |t: f64, o: &mut [f64; MAX_CHANNELS]| {
                            let dev = dev_of(s.inv_p_parts(t));
                            o[0] = dev.max(0.0).ln() - t;
                            o[1] = (-dev).max(0.0).ln() - t;
                            o[2] = -t;
                        };
                        let r = adaptive_log(&f, 3, &exp_cuts(v1 - v0), tol)?;
                        delta += w * ((r.total[0] - r.total[2]).exp() - (r.total[1] - r.total[2]).exp());
                    }
                    out.varying.push((s, ln_w));
                }
            }
        }
        for (r, ln_m) in d.residuals.iter().zip(&ln_ms[out.flats.len() + out.varying.len()..]) {
            let ln_w = ln_m - ln_len;
            delta += ln_w.exp() * dev_of([0.5 * (1.0 / r.lo + 1.0 / r.hi), 0.0, 0.0]);
            out.residuals.push((ln_w, r.lo, r.hi));
        }
        out.delta = delta;
        Ok(out)
    }

    fn mean(&self) -> f64 {
        self.m0.iter().sum::<f64>() + self.delta
    }

    fn dev(&self, x: [f64; 3]) -> f64 {
        dev_parts(x, self.m0)
    }

    /// `ln` of the modular of `chi_Q` at `lambda = |Q|^{mean} e^{rho}` and its
    /// derivative in `rho`.
    fn eval(&self, rho: f64, tol: f64) -> Result<(f64, f64)> {
        let l = self.ln_len;
        let shift = self.delta;
        let mut terms: Vec<(f64, f64)> = self.flats.iter().map(|&(ln_w, p, dev)| (ln_w + p * (l * (dev - shift) - rho), p)).collect();
        for &(ln_w, lo, hi) in &self.residuals {
            let at = |p: f64| ln_w + p * (l * (self.dev([1.0 / p, 0.0, 0.0]) - shift) - rho);
            terms.push(if at(lo) > at(hi) { (at(lo), lo) } else { (at(hi), hi) });
        }
        let mut running = ln_sum_exp(&terms.iter().map(|t| t.0).collect::<Vec<_>>());
        let mut order: Vec<(f64, usize)> = self
            .varying
            .iter()
            .enumerate()
            .map(|(i, (s, ln_w))| {
                let (v0, v1) = s.v_range();
                let at = |t: f64| {
                    let parts = s.inv_p_parts(t);
                    ln_w + (l * (self.dev(parts) - shift) - rho) / parts.iter().sum::<f64>()
                };
                (at(0.0).max(at(v1 - v0)), i)
            })
            .collect();
        order.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut tail = Vec::new();
        for (bound, i) in order {
            if bound < running - NEGLIGIBLE_LN {
                tail.push(bound);
                continue;
            }
            let (s, ln_w) = &self.varying[i];
            let (v0, v1) = s.v_range();
            let f = |t: f64, o: &mut [f64; MAX_CHANNELS]| {
                let parts = s.inv_p_parts(t);
                let p = 1.0 / parts.iter().sum::<f64>();
                let dev = self.dev(parts);
                o[0] = p * (l * (dev - shift) - rho) - t;
                o[1] = o[0] + p.ln();
                o[2] = -t;
            };
            let r = adaptive_log(&f, 3, &exp_cuts(v1 - v0), tol)?;
            terms.push((ln_w + r.total[0] - r.total[2], (r.total[1] - r.total[0]).exp()));
            running = ln_sum_exp(&terms.iter().map(|t| t.0).collect::<Vec<_>>());
        }
        let total = ln_sum_exp(&terms.iter().map(|t| t.0).chain(tail.iter().copied()).collect::<Vec<_>>());
        let slope = -terms.iter().map(|&(a, p)| p * (a - total).exp()).sum::<f64>();
        Ok((total, slope))
    }
}

/// `(1/|Q|) int_Q 1/p(x) dx`.
pub fn mean_inv_p(spec: &ExponentSpec, q: &Interval, tol: f64) -> Result<f64> {
    Ok(MeanSplit::new(spec, q, tol)?.mean())
}

/// `|Q|^{mean of 1/p over Q}`.
pub fn harmonic_mean_scale(spec: &ExponentSpec, q: &Interval) -> Result<LogReal> {
    let m = MeanSplit::new(spec, q, QUAD_TOL)?;
    Ok(LogReal::from_ln(m.mean() * m.ln_len))
}

/// `||chi_Q|| / |Q|^{mean 1/p}`, which is at least 1 by Jensen.
pub fn uniform_ratio(spec: &ExponentSpec, q: &Interval, tol: f64) -> Result<f64> {
    Ok(uniform_ratio_ln(spec, q, tol)?.exp())
}

/// Natural log of [`uniform_ratio`], solved for directly: with
/// `lambda = |Q|^{mean} e^{rho}` the modular of `chi_Q` only involves
/// `ln|Q| (1/p - mean)` and `rho`, which stay moderate when `|Q|` is tiny.
pub fn uniform_ratio_ln(spec: &ExponentSpec, q: &Interval, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(VexError::Domain(format!("tolerance {tol} must be positive")));
    }
    let m = MeanSplit::new(spec, q, QUAD_TOL)?;
    let eval = |rho: f64| m.eval(rho, QUAD_TOL);
    // F(rho) = ln modular is convex and decreasing; F(0) >= 0 by Jensen
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut rho = 0.0;
    for _ in 0..MAX_BISECT {
        let (f, df) = eval(rho)?;
        if f > 0.0 {
            lo = rho;
        } else {
            hi = rho;
        }
        if f.abs() <= tol || hi - lo <= tol {
            return Ok(rho);
        }
        let mut next = if df < 0.0 { rho - f / df } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (true, false) => lo + 1.0 + (lo - rho).abs(),
                (false, true) => hi - 1.0 - (hi - rho).abs(),
                (false, false) => unreachable!("one side is always set"),
            };
        }
        rho = next;
    }
    Err(VexError::Bracketing { lo, hi })
}
