//! Quadrature over subintervals of [0, 1].
//!
//! Two adaptive Gauss-Kronrod (7/15) engines share the same nodes: a plain
//! signed one for ordinary integrands, and a log-domain one that integrates
//! `exp(psi(t))` on several channels at once. The log-domain engine is what
//! the pullback `x = d_n + e^{-tau}` feeds: after the shift `tau = tau_lo + t`
//! every branch integral becomes `e^{-tau_lo} * int_0^T h(t) e^{-t} dt`.

mod interval;

pub use interval::{branch_x, chart_measure, chart_x, cmp_points, d, Interval, Located, Point, Region, Side, Span, Spans, DEFAULT_DEPTH};
pub(crate) use interval::{chart_base, chart_g, chart_v, ef, left_coord, ln_one_minus_exp_neg, CMP_DEPTH};

use crate::error::{Result, VexError};
use crate::logscale::{ln_sub_exp, ln_sum_exp, LogReal};

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
// Gauss weights at XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// The 15 Kronrod nodes of `[a, b]` with their weights, plus the Gauss weight (0 if none).
pub(crate) fn kronrod_nodes(a: f64, b: f64) -> [(f64, f64, f64); 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [(0.0, 0.0, 0.0); 15];
    for j in 0..7 {
        let g = if j % 2 == 1 { WG[j / 2] } else { 0.0 };
        out[2 * j] = (c - h * XGK[j], h * WGK[j], h * g);
        out[2 * j + 1] = (c + h * XGK[j], h * WGK[j], h * g);
    }
    out[14] = (c, h * WGK[7], h * WG[3]);
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureResult {
    pub value: LogReal,
    pub est_error: LogReal,
    pub pieces_used: usize,
    pub truncated_tail_bound: LogReal,
}

const MAX_ROUNDS: usize = 60;
const MAX_PANELS: usize = 20_000;

/// Adaptive integral of a signed integrand over a plain interval.
pub fn integrate_adaptive(f: impl Fn(f64) -> f64, q: &Interval, tol: f64) -> Result<QuadratureResult> {
    let (a, b) = (q.lo.to_f64(), q.hi.to_f64());
    integrate_adaptive_f64(&f, a, b, &[], tol)
}

pub fn integrate_adaptive_f64(f: &dyn Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64], tol: f64) -> Result<QuadratureResult> {
    if !(tol > 0.0) {
        return Err(VexError::Invalid(format!("tolerance {tol} must be positive")));
    }
    let gk = |a: f64, b: f64| {
        let (mut k, mut g) = (0.0, 0.0);
        for (x, wk, wg) in kronrod_nodes(a, b) {
            let v = f(x);
            k += wk * v;
            g += wg * v;
        }
        (a, b, k, (k - g).abs())
    };
    let mut cuts = vec![a];
    cuts.extend(breaks.iter().copied().filter(|&t| t > a && t < b));
    cuts.push(b);
    let mut panels: Vec<(f64, f64, f64, f64)> = cuts.windows(2).map(|w| gk(w[0], w[1])).collect();
    for _ in 0..MAX_ROUNDS {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        let target = tol * total.abs().max(1.0) + 1e-15;
        if err <= target {
            return Ok(plain_result(total, err, panels.len()));
        }
        let share = target / panels.len() as f64;
        let mut next = Vec::with_capacity(panels.len() * 2);
        let mut split_any = false;
        for p in panels {
            let (pa, pb) = (p.0, p.1);
            let mid = 0.5 * (pa + pb);
            if p.3 > share && mid > pa && mid < pb {
                next.push(gk(pa, mid));
                next.push(gk(mid, pb));
                split_any = true;
            } else {
                next.push(p);
            }
        }
        panels = next;
        if !split_any || panels.len() > MAX_PANELS {
            break;
        }
    }
    let total: f64 = panels.iter().map(|p| p.2).sum();
    let err: f64 = panels.iter().map(|p| p.3).sum();
    Err(VexError::NoConvergence {
        best: LogReal::from_f64_unchecked(total),
        err: LogReal::from_f64_unchecked(err),
    })
}

fn plain_result(total: f64, err: f64, n: usize) -> QuadratureResult {
    QuadratureResult {
        value: LogReal::from_f64_unchecked(total),
        est_error: LogReal::from_f64_unchecked(err),
        pieces_used: n,
        truncated_tail_bound: LogReal::ZERO,
    }
}

/// Maximum number of channels of the log-domain engine.
pub(crate) const MAX_CHANNELS: usize = 4;

#[derive(Clone, Copy, Debug)]
pub(crate) struct LogPanel {
    pub a: f64,
    pub b: f64,
    pub k: [f64; MAX_CHANNELS],
    pub e: [f64; MAX_CHANNELS],
    /// Largest integrand log-value at the nodes.
    pub top: [f64; MAX_CHANNELS],
}

/// Relative accuracy of `exp(psi)` when `psi` itself carries rounding error.
const PSI_ROUNDING: f64 = 1e-13;

/// Output of the log-domain engine: accepted panels and per-channel totals.
#[derive(Clone, Debug)]
#[allow(dead_code)]
pub(crate) struct LogQuad {
    pub panels: Vec<LogPanel>,
    pub total: [f64; MAX_CHANNELS],
    pub err: [f64; MAX_CHANNELS],
}

fn log_panel(f: &dyn Fn(f64, &mut [f64; MAX_CHANNELS]), channels: usize, a: f64, b: f64) -> LogPanel {
    let mut kv = [[f64::NEG_INFINITY; 15]; MAX_CHANNELS];
    let mut gv = [[f64::NEG_INFINITY; 15]; MAX_CHANNELS];
    let mut buf = [f64::NEG_INFINITY; MAX_CHANNELS];
    for (i, (t, wk, wg)) in kronrod_nodes(a, b).into_iter().enumerate() {
        buf.fill(f64::NEG_INFINITY);
        f(t, &mut buf);
        for c in 0..channels {
            kv[c][i] = wk.ln() + buf[c];
            gv[c][i] = if wg > 0.0 { wg.ln() + buf[c] } else { f64::NEG_INFINITY };
        }
    }
    let mut k = [f64::NEG_INFINITY; MAX_CHANNELS];
    let mut e = [f64::NEG_INFINITY; MAX_CHANNELS];
    let mut top = [f64::NEG_INFINITY; MAX_CHANNELS];
    for c in 0..channels {
        top[c] = kv[c].iter().zip(&kronrod_nodes(a, b)).map(|(v, n)| v - n.1.ln()).fold(f64::NEG_INFINITY, f64::max);
        let lk = ln_sum_exp(&kv[c]);
        let lg = ln_sum_exp(&gv[c]);
        k[c] = lk;
        e[c] = if lk >= lg { ln_sub_exp(lk, lg) } else { ln_sub_exp(lg, lk) };
    }
    LogPanel { a, b, k, e, top }
}

/// Integrates `exp(psi_c(t))` over `[a, b]` for each channel `c`; `f` writes
/// the `psi_c` values (`-inf` for zero). Converges when every channel's error
/// is within `tol` relative to its total.
pub(crate) fn adaptive_log(
    f: &dyn Fn(f64, &mut [f64; MAX_CHANNELS]),
    channels: usize,
    cuts: &[f64],
    tol: f64,
) -> Result<LogQuad> {
    assert!(channels >= 1 && channels <= MAX_CHANNELS);
    let mut panels: Vec<LogPanel> = cuts.windows(2).filter(|w| w[1] > w[0]).map(|w| log_panel(f, channels, w[0], w[1])).collect();
    let ln_tol = tol.ln();
    for round in 0..=MAX_ROUNDS {
        let mut total = [f64::NEG_INFINITY; MAX_CHANNELS];
        let mut err = [f64::NEG_INFINITY; MAX_CHANNELS];
        for c in 0..channels {
            let ks: Vec<f64> = panels.iter().map(|p| p.k[c]).collect();
            let es: Vec<f64> = panels.iter().map(|p| p.e[c]).collect();
            total[c] = ln_sum_exp(&ks);
            err[c] = ln_sum_exp(&es);
            if total[c].is_nan() || err[c].is_nan() {
                return Err(VexError::Invalid("non-finite integrand in log-domain quadrature".into()));
            }
        }
        // psi values of size |psi| are only good to about |psi| * eps
        let mut floor = [ln_tol; MAX_CHANNELS];
        for c in 0..channels {
            let top = panels.iter().map(|p| p.top[c]).fold(f64::NEG_INFINITY, f64::max);
            if top.is_finite() {
                floor[c] = ln_tol.max((PSI_ROUNDING * top.abs()).ln());
            }
        }
        let done = (0..channels).all(|c| total[c] == f64::NEG_INFINITY || err[c] <= floor[c] + total[c]);
        if done {
            return Ok(LogQuad { panels, total, err });
        }
        if round == MAX_ROUNDS || panels.len() > MAX_PANELS {
            let c = (0..channels).max_by(|&i, &j| (err[i] - total[i]).total_cmp(&(err[j] - total[j]))).unwrap_or(0);
            return Err(VexError::NoConvergence { best: LogReal::from_ln(total[c]), err: LogReal::from_ln(err[c]) });
        }
        let share = ln_tol - (panels.len() as f64).ln();
        let mut next = Vec::with_capacity(panels.len() * 2);
        let mut split_any = false;
        for p in panels {
            let mid = 0.5 * (p.a + p.b);
            let heavy = (0..channels).any(|c| total[c] > f64::NEG_INFINITY && p.e[c] - total[c] > share);
            if heavy && mid > p.a && mid < p.b {
                next.push(log_panel(f, channels, p.a, mid));
                next.push(log_panel(f, channels, mid, p.b));
                split_any = true;
            } else {
                next.push(p);
            }
        }
        panels = next;
        if !split_any {
            // every offending panel is at floating-point resolution; accept
            let mut total = [f64::NEG_INFINITY; MAX_CHANNELS];
            let mut err = [f64::NEG_INFINITY; MAX_CHANNELS];
            for c in 0..channels {
                total[c] = ln_sum_exp(&panels.iter().map(|p| p.k[c]).collect::<Vec<_>>());
                err[c] = ln_sum_exp(&panels.iter().map(|p| p.e[c]).collect::<Vec<_>>());
            }
            return Ok(LogQuad { panels, total, err });
        }
    }
    unreachable!("loop returns")
}

/// Initial cuts of `[0, span]` refined geometrically toward both ends, so that
/// integrands peaked at either end are resolved from the first round.
pub(crate) fn exp_cuts(span: f64) -> Vec<f64> {
    let mut cuts = vec![0.0, span];
    if span > 2.0 {
        let mut s = 0.5;
        while s < 0.5 * span {
            cuts.push(s);
            cuts.push(span - s);
            s *= 2.0;
            if cuts.len() > 240 {
                break;
            }
        }
        cuts.push(0.5 * span);
    } else {
        cuts.push(0.5 * span);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts
}

/// Sum of `level * |piece ∩ q|` over pairwise disjoint pieces, exact in the log domain.
pub fn integrate_piecewise_constant(levels: &[(Interval, LogReal)], q: &Interval) -> Result<LogReal> {
    let mut sorted: Vec<&(Interval, LogReal)> = levels.iter().collect();
    sorted.sort_by(|a, b| cmp_points(&a.0.lo, &b.0.lo));
    for w in sorted.windows(2) {
        if cmp_points(&w[0].0.hi, &w[1].0.lo) == std::cmp::Ordering::Greater {
            return Err(VexError::Overlap);
        }
    }
    let mut total = LogReal::ZERO;
    for (piece, level) in sorted {
        if let Some(meet) = intersect(piece, q) {
            total = total + *level * meet.length();
        }
    }
    Ok(total)
}

/// `(max lo, min hi]` when nonempty.
pub fn intersect(a: &Interval, b: &Interval) -> Option<Interval> {
    let lo = if cmp_points(&a.lo, &b.lo) == std::cmp::Ordering::Less { b.lo } else { a.lo };
    let hi = if cmp_points(&a.hi, &b.hi) == std::cmp::Ordering::Less { a.hi } else { b.hi };
    Interval::new(lo, hi).ok()
}

/// `int h(u) |dx/du| du` over `u_range` on a branch of block `n`, where
/// `u = ln ln(1/y) - n` and `y` is the distance to the branch anchor
/// (`|dx/du| = e^{u+n} e^{-e^{u+n}}` on both branches).
pub fn integrate_loglog_pullback(
    h: impl Fn(f64) -> f64,
    n: u32,
    _branch: Side,
    u_range: (f64, f64),
    tol: f64,
) -> Result<LogReal> {
    let (u_lo, u_hi) = u_range;
    if !(0.0..=1.0).contains(&u_lo) || !(0.0..=1.0).contains(&u_hi) || u_lo > u_hi {
        return Err(VexError::Range(format!("u range [{u_lo}, {u_hi}] outside [0, 1]")));
    }
    if u_lo == u_hi {
        return Ok(LogReal::ZERO);
    }
    let nf = n as f64;
    let tau_lo = (nf + u_lo).exp();
    let tau_hi = (nf + u_hi).exp();
    let span = tau_hi - tau_lo;
    let f = |t: f64, out: &mut [f64; MAX_CHANNELS]| {
        let u = (tau_lo + t).ln() - nf;
        let v = h(u.clamp(u_lo, u_hi));
        out[0] = if v > 0.0 { v.ln() - t } else { f64::NEG_INFINITY };
        out[1] = if v < 0.0 { (-v).ln() - t } else { f64::NEG_INFINITY };
    };
    let q = adaptive_log(&f, 2, &exp_cuts(span), tol)?;
    let pos = LogReal::from_ln(q.total[0] - tau_lo);
    let neg = LogReal::from_ln(q.total[1] - tau_lo);
    Ok(pos - neg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_weights_sum_to_length() {
        let (mut k, mut g) = (0.0, 0.0);
        for (_, wk, wg) in kronrod_nodes(-1.0, 1.0) {
            k += wk;
            g += wg;
        }
        assert!((k - 2.0).abs() < 1e-14 && (g - 2.0).abs() < 1e-14);
    }

    #[test]
    fn polynomials_exact() {
        let q = Interval::unit();
        let r = integrate_adaptive(|x| x, &q, 1e-12).unwrap();
        assert!((r.value.to_f64() - 0.5).abs() < 1e-15);
        let r = integrate_adaptive(|x| x.powi(12), &q, 1e-12).unwrap();
        assert!((r.value.to_f64() - 1.0 / 13.0).abs() < 1e-14);
    }

    #[test]
    fn inverse_square() {
        let q = Interval::from_f64(0.5, 1.0).unwrap();
        let r = integrate_adaptive(|x| x.powi(-2), &q, 1e-12).unwrap();
        assert!((r.value.to_f64() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_engine_matches_closed_form() {
        // int_0^50 e^{-t} dt
        let f = |t: f64, out: &mut [f64; MAX_CHANNELS]| out[0] = -t;
        let q = adaptive_log(&f, 1, &exp_cuts(50.0), 1e-13).unwrap();
        assert!((q.total[0] - ln_sub_exp(0.0, -50.0)).abs() < 1e-12);
    }

    #[test]
    fn log_engine_sharp_peak_at_far_end() {
        // int_0^1000 e^{3(t-1000)} dt = (1 - e^{-3000})/3
        let f = |t: f64, out: &mut [f64; MAX_CHANNELS]| out[0] = 3.0 * (t - 1000.0);
        let q = adaptive_log(&f, 1, &exp_cuts(1000.0), 1e-12).unwrap();
        assert!((q.total[0] + 3f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn piecewise_constant_cases() {
        let a = Interval::from_f64(0.1, 0.2).unwrap();
        let b = Interval::from_f64(0.3, 0.5).unwrap();
        let levels = [(a, LogReal::ONE), (b, LogReal::encode(2.0).unwrap())];
        let q = Interval::from_f64(0.15, 0.4).unwrap();
        let v = integrate_piecewise_constant(&levels, &q).unwrap();
        assert!((v.to_f64() - (0.05 + 0.2)).abs() < 1e-15);
        let empty = Interval::from_f64(0.6, 0.7).unwrap();
        assert!(integrate_piecewise_constant(&levels, &empty).unwrap().is_zero());
        let overlapping = [(a, LogReal::ONE), (Interval::from_f64(0.15, 0.3).unwrap(), LogReal::ONE)];
        assert_eq!(integrate_piecewise_constant(&overlapping, &q), Err(VexError::Overlap));
    }

    #[test]
    fn pullback_length_of_branch() {
        for n in [0u32, 3, 25] {
            let v = integrate_loglog_pullback(|_| 1.0, n, Side::Right, (0.0, 1.0), 1e-12).unwrap();
            let expect = ln_sub_exp(-ef(n), -ef(n + 1));
            assert!((v.ln() - expect).abs() < 1e-10 * expect.abs().max(1.0), "n={n}");
        }
        assert!(integrate_loglog_pullback(|_| 1.0, 0, Side::Left, (0.3, 0.3), 1e-12).unwrap().is_zero());
        assert!(integrate_loglog_pullback(|_| 1.0, 0, Side::Left, (0.3, 1.2), 1e-12).is_err());
    }
}
