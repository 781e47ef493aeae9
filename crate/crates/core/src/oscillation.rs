//! BMO and BLO moduli over a discrete family of intervals, their
//! `1/log`-weighted constants, and the log-Hölder constant of an exponent.
//!
//! Suprema over "all intervals of length at most r" are replaced by maxima
//! over an [`IntervalFamily`], so every modulus reported here is a lower
//! bound for the true one.

use std::f64::consts::LN_2;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Result, VexError};
use crate::exponents::{decompose, p_eval, ExponentSpec, Segment, Shape};
use crate::integrate::{adaptive_log, exp_cuts, integrate_adaptive_f64, Interval, Point, DEFAULT_DEPTH, MAX_CHANNELS};
use crate::logscale::{ln_add_exp, ln_sum_exp, LogReal};
use crate::sequences::{a_point, alpha_point, b_point, beta_point, c_point, dl_bands};

const QUAD_TOL: f64 = 1e-11;
const INF_SAMPLES: usize = 2048;

/// A function on (0, 1] whose oscillation is measured.
#[derive(Clone)]
pub enum OscFunction {
    /// The exponent (or g, or ln ln(1/x)) given by a spec, using its piecewise structure.
    Spec(ExponentSpec),
    /// A plain function with known breakpoints, integrated in `f64`.
    Plain { name: String, f: Arc<dyn Fn(f64) -> f64 + Send + Sync>, breaks: Vec<f64> },
}

impl OscFunction {
    pub fn plain(name: &str, f: impl Fn(f64) -> f64 + Send + Sync + 'static, breaks: Vec<f64>) -> Self {
        OscFunction::Plain { name: name.to_string(), f: Arc::new(f), breaks }
    }
}

impl fmt::Debug for OscFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OscFunction::Spec(s) => write!(f, "Spec({s})"),
            OscFunction::Plain { name, .. } => write!(f, "Plain({name})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModulusKind {
    Bmo,
    Blo,
}

/// Mean, mean oscillation and essential infimum of a function on one interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OscStats {
    pub len: LogReal,
    pub mean: f64,
    /// `(1/|Q|) int_Q |f - f_Q|`.
    pub bmo: f64,
    /// `f_Q - essinf_Q f`.
    pub blo: f64,
}

impl OscStats {
    pub fn value(&self, kind: ModulusKind) -> f64 {
        match kind {
            ModulusKind::Bmo => self.bmo,
            ModulusKind::Blo => self.blo,
        }
    }
}

/// `(1/|Q|) int_Q |f - f_Q|`.
pub fn mean_oscillation(f: &OscFunction, q: &Interval, tol: f64) -> Result<f64> {
    Ok(interval_stats(f, q, tol)?.bmo)
}

/// `f_Q - essinf_Q f`.
pub fn mean_minus_inf(f: &OscFunction, q: &Interval, tol: f64) -> Result<f64> {
    Ok(interval_stats(f, q, tol)?.blo)
}

pub fn interval_stats(f: &OscFunction, q: &Interval, tol: f64) -> Result<OscStats> {
    match f {
        OscFunction::Spec(spec) => spec_stats(spec, q, tol),
        OscFunction::Plain { f, breaks, .. } => plain_stats(f.as_ref(), breaks, q, tol),
    }
}

enum Part<'a> {
    Flat(f64),
    Varying(&'a Segment),
    Residual(f64),
}

/// Ratio of `int h(value) e^{-v} dv` to `int e^{-v} dv` over the segment, for `h >= 0`,
/// to within `tol` absolute.
fn segment_average(s: &Segment, h: &dyn Fn(f64) -> f64, tol: f64) -> Result<f64> {
    let (v0, v1) = s.v_range();
    let f = |t: f64, out: &mut [f64; MAX_CHANNELS]| {
        out[0] = (1.0 + h(s.value_v(t))).ln() - t;
        out[1] = -t;
    };
    let r = adaptive_log(&f, 2, &exp_cuts(v1 - v0), tol)?;
    Ok((r.total[0] - r.total[1]).exp_m1())
}

fn spec_stats(spec: &ExponentSpec, q: &Interval, tol: f64) -> Result<OscStats> {
    let d = decompose(spec, q, DEFAULT_DEPTH)?;
    let mut parts: Vec<(f64, Part<'_>)> = Vec::new();
    for s in &d.segments {
        match s.shape {
            Shape::Flat(v) => parts.push((s.ln_measure(), Part::Flat(v))),
            Shape::Varying => parts.push((s.ln_measure(), Part::Varying(s))),
        }
    }
    let mut inf = d.value_bounds().0;
    for r in &d.residuals {
        if !r.measure.is_zero() {
            let mid = if r.hi.is_finite() { 0.5 * (r.lo + r.hi) } else { r.lo };
            parts.push((r.measure.ln(), Part::Residual(mid)));
        }
    }
    let ln_total = ln_sum_exp(&parts.iter().map(|p| p.0).collect::<Vec<_>>());
    if ln_total == f64::NEG_INFINITY {
        // narrower than the chart resolution: one value
        let len = q.length();
        if len.is_zero() {
            return Err(VexError::Domain("empty interval".into()));
        }
        let v = p_eval(spec, q.hi)?;
        return Ok(OscStats { len, mean: v, bmo: 0.0, blo: 0.0 });
    }
    let weights: Vec<f64> = parts.iter().map(|p| (p.0 - ln_total).exp()).collect();
    let mut mean = 0.0;
    for (w, (_, part)) in weights.iter().zip(&parts) {
        if *w == 0.0 {
            continue;
        }
        mean += w * match part {
            Part::Flat(v) | Part::Residual(v) => *v,
            Part::Varying(s) => segment_average(s, &|v| v, tol)?,
        };
    }
    let mut dev = 0.0;
    for (w, (_, part)) in weights.iter().zip(&parts) {
        if *w == 0.0 {
            continue;
        }
        dev += w * match part {
            Part::Flat(v) | Part::Residual(v) => (v - mean).abs(),
            Part::Varying(s) => {
                let (below, above) = s.split_at_level(mean);
                let mut acc = 0.0;
                for piece in [below, above].into_iter().flatten() {
                    let share = (piece.ln_measure() - s.ln_measure()).exp();
                    if share > 0.0 {
                        acc += share * segment_average(&piece, &|v| (v - mean).abs(), tol)?;
                    }
                }
                acc
            }
        };
    }
    inf = inf.min(mean);
    Ok(OscStats { len: LogReal::from_ln(ln_total), mean, bmo: dev, blo: (mean - inf).max(0.0) })
}

fn plain_stats(f: &(dyn Fn(f64) -> f64 + Send + Sync), breaks: &[f64], q: &Interval, tol: f64) -> Result<OscStats> {
    let (a, b) = (q.lo.to_f64(), q.hi.to_f64());
    if !(b > a) {
        return Err(VexError::Unresolvable { lo: a, hi: b });
    }
    let inner: Vec<f64> = breaks.iter().copied().filter(|&t| t > a && t < b).collect();
    let len = b - a;
    let mean = integrate_adaptive_f64(&|x| f(x), a, b, &inner, tol)?.value.to_f64() / len;
    let mut cuts = inner.clone();
    let dev = integrate_adaptive_f64(&|x| (f(x) - mean).abs(), a, b, &cuts, tol)?.value.to_f64() / len;
    cuts.extend((0..=INF_SAMPLES).map(|i| a + len * (i as f64 + 0.5) / (INF_SAMPLES + 1) as f64));
    cuts.push(a + len * 1e-12);
    cuts.push(b);
    for t in &inner {
        let h = len * 1e-12;
        cuts.push((t - h).max(a));
        cuts.push((t + h).min(b));
    }
    let inf = cuts.iter().filter(|&&t| t > a && t <= b).map(|&t| f(t)).fold(f64::INFINITY, f64::min).min(mean);
    Ok(OscStats { len: q.length(), mean, bmo: dev, blo: (mean - inf).max(0.0) })
}

/// One interval of a family, with the stratum it is reported under.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FamilyMember {
    pub q: Interval,
    pub stratum: i64,
    pub witness: bool,
}

/// Parameters of the anchored interval family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FamilyConfig {
    /// Anchors `c_m`, `alpha_k`, `beta_k`, `a_k`, `b_k` for `k <= k_max`.
    pub k_max: u32,
    /// Ratio between consecutive coarse scales.
    pub ratio: f64,
    /// Ratio between consecutive local scales.
    pub local_ratio: f64,
    /// Coarse scales run from 1 down to `2^{-coarse_octaves}`.
    pub coarse_octaves: u32,
    /// Local scales run over `sigma * 2^{+-local_octaves}` around each anchor's own scale.
    pub local_octaves: u32,
    /// Witness intervals `(0, beta_k)` for `1 <= k <= beta_witnesses`.
    pub beta_witnesses: u32,
    /// Witness intervals `(0, dl_d_k)` for `1 <= k <= dl_witnesses`.
    pub dl_witnesses: u32,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        FamilyConfig {
            k_max: 40,
            ratio: 2.0,
            local_ratio: 2f64.powf(0.25),
            coarse_octaves: 20,
            local_octaves: 10,
            beta_witnesses: 40,
            dl_witnesses: 20,
        }
    }
}

impl FamilyConfig {
    /// Same family with scales twice as dense.
    pub fn refined(&self) -> Self {
        FamilyConfig { ratio: self.ratio.sqrt(), local_ratio: self.local_ratio.sqrt(), ..*self }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntervalFamily {
    pub config: FamilyConfig,
    pub members: Vec<FamilyMember>,
}

/// Anchors `(point, stratum)`.
fn anchors(k_max: u32) -> Vec<(Point, i64)> {
    let mut out = vec![(Point::zero(), 0), (Point::one(), 0)];
    for m in 0..=(2 * k_max + 1) {
        out.push((c_point(m), (m / 2) as i64));
    }
    for k in 0..=k_max {
        for p in [alpha_point(k), beta_point(k), a_point(k), b_point(k)] {
            out.push((p, k as i64));
        }
    }
    out
}

impl IntervalFamily {
    pub fn new(config: FamilyConfig) -> Result<Self> {
        if !(config.ratio > 1.0 && config.local_ratio > 1.0) {
            return Err(VexError::Domain(format!("scale ratios {}, {} must exceed 1", config.ratio, config.local_ratio)));
        }
        let ln_r = config.ratio.ln();
        let ln_local = config.local_ratio.ln();
        let coarse = (config.coarse_octaves as f64 * LN_2 / ln_r).round() as i64;
        let local = (config.local_octaves as f64 * LN_2 / ln_local).round() as i64;
        let mut members = Vec::new();
        for (t, stratum) in anchors(config.k_max) {
            let sigma = t.local_scale();
            let mut scales: Vec<f64> = (0..=coarse).map(|j| -(j as f64) * ln_r).collect();
            if sigma.is_positive() && sigma.ln() < -(config.coarse_octaves as f64) * LN_2 {
                scales.extend((-local..=local).map(|i| sigma.ln() + i as f64 * ln_local));
            }
            for ln_s in scales {
                let s = LogReal::from_ln(ln_s.min(0.0));
                for (lo, hi) in [(Some(t), t.shift(s).ok()), (t.shift(-s).ok(), Some(t))] {
                    if let (Some(lo), Some(hi)) = (lo, hi) {
                        if let Ok(q) = Interval::new(lo, hi) {
                            members.push(FamilyMember { q, stratum, witness: false });
                        }
                    }
                }
            }
        }
        for k in 1..=config.beta_witnesses {
            members.push(FamilyMember { q: Interval::new(Point::zero(), beta_point(k))?, stratum: k as i64, witness: true });
        }
        for k in 1..=config.dl_witnesses {
            let d = Point::from_logreal(dl_bands(k)?.dl_d)?;
            members.push(FamilyMember { q: Interval::new(Point::zero(), d)?, stratum: k as i64, witness: true });
        }
        Ok(IntervalFamily { config, members })
    }

    pub fn default_family() -> Result<Self> {
        Self::new(FamilyConfig::default())
    }

    pub fn refined(&self) -> Result<Self> {
        Self::new(self.config.refined())
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Statistics of `f` on every member, in family order.
pub fn family_stats(f: &OscFunction, family: &IntervalFamily, tol: f64) -> Result<Vec<OscStats>> {
    if family.is_empty() {
        return Err(VexError::EmptyFamily);
    }
    family.members.par_iter().map(|m| interval_stats(f, &m.q, tol)).collect()
}

/// Largest statistic over members of length at most `r` (0 when none qualify).
pub fn modulus_from_stats(stats: &[OscStats], kind: ModulusKind, r: LogReal) -> f64 {
    stats.iter().filter(|s| s.len <= r).map(|s| s.value(kind)).fold(0.0, f64::max)
}

fn check_r(r: LogReal) -> Result<()> {
    if !r.is_positive() || r > LogReal::ONE {
        return Err(VexError::Domain(format!("r = {r} outside (0, 1]")));
    }
    Ok(())
}

/// `gamma(f, r)` over the family.
pub fn bmo_modulus(f: &OscFunction, r: LogReal, family: &IntervalFamily) -> Result<f64> {
    check_r(r)?;
    Ok(modulus_from_stats(&family_stats(f, family, QUAD_TOL)?, ModulusKind::Bmo, r))
}

/// `eta(f, r)` over the family.
pub fn blo_modulus(f: &OscFunction, r: LogReal, family: &IntervalFamily) -> Result<f64> {
    check_r(r)?;
    Ok(modulus_from_stats(&family_stats(f, family, QUAD_TOL)?, ModulusKind::Blo, r))
}

/// `ln(e + 1/r)`.
pub fn log_weight(r: LogReal) -> f64 {
    ln_add_exp(1.0, -r.ln())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub r: LogReal,
    pub modulus: f64,
    pub weighted: f64,
}

pub fn modulus_sweep(stats: &[OscStats], kind: ModulusKind, r_grid: &[LogReal]) -> Result<Vec<SweepRow>> {
    if r_grid.is_empty() {
        return Err(VexError::Domain("empty r grid".into()));
    }
    r_grid
        .iter()
        .map(|&r| {
            check_r(r)?;
            let modulus = modulus_from_stats(stats, kind, r);
            Ok(SweepRow { r, modulus, weighted: modulus * log_weight(r) })
        })
        .collect()
}

/// Writes `r,modulus,weighted_value,r_ln` rows.
pub fn write_sweep_csv(rows: &[SweepRow], w: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let err = |e: csv::Error| VexError::Invalid(e.to_string());
    wtr.write_record(["r", "modulus", "weighted_value", "r_ln"]).map_err(err)?;
    for row in rows {
        wtr.write_record([row.r.to_f64().to_string(), row.modulus.to_string(), row.weighted.to_string(), row.r.ln().to_string()])
            .map_err(err)?;
    }
    wtr.flush().map_err(|e| VexError::Invalid(e.to_string()))
}

/// `max_r modulus(f, r) ln(e + 1/r)` over `r_grid`.
pub fn log_weighted_constant(f: &OscFunction, kind: ModulusKind, r_grid: &[LogReal], family: &IntervalFamily) -> Result<f64> {
    let stats = family_stats(f, family, QUAD_TOL)?;
    Ok(modulus_sweep(&stats, kind, r_grid)?.iter().map(|r| r.weighted).fold(0.0, f64::max))
}

/// `r_k = r0 * ratio^k` for `k < count`.
pub fn geometric_grid(r0: f64, ratio: f64, count: usize) -> Result<Vec<LogReal>> {
    if !(r0 > 0.0 && r0 <= 1.0 && ratio > 0.0 && ratio < 1.0) || count == 0 {
        return Err(VexError::Domain(format!("bad geometric grid {r0},{ratio},{count}")));
    }
    Ok((0..count).map(|k| LogReal::from_ln(r0.ln() + k as f64 * ratio.ln())).collect())
}

/// `r_j = e^{-e^{t_j}}` for `count` values `t_j` evenly spaced on `[t0, t1]`.
pub fn loglog_grid(t0: f64, t1: f64, count: usize) -> Result<Vec<LogReal>> {
    if !(t0.is_finite() && t1.is_finite() && t1 >= t0) || count == 0 || (count == 1 && t1 > t0) {
        return Err(VexError::Domain(format!("bad log-log grid {t0},{t1},{count}")));
    }
    let step = if count > 1 { (t1 - t0) / (count - 1) as f64 } else { 0.0 };
    Ok((0..count).map(|j| LogReal::exp_neg_exp(t0 + j as f64 * step)).collect())
}

fn holder_term(spec: &ExponentSpec, x: Point, y: Point) -> Option<f64> {
    let (lo, hi) = if x < y { (x, y) } else { (y, x) };
    let q = Interval::new(lo, hi).ok()?;
    let px = p_eval(spec, lo).ok()?;
    let py = p_eval(spec, hi).ok()?;
    Some((px - py).abs() * q.length().ln().abs())
}

/// `|p(c_{2n+1}) - p(c_{2n})| |ln(c_{2n} - c_{2n+1})|` for `n <= n_max`.
pub fn log_holder_anchor_series(spec: &ExponentSpec, n_max: u32) -> Vec<(u32, f64)> {
    (0..=n_max.min(DEFAULT_DEPTH - 1))
        .filter_map(|n| holder_term(spec, c_point(2 * n + 1), c_point(2 * n)).map(|v| (n, v)))
        .collect()
}

/// `max |p(x) - p(y)| |ln|x - y||` over sampled pairs: `pair_samples` base
/// points spaced evenly in `ln ln(1/x)`, each paired with nearby points at
/// relative distances `2^{-j}`, plus consecutive sequence anchors.
pub fn log_holder_constant(spec: &ExponentSpec, pair_samples: usize) -> Result<f64> {
    if pair_samples < 2 {
        return Err(VexError::Domain("need at least two samples".into()));
    }
    let t_lo = -3.0;
    let t_hi = (DEFAULT_DEPTH as f64) - 1.0;
    let mut pairs: Vec<(Point, Point)> = Vec::new();
    for i in 0..pair_samples {
        let t = t_lo + (t_hi - t_lo) * i as f64 / (pair_samples - 1) as f64;
        let x = LogReal::exp_neg_exp(t);
        let px = Point::from_logreal(x)?;
        for j in 0..24 {
            let dx = x * LogReal::from_ln(-(j as f64) * LN_2);
            if let Ok(py) = Point::from_logreal(x + dx) {
                pairs.push((px, py));
            }
            if let Ok(py) = Point::from_logreal(x - dx * LogReal::from_ln(-LN_2)) {
                pairs.push((py, px));
            }
        }
    }
    let mut named = anchors(DEFAULT_DEPTH - 1);
    named.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("points are ordered"));
    for w in named.windows(2) {
        pairs.push((w[0].0, w[1].0));
    }
    Ok(pairs.par_iter().filter_map(|&(x, y)| holder_term(spec, x, y)).reduce(|| 0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logscale::Rational;

    fn chi_half() -> OscFunction {
        OscFunction::plain("chi", |x| if x >= 0.5 { 1.0 } else { 0.0 }, vec![0.5])
    }

    #[test]
    fn oscillation_examples() {
        let unit = Interval::unit();
        let c = OscFunction::Spec(ExponentSpec::Constant(Rational::from_integer(3)));
        assert!(mean_oscillation(&c, &unit, 1e-12).unwrap().abs() < 1e-14);
        assert!((mean_oscillation(&chi_half(), &unit, 1e-12).unwrap() - 0.5).abs() < 1e-10);
        assert!((mean_minus_inf(&chi_half(), &unit, 1e-12).unwrap() - 0.5).abs() < 1e-10);
        let id = OscFunction::plain("t", |x| x, vec![]);
        assert!((mean_oscillation(&id, &unit, 1e-12).unwrap() - 0.25).abs() < 1e-10);
    }

    #[test]
    fn spec_and_plain_agree() {
        let q = Interval::from_f64(0.02, 0.7).unwrap();
        let spec = ExponentSpec::Lerner(0.125);
        let plain = OscFunction::plain("lerner", move |x| p_eval(&spec, x).unwrap(), vec![]);
        let a = interval_stats(&OscFunction::Spec(spec), &q, 1e-12).unwrap();
        let b = interval_stats(&plain, &q, 1e-12).unwrap();
        assert!((a.mean - b.mean).abs() < 1e-9);
        assert!((a.bmo - b.bmo).abs() < 1e-8);
        assert!((a.blo - b.blo).abs() < 1e-6, "{a:?} {b:?}");
    }

    #[test]
    fn bmo_at_most_twice_blo() {
        let q = Interval::from_f64(1e-30, 0.3).unwrap();
        for spec in [ExponentSpec::G, ExponentSpec::Ksz, ExponentSpec::DieningLerner, ExponentSpec::LogLog] {
            let s = interval_stats(&OscFunction::Spec(spec), &q, 1e-11).unwrap();
            assert!(s.bmo <= 2.0 * s.blo + 1e-9, "{spec} {s:?}");
        }
    }

    #[test]
    fn family_is_large_and_in_unit_interval() {
        let fam = IntervalFamily::default_family().unwrap();
        assert!(fam.len() >= 10_000, "{}", fam.len());
        let finer = fam.refined().unwrap();
        assert!(finer.len() > fam.len());
    }

    #[test]
    fn dl_witness_blo_close_to_six() {
        let b = dl_bands(1).unwrap();
        let q = Interval::new(Point::zero(), Point::from_logreal(b.dl_d).unwrap()).unwrap();
        let s = interval_stats(&OscFunction::Spec(ExponentSpec::DieningLerner), &q, 1e-11).unwrap();
        assert!(s.blo > 5.99 && s.blo <= 6.0, "{s:?}");
    }

    #[test]
    fn grids() {
        let g = geometric_grid(1.0, 0.5, 3).unwrap();
        assert!((g[2].to_f64() - 0.25).abs() < 1e-15);
        let l = loglog_grid(0.0, 2.0, 3).unwrap();
        assert!((l[1].ln() + 1f64.exp()).abs() < 1e-15);
        assert_eq!(l[2].ln(), -(2f64.exp()));
        assert!(loglog_grid(1.0, 0.0, 3).is_err() && loglog_grid(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn holder_examples() {
        let c = ExponentSpec::Constant(Rational::from_integer(2));
        assert_eq!(log_holder_constant(&c, 8).unwrap(), 0.0);
        let series = log_holder_anchor_series(&ExponentSpec::Ksz, 8);
        for (n, v) in &series {
            let dn = (*n as f64).exp();
            assert!(*v >= (2.0 - 64.0 / 63.0) * dn * 0.99, "n={n} v={v}");
        }
        let l1 = log_holder_constant(&ExponentSpec::Lerner(0.125), 40).unwrap();
        let l2 = log_holder_constant(&ExponentSpec::Lerner(0.125), 80).unwrap();
        assert!(l1.is_finite() && (l2 - l1).abs() <= 0.1 * l1, "{l1} {l2}");
    }
}
