//! Pass/fail series for the quantitative claims about the counterexample
//! exponents: endpoint decay and growth, blow-up of the conjugate norm
//! ratio, boundedness on the p side, the Hardy product and the
//! Diening-Lerner BLO defect.

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Result, VexError};
use crate::exponents::{Chart, ExponentSpec};
use crate::integrate::{integrate_adaptive_f64, Interval, Point};
use crate::logscale::LogReal;
use crate::operators::hardy_necessary_product;
use crate::oscillation::{FamilyConfig, IntervalFamily};
use crate::report::{detect_threshold, Row, SeriesReport};
use crate::sequences::{alpha, beta, beta_point, dl_bands, seq_ordering_check, DEFAULT_K_MAX};
use crate::vexnorm::{mean_inv_p, uniform_ratio_ln, DEFAULT_NORM_TOL};

pub const DEFAULT_LAMBDA: f64 = 2.0;
pub const DEFAULT_RATIO_CAP: f64 = 32.0;
/// Lower slack on the Jensen bound `ratio >= 1`.
pub const JENSEN_SLACK: f64 = 1e-6;

const GROWTH_K_MAX: u32 = 30;
const CONJ_RATIO_K_MAX: u32 = 6;
const HARDY_NORM_K_MAX: u32 = 2;
const DL_K_MAX: u32 = 20;
const DL_QUAD_K_MAX: u32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Suite {
    RatioAlphaBeta,
    GrowthAbBeta16,
    ConjugateBlowup,
    PSideUniform,
    HardyBlowup,
    DlNotBlo,
    Ordering,
}

impl Suite {
    /// The suites run by default.
    pub const DEFAULT: [Suite; 6] = [
        Suite::RatioAlphaBeta,
        Suite::GrowthAbBeta16,
        Suite::ConjugateBlowup,
        Suite::PSideUniform,
        Suite::HardyBlowup,
        Suite::DlNotBlo,
    ];

    pub const NAMES: &'static str = "ratio, growth, conjugate, p-side, hardy, dl, ordering, all";

    pub fn name(self) -> &'static str {
        match self {
            Suite::RatioAlphaBeta => "ratio",
            Suite::GrowthAbBeta16 => "growth",
            Suite::ConjugateBlowup => "conjugate",
            Suite::PSideUniform => "p-side",
            Suite::HardyBlowup => "hardy",
            Suite::DlNotBlo => "dl",
            Suite::Ordering => "ordering",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = VexError;

    fn from_str(s: &str) -> Result<Self> {
        let all = Suite::DEFAULT.iter().copied().chain([Suite::Ordering]);
        for suite in all {
            if suite.name() == s {
                return Ok(suite);
            }
        }
        Err(VexError::Invalid(format!("unknown suite '{s}', expected one of: {}", Suite::NAMES)))
    }
}

/// Parses a comma-separated suite list; `all` selects [`Suite::DEFAULT`].
pub fn parse_suites(s: &str) -> Result<Vec<Suite>> {
    let mut out = Vec::new();
    for name in s.split(',').map(str::trim) {
        let add: Vec<Suite> = if name == "all" { Suite::DEFAULT.to_vec() } else { vec![name.parse()?] };
        for suite in add {
            if !out.contains(&suite) {
                out.push(suite);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyConfig {
    /// Common k range; each suite clips it to its own maximum.
    pub k_max: u32,
    pub lambda: f64,
    pub ratio_cap: f64,
    pub tol: f64,
    /// Family for the p-side suite; its `k_max` and witness counts are clipped to `k_max`.
    pub family: FamilyConfig,
    pub suites: Vec<Suite>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            k_max: DEFAULT_K_MAX,
            lambda: DEFAULT_LAMBDA,
            ratio_cap: DEFAULT_RATIO_CAP,
            tol: DEFAULT_NORM_TOL,
            family: FamilyConfig::default(),
            suites: Suite::DEFAULT.to_vec(),
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_max > DEFAULT_K_MAX {
            return Err(VexError::Range(format!("k_max = {} exceeds {DEFAULT_K_MAX}", self.k_max)));
        }
        if !(self.lambda > 1.0 && self.lambda.is_finite()) {
            return Err(VexError::Domain(format!("lambda = {} must exceed 1", self.lambda)));
        }
        if !(self.ratio_cap > 1.0) {
            return Err(VexError::Domain(format!("ratio cap {} must exceed 1", self.ratio_cap)));
        }
        if !(self.tol > 0.0) {
            return Err(VexError::Domain(format!("tolerance {} must be positive", self.tol)));
        }
        Ok(())
    }

    pub fn family_config(&self) -> FamilyConfig {
        FamilyConfig {
            k_max: self.family.k_max.min(self.k_max),
            beta_witnesses: self.family.beta_witnesses.min(self.k_max),
            dl_witnesses: self.family.dl_witnesses.min(self.k_max).min(DL_K_MAX),
            ..self.family
        }
    }
}

fn strictly_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] > w[0])
}

/// `ln(b_k - a_k)` from `2e^{-e^{k+63/64}}(1 - e^{-(e^{k+1} - e^{k+63/64})})`.
pub fn ln_b_minus_a(k: u32) -> f64 {
    let lo = (k as f64 + 63.0 / 64.0).exp();
    let gap = lo * (1.0f64 / 64.0).exp_m1();
    LN_2 - lo + (-(-gap).exp_m1()).ln()
}

/// `ln((b_k - a_k) / beta_k^16)`.
pub fn growth_ln(k: u32) -> f64 {
    ln_b_minus_a(k) - 16.0 * beta(k).ln()
}

/// `ln(||chi_Q||_p / |Q|^{mean 1/p})` on each interval, in parallel.
/// The p side and the conjugate side both go through here.
pub fn ratio_series(spec: &ExponentSpec, qs: &[(i64, Interval)], tol: f64) -> Vec<(i64, Result<f64>)> {
    qs.par_iter().map(|(k, q)| (*k, uniform_ratio_ln(spec, q, tol))).collect()
}

fn beta_witness(k: u32) -> Result<Interval> {
    Interval::new(Point::zero(), beta_point(k))
}

/// `ln(alpha_k / beta_k)` for `0 <= k <= k_max`.
pub fn verify_ratio_alpha_beta(k_max: u32) -> Result<SeriesReport> {
    let mut report = SeriesReport::new(Suite::RatioAlphaBeta.name());
    let values: Vec<f64> = (0..=k_max.min(DEFAULT_K_MAX)).map(|k| alpha(k).ln() - beta(k).ln()).collect();
    for (k, &v) in values.iter().enumerate() {
        let pass = k == 0 || v < values[k - 1];
        report.rows.push(Row::new(k as i64, v, None, pass));
    }
    if k_max >= 3 {
        report.check("final_below_-10", values.last().is_some_and(|&v| v < -10.0));
    }
    Ok(report.finish())
}

/// `ln((b_k - a_k)/beta_k^16) >= e^{k+1} - 16 ln 4` for `1 <= k <= min(k_max, 30)`.
pub fn verify_growth_ab_beta16(k_max: u32) -> Result<SeriesReport> {
    let mut report = SeriesReport::new(Suite::GrowthAbBeta16.name());
    for k in 1..=k_max.min(GROWTH_K_MAX) {
        let value = growth_ln(k);
        let bound = (k as f64 + 1.0).exp() - 32.0 * LN_2;
        report.rows.push(Row::new(k as i64, value, Some(bound), value >= bound));
    }
    Ok(report.finish())
}

/// Lower bound `(b_k - a_k)/(lambda^64 beta_k^16)` on the conjugate modular
/// at the norm scale, with the directly computed conjugate ratio on `(0, beta_k)`
/// and the mean of `1/p'` alongside.
pub fn verify_conjugate_blowup(k_max: u32, lambda: f64, tol: f64) -> Result<SeriesReport> {
    if !(lambda > 1.0) {
        return Err(VexError::Domain(format!("lambda = {lambda} must exceed 1")));
    }
    let spec = ExponentSpec::KszConjugate;
    let ks: Vec<u32> = (1..=k_max.min(GROWTH_K_MAX)).collect();
    let shift = 64.0 * lambda.ln();
    let values: Vec<(i64, f64)> = ks.iter().map(|&k| (k as i64, growth_ln(k) - shift)).collect();
    let threshold = detect_threshold(&values, |v| *v > 0.0);

    let witnesses: Vec<(i64, Interval)> =
        ks.iter().filter(|&&k| k <= CONJ_RATIO_K_MAX).map(|&k| Ok((k as i64, beta_witness(k)?))).collect::<Result<_>>()?;
    let ratios = ratio_series(&spec, &witnesses, tol);
    let means: Vec<(i64, Result<f64>)> = ks
        .par_iter()
        .map(|&k| (k as i64, beta_witness(k).and_then(|q| mean_inv_p(&spec, &q, tol))))
        .collect();

    let mut report = SeriesReport::new(Suite::ConjugateBlowup.name());
    let mut increasing = Vec::new();
    for (i, &(k, v)) in values.iter().enumerate() {
        let mut row = Row::new(k, v, Some(0.0), v > 0.0);
        row.asserted = threshold.is_some_and(|t| k >= t) || threshold.is_none();
        if let Some((_, r)) = ratios.iter().find(|(kk, _)| *kk == k) {
            match r {
                Ok(r) => {
                    row = row.with_extra("ratio_ln", *r);
                    if k >= 3 {
                        increasing.push(*r);
                    }
                }
                Err(e) => {
                    row.error = Some(format!("conjugate ratio: {e}"));
                    row.pass = false;
                    row.asserted = true;
                }
            }
        }
        match &means[i].1 {
            Ok(m) => row = row.with_extra("mean_inv_conj", *m),
            Err(e) => {
                row.error = Some(format!("mean of 1/p': {e}"));
                row.pass = false;
                row.asserted = true;
            }
        }
        report.rows.push(row);
    }
    report.detected_threshold = threshold;
    if k_max >= 4 {
        report.check("threshold_at_most_4", threshold.is_some_and(|t| t <= 4));
    }
    if let Some(t) = threshold {
        let after: Vec<f64> = values.iter().filter(|(k, _)| *k >= t).map(|(_, v)| *v).collect();
        report.check("monotone_after_threshold", strictly_increasing(&after));
    }
    if increasing.len() >= 2 {
        report.check("ratio_increasing_from_3", strictly_increasing(&increasing));
    }
    let mean_rows: Vec<(i64, f64)> = means.iter().filter_map(|(k, m)| m.as_ref().ok().map(|m| (*k, *m))).collect();
    let k0 = detect_threshold(&mean_rows, |m| *m >= 0.25);
    report.thresholds.insert("mean_k0".into(), k0);
    if !mean_rows.is_empty() {
        report.check("mean_k0_exists", k0.is_some());
    }
    Ok(report.finish())
}

/// Per-stratum maximum of `ln uniform_ratio(KSZ, Q)` over an interval family.
pub fn verify_p_side_uniform(family: &IntervalFamily, cap: f64, tol: f64) -> Result<SeriesReport> {
    if family.is_empty() {
        return Err(VexError::EmptyFamily);
    }
    let qs: Vec<(i64, Interval)> = family.members.iter().map(|m| (m.stratum, m.q)).collect();
    let ratios = ratio_series(&ExponentSpec::Ksz, &qs, tol);
    let (ln_cap, ln_floor) = (cap.ln(), (-JENSEN_SLACK).ln_1p());
    let mut strata: Vec<i64> = qs.iter().map(|q| q.0).collect();
    strata.sort_unstable();
    strata.dedup();
    let mut report = SeriesReport::new(Suite::PSideUniform.name());
    for s in strata {
        let (mut max, mut min, mut count, mut error) = (f64::NEG_INFINITY, f64::INFINITY, 0usize, None);
        for (i, (_, r)) in ratios.iter().enumerate().filter(|(_, (k, _))| *k == s) {
            match r {
                Ok(r) => {
                    max = max.max(*r);
                    min = min.min(*r);
                    count += 1;
                }
                Err(e) if error.is_none() => error = Some(format!("member {i}: {e}")),
                Err(_) => {}
            }
        }
        let mut row = Row::new(s, max, Some(ln_cap), error.is_none() && max <= ln_cap && min >= ln_floor)
            .with_extra("min_ln", min)
            .with_extra("count", count as f64);
        row.error = error;
        report.rows.push(row);
    }
    let finite = || report.rows.iter().filter(|r| r.error.is_none());
    let global_max = finite().map(|r| r.value_ln).fold(f64::NEG_INFINITY, f64::max);
    let global_min = finite().filter_map(|r| r.extra.get("min_ln").copied()).fold(f64::INFINITY, f64::min);
    report.check("global_max_within_cap", global_max <= ln_cap);
    report.check("global_min_above_jensen", global_min >= ln_floor);
    Ok(report.finish())
}

/// `(1/64) ln(b_k - a_k) + (1/2) ln(1/alpha_{k-1} - 1/beta_{k-1})` against
/// `e^{k+1}/32`, for `2 <= k <= min(k_max, 30)`.
pub fn verify_hardy_blowup(k_max: u32, tol: f64) -> Result<SeriesReport> {
    let ks: Vec<u32> = (2..=k_max.min(GROWTH_K_MAX)).collect();
    let values: Vec<(i64, f64)> = ks
        .iter()
        .map(|&k| {
            let j = k - 1;
            let tail = alpha(j).recip() - beta(j).recip();
            (k as i64, ln_b_minus_a(k) / 64.0 + tail.ln() / 2.0)
        })
        .collect();
    let bounds: Vec<f64> = ks.iter().map(|&k| (k as f64 + 1.0).exp() / 32.0).collect();
    let rows: Vec<(i64, bool)> = values.iter().zip(&bounds).map(|(&(k, v), &b)| (k, v >= b)).collect();
    let threshold = detect_threshold(&rows, |p| *p);
    let norms: Vec<(i64, Result<LogReal>)> = ks
        .par_iter()
        .filter(|&&k| k <= HARDY_NORM_K_MAX)
        .map(|&k| (k as i64, hardy_necessary_product(&ExponentSpec::Ksz, beta_point(k), tol)))
        .collect();

    let mut report = SeriesReport::new(Suite::HardyBlowup.name());
    let mut dominates = true;
    for (i, &(k, v)) in values.iter().enumerate() {
        let mut row = Row::new(k, v, Some(bounds[i]), v >= bounds[i]);
        row.asserted = threshold.is_none() || threshold.is_some_and(|t| k >= t);
        if let Some((_, n)) = norms.iter().find(|(kk, _)| *kk == k) {
            match n {
                Ok(n) => {
                    row = row.with_extra("norm_ln", n.ln());
                    dominates &= n.ln() >= v;
                }
                Err(e) => {
                    row.error = Some(format!("norm product: {e}"));
                    row.pass = false;
                    row.asserted = true;
                }
            }
        }
        report.rows.push(row);
    }
    report.detected_threshold = threshold;
    let series: Vec<f64> = values.iter().map(|v| v.1).collect();
    report.check("increasing", strictly_increasing(&series));
    if k_max >= 5 {
        report.check("threshold_at_most_5", threshold.is_some_and(|t| t <= 5));
        report.check("exceeds_1e6_by_5", values.iter().any(|&(k, v)| k <= 5 && v > 1e6f64.ln()));
    }
    if !norms.is_empty() {
        report.check("norm_product_dominates", dominates);
    }
    Ok(report.finish())
}

/// `(1/dl_d) int_0^{dl_d} (p_DL - 2) dx` with `u = ln ln(1/x)`.
pub fn dl_excess_mean(k: u32, tol: f64) -> Result<f64> {
    let tau_d = -dl_bands(k)?.dl_d.ln();
    let (u0, u1) = (tau_d.ln(), (tau_d + 80.0).ln());
    let spec = ExponentSpec::DieningLerner;
    let h = |u: f64| {
        let tau = u.exp();
        (spec.value_tau(Chart::Base0, tau) - 2.0) * (u - (tau - tau_d)).exp()
    };
    let first = (u0 * 6.0).floor() as i64 + 1;
    let breaks: Vec<f64> = (first..).map(|j| j as f64 / 6.0).take_while(|&u| u < u1).collect();
    Ok(integrate_adaptive_f64(&h, u0, u1, &breaks, tol)?.value.to_f64())
}

/// `6(dl_d - dl_c)/dl_d` against 5.99, for `1 <= k <= min(k_max, 20)`.
pub fn verify_dl_not_blo(k_max: u32, tol: f64) -> Result<SeriesReport> {
    let mut report = SeriesReport::new(Suite::DlNotBlo.name());
    let bound = 5.99f64.ln();
    let mut deficits = Vec::new();
    let mut companion = true;
    for k in 1..=k_max.min(DL_K_MAX) {
        let t = 2.0 * k as f64;
        let gap = (t + 5.0 / 6.0).exp() - (t + 1.0 / 6.0).exp();
        let value = 6f64.ln() + (-(-gap).exp()).ln_1p();
        let deficit = 6f64.ln() - gap;
        deficits.push(-deficit);
        let mut row = Row::new(k as i64, value, Some(bound), value >= bound && gap.is_finite()).with_extra("deficit_ln", deficit);
        if k <= DL_QUAD_K_MAX {
            match dl_excess_mean(k, tol.max(1e-12)) {
                Ok(q) => {
                    row = row.with_extra("quadrature", q);
                    companion &= q >= value.exp() - 1e-6;
                }
                Err(e) => {
                    row.error = Some(format!("quadrature: {e}"));
                    row.pass = false;
                }
            }
        }
        report.rows.push(row);
    }
    if deficits.len() >= 2 {
        report.check("deficit_decreasing", strictly_increasing(&deficits));
    }
    if k_max >= 1 {
        report.check("quadrature_above_band_bound", companion);
    }
    Ok(report.finish())
}

pub fn run_suite(suite: Suite, config: &VerifyConfig) -> Result<SeriesReport> {
    config.validate()?;
    let k = config.k_max;
    match suite {
        Suite::RatioAlphaBeta => verify_ratio_alpha_beta(k),
        Suite::GrowthAbBeta16 => verify_growth_ab_beta16(k),
        Suite::ConjugateBlowup => verify_conjugate_blowup(k, config.lambda, config.tol),
        Suite::PSideUniform => {
            let family = IntervalFamily::new(config.family_config())?;
            verify_p_side_uniform(&family, config.ratio_cap, config.tol)
        }
        Suite::HardyBlowup => verify_hardy_blowup(k, config.tol),
        Suite::DlNotBlo => verify_dl_not_blo(k, config.tol),
        Suite::Ordering => Ok(seq_ordering_check(k as i64)),
    }
}

/// Runs the configured suites in parallel; a suite that fails to run is
/// reported with its error and the others continue.
pub fn run_all(config: &VerifyConfig) -> Vec<SeriesReport> {
    config
        .suites
        .par_iter()
        .map(|&s| run_suite(s, config).unwrap_or_else(|e| SeriesReport::failed(s.name(), e.to_string())))
        .collect()
}
