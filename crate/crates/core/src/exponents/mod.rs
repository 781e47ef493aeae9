//! Pointwise exponents and their piecewise structure.
//!
//! Every exponent here is a function of a chart coordinate: `tau` with
//! `x = e^{-tau}` near 1 (the tail, and the whole of (0, 1] for the
//! non-block exponents), or the branch coordinates of block n described in
//! [`crate::integrate`].

mod segments;

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use num_traits::ToPrimitive;

pub use segments::{decompose, Chart, Decomp, Residual, Segment, Shape, TAU_CAP};

use crate::error::{Result, VexError};
use crate::integrate::{chart_g, Interval, Point, Region, Side, DEFAULT_DEPTH};
use crate::logscale::{LogReal, Rational};

pub const LERNER_DEFAULT_A: f64 = 0.125;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExponentSpec {
    Ksz,
    KszConjugate,
    Lerner(f64),
    DieningLerner,
    /// The block function g itself (values in [0, 1]).
    G,
    /// `ln ln(1/x)` below `1/e`, 0 above.
    LogLog,
    Constant(Rational),
}

impl ExponentSpec {
    pub fn lerner(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 0.5) {
            return Err(VexError::Invalid(format!("Lerner parameter {a} outside (0, 1/2)")));
        }
        Ok(ExponentSpec::Lerner(a))
    }

    pub fn constant(q: Rational) -> Result<Self> {
        if q < Rational::from_integer(1) {
            return Err(VexError::Invalid(format!("constant exponent {q} below 1")));
        }
        Ok(ExponentSpec::Constant(q))
    }

    /// Whether values depend on the block structure of g.
    pub fn is_block(&self) -> bool {
        matches!(self, ExponentSpec::Ksz | ExponentSpec::KszConjugate | ExponentSpec::G)
    }

    /// Whether the exponent is a bounded exponent `p >= 1` (so norms make sense).
    pub fn is_exponent(&self) -> bool {
        !matches!(self, ExponentSpec::G | ExponentSpec::LogLog)
    }

    /// Closed range of values over (0, 1].
    pub fn range(&self) -> (f64, f64) {
        match *self {
            ExponentSpec::Ksz => (64.0 / 63.0, 2.0),
            ExponentSpec::KszConjugate => (2.0, 64.0),
            ExponentSpec::Lerner(a) => (2.0 - 2.0 * a, 2.0),
            ExponentSpec::DieningLerner => (2.0, 8.0),
            ExponentSpec::G => (0.0, 1.0),
            ExponentSpec::LogLog => (0.0, f64::INFINITY),
            ExponentSpec::Constant(q) => {
                let v = rational_f64(q);
                (v, v)
            }
        }
    }

    /// The conjugate spec when it has a closed form.
    pub fn conjugate(&self) -> Result<Self> {
        match *self {
            ExponentSpec::Ksz => Ok(ExponentSpec::KszConjugate),
            ExponentSpec::KszConjugate => Ok(ExponentSpec::Ksz),
            ExponentSpec::Constant(q) if q > Rational::from_integer(1) => {
                Ok(ExponentSpec::Constant(q / (q - Rational::from_integer(1))))
            }
            ExponentSpec::Constant(_) => Err(VexError::ConjugateUndefined),
            _ => Err(VexError::Invalid(format!("no closed-form conjugate for {self}"))),
        }
    }

    /// Value at chart coordinate `tau`.
    pub(crate) fn value_tau(&self, chart: Chart, tau: f64) -> f64 {
        match *self {
            ExponentSpec::Ksz => 1.0 / clamp_g(g_tau(chart, tau)),
            ExponentSpec::KszConjugate => 1.0 / (1.0 - clamp_g(g_tau(chart, tau))),
            ExponentSpec::G => g_tau(chart, tau),
            ExponentSpec::Lerner(a) => 2.0 - a * (1.0 + lerner_w(tau).sin()),
            ExponentSpec::DieningLerner => 2.0 + 6.0 * theta((PI * tau.ln()).sin()),
            ExponentSpec::LogLog => {
                if tau > 1.0 {
                    tau.ln()
                } else {
                    0.0
                }
            }
            ExponentSpec::Constant(q) => rational_f64(q),
        }
    }

    /// `1/p` at chart coordinate `tau`, exact on the clamped pieces of the block exponents.
    pub(crate) fn inv_p_tau(&self, chart: Chart, tau: f64) -> f64 {
        match *self {
            ExponentSpec::Ksz => clamp_g(g_tau(chart, tau)),
            ExponentSpec::KszConjugate => 1.0 - clamp_g(g_tau(chart, tau)),
            ExponentSpec::Constant(q) => rational_f64(q.recip()),
            _ => 1.0 / self.value_tau(chart, tau),
        }
    }
}

fn rational_f64(q: Rational) -> f64 {
    q.to_f64().expect("rational converts")
}

fn clamp_g(g: f64) -> f64 {
    g.clamp(0.5, 63.0 / 64.0)
}

fn g_tau(chart: Chart, tau: f64) -> f64 {
    match chart {
        Chart::Base0 => 0.0,
        Chart::Branch { .. } => chart_g(chart.region(), tau),
    }
}

/// `ln ln(e + x + 1/x)` at `x = e^{-tau}`.
pub(crate) fn lerner_w(tau: f64) -> f64 {
    let t = tau.abs();
    // e + e^t + e^{-t} = e^t (1 + (e + e^{-t}) e^{-t})
    (t + ((E + (-t).exp()) * (-t).exp()).ln_1p()).ln()
}

impl fmt::Display for ExponentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExponentSpec::Ksz => write!(f, "ksz"),
            ExponentSpec::KszConjugate => write!(f, "ksz-conj"),
            ExponentSpec::Lerner(a) => write!(f, "lerner:{a}"),
            ExponentSpec::DieningLerner => write!(f, "dl"),
            ExponentSpec::G => write!(f, "g"),
            ExponentSpec::LogLog => write!(f, "loglog"),
            ExponentSpec::Constant(q) => write!(f, "const:{q}"),
        }
    }
}

pub const SPEC_NAMES: &str = "ksz, ksz-conj, lerner[:<a>], dl, g, loglog, const:<q>";

impl FromStr for ExponentSpec {
    type Err = VexError;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let bad = || VexError::Invalid(format!("unknown exponent '{s}'; expected one of {SPEC_NAMES}"));
        match (name, arg) {
            ("ksz", None) => Ok(ExponentSpec::Ksz),
            ("ksz-conj", None) => Ok(ExponentSpec::KszConjugate),
            ("dl", None) => Ok(ExponentSpec::DieningLerner),
            ("g", None) => Ok(ExponentSpec::G),
            ("loglog", None) => Ok(ExponentSpec::LogLog),
            ("lerner", None) => ExponentSpec::lerner(LERNER_DEFAULT_A),
            ("lerner", Some(a)) => ExponentSpec::lerner(parse_real(a).ok_or_else(bad)?),
            ("const", Some(q)) => ExponentSpec::constant(parse_rational(q).ok_or_else(bad)?),
            _ => Err(bad()),
        }
    }
}

fn parse_real(s: &str) -> Option<f64> {
    if let Some(q) = parse_rational_exact(s) {
        return q.to_f64();
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_rational_exact(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().ok()?;
        let d: i64 = d.trim().parse().ok()?;
        return (d != 0).then(|| Rational::new(n, d));
    }
    s.parse::<i64>().ok().map(Rational::from_integer)
}

/// `a/b`, an integer, or a decimal (converted to the nearest small fraction).
pub fn parse_rational(s: &str) -> Option<Rational> {
    parse_rational_exact(s).or_else(|| {
        let v: f64 = s.trim().parse().ok()?;
        Rational::approximate_float(v)
    })
}

/// Anything that names a point of [0, 1].
pub trait IntoPoint {
    fn into_point(self) -> Result<Point>;
}

impl IntoPoint for f64 {
    fn into_point(self) -> Result<Point> {
        Point::from_f64(self)
    }
}

impl IntoPoint for LogReal {
    fn into_point(self) -> Result<Point> {
        Point::from_logreal(self)
    }
}

impl IntoPoint for Point {
    fn into_point(self) -> Result<Point> {
        Ok(self)
    }
}

impl IntoPoint for &Point {
    fn into_point(self) -> Result<Point> {
        Ok(*self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PieceKind {
    /// Inside `(alpha_k, beta_k]`, where `1/p` is clamped to 1/2.
    AClamp,
    /// Inside `(a_k, b_k]`, where `1/p` is clamped to 63/64.
    BClamp,
    GLeftBranch(u32),
    GRightBranch(u32),
    /// `(2/e, 1]`.
    Tail,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PieceQuery {
    pub x: LogReal,
    pub piece_kind: PieceKind,
    /// Block n with `c_{2n+2} < x <= c_{2n}`; `None` on the tail.
    pub block_index: Option<u32>,
    pub side: Option<Side>,
    pub g: f64,
}

pub fn piece_query(x: impl IntoPoint) -> Result<PieceQuery> {
    let p = x.into_point()?;
    if p.is_zero() {
        return Err(VexError::Domain("x must be positive".into()));
    }
    let loc = p.locate(DEFAULT_DEPTH)?;
    match loc.region {
        Region::Below => Err(VexError::ResolutionExceeded { depth: DEFAULT_DEPTH }),
        Region::Tail => Ok(PieceQuery { x: p.x(), piece_kind: PieceKind::Tail, block_index: None, side: None, g: 0.0 }),
        Region::Branch { block, side } => {
            let u = loc.g();
            let in_a = match side {
                Side::Right => u < 0.5,
                Side::Left => u <= 0.5,
            };
            let in_b = match side {
                Side::Right => u >= 63.0 / 64.0,
                Side::Left => u > 63.0 / 64.0,
            };
            let piece_kind = if in_a {
                PieceKind::AClamp
            } else if in_b {
                PieceKind::BClamp
            } else if side == Side::Left {
                PieceKind::GLeftBranch(block)
            } else {
                PieceKind::GRightBranch(block)
            };
            Ok(PieceQuery { x: p.x(), piece_kind, block_index: Some(block), side: Some(side), g: u })
        }
    }
}

/// The block function g on (0, 1].
pub fn g_eval(x: impl IntoPoint) -> Result<f64> {
    Ok(piece_query(x)?.g)
}

pub fn theta(t: f64) -> f64 {
    (t + 0.5).clamp(0.0, 1.0)
}

/// `ln ln(1/x)` on `(0, 1/e]`, 0 on `(1/e, 1]`.
pub fn f_loglog(x: f64) -> Result<f64> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(VexError::Domain(format!("x = {x} outside (0, 1]")));
    }
    let tau = -x.ln();
    Ok(if tau > 1.0 { tau.ln() } else { 0.0 })
}

/// Pointwise value of the exponent.
pub fn p_eval(spec: &ExponentSpec, x: impl IntoPoint) -> Result<f64> {
    let p = x.into_point()?;
    if p.is_zero() {
        return match spec {
            ExponentSpec::Ksz | ExponentSpec::KszConjugate => Ok(2.0),
            ExponentSpec::Constant(q) => Ok(rational_f64(*q)),
            _ => Err(VexError::Domain("x = 0 outside the domain".into())),
        };
    }
    if spec.is_block() {
        let loc = p.locate(DEFAULT_DEPTH)?;
        let chart = match loc.region {
            Region::Below => return Err(VexError::ResolutionExceeded { depth: DEFAULT_DEPTH }),
            Region::Tail => Chart::Base0,
            Region::Branch { block, side } => Chart::Branch { block, side },
        };
        return Ok(spec.value_tau(chart, loc.coord));
    }
    let x = p.x();
    if *spec == ExponentSpec::DieningLerner && x == LogReal::ONE {
        return Err(VexError::Domain("x = 1 outside (0, 1)".into()));
    }
    Ok(spec.value_tau(Chart::Base0, -x.ln()))
}

/// `p/(p-1)`.
pub fn conjugate_eval(spec: &ExponentSpec, x: impl IntoPoint) -> Result<f64> {
    let p = x.into_point()?;
    match spec {
        ExponentSpec::Ksz if !p.is_zero() => {
            let g = g_eval(p)?;
            Ok(1.0 / (1.0 - clamp_g(g)))
        }
        ExponentSpec::KszConjugate if !p.is_zero() => Ok(1.0 / clamp_g(g_eval(p)?)),
        _ => {
            let v = p_eval(spec, p)?;
            conjugate_value(v)
        }
    }
}

pub fn conjugate_value(p: f64) -> Result<f64> {
    if p == 1.0 {
        return Err(VexError::ConjugateUndefined);
    }
    if !(p > 1.0) {
        return Err(VexError::Domain(format!("p = {p} below 1")));
    }
    Ok(p / (p - 1.0))
}

/// Essential infimum and supremum of the exponent over `q`.
pub fn exponent_bounds(spec: &ExponentSpec, q: &Interval) -> Result<(f64, f64)> {
    let dec = decompose(spec, q, DEFAULT_DEPTH)?;
    let (lo, hi) = dec.value_bounds();
    if dec.segments.is_empty() {
        return Err(VexError::Unresolvable { lo, hi });
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::{a_point, alpha, alpha_point, b_point, beta_point, c_point, seq_c_closed};

    #[test]
    fn g_examples() {
        assert!(g_eval(2.0 / E).unwrap().abs() < 1e-12);
        assert!((g_eval(seq_c_closed(1)).unwrap() - 1.0).abs() < 1e-12);
        assert!((g_eval(alpha(0)).unwrap() - 0.5).abs() < 1e-12);
        assert!((g_eval(alpha_point(0)).unwrap() - 0.5).abs() < 1e-15);
        assert!(g_eval(0.0).is_err());
    }

    #[test]
    fn p_examples() {
        assert_eq!(p_eval(&ExponentSpec::Ksz, 0.9).unwrap(), 2.0);
        assert_eq!(p_eval(&ExponentSpec::Ksz, c_point(1)).unwrap(), 64.0 / 63.0);
        let x = (-1f64).exp() + (-(0.75f64).exp()).exp();
        assert!((p_eval(&ExponentSpec::Ksz, x).unwrap() - 4.0 / 3.0).abs() < 1e-12);
        let x = LogReal::exp_neg_exp(2.5);
        assert!((p_eval(&ExponentSpec::DieningLerner, x).unwrap() - 8.0).abs() < 1e-12);
        assert_eq!(p_eval(&ExponentSpec::Ksz, 0.0).unwrap(), 2.0);
        assert!(p_eval(&ExponentSpec::DieningLerner, 1.0).is_err());
        assert!(p_eval(&ExponentSpec::DieningLerner, 0.0).is_err());
    }

    #[test]
    fn conjugates() {
        assert_eq!(conjugate_value(2.0).unwrap(), 2.0);
        assert!((conjugate_value(64.0 / 63.0).unwrap() - 64.0).abs() < 1e-12);
        assert!((conjugate_value(4.0 / 3.0).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(conjugate_value(1.0), Err(VexError::ConjugateUndefined));
        assert!((conjugate_eval(&ExponentSpec::Ksz, b_point(2)).unwrap() - 64.0).abs() < 1e-12);
    }

    #[test]
    fn theta_and_loglog() {
        assert_eq!((theta(-1.0), theta(0.0), theta(1.0)), (0.0, 0.5, 1.0));
        assert!(f_loglog((-1f64).exp()).unwrap().abs() < 1e-15);
        assert!((f_loglog((-E).exp()).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(f_loglog(0.5).unwrap(), 0.0);
        assert!(f_loglog(0.0).is_err());
    }

    #[test]
    fn piece_examples() {
        assert_eq!(piece_query(0.9).unwrap().piece_kind, PieceKind::Tail);
        let q = piece_query(0.5).unwrap();
        assert_eq!((q.piece_kind, q.block_index), (PieceKind::GRightBranch(0), Some(0)));
        let q = piece_query(c_point(1)).unwrap();
        assert_eq!((q.block_index, q.side), (Some(0), Some(Side::Left)));
        assert_eq!(piece_query(beta_point(3)).unwrap().piece_kind, PieceKind::AClamp);
        assert_eq!(piece_query(b_point(3)).unwrap().piece_kind, PieceKind::BClamp);
        assert_eq!(piece_query(a_point(3)).unwrap().piece_kind, PieceKind::GLeftBranch(3));
        assert!(matches!(piece_query(LogReal::exp_neg_exp(45.0)), Err(VexError::ResolutionExceeded { .. })));
    }

    #[test]
    fn parsing() {
        for s in ["ksz", "ksz-conj", "dl", "g", "loglog", "lerner:0.125", "const:64/63", "const:3"] {
            let spec: ExponentSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert_eq!("lerner".parse::<ExponentSpec>().unwrap(), ExponentSpec::Lerner(0.125));
        assert_eq!("const:1.5".parse::<ExponentSpec>().unwrap(), ExponentSpec::Constant(Rational::new(3, 2)));
        for s in ["bogus", "lerner:0.7", "const:1/2", "const:x", "ksz:1"] {
            assert!(s.parse::<ExponentSpec>().is_err(), "{s}");
        }
    }

    #[test]
    fn bounds_examples() {
        let q = Interval::new(a_point(0), b_point(0)).unwrap();
        assert_eq!(exponent_bounds(&ExponentSpec::Ksz, &q).unwrap(), (64.0 / 63.0, 64.0 / 63.0));
        for k in [1, 5, 20] {
            let q = Interval::new(Point::zero(), beta_point(k)).unwrap();
            assert_eq!(exponent_bounds(&ExponentSpec::Ksz, &q).unwrap(), (64.0 / 63.0, 2.0));
        }
        let c3 = ExponentSpec::Constant(Rational::from_integer(3));
        assert_eq!(exponent_bounds(&c3, &Interval::from_f64(0.2, 0.3).unwrap()).unwrap(), (3.0, 3.0));
    }
}
