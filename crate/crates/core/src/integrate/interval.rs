//! Points and intervals of [0, 1] resolved against the block structure
//! `(c_{2n+2}, c_{2n}]` with `c_{2n} = 2d_n`, `c_{2n+1} = d_n + d_{n+1}`, `d_n = e^{-e^n}`.
//!
//! Inside block `n` a point is `x = d_n + e^{-tau}` on the right branch
//! (`tau` in `[e^n, e^{n+1})`) or `x = d_n + 2d_{n+1} - e^{-tau}` on the left
//! branch (`tau` in `(e^n, e^{n+1}]`). Points above `2/e` live in the tail
//! with `x = e^{-tau}`.
//!
//! Each region has a chart coordinate: `tau` itself on the tail and on right
//! branches, and `ell = ln(tau - e^n)` on left branches, where points just
//! above the branch bottom `c_{2n+2}` have `tau - e^n` far below the
//! resolution of `tau`. Keeping chart coordinates instead of `x` retains
//! distances that plain log-magnitudes lose once `d_{n+1}/d_n` drops below
//! machine epsilon.

use std::cmp::Ordering;
use std::f64::consts::LN_2;

use crate::error::{Result, VexError};
use crate::logscale::{ln_sub_exp, LogReal};

/// Default number of resolved blocks.
pub const DEFAULT_DEPTH: u32 = 40;
/// Depth used for ordering and lengths.
pub(crate) const CMP_DEPTH: u32 = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    /// `(2/e, 1]`.
    Tail,
    Branch { block: u32, side: Side },
    /// Below `2d_{depth+1}`, not resolved.
    Below,
}

impl Region {
    fn rank(&self) -> u64 {
        match *self {
            Region::Tail => 0,
            Region::Branch { block, side: Side::Right } => 1 + 2 * block as u64,
            Region::Branch { block, side: Side::Left } => 2 + 2 * block as u64,
            Region::Below => u64::MAX,
        }
    }

    fn from_rank(r: u64) -> Region {
        match r {
            0 => Region::Tail,
            r if r % 2 == 1 => Region::Branch { block: ((r - 1) / 2) as u32, side: Side::Right },
            r => Region::Branch { block: ((r - 2) / 2) as u32, side: Side::Left },
        }
    }

    /// Chart coordinate at the top (largest x) and bottom of the region.
    fn coord_top_bottom(&self) -> (f64, f64) {
        match *self {
            Region::Tail => (0.0, 1.0 - LN_2),
            Region::Branch { block, side: Side::Right } => (ef(block), ef(block + 1)),
            Region::Branch { block, side: Side::Left } => (left_coord(block, 1.0), f64::NEG_INFINITY),
            Region::Below => (f64::INFINITY, f64::INFINITY),
        }
    }

    /// Whether x grows with the chart coordinate.
    pub fn increasing(&self) -> bool {
        matches!(self, Region::Branch { side: Side::Left, .. })
    }
}

/// `e^n` as used by every breakpoint in the crate.
#[inline]
pub(crate) fn ef(n: u32) -> f64 {
    (n as f64).exp()
}

/// `d_n = e^{-e^n}`.
pub fn d(n: u32) -> LogReal {
    LogReal::exp_neg_exp(n as f64)
}

fn two() -> LogReal {
    LogReal::from_ln(LN_2)
}

/// Left-branch coordinate `ln(e^{n+u} - e^n)` of the point where `g = u`.
pub(crate) fn left_coord(block: u32, u: f64) -> f64 {
    block as f64 + u.exp_m1().ln()
}

/// `ln(1 - e^{-s})` given `ln s`.
pub(crate) fn ln_one_minus_exp_neg(ln_s: f64) -> f64 {
    let s = ln_s.exp();
    if s < 1e-8 {
        ln_s - 0.5 * s
    } else {
        (-(-s).exp_m1()).ln()
    }
}

/// `ln s` for `s = -ln(1 - r)` given `ln r`, `r < 1`.
fn ln_neg_ln1m(ln_r: f64) -> f64 {
    if ln_r < -30.0 {
        ln_r + 0.5 * ln_r.exp()
    } else {
        (-(-ln_r.exp()).ln_1p()).ln()
    }
}

/// The quadrature variable: `tau - e^n` on left branches, `tau` elsewhere.
pub(crate) fn chart_v(region: Region, coord: f64) -> f64 {
    match region {
        Region::Branch { side: Side::Left, .. } => coord.exp(),
        _ => coord,
    }
}

/// `b` in `dx = e^{-b} e^{-v} dv`.
pub(crate) fn chart_base(region: Region) -> f64 {
    match region {
        Region::Branch { block, side: Side::Left } => ef(block),
        _ => 0.0,
    }
}

/// g at a chart coordinate (0 on the tail).
pub(crate) fn chart_g(region: Region, coord: f64) -> f64 {
    match region {
        Region::Branch { block, side: Side::Right } => (coord.ln() - block as f64).clamp(0.0, 1.0),
        Region::Branch { block, side: Side::Left } => (coord - block as f64).exp().ln_1p().clamp(0.0, 1.0),
        _ => 0.0,
    }
}

/// x at a chart coordinate.
pub fn chart_x(region: Region, coord: f64) -> LogReal {
    match region {
        Region::Branch { block, side: Side::Right } => d(block) + LogReal::from_ln(-coord),
        Region::Branch { block, side: Side::Left } => {
            two() * d(block + 1) + LogReal::from_ln(-ef(block) + ln_one_minus_exp_neg(coord))
        }
        _ => LogReal::from_ln(-coord),
    }
}

/// Measure between two chart coordinates `c1 <= c2`.
pub fn chart_measure(region: Region, c1: f64, c2: f64) -> LogReal {
    match region {
        Region::Branch { block, side: Side::Left } => {
            if c1 >= c2 {
                return LogReal::ZERO;
            }
            // d_n (e^{-s1} - e^{-s2}) = d_n e^{-s1} (1 - e^{-(s2 - s1)})
            let s1 = c1.exp();
            let ln_gap = if c1 == f64::NEG_INFINITY { c2 } else { c2 + (-(c1 - c2).exp_m1()).ln() };
            LogReal::from_ln(-ef(block) - s1 + ln_one_minus_exp_neg(ln_gap))
        }
        _ => LogReal::from_ln(ln_sub_exp(-c1, -c2)),
    }
}

/// x on a branch given `tau`, as a plain log-magnitude number.
pub fn branch_x(block: u32, side: Side, tau: f64) -> LogReal {
    let y = LogReal::from_ln(-tau);
    match side {
        Side::Right => d(block) + y,
        Side::Left => (d(block) + two() * d(block + 1)) - y,
    }
}

#[derive(Clone, Copy, Debug)]
enum Repr {
    Abs(LogReal),
    Branch { block: u32, side: Side, coord: f64 },
}

/// A point of [0, 1].
#[derive(Clone, Copy, Debug)]
pub struct Point(Repr);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Located {
    pub region: Region,
    /// Chart coordinate; `+inf` below the resolved region.
    pub coord: f64,
}

impl Located {
    pub fn g(&self) -> f64 {
        chart_g(self.region, self.coord)
    }
}

impl Point {
    pub fn zero() -> Self {
        Point(Repr::Abs(LogReal::ZERO))
    }

    pub fn one() -> Self {
        Point(Repr::Abs(LogReal::ONE))
    }

    pub fn from_f64(x: f64) -> Result<Self> {
        Self::from_logreal(LogReal::encode(x)?)
    }

    pub fn from_logreal(x: LogReal) -> Result<Self> {
        if x.sign() < 0 || x > LogReal::ONE {
            return Err(VexError::Domain(format!("point {x} outside [0, 1]")));
        }
        Ok(Point(Repr::Abs(x)))
    }

    /// Structural point on a branch of block `block`, given `tau`.
    pub fn on_branch(block: u32, side: Side, tau: f64) -> Result<Self> {
        let (lo, hi) = (ef(block), ef(block + 1));
        if !(tau >= lo && tau <= hi) {
            return Err(VexError::Range(format!("tau {tau} outside [{lo}, {hi}] for block {block}")));
        }
        let coord = match side {
            Side::Right => tau,
            Side::Left if tau == hi => left_coord(block, 1.0),
            Side::Left => (tau - lo).ln(),
        };
        Ok(Point(Repr::Branch { block, side, coord }))
    }

    /// The point at branch parameter `u` (so `g = u` there).
    pub fn at_level(block: u32, side: Side, u: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&u) {
            return Err(VexError::Range(format!("level {u} outside [0, 1]")));
        }
        let coord = match side {
            Side::Right => (block as f64 + u).exp(),
            Side::Left => left_coord(block, u),
        };
        Ok(Point(Repr::Branch { block, side, coord }))
    }

    pub fn x(&self) -> LogReal {
        match self.0 {
            Repr::Abs(x) => x,
            Repr::Branch { block, side, coord } => chart_x(Region::Branch { block, side }, coord),
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.x().to_f64()
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Abs(x) if x.is_zero())
    }

    pub fn is_structural(&self) -> bool {
        matches!(self.0, Repr::Branch { .. })
    }

    pub fn locate(&self, depth: u32) -> Result<Located> {
        match self.0 {
            Repr::Abs(x) => locate_abs(x, depth),
            Repr::Branch { block, side, coord } => {
                if block > depth {
                    return Ok(Located { region: Region::Below, coord: f64::INFINITY });
                }
                let l = if side == Side::Right && coord == ef(block + 1) {
                    Located { region: Region::Branch { block, side: Side::Left }, coord: left_coord(block, 1.0) }
                } else {
                    Located { region: Region::Branch { block, side }, coord }
                };
                Ok(canonical_bottom(l, depth))
            }
        }
    }

    /// Distance to the nearest anchor of the point's chart: the scale at
    /// which nearby points are still resolved.
    pub fn local_scale(&self) -> LogReal {
        match self.locate(CMP_DEPTH) {
            Ok(Located { region: Region::Branch { block, side: Side::Left }, coord }) => {
                let z = LogReal::from_ln(-ef(block) + ln_one_minus_exp_neg(coord));
                let w = LogReal::from_ln(-ef(block) - coord.exp());
                z.min(w)
            }
            Ok(Located { region: Region::Branch { side: Side::Right, .. }, coord }) => LogReal::from_ln(-coord),
            _ => self.x(),
        }
    }

    /// `x + s`, staying structural when the shifted point is within one
    /// branch transition of the original.
    pub fn shift(&self, s: LogReal) -> Result<Point> {
        if let Repr::Branch { .. } = self.0 {
            if let Ok(Located { region: Region::Branch { block, side }, coord }) = self.locate(CMP_DEPTH) {
                if let Some(p) = shift_branch(block, side, coord, s) {
                    return Ok(p);
                }
            }
        }
        Point::from_logreal(clamp_unit(self.x() + s))
    }
}

/// Right branch of block n from `y = x - d_n`, if `d_{n+1} <= y <= d_n`.
fn right_from_y(n: u32, y: LogReal) -> Option<Point> {
    if !y.is_positive() {
        return None;
    }
    let tau = -y.ln();
    (tau >= ef(n) && tau <= ef(n + 1)).then_some(Point(Repr::Branch { block: n, side: Side::Right, coord: tau }))
}

/// Left branch of block n from `z = x - 2d_{n+1}` and `w = d_n + 2d_{n+1} - x`.
fn left_from(n: u32, z: LogReal, w: LogReal) -> Option<Point> {
    if z.sign() < 0 || w < d(n + 1) {
        return None;
    }
    let en = ef(n);
    let coord = if z.is_zero() {
        f64::NEG_INFINITY
    } else if w.ln() <= -en - LN_2 {
        let s = -w.ln() - en;
        s.ln().min(left_coord(n, 1.0))
    } else {
        ln_neg_ln1m(z.ln() + en)
    };
    Some(Point(Repr::Branch { block: n, side: Side::Left, coord }))
}

fn shift_branch(n: u32, side: Side, coord: f64, s: LogReal) -> Option<Point> {
    match side {
        Side::Right => {
            let y = LogReal::from_ln(-coord) + s;
            if let Some(p) = right_from_y(n, y) {
                return Some(p);
            }
            if y > d(n) {
                if n == 0 {
                    return None;
                }
                // above c_{2n}: left branch of block n-1 with x = 2d_n + z
                let z = y - d(n);
                let w = d(n - 1) - z;
                return left_from(n - 1, z, w);
            }
            // below c_{2n+1}: w = d_n + 2d_{n+1} - (d_n + y)
            let w = two() * d(n + 1) - y;
            let z = d(n) - w;
            left_from(n, z, w)
        }
        Side::Left => {
            let z0 = LogReal::from_ln(-ef(n) + ln_one_minus_exp_neg(coord));
            let w0 = LogReal::from_ln(-ef(n) - coord.exp());
            let (z, w) = (z0 + s, w0 - s);
            if let Some(p) = left_from(n, z, w) {
                return Some(p);
            }
            if z.sign() < 0 {
                // below c_{2n+2}: right branch of block n+1 with y = d_{n+1} + z
                return right_from_y(n + 1, d(n + 1) + z);
            }
            // above c_{2n+1}: y = x - d_n = 2d_{n+1} - w
            right_from_y(n, two() * d(n + 1) - w)
        }
    }
}

/// Bottom of a left branch (`c_{2n+2}`) belongs to the right branch of block n+1.
fn canonical_bottom(l: Located, depth: u32) -> Located {
    if let Region::Branch { block, side: Side::Left } = l.region {
        if l.coord == f64::NEG_INFINITY {
            if block + 1 > depth {
                return Located { region: Region::Below, coord: f64::INFINITY };
            }
            return Located { region: Region::Branch { block: block + 1, side: Side::Right }, coord: ef(block + 1) };
        }
    }
    l
}

fn clamp_unit(x: LogReal) -> LogReal {
    if x.sign() < 0 {
        LogReal::ZERO
    } else if x > LogReal::ONE {
        LogReal::ONE
    } else {
        x
    }
}

fn locate_abs(x: LogReal, depth: u32) -> Result<Located> {
    if x.sign() < 0 || x > LogReal::ONE {
        return Err(VexError::Domain(format!("point {x} outside [0, 1]")));
    }
    if x.is_zero() {
        return Ok(Located { region: Region::Below, coord: f64::INFINITY });
    }
    let two_over_e = LogReal::from_ln(LN_2 - 1.0);
    if x > two_over_e {
        return Ok(Located { region: Region::Tail, coord: -x.ln() });
    }
    // x <= 2d_n  <=>  e^n <= ln 2 - ln x
    let guess = (LN_2 - x.ln()).ln().floor().max(0.0);
    let mut n = if guess > (depth + 2) as f64 { depth + 2 } else { guess as u32 };
    let twice = |k: u32| LogReal::from_ln(LN_2 - ef(k));
    while n > 0 && x > twice(n) {
        n -= 1;
    }
    while n <= depth && x <= twice(n + 1) {
        n += 1;
    }
    if n > depth {
        return Ok(Located { region: Region::Below, coord: f64::INFINITY });
    }
    let (lo, hi) = (ef(n), ef(n + 1));
    let odd = d(n) + d(n + 1);
    if x > odd {
        let off = x - d(n);
        let tau = (-off.ln()).clamp(lo, hi);
        let tau = if tau == hi { hi.next_down_compat() } else { tau };
        return Ok(Located { region: Region::Branch { block: n, side: Side::Right }, coord: tau });
    }
    let z = x - two() * d(n + 1);
    let w = (d(n) + two() * d(n + 1)) - x;
    let region = Region::Branch { block: n, side: Side::Left };
    let coord = match left_from(n, z.max(LogReal::ZERO), w.max(d(n + 1))) {
        Some(Point(Repr::Branch { coord, .. })) => coord,
        _ => f64::NEG_INFINITY,
    };
    Ok(canonical_bottom(Located { region, coord }, depth))
}

trait NextDown {
    fn next_down_compat(self) -> f64;
}

impl NextDown for f64 {
    fn next_down_compat(self) -> f64 {
        f64::from_bits(self.to_bits() - 1)
    }
}

/// Real-line order of two points.
pub fn cmp_points(a: &Point, b: &Point) -> Ordering {
    if let (Repr::Abs(x), Repr::Abs(y)) = (a.0, b.0) {
        return x.cmp(&y);
    }
    let la = a.locate(CMP_DEPTH).expect("validated point");
    let lb = b.locate(CMP_DEPTH).expect("validated point");
    let (ra, rb) = (la.region.rank(), lb.region.rank());
    if ra != rb {
        // higher rank lies closer to 0
        return rb.cmp(&ra);
    }
    let by_chart = match la.region {
        Region::Below => a.x().cmp(&b.x()),
        r if r.increasing() => la.coord.total_cmp(&lb.coord),
        _ => lb.coord.total_cmp(&la.coord),
    };
    if by_chart == Ordering::Equal && !(a.is_structural() && b.is_structural()) {
        return a.x().cmp(&b.x());
    }
    by_chart
}

impl PartialEq for Point {
    fn eq(&self, other: &Self) -> bool {
        cmp_points(self, other) == Ordering::Equal
    }
}

impl PartialOrd for Point {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(cmp_points(self, other))
    }
}

/// Part of an interval inside one region, as a chart-coordinate range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Span {
    pub region: Region,
    pub c_min: f64,
    pub c_max: f64,
}

impl Span {
    pub fn measure(&self) -> LogReal {
        chart_measure(self.region, self.c_min, self.c_max)
    }

    pub fn x_at(&self, coord: f64) -> LogReal {
        chart_x(self.region, coord)
    }

    /// The smaller of the two endpoint x values.
    pub fn x_lower(&self) -> LogReal {
        if self.region.increasing() {
            self.x_at(self.c_min)
        } else {
            self.x_at(self.c_max)
        }
    }
}

/// Decomposition of an interval against a depth-limited block table.
#[derive(Clone, Debug, PartialEq)]
pub struct Spans {
    pub spans: Vec<Span>,
    /// Unresolved part `(lo, hi]`: below `2d_{depth+1}`, or finer than the chart.
    pub unresolved: Option<(LogReal, LogReal)>,
}

impl Spans {
    pub fn resolved_measure(&self) -> LogReal {
        self.spans.iter().map(|s| s.measure()).sum()
    }

    pub fn unresolved_measure(&self) -> LogReal {
        self.unresolved.map(|(lo, hi)| hi - lo).unwrap_or(LogReal::ZERO)
    }
}

/// Left-open right-closed interval `(lo, hi]` of [0, 1].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: Point,
    pub hi: Point,
}

impl Interval {
    pub fn new(lo: Point, hi: Point) -> Result<Self> {
        if cmp_points(&lo, &hi) != Ordering::Less {
            return Err(VexError::Domain(format!("empty interval ({}, {}]", lo.x(), hi.x())));
        }
        Ok(Interval { lo, hi })
    }

    pub fn from_f64(lo: f64, hi: f64) -> Result<Self> {
        Self::new(Point::from_f64(lo)?, Point::from_f64(hi)?)
    }

    pub fn unit() -> Self {
        Interval { lo: Point::zero(), hi: Point::one() }
    }

    pub fn touches_zero(&self) -> bool {
        self.lo.is_zero()
    }

    pub fn spans(&self, depth: u32) -> Result<Spans> {
        let lh = self.hi.locate(depth)?;
        let ll = self.lo.locate(depth)?;
        if lh.region == Region::Below {
            return Ok(Spans { spans: Vec::new(), unresolved: Some((self.lo.x(), self.hi.x())) });
        }
        let last = if ll.region == Region::Below { 2 + 2 * depth as u64 } else { ll.region.rank() };
        let mut spans = Vec::new();
        for rank in lh.region.rank()..=last {
            let region = Region::from_rank(rank);
            let (top, bottom) = region.coord_top_bottom();
            let c_top = if region == lh.region { lh.coord } else { top };
            let c_bot = if region == ll.region { ll.coord } else { bottom };
            if c_top != c_bot {
                spans.push(Span { region, c_min: c_top.min(c_bot), c_max: c_top.max(c_bot) });
            }
        }
        if spans.is_empty() && !(self.lo.is_structural() && self.hi.is_structural()) {
            // both ends inside one chart cell; fall back to plain magnitudes
            return Ok(Spans { spans, unresolved: Some((self.lo.x(), self.hi.x())) });
        }
        let unresolved = if ll.region == Region::Below {
            Some((self.lo.x(), two() * d(depth + 1)))
        } else {
            None
        };
        Ok(Spans { spans, unresolved })
    }

    /// Exact length, summed region by region.
    pub fn length(&self) -> LogReal {
        let s = self.spans(CMP_DEPTH).expect("validated interval");
        s.resolved_measure() + s.unresolved_measure()
    }

    /// Whether `p` lies in `(lo, hi]`.
    pub fn contains(&self, p: &Point) -> bool {
        cmp_points(&self.lo, p) == Ordering::Less && cmp_points(p, &self.hi) != Ordering::Greater
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_and_blocks() {
        let l = Point::from_f64(0.9).unwrap().locate(40).unwrap();
        assert_eq!(l.region, Region::Tail);
        let l = Point::from_f64(0.5).unwrap().locate(40).unwrap();
        assert_eq!(l.region, Region::Branch { block: 0, side: Side::Right });
        // c_0 = 2/e belongs to the right branch of block 0
        let c0 = Point::from_logreal(LogReal::from_ln(LN_2 - 1.0)).unwrap().locate(40).unwrap();
        assert_eq!(c0.region, Region::Branch { block: 0, side: Side::Right });
        assert!((c0.coord - 1.0).abs() < 1e-14);
    }

    #[test]
    fn boundary_points_are_canonical() {
        // c_1 on the right branch and on the left branch is the same point
        let r = Point::on_branch(0, Side::Right, ef(1)).unwrap();
        let l = Point::on_branch(0, Side::Left, ef(1)).unwrap();
        assert_eq!(r.locate(40).unwrap(), l.locate(40).unwrap());
        // c_2 = bottom of left(0) = top of right(1)
        let a = Point::on_branch(0, Side::Left, ef(0)).unwrap().locate(40).unwrap();
        assert_eq!(a.region, Region::Branch { block: 1, side: Side::Right });
    }

    #[test]
    fn left_coordinates_round_trip() {
        for n in [0u32, 2, 5] {
            for u in [0.1, 0.5, 63.0 / 64.0] {
                let p = Point::at_level(n, Side::Left, u).unwrap();
                let q = Point::from_logreal(p.x()).unwrap();
                if n < 2 {
                    assert!((q.locate(40).unwrap().g() - u).abs() < 1e-9, "n={n} u={u}");
                }
                assert!((p.locate(40).unwrap().g() - u).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn ordering_deep_structural() {
        for k in [3u32, 20, 40] {
            let a = Point::at_level(k, Side::Left, 63.0 / 64.0).unwrap();
            let c = Point::on_branch(k, Side::Left, ef(k + 1)).unwrap();
            let b = Point::at_level(k, Side::Right, 63.0 / 64.0).unwrap();
            assert!(a < c && c < b);
        }
    }

    #[test]
    fn abs_points_far_above_branch_bottom() {
        // both points on the left branch of block 7, far below d_7
        let lo = Point::from_logreal(LogReal::from_ln(-2523.0)).unwrap();
        let hi = Point::from_logreal(LogReal::from_ln(-1295.0)).unwrap();
        let q = Interval::new(lo, hi).unwrap();
        assert!((q.length().ln() + 1295.0).abs() < 1e-9);
        let lo = Point::from_logreal(LogReal::from_ln(-1296.0)).unwrap();
        let q = Interval::new(lo, hi).unwrap();
        let expect = ln_sub_exp(-1295.0, -1296.0);
        assert!((q.length().ln() - expect).abs() < 1e-9);
    }

    #[test]
    fn lengths() {
        let q = Interval::from_f64(0.25, 0.75).unwrap();
        assert!((q.length().to_f64() - 0.5).abs() < 1e-15);
        let q = Interval::unit();
        assert!((q.length().to_f64() - 1.0).abs() < 1e-15);
        // b_k - a_k in closed form
        for k in [1u32, 5, 30] {
            let a = Point::at_level(k, Side::Left, 63.0 / 64.0).unwrap();
            let b = Point::at_level(k, Side::Right, 63.0 / 64.0).unwrap();
            let len = Interval::new(a, b).unwrap().length();
            let t = (k as f64 + 63.0 / 64.0).exp();
            let expect = LN_2 + ln_sub_exp(-t, -ef(k + 1));
            assert!((len.ln() - expect).abs() < 1e-12 * expect.abs(), "k={k}");
        }
    }

    #[test]
    fn shift_stays_structural() {
        let b = Point::at_level(30, Side::Right, 63.0 / 64.0).unwrap();
        let y = LogReal::from_ln(-(30.0f64 + 63.0 / 64.0).exp());
        let moved = b.shift(y).unwrap();
        assert!(moved.is_structural());
        let len = Interval::new(b, moved).unwrap().length();
        assert!((len.ln() - y.ln()).abs() < 1e-9 * y.ln().abs());
    }

    #[test]
    fn shift_across_branch_junctions() {
        for n in [2u32, 6, 12] {
            // just above c_{2n}: into the bottom of left(n-1)
            let top = Point::at_level(n, Side::Right, 0.0).unwrap();
            let s = d(n) * LogReal::from_ln(-10.0);
            let up = top.shift(s).unwrap();
            assert!(up.is_structural());
            let len = Interval::new(top, up).unwrap().length();
            assert!((len.ln() - s.ln()).abs() < 1e-9 * s.ln().abs(), "n={n}");
            // just below c_{2n+1} from b_n: into the top of left(n)
            let b = Point::at_level(n, Side::Right, 63.0 / 64.0).unwrap();
            let y = LogReal::from_ln(-(n as f64 + 63.0 / 64.0).exp());
            let down = b.shift(-(y + y)).unwrap();
            assert!(down.is_structural());
            let len = Interval::new(down, b).unwrap().length();
            assert!((len.ln() - (y + y).ln()).abs() < 1e-9 * y.ln().abs(), "n={n}");
        }
    }

    #[test]
    fn rejects_outside_unit() {
        assert!(Point::from_f64(1.5).is_err());
        assert!(Point::from_f64(-0.1).is_err());
        assert!(Interval::from_f64(0.5, 0.5).is_err());
    }
}
