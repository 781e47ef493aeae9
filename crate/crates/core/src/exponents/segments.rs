//! Decomposition of an interval into flat and monotone pieces of an exponent.

use std::f64::consts::{E, PI};

use super::ExponentSpec;
use crate::error::Result;
use crate::integrate::{
    adaptive_log, chart_base, chart_measure, chart_v, chart_x, ef, exp_cuts, left_coord, ln_one_minus_exp_neg, Interval, Region, Side, MAX_CHANNELS,
};
use crate::logscale::{ln_sub_exp, LogReal};

/// `e^{41}`: chart coordinates beyond this are not resolved.
pub const TAU_CAP: f64 = 6.398_434_935_300_549e17;
/// `e^{-40}`: the Diening-Lerner exponent oscillates without end as `x -> 1`.
const TAU_FLOOR: f64 = 4.248_354_255_291_589e-18;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Chart {
    /// `x = e^{-tau}`.
    Base0,
    /// A branch of block n, in its chart coordinate.
    Branch { block: u32, side: Side },
}

impl Chart {
    pub(crate) fn region(&self) -> Region {
        match *self {
            Chart::Base0 => Region::Tail,
            Chart::Branch { block, side } => Region::Branch { block, side },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    Flat(f64),
    /// Monotone in the chart coordinate.
    Varying,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub spec: ExponentSpec,
    pub chart: Chart,
    pub c_lo: f64,
    pub c_hi: f64,
    pub shape: Shape,
}

/// A part of the interval whose structure is not resolved; only its measure
/// and the range of values it can take are known.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residual {
    pub measure: LogReal,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decomp {
    pub segments: Vec<Segment>,
    pub residuals: Vec<Residual>,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Chart coordinate on a branch of block n where g = u.
fn cut_coord(block: u32, side: Side, u: f64) -> f64 {
    match side {
        Side::Right => (block as f64 + u).exp(),
        Side::Left => left_coord(block, u),
    }
}

impl Segment {
    pub fn ln_measure(&self) -> f64 {
        self.measure().ln()
    }

    pub fn measure(&self) -> LogReal {
        chart_measure(self.chart.region(), self.c_lo, self.c_hi)
    }

    pub fn value_at(&self, c: f64) -> f64 {
        match self.shape {
            Shape::Flat(v) => v,
            Shape::Varying => self.spec.value_tau(self.chart, c.clamp(self.c_lo, self.c_hi)),
        }
    }

    pub fn inv_p_at(&self, c: f64) -> f64 {
        self.spec.inv_p_tau(self.chart, c.clamp(self.c_lo, self.c_hi))
    }

    /// `ln` of the measure as an unevaluated sum `hi + lo`, taken from the
    /// `v` range so that differences between segments stay exact however
    /// large the logs are.
    pub(crate) fn ln_measure_parts(&self) -> (f64, f64) {
        let (v0, v1) = self.v_range();
        let (hi, lo) = two_sum(-chart_base(self.chart.region()), -v0);
        let ln_gap = match self.chart {
            // s = e^l underflows
            Chart::Branch { side: Side::Left, .. } if !(v0 > 0.0 && v1 > v0) => {
                if self.c_lo == f64::NEG_INFINITY {
                    self.c_hi
                } else {
                    self.c_hi + (-(self.c_lo - self.c_hi).exp_m1()).ln()
                }
            }
            _ => (v1 - v0).ln(),
        };
        let tail = if ln_gap == f64::INFINITY { 0.0 } else { ln_one_minus_exp_neg(ln_gap) };
        let (hi, e) = two_sum(hi, tail);
        (hi, lo + e)
    }

    pub fn x_at(&self, c: f64) -> LogReal {
        chart_x(self.chart.region(), c)
    }

    /// Smallest x of the segment.
    pub fn x_lower(&self) -> LogReal {
        match self.chart {
            Chart::Branch { side: Side::Left, .. } => self.x_at(self.c_lo),
            _ => self.x_at(self.c_hi),
        }
    }

    pub fn value_range(&self) -> (f64, f64) {
        match self.shape {
            Shape::Flat(v) => (v, v),
            Shape::Varying => {
                let (a, b) = (self.value_at(self.c_lo), self.value_at(self.c_hi));
                (a.min(b), a.max(b))
            }
        }
    }

    /// Range of the quadrature variable `v`, with `dx = e^{-base} e^{-v} dv`.
    /// Ends on a g-level cut of a left branch are placed exactly at
    /// `e^{n+u} - e^n`, where the right branch puts the same level.
    pub(crate) fn v_range(&self) -> (f64, f64) {
        let r = self.chart.region();
        let v = |c: f64| match self.chart {
            Chart::Branch { block, side: Side::Left } => {
                for u in [0.5, 63.0 / 64.0] {
                    if c == left_coord(block, u) {
                        return (block as f64 + u).exp() - ef(block);
                    }
                }
                chart_v(r, c)
            }
            _ => chart_v(r, c),
        };
        (v(self.c_lo), v(self.c_hi))
    }

    /// `1/p` at `v = v0 + t` as `[level, segment offset, node offset]`.
    /// On the varying parts of the block exponents `level` is the exact value
    /// at the cut nearest to `v0`, the segment offset is `1/p(v0) - level` and
    /// the node offset is `1/p(v0 + t) - 1/p(v0)`, each from a chart
    /// difference, so differences of `1/p` keep their relative precision in
    /// arbitrarily deep blocks.
    pub(crate) fn inv_p_parts(&self, t: f64) -> [f64; 3] {
        let (v0, _) = self.v_range();
        let conj = match self.spec {
            ExponentSpec::Ksz => false,
            ExponentSpec::KszConjugate => true,
            _ => return [self.inv_p_at(self.coord_of_v(v0 + t)), 0.0, 0.0],
        };
        let block = match (self.shape, self.chart) {
            (Shape::Varying, Chart::Branch { block, .. }) => block,
            _ => return [self.inv_p_at(self.coord_of_v(v0 + t)), 0.0, 0.0],
        };
        // g = ln(shift + v) - n on both branches
        let shift = chart_base(self.chart.region());
        let dg = |w: f64, dv: f64| (dv / (shift + w)).ln_1p();
        let cut = |u: f64| (block as f64 + u).exp() - shift;
        let cuts = [(0.5, cut(0.5)), (63.0 / 64.0, cut(63.0 / 64.0))];
        let (level, va) = if (v0 - cuts[0].1).abs() <= (v0 - cuts[1].1).abs() { cuts[0] } else { cuts[1] };
        let seg = dg(va, v0 - va);
        let node = dg(v0, t).clamp(0.5 - level - seg, 63.0 / 64.0 - level - seg);
        if conj {
            [1.0 - level, -seg, -node]
        } else {
            [level, seg, node]
        }
    }

    /// Value at `v = v0 + t`, consistent with [`Segment::inv_p_parts`].
    pub(crate) fn value_v(&self, t: f64) -> f64 {
        match (self.shape, self.spec) {
            (Shape::Varying, ExponentSpec::Ksz | ExponentSpec::KszConjugate) => {
                let [a, b, c] = self.inv_p_parts(t);
                1.0 / (a + b + c)
            }
            _ => self.value_at(self.coord_of_v(self.v_range().0 + t)),
        }
    }

    pub(crate) fn coord_of_v(&self, v: f64) -> f64 {
        match self.chart {
            Chart::Branch { side: Side::Left, .. } => v.ln(),
            _ => v,
        }
    }

    fn with_range(&self, lo: f64, hi: f64) -> Segment {
        Segment { c_lo: lo, c_hi: hi, ..*self }
    }

    /// Parts where the value is `<= level` and `>= level`.
    pub fn split_at_level(&self, level: f64) -> (Option<Segment>, Option<Segment>) {
        let (vmin, vmax) = self.value_range();
        if vmax <= level {
            return (Some(*self), None);
        }
        if vmin >= level {
            return (None, Some(*self));
        }
        let rising = self.value_at(self.c_hi) > self.value_at(self.c_lo);
        let (mut a, mut b) = (self.c_lo, self.c_hi);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if (self.value_at(m) > level) == rising {
                b = m;
            } else {
                a = m;
            }
        }
        let cut = 0.5 * (a + b);
        let (first, second) = (self.with_range(self.c_lo, cut), self.with_range(cut, self.c_hi));
        if rising {
            (Some(first), Some(second))
        } else {
            (Some(second), Some(first))
        }
    }

    /// `int phi(value) dx` over the segment for a nonnegative `phi`.
    pub fn integrate(&self, phi: &dyn Fn(f64) -> f64, tol: f64) -> Result<LogReal> {
        match self.shape {
            Shape::Flat(v) => Ok(LogReal::from_ln(phi(v).ln() + self.ln_measure())),
            Shape::Varying => {
                let (v0, v1) = self.v_range();
                let f = |t: f64, out: &mut [f64; MAX_CHANNELS]| {
                    out[0] = phi(self.value_v(t)).ln() - t;
                };
                let q = adaptive_log(&f, 1, &exp_cuts(v1 - v0), tol)?;
                Ok(LogReal::from_ln(q.total[0] - v0 - chart_base(self.chart.region())))
            }
        }
    }
}

impl Decomp {
    pub fn value_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in &self.segments {
            let (a, b) = s.value_range();
            lo = lo.min(a);
            hi = hi.max(b);
        }
        for r in &self.residuals {
            lo = lo.min(r.lo);
            hi = hi.max(r.hi);
        }
        (lo, hi)
    }

    pub fn resolved_measure(&self) -> LogReal {
        self.segments.iter().map(|s| s.measure()).sum()
    }

    pub fn residual_measure(&self) -> LogReal {
        self.residuals.iter().map(|r| r.measure).sum()
    }

    /// `int phi(value) dx` over the resolved segments.
    pub fn integrate(&self, phi: &dyn Fn(f64) -> f64, tol: f64) -> Result<LogReal> {
        let mut total = LogReal::ZERO;
        for s in &self.segments {
            total = total + s.integrate(phi, tol)?;
        }
        Ok(total)
    }
}

fn push(out: &mut Vec<Segment>, spec: ExponentSpec, chart: Chart, lo: f64, hi: f64, shape: Shape) {
    if hi > lo {
        let mut s = Segment { spec, chart, c_lo: lo, c_hi: hi, shape };
        if shape == Shape::Varying && !matches!(spec, ExponentSpec::Ksz | ExponentSpec::KszConjugate) {
            let (a, b) = s.value_range();
            if b == a {
                s.shape = Shape::Flat(a);
            }
        }
        out.push(s);
    }
}

/// Splits `q` into flat and monotone segments of `spec`, resolving blocks up to `depth`.
pub fn decompose(spec: &ExponentSpec, q: &Interval, depth: u32) -> Result<Decomp> {
    if spec.is_block() {
        decompose_block(spec, q, depth)
    } else {
        decompose_base0(spec, q)
    }
}

fn decompose_block(spec: &ExponentSpec, q: &Interval, depth: u32) -> Result<Decomp> {
    let spans = q.spans(depth)?;
    let mut segments = Vec::new();
    let tail_value = spec.value_tau(Chart::Base0, 0.0);
    for span in &spans.spans {
        let (lo, hi) = (span.c_min, span.c_max);
        match span.region {
            Region::Tail => push(&mut segments, *spec, Chart::Base0, lo, hi, Shape::Flat(tail_value)),
            Region::Branch { block, side } => {
                let chart = Chart::Branch { block, side };
                if *spec == ExponentSpec::G {
                    push(&mut segments, *spec, chart, lo, hi, Shape::Varying);
                    continue;
                }
                let at = |u: f64| cut_coord(block, side, u);
                let (t1, t2) = (at(0.5), at(63.0 / 64.0));
                let a_val = spec.value_tau(chart, at(0.25));
                let b_val = spec.value_tau(chart, at(0.999));
                push(&mut segments, *spec, chart, lo, hi.min(t1), Shape::Flat(a_val));
                push(&mut segments, *spec, chart, lo.max(t1), hi.min(t2), Shape::Varying);
                push(&mut segments, *spec, chart, lo.max(t2), hi, Shape::Flat(b_val));
            }
            Region::Below => {}
        }
    }
    let mut residuals = Vec::new();
    if let Some((lo, hi)) = spans.unresolved {
        let (vlo, vhi) = match (spans.spans.is_empty(), q.hi.locate(depth)?) {
            // both ends inside one chart cell
            (true, loc) if loc.region != Region::Below => {
                let chart = match loc.region {
                    Region::Branch { block, side } => Chart::Branch { block, side },
                    _ => Chart::Base0,
                };
                let v = spec.value_tau(chart, loc.coord);
                (v, v)
            }
            _ => spec.range(),
        };
        residuals.push(Residual { measure: hi - lo, lo: vlo, hi: vhi });
    }
    Ok(Decomp { segments, residuals })
}

fn decompose_base0(spec: &ExponentSpec, q: &Interval) -> Result<Decomp> {
    let tau_lo = (-q.hi.x().ln()).max(0.0);
    let tau_hi = -q.lo.x().ln();
    let mut segments = Vec::new();
    let mut residuals = Vec::new();
    if let ExponentSpec::Constant(_) = spec {
        let v = spec.value_tau(Chart::Base0, 0.0);
        push(&mut segments, *spec, Chart::Base0, tau_lo, tau_hi, Shape::Flat(v));
        return Ok(Decomp { segments, residuals });
    }
    let (vlo, vhi) = spec.range();
    let floor = if *spec == ExponentSpec::DieningLerner { TAU_FLOOR } else { 0.0 };
    let a = tau_lo.max(floor);
    let b = tau_hi.min(TAU_CAP);
    if tau_lo < a {
        residuals.push(Residual { measure: LogReal::from_ln(ln_sub_exp(-tau_lo, -a.min(tau_hi))), lo: vlo, hi: vhi });
    }
    if tau_hi > b {
        let top = if *spec == ExponentSpec::LogLog { TAU_CAP.ln() } else { vlo };
        residuals.push(Residual { measure: LogReal::from_ln(ln_sub_exp(-b.max(tau_lo), -tau_hi)), lo: top, hi: vhi });
    }
    if a >= b {
        return Ok(Decomp { segments, residuals });
    }
    let mut cuts = vec![a];
    match spec {
        ExponentSpec::DieningLerner => {
            let (va, vb) = (a.ln(), b.ln());
            let j0 = ((va - 2.0) / 2.0).floor() as i64;
            let j1 = (vb / 2.0).ceil() as i64;
            for j in j0..=j1 {
                for off in [1.0, 5.0, 7.0, 11.0] {
                    let t = (2.0 * j as f64 + off / 6.0).exp();
                    if t > a && t < b {
                        cuts.push(t);
                    }
                }
            }
        }
        ExponentSpec::Lerner(_) => {
            for j in 0.. {
                let t = lerner_tau_of_w(PI / 2.0 + PI * j as f64);
                if t >= b {
                    break;
                }
                if t > a {
                    cuts.push(t);
                }
            }
        }
        ExponentSpec::LogLog => {
            if 1.0 > a && 1.0 < b {
                cuts.push(1.0);
            }
        }
        _ => unreachable!("block and constant specs handled above"),
    }
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mid = if hi.is_finite() { 0.5 * (lo + hi) } else { lo + 1.0 };
        let shape = match spec {
            ExponentSpec::DieningLerner => {
                let v = (mid.ln()).rem_euclid(2.0);
                if v > 1.0 / 6.0 && v < 5.0 / 6.0 {
                    Shape::Flat(8.0)
                } else if v > 7.0 / 6.0 && v < 11.0 / 6.0 {
                    Shape::Flat(2.0)
                } else {
                    Shape::Varying
                }
            }
            ExponentSpec::LogLog if mid < 1.0 => Shape::Flat(0.0),
            _ => Shape::Varying,
        };
        push(&mut segments, *spec, Chart::Base0, lo, hi, shape);
    }
    Ok(Decomp { segments, residuals })
}

/// The `tau >= 0` at which `ln ln(e + x + 1/x) = w`.
fn lerner_tau_of_w(w: f64) -> f64 {
    let ew = w.exp();
    if ew > 30.0 {
        ew + (-E * (-ew).exp()).ln_1p()
    } else {
        ((ew.exp() - E) / 2.0).acosh()
    }
}
