//! The Hardy-Littlewood maximal function on grids, the Hardy averaging
//! operator, and the product functional
//! `||chi_(0,s]||_{p'} * ||x^{-1} chi_(s,1]||_p` whose boundedness in `s` is
//! necessary for the Hardy operator to act boundedly on `L^{p(.)}`.

use std::collections::VecDeque;
use std::io::{Read, Write};

use rayon::prelude::*;

use crate::error::{Result, VexError};
use crate::exponents::{ExponentSpec, IntoPoint};
use crate::integrate::{integrate_adaptive_f64, intersect, Interval, Point};
use crate::logscale::LogReal;
use crate::vexnorm::{chi_norm, luxemburg_norm, TestFunction};

/// Largest grid accepted by [`maximal_function`].
pub const MAX_GRID: usize = 1 << 16;
/// Grids up to this size are scanned over every grid interval.
pub const EXACT_GRID: usize = 1 << 12;

/// Values on the midpoints of `n` equal cells of [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(VexError::Domain("grid needs at least one cell".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(VexError::NonFinite(*v));
        }
        Ok(GridFunction { values })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((0..n).map(|i| f((i as f64 + 0.5) / n as f64)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.len() as f64
    }

    /// Reads `x,value` rows; a header line is skipped when present.
    pub fn read_csv(r: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(r);
        let mut rows: Vec<(f64, f64)> = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| VexError::Invalid(e.to_string()))?;
            let parse = |j: usize| rec.get(j).and_then(|s| s.parse::<f64>().ok());
            match (parse(0), parse(1)) {
                (Some(x), Some(v)) => rows.push((x, v)),
                _ if i == 0 => continue,
                _ => return Err(VexError::Invalid(format!("bad grid row {}", i + 1))),
            }
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self::new(rows.into_iter().map(|r| r.1).collect())
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| VexError::Invalid(e.to_string());
        wtr.write_record(["x", "value"]).map_err(io)?;
        for (i, v) in self.values.iter().enumerate() {
            wtr.write_record([self.midpoint(i).to_string(), v.to_string()]).map_err(io)?;
        }
        wtr.flush().map_err(|e| VexError::Invalid(e.to_string()))?;
        Ok(())
    }
}

struct Sums<'a> {
    values: &'a [f64],
    prefix: Vec<f64>,
}

impl<'a> Sums<'a> {
    fn new(values: &'a [f64]) -> Self {
        let mut prefix = Vec::with_capacity(values.len() + 1);
        prefix.push(0.0);
        let mut s = 0.0;
        for v in values {
            s += v.abs();
            prefix.push(s);
        }
        Sums { values, prefix }
    }

    /// Average of `|f|` over cells `l..=r`.
    #[inline]
    fn avg(&self, l: usize, r: usize) -> f64 {
        if l == r {
            self.values[l].abs()
        } else {
            (self.prefix[r + 1] - self.prefix[l]) / (r - l + 1) as f64
        }
    }
}

/// Grid maximal function: at each cell, the largest `|f|`-average over runs
/// of whole cells containing it. This is a lower approximation of `Mf` at the
/// midpoints. Grids above [`EXACT_GRID`] cells use runs whose lengths form a
/// geometric ladder, which lowers the approximation further.
pub fn maximal_function(f: &GridFunction) -> Result<GridFunction> {
    let n = f.len();
    if n > MAX_GRID {
        return Err(VexError::Range(format!("grid of {n} cells exceeds {MAX_GRID}")));
    }
    let sums = Sums::new(&f.values);
    let values = if n <= EXACT_GRID { exact_scan(&sums, n) } else { ladder_scan(&sums, n) };
    GridFunction::new(values)
}

fn exact_scan(sums: &Sums<'_>, n: usize) -> Vec<f64> {
    (0..n)
        .into_par_iter()
        .fold(
            || vec![0.0f64; n],
            |mut best, l| {
                // suffix maxima over right ends: best run starting at l covering i
                let mut run = f64::NEG_INFINITY;
                for r in (l..n).rev() {
                    run = run.max(sums.avg(l, r));
                    if run > best[r] {
                        best[r] = run;
                    }
                }
                best
            },
        )
        .reduce(|| vec![0.0f64; n], |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect())
}

fn ladder_scan(sums: &Sums<'_>, n: usize) -> Vec<f64> {
    let mut lengths: Vec<usize> = (1..=64).collect();
    let mut len = 64.0f64;
    while (len as usize) < n {
        len *= 1.0625;
        lengths.push((len as usize).min(n));
    }
    lengths.dedup();
    lengths
        .into_par_iter()
        .map(|w| {
            // sliding maximum of the window averages covering each cell
            let avgs: Vec<f64> = (0..=n - w).map(|l| sums.avg(l, l + w - 1)).collect();
            let mut out = vec![0.0f64; n];
            let mut dq: VecDeque<usize> = VecDeque::new();
            let mut next = 0;
            for (i, slot) in out.iter_mut().enumerate() {
                while next < avgs.len() && next <= i {
                    while dq.back().is_some_and(|&j| avgs[j] <= avgs[next]) {
                        dq.pop_back();
                    }
                    dq.push_back(next);
                    next += 1;
                }
                while dq.front().is_some_and(|&j| j + w <= i) {
                    dq.pop_front();
                }
                *slot = dq.front().map(|&j| avgs[j]).unwrap_or(0.0);
            }
            out
        })
        .reduce(|| vec![0.0f64; n], |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect())
}

/// Maximal function by scanning every run for every cell, `O(n^3)`.
pub fn maximal_function_brute(f: &GridFunction) -> GridFunction {
    let n = f.len();
    let sums = Sums::new(&f.values);
    let values = (0..n)
        .map(|i| {
            let mut best = f64::NEG_INFINITY;
            for l in 0..=i {
                for r in i..n {
                    best = best.max(sums.avg(l, r));
                }
            }
            best
        })
        .collect();
    GridFunction { values }
}

/// What the Hardy operator can be applied to.
#[derive(Clone, Copy)]
pub enum HardySource<'a> {
    Test(&'a TestFunction),
    Grid(&'a GridFunction),
    Fn(&'a dyn Fn(f64) -> f64),
}

/// `int_0^x f` for a test function, exact.
fn test_integral(f: &TestFunction, x: f64) -> Result<f64> {
    let upto = Interval::new(Point::zero(), Point::from_f64(x)?)?;
    Ok(match f {
        TestFunction::Chi(q) => intersect(q, &upto).map(|i| i.length().to_f64()).unwrap_or(0.0),
        TestFunction::InvX(q) => match intersect(q, &upto) {
            None => 0.0,
            Some(_) if q.touches_zero() => f64::INFINITY,
            Some(i) => i.hi.x().ln() - i.lo.x().ln(),
        },
        TestFunction::Const(c) => c.to_f64() * x,
        TestFunction::Grid(v) => grid_integral(v, x),
        TestFunction::Scaled(c, g) => c.to_f64() * test_integral(g, x)?,
    })
}

fn grid_integral(values: &[f64], x: f64) -> f64 {
    let n = values.len();
    let h = 1.0 / n as f64;
    let full = ((x * n as f64).floor() as usize).min(n);
    let mut s: f64 = values[..full].iter().sum::<f64>() * h;
    if full < n {
        s += values[full] * (x - full as f64 * h);
    }
    s
}

/// `Tf(x) = (1/x) int_0^x f`.
pub fn hardy_transform(f: HardySource<'_>, x: f64) -> Result<f64> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(VexError::Domain(format!("x = {x} outside (0, 1]")));
    }
    let integral = match f {
        HardySource::Test(t) => test_integral(t, x)?,
        HardySource::Grid(g) => grid_integral(&g.values, x),
        HardySource::Fn(h) => integrate_adaptive_f64(h, 0.0, x, &[], 1e-12)?.value.to_f64(),
    };
    Ok(integral / x)
}

/// `||chi_(0,s]||_{p'} * ||x^{-1} chi_(s,1]||_p`.
pub fn hardy_necessary_product(spec: &ExponentSpec, s: impl IntoPoint, tol: f64) -> Result<LogReal> {
    let s = s.into_point()?;
    if s.is_zero() {
        return Err(VexError::Domain("s must be positive".into()));
    }
    let conj = spec.conjugate()?;
    if s.x() == LogReal::ONE {
        return Ok(LogReal::ZERO);
    }
    let left = chi_norm(&conj, &Interval::new(Point::zero(), s)?, tol)?;
    let right = luxemburg_norm(&TestFunction::InvX(Interval::new(s, Point::one())?), spec, tol)?;
    Ok(left * right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logscale::Rational;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn maximal_examples() {
        let ones = GridFunction::new(vec![1.0; 16]).unwrap();
        assert!(maximal_function(&ones).unwrap().values.iter().all(|v| (v - 1.0).abs() < 1e-15));
        let half = GridFunction::from_fn(4, |x| if x <= 0.5 { 1.0 } else { 0.0 }).unwrap();
        let m = maximal_function(&half).unwrap();
        assert_eq!(m.values[0], 1.0);
        assert!((m.values[2] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn exact_scan_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1usize, 2, 7, 33, 100] {
            let g = GridFunction::new((0..n).map(|_| rng.gen_range(-2.0..3.0)).collect()).unwrap();
            assert_eq!(maximal_function(&g).unwrap(), maximal_function_brute(&g));
        }
    }

    #[test]
    fn ladder_scan_is_a_lower_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 300;
        let g = GridFunction::new((0..n).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap();
        let sums = Sums::new(&g.values);
        let exact = exact_scan(&sums, n);
        let ladder = ladder_scan(&sums, n);
        for i in 0..n {
            assert!(ladder[i] <= exact[i]);
            assert!(ladder[i] >= g.values[i]);
        }
    }

    #[test]
    fn csv_round_trip() {
        let g = GridFunction::from_fn(5, |x| x * x).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        assert_eq!(GridFunction::read_csv(buf.as_slice()).unwrap(), g);
    }

    #[test]
    fn hardy_examples() {
        let one = TestFunction::Const(LogReal::ONE);
        assert!((hardy_transform(HardySource::Test(&one), 0.3).unwrap() - 1.0).abs() < 1e-15);
        let id = |t: f64| t;
        assert!((hardy_transform(HardySource::Fn(&id), 0.6).unwrap() - 0.3).abs() < 1e-14);
        let chi = TestFunction::Chi(Interval::from_f64(0.0, 0.5).unwrap());
        assert!((hardy_transform(HardySource::Test(&chi), 0.75).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(hardy_transform(HardySource::Test(&chi), 0.0).is_err());
        let g = GridFunction::from_fn(4, |x| if x <= 0.5 { 1.0 } else { 0.0 }).unwrap();
        assert!((hardy_transform(HardySource::Grid(&g), 0.75).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn necessary_product_constant_exponent() {
        let spec = ExponentSpec::Constant(Rational::from_integer(2));
        let v = hardy_necessary_product(&spec, 0.25, 1e-12).unwrap();
        assert!((v.to_f64() - 0.75f64.sqrt()).abs() < 1e-10);
        assert!(hardy_necessary_product(&spec, 1.0, 1e-12).unwrap().is_zero());
        for s in [0.01, 0.3, 0.9] {
            assert!(hardy_necessary_product(&spec, s, 1e-12).unwrap().to_f64() <= 1.0 + 1e-10);
        }
    }
}
