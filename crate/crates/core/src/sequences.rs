//! The doubly-exponential sequences: `d_n`, the block ends `c_m`, the
//! endpoints `alpha_k, beta_k, a_k, b_k` and the Diening-Lerner bands.
//!
//! Values are [`LogReal`]s. Each endpoint also has a structural [`Point`]
//! form, which keeps deep endpoints distinguishable where their `LogReal`
//! values agree to every bit.

use once_cell::sync::Lazy;

use crate::error::{Result, VexError};
use crate::integrate::{d, ef, Interval, Point, Side};
use crate::logscale::{LogReal, Sum};
use crate::report::{Row, SeriesReport};

pub const DEFAULT_K_MAX: u32 = 40;
pub const MAX_N: u32 = 60;

fn two() -> LogReal {
    LogReal::from_ln(std::f64::consts::LN_2)
}

/// `d_n = e^{-e^n}`.
pub fn seq_d(n: i64) -> Result<LogReal> {
    if !(0..=MAX_N as i64).contains(&n) {
        return Err(VexError::Range(format!("n = {n} outside [0, {MAX_N}]")));
    }
    Ok(d(n as u32))
}

/// Telescoped closed form: `c_{2n} = 2d_n`, `c_{2n+1} = d_n + d_{n+1}`.
pub fn seq_c_closed(m: u32) -> LogReal {
    let n = m / 2;
    if m % 2 == 0 {
        two() * d(n)
    } else {
        d(n) + d(n + 1)
    }
}

/// `c_m` from the recurrence `c_{2n+1} = c_{2n} - (d_n - d_{n+1})`,
/// `c_{2n+2} = c_{2n} - 2(d_n - d_{n+1})`, starting at `c_0 = 2/e`.
///
/// Once a step cancels, the flag stays set and the closed form is returned.
pub fn seq_c(m: i64) -> Result<Sum> {
    if m < 0 || m > 2 * MAX_N as i64 {
        return Err(VexError::Range(format!("m = {m} outside [0, {}]", 2 * MAX_N)));
    }
    let m = m as u32;
    let mut even = two() * d(0);
    let mut cancelled = false;
    let mut n = 0;
    loop {
        if 2 * n == m {
            break;
        }
        // grouped as (c_{2n} - j d_n) + j d_{n+1} so the large terms meet first
        let j = if 2 * n + 1 == m { LogReal::ONE } else { two() };
        let head = even.add_flagged(-(j * d(n)));
        let s = head.value.add_flagged(j * d(n + 1));
        let lost = 2 * n + 1 == m && head.value.is_zero();
        cancelled |= head.cancelled || s.cancelled || lost;
        even = s.value;
        if 2 * n + 1 == m {
            break;
        }
        n += 1;
    }
    let value = if cancelled { seq_c_closed(m) } else { even };
    Ok(Sum { value, cancelled })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Endpoints {
    pub alpha: LogReal,
    pub beta: LogReal,
    pub a: LogReal,
    pub b: LogReal,
}

pub fn seq_endpoints(k: u32) -> Endpoints {
    Endpoints { alpha: alpha(k), beta: beta(k), a: a(k), b: b(k) }
}

pub fn alpha(k: u32) -> LogReal {
    d(k) + LogReal::exp_neg_exp(k as f64 + 0.5)
}

pub fn beta(k: u32) -> LogReal {
    if k == 0 {
        return LogReal::ONE;
    }
    let j = k as f64;
    d(k - 1) + two() * d(k) - LogReal::exp_neg_exp(j - 0.5)
}

pub fn a(k: u32) -> LogReal {
    d(k) + two() * d(k + 1) - LogReal::exp_neg_exp(k as f64 + 63.0 / 64.0)
}

pub fn b(k: u32) -> LogReal {
    d(k) + LogReal::exp_neg_exp(k as f64 + 63.0 / 64.0)
}

/// `alpha_k`: right branch of block k where g = 1/2.
pub fn alpha_point(k: u32) -> Point {
    Point::at_level(k, Side::Right, 0.5).expect("level in range")
}

/// `beta_k`: left branch of block k-1 where g = 1/2; `beta_0 = 1`.
pub fn beta_point(k: u32) -> Point {
    if k == 0 {
        Point::one()
    } else {
        Point::at_level(k - 1, Side::Left, 0.5).expect("level in range")
    }
}

/// `a_k`: left branch of block k where g = 63/64.
pub fn a_point(k: u32) -> Point {
    Point::at_level(k, Side::Left, 63.0 / 64.0).expect("level in range")
}

/// `b_k`: right branch of block k where g = 63/64.
pub fn b_point(k: u32) -> Point {
    Point::at_level(k, Side::Right, 63.0 / 64.0).expect("level in range")
}

pub fn c_point(m: u32) -> Point {
    let n = m / 2;
    let tau = if m % 2 == 0 { ef(n) } else { ef(n + 1) };
    Point::on_branch(n, Side::Right, tau).expect("block end in range")
}

/// The Diening-Lerner quadruple for one k.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DLBands {
    pub k: u32,
    pub dl_a: LogReal,
    pub dl_b: LogReal,
    pub dl_c: LogReal,
    pub dl_d: LogReal,
}

pub fn dl_bands(k: u32) -> Result<DLBands> {
    if k < 1 {
        return Err(VexError::Range("Diening-Lerner bands start at k = 1".into()));
    }
    let t = 2.0 * k as f64;
    Ok(DLBands {
        k,
        dl_a: LogReal::exp_neg_exp(t + 11.0 / 6.0),
        dl_b: LogReal::exp_neg_exp(t + 7.0 / 6.0),
        dl_c: LogReal::exp_neg_exp(t + 5.0 / 6.0),
        dl_d: LogReal::exp_neg_exp(t + 1.0 / 6.0),
    })
}

/// Immutable table of every sequence up to `k_max`.
#[derive(Clone, Debug)]
pub struct SequenceTable {
    pub k_max: u32,
    pub d: Vec<LogReal>,
    pub c: Vec<LogReal>,
    pub alpha: Vec<LogReal>,
    pub beta: Vec<LogReal>,
    pub a: Vec<LogReal>,
    pub b: Vec<LogReal>,
}

impl SequenceTable {
    pub fn new(k_max: u32) -> Result<Self> {
        if k_max + 2 > MAX_N {
            return Err(VexError::Range(format!("k_max = {k_max} too large")));
        }
        let ks = 0..=k_max + 1;
        Ok(SequenceTable {
            k_max,
            d: (0..=k_max + 2).map(d).collect(),
            c: (0..=2 * k_max + 2).map(seq_c_closed).collect(),
            alpha: ks.clone().map(alpha).collect(),
            beta: ks.clone().map(beta).collect(),
            a: ks.clone().map(a).collect(),
            b: ks.map(b).collect(),
        })
    }

    /// The table for the default `k_max`, built once.
    pub fn shared() -> &'static SequenceTable {
        static TABLE: Lazy<SequenceTable> = Lazy::new(|| SequenceTable::new(DEFAULT_K_MAX).expect("default fits"));
        &TABLE
    }
}

/// The chain `beta_{k+1} < a_k < c_{2k+1} < b_k < alpha_k < c_{2k} < beta_k`,
/// one row per k. `value_ln` is the log of the smallest gap in the chain.
pub fn seq_ordering_check(k_max: i64) -> SeriesReport {
    let mut report = SeriesReport::new("ordering");
    for k in 0..=k_max.min(MAX_N as i64 - 2) {
        let k = k as u32;
        let chain = [beta_point(k + 1), a_point(k), c_point(2 * k + 1), b_point(k), alpha_point(k), c_point(2 * k), beta_point(k)];
        let mut pass = true;
        let mut min_gap = f64::INFINITY;
        for w in chain.windows(2) {
            match Interval::new(w[0], w[1]) {
                Ok(q) => min_gap = min_gap.min(q.length().ln()),
                Err(_) => pass = false,
            }
        }
        report.rows.push(Row::new(k as i64, min_gap, None, pass));
    }
    report.finish()
}
