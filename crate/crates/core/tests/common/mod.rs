//! 256-bit closed forms used as independent oracles.

#![allow(dead_code)]

use astro_float::{BigFloat, Consts, RoundingMode};

const P: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

pub struct Hp {
    cc: Consts,
}

impl Hp {
    pub fn new() -> Self {
        Hp { cc: Consts::new().expect("constants") }
    }

    pub fn num(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, P)
    }

    /// `n + num/den`, exact for small integers.
    pub fn frac(&self, n: i64, num: i64, den: i64) -> BigFloat {
        let n = BigFloat::from_i64(n, P);
        let q = BigFloat::from_i64(num, P).div(&BigFloat::from_i64(den, P), P, RM);
        n.add(&q, P, RM)
    }

    pub fn exp(&mut self, x: &BigFloat) -> BigFloat {
        x.exp(P, RM, &mut self.cc)
    }

    pub fn ln(&mut self, x: &BigFloat) -> BigFloat {
        x.ln(P, RM, &mut self.cc)
    }

    /// `e^{-e^t}`.
    pub fn exp_neg_exp(&mut self, t: &BigFloat) -> BigFloat {
        let e = self.exp(t);
        self.exp(&e.neg())
    }

    pub fn d(&mut self, n: i64) -> BigFloat {
        let t = self.frac(n, 0, 1);
        self.exp_neg_exp(&t)
    }

    pub fn alpha(&mut self, k: i64) -> BigFloat {
        let t = self.frac(k, 1, 2);
        add(&self.d(k), &self.exp_neg_exp(&t))
    }

    pub fn beta(&mut self, k: i64) -> BigFloat {
        if k == 0 {
            return self.num(1.0);
        }
        let t = self.frac(k - 1, 1, 2);
        let two_d = mul(&self.num(2.0), &self.d(k));
        sub(&add(&self.d(k - 1), &two_d), &self.exp_neg_exp(&t))
    }

    pub fn a(&mut self, k: i64) -> BigFloat {
        let t = self.frac(k, 63, 64);
        let two_d = mul(&self.num(2.0), &self.d(k + 1));
        sub(&add(&self.d(k), &two_d), &self.exp_neg_exp(&t))
    }

    pub fn b(&mut self, k: i64) -> BigFloat {
        let t = self.frac(k, 63, 64);
        add(&self.d(k), &self.exp_neg_exp(&t))
    }

    pub fn ln_f64(&mut self, x: &BigFloat) -> f64 {
        to_f64(&self.ln(x))
    }
}

pub fn add(a: &BigFloat, b: &BigFloat) -> BigFloat {
    a.add(b, P, RM)
}

pub fn sub(a: &BigFloat, b: &BigFloat) -> BigFloat {
    a.sub(b, P, RM)
}

pub fn mul(a: &BigFloat, b: &BigFloat) -> BigFloat {
    a.mul(b, P, RM)
}

pub fn div(a: &BigFloat, b: &BigFloat) -> BigFloat {
    a.div(b, P, RM)
}

pub fn to_f64(x: &BigFloat) -> f64 {
    format!("{x}").parse().expect("decimal form")
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}
