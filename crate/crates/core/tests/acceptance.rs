//! Acceptance criteria 1-10. Each prints one PASS/FAIL line; the binary
//! exits nonzero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{div, sub, to_f64, Hp};
use vexlab::operators::{maximal_function, maximal_function_brute, GridFunction};
use vexlab::oscillation::{
    family_stats, loglog_grid, modulus_sweep, FamilyConfig, IntervalFamily, ModulusKind, OscFunction, OscStats,
};
use vexlab::sequences::seq_ordering_check;
use vexlab::verify::{
    verify_conjugate_blowup, verify_dl_not_blo, verify_growth_ab_beta16, verify_hardy_blowup, verify_p_side_uniform,
    verify_ratio_alpha_beta, JENSEN_SLACK,
};
use vexlab::vexnorm::{chi_norm, luxemburg_norm, modular, TestFunction};
use vexlab::{ExponentSpec, Interval, LogReal, Rational};

const TOL: f64 = 1e-10;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn ordering() -> Outcome {
    let r = seq_ordering_check(40);
    let violations = r.rows.iter().filter(|row| !row.pass).count();
    outcome(r.rows.len() == 41 && violations == 0, format!("k in [0, 40], {violations} violations"))
}

fn alpha_beta() -> Outcome {
    let r = verify_ratio_alpha_beta(40).unwrap();
    let decreasing = r.rows.windows(2).all(|w| w[1].value_ln < w[0].value_ln);
    let mut hp = Hp::new();
    let oracle = to_f64(&div(&hp.alpha(3), &hp.beta(3)));
    let engine = r.rows[3].value_ln.exp();
    let pass = decreasing && r.ok() && oracle < 1e-5 && engine < 1e-5;
    outcome(pass, format!("strictly decreasing: {decreasing}; alpha_3/beta_3 = {engine:.4e} (oracle {oracle:.4e})"))
}

fn growth() -> Outcome {
    let r = verify_growth_ab_beta16(30).unwrap();
    let mut hp = Hp::new();
    let gap = sub(&hp.b(1), &hp.a(1));
    let beta = hp.beta(1);
    let oracle = hp.ln_f64(&gap) - 16.0 * hp.ln_f64(&beta);
    let k1 = r.rows[0].value_ln;
    let all = r.rows.len() == 30 && r.rows.iter().all(|row| row.value_ln >= row.bound_ln.unwrap());
    outcome(all && (k1 - oracle).abs() <= 0.5, format!("all 30 rows above e^(k+1) - 16 ln 4: {all}; k=1 value {k1:.4} (oracle {oracle:.4})"))
}

fn conjugate() -> Outcome {
    let r = verify_conjugate_blowup(30, 2.0, TOL).unwrap();
    let t = r.detected_threshold;
    let ratios: Vec<(i64, f64)> = r.rows.iter().filter_map(|row| row.extra.get("ratio_ln").map(|v| (row.k, *v))).collect();
    let inc = ratios.iter().filter(|(k, _)| (3..=6).contains(k)).map(|p| p.1).collect::<Vec<_>>();
    let inc_ok = inc.len() == 4 && inc.windows(2).all(|w| w[1] > w[0]);
    let pass = r.ok() && t.is_some_and(|t| t <= 4) && inc_ok;
    let shown: Vec<String> = ratios.iter().map(|(k, v)| format!("{k}:{v:.3}")).collect();
    outcome(pass, format!("threshold {t:?}, ln ratio(KSZ', Q_k) = [{}], mean k0 {:?}", shown.join(" "), r.thresholds["mean_k0"]))
}

fn p_side() -> Outcome {
    let family = IntervalFamily::default_family().unwrap();
    let refined = family.refined().unwrap();
    let a = verify_p_side_uniform(&family, 32.0, TOL).unwrap();
    let b = verify_p_side_uniform(&refined, 32.0, TOL).unwrap();
    let max = |r: &vexlab::SeriesReport| r.rows.iter().map(|row| row.value_ln).fold(f64::NEG_INFINITY, f64::max).exp();
    let min = |r: &vexlab::SeriesReport| r.rows.iter().map(|row| row.extra["min_ln"]).fold(f64::INFINITY, f64::min).exp();
    let (m0, m1) = (max(&a), max(&b));
    let change = (m1 - m0).abs() / m0;
    let in_range = |r| min(r) >= 1.0 - JENSEN_SLACK && max(r) <= 32.0;
    let pass = family.len() >= 10_000 && a.ok() && b.ok() && in_range(&a) && in_range(&b) && change < 0.1;
    outcome(
        pass,
        format!(
            "{} / {} intervals, ratio in [{:.9}, {m0:.6}], refined max {m1:.6} ({:.2}% change)",
            family.len(),
            refined.len(),
            min(&a).min(min(&b)),
            change * 100.0
        ),
    )
}

fn hardy() -> Outcome {
    let r = verify_hardy_blowup(30, TOL).unwrap();
    let values: Vec<f64> = r.rows.iter().map(|row| row.value_ln).collect();
    let increasing = values.windows(2).all(|w| w[1] > w[0]);
    let k5 = r.rows.iter().find(|row| row.k == 5).map(|row| row.value_ln).unwrap_or(f64::NAN);
    let norms_ok = r.rows.iter().filter(|row| row.k <= 2).all(|row| row.extra.get("norm_ln").is_some_and(|n| *n >= row.value_ln));
    let t = r.detected_threshold;
    let pass = r.ok() && increasing && t.is_some_and(|t| t <= 5) && k5 > 1e6f64.ln() && norms_ok;
    outcome(pass, format!("increasing: {increasing}; k_1 = {t:?}; k=5 value ln {k5:.3} > ln 1e6; norm product >= bound for k <= 2: {norms_ok}"))
}

fn dl() -> Outcome {
    let r = verify_dl_not_blo(20, 1e-12).unwrap();
    let in_range = r.rows.iter().all(|row| row.value_ln.exp() >= 5.99 && row.extra["deficit_ln"] > f64::NEG_INFINITY);
    let deficits: Vec<f64> = r.rows.iter().map(|row| row.extra["deficit_ln"]).collect();
    let toward_six = deficits.windows(2).all(|w| w[1] < w[0]);
    let k1 = &r.rows[0];
    let q = k1.extra["quadrature"];
    let companion = q >= k1.value_ln.exp() - 1e-6;
    let pass = r.ok() && r.rows.len() == 20 && in_range && toward_six && companion;
    outcome(pass, format!("20 values in [5.99, 6), increasing: {toward_six}; k=1 value {:.6}, quadrature {q:.6}", k1.value_ln.exp()))
}

fn norm_oracles() -> Outcome {
    let qs = [Rational::new(64, 63), Rational::new(4, 3), Rational::from_integer(2), Rational::from_integer(8), Rational::from_integer(64)];
    let intervals = [(0.0, 1.0), (0.05, 0.4), (0.3, 0.3001), (0.5, 1.0)];
    let (mut worst_norm, mut worst_mod, mut worst_hom) = (0.0f64, 0.0f64, 0.0f64);
    for q in qs {
        let spec = ExponentSpec::constant(q).unwrap();
        let qf = *q.numer() as f64 / *q.denom() as f64;
        for &(lo, hi) in &intervals {
            let iv = Interval::from_f64(lo, hi).unwrap();
            let n = chi_norm(&spec, &iv, 1e-12).unwrap().ln();
            worst_norm = worst_norm.max(((n - (hi - lo).ln() / qf).exp_m1()).abs());
            if lo > 0.0 {
                let n = luxemburg_norm(&TestFunction::InvX(iv), &spec, 1e-12).unwrap().ln();
                let ln_gap = (1.0 - qf) * lo.ln() + (-((1.0 - qf) * (hi / lo).ln()).exp()).ln_1p();
                worst_norm = worst_norm.max((n - (ln_gap - (qf - 1.0).ln()) / qf).exp_m1().abs());
            }
        }
    }
    let specs = [ExponentSpec::Ksz, ExponentSpec::KszConjugate, ExponentSpec::DieningLerner, ExponentSpec::Lerner(0.125), ExponentSpec::constant(Rational::from_integer(8)).unwrap()];
    for spec in specs {
        for &(lo, hi) in &[(0.0, 1.0), (0.01, 0.2), (0.3, 0.3001)] {
            let iv = Interval::from_f64(lo, hi).unwrap();
            for f in [TestFunction::Chi(iv), TestFunction::InvX(Interval::from_f64(lo.max(0.001), hi).unwrap())] {
                let n = luxemburg_norm(&f, &spec, 1e-12).unwrap();
                worst_mod = worst_mod.max((modular(&f, &spec, n).unwrap().to_f64() - 1.0).abs());
                for ln_c in [-20.0, 3.5, 40.0] {
                    let nc = luxemburg_norm(&f.clone().scaled(LogReal::from_ln(ln_c)), &spec, 1e-12).unwrap();
                    worst_hom = worst_hom.max((nc.ln() - n.ln() - ln_c).exp_m1().abs());
                }
            }
        }
    }
    let pass = worst_norm <= 1e-10 && worst_mod <= 1e-8 && worst_hom <= 1e-10;
    outcome(pass, format!("closed forms rel err {worst_norm:.1e}, modular at norm |m - 1| {worst_mod:.1e}, homogeneity rel err {worst_hom:.1e}"))
}

fn maximal() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut exact, mut sublinear, mut above) = (true, true, true);
    for i in 0..20 {
        let n = if i == 0 { 512 } else { rng.gen_range(1..=512) };
        let f = GridFunction::new((0..n).map(|_| rng.gen_range(0.0..4.0)).collect()).unwrap();
        let g = GridFunction::new((0..n).map(|_| rng.gen_range(0.0..1.0f64).powi(3)).collect()).unwrap();
        let sum = GridFunction::new(f.values.iter().zip(&g.values).map(|(a, b)| a + b).collect()).unwrap();
        let (mf, mg, ms) = (maximal_function(&f).unwrap(), maximal_function(&g).unwrap(), maximal_function(&sum).unwrap());
        exact &= mf == maximal_function_brute(&f) && mg == maximal_function_brute(&g);
        for j in 0..n {
            sublinear &= ms.values[j] <= mf.values[j] + mg.values[j] + 1e-12;
            above &= mf.values[j] >= f.values[j] && mg.values[j] >= g.values[j];
        }
    }
    outcome(exact && sublinear && above, format!("grid == brute force on 20 functions: {exact}; sublinear: {sublinear}; Mf >= cell value: {above}"))
}

fn osc_family(dl_witnesses: u32) -> FamilyConfig {
    FamilyConfig { k_max: 10, beta_witnesses: 10, dl_witnesses, ..FamilyConfig::default() }
}

/// Grid reaching down to `|(0, dl_d_k)| = e^{-e^{2k + 1/6}}`.
fn osc_grid(k: u32) -> Vec<LogReal> {
    let t1 = 2.0 * k as f64 + 1.0 / 6.0;
    loglog_grid(0.0, t1, (t1 * 8.0).ceil() as usize + 1).unwrap()
}

fn weighted(stats: &[OscStats], grid: &[LogReal]) -> f64 {
    modulus_sweep(stats, ModulusKind::Blo, grid).unwrap().iter().map(|r| r.weighted).fold(0.0, f64::max)
}

fn oscillation() -> Outcome {
    let family = IntervalFamily::new(osc_family(3)).unwrap();
    let grid = osc_grid(3);
    let specs = [ExponentSpec::Ksz, ExponentSpec::G, ExponentSpec::DieningLerner, ExponentSpec::LogLog, ExponentSpec::Lerner(0.125)];
    let (mut bmo_blo, mut monotone) = (true, true);
    let mut g_stats = Vec::new();
    let mut dl_stats = Vec::new();
    for spec in specs {
        let stats = family_stats(&OscFunction::Spec(spec), &family, 1e-11).unwrap();
        bmo_blo &= stats.iter().all(|s| s.bmo <= 2.0 * s.blo + 1e-9);
        for kind in [ModulusKind::Bmo, ModulusKind::Blo] {
            let sweep = modulus_sweep(&stats, kind, &grid).unwrap();
            monotone &= sweep.windows(2).all(|w| w[1].modulus <= w[0].modulus);
        }
        match spec {
            ExponentSpec::G => g_stats = stats,
            ExponentSpec::DieningLerner => dl_stats = stats,
            _ => {}
        }
    }
    let g0 = weighted(&g_stats, &grid);
    let refined = family.refined().unwrap();
    let g1 = weighted(&family_stats(&OscFunction::Spec(ExponentSpec::G), &refined, 1e-11).unwrap(), &grid);
    let g_change = (g1 - g0).abs() / g0;
    let k1_family = IntervalFamily::new(osc_family(1)).unwrap();
    let dl1 = weighted(&family_stats(&OscFunction::Spec(ExponentSpec::DieningLerner), &k1_family, 1e-11).unwrap(), &osc_grid(1));
    let dl3 = weighted(&dl_stats, &grid);
    let pass = bmo_blo && monotone && g_change < 0.1 && dl3 > 2.0 * dl1;
    outcome(
        pass,
        format!(
            "{} intervals x 5 functions, gamma <= 2 eta: {bmo_blo}; moduli monotone: {monotone}; g constant {g0:.4} -> {g1:.4} refined ({:.2}%); DL constant {dl1:.1} (k=1) -> {dl3:.1} (k=3)",
            family.len(),
            g_change * 100.0
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, f64, fn() -> Outcome); 10] = [
        (1, "ordering chain", 1.0, ordering),
        (2, "alpha_k/beta_k decay", 1.0, alpha_beta),
        (3, "(b_k - a_k)/beta_k^16 growth", 1.0, growth),
        (4, "conjugate norm blow-up", 10.0, conjugate),
        (5, "p-side uniform ratio", 60.0, p_side),
        (6, "Hardy necessary product", 10.0, hardy),
        (7, "Diening-Lerner BLO defect", 5.0, dl),
        (8, "norm-engine oracles", 5.0, norm_oracles),
        (9, "maximal-function oracle", 30.0, maximal),
        (10, "oscillation sanity", 60.0, oscillation),
    ];
    let mut failed = 0;
    for (n, name, limit, run) in criteria {
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let pass = out.pass && took < Duration::from_secs_f64(limit);
        if !pass {
            failed += 1;
        }
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {verdict}: {name}: {} [{:.3} s, limit {limit} s]", out.detail, took.as_secs_f64());
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
