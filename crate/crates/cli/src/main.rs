use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use vexlab::exponents::{conjugate_eval, p_eval, SPEC_NAMES};
use vexlab::oscillation::{family_stats, geometric_grid, loglog_grid, modulus_sweep, write_sweep_csv, FamilyConfig, IntervalFamily, ModulusKind, OscFunction};
use vexlab::report::CSV_HEADER;
use vexlab::sequences::{a_point, alpha_point, b_point, beta_point, c_point, dl_bands, DEFAULT_K_MAX};
use vexlab::verify::{parse_suites, run_all, Suite, VerifyConfig, DEFAULT_LAMBDA, DEFAULT_RATIO_CAP};
use vexlab::vexnorm::{luxemburg_norm, mean_inv_p, uniform_ratio_ln, TestFunction, DEFAULT_NORM_TOL};
use vexlab::{ExponentSpec, Interval, LogReal, Point, SeriesReport, VexError};

const EXIT_FAILED: u8 = 1;
const EXIT_ERROR: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "vexlab", version, about = "Variable-exponent Lebesgue space numerics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format; the default depends on the command.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write output here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Plain,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate an exponent at a point.
    Eval(EvalArgs),
    /// Luxemburg norm of a test function, with the uniform ratio for indicators.
    Norm(NormArgs),
    /// BMO/BLO modulus sweep over the anchored interval family.
    Osc(OscArgs),
    /// Run verification suites.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long, value_parser = parse_spec, help = spec_help())]
    exponent: ExponentSpec,
    /// A number in [0, 1], `ln:<value>`, or an anchor `alpha:k`, `beta:k`, `a:k`, `b:k`, `c:m`, `dl_a:k` .. `dl_d:k`.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    x: Point,
    /// Evaluate the conjugate exponent instead.
    #[arg(long)]
    conjugate: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum NormFunction {
    Chi,
    Invx,
}

#[derive(Args, Debug)]
struct NormArgs {
    #[arg(long, value_parser = parse_spec, help = spec_help())]
    exponent: ExponentSpec,
    /// `lo,hi` with endpoints as for `eval --x`.
    #[arg(long, value_parser = parse_interval, allow_hyphen_values = true)]
    interval: Interval,
    #[arg(long, value_enum, default_value = "chi")]
    function: NormFunction,
    #[arg(long, default_value_t = DEFAULT_NORM_TOL)]
    tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Modulus {
    Bmo,
    Blo,
}

#[derive(Args, Debug)]
struct OscArgs {
    #[arg(long, value_enum, default_value = "bmo")]
    modulus: Modulus,
    #[arg(long, value_parser = parse_spec, help = spec_help())]
    function: ExponentSpec,
    /// `geometric:<r0>,<ratio>,<count>` or `loglog:<t0>,<t1>,<count>` (r = e^{-e^t}).
    #[arg(long, value_parser = parse_grid, default_value = "geometric:1,0.5,40")]
    r_grid: Grid,
    /// Deepest block anchored by the family.
    #[arg(long, env = "VEX_KMAX", default_value_t = DEFAULT_K_MAX, value_parser = clap::value_parser!(u32).range(0..=DEFAULT_K_MAX as i64))]
    kmax: u32,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Comma-separated suites: ratio, growth, conjugate, p-side, hardy, dl, ordering, or all.
    #[arg(long, value_parser = parse_suite_list, default_value = "all")]
    suite: SuiteList,
    #[arg(long, env = "VEX_KMAX", default_value_t = DEFAULT_K_MAX, value_parser = clap::value_parser!(u32).range(0..=DEFAULT_K_MAX as i64))]
    kmax: u32,
    /// Scale used in the conjugate lower bound.
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    /// Upper cap on the p-side uniform ratio.
    #[arg(long, default_value_t = DEFAULT_RATIO_CAP)]
    cap: f64,
    #[arg(long, default_value_t = DEFAULT_NORM_TOL)]
    tol: f64,
}

#[derive(Clone, Debug)]
struct SuiteList(Vec<Suite>);

#[derive(Clone, Debug)]
struct Grid(Vec<LogReal>);

fn spec_help() -> String {
    format!("Exponent: {SPEC_NAMES}")
}

fn parse_spec(s: &str) -> Result<ExponentSpec, String> {
    s.parse::<ExponentSpec>().map_err(|e| e.to_string())
}

fn parse_suite_list(s: &str) -> Result<SuiteList, String> {
    parse_suites(s).map(SuiteList).map_err(|e| e.to_string())
}

fn parse_index(s: &str) -> Result<u32, String> {
    s.parse::<u32>().map_err(|_| format!("bad index '{s}'"))
}

fn parse_point(s: &str) -> Result<Point, String> {
    let s = s.trim();
    let err = |e: VexError| e.to_string();
    if let Some((name, arg)) = s.split_once(':') {
        if name == "ln" {
            let ln: f64 = arg.parse().map_err(|_| format!("bad log value '{arg}'"))?;
            return Point::from_logreal(LogReal::from_ln(ln)).map_err(err);
        }
        let k = parse_index(arg)?;
        if k > 2 * DEFAULT_K_MAX + 1 || (name != "c" && k > DEFAULT_K_MAX) {
            return Err(format!("index {k} out of range"));
        }
        return match name {
            "alpha" => Ok(alpha_point(k)),
            "beta" => Ok(beta_point(k)),
            "a" => Ok(a_point(k)),
            "b" => Ok(b_point(k)),
            "c" => Ok(c_point(k)),
            "dl_a" | "dl_b" | "dl_c" | "dl_d" => {
                let d = dl_bands(k).map_err(err)?;
                let x = match name {
                    "dl_a" => d.dl_a,
                    "dl_b" => d.dl_b,
                    "dl_c" => d.dl_c,
                    _ => d.dl_d,
                };
                Point::from_logreal(x).map_err(err)
            }
            _ => Err(format!("unknown point '{name}', expected ln, alpha, beta, a, b, c, dl_a, dl_b, dl_c or dl_d")),
        };
    }
    let x: f64 = s.parse().map_err(|_| format!("bad point '{s}'"))?;
    Point::from_f64(x).map_err(err)
}

fn parse_interval(s: &str) -> Result<Interval, String> {
    let (lo, hi) = s.split_once(',').ok_or_else(|| format!("malformed interval '{s}', expected lo,hi"))?;
    Interval::new(parse_point(lo)?, parse_point(hi)?).map_err(|e| e.to_string())
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let bad = || format!("malformed grid '{s}', expected geometric:<r0>,<ratio>,<count> or loglog:<t0>,<t1>,<count>");
    let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
    let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let num = |p: &str| p.parse::<f64>().map_err(|_| format!("bad number '{p}'"));
    let count = parts[2].parse::<usize>().map_err(|_| format!("bad count '{}'", parts[2]))?;
    let grid = match kind {
        "geometric" => geometric_grid(num(parts[0])?, num(parts[1])?, count),
        "loglog" => loglog_grid(num(parts[0])?, num(parts[1])?, count),
        _ => return Err(bad()),
    };
    grid.map(Grid).map_err(|e| e.to_string())
}

/// A failed command: its exit status and message.
struct Failure(u8, String);

impl From<VexError> for Failure {
    fn from(e: VexError) -> Self {
        Failure(EXIT_ERROR, e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure(EXIT_ERROR, format!("output: {e}"))
    }
}

fn eval(args: &EvalArgs, format: Format) -> Result<(String, u8), Failure> {
    let value = if args.conjugate { conjugate_eval(&args.exponent, args.x)? } else { p_eval(&args.exponent, args.x)? };
    let x = args.x.x();
    let out = match format {
        Format::Plain => format!("{value}\n"),
        Format::Csv => format!("exponent,conjugate,x_ln,value\n{},{},{},{value}\n", args.exponent, args.conjugate, x.ln()),
        Format::Json => {
            let v = json!({ "exponent": args.exponent.to_string(), "conjugate": args.conjugate, "x_ln": x.ln(), "value": value });
            format!("{}\n", serde_json::to_string_pretty(&v).expect("json"))
        }
    };
    Ok((out, 0))
}

fn norm(args: &NormArgs, format: Format) -> Result<(String, u8), Failure> {
    let q = args.interval;
    let f = match args.function {
        NormFunction::Chi => TestFunction::Chi(q),
        NormFunction::Invx => TestFunction::InvX(q),
    };
    let n = luxemburg_norm(&f, &args.exponent, args.tol)?;
    let mut fields: Vec<(&str, f64)> = vec![("norm_ln", n.ln()), ("norm", n.to_f64()), ("length_ln", q.length().ln())];
    if args.function == NormFunction::Chi {
        fields.push(("mean_inv_p", mean_inv_p(&args.exponent, &q, args.tol)?));
        fields.push(("ratio_ln", uniform_ratio_ln(&args.exponent, &q, args.tol)?));
    }
    let out = match format {
        Format::Plain => fields.iter().map(|(k, v)| format!("{k} = {v}\n")).collect(),
        Format::Csv => {
            let head: Vec<&str> = fields.iter().map(|f| f.0).collect();
            let vals: Vec<String> = fields.iter().map(|f| f.1.to_string()).collect();
            format!("{}\n{}\n", head.join(","), vals.join(","))
        }
        Format::Json => {
            let mut m = serde_json::Map::new();
            m.insert("exponent".into(), json!(args.exponent.to_string()));
            for (k, v) in &fields {
                m.insert((*k).into(), if v.is_finite() { json!(v) } else { json!(v.to_string()) });
            }
            format!("{}\n", serde_json::to_string_pretty(&m).expect("json"))
        }
    };
    Ok((out, 0))
}

fn osc(args: &OscArgs, format: Format) -> Result<(String, u8), Failure> {
    let config = FamilyConfig {
        k_max: args.kmax,
        beta_witnesses: args.kmax,
        dl_witnesses: args.kmax.min(FamilyConfig::default().dl_witnesses),
        ..FamilyConfig::default()
    };
    let family = IntervalFamily::new(config)?;
    let kind = match args.modulus {
        Modulus::Bmo => ModulusKind::Bmo,
        Modulus::Blo => ModulusKind::Blo,
    };
    let stats = family_stats(&OscFunction::Spec(args.function), &family, 1e-11)?;
    let rows = modulus_sweep(&stats, kind, &args.r_grid.0)?;
    let out = match format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_sweep_csv(&rows, &mut buf)?;
            String::from_utf8(buf).expect("csv is utf-8")
        }
        Format::Json => {
            let v: Vec<_> = rows.iter().map(|r| json!({ "r_ln": r.r.ln(), "modulus": r.modulus, "weighted_value": r.weighted })).collect();
            format!("{}\n", serde_json::to_string_pretty(&v).expect("json"))
        }
        Format::Plain => {
            let mut s = format!("{:>14} {:>14} {:>14}\n", "ln r", "modulus", "weighted");
            for r in &rows {
                s += &format!("{:>14.6} {:>14.8} {:>14.8}\n", r.r.ln(), r.modulus, r.weighted);
            }
            let max = rows.iter().map(|r| r.weighted).fold(0.0, f64::max);
            s += &format!("max weighted value = {max}\n");
            s
        }
    };
    Ok((out, 0))
}

fn verify(args: &VerifyArgs, format: Format) -> Result<(String, u8), Failure> {
    let config = VerifyConfig {
        k_max: args.kmax,
        lambda: args.lambda,
        ratio_cap: args.cap,
        tol: args.tol,
        suites: args.suite.0.clone(),
        ..VerifyConfig::default()
    };
    config.validate().map_err(|e| Failure(EXIT_USAGE, e.to_string()))?;
    let reports = run_all(&config);
    let status = if reports.iter().any(SeriesReport::has_errors) {
        EXIT_ERROR
    } else if reports.iter().all(SeriesReport::ok) {
        0
    } else {
        EXIT_FAILED
    };
    for r in reports.iter().filter(|r| r.has_errors()) {
        let row_errors = r.rows.iter().filter_map(|row| row.error.as_ref().map(|e| format!("k={}: {e}", row.k)));
        for e in r.error.iter().cloned().chain(row_errors) {
            eprintln!("vexlab: suite {}: {e}", r.suite);
        }
    }
    let out = match format {
        Format::Json if reports.len() == 1 => format!("{}\n", reports[0].to_json()),
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&reports).expect("reports serialize")),
        Format::Csv => {
            let mut s = format!("{CSV_HEADER}\n");
            for r in &reports {
                for line in r.csv_rows() {
                    s += &line;
                    s.push('\n');
                }
            }
            s
        }
        Format::Plain => {
            let mut s = String::new();
            for r in &reports {
                let verdict = if r.ok() { "PASS" } else { "FAIL" };
                let sm = &r.summary;
                s += &format!("{verdict} {} ({} passed, {} failed, {} below threshold)", r.suite, sm.passed, sm.failed, sm.unasserted);
                if let Some(t) = r.detected_threshold {
                    s += &format!(" threshold k = {t}");
                }
                s.push('\n');
                for c in r.checks.iter().filter(|c| !c.pass) {
                    s += &format!("  failed check: {}\n", c.name);
                }
                if let Some(e) = &r.error {
                    s += &format!("  error: {e}\n");
                }
            }
            s
        }
    };
    Ok((out, status))
}

fn emit(text: &str, path: Option<&PathBuf>) -> io::Result<()> {
    match path {
        Some(p) => File::create(p)?.write_all(text.as_bytes()),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Eval(a) => eval(a, cli.format.unwrap_or(Format::Plain)),
        Command::Norm(a) => norm(a, cli.format.unwrap_or(Format::Plain)),
        Command::Osc(a) => osc(a, cli.format.unwrap_or(Format::Csv)),
        Command::Verify(a) => verify(a, cli.format.unwrap_or(Format::Json)),
    };
    let result = result.and_then(|(text, status)| {
        emit(&text, cli.output.as_ref())?;
        Ok(status)
    });
    match result {
        Ok(status) => ExitCode::from(status),
        Err(Failure(status, msg)) => {
            eprintln!("vexlab: {msg}");
            ExitCode::from(status)
        }
    }
}
