//! Command-line driver: `selftest | certify | evolve | export`.
//!
//! Exit codes: 0 success, 1 numeric or certification failure, 2 usage or
//! configuration error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::bounds::CertReport;
use crate::error::{Error, Result};
use crate::oscillator::{DecaySpec, Solution};
use crate::quadrature;
use crate::report::{self, EvolveRow};
use crate::selftest;
use crate::spectra;
use crate::theorems::{self, Params};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const PARAM_HELP: &str = "Parameters are given as --key value (or --key=value) and may also come from \
--config (key = value lines); command-line values win.";

#[derive(Debug, Parser)]
#[command(name = "hspec", version, about = "Hermite/Laguerre spectral toolbox and decay-estimate certification")]
struct Cli {
    /// Output file (JSON for certify, CSV otherwise; stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Config file with `key = value` default parameters.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for grid evaluation.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed (reserved: no randomized sampling in this version).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the invariant suites whose name contains FILTER.
    Selftest {
        #[arg(long)]
        filter: Option<String>,
    },
    /// Certify a decay estimate: --theorem ID plus its parameters.
    #[command(after_help = PARAM_HELP)]
    Certify {
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "PARAMS")]
        params: Vec<String>,
    },
    /// Evolve initial data: --u0 SPEC --times LIST [--xmin --xmax --points --d --N --envelope ID ...].
    #[command(after_help = PARAM_HELP)]
    Evolve {
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "PARAMS")]
        params: Vec<String>,
    },
    /// Export --kind coeffs (--u0 SPEC --nmax N) or --kind rule (--rule hermite|laguerre --n N [--nu ν]).
    #[command(after_help = PARAM_HELP)]
    Export {
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "PARAMS")]
        params: Vec<String>,
    },
}

/// Global settings, possibly overridden by reserved keys among the parameters.
struct Globals {
    out: Option<PathBuf>,
    threads: Option<usize>,
}

fn exit_code(e: &Error) -> i32 {
    if e.is_usage() { EXIT_USAGE } else { EXIT_FAIL }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run(args: &[String], stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(stderr, "{text}") } else { write!(stdout, "{text}") };
            return code;
        }
    };
    match dispatch(cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn params_with_globals(raw: &[String], cli: &Cli) -> Result<(Params, Globals)> {
    let mut p = Params::from_args(raw)?;
    let config = if p.contains("config") { Some(PathBuf::from(p.str_or("config", ""))) } else { cli.config.clone() };
    if let Some(path) = config {
        let text = fs::read_to_string(&path).map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        p.merge_config(&text)?;
    }
    let out = if p.contains("out") { Some(PathBuf::from(p.str_or("out", ""))) } else { cli.out.clone() };
    let threads = if p.contains("threads") { Some(p.usize_or("threads", 0)?) } else { cli.threads };
    if p.contains("seed") {
        p.usize_or("seed", 0)?;
    }
    Ok((p, Globals { out, threads }))
}

fn init_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        // a second initialization (e.g. repeated in-process runs) keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn warn_unused(p: &Params, stderr_note: &mut Vec<String>) {
    for k in p.unused() {
        if !matches!(k.as_str(), "out" | "config" | "threads" | "seed") {
            stderr_note.push(k);
        }
    }
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Selftest { filter } => {
            init_threads(cli.threads)?;
            let results = selftest::run_suites(filter.as_deref())?;
            let mut all = true;
            for r in &results {
                all &= r.pass;
                writeln!(stdout, "{:<18} {:<4} {}", r.name, if r.pass { "PASS" } else { "FAIL" }, r.detail)?;
            }
            writeln!(stdout, "{} of {} suites passed", results.iter().filter(|r| r.pass).count(), results.len())?;
            Ok(if all { EXIT_OK } else { EXIT_FAIL })
        }
        Command::Certify { params } => {
            let (p, g) = params_with_globals(params, &cli)?;
            init_threads(g.threads)?;
            p.require("certify", &["theorem"])?;
            let theorem = p.str_or("theorem", "").to_string();
            let cert = theorems::run(&theorem, &p)?;
            let mut unused = Vec::new();
            warn_unused(&p, &mut unused);
            if !unused.is_empty() {
                log::warn!("ignored parameter(s): {}", unused.join(", "));
            }
            let json = report::cert_report_json(&cert.report)?;
            let coords: Vec<&str> = cert.coords.iter().map(String::as_str).collect();
            match &g.out {
                Some(path) => {
                    fs::write(path, &json)?;
                    let mut csv = Vec::new();
                    report::write_cert_csv(&cert.report, &coords, &mut csv)?;
                    fs::write(csv_path(path), csv)?;
                }
                None => stdout.write_all(json.as_bytes())?,
            }
            writeln!(stdout, "{}", summary(&cert.report))?;
            Ok(if cert.report.pass { EXIT_OK } else { EXIT_FAIL })
        }
        Command::Evolve { params } => {
            let (p, g) = params_with_globals(params, &cli)?;
            init_threads(g.threads)?;
            let rows = evolve(&p)?;
            let mut buf = Vec::new();
            report::write_evolve_csv(&rows, &mut buf)?;
            emit(&g.out, &buf, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Export { params } => {
            let (p, g) = params_with_globals(params, &cli)?;
            p.require("export", &["kind"])?;
            let mut buf = Vec::new();
            match p.str_or("kind", "") {
                "coeffs" => {
                    p.require("export coeffs", &["u0"])?;
                    let f = theorems::parse_test_function(p.str_or("u0", ""), p.usize_or("d", 1)?)?;
                    spectra::hermite_coeffs(&f, p.usize_or("nmax", 32)?)?.to_csv(&mut buf)?;
                }
                "rule" => {
                    p.require("export rule", &["n"])?;
                    let n = p.usize_or("n", 0)?;
                    let rule = match p.str_or("rule", "hermite") {
                        "hermite" => quadrature::gauss_hermite_rule(n)?,
                        "laguerre" => quadrature::gauss_laguerre_rule(n, p.f64_or("nu", 0.0)?)?,
                        other => return Err(Error::Config(format!("unknown rule '{other}' (hermite, laguerre)"))),
                    };
                    report::write_rule_csv(&rule, &mut buf)?;
                }
                other => return Err(Error::Config(format!("unknown export kind '{other}' (coeffs, rule)"))),
            }
            emit(&g.out, &buf, stdout)?;
            Ok(EXIT_OK)
        }
    }
}

fn emit(out: &Option<PathBuf>, bytes: &[u8], stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes)?,
        None => stdout.write_all(bytes)?,
    }
    Ok(())
}

/// `r.json` → `r.csv`; other names get `.csv` appended.
pub fn csv_path(json: &Path) -> PathBuf {
    if json.extension().is_some_and(|e| e == "json") {
        json.with_extension("csv")
    } else {
        let mut s = json.as_os_str().to_owned();
        s.push(".csv");
        PathBuf::from(s)
    }
}

fn summary(r: &CertReport) -> String {
    format!(
        "theorem {}: C_fit = {} (log {}), log growth under refinement {}, stable = {}, pass = {}, failures = {}",
        r.theorem_id,
        report::fmt_f64(r.c_fit()),
        report::fmt_f64(r.log_c_fit),
        report::fmt_f64(r.log_c_fit - r.log_c_base),
        r.stable,
        r.pass,
        r.failures.len()
    )
}

fn evolve(p: &Params) -> Result<Vec<EvolveRow>> {
    p.require("evolve", &["u0", "times"])?;
    let d = p.usize_or("d", 1)?;
    let u0 = theorems::parse_test_function(p.str_or("u0", ""), d)?;
    let times = p.list_or("times", &[])?;
    let (lo, hi, points) = (p.f64_or("xmin", -6.0)?, p.f64_or("xmax", 6.0)?, p.usize_or("points", 13)?);
    if points == 0 || !(hi >= lo) {
        return Err(Error::Config(format!("need points ≥ 1 and xmax ≥ xmin (got {points}, [{lo}, {hi}])")));
    }
    let envelope = match p.str_or("envelope", "none") {
        "none" => None,
        "1.3" | "1.4" => Some(DecaySpec::LogWeight { s: p.f64("s")?, lambda: p.f64("lambda")?, eps: p.f64_or("eps", 0.05)? }),
        "3.3" => Some(DecaySpec::Gaussian { gamma: p.f64("gamma")? }),
        other => return Err(Error::Config(format!("unknown envelope '{other}' (none, 1.3, 1.4, 3.3)"))),
    };
    let sol = Solution::new(&u0, p.usize_or("N", 128)?)?;
    // points along the diagonal direction (1, …, 1)/√d
    let dir = 1.0 / (d as f64).sqrt();
    let mut rows = Vec::with_capacity(times.len() * points);
    for &t in &times {
        for i in 0..points {
            let r = if points == 1 { lo } else { lo + (hi - lo) * i as f64 / (points - 1) as f64 };
            let x = vec![r * dir; d];
            let v = sol.eval_log(t, &x)?.value;
            let c = v.to_c64();
            let log_envelope = envelope.and_then(|e| e.envelope(&x.iter().map(|v| v.abs()).collect::<Vec<_>>()).ok());
            rows.push(EvolveRow { t, x, re: c.re, im: c.im, log_abs: v.log_abs(), log_envelope });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &str) -> (i32, String, String) {
        let argv: Vec<String> = std::iter::once("hspec").chain(args.split_whitespace()).map(String::from).collect();
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run(&argv, &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(call("").0, EXIT_USAGE);
        assert_eq!(call("frobnicate").0, EXIT_USAGE);
        let (code, _, err) = call("certify --theorem 1.5 --kappa 1 --beta 0 --y 3");
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains(" s;"), "{err}");
        assert_eq!(call("certify --theorem 3.1 --kappa two --beta 0 --y 1").0, EXIT_USAGE);
        assert_eq!(call("certify --theorem 9.9").0, EXIT_USAGE);
        assert_eq!(call("evolve --u0 hermite:0 --times ,").0, EXIT_USAGE);
        assert_eq!(call("export --kind nonsense").0, EXIT_USAGE);
        assert_eq!(call("selftest --filter no-such-suite").0, EXIT_USAGE);
        assert_eq!(call("certify --theorem 3.1 --kappa").0, EXIT_USAGE);
        assert_eq!(call("--help").0, EXIT_OK);
    }

    #[test]
    fn evolve_ground_state_rows() {
        let (code, out, _) = call("evolve --u0 hermite:0 --times 0.4 --xmin -1 --xmax 1 --points 5");
        assert_eq!(code, EXIT_OK);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.len(), 6);
        for l in &lines[1..] {
            let f: Vec<f64> = l.split(',').take(5).map(|s| s.parse().unwrap()).collect();
            let want = (-f[1] * f[1] / 2.0).exp() / std::f64::consts::PI.powf(0.25);
            assert!((f[4] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn evolve_with_envelope_columns() {
        let (code, out, _) = call("evolve --u0 coeff_rule:0.25,4 --times 0,0.7 --xmin 2 --xmax 8 --points 4 --envelope 1.3 --s 0.25 --lambda 0.03125");
        assert_eq!(code, EXIT_OK);
        assert!(out.lines().skip(1).all(|l| !l.ends_with(",,")));
    }

    #[test]
    fn certify_writes_json_and_csv_deterministically() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        let base = "certify --theorem 3.1 --kappa 2 --beta 0 --y 0.7 --xmin 2 --xmax 40 --points 30";
        assert_eq!(call(&format!("{base} --out {}", a.display())).0, EXIT_OK);
        assert_eq!(call(&format!("--out {} {base}", b.display())).0, EXIT_OK);
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        assert_eq!(fs::read(csv_path(&a)).unwrap(), fs::read(csv_path(&b)).unwrap());
    }

    #[test]
    fn config_file_supplies_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.conf");
        fs::write(&cfg, "theorem = 3.1\nkappa = 1\nbeta = 0\ny = 5\npoints = 10\n").unwrap();
        let (code, out, _) = call(&format!("--config {} certify --y 1.2", cfg.display()));
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("\"y\": 1.2000000000000000e0"), "{out}");
    }

    #[test]
    fn export_rule_and_coeffs() {
        let (code, out, _) = call("export --kind rule --rule hermite --n 2");
        assert_eq!(code, EXIT_OK);
        assert_eq!(out.lines().count(), 3);
        let (code, out, _) = call("export --kind coeffs --u0 hermite:3 --nmax 5");
        assert_eq!(code, EXIT_OK);
        assert_eq!(out.lines().collect::<Vec<_>>(), vec!["alpha_1,re,im", "3,1.0000000000000000e0,0.0000000000000000e0"]);
        assert_eq!(call("export --kind rule --n 2 --out /nonexistent-dir/x.csv").0, EXIT_FAIL);
    }
}
