//! Certification drivers keyed by theorem id, configured from a flat
//! `key = value` parameter map.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::sync::Mutex;

use num_complex::Complex64;

use crate::bounds::{self, CertReport, GridSpec, LChoice, ProjTheorem};
use crate::error::{Error, Result};
use crate::oscillator::{self, DecaySpec, RadialGrid};
use crate::spectra::{self, TestFunction};
use crate::transforms;
use crate::weights::WeightSpec;

/// Theorem ids accepted by [`run`].
pub const THEOREMS: &[&str] = &["1.2", "1.3", "1.4", "1.5", "3.1", "3.2", "3.3", "3.4", "5.1", "1.7", "1.8", "P6.2"];

fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// String-valued parameters with typed accessors; records which keys were read.
#[derive(Debug, Default)]
pub struct Params {
    map: BTreeMap<String, String>,
    used: Mutex<BTreeSet<String>>,
}

impl Clone for Params {
    fn clone(&self) -> Self {
        Params { map: self.map.clone(), used: Mutex::new(BTreeSet::new()) }
    }
}

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: &[(&str, &str)]) -> Self {
        let mut p = Self::new();
        for (k, v) in pairs {
            p.set(k, v);
        }
        p
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.map.insert(key.trim().to_string(), value.trim().to_string());
    }

    /// Adds `key = value` lines; `#` starts a comment. Existing keys win,
    /// so command-line values override config-file defaults.
    pub fn merge_config(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| config(format!("config line {}: expected key = value", i + 1)))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(config(format!("config line {}: empty key", i + 1)));
            }
            self.map.entry(k.to_string()).or_insert_with(|| v.trim().to_string());
        }
        Ok(())
    }

    /// Parses `--key value` and `--key=value` tokens.
    pub fn from_args(args: &[String]) -> Result<Self> {
        let mut p = Self::new();
        let mut it = args.iter();
        while let Some(tok) = it.next() {
            let key = tok.strip_prefix("--").ok_or_else(|| config(format!("unexpected argument '{tok}'; parameters are --key value")))?;
            if let Some((k, v)) = key.split_once('=') {
                p.set(k, v);
            } else {
                let v = it.next().ok_or_else(|| config(format!("parameter --{key} needs a value")))?;
                p.set(key, v);
            }
        }
        Ok(p)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.used.lock().unwrap_or_else(|e| e.into_inner()).insert(key.to_string());
        self.map.get(key).map(String::as_str)
    }

    /// Keys present in the map that no accessor read.
    pub fn unused(&self) -> Vec<String> {
        let used = self.used.lock().unwrap_or_else(|e| e.into_inner());
        self.map.keys().filter(|k| !used.contains(*k)).cloned().collect()
    }

    /// Fails naming every missing key.
    pub fn require(&self, theorem: &str, keys: &[&str]) -> Result<()> {
        let missing: Vec<&str> = keys.iter().copied().filter(|k| !self.map.contains_key(*k)).collect();
        if missing.is_empty() {
            return Ok(());
        }
        Err(config(format!(
            "theorem {theorem}: missing parameter(s) {}; required: {}",
            missing.join(", "),
            keys.join(", ")
        )))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v = self.raw(key).ok_or_else(|| config(format!("missing parameter '{key}'")))?;
        parse_f64(v).map_err(|_| config(format!("parameter '{key}': cannot parse '{v}' as a number")))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        if self.contains(key) { self.f64(key) } else { Ok(default) }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| config(format!("parameter '{key}': cannot parse '{v}' as a non-negative integer"))),
        }
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.raw(key).unwrap_or(default)
    }

    pub fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) => {
                let xs = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_f64(s).map_err(|_| config(format!("parameter '{key}': cannot parse '{s}'"))))
                    .collect::<Result<Vec<_>>>()?;
                if xs.is_empty() {
                    return Err(config(format!("parameter '{key}' is an empty list")));
                }
                Ok(xs)
            }
        }
    }
}

/// Numbers, optionally written as multiples of π (`pi`, `pi/2`, `0.5pi`).
fn parse_f64(s: &str) -> std::result::Result<f64, ()> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return if v.is_finite() { Ok(v) } else { Err(()) };
    }
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a, b.parse::<f64>().map_err(|_| ())?),
        None => (s, 1.0),
    };
    let coef = num.strip_suffix("pi").ok_or(())?;
    let c = match coef.trim_end_matches('*') {
        "" => 1.0,
        "-" => -1.0,
        t => t.parse::<f64>().map_err(|_| ())?,
    };
    if den == 0.0 {
        return Err(());
    }
    Ok(c * PI / den)
}

/// Test-function specs: `gaussian:a`, `hermite:n1,n2,..`, `coeff_rule:s,y`,
/// `gauss_poly:a,p0,p1,..` (one-dimensional).
pub fn parse_test_function(spec: &str, dim: usize) -> Result<TestFunction> {
    let (kind, args) = spec.split_once(':').unwrap_or((spec, ""));
    let nums = |n: Option<usize>| -> Result<Vec<f64>> {
        let v: Vec<f64> = args
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| parse_f64(s).map_err(|_| config(format!("test function '{spec}': cannot parse '{s}'"))))
            .collect::<Result<_>>()?;
        if n.is_some_and(|n| n != v.len()) {
            return Err(config(format!("test function '{spec}' needs {} argument(s)", n.unwrap_or(0))));
        }
        Ok(v)
    };
    match kind.trim() {
        "gaussian" => TestFunction::gauss_poly(dim, nums(Some(1))?[0], vec![(vec![0; dim], Complex64::new(1.0, 0.0))]),
        "hermite" => {
            let v = nums(None)?;
            if v.iter().any(|x| *x < 0.0 || x.fract() != 0.0) || v.is_empty() {
                return Err(config(format!("test function '{spec}': indices must be non-negative integers")));
            }
            TestFunction::hermite(&v.iter().map(|x| *x as usize).collect::<Vec<_>>())
        }
        "coeff_rule" => {
            let v = nums(Some(2))?;
            TestFunction::coeff_rule(dim, v[0], v[1])
        }
        "gauss_poly" => {
            let v = nums(None)?;
            if v.len() < 2 || dim != 1 {
                return Err(config(format!("test function '{spec}': needs a, p0[, p1, ..] in one dimension")));
            }
            TestFunction::gauss_poly_1d(v[0], &v[1..])
        }
        other => Err(config(format!("unknown test function kind '{other}' (gaussian, hermite, coeff_rule, gauss_poly)"))),
    }
}

/// A certificate and the names of its point coordinates.
#[derive(Debug, Clone)]
pub struct Certified {
    pub report: CertReport,
    pub coords: Vec<String>,
}

fn named(report: CertReport, coords: &[&str]) -> Certified {
    Certified { report, coords: coords.iter().map(|s| s.to_string()).collect() }
}

fn x_grid(p: &Params, lo: f64, hi: f64, points: usize) -> Result<GridSpec> {
    let g = GridSpec::LogSpaced { lo: p.f64_or("xmin", lo)?, hi: p.f64_or("xmax", hi)?, points: p.usize_or("points", points)? };
    g.validate().map_err(|e| config(e.to_string()))?;
    Ok(g)
}

fn weight(p: &Params) -> Result<WeightSpec> {
    let lambda = p.f64_or("lambda", 1.0)?;
    let c = p.f64_or("c", 1.0)?;
    match p.str_or("weight", "log_power") {
        "zero" => WeightSpec::zero(lambda, c),
        "log_power" => WeightSpec::log_power(p.f64_or("ws", 0.25)?, lambda, c),
        other => Err(config(format!("unknown weight '{other}' (zero, log_power)"))),
    }
}

fn l_choice(p: &Params) -> Result<LChoice> {
    match p.str_or("l", "scan") {
        "scan" => Ok(LChoice::Scan),
        v => Ok(LChoice::Fixed(parse_f64(v).map_err(|_| config(format!("parameter 'l': expected a number or 'scan', got '{v}'")))?)),
    }
}

fn weight_params(w: &WeightSpec) -> Vec<(&'static str, f64)> {
    let mut v = vec![("lambda", w.lambda), ("c", w.c)];
    if let crate::weights::WeightVariant::LogPower { s } = w.variant {
        v.push(("ws", s));
    }
    v
}

/// Runs the certification for `theorem` with parameters from `p`.
pub fn run(theorem: &str, p: &Params) -> Result<Certified> {
    match theorem {
        "3.1" => {
            p.require("3.1", &["kappa", "beta", "y"])?;
            let (k, b, y) = (p.f64("kappa")?, p.f64("beta")?, p.f64("y")?);
            let grid = x_grid(p, 2.0, 40.0, 80)?;
            let r = bounds::certify(
                "3.1",
                &grid,
                |x| Ok(bounds::weighted_hermite_sum(k, b, 0.5, y, x[0])?.log_mag),
                |x| Ok(bounds::thm31_rhs(k, b, y, x[0]).log_mag),
            )?;
            Ok(named(r.with_params(&[("kappa", k), ("beta", b), ("y", y)]), &["x"]))
        }
        "3.2" => {
            p.require("3.2", &["kappa", "beta", "y"])?;
            let (k, b, y) = (p.f64("kappa")?, p.f64("beta")?, p.f64("y")?);
            let d = p.usize_or("d", 2)?;
            if !(1..=4).contains(&d) {
                return Err(config(format!("parameter 'd' must be in 1..=4, got {d}")));
            }
            let axis = x_grid(p, 2.0, 40.0, 20)?;
            let grid = GridSpec::Product(vec![axis; d]);
            let r = bounds::certify(
                "3.2",
                &grid,
                |x| Ok(bounds::thm32_lhs(k, b, y, x)?.log_mag),
                |x| Ok(bounds::thm32_rhs(k, b, y, x).log_mag),
            )?;
            let coords: Vec<String> = (1..=d).map(|j| format!("x_{j}")).collect();
            Ok(Certified { report: r.with_params(&[("kappa", k), ("beta", b), ("y", y), ("d", d as f64)]), coords })
        }
        "1.5" => {
            p.require("1.5", &["kappa", "beta", "s", "y"])?;
            let (k, b, s, y) = (p.f64("kappa")?, p.f64("beta")?, p.f64("s")?, p.f64("y")?);
            let grid = x_grid(p, 2.0, 40.0, 80)?;
            let r = bounds::certify(
                "1.5",
                &grid,
                |x| Ok(bounds::weighted_hermite_sum(k, b, s, y, x[0])?.log_mag),
                |x| Ok(bounds::thm15_rhs(k, b, s, y, x[0], None)?.log_mag),
            )?;
            let branch = if bounds::sum_branch_one(s, y) { 1.0 } else { 2.0 };
            Ok(named(r.with_params(&[("kappa", k), ("beta", b), ("s", s), ("y", y), ("branch", branch)]), &["x"]))
        }
        "1.2" => {
            p.require("1.2", &["s", "lambda"])?;
            let (s, lambda) = (p.f64("s")?, p.f64("lambda")?);
            let eps = p.f64_or("eps", 0.05)?;
            let nmax = p.usize_or("nmax", 60)?;
            let d = p.usize_or("d", 1)?;
            let ystar = bounds::y_of_lambda(s, lambda);
            let f = TestFunction::coeff_rule(d, s, ystar)?;
            let cv = spectra::hermite_coeffs(&f, nmax)?;
            let grid = if d == 1 { GridSpec::Index { lo: 0, hi: nmax } } else { GridSpec::MultiIndex { dim: d, min_degree: 0, max_degree: nmax } };
            let alpha = |pt: &[f64]| pt.iter().map(|v| *v as usize).collect::<Vec<_>>();
            let r = bounds::certify(
                "1.2",
                &grid,
                |pt| Ok(cv.get_log(&alpha(pt)).log_abs()),
                |pt| Ok(bounds::coeff_bound_logweight(s, lambda, eps, &alpha(pt))?.statement.log_mag),
            )?;
            let coords: Vec<String> = if d == 1 { vec!["n".into()] } else { (1..=d).map(|j| format!("alpha_{j}")).collect() };
            Ok(Certified { report: r.with_params(&[("s", s), ("lambda", lambda), ("eps", eps), ("y", ystar), ("d", d as f64)]), coords })
        }
        "3.4" => {
            p.require("3.4", &["gamma"])?;
            let gamma = p.f64("gamma")?;
            let d = p.usize_or("d", 2)?;
            let nmax = p.usize_or("nmax", 40)?;
            if gamma <= 0.0 || d == 0 {
                return Err(config("need gamma > 0 and d ≥ 1"));
            }
            let f = TestFunction::gaussian(d, (2.0 * gamma).tanh());
            let cv = spectra::hermite_coeffs(&f, nmax)?;
            let grid = GridSpec::MultiIndex { dim: d, min_degree: 1, max_degree: nmax };
            let alpha = |pt: &[f64]| pt.iter().map(|v| *v as usize).collect::<Vec<_>>();
            let r = bounds::certify(
                "3.4",
                &grid,
                |pt| Ok(cv.get_log(&alpha(pt)).log_abs()),
                |pt| Ok(bounds::coeff_bound_gaussian(gamma, d, alpha(pt).iter().sum())?.log_mag),
            )?;
            let improves = if bounds::gaussian_rate_improves(gamma, d) { 1.0 } else { 0.0 };
            let coords: Vec<String> = (1..=d).map(|j| format!("alpha_{j}")).collect();
            Ok(Certified { report: r.with_params(&[("gamma", gamma), ("d", d as f64), ("rate_improves", improves)]), coords })
        }
        "5.1" => {
            p.require("5.1", &["p", "q", "nu"])?;
            let (pp, q, nu) = (p.f64("p")?, p.f64("q")?, p.f64("nu")?);
            let rate = p.f64_or("rate", 3.0)?;
            let kmax = p.usize_or("kmax", 40)?;
            let w = weight(p)?;
            let f = TestFunction::gaussian(1, rate);
            let cv = spectra::laguerre_coeffs(&f, nu, kmax)?;
            let r = bounds::certify_with_l(
                "5.1",
                &GridSpec::Index { lo: 0, hi: kmax },
                |k| Ok(cv.get_log(&[k[0] as usize]).log_abs()),
                |l, k| Ok(bounds::laguerre_coeff_bound(pp, q, nu, k[0] as usize, l, &w)?.log_mag),
                l_choice(p)?,
            )?;
            let mut params = vec![("p", pp), ("q", q), ("nu", nu), ("rate", rate)];
            params.extend(weight_params(&w));
            Ok(named(r.with_params(&params), &["k"]))
        }
        "1.7" | "1.8" => {
            p.require(theorem, &["a"])?;
            let a = p.f64("a")?;
            let d = p.usize_or("d", 2)?;
            let rate = p.f64_or("rate", 2.5)?;
            let kmax = p.usize_or("kmax", 8)?;
            let w = weight(p)?;
            let q = if p.contains("q") { Some(p.f64("q")?) } else { None };
            let thm = ProjTheorem::for_class(a, theorem == "1.8");
            let f = radial_test_function(d, rate)?;
            let r = bounds::certify_with_l(
                thm.label(),
                &GridSpec::Index { lo: 0, hi: kmax },
                |k| spectra::projection_log_norm(&f, k[0] as usize),
                |l, k| Ok(bounds::projection_norm_bound(thm, a, w.c, d, k[0] as usize, l, &w, q)?.log_mag),
                l_choice(p)?,
            )?;
            let mut params = vec![("a", a), ("d", d as f64), ("rate", rate)];
            params.extend(weight_params(&w));
            Ok(named(r.with_params(&params), &["k"]))
        }
        "P6.2" => {
            p.require("P6.2", &["a"])?;
            let a = p.f64("a")?;
            let rate = p.f64_or("rate", 2.5)?;
            let big_l = p.f64_or("L", 1.0)?;
            let w = weight(p)?;
            let f = radial_test_function(1, rate)?;
            let grid = GridSpec::Product(vec![
                GridSpec::LogSpaced { lo: p.f64_or("rmin", 0.5)?, hi: p.f64_or("rmax", 12.0)?, points: p.usize_or("points", 24)? },
                GridSpec::List(angles(p.usize_or("angles", 8)?)?),
            ]);
            grid.validate().map_err(|e| config(e.to_string()))?;
            let r = bounds::certify(
                "P6.2",
                &grid,
                |pt| {
                    let (x, y) = (pt[0] * pt[1].cos(), pt[0] * pt[1].sin());
                    Ok(transforms::stft_eval(&f, &f, &[x], &[y])?.norm().ln())
                },
                |pt| Ok(bounds::prop62_envelope(a, big_l, &w, pt[0])),
            )?;
            let mut params = vec![("a", a), ("rate", rate), ("L", big_l)];
            params.extend(weight_params(&w));
            Ok(named(r.with_params(&params), &["r", "theta"]))
        }
        "1.3" | "1.4" | "3.3" => {
            let d_default = if theorem == "1.4" { 2 } else { 1 };
            let d = p.usize_or("d", d_default)?;
            let spec = if theorem == "3.3" {
                p.require("3.3", &["gamma"])?;
                DecaySpec::Gaussian { gamma: p.f64("gamma")? }
            } else {
                p.require(theorem, &["s", "lambda"])?;
                if (theorem == "1.3") != (d == 1) {
                    return Err(config(format!("theorem {theorem} needs {}", if theorem == "1.3" { "d = 1" } else { "d ≥ 2" })));
                }
                DecaySpec::LogWeight { s: p.f64("s")?, lambda: p.f64("lambda")?, eps: p.f64_or("eps", 0.05)? }
            };
            let times = p.list_or("times", &[0.0, 0.7, PI / 2.0, 2.1])?;
            let n = p.usize_or("N", if d == 1 { 128 } else { 256 })?;
            let u0 = match p.raw("u0") {
                None | Some("class") => spec.default_initial(d)?,
                Some(s) => parse_test_function(s, d)?,
            };
            let grid = RadialGrid::standard(d, x_grid(p, 2.0, 12.0, 40)?, p.usize_or("ndir", 3)?)?;
            let r = oscillator::decay_certificate(spec, &u0, &times, &grid, n)?;
            Ok(named(r, &["t", "r", "direction"]))
        }
        other => Err(config(format!("unknown theorem '{other}'; expected one of {}", THEOREMS.join(", ")))),
    }
}

/// `e^{−rate|x|²/2}(1 + |x|²)`.
pub fn radial_test_function(d: usize, rate: f64) -> Result<TestFunction> {
    let one = Complex64::new(1.0, 0.0);
    let mut terms = vec![(vec![0u32; d], one)];
    for j in 0..d {
        let mut e = vec![0u32; d];
        e[j] = 2;
        terms.push((e, one));
    }
    TestFunction::gauss_poly(d, rate, terms)
}

fn angles(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(config("parameter 'angles' must be positive"));
    }
    Ok((0..n).map(|j| 2.0 * PI * (j as f64 + 0.25) / n as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn parameter_parsing() {
        let mut p = Params::from_args(&args("--kappa 2 --beta=0 --times 0,pi/2,0.5pi")).unwrap();
        assert_eq!(p.f64("kappa").unwrap(), 2.0);
        assert_eq!(p.f64("beta").unwrap(), 0.0);
        assert_eq!(p.list_or("times", &[]).unwrap(), vec![0.0, PI / 2.0, PI / 2.0]);
        p.merge_config("kappa = 5\n# note\ny = 0.7 # trailing\n").unwrap();
        assert_eq!(p.f64("kappa").unwrap(), 2.0);
        assert_eq!(p.f64("y").unwrap(), 0.7);
        assert!(p.merge_config("oops").is_err());
        assert!(Params::from_args(&args("kappa 2")).is_err());
        assert!(Params::from_args(&args("--kappa")).is_err());
        assert!(matches!(Params::from_args(&args("--y abc")).unwrap().f64("y"), Err(Error::Config(_))));
    }

    #[test]
    fn missing_parameter_is_named() {
        let p = Params::from_args(&args("--kappa 1 --beta 0 --y 3")).unwrap();
        match run("1.5", &p) {
            Err(Error::Config(m)) => assert!(m.contains("missing parameter(s) s;"), "{m}"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(run("9.9", &p), Err(Error::Config(_))));
    }

    #[test]
    fn test_function_specs() {
        assert!(matches!(parse_test_function("hermite:3", 1).unwrap(), TestFunction::HermiteSeries(_)));
        assert_eq!(parse_test_function("gaussian:0.5", 2).unwrap().dim(), 2);
        assert!(parse_test_function("coeff_rule:0.25,4", 1).is_ok());
        assert!(parse_test_function("gauss_poly:1.2,1,0,0.3", 1).is_ok());
        assert!(parse_test_function("wave:1", 1).is_err());
        assert!(parse_test_function("coeff_rule:0.25", 1).is_err());
    }

    #[test]
    fn drivers_run() {
        let p = Params::from_args(&args("--kappa 2 --beta 0 --y 0.7 --points 20")).unwrap();
        let c = run("3.1", &p).unwrap();
        assert!(c.report.pass);
        assert_eq!(c.report.param("y"), Some(0.7));
        let p = Params::from_args(&args("--s 0.25 --lambda 1 --eps 0.05 --nmax 20")).unwrap();
        let c = run("1.2", &p).unwrap();
        assert!(c.report.pass && c.report.log_c_fit.abs() < 1e-12);
        assert!(p.unused().is_empty());
        let p = Params::from_args(&args("--gamma 1.5 --nmax 12")).unwrap();
        assert!(run("3.4", &p).unwrap().report.pass);
    }
}
