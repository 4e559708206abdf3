//! Named invariant suites for the `selftest` command.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::bounds::{self, GridSpec};
use crate::error::{Error, Result};
use crate::oscillator::Solution;
use crate::quadrature;
use crate::spectra::{self, TestFunction};
use crate::specfun;
use crate::transforms;
use crate::weights;

/// Outcome of one suite: pass flag, worst observed error and a short detail.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub pass: bool,
    pub worst: f64,
    pub detail: String,
}

pub struct Suite {
    pub name: &'static str,
    pub description: &'static str,
    run: fn() -> Result<(f64, f64)>,
}

/// Tracks the worst `error / tolerance` style comparison.
struct Worst(f64);

impl Worst {
    fn new() -> Self {
        Worst(0.0)
    }

    fn see(&mut self, err: f64) {
        self.0 = if err.is_nan() { f64::INFINITY } else { self.0.max(err) };
    }
}

fn orthonormality() -> Result<(f64, f64)> {
    let rule = quadrature::gauss_hermite_rule(200)?;
    let tables: Vec<Vec<f64>> = rule.nodes.iter().map(|&x| specfun::hermite_table(128, x)).collect::<Result<_>>()?;
    let mut w = Worst::new();
    for m in 0..=128 {
        for n in m..=128 {
            let ip: f64 = tables.iter().zip(&rule.scaled_weights).map(|(t, wt)| wt * t[m] * t[n]).sum();
            w.see((ip - if m == n { 1.0 } else { 0.0 }).abs());
        }
    }
    Ok((w.0, 1e-10))
}

fn fourier() -> Result<(f64, f64)> {
    let mut w = Worst::new();
    for n in (0..=32).step_by(4) {
        let f = TestFunction::hermite(&[n])?;
        let phase = C64::new(0.0, -1.0).powu(n as u32);
        for &xi in &[-2.5, 0.3, 1.7, 4.0] {
            let v = quadrature::fourier_transform_num(&f, &[xi])?;
            w.see((v - phase * specfun::hermite_log(n, xi)?.to_f64()).norm());
        }
    }
    Ok((w.0, 1e-8))
}

fn hankel() -> Result<(f64, f64)> {
    let mut w = Worst::new();
    for &nu in &[0.0, 0.5, 1.5] {
        for k in [0usize, 3, 8, 16] {
            for &s in &[0.5, 1.0, 2.0, 4.0] {
                let v = quadrature::hankel_transform_num(
                    |r| specfun::laguerre_psi_log(k, nu, r).map_or(f64::NAN, |v| v.to_f64()),
                    1.0,
                    nu,
                    s,
                )?;
                let want = specfun::laguerre_psi_log(k, nu, s)?.to_f64() * if k % 2 == 0 { 1.0 } else { -1.0 };
                w.see((v - want).abs() / want.abs().max(1e-300));
            }
        }
    }
    Ok((w.0, 1e-8))
}

fn bargmann() -> Result<(f64, f64)> {
    let cal = transforms::calibrate_bargmann()?;
    let mut w = Worst::new();
    w.see((cal.from_h0 - cal.printed).abs().max((cal.from_h1 - cal.printed).abs()));
    let f = TestFunction::gauss_poly_1d(0.7, &[1.0, -0.4, 0.25])?;
    let fh = f.fourier()?;
    for z in [C64::new(0.5, -1.0), C64::new(-2.0, 1.5), C64::new(1.0, 3.0)] {
        let lhs = transforms::bargmann_eval(&f, &[-C64::i() * z])?;
        let rhs = transforms::bargmann_eval(&fh, &[z])?;
        w.see((lhs - rhs).norm() / (1.0 + lhs.norm()));
    }
    Ok((w.0, 1e-7))
}

fn fock() -> Result<(f64, f64)> {
    let nu = 0.5;
    let f = TestFunction::gaussian(1, 2.0);
    let lc = spectra::laguerre_coeffs(&f, nu, 60)?;
    let mut w = Worst::new();
    for z in [C64::new(0.4, 0.3), C64::new(-1.2, 1.4)] {
        let u = transforms::fock_transform_eval(&f, nu, z)?;
        let mut s = C64::new(0.0, 0.0);
        for k in 0..=60usize {
            let kf = k as f64;
            let c = (-(nu + 2.0 * kf) * std::f64::consts::LN_2 - specfun::ln_gamma(kf + nu + 1.0)).exp();
            s += lc.get(&[k]) * c * z.powu(2 * k as u32) * if k % 2 == 0 { 1.0 } else { -1.0 };
        }
        w.see((u - s).norm());
    }
    Ok((w.0, 1e-7))
}

fn projection() -> Result<(f64, f64)> {
    let f = TestFunction::gauss_poly_1d(1.2, &[1.0, 0.3, 0.5])?;
    let mut w = Worst::new();
    for k in 0..=4 {
        let a = transforms::projection_norm_via_stft(&f, k)?;
        let b = spectra::projection_norm(&f, k)?;
        w.see((a * a - b * b).abs() / (b * b).max(1e-12));
    }
    Ok((w.0, 1e-6))
}

fn plancherel_rotach() -> Result<(f64, f64)> {
    let phi: f64 = 0.5;
    let scaled = |n: usize| -> Result<f64> {
        let x = (2.0 * n as f64 + 1.0).sqrt() * phi.cosh();
        let e = specfun::hermite_log(n, x)?;
        let a = specfun::plancherel_rotach_log(n, x)?;
        Ok(n as f64 * (a.log_mag - e.log_mag).exp_m1().abs())
    };
    let base = scaled(64)?;
    let mut w = Worst::new();
    for n in [128, 256, 512] {
        w.see(scaled(n)? / base);
    }
    Ok((w.0, 2.0))
}

fn weighted_sum() -> Result<(f64, f64)> {
    let mut w = Worst::new();
    for &(kappa, beta, s, y) in &[(1.0, 0.0, 0.25, 1.0), (2.0, 1.0, 0.5, 0.7), (0.5, 0.0, 0.125, 0.3)] {
        for &x in &[1.5, 2.5, 4.0] {
            let fast = bounds::weighted_hermite_sum(kappa, beta, s, y, x)?.to_f64();
            let table = specfun::hermite_table(400, x)?;
            let naive: f64 = (1..=400)
                .map(|n| {
                    let nf = n as f64;
                    (-kappa * y * nf.powf(1.0 / (2.0 * s))).exp() * nf.powf(-beta) * table[n].abs().powf(kappa)
                })
                .sum();
            w.see((fast - naive).abs() / naive);
        }
    }
    Ok((w.0, 1e-10))
}

fn young() -> Result<(f64, f64)> {
    let mut w = Worst::new();
    let p: f64 = 3.0;
    let q = p / (p - 1.0);
    for &v in &[0.5, 1.0, 2.0, 4.0] {
        let c = weights::young_conjugate(|u: f64| u.powf(p) / p, v, 100.0)?;
        w.see((c.value - v.powf(q) / q).abs() / (v.powf(q) / q));
        let quad = weights::young_conjugate(|u| u * u / 2.0, v, 100.0)?;
        w.see((quad.value - v * v / 2.0).abs() / (v * v / 2.0));
    }
    Ok((w.0, 1e-8))
}

fn oscillator() -> Result<(f64, f64)> {
    let u0 = TestFunction::gauss_poly_1d(0.8, &[0.4, 1.0, 0.0, 0.3])?;
    let sol = Solution::new(&u0, 200)?;
    let n0 = u0.norm_sq()?.sqrt();
    let rule = quadrature::gauss_hermite_rule(400)?;
    let mut w = Worst::new();
    for &t in &[0.3, 1.0, 2.2] {
        let ut = sol.at(t);
        let mut acc = 0.0;
        for (x, wt) in rule.nodes.iter().zip(&rule.scaled_weights) {
            acc += wt * ut.eval(&[*x])?.norm_sqr();
        }
        w.see((acc.sqrt() - n0).abs() / 1e-9);
        for &x in &[-1.5, 0.2, 2.7] {
            let a = sol.eval_log(t, &[x])?.value.to_c64();
            let b = sol.eval_log(t + PI, &[x])?.value.to_c64();
            w.see((a + b).norm() / 1e-10);
        }
    }
    Ok((w.0, 1.0))
}

fn certify_sums() -> Result<(f64, f64)> {
    let grid = GridSpec::LogSpaced { lo: 2.0, hi: 40.0, points: 40 };
    let mut w = Worst::new();
    for &(k, b, y) in &[(1.0, 0.0, 0.7), (2.0, 1.0, 1.2)] {
        let r = bounds::certify(
            "3.1",
            &grid,
            |x| Ok(bounds::weighted_hermite_sum(k, b, 0.5, y, x[0])?.log_mag),
            |x| Ok(bounds::thm31_rhs(k, b, y, x[0]).log_mag),
        )?;
        // log growth of C_fit under refinement, or ∞ when the certificate fails
        w.see(if r.pass { r.log_c_fit - r.log_c_base } else { f64::INFINITY });
    }
    Ok((w.0, bounds::STABILITY_LOG_GROWTH))
}

pub static SUITES: &[Suite] = &[
    Suite { name: "orthonormality", description: "quadrature Gram matrix of h_0..h_128", run: orthonormality },
    Suite { name: "fourier", description: "F h_n = (−i)^n h_n", run: fourier },
    Suite { name: "hankel", description: "H_ν ψ_k = (−1)^k ψ_k", run: hankel },
    Suite { name: "bargmann", description: "calibration and B f(−iz) = B f̂(z)", run: bargmann },
    Suite { name: "fock", description: "Fock transform equals its Laguerre series", run: fock },
    Suite { name: "projection", description: "STFT route vs coefficient route for ‖P_k f‖", run: projection },
    Suite { name: "plancherel-rotach", description: "n·(relative error) stays bounded", run: plancherel_rotach },
    Suite { name: "weighted-sum", description: "log-domain sums vs naive summation", run: weighted_sum },
    Suite { name: "young", description: "conjugates of power and quadratic functions", run: young },
    Suite { name: "oscillator", description: "unitarity and u(t+π) = −u(t) in d = 1", run: oscillator },
    Suite { name: "certify", description: "exponential-sum certificates are grid-stable", run: certify_sums },
];

/// Runs every suite whose name contains `filter`; an empty selection is a
/// configuration error.
pub fn run_suites(filter: Option<&str>) -> Result<Vec<SuiteResult>> {
    let selected: Vec<&Suite> = SUITES.iter().filter(|s| filter.is_none_or(|f| s.name.contains(f))).collect();
    if selected.is_empty() {
        let names: Vec<&str> = SUITES.iter().map(|s| s.name).collect();
        return Err(Error::Config(format!(
            "no self-test suite matches '{}'; available: {}",
            filter.unwrap_or_default(),
            names.join(", ")
        )));
    }
    Ok(selected
        .into_iter()
        .map(|s| match (s.run)() {
            Ok((worst, tol)) => SuiteResult {
                name: s.name,
                pass: worst <= tol,
                worst,
                detail: format!("{} (worst {worst:.3e}, tolerance {tol:.3e})", s.description),
            },
            Err(e) => SuiteResult { name: s.name, pass: false, worst: f64::INFINITY, detail: format!("{}: {e}", s.description) },
        })
        .collect())
}
