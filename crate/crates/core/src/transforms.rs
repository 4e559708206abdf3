//! Bargmann, short-time Fourier, symplectic Fourier and generalized Fock
//! transforms of test functions.

use crate::error::{domain, Error, Result};
use crate::logscaled::{LogComplex, LogComplexSum, LogScaled};
use crate::quadrature::{gauss_hermite_rule, gauss_laguerre_rule, MAX_RULE_SIZE};
use crate::specfun;
use crate::spectra::{Factor, TestFunction};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::f64::consts::PI;

const LN_PI: f64 = 1.144_729_885_849_400_2;
/// Roundoff per unit of `Σ|w_i g(x_i)|` assumed when judging cancellation.
const NOISE: f64 = 1e-15;
pub const MAX_BARGMANN_ARG: f64 = 40.0;
pub const MAX_FOCK_ARG: f64 = 20.0;

/// Accuracy target `abs_tol + rel_tol·|value|` for quadrature-based transforms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for Target {
    fn default() -> Self {
        Target { abs_tol: 1e-14, rel_tol: 1e-10 }
    }
}

impl Target {
    fn tol(&self, v: C64) -> f64 {
        self.abs_tol + self.rel_tol * v.norm()
    }
}

fn gh_sum(center: f64, rate: f64, n: usize, g: &dyn Fn(f64) -> C64) -> Result<(C64, f64)> {
    let rule = gauss_hermite_rule(n)?;
    let sigma = (2.0 / rate).sqrt();
    let (mut acc, mut scale) = (C64::new(0.0, 0.0), 0.0);
    for (u, w) in rule.nodes.iter().zip(&rule.scaled_weights) {
        if *w == 0.0 || !w.is_finite() {
            continue;
        }
        let v = g(center + sigma * u) * *w;
        acc += v;
        scale += v.norm();
    }
    Ok((acc * sigma, scale * sigma))
}

/// `∫ g` for `g` concentrated like `e^{−rate (x−center)²/2}`, doubling the
/// Gauss–Hermite order from `n0`. Returns the value and `Σ|w g|`; fails when
/// the order cap is reached or cancellation leaves less than the target.
fn integrate_gh(center: f64, rate: f64, n0: usize, target: Target, what: &str, g: &dyn Fn(f64) -> C64) -> Result<(C64, f64)> {
    let mut n = n0.min(MAX_RULE_SIZE);
    let (mut prev, _) = gh_sum(center, rate, n, g)?;
    loop {
        if n >= MAX_RULE_SIZE {
            return Err(Error::Accuracy { what: what.to_string(), estimate: f64::NAN });
        }
        n = (2 * n).min(MAX_RULE_SIZE);
        let (cur, scale) = gh_sum(center, rate, n, g)?;
        let diff = (cur - prev).norm();
        if diff <= target.tol(cur) + NOISE * scale {
            let noise = NOISE * scale;
            if noise > target.tol(cur) {
                return Err(Error::Accuracy { what: format!("{what} (cancellation)"), estimate: noise / cur.norm().max(1e-300) });
            }
            return Ok((cur, scale));
        }
        prev = cur;
    }
}

fn trapezoid_scaled(grid: &[f64], g: &dyn Fn(usize) -> C64) -> (C64, f64) {
    let (mut acc, mut scale) = (C64::new(0.0, 0.0), 0.0);
    for i in 1..grid.len() {
        let v = (g(i) + g(i - 1)) * (0.5 * (grid[i] - grid[i - 1]));
        acc += v;
        scale += v.norm();
    }
    (acc, scale)
}

fn check_dim(f: &TestFunction, n: usize) -> Result<()> {
    if n != f.dim() {
        return domain(format!("point has dimension {n} but f has {}", f.dim()));
    }
    Ok(())
}

// ---------------------------------------------------------------- Bargmann

/// `Bf(z) = π^{−d/2} e^{−z²/4} ∫ f(ξ) e^{−ξ²/2} e^{z·ξ} dξ` (`z² = Σ z_j²`).
/// Gauss-polynomial factors use complex Gaussian moments, Hermite-type factors
/// their Taylor series `Σ c_n z^n`, sampled factors quadrature.
pub fn bargmann_eval(f: &TestFunction, z: &[C64]) -> Result<C64> {
    Ok(bargmann_eval_log(f, z)?.to_c64())
}

/// [`bargmann_eval`] in the log domain (for growth estimates).
pub fn bargmann_eval_log(f: &TestFunction, z: &[C64]) -> Result<LogComplex> {
    check_bargmann_args(f, z)?;
    let mut acc = LogComplexSum::new();
    for t in f.separable_terms() {
        let mut v = LogComplex::from_c64(t.coeff);
        for (fac, &zj) in t.factors.iter().zip(z) {
            v = v.mul(bargmann_factor(fac, zj)?);
        }
        acc.push(v);
    }
    Ok(acc.value())
}

/// [`bargmann_eval`] by tensorized Gauss–Hermite quadrature of the defining
/// integral for every factor; an independent route to the same values.
pub fn bargmann_eval_quad(f: &TestFunction, z: &[C64]) -> Result<C64> {
    check_bargmann_args(f, z)?;
    let mut acc = C64::new(0.0, 0.0);
    for t in f.separable_terms() {
        let mut v = t.coeff;
        for (fac, &zj) in t.factors.iter().zip(z) {
            v *= bargmann_factor_quad(fac, zj)?;
        }
        acc += v;
    }
    Ok(acc)
}

fn check_bargmann_args(f: &TestFunction, z: &[C64]) -> Result<()> {
    check_dim(f, z.len())?;
    if let Some(bad) = z.iter().find(|v| !(v.norm() <= MAX_BARGMANN_ARG)) {
        return domain(format!("Bargmann argument {bad} exceeds |z| ≤ {MAX_BARGMANN_ARG}"));
    }
    Ok(())
}

fn bargmann_factor(fac: &Factor, z: C64) -> Result<LogComplex> {
    match fac {
        Factor::GaussMono { a, k } => Ok(LogComplex::from_c64(bargmann_gauss_mono(*a, *k, z))),
        Factor::Hermite { n } => Ok(hermite_bargmann_term(*n, z)),
        Factor::CoeffRule { s, y, step } => Ok(bargmann_coeff_rule(*s, *y, *step, z)),
        Factor::Sampled { .. } => Ok(LogComplex::from_c64(bargmann_factor_quad(fac, z)?)),
    }
}

/// `B h_n(z) = z^n / √(2^n n! √π)`.
fn hermite_bargmann_term(n: usize, z: C64) -> LogComplex {
    if z.norm() == 0.0 {
        return if n == 0 { LogComplex::from_polar(-0.25 * LN_PI, 0.0) } else { LogComplex::ZERO };
    }
    let nf = n as f64;
    let l = nf * z.norm().ln() - 0.5 * (nf * std::f64::consts::LN_2 + specfun::ln_gamma(nf + 1.0) + 0.5 * LN_PI);
    LogComplex::from_polar(l, nf * z.arg())
}

fn bargmann_coeff_rule(s: f64, y: f64, step: f64, z: C64) -> LogComplex {
    let p = 1.0 / (2.0 * s);
    let mut acc = LogComplexSum::new();
    let lz = z.norm().ln();
    let log_term = |n: f64| -y * n.powf(p) + n * lz - 0.5 * (n * std::f64::consts::LN_2 + specfun::ln_gamma(n + 1.0) + 0.5 * LN_PI);
    let mut n = 0usize;
    loop {
        let nf = n as f64;
        let t = hermite_bargmann_term(n, z);
        acc.push(t.scale(LogScaled::from_log(-y * nf.powf(p))).mul(LogComplex::from_polar(0.0, step * nf)));
        if z.norm() == 0.0 {
            break;
        }
        // log ratio of consecutive terms decreases in n; once below −ln 2 the
        // tail is at most the current term
        let ratio = log_term(nf + 1.0) - log_term(nf);
        if ratio < -std::f64::consts::LN_2 && log_term(nf) < acc.value().log_abs() - 40.0 {
            break;
        }
        n += 1;
        if n > 100_000 {
            break;
        }
    }
    acc.value()
}

/// `π^{−1/2} e^{−z²/4} ∫ ξ^k e^{−(1+a)ξ²/2 + zξ} dξ` through the moments of a
/// normal law with complex mean `z/b`, `b = 1 + a`.
fn bargmann_gauss_mono(a: f64, k: u32, z: C64) -> C64 {
    let b = 1.0 + a;
    let mu = z / b;
    let var = 1.0 / b;
    let mut m = C64::new(0.0, 0.0);
    let mut binom = 1.0f64;
    let mut dfact = 1.0f64; // (j−1)!! for even j
    for j in 0..=k {
        if j > 0 {
            binom *= (k - j + 1) as f64 / j as f64;
        }
        if j % 2 == 0 {
            if j >= 2 {
                dfact *= (j - 1) as f64;
            }
            m += mu.powu(k - j) * (binom * dfact * var.powi(j as i32 / 2));
        }
    }
    let ex = z * z * (0.5 / b - 0.25);
    ex.exp() * m * (2.0 * PI / b).sqrt() / PI.sqrt()
}

fn bargmann_factor_quad(fac: &Factor, z: C64) -> Result<C64> {
    let kern = |xi: f64| (C64::new(-0.5 * xi * xi, 0.0) + z * xi - z * z * 0.25).exp();
    let norm = PI.sqrt().recip();
    if let Factor::Sampled { grid, values } = fac {
        let (v, scale) = trapezoid_scaled(grid, &|i| values[i] * kern(grid[i]));
        let t = Target::default();
        if NOISE * scale > t.tol(v) {
            return Err(Error::Accuracy { what: "Bargmann trapezoid (cancellation)".into(), estimate: NOISE * scale / v.norm().max(1e-300) });
        }
        return Ok(v * norm);
    }
    let rate = 1.0 + fac.decay();
    let g = |xi: f64| fac.eval(xi) * kern(xi);
    let (v, _) = integrate_gh(z.re / rate, rate, 64, Target::default(), "Bargmann quadrature", &g)?;
    Ok(v * norm)
}

/// Prefactor of the Bargmann integral fixed by requiring the Taylor–Hermite
/// relation `⟨f, h_n⟩ = (2^n n! √π)^{1/2} c_n` for `h_0` and `h_1` in one
/// dimension. The `d`-dimensional prefactor is its `d`-th power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub from_h0: f64,
    pub from_h1: f64,
    /// The printed `π^{−1/2}`.
    pub printed: f64,
}

impl Calibration {
    pub fn consistent(&self, tol: f64) -> bool {
        (self.from_h0 - self.printed).abs() <= tol * self.printed && (self.from_h1 - self.printed).abs() <= tol * self.printed
    }

    pub fn prefactor(&self, d: usize) -> f64 {
        self.from_h0.powi(d as i32)
    }
}

pub fn calibrate_bargmann() -> Result<Calibration> {
    let raw = |n: usize| {
        let fac = Factor::Hermite { n };
        move |z: C64| bargmann_factor_quad(&fac, z).map(|v| v * PI.sqrt()).unwrap_or(C64::new(f64::NAN, 0.0))
    };
    let t0 = taylor_coeffs(raw(0), 1, 1.0)?;
    let t1 = taylor_coeffs(raw(1), 1, 1.0)?;
    let want0 = (-0.25 * LN_PI).exp();
    let want1 = (2.0 * PI.sqrt()).sqrt().recip();
    Ok(Calibration { from_h0: want0 / t0[0].norm(), from_h1: want1 / t1[1].norm(), printed: PI.sqrt().recip() })
}

/// Taylor coefficients `a_0..=a_{n_max}` of an entire `g` by the trapezoidal
/// rule on `|z| = r` with `max(8 n_max, 64)` nodes.
pub fn taylor_coeffs(g: impl Fn(C64) -> C64 + Sync, n_max: usize, r: f64) -> Result<Vec<C64>> {
    if n_max > 128 {
        return domain(format!("Taylor degree {n_max} exceeds 128"));
    }
    if !(r > 0.0) || !r.is_finite() {
        return domain(format!("contour radius must be positive, got {r}"));
    }
    if n_max as f64 * r.ln().abs() > 690.0 {
        let lim = (690.0 / n_max as f64).exp();
        return Err(Error::Range(format!(
            "r^{n_max} under/overflows at r = {r}; choose r in [{:.4}, {:.4}]",
            lim.recip(),
            lim
        )));
    }
    let m = (8 * n_max).max(64);
    let vals: Vec<C64> = (0..m).into_par_iter().map(|j| g(C64::from_polar(r, 2.0 * PI * j as f64 / m as f64))).collect();
    if vals.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Numeric("non-finite function value on the Cauchy contour".into()));
    }
    Ok((0..=n_max)
        .map(|n| {
            let mut acc = C64::new(0.0, 0.0);
            for (j, v) in vals.iter().enumerate() {
                acc += v * C64::from_polar(1.0, -2.0 * PI * (n * j % m) as f64 / m as f64);
            }
            acc / m as f64 / r.powi(n as i32)
        })
        .collect())
}

/// Relative discrete Cauchy–Riemann residual `|∂_x g + i ∂_y g| / |∂_x g|`
/// by central differences of step `h`.
pub fn cauchy_riemann_residual(g: impl Fn(C64) -> Result<C64>, z: C64, h: f64) -> Result<f64> {
    let dx = (g(z + h)? - g(z - h)?) / (2.0 * h);
    let dy = (g(z + C64::new(0.0, h))? - g(z - C64::new(0.0, h))?) / (2.0 * h);
    Ok((dx + C64::i() * dy).norm() / dx.norm().max(1e-300))
}

// ---------------------------------------------------------------- STFT

/// `V(f, g)(x + iy) = (2π)^{−d/2} ∫ e^{i(x·ξ + x·y/2)} f(ξ + y) ḡ(ξ) dξ`.
/// When `|x| > |y|` and both transforms are available in closed form, the
/// equivalent `V(f̂, ĝ)(−iz)` is integrated instead, avoiding cancellation.
pub fn stft_eval(f: &TestFunction, g: &TestFunction, x: &[f64], y: &[f64]) -> Result<C64> {
    check_dim(f, x.len())?;
    check_dim(g, x.len())?;
    check_dim(f, y.len())?;
    let nx: f64 = x.iter().map(|v| v * v).sum();
    let ny: f64 = y.iter().map(|v| v * v).sum();
    if nx > ny {
        if let (Ok(fh), Ok(gh)) = (f.fourier(), g.fourier()) {
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            return stft_direct(&fh, &gh, y, &neg, Target::default());
        }
    }
    stft_direct(f, g, x, y, Target::default())
}

/// [`stft_eval`] without the Fourier-side route.
pub fn stft_eval_direct(f: &TestFunction, g: &TestFunction, x: &[f64], y: &[f64]) -> Result<C64> {
    check_dim(f, x.len())?;
    check_dim(g, x.len())?;
    check_dim(f, y.len())?;
    stft_direct(f, g, x, y, Target::default())
}

fn stft_direct(f: &TestFunction, g: &TestFunction, x: &[f64], y: &[f64], target: Target) -> Result<C64> {
    let tf = f.separable_terms();
    let tg = g.separable_terms();
    let mut acc = C64::new(0.0, 0.0);
    for s in &tf {
        for t in &tg {
            let mut v = s.coeff * t.coeff.conj();
            for j in 0..x.len() {
                v *= stft_factor(&s.factors[j], &t.factors[j], x[j], y[j], target)?.0;
            }
            acc += v;
        }
    }
    Ok(acc)
}

/// One-dimensional STFT of a factor pair with its quadrature scale.
fn stft_factor(f: &Factor, g: &Factor, x: f64, y: f64, target: Target) -> Result<(C64, f64)> {
    let norm = (2.0 * PI).sqrt().recip();
    let phase = C64::from_polar(1.0, x * y / 2.0);
    let integrand = |xi: f64| f.eval(xi + y) * g.eval(xi).conj() * C64::from_polar(1.0, x * xi);
    let sampled = match (f, g) {
        (_, Factor::Sampled { grid, .. }) => Some(grid.iter().copied().collect::<Vec<_>>()),
        (Factor::Sampled { grid, .. }, _) => Some(grid.iter().map(|v| v - y).collect()),
        _ => None,
    };
    let (v, scale) = if let Some(grid) = sampled {
        let (v, scale) = trapezoid_scaled(&grid, &|i| integrand(grid[i]));
        if NOISE * scale > target.tol(v) {
            return Err(Error::Accuracy { what: "STFT trapezoid (cancellation)".into(), estimate: NOISE * scale / v.norm().max(1e-300) });
        }
        (v, scale)
    } else {
        let (af, ag) = (f.decay(), g.decay());
        let rate = af + ag;
        integrate_gh(-af * y / rate, rate, 64, target, "STFT quadrature", &integrand)?
    };
    Ok((v * phase * norm, scale * norm))
}

// ---------------------------------------------------------------- symplectic FT

/// Samples of a function on a rectangular grid of `ℂ` (`ζ = u + iv`),
/// row-major in `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneSamples {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub values: Vec<C64>,
}

impl PlaneSamples {
    pub fn from_fn(u: Vec<f64>, v: Vec<f64>, f: impl Fn(C64) -> Result<C64> + Sync) -> Result<Self> {
        if u.len() < 2 || v.len() < 2 {
            return domain("plane samples need at least a 2×2 grid");
        }
        let pts: Vec<C64> = u.iter().flat_map(|&a| v.iter().map(move |&b| C64::new(a, b))).collect();
        let values = pts.par_iter().map(|&z| f(z)).collect::<Result<Vec<_>>>()?;
        Ok(PlaneSamples { u, v, values })
    }

    /// Uniform square grid `[−h, h]²` with `n` points per side.
    pub fn square(half_width: f64, n: usize, f: impl Fn(C64) -> Result<C64> + Sync) -> Result<Self> {
        let g: Vec<f64> = (0..n).map(|i| -half_width + 2.0 * half_width * i as f64 / (n - 1) as f64).collect();
        Self::from_fn(g.clone(), g, f)
    }

    fn at(&self, i: usize, j: usize) -> C64 {
        self.values[i * self.v.len() + j]
    }
}

fn trapezoid_weights(g: &[f64]) -> Vec<f64> {
    let n = g.len();
    (0..n)
        .map(|i| {
            let l = if i > 0 { g[i] - g[i - 1] } else { 0.0 };
            let r = if i + 1 < n { g[i + 1] - g[i] } else { 0.0 };
            0.5 * (l + r)
        })
        .collect()
}

/// `F_S F(z) = ∫_ℂ e^{−(i/2) Im(z ζ̄)} F(ζ) dζ` (one complex dimension) by the
/// tensorized trapezoidal rule; the samples must have decayed to `1e−10` of
/// their peak on the grid boundary.
pub fn symplectic_ft_eval(samples: &PlaneSamples, z: C64) -> Result<C64> {
    let (nu, nv) = (samples.u.len(), samples.v.len());
    if samples.values.len() != nu * nv {
        return domain("plane sample count does not match the grid");
    }
    let peak = samples.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut edge = 0.0f64;
    for i in 0..nu {
        edge = edge.max(samples.at(i, 0).norm()).max(samples.at(i, nv - 1).norm());
    }
    for j in 0..nv {
        edge = edge.max(samples.at(0, j).norm()).max(samples.at(nu - 1, j).norm());
    }
    if edge > 1e-10 * peak {
        return Err(Error::Coverage(format!("samples reach {:.3e} of their peak on the grid boundary; widen the grid", edge / peak)));
    }
    let wu = trapezoid_weights(&samples.u);
    let wv = trapezoid_weights(&samples.v);
    let mut acc = C64::new(0.0, 0.0);
    for (i, &u) in samples.u.iter().enumerate() {
        let row = C64::from_polar(1.0, -0.5 * z.im * u);
        let mut racc = C64::new(0.0, 0.0);
        for (j, &v) in samples.v.iter().enumerate() {
            racc += samples.at(i, j) * C64::from_polar(wv[j], 0.5 * z.re * v);
        }
        acc += racc * row * wu[i];
    }
    Ok(acc)
}

// ---------------------------------------------------------------- Fock transform

/// `Λ_ν(w) = J_ν(w)/(w/2)^ν` for complex `w`, including `ν ∈ (−1/2, 0)`.
fn lambda_nu(nu: f64, w: C64) -> Result<C64> {
    if nu >= 0.0 {
        return specfun::bessel_j_norm(nu, w);
    }
    let t = -w * w / 4.0;
    let mut term = C64::new((-specfun::ln_gamma(nu + 1.0)).exp(), 0.0);
    let mut sum = term;
    let mut k = 0.0;
    while k < 2000.0 {
        term = term * t / ((k + 1.0) * (k + nu + 1.0));
        sum += term;
        k += 1.0;
        if k > t.norm() && term.norm() < 1e-18 * sum.norm() {
            break;
        }
    }
    Ok(sum)
}

/// `U_ν f(z) = e^{−z²/4} ∫₀^∞ f(r) [J_ν(izr)/(izr)^ν] e^{−r²/2} r^{2ν+1} dr`
/// for a radial profile decaying like `e^{−decay·r²/2}`.
pub fn fock_transform_fn(f: impl Fn(f64) -> C64, decay: f64, nu: f64, z: C64) -> Result<C64> {
    check_fock(nu, z)?;
    if !(decay > -1.0) {
        return domain("decay hint must exceed −1");
    }
    let b = 1.0 + decay;
    let pref = (2.0 / b).powf(nu) / b * 2f64.powf(-nu);
    let iz = C64::i() * z;
    let target = Target::default();
    let mut n = 32usize;
    let mut prev: Option<C64> = None;
    loop {
        let rule = gauss_laguerre_rule(n, nu)?;
        let (mut acc, mut scale) = (C64::new(0.0, 0.0), 0.0);
        for (u, w) in rule.nodes.iter().zip(&rule.scaled_weights) {
            if !w.is_finite() || *w == 0.0 {
                continue;
            }
            let r = (2.0 * u / b).sqrt();
            let v = f(r) * lambda_nu(nu, iz * r)? * (w.ln() - 0.5 * r * r).exp();
            acc += v;
            scale += v.norm();
        }
        let cur = acc * pref;
        let scale = scale * pref;
        if let Some(p) = prev {
            if (cur - p).norm() <= target.tol(cur) + NOISE * scale {
                let out = cur * (-z * z / 4.0).exp();
                let noise = NOISE * scale * (-z * z / 4.0).exp().norm();
                if noise > target.tol(out) {
                    return Err(Error::Accuracy { what: "Fock transform (cancellation)".into(), estimate: noise / out.norm().max(1e-300) });
                }
                return Ok(out);
            }
        }
        if n >= MAX_RULE_SIZE {
            return Err(Error::Accuracy { what: "Fock transform quadrature".into(), estimate: prev.map_or(f64::NAN, |p| (cur - p).norm()) });
        }
        prev = Some(cur);
        n = (2 * n).min(MAX_RULE_SIZE);
    }
}

fn check_fock(nu: f64, z: C64) -> Result<()> {
    if !(nu > -0.5) {
        return domain(format!("Fock transform type ν = {nu} must exceed −1/2"));
    }
    if !(z.norm() <= MAX_FOCK_ARG) {
        return domain(format!("Fock transform argument {z} exceeds |z| ≤ {MAX_FOCK_ARG}"));
    }
    Ok(())
}

/// [`fock_transform_fn`] of a one-dimensional test function read as a radial
/// profile on `r ≥ 0`; sampled profiles use the trapezoidal rule.
pub fn fock_transform_eval(f: &TestFunction, nu: f64, z: C64) -> Result<C64> {
    if f.dim() != 1 {
        return domain("the Fock transform acts on one-dimensional radial profiles");
    }
    check_fock(nu, z)?;
    if let TestFunction::Sampled { grid, values } = f {
        if grid[0] < 0.0 {
            return domain("radial samples must live on r ≥ 0");
        }
        let iz = C64::i() * z;
        let ker: Vec<C64> = grid
            .iter()
            .map(|&r| Ok(lambda_nu(nu, iz * r)? * (2f64.powf(-nu) * (-0.5 * r * r).exp() * r.powf(2.0 * nu + 1.0))))
            .collect::<Result<_>>()?;
        let (v, _) = trapezoid_scaled(grid, &|i| values[i] * ker[i]);
        return Ok(v * (-z * z / 4.0).exp());
    }
    fock_transform_fn(|r| f.eval(&[r]).unwrap_or(C64::new(f64::NAN, 0.0)), f.decay_rate(), nu, z)
}

// ---------------------------------------------------------------- projection norms

/// Laguerre polynomials `L_0(x), …, L_k(x)` of type 0.
fn laguerre0(k: usize, x: f64) -> Vec<f64> {
    let mut out = vec![1.0];
    if k >= 1 {
        out.push(1.0 - x);
    }
    for n in 1..k {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0 - x) * out[n] - nf * out[n - 1]) / (nf + 1.0);
        out.push(next);
    }
    out
}

/// `Q_m = ∫_ℂ V(f, g)(z) L_m(|z|²/2) e^{−|z|²/4} dz` for `m ≤ k`, on an
/// `n × n` Gauss–Hermite product grid.
fn stft_laguerre_moments(f: &Factor, g: &Factor, k: usize, n: usize) -> Result<Vec<C64>> {
    let (af, ag) = match (f, g) {
        (Factor::Sampled { .. }, _) | (_, Factor::Sampled { .. }) => (1.0, 1.0),
        _ => (f.decay(), g.decay()),
    };
    let rate_x = 1.0 / (af + ag) + 0.5;
    let rate_y = af * ag / (af + ag) + 0.5;
    let rule = gauss_hermite_rule(n)?;
    let (sx, sy) = ((2.0 / rate_x).sqrt(), (2.0 / rate_y).sqrt());
    let inner = Target { abs_tol: 1e-15, rel_tol: 1e-12 };
    let rows: Vec<Vec<C64>> = rule
        .nodes
        .par_iter()
        .zip(rule.scaled_weights.par_iter())
        .map(|(ux, wx)| {
            let mut acc = vec![C64::new(0.0, 0.0); k + 1];
            if *wx == 0.0 || !wx.is_finite() {
                return Ok(acc);
            }
            let x = sx * ux;
            for (uy, wy) in rule.nodes.iter().zip(&rule.scaled_weights) {
                if *wy == 0.0 || !wy.is_finite() {
                    continue;
                }
                let y = sy * uy;
                let r2 = x * x + y * y;
                let v = match stft_factor(f, g, x, y, inner) {
                    Ok((v, _)) => v,
                    Err(Error::Accuracy { .. }) => stft_factor(f, g, x, y, Target { abs_tol: f64::INFINITY, rel_tol: 0.0 })
                        .map(|p| p.0)
                        .unwrap_or(C64::new(0.0, 0.0)),
                    Err(e) => return Err(e),
                };
                let base = v * (wx * wy * (-r2 / 4.0).exp());
                for (m, l) in laguerre0(k, r2 / 2.0).iter().enumerate() {
                    acc[m] += base * *l;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut out = vec![C64::new(0.0, 0.0); k + 1];
    for r in rows {
        for (o, v) in out.iter_mut().zip(r) {
            *o += v;
        }
    }
    Ok(out.into_iter().map(|v| v * sx * sy).collect())
}

/// `‖P_k f‖₂` from `‖P_k f‖² = (2π)^{−d/2} ∫_{ℂ^d} V(f, f)(z) φ_k^{d−1}(z) dz`,
/// using `L_k^{d−1}(Σ_j t_j) = Σ_{|κ|=k} Π_j L_{κ_j}(t_j)` to tensorize over
/// coordinates. Grids of 48, 96, 192 nodes per axis are tried in turn.
pub fn projection_norm_via_stft(f: &TestFunction, k: usize) -> Result<f64> {
    let d = f.dim();
    if !(1..=2).contains(&d) {
        return domain(format!("projection norms via the STFT support d ∈ {{1, 2}}, got {d}"));
    }
    if k > 8 {
        return domain(format!("level {k} exceeds 8"));
    }
    let terms = f.separable_terms();
    let eval = |n: usize| -> Result<C64> {
        let mut total = C64::new(0.0, 0.0);
        for s in &terms {
            for t in &terms {
                let q: Vec<Vec<C64>> =
                    (0..d).map(|j| stft_laguerre_moments(&s.factors[j], &t.factors[j], k, n)).collect::<Result<_>>()?;
                let mut sum = C64::new(0.0, 0.0);
                if d == 1 {
                    sum = q[0][k];
                } else {
                    for m in 0..=k {
                        sum += q[0][m] * q[1][k - m];
                    }
                }
                total += s.coeff * t.coeff.conj() * sum;
            }
        }
        Ok(total * (2.0 * PI).powf(-(d as f64) / 2.0))
    };
    let mut prev = eval(48)?;
    for n in [96, 192] {
        let cur = eval(n)?;
        if (cur - prev).norm() <= 1e-10 * (1.0 + cur.norm()) {
            return finish_projection(cur);
        }
        prev = cur;
    }
    Err(Error::Accuracy { what: "projection norm via STFT".into(), estimate: f64::NAN })
}

fn finish_projection(v: C64) -> Result<f64> {
    if v.re < -1e-8 || v.im.abs() > 1e-8 * (1.0 + v.re.abs()) {
        return Err(Error::Consistency(format!("‖P_k f‖² evaluated to {v}, not a nonnegative real")));
    }
    Ok(v.re.max(0.0).sqrt())
}
