//! Gauss–Hermite and generalized Gauss–Laguerre rules, and the quadrature
//! routes for the Fourier and Hankel transforms.

use crate::error::{domain, Error, Result};
use crate::logscaled::{LogScaled, LogSum};
use crate::specfun::{self, HermiteState, LaguerreState};
use crate::spectra::{Factor, TestFunction};
use num_complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

pub const MAX_RULE_SIZE: usize = 1600;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuleKind {
    Hermite,
    Laguerre { nu: f64 },
}

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub kind: RuleKind,
    pub nodes: Vec<f64>,
    /// Plain weights; entries for far-out nodes underflow to zero.
    pub weights: Vec<f64>,
    pub log_weights: Vec<f64>,
    /// `w_i e^{x_i²}` (Hermite) or `w_i e^{t_i}` (Laguerre): weights for
    /// integrating against plain Lebesgue measure.
    pub scaled_weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

type RuleKey = (u8, usize, u64);

fn cache() -> &'static Mutex<HashMap<RuleKey, Arc<QuadratureRule>>> {
    static CACHE: OnceLock<Mutex<HashMap<RuleKey, Arc<QuadratureRule>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn cached(key: RuleKey, build: impl FnOnce() -> Result<QuadratureRule>) -> Result<Arc<QuadratureRule>> {
    if let Some(r) = cache().lock().expect("rule cache poisoned").get(&key) {
        return Ok(r.clone());
    }
    let rule = Arc::new(build()?);
    cache().lock().expect("rule cache poisoned").insert(key, rule.clone());
    Ok(rule)
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_RULE_SIZE {
        return domain(format!("rule size {n} outside 1..={MAX_RULE_SIZE}"));
    }
    Ok(())
}

/// Gauss–Hermite rule for the weight `e^{−x²}`.
pub fn gauss_hermite_rule(n: usize) -> Result<Arc<QuadratureRule>> {
    check_size(n)?;
    cached((0, n, 0), || build_hermite(n))
}

/// Generalized Gauss–Laguerre rule for the weight `t^ν e^{−t}` on `(0, ∞)`.
pub fn gauss_laguerre_rule(n: usize, nu: f64) -> Result<Arc<QuadratureRule>> {
    check_size(n)?;
    if !(nu > -1.0) || !nu.is_finite() {
        return domain(format!("Laguerre rule parameter ν = {nu} must exceed −1"));
    }
    cached((1, n, nu.to_bits()), || build_laguerre(n, nu))
}

fn build_hermite(n: usize) -> Result<QuadratureRule> {
    let mut d = vec![0.0; n];
    let mut e: Vec<f64> = (1..=n).map(|k| if k < n { (k as f64 / 2.0).sqrt() } else { 0.0 }).collect();
    tridiagonal_eigenvalues(&mut d, &mut e)?;
    d.sort_by(f64::total_cmp);
    let nf = n as f64;
    for x in d.iter_mut() {
        for _ in 0..12 {
            let mut st = HermiteState::new(*x);
            st.advance_to(n);
            let deriv = (2.0 * nf).sqrt() * st.prev - *x * st.cur;
            let dx = st.cur / deriv;
            *x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
    }
    for i in 0..n / 2 {
        let m = 0.5 * (d[n - 1 - i] - d[i]);
        d[i] = -m;
        d[n - 1 - i] = m;
    }
    if n % 2 == 1 {
        d[n / 2] = 0.0;
    }
    let mut log_weights = Vec::with_capacity(n);
    let mut scaled = Vec::with_capacity(n);
    for &x in &d {
        let mut st = HermiteState::new(x);
        st.advance_to(n);
        let lh = st.prev.abs().ln() + st.log_scale;
        let lw = -x * x - nf.ln() - 2.0 * lh;
        log_weights.push(lw);
        scaled.push((lw + x * x).exp());
    }
    finish(RuleKind::Hermite, d, log_weights, scaled)
}

fn build_laguerre(n: usize, nu: f64) -> Result<QuadratureRule> {
    let mut d: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + nu + 1.0).collect();
    let mut e: Vec<f64> =
        (1..=n).map(|k| if k < n { (k as f64 * (k as f64 + nu)).sqrt() } else { 0.0 }).collect();
    tridiagonal_eigenvalues(&mut d, &mut e)?;
    d.sort_by(f64::total_cmp);
    let nf = n as f64;
    for t in d.iter_mut() {
        for _ in 0..12 {
            let mut st = LaguerreState::new(nu, *t);
            st.advance_to(n);
            let denom = nf * st.cur - (nf + nu) * st.prev;
            let dt = *t * st.cur / denom;
            let next = *t - dt;
            *t = if next > 0.0 { next } else { *t / 2.0 };
            if dt.abs() <= 1e-16 * t.abs() {
                break;
            }
        }
    }
    // Christoffel sum 1/Σ_k p_k(t)² over orthonormal p_k: insensitive to
    // residual node error, unlike the closed form through L_{n−1}(t).
    let norms: Vec<f64> = (0..n).map(|k| specfun::ln_gamma_ratio(k as f64 + 1.0, nu)).collect();
    let mut log_weights = Vec::with_capacity(n);
    let mut scaled = Vec::with_capacity(n);
    for &t in &d {
        let mut st = LaguerreState::new(nu, t);
        let mut acc = LogSum::new();
        for lk in &norms {
            acc.push(LogScaled::from_log(2.0 * (st.cur.abs().ln() + st.log_scale) - lk));
            st.step();
        }
        let lw = -acc.value().log_mag;
        log_weights.push(lw);
        scaled.push((lw + t).exp());
    }
    finish(RuleKind::Laguerre { nu }, d, log_weights, scaled)
}

fn finish(kind: RuleKind, nodes: Vec<f64>, log_weights: Vec<f64>, scaled: Vec<f64>) -> Result<QuadratureRule> {
    if nodes.windows(2).any(|w| !(w[1] > w[0])) || log_weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Numeric("quadrature rule construction produced degenerate nodes".into()));
    }
    let weights = log_weights.iter().map(|w| w.exp()).collect();
    Ok(QuadratureRule { kind, nodes, weights, log_weights, scaled_weights: scaled })
}

/// Eigenvalues of a symmetric tridiagonal matrix (implicit QL with Wilkinson
/// shifts). `e[i]` couples rows `i` and `i+1`; `e[n-1]` is ignored.
fn tridiagonal_eigenvalues(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 100 {
                return Err(Error::Numeric(format!("tridiagonal eigen-solver did not converge at row {l}")));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Tolerances for adaptive (node-doubling) quadrature.
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub initial: usize,
    pub max: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: 1e-13, rel_tol: 1e-12, initial: 200, max: MAX_RULE_SIZE }
    }
}

impl QuadOptions {
    pub fn with_initial(mut self, n: usize) -> Self {
        self.initial = n.clamp(1, self.max);
        self
    }
}

/// Evaluates `eval(n)` at `n, 2n, …` until two successive answers agree.
pub fn adaptive<F>(opts: QuadOptions, what: &str, mut eval: F) -> Result<Complex64>
where
    F: FnMut(usize) -> Result<Complex64>,
{
    let mut n = opts.initial.min(opts.max);
    let mut prev = eval(n)?;
    let mut est = f64::INFINITY;
    while n < opts.max {
        n = (2 * n).min(opts.max);
        let cur = eval(n)?;
        est = (cur - prev).norm();
        if est <= opts.abs_tol + opts.rel_tol * cur.norm() {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Accuracy { what: what.to_string(), estimate: est })
}

/// `∫ g(x) dx` for `g` decaying like `e^{−a(x−c)²/2}`, with an `n`-point
/// Gauss–Hermite rule mapped onto that Gaussian.
pub fn gauss_integral<G: Fn(f64) -> Complex64>(c: f64, a: f64, n: usize, g: G) -> Result<Complex64> {
    let rule = gauss_hermite_rule(n)?;
    let sigma = (2.0 / a).sqrt();
    let mut acc = Complex64::new(0.0, 0.0);
    for (u, w) in rule.nodes.iter().zip(&rule.scaled_weights) {
        if *w == 0.0 || !w.is_finite() {
            continue;
        }
        acc += g(c + sigma * u) * *w;
    }
    Ok(acc * sigma)
}

/// Trapezoidal rule on a sample grid.
pub fn trapezoid(grid: &[f64], values: impl Fn(usize) -> Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 1..grid.len() {
        acc += (values(i) + values(i - 1)) * (0.5 * (grid[i] - grid[i - 1]));
    }
    acc
}

/// One-dimensional Fourier transform of a factor, `(2π)^{−1/2}∫ g(x)e^{−ixξ}dx`.
pub fn factor_fourier_num(f: &Factor, xi: f64, opts: QuadOptions) -> Result<Complex64> {
    let norm = (2.0 * PI).sqrt().recip();
    if let Factor::Sampled { grid, values } = f {
        return Ok(trapezoid(grid, |i| values[i] * Complex64::from_polar(1.0, -xi * grid[i])) * norm);
    }
    let a = f.decay();
    let v = adaptive(opts, "Fourier quadrature", |n| {
        gauss_integral(0.0, a, n, |x| f.eval(x) * Complex64::from_polar(1.0, -xi * x))
    })?;
    Ok(v * norm)
}

/// Numerical Fourier transform `F f(ξ) = (2π)^{−d/2}∫ f(x) e^{−i x·ξ} dx`,
/// tensorized over the separable terms of `f`.
pub fn fourier_transform_num(f: &TestFunction, xi: &[f64]) -> Result<Complex64> {
    fourier_transform_num_with(f, xi, QuadOptions::default())
}

pub fn fourier_transform_num_with(f: &TestFunction, xi: &[f64], opts: QuadOptions) -> Result<Complex64> {
    if xi.len() != f.dim() {
        return domain(format!("frequency has dimension {} but f has {}", xi.len(), f.dim()));
    }
    let mut total = Complex64::new(0.0, 0.0);
    for term in f.separable_terms() {
        let mut prod = term.coeff;
        for (fac, &x) in term.factors.iter().zip(xi) {
            prod *= factor_fourier_num(fac, x, opts)?;
        }
        total += prod;
    }
    Ok(total)
}

/// Fourier transform using the closed form when `f` has one.
pub fn fourier_transform(f: &TestFunction, xi: &[f64]) -> Result<Complex64> {
    match f.fourier() {
        Ok(g) => g.eval(xi),
        Err(_) => fourier_transform_num(f, xi),
    }
}

/// Hankel transform `H_ν f(s) = ∫₀^∞ f(r) J_ν(sr)/(sr)^ν r^{2ν+1} dr` of a
/// radial profile decaying like `e^{−a r²/2}`.
///
/// With `u = a r²/2` the measure becomes `(2/a)^ν a^{−1} u^ν du`, which a
/// generalized Gauss–Laguerre rule of parameter ν integrates against `e^{−u}`.
pub fn hankel_transform_num<F: Fn(f64) -> f64>(f: F, decay: f64, nu: f64, s: f64) -> Result<f64> {
    hankel_transform_num_with(f, decay, nu, s, QuadOptions::default())
}

pub fn hankel_transform_num_with<F: Fn(f64) -> f64>(
    f: F,
    decay: f64,
    nu: f64,
    s: f64,
    opts: QuadOptions,
) -> Result<f64> {
    if !(nu > -0.5) {
        return domain(format!("Hankel order ν = {nu} must exceed −1/2"));
    }
    if !(s >= 0.0) || !s.is_finite() {
        return domain(format!("Hankel variable s = {s} must be a finite value ≥ 0"));
    }
    if !(decay > 0.0) {
        return domain("decay hint must be positive");
    }
    let kernel_nu = nu.max(0.0);
    let pref = (2.0 / decay).powf(nu) / decay * 2f64.powf(-nu);
    let v = adaptive(opts, "Hankel quadrature", |n| {
        let rule = gauss_laguerre_rule(n, nu)?;
        let mut acc = 0.0;
        for (u, w) in rule.nodes.iter().zip(&rule.scaled_weights) {
            if !w.is_finite() || *w == 0.0 {
                continue;
            }
            let r = (2.0 * u / decay).sqrt();
            let fr = f(r);
            if fr == 0.0 {
                continue;
            }
            let k = hankel_kernel(kernel_nu, nu, s * r)?;
            acc += w * fr * k;
        }
        Ok(Complex64::new(acc * pref, 0.0))
    })?;
    Ok(v.re)
}

/// `Λ_ν(x) = J_ν(x)/(x/2)^ν` for real `x`; orders in `(−1/2, 0)` use the
/// same power series.
fn hankel_kernel(kernel_nu: f64, nu: f64, x: f64) -> Result<f64> {
    if nu >= 0.0 {
        return Ok(specfun::bessel_j_norm(kernel_nu, Complex64::new(x, 0.0))?.re);
    }
    let t = -x * x / 4.0;
    let mut term = (-specfun::ln_gamma(nu + 1.0)).exp();
    let mut sum = term;
    let mut k = 0.0;
    while k < 500.0 {
        term *= t / ((k + 1.0) * (k + nu + 1.0));
        sum += term;
        k += 1.0;
        if k > t.abs() && term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    Ok(sum)
}

/// Hankel transform of a one-dimensional real-valued `TestFunction`
/// restricted to `ℝ⁺`.
pub fn hankel_transform_test(f: &TestFunction, nu: f64, s: f64) -> Result<f64> {
    if f.dim() != 1 {
        return domain("Hankel transforms act on one-dimensional radial profiles");
    }
    hankel_transform_num(|r| f.eval(&[r]).map(|v| v.re).unwrap_or(f64::NAN), f.decay_rate(), nu, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_and_two_point_hermite_rules() {
        let r = gauss_hermite_rule(1).unwrap();
        assert_eq!(r.nodes, vec![0.0]);
        assert!((r.weights[0] - PI.sqrt()).abs() < 1e-15);
        let r = gauss_hermite_rule(2).unwrap();
        assert!((r.nodes[1] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((r.nodes[0] + 0.5f64.sqrt()).abs() < 1e-15);
        for w in &r.weights {
            assert!((w - PI.sqrt() / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn hermite_moments() {
        let r = gauss_hermite_rule(12).unwrap();
        let m4: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(4)).sum();
        assert!((m4 - 0.75 * PI.sqrt()).abs() < 1e-13);
        for k in 0..=8 {
            let mk: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(k)).sum();
            let exact = if k % 2 == 1 {
                0.0
            } else {
                specfun::gamma((k as f64 + 1.0) / 2.0)
            };
            assert!((mk - exact).abs() < 1e-13 * exact.max(1.0), "k={k}");
        }
    }

    #[test]
    fn rule_size_limits() {
        assert!(gauss_hermite_rule(0).is_err());
        assert!(gauss_hermite_rule(MAX_RULE_SIZE + 1).is_err());
        assert!(gauss_laguerre_rule(4, -1.0).is_err());
    }

    #[test]
    fn large_rules_are_valid() {
        for n in [200usize, 1024, 1600] {
            let r = gauss_hermite_rule(n).unwrap();
            assert!(r.nodes.windows(2).all(|w| w[1] > w[0]));
            assert!(r.log_weights.iter().all(|w| w.is_finite()));
            let s: f64 = r.weights.iter().sum();
            assert!((s / PI.sqrt() - 1.0).abs() < 1e-12, "n={n}: {s}");
            for i in 0..n {
                assert_eq!(r.nodes[i], -r.nodes[n - 1 - i]);
            }
        }
    }

    #[test]
    fn laguerre_rules() {
        let r = gauss_laguerre_rule(1, 0.0).unwrap();
        assert!((r.nodes[0] - 1.0).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15);
        let r = gauss_laguerre_rule(16, 0.5).unwrap();
        let s: f64 = r.weights.iter().sum();
        assert!((s / specfun::gamma(1.5) - 1.0).abs() < 1e-12);
        for n in [1usize, 3, 7] {
            let r = gauss_laguerre_rule(n, 0.0).unwrap();
            let m: f64 = r.nodes.iter().zip(&r.weights).map(|(t, w)| w * t).sum();
            assert!((m - 1.0).abs() < 1e-13);
        }
        for n in [200usize, 800, 1600] {
            for nu in [0.0, 0.5, 1.5] {
                let r = gauss_laguerre_rule(n, nu).unwrap();
                let s: f64 = r.weights.iter().sum();
                assert!((s / specfun::gamma(nu + 1.0) - 1.0).abs() < 1e-12, "n={n} nu={nu}: {s}");
                assert!(r.nodes.windows(2).all(|w| w[1] > w[0]));
            }
        }
    }

    #[test]
    fn gaussian_fourier_fixed_point() {
        let f = TestFunction::gaussian(1, 1.0);
        for &xi in &[0.0, 0.7, 3.0] {
            let v = fourier_transform_num(&f, &[xi]).unwrap();
            assert!((v - Complex64::new((-xi * xi / 2.0f64).exp(), 0.0)).norm() < 1e-12);
        }
        let g = TestFunction::gaussian(1, 2.0);
        for &xi in &[0.0, 1.5, 4.0] {
            let v = fourier_transform_num(&g, &[xi]).unwrap();
            let want = 2f64.powf(-0.5) * (-xi * xi / 4.0f64).exp();
            assert!((v.re - want).abs() < 1e-12 && v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn hermite_eigenfunction_under_fourier() {
        let f = TestFunction::hermite(&[3]).unwrap();
        for &xi in &[0.5, 1.0, 2.0] {
            let v = fourier_transform_num(&f, &[xi]).unwrap();
            let want = Complex64::new(0.0, 1.0) * specfun::hermite_log(3, xi).unwrap().to_f64();
            assert!((v - want).norm() < 1e-12, "{v} {want}");
        }
    }

    #[test]
    fn unresolvable_oscillation_is_reported() {
        let f = TestFunction::gaussian(1, 0.01);
        let opts = QuadOptions { max: 400, ..QuadOptions::default() };
        match fourier_transform_num_with(&f, &[80.0], opts) {
            Err(Error::Accuracy { estimate, .. }) => assert!(estimate.is_finite()),
            other => panic!("expected accuracy error, got {other:?}"),
        }
    }

    #[test]
    fn gaussian_hankel_is_self_reciprocal() {
        for &nu in &[0.0, 0.5, 1.5] {
            for &s in &[0.0, 0.8, 2.5] {
                let v = hankel_transform_num(|r| (-r * r / 2.0).exp(), 1.0, nu, s).unwrap();
                assert!((v - (-s * s / 2.0f64).exp()).abs() < 1e-12, "nu={nu} s={s}: {v}");
            }
        }
    }

    #[test]
    fn hankel_linearity() {
        let f = |r: f64| (-r * r / 2.0).exp();
        let g = |r: f64| r * r * (-1.5 * r * r / 2.0).exp();
        for &s in &[0.3, 1.1, 2.0, 3.3, 5.0] {
            let lhs = hankel_transform_num(|r| 2.0 * f(r) - 0.7 * g(r), 1.0, 0.5, s).unwrap();
            let rhs = 2.0 * hankel_transform_num(f, 1.0, 0.5, s).unwrap()
                - 0.7 * hankel_transform_num(g, 1.0, 0.5, s).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
