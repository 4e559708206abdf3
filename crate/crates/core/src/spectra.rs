//! Admissible test functions, Hermite and Laguerre expansion coefficients,
//! series synthesis and Hermite projection norms.

use crate::error::{domain, Error, Result};
use crate::logscaled::{LogComplex, LogComplexSum, LogScaled, LogSum};
use crate::quadrature::{self, QuadOptions, MAX_RULE_SIZE};
use crate::report::fmt_f64;
use crate::specfun::{self, HermiteState};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::sync::Arc;

const LN_PI: f64 = 1.144_729_885_849_400_2;
pub const MAX_DEGREE: usize = 256;
pub const MAX_DIM: usize = 3;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r as usize
}

/// Number of multi-indices in `ℕ^m` with `|α| = r`.
fn compositions(r: usize, m: usize) -> usize {
    if m == 0 {
        return usize::from(r == 0);
    }
    binom(r + m - 1, m - 1)
}

/// Number of multi-indices in `ℕ^d` with `|α| < g`.
fn degree_offset(d: usize, g: usize) -> usize {
    binom(g + d - 1, d)
}

/// Position of `α` in graded-lexicographic order (ascending lex within each
/// total degree).
pub fn multi_index_position(alpha: &[usize]) -> usize {
    let d = alpha.len();
    let g: usize = alpha.iter().sum();
    let mut rank = degree_offset(d, g);
    let mut rem = g;
    for (j, &a) in alpha.iter().enumerate().take(d.saturating_sub(1)) {
        let m = d - j - 1;
        for b in 0..a {
            rank += compositions(rem - b, m);
        }
        rem -= a;
    }
    rank
}

/// Inverse of [`multi_index_position`].
pub fn multi_index_at(d: usize, idx: usize) -> Vec<usize> {
    let mut g = 0;
    while degree_offset(d, g + 1) <= idx {
        g += 1;
    }
    let mut r = idx - degree_offset(d, g);
    let mut alpha = vec![0; d];
    let mut rem = g;
    for j in 0..d - 1 {
        let m = d - j - 1;
        let mut b = 0;
        loop {
            let cnt = compositions(rem - b, m);
            if r < cnt {
                break;
            }
            r -= cnt;
            b += 1;
        }
        alpha[j] = b;
        rem -= b;
    }
    alpha[d - 1] = rem;
    alpha
}

/// Expansion coefficients indexed by multi-index in graded-lexicographic
/// order, stored in polar form so that phase evolution is exact in magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector {
    dim: usize,
    max_degree: usize,
    log_abs: Vec<f64>,
    arg: Vec<f64>,
    /// Log of an upper bound for `Σ_{|α| > N} |c_α|`, when known.
    pub tail_log: Option<f64>,
}

impl CoeffVector {
    pub fn zeros(dim: usize, max_degree: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return domain(format!("dimension {dim} outside 1..={MAX_DIM}"));
        }
        if max_degree > 4 * MAX_DEGREE {
            return domain(format!("degree {max_degree} too large"));
        }
        let n = binom(max_degree + dim, dim);
        Ok(CoeffVector {
            dim,
            max_degree,
            log_abs: vec![f64::NEG_INFINITY; n],
            arg: vec![0.0; n],
            tail_log: None,
        })
    }

    pub fn unit(alpha: &[usize]) -> Result<Self> {
        let n: usize = alpha.iter().sum();
        let mut v = Self::zeros(alpha.len(), n)?;
        v.set(alpha, c(1.0, 0.0))?;
        v.tail_log = Some(f64::NEG_INFINITY);
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn len(&self) -> usize {
        self.log_abs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_abs.is_empty()
    }

    pub fn index_of(&self, alpha: &[usize]) -> Option<usize> {
        if alpha.len() != self.dim || alpha.iter().sum::<usize>() > self.max_degree {
            return None;
        }
        Some(multi_index_position(alpha))
    }

    pub fn alpha_at(&self, idx: usize) -> Vec<usize> {
        multi_index_at(self.dim, idx)
    }

    pub fn log_abs_at(&self, idx: usize) -> f64 {
        self.log_abs[idx]
    }

    pub fn arg_at(&self, idx: usize) -> f64 {
        self.arg[idx]
    }

    pub fn get(&self, alpha: &[usize]) -> Complex64 {
        self.get_log(alpha).to_c64()
    }

    pub fn get_log(&self, alpha: &[usize]) -> LogComplex {
        match self.index_of(alpha) {
            Some(i) => LogComplex::from_polar(self.log_abs[i], self.arg[i]),
            None => LogComplex::ZERO,
        }
    }

    pub fn set(&mut self, alpha: &[usize], v: Complex64) -> Result<()> {
        let i = self
            .index_of(alpha)
            .ok_or_else(|| Error::Domain(format!("index {alpha:?} outside degree {}", self.max_degree)))?;
        self.set_polar(i, v.norm().ln(), if v == c(0.0, 0.0) { 0.0 } else { v.arg() });
        Ok(())
    }

    pub fn set_polar(&mut self, idx: usize, log_abs: f64, arg: f64) {
        self.log_abs[idx] = log_abs;
        self.arg[idx] = if log_abs == f64::NEG_INFINITY { 0.0 } else { arg };
    }

    pub fn set_log(&mut self, idx: usize, v: LogComplex) {
        self.set_polar(idx, v.log_abs(), v.arg());
    }

    /// Adds `f(α)` to the phase of every coefficient.
    pub fn rotate(&mut self, f: impl Fn(&[usize]) -> f64) {
        for i in 0..self.len() {
            if self.log_abs[i] > f64::NEG_INFINITY {
                let a = self.alpha_at(i);
                self.arg[i] += f(&a);
            }
        }
    }

    /// `(α, log|c_α|, arg c_α)` for every stored entry.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, f64, f64)> + '_ {
        (0..self.len()).map(move |i| (self.alpha_at(i), self.log_abs[i], self.arg[i]))
    }

    pub fn log_norm_sq(&self) -> f64 {
        let mut s = LogSum::new();
        for &l in &self.log_abs {
            s.push(LogScaled::from_log(2.0 * l));
        }
        s.value().log_mag
    }

    pub fn norm_sq(&self) -> f64 {
        self.log_norm_sq().exp()
    }

    /// `log Σ_{|α| = k} |c_α|²`.
    pub fn degree_log_norm_sq(&self, k: usize) -> f64 {
        if k > self.max_degree {
            return f64::NEG_INFINITY;
        }
        let lo = degree_offset(self.dim, k);
        let hi = degree_offset(self.dim, k + 1);
        let mut s = LogSum::new();
        for &l in &self.log_abs[lo..hi] {
            s.push(LogScaled::from_log(2.0 * l));
        }
        s.value().log_mag
    }

    pub fn truncate(&self, n: usize) -> CoeffVector {
        if n >= self.max_degree {
            return self.clone();
        }
        let keep = binom(n + self.dim, self.dim);
        let mut tail = LogSum::new();
        for &l in &self.log_abs[keep..] {
            tail.push(LogScaled::from_log(l));
        }
        let mut t = tail.value().log_mag;
        if let Some(old) = self.tail_log {
            t = crate::logscaled::log_add_exp(t, old);
        }
        CoeffVector {
            dim: self.dim,
            max_degree: n,
            log_abs: self.log_abs[..keep].to_vec(),
            arg: self.arg[..keep].to_vec(),
            tail_log: Some(t),
        }
    }

    /// CSV with columns `alpha_1..alpha_d, re, im`; zero entries are omitted.
    pub fn to_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        let mut header: Vec<String> = (1..=self.dim).map(|j| format!("alpha_{j}")).collect();
        header.push("re".into());
        header.push("im".into());
        wr.write_record(&header)?;
        for (alpha, l, a) in self.iter() {
            if l == f64::NEG_INFINITY {
                continue;
            }
            let v = LogComplex::from_polar(l, a).to_c64();
            let mut row: Vec<String> = alpha.iter().map(|x| x.to_string()).collect();
            row.push(fmt_f64(v.re));
            row.push(fmt_f64(v.im));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn from_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let headers = rd.headers()?.clone();
        let dim = headers.len().checked_sub(2).filter(|&d| d >= 1).ok_or_else(|| Error::Parse("too few columns".into()))?;
        if headers.iter().take(dim).enumerate().any(|(j, h)| h != format!("alpha_{}", j + 1))
            || &headers[dim] != "re"
            || &headers[dim + 1] != "im"
        {
            return Err(Error::Parse("header must be alpha_1..alpha_d,re,im".into()));
        }
        let mut entries = Vec::new();
        let mut nmax = 0;
        for rec in rd.records() {
            let rec = rec?;
            let alpha: Vec<usize> = rec
                .iter()
                .take(dim)
                .map(|s| s.trim().parse::<usize>().map_err(|e| Error::Parse(format!("{s}: {e}"))))
                .collect::<Result<_>>()?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{s}: {e}")));
            let v = c(parse(&rec[dim])?, parse(&rec[dim + 1])?);
            nmax = nmax.max(alpha.iter().sum());
            entries.push((alpha, v));
        }
        let mut cv = CoeffVector::zeros(dim, nmax)?;
        for (a, v) in entries {
            cv.set(&a, v)?;
        }
        Ok(cv)
    }
}

/// One-dimensional factor of a separable test-function term.
#[derive(Debug, Clone)]
pub enum Factor {
    /// `x^k e^{−a x²/2}`.
    GaussMono { a: f64, k: u32 },
    /// `h_n(x)`.
    Hermite { n: usize },
    /// `Σ_n e^{−y n^{1/(2s)}} e^{i·step·n} h_n(x)`.
    CoeffRule { s: f64, y: f64, step: f64 },
    /// Piecewise-linear samples, zero outside the grid.
    Sampled { grid: Arc<Vec<f64>>, values: Arc<Vec<Complex64>> },
}

/// `coeff · Π_j factors[j](x_j)`.
#[derive(Debug, Clone)]
pub struct SepTerm {
    pub coeff: Complex64,
    pub factors: Vec<Factor>,
}

/// Evaluates `Σ_n e^{−y n^p} e^{i step n} h_n(x)`, truncated once the tail
/// majorant `Σ_{m>n} e^{−y m^p} π^{−1/4}` drops below `1e−14` of the partial
/// sum. Returns the value and the log of the final tail bound.
pub fn coeff_rule_series(s: f64, y: f64, step: f64, x: f64) -> (LogComplex, f64) {
    let p = 1.0 / (2.0 * s);
    let mut st = HermiteState::new(x);
    let mut acc = LogComplexSum::new();
    let mut tail;
    loop {
        let n = st.n as f64;
        let h = st.value();
        if !h.is_zero() {
            let arg = step * n + if h.sign < 0 { PI } else { 0.0 };
            acc.push(LogComplex::from_polar(-y * n.powf(p) + h.log_mag, arg));
        }
        tail = coeff_rule_tail_log(y, p, st.n) - 0.25 * LN_PI;
        let partial = acc.value().log_abs();
        if st.n >= 1 && tail < partial + (1e-14f64).ln() {
            break;
        }
        if st.n >= 8192 {
            break;
        }
        st.step();
    }
    (acc.value(), tail)
}

/// `log` of an upper bound for `Σ_{m>n} e^{−y m^p}` with `p ≥ 1`.
pub fn coeff_rule_tail_log(y: f64, p: f64, n: usize) -> f64 {
    let m = (n + 1) as f64;
    let ratio_log = -y * p * m.powf(p - 1.0);
    -y * m.powf(p) - (-ratio_log.exp_m1()).ln()
}

impl Factor {
    pub fn decay(&self) -> f64 {
        match self {
            Factor::GaussMono { a, .. } => *a,
            _ => 1.0,
        }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        match self {
            Factor::GaussMono { a, k } => c(x.powi(*k as i32) * (-a * x * x / 2.0).exp(), 0.0),
            Factor::Sampled { grid, values } => interpolate(grid, values, x),
            _ => self.eval_log(x).to_c64(),
        }
    }

    pub fn eval_log(&self, x: f64) -> LogComplex {
        match self {
            Factor::GaussMono { a, k } => {
                let mag = if *k == 0 { 0.0 } else { *k as f64 * x.abs().ln() };
                let neg = x < 0.0 && k % 2 == 1;
                let v = LogScaled::new(if neg { -1 } else { 1 }, mag - a * x * x / 2.0);
                LogComplex::new(v, LogScaled::ZERO)
            }
            Factor::Hermite { n } => {
                let mut st = HermiteState::new(x);
                st.advance_to(*n);
                LogComplex::new(st.value(), LogScaled::ZERO)
            }
            Factor::CoeffRule { s, y, step } => coeff_rule_series(*s, *y, *step, x).0,
            Factor::Sampled { grid, values } => LogComplex::from_c64(interpolate(grid, values, x)),
        }
    }

    /// Closed-form Hermite coefficients `⟨g, h_n⟩`, `n ≤ nmax`, and the log of
    /// a bound on `Σ_{n>nmax} |⟨g, h_n⟩|` together with `log Σ_n |⟨g, h_n⟩|`.
    fn coeffs_exact(&self, nmax: usize) -> Option<(Vec<LogComplex>, f64, f64)> {
        match self {
            Factor::Hermite { n } => {
                let mut v = vec![LogComplex::ZERO; nmax + 1];
                if *n <= nmax {
                    v[*n] = LogComplex::from_polar(0.0, 0.0);
                }
                let tail = if *n <= nmax { f64::NEG_INFINITY } else { 0.0 };
                Some((v, tail, 0.0))
            }
            Factor::CoeffRule { s, y, step } => {
                let p = 1.0 / (2.0 * s);
                let v = (0..=nmax).map(|n| LogComplex::from_polar(-y * (n as f64).powf(p), step * n as f64)).collect();
                let tail = coeff_rule_tail_log(*y, p, nmax);
                let total = crate::logscaled::log_add_exp(0.0, coeff_rule_tail_log(*y, p, 0));
                Some((v, tail, total))
            }
            Factor::GaussMono { a, k } => {
                let extra = 2 * nmax + 64;
                let full = gauss_mono_coeffs(*a, *k as usize, extra);
                let v = full[..=nmax].iter().map(|x| LogComplex::new(*x, LogScaled::ZERO)).collect();
                let mut tail = LogSum::new();
                let mut total = LogSum::new();
                for (n, x) in full.iter().enumerate() {
                    total.push(x.abs());
                    if n > nmax {
                        tail.push(x.abs());
                    }
                }
                // geometric remainder beyond the computed range
                let mu = ((1.0 - a) / (1.0 + a)).abs();
                let last = full[extra - 1].abs().log_mag.max(full[extra].abs().log_mag);
                let rem = if mu < 1.0 && last.is_finite() {
                    last + 2.0 * (extra as f64).ln() - (1.0 - mu.sqrt()).ln()
                } else {
                    f64::NEG_INFINITY
                };
                let t = crate::logscaled::log_add_exp(tail.value().log_mag, rem);
                let tot = crate::logscaled::log_add_exp(total.value().log_mag, rem);
                Some((v, t, tot))
            }
            Factor::Sampled { .. } => None,
        }
    }

    /// Hermite coefficients by Gauss–Hermite quadrature of order at least
    /// `2 nmax + 32`, doubled until successive results agree to `1e−9`.
    pub fn coeffs_quad(&self, nmax: usize) -> Result<Vec<Complex64>> {
        if let Factor::Sampled { grid, values } = self {
            let mut out = vec![c(0.0, 0.0); nmax + 1];
            let tables: Vec<Vec<f64>> =
                grid.iter().map(|&x| specfun::hermite_table(nmax, x)).collect::<Result<_>>()?;
            for (n, o) in out.iter_mut().enumerate() {
                *o = quadrature::trapezoid(grid, |i| values[i] * tables[i][n]);
            }
            return Ok(out);
        }
        let sigma = (2.0 / (self.decay() + 1.0)).sqrt();
        let eval = |order: usize| -> Result<Vec<Complex64>> {
            let rule = quadrature::gauss_hermite_rule(order)?;
            let mut out = vec![c(0.0, 0.0); nmax + 1];
            for (u, w) in rule.nodes.iter().zip(&rule.scaled_weights) {
                if *w == 0.0 {
                    continue;
                }
                let x = sigma * u;
                let g = self.eval(x) * (*w * sigma);
                if g == c(0.0, 0.0) {
                    continue;
                }
                let mut st = HermiteState::new(x);
                for o in out.iter_mut() {
                    *o += g * st.value().to_f64();
                    st.step();
                }
            }
            Ok(out)
        };
        let mut order = (2 * nmax + 32).min(MAX_RULE_SIZE);
        let mut prev = eval(order)?;
        let mut est = f64::INFINITY;
        while order < MAX_RULE_SIZE {
            order = (2 * order).min(MAX_RULE_SIZE);
            let cur = eval(order)?;
            let scale = cur.iter().map(|v| v.norm()).fold(0.0, f64::max);
            est = cur.iter().zip(&prev).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            if est <= 1e-9 * scale.max(1e-300) || est < 1e-15 {
                return Ok(cur);
            }
            prev = cur;
        }
        Err(Error::Accuracy { what: "Hermite coefficient quadrature".into(), estimate: est })
    }
}

fn interpolate(grid: &[f64], values: &[Complex64], x: f64) -> Complex64 {
    let n = grid.len();
    if !(x >= grid[0] && x <= grid[n - 1]) {
        return c(0.0, 0.0);
    }
    let i = grid.partition_point(|&g| g <= x).clamp(1, n - 1);
    let t = (x - grid[i - 1]) / (grid[i] - grid[i - 1]);
    values[i - 1] * (1.0 - t) + values[i] * t
}

/// Log-domain Hermite coefficients of `e^{−a x²/2}` for `n ≤ nmax`.
///
/// Only even degrees are nonzero:
/// `g_{2m} = π^{1/4} (2/(1+a))^{1/2} √((2m)!) / (2^m m!) · μ^m`, `μ = (1−a)/(1+a)`.
pub fn gaussian_hermite_coeffs(a: f64, nmax: usize) -> Vec<LogScaled> {
    let mu = (1.0 - a) / (1.0 + a);
    let base = 0.25 * LN_PI + 0.5 * (2.0 / (1.0 + a)).ln();
    (0..=nmax)
        .map(|n| {
            if n % 2 == 1 {
                return LogScaled::ZERO;
            }
            let m = (n / 2) as f64;
            if m > 0.0 && mu == 0.0 {
                return LogScaled::ZERO;
            }
            let lm = if m == 0.0 { 0.0 } else { m * mu.abs().ln() };
            let l = base + 0.5 * specfun::ln_gamma(2.0 * m + 1.0) - m * std::f64::consts::LN_2
                - specfun::ln_gamma(m + 1.0)
                + lm;
            let sign = if mu < 0.0 && (n / 2) % 2 == 1 { -1 } else { 1 };
            LogScaled::new(sign, l)
        })
        .collect()
}

/// Hermite coefficients of `x^k e^{−a x²/2}` through the position operator
/// `(x c)_n = √(n/2) c_{n−1} + √((n+1)/2) c_{n+1}`.
fn gauss_mono_coeffs(a: f64, k: usize, nmax: usize) -> Vec<LogScaled> {
    let mut v = gaussian_hermite_coeffs(a, nmax + k);
    for _ in 0..k {
        let len = v.len() - 1;
        let mut next = Vec::with_capacity(len);
        for n in 0..len {
            let lo = if n > 0 { v[n - 1].scale_exp(0.5 * (n as f64 / 2.0).ln()) } else { LogScaled::ZERO };
            let hi = v[n + 1].scale_exp(0.5 * ((n as f64 + 1.0) / 2.0).ln());
            next.push(lo.add(hi));
        }
        v = next;
    }
    v
}

/// A symbolic admissible test function on `ℝ^d`.
#[derive(Debug, Clone)]
pub enum TestFunction {
    /// `e^{−a|x|²/2} Σ_t coeff_t x^{exps_t}`.
    GaussPoly { dim: usize, a: f64, terms: Vec<(Vec<u32>, Complex64)> },
    /// Finite Hermite series.
    HermiteSeries(CoeffVector),
    /// Coefficients `e^{−y Σ_j α_j^{1/(2s)}} e^{i(phase + phase_step·|α|)}`.
    CoeffRule { dim: usize, s: f64, y: f64, phase: f64, phase_step: f64 },
    /// Samples on an increasing one-dimensional grid.
    Sampled { grid: Arc<Vec<f64>>, values: Arc<Vec<Complex64>> },
}

impl TestFunction {
    pub fn gaussian(dim: usize, a: f64) -> Self {
        TestFunction::GaussPoly { dim, a, terms: vec![(vec![0; dim], c(1.0, 0.0))] }
    }

    pub fn gauss_poly(dim: usize, a: f64, terms: Vec<(Vec<u32>, Complex64)>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return domain(format!("dimension {dim} outside 1..={MAX_DIM}"));
        }
        if !(a > 0.0) || !a.is_finite() {
            return domain(format!("Gaussian decay rate a = {a} must be positive"));
        }
        if terms.iter().any(|(e, v)| e.len() != dim || !v.re.is_finite() || !v.im.is_finite()) {
            return domain("polynomial term dimension mismatch or non-finite coefficient");
        }
        Ok(TestFunction::GaussPoly { dim, a, terms })
    }

    /// `e^{−a x²/2} Σ_k p_k x^k` in one dimension.
    pub fn gauss_poly_1d(a: f64, poly: &[f64]) -> Result<Self> {
        let terms = poly
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != 0.0)
            .map(|(k, &p)| (vec![k as u32], c(p, 0.0)))
            .collect();
        Self::gauss_poly(1, a, terms)
    }

    pub fn hermite(alpha: &[usize]) -> Result<Self> {
        Ok(TestFunction::HermiteSeries(CoeffVector::unit(alpha)?))
    }

    pub fn coeff_rule(dim: usize, s: f64, y: f64) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return domain(format!("dimension {dim} outside 1..={MAX_DIM}"));
        }
        if !(s > 0.0 && s <= 0.5) {
            return domain(format!("coefficient rule needs 0 < s ≤ 1/2, got {s}"));
        }
        if !(y > 0.0) || !y.is_finite() {
            return domain(format!("coefficient rule needs y > 0, got {y}"));
        }
        Ok(TestFunction::CoeffRule { dim, s, y, phase: 0.0, phase_step: 0.0 })
    }

    pub fn sampled(grid: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return domain("sampled function needs ≥ 2 grid points and matching values");
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|g| !g.is_finite()) {
            return domain("sample grid must be finite and strictly increasing");
        }
        Ok(TestFunction::Sampled { grid: Arc::new(grid), values: Arc::new(values) })
    }

    pub fn dim(&self) -> usize {
        match self {
            TestFunction::GaussPoly { dim, .. } | TestFunction::CoeffRule { dim, .. } => *dim,
            TestFunction::HermiteSeries(c) => c.dim(),
            TestFunction::Sampled { .. } => 1,
        }
    }

    /// Gaussian decay rate used to place quadrature nodes.
    pub fn decay_rate(&self) -> f64 {
        match self {
            TestFunction::GaussPoly { a, .. } => *a,
            _ => 1.0,
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return domain(format!("point has dimension {} but f has {}", x.len(), self.dim()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return domain("non-finite evaluation point");
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<Complex64> {
        Ok(self.eval_log(x)?.to_c64())
    }

    pub fn eval_log(&self, x: &[f64]) -> Result<LogComplex> {
        self.check_point(x)?;
        match self {
            TestFunction::GaussPoly { a, terms, .. } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let mut acc = LogComplexSum::new();
                for (e, k) in terms {
                    let mut m = LogScaled::ONE;
                    for (xj, ej) in x.iter().zip(e) {
                        if *ej > 0 {
                            m = m * LogScaled::from_f64(*xj).abs_pow(*ej as f64);
                            if *xj < 0.0 && ej % 2 == 1 {
                                m = -m;
                            }
                        }
                    }
                    acc.push(LogComplex::from_c64(*k).scale(m));
                }
                Ok(acc.value().scale(LogScaled::from_log(-a * r2 / 2.0)))
            }
            TestFunction::HermiteSeries(cv) => Ok(synthesize(cv, x)?.value),
            TestFunction::CoeffRule { .. } | TestFunction::Sampled { .. } => {
                let mut acc = LogComplexSum::new();
                for t in self.separable_terms() {
                    let mut v = LogComplex::from_c64(t.coeff);
                    for (f, xj) in t.factors.iter().zip(x) {
                        v = v.mul(f.eval_log(*xj));
                    }
                    acc.push(v);
                }
                Ok(acc.value())
            }
        }
    }

    /// Decomposition into separable terms `coeff · Π_j g_j(x_j)`.
    pub fn separable_terms(&self) -> Vec<SepTerm> {
        match self {
            TestFunction::GaussPoly { a, terms, .. } => terms
                .iter()
                .map(|(e, k)| SepTerm {
                    coeff: *k,
                    factors: e.iter().map(|&kj| Factor::GaussMono { a: *a, k: kj }).collect(),
                })
                .collect(),
            TestFunction::HermiteSeries(cv) => cv
                .iter()
                .filter(|(_, l, _)| *l > f64::NEG_INFINITY)
                .map(|(alpha, l, arg)| SepTerm {
                    coeff: Complex64::from_polar(l.exp(), arg),
                    factors: alpha.iter().map(|&n| Factor::Hermite { n }).collect(),
                })
                .collect(),
            TestFunction::CoeffRule { dim, s, y, phase, phase_step } => vec![SepTerm {
                coeff: Complex64::from_polar(1.0, *phase),
                factors: (0..*dim).map(|_| Factor::CoeffRule { s: *s, y: *y, step: *phase_step }).collect(),
            }],
            TestFunction::Sampled { grid, values } => vec![SepTerm {
                coeff: c(1.0, 0.0),
                factors: vec![Factor::Sampled { grid: grid.clone(), values: values.clone() }],
            }],
        }
    }

    /// Closed-form Fourier transform, available for every variant except
    /// sampled data.
    pub fn fourier(&self) -> Result<TestFunction> {
        match self {
            TestFunction::GaussPoly { dim, a, terms } => {
                let q = |k: u32| fourier_mono_poly(*a, k);
                let mut out: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
                let norm = a.powf(-0.5 * *dim as f64);
                for (e, k) in terms {
                    let mut acc: Vec<(Vec<u32>, Complex64)> = vec![(vec![], *k * norm)];
                    for &ej in e {
                        let poly = q(ej);
                        let mut next = Vec::new();
                        for (ex, v) in &acc {
                            for (p, pc) in poly.iter().enumerate() {
                                if *pc == c(0.0, 0.0) {
                                    continue;
                                }
                                let mut ne = ex.clone();
                                ne.push(p as u32);
                                next.push((ne, v * pc));
                            }
                        }
                        acc = next;
                    }
                    for (ex, v) in acc {
                        *out.entry(ex).or_insert(c(0.0, 0.0)) += v;
                    }
                }
                Ok(TestFunction::GaussPoly { dim: *dim, a: 1.0 / a, terms: out.into_iter().collect() })
            }
            TestFunction::HermiteSeries(cv) => {
                let mut v = cv.clone();
                v.rotate(|alpha| -(alpha.iter().sum::<usize>() as f64) * PI / 2.0);
                Ok(TestFunction::HermiteSeries(v))
            }
            TestFunction::CoeffRule { dim, s, y, phase, phase_step } => Ok(TestFunction::CoeffRule {
                dim: *dim,
                s: *s,
                y: *y,
                phase: *phase,
                phase_step: phase_step - PI / 2.0,
            }),
            TestFunction::Sampled { .. } => domain("sampled functions have no closed-form Fourier transform"),
        }
    }

    /// `x ↦ f(−x)`.
    pub fn reflect(&self) -> TestFunction {
        match self {
            TestFunction::GaussPoly { dim, a, terms } => TestFunction::GaussPoly {
                dim: *dim,
                a: *a,
                terms: terms
                    .iter()
                    .map(|(e, k)| (e.clone(), if e.iter().sum::<u32>() % 2 == 1 { -k } else { *k }))
                    .collect(),
            },
            TestFunction::HermiteSeries(cv) => {
                let mut v = cv.clone();
                v.rotate(|alpha| (alpha.iter().sum::<usize>() % 2) as f64 * PI);
                TestFunction::HermiteSeries(v)
            }
            TestFunction::CoeffRule { dim, s, y, phase, phase_step } => TestFunction::CoeffRule {
                dim: *dim,
                s: *s,
                y: *y,
                phase: *phase,
                phase_step: phase_step + PI,
            },
            TestFunction::Sampled { grid, values } => {
                let g: Vec<f64> = grid.iter().rev().map(|x| -x).collect();
                let v: Vec<Complex64> = values.iter().rev().copied().collect();
                TestFunction::Sampled { grid: Arc::new(g), values: Arc::new(v) }
            }
        }
    }

    /// `‖f‖₂²`, from coefficients or exact Gaussian quadrature.
    pub fn norm_sq(&self) -> Result<f64> {
        match self {
            TestFunction::HermiteSeries(cv) => Ok(cv.norm_sq()),
            TestFunction::CoeffRule { dim, s, y, .. } => {
                let p = 1.0 / (2.0 * s);
                let mut one = 0.0;
                for n in 0.. {
                    let t = (-2.0 * y * (n as f64).powf(p)).exp();
                    one += t;
                    if t < 1e-18 * one {
                        break;
                    }
                }
                Ok(one.powi(*dim as i32))
            }
            TestFunction::Sampled { grid, values } => Ok(quadrature::trapezoid(grid, |i| c(values[i].norm_sqr(), 0.0)).re),
            TestFunction::GaussPoly { .. } => {
                let terms = self.separable_terms();
                let mut total = c(0.0, 0.0);
                for t in &terms {
                    for u in &terms {
                        let mut prod = t.coeff * u.coeff.conj();
                        for (f, g) in t.factors.iter().zip(&u.factors) {
                            let (Factor::GaussMono { a, k: k1 }, Factor::GaussMono { k: k2, .. }) = (f, g) else {
                                unreachable!()
                            };
                            let n = ((k1 + k2) as usize / 2 + 2).max(8);
                            prod *= quadrature::gauss_integral(0.0, 2.0 * a, n, |x| c(x.powi((k1 + k2) as i32) * (-a * x * x).exp(), 0.0))?;
                        }
                        total += prod;
                    }
                }
                Ok(total.re)
            }
        }
    }
}

/// Polynomial `Q_k` with `F[x^k e^{−ax²/2}](ξ) = a^{−1/2} Q_k(ξ) e^{−ξ²/(2a)}`,
/// via `Q_k = i(Q_{k−1}′ − (ξ/a) Q_{k−1})`.
fn fourier_mono_poly(a: f64, k: u32) -> Vec<Complex64> {
    let mut q = vec![c(1.0, 0.0)];
    let i = c(0.0, 1.0);
    for _ in 0..k {
        let mut next = vec![c(0.0, 0.0); q.len() + 1];
        for (p, v) in q.iter().enumerate() {
            if p > 0 {
                next[p - 1] += i * *v * p as f64;
            }
            next[p + 1] -= i * *v / a;
        }
        q = next;
    }
    q
}

/// Hermite coefficients `⟨f, h_α⟩` for `|α| ≤ nmax`. Closed forms are used
/// for Gaussian-polynomial, Hermite-series and coefficient-rule functions
/// (they stay exact far below the double-precision floor); sampled data go
/// through quadrature.
pub fn hermite_coeffs(f: &TestFunction, nmax: usize) -> Result<CoeffVector> {
    if nmax > MAX_DEGREE {
        return domain(format!("degree {nmax} exceeds {MAX_DEGREE}"));
    }
    if let TestFunction::HermiteSeries(cv) = f {
        if nmax >= cv.max_degree() {
            let mut out = CoeffVector::zeros(cv.dim(), nmax)?;
            for (i, (alpha, l, a)) in cv.iter().enumerate() {
                let _ = i;
                let j = out.index_of(&alpha).expect("degree within range");
                out.set_polar(j, l, a);
            }
            out.tail_log = Some(cv.tail_log.unwrap_or(f64::NEG_INFINITY));
            return Ok(out);
        }
        return Ok(cv.truncate(nmax));
    }
    let d = f.dim();
    let mut out = CoeffVector::zeros(d, nmax)?;
    let mut tail = LogSum::new();
    let mut tail_known = true;
    let mut tables: Vec<(Complex64, Vec<Vec<LogComplex>>)> = Vec::new();
    for term in f.separable_terms() {
        let mut per = Vec::with_capacity(d);
        let mut tails = Vec::with_capacity(d);
        let mut totals = Vec::with_capacity(d);
        for fac in &term.factors {
            match fac.coeffs_exact(nmax) {
                Some((v, t, tot)) => {
                    // tail beyond nmax/d in this coordinate
                    let cut = nmax / d;
                    let mut tl = LogSum::new();
                    for x in &v[cut + 1..] {
                        tl.push(x.abs());
                    }
                    tails.push(crate::logscaled::log_add_exp(tl.value().log_mag, t));
                    totals.push(tot);
                    per.push(v);
                }
                None => {
                    tail_known = false;
                    per.push(fac.coeffs_quad(nmax)?.into_iter().map(LogComplex::from_c64).collect());
                }
            }
        }
        if tail_known {
            for j in 0..d {
                let mut l = term.coeff.norm().ln() + tails[j];
                for (i, t) in totals.iter().enumerate() {
                    if i != j {
                        l += t;
                    }
                }
                tail.push(LogScaled::from_log(l));
            }
        }
        tables.push((term.coeff, per));
    }
    for idx in 0..out.len() {
        let alpha = out.alpha_at(idx);
        let mut acc = LogComplexSum::new();
        for (k, per) in &tables {
            let mut v = LogComplex::from_c64(*k);
            for (j, &aj) in alpha.iter().enumerate() {
                v = v.mul(per[j][aj]);
            }
            acc.push(v);
        }
        out.set_log(idx, acc.value());
    }
    out.tail_log = if tail_known { Some(tail.value().log_mag) } else { None };
    Ok(out)
}

/// Hermite coefficients by tensorized quadrature only (the cross-check path).
pub fn hermite_coeffs_quad(f: &TestFunction, nmax: usize) -> Result<CoeffVector> {
    if nmax > MAX_DEGREE {
        return domain(format!("degree {nmax} exceeds {MAX_DEGREE}"));
    }
    let d = f.dim();
    let mut out = CoeffVector::zeros(d, nmax)?;
    let mut tables = Vec::new();
    for term in f.separable_terms() {
        let per: Vec<Vec<Complex64>> = term.factors.iter().map(|g| g.coeffs_quad(nmax)).collect::<Result<_>>()?;
        tables.push((term.coeff, per));
    }
    for idx in 0..out.len() {
        let alpha = out.alpha_at(idx);
        let mut acc = c(0.0, 0.0);
        for (k, per) in &tables {
            let mut v = *k;
            for (j, &aj) in alpha.iter().enumerate() {
                v *= per[j][aj];
            }
            acc += v;
        }
        out.set(&alpha, acc)?;
    }
    Ok(out)
}

/// Value of a Hermite series and the truncation tail bound, when known.
#[derive(Debug, Clone, Copy)]
pub struct Synthesis {
    pub value: LogComplex,
    pub tail_log: Option<f64>,
}

/// `Σ_α c_α h_α(x)` with compensated log-domain accumulation.
pub fn synthesize(cv: &CoeffVector, x: &[f64]) -> Result<Synthesis> {
    if x.len() != cv.dim() {
        return domain(format!("point has dimension {} but coefficients have {}", x.len(), cv.dim()));
    }
    let tables: Vec<Vec<LogScaled>> =
        x.iter().map(|&xj| specfun::hermite_table_log(cv.max_degree(), xj)).collect::<Result<_>>()?;
    let mut acc = LogComplexSum::new();
    for idx in 0..cv.len() {
        let l = cv.log_abs_at(idx);
        if l == f64::NEG_INFINITY {
            continue;
        }
        let alpha = cv.alpha_at(idx);
        let mut h = LogScaled::ONE;
        for (j, &aj) in alpha.iter().enumerate() {
            h = h * tables[j][aj];
        }
        if h.is_zero() {
            continue;
        }
        let arg = cv.arg_at(idx) + if h.sign < 0 { PI } else { 0.0 };
        acc.push(LogComplex::from_polar(l + h.log_mag, arg));
    }
    Ok(Synthesis { value: acc.value(), tail_log: cv.tail_log.map(|t| t - 0.25 * cv.dim() as f64 * LN_PI) })
}

/// `log ‖P_k f‖₂`.
pub fn projection_log_norm(f: &TestFunction, k: usize) -> Result<f64> {
    let cv = hermite_coeffs(f, k)?;
    Ok(0.5 * cv.degree_log_norm_sq(k))
}

/// `‖P_k f‖₂ = (Σ_{|α|=k} |⟨f, h_α⟩|²)^{1/2}`.
pub fn projection_norm(f: &TestFunction, k: usize) -> Result<f64> {
    Ok(projection_log_norm(f, k)?.exp())
}

/// Laguerre coefficients `⟨f, ψ_k^ν⟩` in `L²(ℝ⁺, r^{2ν+1}dr)` for `k ≤ kmax`.
/// Sums of pure Gaussians use the closed form; everything else goes through
/// generalized Gauss–Laguerre quadrature.
pub fn laguerre_coeffs(f: &TestFunction, nu: f64, kmax: usize) -> Result<CoeffVector> {
    check_laguerre(f, nu, kmax)?;
    if let TestFunction::GaussPoly { a, terms, .. } = f {
        if terms.iter().all(|(e, _)| e[0] == 0) {
            let k0: Complex64 = terms.iter().map(|(_, k)| *k).sum();
            let g = gaussian_laguerre_coeffs(*a, nu, kmax);
            let mut out = CoeffVector::zeros(1, kmax)?;
            for (k, v) in g.iter().enumerate() {
                out.set_log(k, LogComplex::from_c64(k0).scale(*v));
            }
            return Ok(out);
        }
    }
    laguerre_coeffs_quad(f, nu, kmax)
}

fn check_laguerre(f: &TestFunction, nu: f64, kmax: usize) -> Result<()> {
    if f.dim() != 1 {
        return domain("Laguerre coefficients need a one-dimensional radial profile");
    }
    if !(nu > -0.5) {
        return domain(format!("Laguerre type ν = {nu} must exceed −1/2"));
    }
    if kmax > MAX_DEGREE {
        return domain(format!("degree {kmax} exceeds {MAX_DEGREE}"));
    }
    Ok(())
}

/// `⟨e^{−p r²/2}, ψ_k^ν⟩ = (1−ρ)^{ν+1} ρ^k Γ(k+ν+1) / (2·k!)`, `ρ = (p−1)/(p+1)`.
pub fn gaussian_laguerre_coeffs(p: f64, nu: f64, kmax: usize) -> Vec<LogScaled> {
    let rho = (p - 1.0) / (p + 1.0);
    (0..=kmax)
        .map(|k| {
            let kf = k as f64;
            if k > 0 && rho == 0.0 {
                return LogScaled::ZERO;
            }
            let lr = if k == 0 { 0.0 } else { kf * rho.abs().ln() };
            let l = (nu + 1.0) * (1.0 - rho).ln() + lr + specfun::ln_gamma(kf + nu + 1.0)
                - specfun::ln_gamma(kf + 1.0)
                - std::f64::consts::LN_2;
            LogScaled::new(if rho < 0.0 && k % 2 == 1 { -1 } else { 1 }, l)
        })
        .collect()
}

/// Laguerre coefficients by quadrature: with `u = (1+a) r²/2` the integrand
/// `f ψ_k^ν r^{2ν+1}` becomes a polynomial-like function against `u^ν e^{−u}`.
pub fn laguerre_coeffs_quad(f: &TestFunction, nu: f64, kmax: usize) -> Result<CoeffVector> {
    check_laguerre(f, nu, kmax)?;
    if let TestFunction::Sampled { grid, values } = f {
        if grid[0] < 0.0 {
            return domain("radial samples must live on r ≥ 0");
        }
        let tables: Vec<Vec<LogScaled>> =
            grid.iter().map(|&r| specfun::laguerre_psi_table_log(kmax, nu, r)).collect::<Result<_>>()?;
        let mut out = CoeffVector::zeros(1, kmax)?;
        for k in 0..=kmax {
            let v = quadrature::trapezoid(grid, |i| {
                let r = grid[i];
                values[i] * (tables[i][k].to_f64() * r.powf(2.0 * nu + 1.0))
            });
            out.set(&[k], v)?;
        }
        return Ok(out);
    }
    let a = f.decay_rate();
    let b = 1.0 + a;
    let pref = (2.0 / b).powf(nu) / b;
    let eval = |order: usize| -> Result<Vec<Complex64>> {
        let rule = quadrature::gauss_laguerre_rule(order, nu)?;
        let mut out = vec![c(0.0, 0.0); kmax + 1];
        for (u, w) in rule.nodes.iter().zip(&rule.scaled_weights) {
            if *w == 0.0 || !w.is_finite() {
                continue;
            }
            let r = (2.0 * u / b).sqrt();
            let fr = f.eval(&[r])?;
            if fr == c(0.0, 0.0) {
                continue;
            }
            let psi = specfun::laguerre_psi_table_log(kmax, nu, r)?;
            for (o, p) in out.iter_mut().zip(&psi) {
                *o += fr * (p.to_f64() * w * pref);
            }
        }
        Ok(out)
    };
    let mut order = (2 * kmax + 32).min(MAX_RULE_SIZE);
    let mut prev = eval(order)?;
    let mut est = f64::INFINITY;
    let mut result = None;
    while order < MAX_RULE_SIZE {
        order = (2 * order).min(MAX_RULE_SIZE);
        let cur = eval(order)?;
        let scale = cur.iter().map(|v| v.norm()).fold(0.0, f64::max);
        est = cur.iter().zip(&prev).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        if est <= 1e-9 * scale.max(1e-300) || est < 1e-15 {
            result = Some(cur);
            break;
        }
        prev = cur;
    }
    let vals = result.ok_or(Error::Accuracy { what: "Laguerre coefficient quadrature".into(), estimate: est })?;
    let mut out = CoeffVector::zeros(1, kmax)?;
    for (k, v) in vals.into_iter().enumerate() {
        out.set(&[k], v)?;
    }
    Ok(out)
}

/// Default quadrature options, re-exported for callers composing transforms.
pub fn default_quad() -> QuadOptions {
    QuadOptions::default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn multi_index_codec_round_trips() {
        for d in 1..=3 {
            let total = binom(12 + d, d);
            for idx in 0..total {
                let a = multi_index_at(d, idx);
                assert_eq!(multi_index_position(&a), idx, "{d} {a:?}");
            }
        }
        assert_eq!(multi_index_at(2, 1), vec![0, 1]);
        assert_eq!(multi_index_at(2, 2), vec![1, 0]);
        assert_eq!(multi_index_at(2, 3), vec![0, 2]);
    }

    #[test]
    fn hermite_function_is_a_unit_vector() {
        let f = TestFunction::gauss_poly_1d(1.0, &[0.0, 0.0, 0.0, 1.0]).unwrap();
        // x³e^{−x²/2} = π^{1/4}(√3/2·h_3 + 3/(2√2)·... ) — check via h_3 directly
        let _ = f;
        let h3 = TestFunction::hermite(&[3]).unwrap();
        let cv = hermite_coeffs_quad(&h3, 10).unwrap();
        for n in 0..=10 {
            let want = if n == 3 { 1.0 } else { 0.0 };
            assert!((cv.get(&[n]) - c(want, 0.0)).norm() < 1e-13, "{n}");
        }
    }

    #[test]
    fn gaussian_coefficients_match_quadrature() {
        let a = (1.0f64).tanh();
        let f = TestFunction::gaussian(1, a);
        let exact = hermite_coeffs(&f, 40).unwrap();
        let quad = hermite_coeffs_quad(&f, 40).unwrap();
        for n in 0..=40 {
            let (e, q) = (exact.get(&[n]), quad.get(&[n]));
            assert!((e - q).norm() < 1e-13, "{n}: {e} {q}");
            if n % 2 == 1 {
                assert_eq!(exact.log_abs_at(n), f64::NEG_INFINITY);
            }
        }
        // geometric in μ^{n/2}
        let mu = (1.0 - a) / (1.0 + a);
        let r = exact.get(&[22]).re / exact.get(&[20]).re;
        let want = mu * (21.0f64 * 22.0).sqrt() / (2.0 * 11.0);
        assert!((r / want - 1.0).abs() < 1e-12);
    }

    #[test]
    fn polynomial_gaussian_coefficients_match_quadrature() {
        let f = TestFunction::gauss_poly(
            2,
            0.7,
            vec![(vec![0, 0], c(1.0, 0.0)), (vec![1, 2], c(0.3, -0.2)), (vec![3, 0], c(0.0, 0.5))],
        )
        .unwrap();
        let exact = hermite_coeffs(&f, 20).unwrap();
        let quad = hermite_coeffs_quad(&f, 20).unwrap();
        for idx in 0..exact.len() {
            let a = exact.alpha_at(idx);
            assert!((exact.get(&a) - quad.get(&a)).norm() < 1e-12, "{a:?}");
        }
    }

    #[test]
    fn parseval() {
        let f = TestFunction::gauss_poly_1d(1.0, &[1.0, 0.0, 1.0]).unwrap();
        let cv = hermite_coeffs(&f, 60).unwrap();
        let n2 = f.norm_sq().unwrap();
        assert!((cv.norm_sq() / n2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn synthesis_round_trip() {
        let f = TestFunction::gauss_poly_1d(0.8, &[1.0, -0.4, 0.25]).unwrap();
        let cv = hermite_coeffs(&f, 120).unwrap();
        for &x in &[-3.1, -0.2, 0.0, 1.7, 4.4] {
            let s = synthesize(&cv, &[x]).unwrap().value.to_c64();
            let v = f.eval(&[x]).unwrap();
            assert!((s - v).norm() < 1e-8, "{x}: {s} {v}");
        }
    }

    #[test]
    fn coeff_rule_matches_brute_force_sum() {
        let (s, y, x) = (0.25, 1.0, 6.0);
        let (v, tail) = coeff_rule_series(s, y, 0.0, x);
        let t = specfun::hermite_table(400, x).unwrap();
        let brute: f64 = t.iter().enumerate().map(|(n, h)| (-y * (n as f64).powi(2)).exp() * h).sum();
        assert!((v.to_c64().re - brute).abs() <= tail.exp() + 1e-15 * brute.abs(), "{v:?} {brute}");
    }

    #[test]
    fn projection_norms() {
        let f = TestFunction::hermite(&[2, 3]).unwrap();
        for k in 0..8 {
            let want = if k == 5 { 1.0 } else { 0.0 };
            assert!((projection_norm(&f, k).unwrap() - want).abs() < 1e-15);
        }
        let g = TestFunction::gauss_poly(2, 1.3, vec![(vec![0, 0], c(1.0, 0.0)), (vec![2, 1], c(0.4, 0.0))]).unwrap();
        let total: f64 = (0..=80).map(|k| projection_norm(&g, k).unwrap().powi(2)).sum();
        assert!((total / g.norm_sq().unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn fourier_closed_form_matches_quadrature() {
        let f = TestFunction::gauss_poly(1, 1.6, vec![(vec![0], c(1.0, 0.0)), (vec![3], c(0.2, 0.1))]).unwrap();
        let g = f.fourier().unwrap();
        for &xi in &[-2.0, 0.0, 0.4, 1.9, 3.5] {
            let closed = g.eval(&[xi]).unwrap();
            let num = quadrature::fourier_transform_num(&f, &[xi]).unwrap();
            assert!((closed - num).norm() < 1e-12, "{xi}: {closed} {num}");
        }
    }

    #[test]
    fn fourier_commutes_with_coefficients() {
        let f = TestFunction::gauss_poly_1d(0.6, &[1.0, 0.5, -0.3]).unwrap();
        let a = hermite_coeffs(&f, 40).unwrap();
        let b = hermite_coeffs(&f.fourier().unwrap(), 40).unwrap();
        for n in 0..=40 {
            let want = a.get(&[n]) * c(0.0, -1.0).powu(n as u32);
            assert!((b.get(&[n]) - want).norm() < 1e-8);
        }
    }

    #[test]
    fn laguerre_coefficients() {
        let f = TestFunction::gaussian(1, 1.0);
        for &nu in &[0.0, 0.5, 2.0] {
            let cv = laguerre_coeffs_quad(&f, nu, 12).unwrap();
            assert!((cv.get(&[0]).re - specfun::gamma(nu + 1.0) / 2.0).abs() < 1e-13);
            for k in 1..=12 {
                assert!(cv.get(&[k]).norm() < 1e-13);
            }
        }
        let g = TestFunction::gaussian(1, 3.0);
        let q = laguerre_coeffs_quad(&g, 0.5, 40).unwrap();
        let e = laguerre_coeffs(&g, 0.5, 40).unwrap();
        for k in 0..=40 {
            assert!((q.get(&[k]) - e.get(&[k])).norm() < 1e-10, "{k}");
        }
    }

    #[test]
    fn csv_round_trip() {
        let f = TestFunction::gauss_poly(2, 0.9, vec![(vec![1, 0], c(1.0, 0.5))]).unwrap();
        let cv = hermite_coeffs(&f, 6).unwrap();
        let mut buf = Vec::new();
        cv.to_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("alpha_1,alpha_2,re,im\n"));
        let back = CoeffVector::from_csv(&buf[..]).unwrap();
        for idx in 0..cv.len() {
            let a = cv.alpha_at(idx);
            assert!((cv.get(&a) - back.get(&a)).norm() <= 1e-15 * cv.get(&a).norm());
        }
    }

    proptest! {
        #[test]
        fn linearity_of_laguerre_coefficients(p1 in 0.5f64..3.0, p2 in 0.5f64..3.0, s in -2.0f64..2.0) {
            let f = TestFunction::gaussian(1, p1);
            let g = TestFunction::gaussian(1, p2);
            let a = laguerre_coeffs(&f, 0.5, 10).unwrap();
            let b = laguerre_coeffs(&g, 0.5, 10).unwrap();
            let h = TestFunction::sampled(
                (0..=4000).map(|i| i as f64 * 0.004).collect(),
                (0..=4000).map(|i| { let r = i as f64 * 0.004; c((-p1 * r * r / 2.0).exp() + s * (-p2 * r * r / 2.0).exp(), 0.0) }).collect(),
            ).unwrap();
            let m = laguerre_coeffs_quad(&h, 0.5, 10).unwrap();
            for k in 0..=10 {
                let want = a.get(&[k]) + b.get(&[k]) * s;
                prop_assert!((m.get(&[k]) - want).norm() < 1e-5);
            }
        }

        #[test]
        fn norm_is_basis_independent(a in 0.3f64..3.0, c1 in -1.0f64..1.0) {
            let f = TestFunction::gauss_poly_1d(a, &[1.0, c1]).unwrap();
            let cv = hermite_coeffs(&f, 200).unwrap();
            prop_assert!((cv.norm_sq() / f.norm_sq().unwrap() - 1.0).abs() < 1e-9);
        }
    }
}
