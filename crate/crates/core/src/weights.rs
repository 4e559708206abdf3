//! Weight functions `w`, numerical checks of their regularity conditions,
//! Young conjugates of `φ(t) = w(e^t)` and the log-power derived quantities.

use crate::error::{domain, Error, Result};
use std::io::Read;
use std::sync::Arc;

/// Smallest upper grid end accepted by [`check_weight_conditions`].
pub const MIN_CHECK_RANGE: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub enum WeightVariant {
    Zero,
    /// `(log(1+t))^{1/(1−2s)}`.
    LogPower { s: f64 },
    /// Piecewise-linear through `(t_i, w_i)`, continued with the last slope.
    Tabulated { t: Arc<Vec<f64>>, w: Arc<Vec<f64>> },
}

/// A weight `w` together with the class parameters `λ` and `c`; class
/// envelopes use `λ·w(c·t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSpec {
    pub variant: WeightVariant,
    pub lambda: f64,
    pub c: f64,
}

fn softplus(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

fn check_class(lambda: f64, c: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return domain(format!("growth coefficient λ = {lambda} must be positive"));
    }
    if !(c > 0.0 && c.is_finite()) {
        return domain(format!("argument scale c = {c} must be positive"));
    }
    Ok(())
}

impl WeightSpec {
    pub fn zero(lambda: f64, c: f64) -> Result<Self> {
        check_class(lambda, c)?;
        Ok(WeightSpec { variant: WeightVariant::Zero, lambda, c })
    }

    pub fn log_power(s: f64, lambda: f64, c: f64) -> Result<Self> {
        check_class(lambda, c)?;
        if !(s > 0.0 && s < 0.5) {
            return domain(format!("log-power exponent needs 0 < s < 1/2, got {s}"));
        }
        Ok(WeightSpec { variant: WeightVariant::LogPower { s }, lambda, c })
    }

    pub fn tabulated(t: Vec<f64>, w: Vec<f64>, lambda: f64, c: f64) -> Result<Self> {
        check_class(lambda, c)?;
        if t.len() < 2 || t.len() != w.len() {
            return domain("tabulated weight needs ≥ 2 samples with matching columns");
        }
        if t[0] < 0.0 || t.windows(2).any(|p| !(p[1] > p[0])) {
            return domain("tabulated weight needs strictly increasing t ≥ 0");
        }
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || w.windows(2).any(|p| p[1] < p[0]) {
            return domain("tabulated weight must be finite, nonnegative and non-decreasing");
        }
        if w[w.len() - 1] <= w[w.len() - 2] {
            return domain("tabulated weight must end strictly increasing (w is unbounded)");
        }
        Ok(WeightSpec { variant: WeightVariant::Tabulated { t: Arc::new(t), w: Arc::new(w) }, lambda, c })
    }

    /// Two-column CSV `(t, w)`; a non-numeric first row is taken as a header.
    pub fn from_csv<R: Read>(r: R, lambda: f64, c: f64) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(r);
        let (mut t, mut w) = (Vec::new(), Vec::new());
        for (i, rec) in rd.records().enumerate() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::Parse(format!("row {}: expected 2 columns", i + 1)));
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(a), Ok(b)) => {
                    t.push(a);
                    w.push(b);
                }
                _ if i == 0 => continue,
                _ => return Err(Error::Parse(format!("row {}: non-numeric entry", i + 1))),
            }
        }
        Self::tabulated(t, w, lambda, c)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.variant, WeightVariant::Zero)
    }

    /// `w(t)` for `t ≥ 0`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return domain(format!("weight argument must be ≥ 0, got {t}"));
        }
        Ok(self.w(t))
    }

    /// `w(t)` without the domain check (`t` is clamped to 0 from below).
    pub fn w(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match &self.variant {
            WeightVariant::Zero => 0.0,
            WeightVariant::LogPower { s } => t.ln_1p().powf(1.0 / (1.0 - 2.0 * s)),
            WeightVariant::Tabulated { t: ts, w } => {
                let n = ts.len();
                if t <= ts[0] {
                    return w[0];
                }
                let i = ts.partition_point(|&x| x <= t).clamp(1, n - 1);
                let slope = (w[i] - w[i - 1]) / (ts[i] - ts[i - 1]);
                w[i - 1] + slope * (t - ts[i - 1])
            }
        }
    }

    /// `λ·w(c·t)`.
    pub fn scaled(&self, t: f64) -> f64 {
        self.lambda * self.w(self.c * t)
    }

    /// `φ(u) = w(e^u)`, stable for large `u`.
    pub fn phi(&self, u: f64) -> f64 {
        match &self.variant {
            WeightVariant::LogPower { s } => softplus(u).powf(1.0 / (1.0 - 2.0 * s)),
            _ => self.w(u.exp()),
        }
    }

    /// Upper end of the conjugate maximization bracket for this weight.
    pub fn conjugate_bracket(&self, v: f64) -> f64 {
        match &self.variant {
            WeightVariant::LogPower { s } => 50f64.max(5.0 * v.powf((1.0 - 2.0 * s) / (2.0 * s))),
            _ => 50f64.max(5.0 * v),
        }
    }

    /// `φ*(v)`; identically zero for the zero weight.
    pub fn phi_conjugate(&self, v: f64) -> Result<Conjugate> {
        if self.is_zero() {
            if !(v >= 0.0) {
                return domain(format!("conjugate argument must be ≥ 0, got {v}"));
            }
            return Ok(Conjugate { value: 0.0, argmax: 0.0, truncated: false });
        }
        young_conjugate_expanding(|u| self.phi(u), v, self.conjugate_bracket(v))
    }
}

/// Result of a Young-conjugate evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conjugate {
    pub value: f64,
    pub argmax: f64,
    /// The maximizer sat at the bracket end; `value` is then a lower bound.
    pub truncated: bool,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// `φ*(v) = sup_{0 ≤ u ≤ u_max} [uv − φ(u)]` by golden-section search of
/// the concave objective.
pub fn young_conjugate<F: Fn(f64) -> f64>(phi: F, v: f64, u_max: f64) -> Result<Conjugate> {
    if !(v >= 0.0) || !v.is_finite() {
        return domain(format!("conjugate argument must be finite and ≥ 0, got {v}"));
    }
    if !(u_max > 0.0) || !u_max.is_finite() {
        return domain(format!("conjugate bracket end must be positive, got {u_max}"));
    }
    let g = |u: f64| u * v - phi(u);
    let (mut a, mut b) = (0.0, u_max);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut g1, mut g2) = (g(x1), g(x2));
    for _ in 0..400 {
        if b - a <= 1e-13 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if g1 < g2 {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + INV_PHI * (b - a);
            g2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - INV_PHI * (b - a);
            g1 = g(x1);
        }
    }
    let mut best = (0.5 * (a + b), g(0.5 * (a + b)));
    for u in [0.0, u_max, x1, x2] {
        let gu = g(u);
        if gu > best.1 {
            best = (u, gu);
        }
    }
    if !best.1.is_finite() {
        return Err(Error::Numeric(format!("conjugate objective not finite at v = {v}")));
    }
    let truncated = best.0 >= u_max * (1.0 - 1e-9);
    if truncated {
        log::warn!("Young conjugate at v = {v} attained at bracket end u = {u_max}; value {} is a lower bound", best.1);
    }
    Ok(Conjugate { value: best.1, argmax: best.0, truncated })
}

/// [`young_conjugate`] with the bracket widened fourfold (up to 1e9) while
/// the maximizer sits at its end.
pub fn young_conjugate_expanding<F: Fn(f64) -> f64>(phi: F, v: f64, u_max: f64) -> Result<Conjugate> {
    let mut um = u_max;
    loop {
        let r = young_conjugate(&phi, v, um)?;
        if !r.truncated || um >= 1e9 {
            return Ok(r);
        }
        um *= 4.0;
    }
}

/// `A·e^{2t} + w(e^t)`, the auxiliary convex functions of the projection and
/// Laguerre bounds.
#[derive(Debug, Clone)]
pub struct AuxWeight {
    pub coef: f64,
    pub weight: WeightSpec,
}

impl AuxWeight {
    /// `φ(t) = w(e^t)`.
    pub fn phi(w: &WeightSpec) -> Self {
        AuxWeight { coef: 0.0, weight: w.clone() }
    }

    /// `ψ_{a,c}(t) = (1/(2c²))√((2−a)/(2+a)) e^{2t} + w(e^t)`, `0 < a ≤ 2`.
    pub fn psi(a: f64, c: f64, w: &WeightSpec) -> Result<Self> {
        if !(a > 0.0 && a <= 2.0) || !(c > 0.0) {
            return domain(format!("ψ needs 0 < a ≤ 2 and c > 0 (got a = {a}, c = {c}); use φ for a ≥ 2"));
        }
        Ok(AuxWeight { coef: ((2.0 - a) / (2.0 + a)).sqrt() / (2.0 * c * c), weight: w.clone() })
    }

    /// `ζ_{p,q}(t) = (1/(4q²))√((1−p)/(1+p)) e^{2t} + w(e^t)`, `0 < p ≤ 1`.
    pub fn zeta(p: f64, q: f64, w: &WeightSpec) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) || !(q > 0.0) {
            return domain(format!("ζ needs 0 < p ≤ 1 and q > 0 (got p = {p}, q = {q}); use φ for p ≥ 1"));
        }
        Ok(AuxWeight { coef: ((1.0 - p) / (1.0 + p)).sqrt() / (4.0 * q * q), weight: w.clone() })
    }

    /// `Ψ_{a,c}(t) = (1/(2c²))√((1−a)/(1+a)) e^{2t} + w(e^t)`, `0 < a ≤ 1`.
    pub fn big_psi(a: f64, c: f64, w: &WeightSpec) -> Result<Self> {
        if !(a > 0.0 && a <= 1.0) || !(c > 0.0) {
            return domain(format!("Ψ needs 0 < a ≤ 1 and c > 0 (got a = {a}, c = {c}); use φ for a ≥ 1"));
        }
        Ok(AuxWeight { coef: ((1.0 - a) / (1.0 + a)).sqrt() / (2.0 * c * c), weight: w.clone() })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let e = if self.coef == 0.0 { 0.0 } else { self.coef * (2.0 * t).exp() };
        e + self.weight.phi(t)
    }

    pub fn conjugate(&self, v: f64) -> Result<Conjugate> {
        if self.coef == 0.0 {
            return self.weight.phi_conjugate(v);
        }
        // the exponential part caps the maximizer near log(v/(2A))/2
        let exp_cap = 0.5 * (v.max(1e-300) / (2.0 * self.coef)).ln().max(0.0) + 2.0;
        let bracket = exp_cap.min(self.weight.conjugate_bracket(v)).max(1.0);
        young_conjugate_expanding(|u| self.eval(u), v, bracket)
    }
}

/// Closed-form conjugate of `A·e^{2t}` over `t ≥ 0`.
pub fn exp2_conjugate(a: f64, v: f64) -> f64 {
    if v > 2.0 * a {
        0.5 * v * ((v / (2.0 * a)).ln() - 1.0)
    } else {
        -a
    }
}

/// Point values and conjugates of `ψ_{a,c}`, `ζ_{p,q}` and `Ψ_{a,c}`; entries
/// whose parameters are out of range are `None`.
#[derive(Debug, Clone, Copy, Default)]
pub struct AuxValues {
    pub psi: Option<(f64, f64)>,
    pub zeta: Option<(f64, f64)>,
    pub big_psi: Option<(f64, f64)>,
}

pub fn aux_weight_functions(a: f64, c: f64, p: f64, q: f64, t: f64, v: f64, w: &WeightSpec) -> Result<AuxValues> {
    let pair = |f: Result<AuxWeight>| -> Result<Option<(f64, f64)>> {
        match f {
            Ok(g) => Ok(Some((g.eval(t), g.conjugate(v)?.value))),
            Err(Error::Domain(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };
    Ok(AuxValues { psi: pair(AuxWeight::psi(a, c, w))?, zeta: pair(AuxWeight::zeta(p, q, w))?, big_psi: pair(AuxWeight::big_psi(a, c, w))? })
}

/// Derived quantities of the log-power family at `(s, y, x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eq1 {
    /// `log(1 + √2·|x|)`.
    pub log_plus: f64,
    pub p: f64,
    pub l: f64,
    pub lambda_s: f64,
}

/// `λ_s = ½(1−2s)s^{2s/(1−2s)}`.
pub fn lambda_s(s: f64) -> f64 {
    0.5 * (1.0 - 2.0 * s) * s.powf(2.0 * s / (1.0 - 2.0 * s))
}

fn eq1_radicand(s: f64, y: f64, x: f64) -> f64 {
    let lp = (2f64.sqrt() * x.abs()).ln_1p();
    1.0 - 2.0 / (x * x) * (2.0 * s * lp / y).powf(2.0 * s / (1.0 - 2.0 * s))
}

/// Smallest `x > 0` beyond which the radicand of `P_{s,y}` stays positive.
pub fn eq1_min_x(s: f64, y: f64) -> f64 {
    // radicand < 0 exactly where x² < 2(2sℓ/y)^{2s/(1−2s)}; the right side
    // grows only logarithmically, so scan outward then bisect the last crossing
    let mut hi = 1e-3;
    let mut last_bad = 0.0;
    while hi < 1e12 {
        if eq1_radicand(s, y, hi) <= 0.0 {
            last_bad = hi;
        }
        hi *= 1.25;
    }
    if last_bad == 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (last_bad, last_bad * 1.25);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if eq1_radicand(s, y, mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

pub fn eq1_quantities(s: f64, y: f64, x: f64) -> Result<Eq1> {
    if !(s > 0.0 && s < 0.5) {
        return domain(format!("need 0 < s < 1/2, got {s}"));
    }
    if !(y > 0.0) || !y.is_finite() {
        return domain(format!("need y > 0, got {y}"));
    }
    if !x.is_finite() || x == 0.0 {
        return domain(format!("need finite nonzero x, got {x}"));
    }
    let e = 2.0 * s / (1.0 - 2.0 * s);
    let lp = (2f64.sqrt() * x.abs()).ln_1p();
    let rad = eq1_radicand(s, y, x);
    if !(rad > 0.0) {
        return domain(format!("radicand of P is {rad} ≤ 0 at x = {x}; need |x| > {:.6}", eq1_min_x(s, y)));
    }
    Ok(Eq1 {
        log_plus: lp,
        p: rad.sqrt(),
        l: (1.0 - 2.0 * s) * (2.0 * s / y).powf(e) * lp.powf(1.0 / (1.0 - 2.0 * s)),
        lambda_s: lambda_s(s),
    })
}

/// Outcome of one numerical condition check.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck {
    pub holds: bool,
    /// Fitted constants or estimates, by name.
    pub constants: Vec<(String, f64)>,
    /// Grid point witnessing failure, when `holds` is false.
    pub counterexample: Option<Vec<f64>>,
    pub note: String,
}

impl ConditionCheck {
    fn new(holds: bool, constants: Vec<(&str, f64)>, counterexample: Option<Vec<f64>>, note: impl Into<String>) -> Self {
        ConditionCheck {
            holds,
            constants: constants.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            counterexample: if holds { None } else { counterexample },
            note: note.into(),
        }
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub sigma: f64,
    pub alpha: ConditionCheck,
    pub beta_sigma: ConditionCheck,
    /// Only ever "numerically consistent" on the grid, never proven.
    pub beta_star: ConditionCheck,
    pub gamma: ConditionCheck,
    pub delta: ConditionCheck,
}

/// Logarithmic sample range `[0, t_max]` with `points` log-spaced nodes.
#[derive(Debug, Clone, Copy)]
pub struct SampleRange {
    pub t_max: f64,
    pub points: usize,
}

impl Default for SampleRange {
    fn default() -> Self {
        SampleRange { t_max: MIN_CHECK_RANGE, points: 121 }
    }
}

impl SampleRange {
    fn nodes(&self) -> Vec<f64> {
        let (lo, hi) = (1e-3f64.ln(), self.t_max.ln());
        let mut v = vec![0.0];
        v.extend((0..self.points).map(|i| (lo + (hi - lo) * i as f64 / (self.points - 1) as f64).exp()));
        v
    }
}

/// Simpson rule for `∫_0^U g(u) du`.
fn simpson(g: impl Fn(f64) -> f64, upper: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = upper / n as f64;
    let mut s = g(0.0) + g(upper);
    for i in 1..n {
        s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Local growth exponent `d log w / d log t` at the top decade of the grid.
fn top_exponent(w: &WeightSpec, t_max: f64) -> f64 {
    let (a, b) = (w.w(t_max / 10.0), w.w(t_max));
    if a <= 0.0 || b <= 0.0 {
        return 0.0;
    }
    (b / a).ln() / 10f64.ln()
}

/// Tests (α), (β_σ), (β*_σ), (γ) and (δ) on the sample grid.
pub fn check_weight_conditions(w: &WeightSpec, sigma: f64, grid: SampleRange) -> Result<ConditionReport> {
    if !(sigma > 0.0) {
        return domain(format!("σ must be positive, got {sigma}"));
    }
    if grid.t_max < MIN_CHECK_RANGE || grid.points < 10 {
        return Err(Error::Coverage(format!(
            "condition grid must cover [0, {MIN_CHECK_RANGE:e}] with ≥ 10 points (got t_max = {}, {} points)",
            grid.t_max, grid.points
        )));
    }
    if let WeightVariant::Tabulated { t, .. } = &w.variant {
        let top = t[t.len() - 1];
        if top < grid.t_max {
            return Err(Error::Coverage(format!("tabulated weight ends at t = {top}, grid needs {}", grid.t_max)));
        }
    }
    let nodes = grid.nodes();

    // (α): fitted L over the full grid vs the grid truncated a decade lower
    let ratio = |t: f64, s: f64| w.w(t + s) / (w.w(t) + w.w(s) + 1.0);
    let mut l_full = (1.0f64, vec![0.0, 0.0]);
    let mut l_low = 1.0f64;
    for &t in &nodes {
        for &s in &nodes {
            let r = ratio(t, s);
            if r > l_full.0 {
                l_full = (r, vec![t, s]);
            }
            if t <= grid.t_max / 10.0 && s <= grid.t_max / 10.0 {
                l_low = l_low.max(r);
            }
        }
    }
    let alpha_ok = l_full.0.is_finite() && l_full.0.ln() - l_low.ln() <= 1.05f64.ln();
    let alpha = ConditionCheck::new(
        alpha_ok,
        vec![("L", l_full.0), ("L_lower_decade", l_low)],
        Some(l_full.1),
        "L = max w(t+s)/(w(t)+w(s)+1); holds when L is stable over the last decade",
    );

    // (β_σ): ∫_0^U w(e^u)e^{−σu}du plus a power-law tail beyond e^U
    let u_top = grid.t_max.ln();
    let body = simpson(|u| w.phi(u) * (-sigma * u).exp(), u_top, 4000);
    let p = top_exponent(w, grid.t_max);
    let beta_ok = p < sigma - 0.01;
    let tail = if beta_ok { w.w(grid.t_max) * grid.t_max.powf(-sigma) / (sigma - p) } else { f64::INFINITY };
    let beta_sigma = ConditionCheck::new(
        beta_ok,
        vec![("integral", body + tail), ("growth_exponent", p)],
        Some(vec![grid.t_max, p]),
        "tail judged by the local growth exponent of w against σ",
    );

    // (β*_σ): I(t) = ∫_1^∞ w(ts)s^{−1−σ}ds against (π/2)(L−1)w(t) + C
    let star = if beta_ok {
        let integral = |t: f64| -> f64 {
            let top = (grid.t_max * 1e3 / t.max(1e-300)).ln().max(u_top);
            simpson(|u| w.w(t * u.exp()) * (-sigma * u).exp(), top, 4000)
                + w.w(t * top.exp()) * (-sigma * top).exp() / (sigma - p)
        };
        let vals: Vec<(f64, f64, f64)> = nodes.iter().map(|&t| (t, integral(t), w.w(t))).collect();
        let upper: Vec<&(f64, f64, f64)> = vals.iter().filter(|v| v.0 >= grid.t_max.sqrt() && v.2 > 0.0).collect();
        let k = upper.iter().map(|v| v.1 / v.2).fold(0.0, f64::max);
        let k_low = upper.iter().filter(|v| v.0 <= grid.t_max / 10.0).map(|v| v.1 / v.2).fold(0.0, f64::max);
        let l = 1.0 + 2.0 * k / std::f64::consts::PI;
        let cst = vals.iter().map(|v| v.1 - k * v.2).fold(0.0, f64::max);
        let worst = vals.iter().max_by(|a, b| (a.1 - k * a.2).total_cmp(&(b.1 - k * b.2))).map(|v| vec![v.0, v.1]);
        let ok = k.is_finite() && cst.is_finite() && (k_low == 0.0 || k <= 1.05 * k_low + 1e-12);
        ConditionCheck::new(ok, vec![("L", l), ("C", cst)], worst, "numerically consistent on the grid (not a proof)")
    } else {
        ConditionCheck::new(false, vec![], Some(vec![grid.t_max]), "requires (β_σ)")
    };

    // (γ): log t / w(t) must decay; fit its exponent against log log t
    let upper: Vec<f64> = nodes.iter().copied().filter(|&t| t >= grid.t_max.sqrt()).collect();
    let gamma = if w.is_zero() {
        ConditionCheck::new(false, vec![], Some(vec![std::f64::consts::E]), "w ≡ 0 cannot dominate log t")
    } else {
        let r: Vec<f64> = upper.iter().map(|&t| t.ln() / w.w(t)).collect();
        let monotone = r.windows(2).all(|p| p[1] <= p[0] * (1.0 + 1e-12));
        let (t0, t1) = (upper[0], upper[upper.len() - 1]);
        let slope = (r[r.len() - 1] / r[0]).ln() / (t1.ln().ln() - t0.ln().ln());
        let ok = monotone && slope < -1e-3;
        let bad = r.windows(2).position(|p| p[1] > p[0] * (1.0 + 1e-12)).map(|i| vec![upper[i + 1]]);
        ConditionCheck::new(ok, vec![("decay_exponent", slope)], bad.or(Some(vec![t1])), "exponent of log t / w(t) in log log t")
    };

    // (δ): second differences of φ(u) = w(e^u) on u ∈ [−5, log t_max]
    let m = 2000;
    let (lo, hi) = (-5.0, u_top);
    let h = (hi - lo) / m as f64;
    let phis: Vec<f64> = (0..=m).map(|i| w.phi(lo + i as f64 * h)).collect();
    let scale = phis.iter().fold(1.0f64, |a, b| a.max(b.abs()));
    let mut worst = (0.0, lo);
    for i in 1..m {
        let dd = phis[i + 1] - 2.0 * phis[i] + phis[i - 1];
        if dd < worst.0 {
            worst = (dd, lo + i as f64 * h);
        }
    }
    let delta_ok = worst.0 >= -1e-12 * scale;
    let delta = ConditionCheck::new(
        delta_ok,
        vec![("min_second_difference", worst.0)],
        Some(vec![worst.1]),
        "convexity of φ(u) = w(e^u) by second differences",
    );

    Ok(ConditionReport { sigma, alpha, beta_sigma, beta_star: star, gamma, delta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn weight_values() {
        let z = WeightSpec::zero(1.0, 1.0).unwrap();
        assert_eq!(z.eval(7.0).unwrap(), 0.0);
        let w = WeightSpec::log_power(0.25, 1.0, 1.0).unwrap();
        assert!((w.eval(std::f64::consts::E - 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((w.eval(std::f64::consts::E.powi(2) - 1.0).unwrap() - 4.0).abs() < 1e-14);
        assert!(w.eval(-1.0).is_err());
        assert!(WeightSpec::log_power(0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn phi_is_stable_for_large_arguments() {
        let w = WeightSpec::log_power(0.25, 1.0, 1.0).unwrap();
        assert!((w.phi(1000.0) - 1000f64.powi(2)).abs() < 1e-6);
        for u in [5.0, 20.0, 40.0] {
            let rel = (w.phi(u) - u * u) / (u * u);
            assert!(rel >= 0.0 && rel < 3.0 * (-u).exp() / u + 1e-15);
        }
    }

    #[test]
    fn log_power_satisfies_conditions() {
        let w = WeightSpec::log_power(0.25, 1.0, 1.0).unwrap();
        let r = check_weight_conditions(&w, 2.0, SampleRange::default()).unwrap();
        assert!(r.alpha.holds, "{:?}", r.alpha);
        assert!(r.beta_sigma.holds, "{:?}", r.beta_sigma);
        assert!(r.beta_star.holds, "{:?}", r.beta_star);
        assert!(r.gamma.holds, "{:?}", r.gamma);
        assert!(r.delta.holds, "{:?}", r.delta);
    }

    #[test]
    fn quadratic_weight_fails_beta() {
        let t: Vec<f64> = (0..=400).map(|i| 10f64.powf(-3.0 + 10.0 * i as f64 / 400.0)).collect();
        let v: Vec<f64> = t.iter().map(|x| x * x).collect();
        let w = WeightSpec::tabulated(t, v, 1.0, 1.0).unwrap();
        let r = check_weight_conditions(&w, 2.0, SampleRange::default()).unwrap();
        assert!(!r.beta_sigma.holds);
        assert!(r.beta_sigma.counterexample.is_some());
        assert!(r.alpha.holds);
    }

    #[test]
    fn zero_weight_fails_gamma() {
        let r = check_weight_conditions(&WeightSpec::zero(1.0, 1.0).unwrap(), 2.0, SampleRange::default()).unwrap();
        assert!(!r.gamma.holds);
        assert!(r.gamma.counterexample.is_some());
    }

    #[test]
    fn short_grids_are_rejected() {
        let w = WeightSpec::log_power(0.25, 1.0, 1.0).unwrap();
        let e = check_weight_conditions(&w, 2.0, SampleRange { t_max: 1e4, points: 50 });
        assert!(matches!(e, Err(Error::Coverage(_))));
        let tab = WeightSpec::tabulated(vec![0.0, 1.0, 10.0], vec![0.0, 1.0, 2.0], 1.0, 1.0).unwrap();
        assert!(matches!(check_weight_conditions(&tab, 2.0, SampleRange::default()), Err(Error::Coverage(_))));
    }

    #[test]
    fn conjugate_closed_forms() {
        let q = young_conjugate(|u| u * u / 2.0, 3.0, 50.0).unwrap();
        assert!((q.value - 4.5).abs() < 1e-9 * 4.5);
        let p = 3.0;
        let qq = p / (p - 1.0);
        let c = young_conjugate(|u: f64| u.powf(p) / p, 2.0, 50.0).unwrap();
        let want = 2f64.powf(qq) / qq;
        assert!((c.value - want).abs() < 1e-9 * want);
        assert_eq!(young_conjugate(|u| u * u, 0.0, 10.0).unwrap().value, 0.0);
    }

    #[test]
    fn truncation_is_flagged() {
        let c = young_conjugate(|u| u, 2.0, 10.0).unwrap();
        assert!(c.truncated);
        assert!((c.value - 10.0).abs() < 1e-9);
    }

    #[test]
    fn zeta_conjugate_matches_exponential_closed_form() {
        let z = WeightSpec::zero(1.0, 1.0).unwrap();
        let g = AuxWeight::zeta(0.5, 1.0, &z).unwrap();
        let a = 0.25 * (1.0f64 / 3.0).sqrt();
        assert!((g.coef - a).abs() < 1e-16);
        let got = g.conjugate(2.0).unwrap().value;
        let want = exp2_conjugate(a, 2.0);
        assert!((got - want).abs() < 1e-9 * want.abs());
    }

    #[test]
    fn boundary_parameters_drop_the_exponential() {
        let w = WeightSpec::log_power(0.25, 1.0, 1.0).unwrap();
        assert_eq!(AuxWeight::psi(2.0, 1.0, &w).unwrap().coef, 0.0);
        assert_eq!(AuxWeight::zeta(1.0, 1.0, &w).unwrap().coef, 0.0);
        assert!(AuxWeight::psi(2.5, 1.0, &w).is_err());
        assert!(AuxWeight::big_psi(1.5, 1.0, &w).is_err());
        let v = aux_weight_functions(2.5, 1.0, 0.5, 1.0, 0.3, 4.0, &w).unwrap();
        assert!(v.psi.is_none() && v.zeta.is_some() && v.big_psi.is_none());
    }

    #[test]
    fn eq1_values() {
        assert!((lambda_s(0.25) - 1.0 / 16.0).abs() < 1e-16);
        let q = eq1_quantities(0.25, 1.0, 1e6).unwrap();
        assert!((q.p - 1.0).abs() < 1e-3);
        // log(1+√2x) = 2
        let x = (std::f64::consts::E.powi(2) - 1.0) / 2f64.sqrt();
        let q = eq1_quantities(0.25, 1.0, x).unwrap();
        assert!((q.log_plus - 2.0).abs() < 1e-14);
        assert!((q.l - 0.5 * 0.5 * 4.0).abs() < 1e-13);
        let xm = eq1_min_x(0.25, 1.0);
        assert!(xm > 0.0);
        match eq1_quantities(0.25, 1.0, 0.5 * xm) {
            Err(Error::Domain(m)) => assert!(m.contains("need |x| >")),
            other => panic!("{other:?}"),
        }
        assert!(eq1_quantities(0.25, 1.0, 1.01 * xm).is_ok());
    }

    #[test]
    fn conjugate_is_convex_non_decreasing_with_derivative_at_the_maximizer() {
        let w = WeightSpec::log_power(0.25, 1.0, 1.0).unwrap();
        let vs: Vec<f64> = (0..60).map(|i| 0.5 + i as f64 * 0.5).collect();
        let c: Vec<Conjugate> = vs.iter().map(|&v| w.phi_conjugate(v).unwrap()).collect();
        for i in 1..c.len() {
            assert!(c[i].value >= c[i - 1].value - 1e-9);
        }
        for i in 1..c.len() - 1 {
            assert!(c[i + 1].value - 2.0 * c[i].value + c[i - 1].value >= -1e-7);
        }
        // derivative equals the maximizer, i.e. the inverse of φ′
        for &v in &[2.0, 5.0, 11.0] {
            let h = 1e-4;
            let d = (w.phi_conjugate(v + h).unwrap().value - w.phi_conjugate(v - h).unwrap().value) / (2.0 * h);
            let u = w.phi_conjugate(v).unwrap().argmax;
            let dphi = (w.phi(u + 1e-6) - w.phi(u - 1e-6)) / 2e-6;
            assert!((d - u).abs() < 1e-4 * u.max(1.0));
            assert!((dphi - v).abs() < 1e-4 * v);
        }
    }

    #[test]
    fn phi_approaches_pure_power() {
        let w = WeightSpec::log_power(0.25, 1.0, 1.0).unwrap();
        let rel = |t: f64| (w.phi(t) - t * t).abs() / (t * t);
        assert!(rel(30.0) < rel(10.0) && rel(10.0) < rel(3.0));
        assert!(rel(30.0) < 1e-13);
    }

    #[test]
    fn csv_loading() {
        let text = "t,w\n0,0\n1,0.5\n2,2\n";
        let w = WeightSpec::from_csv(text.as_bytes(), 1.0, 1.0).unwrap();
        assert!((w.w(1.5) - 1.25).abs() < 1e-15);
        assert!(WeightSpec::from_csv("0,0\n2,1\n1,3\n".as_bytes(), 1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn biconjugation(v0 in 0.2f64..6.0) {
            // φ(u) = u²/2 + u on [0, ∞): φ** = φ on [0, 10]
            let phi = |u: f64| 0.5 * u * u + u;
            let star = |v: f64| young_conjugate(phi, v, 200.0).unwrap().value;
            let u = v0;
            let back = young_conjugate(|v| star(v), u, 60.0).unwrap().value;
            prop_assert!((back - phi(u)).abs() < 1e-6 * phi(u).max(1.0));
        }

        #[test]
        fn weight_is_non_decreasing(s in 0.05f64..0.45, a in 0.0f64..1e4, b in 0.0f64..1e4) {
            let w = WeightSpec::log_power(s, 1.0, 1.0).unwrap();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(w.w(lo) <= w.w(hi));
        }
    }
}
