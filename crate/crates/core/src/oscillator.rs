//! Spectral propagation for `i∂_t u = (−Δ + |x|²)u`-type evolution,
//! `u(t) = Σ_α e^{i(2|α|+d)t}⟨u₀, h_α⟩h_α`, and decay certificates for the
//! evolved solutions.

use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::bounds::{self, CertReport, GridSpec};
use crate::error::{domain, Error, Result};
use crate::logscaled::LogComplex;
use crate::spectra::{self, CoeffVector, TestFunction, MAX_DEGREE};

/// Relative truncation tolerance for [`solution_eval`].
pub const TAIL_REL_TOL: f64 = 1e-8;

/// Multiplies every coefficient by `e^{i(2|α|+d)t}`.
pub fn evolve_coeffs(c: &CoeffVector, t: f64) -> CoeffVector {
    let d = c.dim();
    let mut out = c.clone();
    if t != 0.0 {
        out.rotate(|alpha| {
            let e = (2 * alpha.iter().sum::<usize>() + d) as f64;
            (e * t).rem_euclid(TAU)
        });
    }
    out
}

/// `u(x, t)` together with the truncation tail bound (log domain).
#[derive(Debug, Clone, Copy)]
pub struct SolutionValue {
    pub value: LogComplex,
    pub tail_log: Option<f64>,
}

/// Precomputed initial coefficients, reused across times and points.
#[derive(Debug, Clone)]
pub struct Solution {
    coeffs: CoeffVector,
}

impl Solution {
    pub fn new(u0: &TestFunction, n: usize) -> Result<Self> {
        if n > MAX_DEGREE {
            return domain(format!("truncation N = {n} exceeds {MAX_DEGREE}"));
        }
        Ok(Solution { coeffs: spectra::hermite_coeffs(u0, n)? })
    }

    pub fn dim(&self) -> usize {
        self.coeffs.dim()
    }

    pub fn initial_coeffs(&self) -> &CoeffVector {
        &self.coeffs
    }

    /// Coefficients of `u(·, t)`.
    pub fn coeffs_at(&self, t: f64) -> CoeffVector {
        evolve_coeffs(&self.coeffs, t)
    }

    /// `u(·, t)` as a finite Hermite series.
    pub fn at(&self, t: f64) -> TestFunction {
        TestFunction::HermiteSeries(self.coeffs_at(t))
    }

    pub fn eval_log(&self, t: f64, x: &[f64]) -> Result<SolutionValue> {
        if !t.is_finite() {
            return domain(format!("non-finite time {t}"));
        }
        let syn = spectra::synthesize(&self.coeffs_at(t), x)?;
        if let Some(tail) = syn.tail_log {
            let v = syn.value.log_abs();
            // an exactly vanishing value only needs a negligible absolute tail
            let limit = if v == f64::NEG_INFINITY { -690.0 } else { v + TAIL_REL_TOL.ln() };
            if tail > limit {
                return Err(Error::Accuracy {
                    what: format!(
                        "truncation tail at x = {x:?}, t = {t} exceeds 1e-8·|u|; increase N beyond {}",
                        self.coeffs.max_degree()
                    ),
                    estimate: (tail - v).exp(),
                });
            }
        }
        Ok(SolutionValue { value: syn.value, tail_log: syn.tail_log })
    }
}

/// `u(x, t)` for initial data `u₀`, truncated at total degree `n`.
pub fn solution_eval(u0: &TestFunction, t: f64, x: &[f64], n: usize) -> Result<SolutionValue> {
    Solution::new(u0, n)?.eval_log(t, x)
}

/// Initial-data class and the envelope certified against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecaySpec {
    /// Log-power weighted class with parameters `(s, λ, ε)`; the envelope is
    /// the one-dimensional estimate for `d = 1` and its product form for `d ≥ 2`.
    LogWeight { s: f64, lambda: f64, eps: f64 },
    /// Gaussian class `E(tanh 2γ)` with envelope `|x|^{(d−1)/(2d)}e^{−tanh(γ/d)|x|²/2}`.
    Gaussian { gamma: f64 },
}

impl DecaySpec {
    /// Theorem label including the selected branch.
    pub fn label(&self, d: usize) -> String {
        match *self {
            DecaySpec::LogWeight { s, lambda, .. } => {
                let scale = if d == 1 { 1.0 } else { (2.0 * d as f64).powf(2.0 * s / (1.0 - 2.0 * s)) };
                let branch = if scale * lambda < crate::weights::lambda_s(s) { 1 } else { 2 };
                format!("{}({branch})", if d == 1 { "1.3" } else { "1.4" })
            }
            DecaySpec::Gaussian { .. } => "3.3".into(),
        }
    }

    /// The canonical initial datum of the class: the coefficient rule with
    /// `y = y(λ)`, or the Gaussian `e^{−tanh(2γ)|x|²/2}`.
    pub fn default_initial(&self, d: usize) -> Result<TestFunction> {
        match *self {
            DecaySpec::LogWeight { s, lambda, .. } => TestFunction::coeff_rule(d, s, bounds::y_of_lambda(s, lambda)),
            DecaySpec::Gaussian { gamma } => {
                if !(gamma > 0.0) {
                    return domain(format!("need γ > 0, got {gamma}"));
                }
                Ok(TestFunction::gaussian(d, (2.0 * gamma).tanh()))
            }
        }
    }

    /// Log envelope at `x`.
    pub fn envelope(&self, x: &[f64]) -> Result<f64> {
        match *self {
            DecaySpec::LogWeight { s, lambda, eps } => bounds::thm14_envelope(s, lambda, eps, x, None),
            DecaySpec::Gaussian { gamma } => Ok(bounds::thm33_envelope(gamma, x)),
        }
    }
}

/// Spatial sampling for decay certificates: points `r·ω` for radii `r` on a
/// one-dimensional grid and fixed directions `ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub radii: GridSpec,
    pub directions: Vec<Vec<f64>>,
}

impl RadialGrid {
    /// Positive half-line for `d = 1`; `n_dir` equally spaced directions in
    /// the first quadrant's closure otherwise (coordinate axes excluded so no
    /// component vanishes).
    pub fn standard(d: usize, radii: GridSpec, n_dir: usize) -> Result<Self> {
        if d == 0 || n_dir == 0 {
            return domain("need d ≥ 1 and at least one direction");
        }
        let directions = if d == 1 {
            vec![vec![1.0]]
        } else {
            (0..n_dir)
                .map(|j| {
                    let th = std::f64::consts::FRAC_PI_2 * (j as f64 + 0.5) / n_dir as f64;
                    let mut v = vec![0.0; d];
                    v[0] = th.cos();
                    v[1] = th.sin();
                    v
                })
                .collect()
        };
        Ok(RadialGrid { radii, directions })
    }

    pub fn point(&self, r: f64, dir: usize) -> Vec<f64> {
        self.directions[dir].iter().map(|w| r * w).collect()
    }
}

/// Certifies `|u(x, t)| ≤ C·envelope(x)` jointly over `times × grid`.
/// Grid points are `(t, r, direction index)`; rows report `log|u|` and the
/// log envelope.
pub fn decay_certificate(
    spec: DecaySpec,
    u0: &TestFunction,
    times: &[f64],
    grid: &RadialGrid,
    n: usize,
) -> Result<CertReport> {
    if times.is_empty() {
        return domain("empty time list");
    }
    if times.iter().any(|t| !t.is_finite()) {
        return domain("non-finite time");
    }
    let d = u0.dim();
    if grid.directions.iter().any(|w| w.len() != d) {
        return domain(format!("grid directions must have dimension {d}"));
    }
    if let DecaySpec::LogWeight { s, lambda, eps } = spec {
        if !(s > 0.0 && s < 0.5) || !(lambda > 0.0) || !(0.0..1.0).contains(&eps) {
            return domain(format!("need 0 < s < 1/2, λ > 0, 0 ≤ ε < 1 (got s = {s}, λ = {lambda}, ε = {eps})"));
        }
    }
    let sol = Solution::new(u0, n)?;
    // evolved coefficient vectors are shared across the spatial grid
    let evolved: Vec<CoeffVector> = times.par_iter().map(|&t| sol.coeffs_at(t)).collect();
    let full = GridSpec::Product(vec![
        GridSpec::List((0..times.len()).map(|i| i as f64).collect()),
        grid.radii.clone(),
        GridSpec::List((0..grid.directions.len()).map(|i| i as f64).collect()),
    ]);
    let lhs = |p: &[f64]| -> Result<f64> {
        let ti = p[0] as usize;
        let x = grid.point(p[1], p[2] as usize);
        let syn = spectra::synthesize(&evolved[ti], &x)?;
        let v = syn.value.log_abs();
        if let Some(tail) = syn.tail_log {
            if tail > v + TAIL_REL_TOL.ln() && tail > -690.0 {
                return Err(Error::Accuracy {
                    what: format!("truncation tail at x = {x:?}; increase N beyond {n}"),
                    estimate: (tail - v).exp(),
                });
            }
        }
        Ok(v)
    };
    let rhs = |p: &[f64]| spec.envelope(&grid.point(p[1], p[2] as usize));
    let mut rep = bounds::certify(&spec.label(d), &full, lhs, rhs)?;
    // report actual times instead of their indices
    for row in &mut rep.rows {
        row.point[0] = times[row.point[0] as usize];
    }
    for f in &mut rep.failures {
        f.0[0] = times[f.0[0] as usize];
    }
    if !rep.argmax.is_empty() {
        rep.argmax[0] = times[rep.argmax[0] as usize];
    }
    let mut params = vec![("d", d as f64), ("N", n as f64)];
    match spec {
        DecaySpec::LogWeight { s, lambda, eps } => {
            params.extend([("s", s), ("lambda", lambda), ("eps", eps), ("y", bounds::y_of_lambda(s, lambda))])
        }
        DecaySpec::Gaussian { gamma } => params.push(("gamma", gamma)),
    }
    Ok(rep.with_params(&params).with_note("grid points are (t, r, direction index)"))
}
