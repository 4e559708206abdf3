use std::f64::consts::PI;

use hermite_hardy::bounds::{self, GridSpec};
use hermite_hardy::oscillator::{evolve_coeffs, Solution};
use hermite_hardy::report::fmt_f64;
use hermite_hardy::spectra::{self, CoeffVector, TestFunction};
use hermite_hardy::weights::WeightSpec;
use hermite_hardy::{specfun, transforms, LogScaled};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn coeffs(dim: usize, deg: usize, vals: &[(f64, f64)]) -> CoeffVector {
    let mut cv = CoeffVector::zeros(dim, deg).unwrap();
    for (i, &(re, im)) in vals.iter().enumerate().take(cv.len()) {
        let alpha = cv.alpha_at(i);
        cv.set(&alpha, C64::new(re, im)).unwrap();
    }
    cv
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evolution_is_unitary_on_coefficients(
        vals in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..21),
        t in -20.0f64..20.0,
        dim in 1usize..3,
    ) {
        let cv = coeffs(dim, 5, &vals);
        let ev = evolve_coeffs(&cv, t);
        prop_assert!((ev.norm_sq() - cv.norm_sq()).abs() <= 1e-13 * cv.norm_sq().max(1e-300));
        // period 2π; a shift by π multiplies by (−1)^d
        let sign = if dim % 2 == 0 { 1.0 } else { -1.0 };
        let back = evolve_coeffs(&cv, t + 2.0 * PI);
        let anti = evolve_coeffs(&cv, t + PI);
        for i in 0..cv.len() {
            let alpha = cv.alpha_at(i);
            prop_assert!((back.get(&alpha) - ev.get(&alpha)).norm() < 1e-12);
            prop_assert!((anti.get(&alpha) - sign * ev.get(&alpha)).norm() < 1e-12);
        }
    }

    #[test]
    fn solutions_are_antiperiodic(a in 0.5f64..2.0, p1 in -1.0f64..1.0, t in 0.0f64..6.3, x in -4.0f64..4.0) {
        let u0 = TestFunction::gauss_poly_1d(a, &[1.0, p1, 0.2]).unwrap();
        let sol = Solution::new(&u0, 160).unwrap();
        let v = sol.eval_log(t, &[x]).unwrap().value.to_c64();
        let w = sol.eval_log(t + PI, &[x]).unwrap().value.to_c64();
        prop_assert!((v + w).norm() < 1e-10);
    }

    #[test]
    fn hermite_parity(n in 0usize..300, x in 0.0f64..40.0) {
        let a = specfun::hermite_log(n, x).unwrap();
        let b = specfun::hermite_log(n, -x).unwrap();
        prop_assert_eq!(a.log_mag, b.log_mag);
        let parity: i8 = if n % 2 == 0 { 1 } else { -1 };
        prop_assert!(a.sign == 0 || b.sign == a.sign * parity);
    }

    #[test]
    fn hermite_functions_are_bounded(n in 0usize..2000, x in -80.0f64..80.0) {
        // |h_n(x)| ≤ π^{−1/4}
        let v = specfun::hermite_log(n, x).unwrap();
        prop_assert!(v.log_mag <= -0.25 * PI.ln() + 1e-12);
    }

    #[test]
    fn fenchel_young_inequality(s in 0.05f64..0.45, u in 0.0f64..8.0, v in 0.0f64..20.0) {
        let w = WeightSpec::log_power(s, 1.0, 1.0).unwrap();
        let conj = w.phi_conjugate(v).unwrap();
        prop_assert!(w.phi(u) + conj.value >= u * v - 1e-9 * (1.0 + (u * v).abs()));
    }

    #[test]
    fn weighted_sum_decreases_in_y(kappa in 0.5f64..2.0, beta in 0.0f64..1.0, y in 0.3f64..2.0, dy in 0.01f64..1.0, x in 2.0f64..20.0) {
        let a = bounds::weighted_hermite_sum(kappa, beta, 0.5, y, x).unwrap();
        let b = bounds::weighted_hermite_sum(kappa, beta, 0.5, y + dy, x).unwrap();
        prop_assert!(b.log_mag <= a.log_mag + 1e-12);
    }

    #[test]
    fn certificate_recovers_a_constant_offset(c in -30.0f64..30.0, slope in 0.1f64..3.0) {
        let grid = GridSpec::LogSpaced { lo: 1.0, hi: 50.0, points: 12 };
        let rep = bounds::certify("t", &grid, |p| Ok(c - slope * p[0]), |p| Ok(-slope * p[0])).unwrap();
        prop_assert!((rep.log_c_fit - c).abs() < 1e-9);
        prop_assert!(rep.pass && rep.stable && rep.lower_stable);
    }

    #[test]
    fn number_format_round_trips(x in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        let back: f64 = fmt_f64(x).parse().unwrap();
        prop_assert_eq!(back.to_bits(), x.to_bits());
    }

    #[test]
    fn log_scaled_addition_matches_f64(a in -1e6f64..1e6, b in -1e6f64..1e6) {
        let s = LogScaled::from_f64(a).add(LogScaled::from_f64(b)).to_f64();
        prop_assert!((s - (a + b)).abs() <= 1e-12 * (a.abs() + b.abs()).max(1e-300));
    }

    #[test]
    fn coefficient_csv_round_trips(vals in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..15), dim in 1usize..4) {
        let cv = coeffs(dim, 4, &vals);
        let mut buf = Vec::new();
        cv.to_csv(&mut buf).unwrap();
        let back = CoeffVector::from_csv(buf.as_slice()).unwrap();
        for i in 0..cv.len() {
            let alpha = cv.alpha_at(i);
            prop_assert!((back.get(&alpha) - cv.get(&alpha)).norm() <= 1e-15 * cv.get(&alpha).norm());
        }
    }

    #[test]
    fn parseval_for_gaussians(a in 0.3f64..3.0) {
        let f = TestFunction::gaussian(1, a);
        let cv = spectra::hermite_coeffs(&f, 200).unwrap();
        let norm = f.norm_sq().unwrap();
        prop_assert!((cv.norm_sq() - norm).abs() < 1e-10 * norm);
    }

    #[test]
    fn stft_is_bounded_by_norms(a in 0.5f64..2.0, x in -5.0f64..5.0, y in -5.0f64..5.0) {
        let f = TestFunction::gauss_poly_1d(a, &[1.0, 0.5, -0.2]).unwrap();
        let g = TestFunction::gaussian(1, 1.0);
        let bound = (f.norm_sq().unwrap() * g.norm_sq().unwrap()).sqrt() / (2.0 * PI).sqrt();
        prop_assert!(transforms::stft_eval(&f, &g, &[x], &[y]).unwrap().norm() <= bound * (1.0 + 1e-12));
    }
}
