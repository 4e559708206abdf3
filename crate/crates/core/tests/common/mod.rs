//! Independent oracles for integration tests: double-double recurrences with
//! an explicit exponent counter, so values far outside the f64 range stay exact
//! to roughly 30 digits.

#![allow(dead_code)]

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DD {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DD {
    pub const ZERO: DD = DD { hi: 0.0, lo: 0.0 };

    pub fn from(x: f64) -> DD {
        DD { hi: x, lo: 0.0 }
    }

    pub fn add(self, o: DD) -> DD {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DD { hi, lo }
    }

    pub fn neg(self) -> DD {
        DD { hi: -self.hi, lo: -self.lo }
    }

    pub fn sub(self, o: DD) -> DD {
        self.add(o.neg())
    }

    pub fn mul(self, o: DD) -> DD {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DD { hi, lo }
    }

    pub fn div(self, o: DD) -> DD {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(DD::from(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(DD::from(q2)));
        let q3 = r.hi / o.hi;
        DD::from(q1).add(DD::from(q2)).add(DD::from(q3))
    }

    pub fn sqrt(self) -> DD {
        if self.hi <= 0.0 {
            return DD::ZERO;
        }
        let s = DD::from(self.hi.sqrt());
        // one Newton step doubles the ~53 correct bits
        s.add(self.sub(s.mul(s)).div(DD::from(2.0).mul(s)))
    }

    pub fn scale(self, k: f64) -> DD {
        DD { hi: self.hi * k, lo: self.lo * k }
    }

    /// `(sign, ln|x|)`.
    pub fn sign_log(self) -> (i8, f64) {
        if self.hi == 0.0 {
            return (0, f64::NEG_INFINITY);
        }
        let sign = if self.hi > 0.0 { 1 } else { -1 };
        (sign, self.hi.abs().ln() + (self.lo / self.hi).ln_1p())
    }
}

/// Keeps `|a|, |b|` near one by shifting a shared power of two into `log2`.
fn renormalize(a: &mut DD, b: &mut DD, log2: &mut i64) {
    let m = a.hi.abs().max(b.hi.abs());
    if m > 1e100 || (m < 1e-100 && m > 0.0) {
        let e = m.log2().floor() as i32;
        let k = 2f64.powi(-e);
        *a = a.scale(k);
        *b = b.scale(k);
        *log2 += e as i64;
    }
}

/// `(sign, ln|h_n(x)|)` for the L²-normalized Hermite function, from the
/// orthonormal recurrence on `h_n/h_0` in double-double arithmetic.
pub fn hermite_oracle(n: usize, x: f64) -> (i8, f64) {
    let xd = DD::from(x);
    let mut prev = DD::ZERO;
    let mut cur = DD::from(1.0);
    let mut log2 = 0i64;
    for k in 0..n {
        let kf = k as f64;
        let a = DD::from(2.0).div(DD::from(kf + 1.0)).sqrt();
        let b = DD::from(kf).div(DD::from(kf + 1.0)).sqrt();
        let next = a.mul(xd).mul(cur).sub(b.mul(prev));
        prev = cur;
        cur = next;
        renormalize(&mut cur, &mut prev, &mut log2);
    }
    let (s, l) = cur.sign_log();
    (s, l + log2 as f64 * std::f64::consts::LN_2 - x * x / 2.0 - 0.25 * std::f64::consts::PI.ln())
}

/// `(sign, ln|L_k^ν(t)|)` by the three-term recurrence in double-double.
pub fn laguerre_oracle(k: usize, nu: f64, t: f64) -> (i8, f64) {
    let (nud, td) = (DD::from(nu), DD::from(t));
    let mut prev = DD::ZERO;
    let mut cur = DD::from(1.0);
    let mut log2 = 0i64;
    for n in 0..k {
        let nf = DD::from(n as f64);
        // (n+1) L_{n+1} = (2n+1+ν−t) L_n − (n+ν) L_{n−1}
        let a = nf.scale(2.0).add(DD::from(1.0)).add(nud).sub(td);
        let next = a.mul(cur).sub(nf.add(nud).mul(prev)).div(DD::from(n as f64 + 1.0));
        prev = cur;
        cur = next;
        renormalize(&mut cur, &mut prev, &mut log2);
    }
    let (s, l) = cur.sign_log();
    (s, l + log2 as f64 * std::f64::consts::LN_2)
}

/// `|a − b|` for two `(sign, log)` values measured in units of `e^{scale}`.
pub fn scaled_diff(a: (i8, f64), b: (i8, f64), scale: f64) -> f64 {
    let v = |p: (i8, f64)| p.0 as f64 * (p.1 - scale).exp();
    (v(a) - v(b)).abs()
}
