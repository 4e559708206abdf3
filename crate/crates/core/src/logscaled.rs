//! Sign / log-magnitude arithmetic for quantities that leave the range of `f64`.

use num_complex::Complex64;
use std::cmp::Ordering;
use std::ops::{Div, Mul, Neg};

/// A real number stored as `sign * exp(log_mag)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogScaled {
    pub sign: i8,
    pub log_mag: f64,
}

impl LogScaled {
    pub const ZERO: LogScaled = LogScaled { sign: 0, log_mag: f64::NEG_INFINITY };
    pub const ONE: LogScaled = LogScaled { sign: 1, log_mag: 0.0 };

    /// Builds a value, collapsing every representation of zero onto `ZERO`.
    pub fn new(sign: i8, log_mag: f64) -> Self {
        if sign == 0 || log_mag == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogScaled { sign: sign.signum(), log_mag }
        }
    }

    /// Positive value `exp(log_mag)`.
    pub fn from_log(log_mag: f64) -> Self {
        Self::new(1, log_mag)
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogScaled { sign: if x > 0.0 { 1 } else { -1 }, log_mag: x.abs().ln() }
        }
    }

    /// Plain value; underflows to ±0 and overflows to ±inf.
    pub fn to_f64(self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * self.log_mag.exp()
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn abs(self) -> Self {
        Self::new(self.sign.abs(), self.log_mag)
    }

    pub fn recip(self) -> Self {
        if self.sign == 0 {
            LogScaled { sign: 1, log_mag: f64::INFINITY }
        } else {
            LogScaled { sign: self.sign, log_mag: -self.log_mag }
        }
    }

    /// `|self|^p`; the sign is dropped.
    pub fn abs_pow(self, p: f64) -> Self {
        if self.sign == 0 {
            if p > 0.0 {
                Self::ZERO
            } else {
                Self::ONE
            }
        } else {
            Self::from_log(p * self.log_mag)
        }
    }

    /// Multiplies by `exp(t)`.
    pub fn scale_exp(self, t: f64) -> Self {
        Self::new(self.sign, self.log_mag + t)
    }

    /// Signed sum computed without leaving the log domain.
    pub fn add(self, other: Self) -> Self {
        if self.sign == 0 {
            return other;
        }
        if other.sign == 0 {
            return self;
        }
        let (big, small) = if self.log_mag >= other.log_mag { (self, other) } else { (other, self) };
        if big.log_mag == f64::INFINITY {
            return big;
        }
        let d = small.log_mag - big.log_mag;
        if big.sign == small.sign {
            LogScaled { sign: big.sign, log_mag: big.log_mag + d.exp().ln_1p() }
        } else if d == 0.0 {
            Self::ZERO
        } else {
            LogScaled { sign: big.sign, log_mag: big.log_mag + (-d.exp_m1()).ln() }
        }
    }

    pub fn sub(self, other: Self) -> Self {
        self.add(-other)
    }

    /// Total order on the represented real values.
    pub fn cmp_value(self, other: Self) -> Ordering {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => match self.sign {
                0 => Ordering::Equal,
                1 => self.log_mag.total_cmp(&other.log_mag),
                _ => other.log_mag.total_cmp(&self.log_mag),
            },
            o => o,
        }
    }
}

impl Mul for LogScaled {
    type Output = LogScaled;
    fn mul(self, rhs: Self) -> Self {
        LogScaled::new(self.sign * rhs.sign, self.log_mag + rhs.log_mag)
    }
}

impl Div for LogScaled {
    type Output = LogScaled;
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl Neg for LogScaled {
    type Output = LogScaled;
    fn neg(self) -> Self {
        LogScaled { sign: -self.sign, log_mag: self.log_mag }
    }
}

/// Neumaier-compensated accumulator of signed log-scaled terms.
///
/// Terms are held relative to a running shift (the largest magnitude seen so
/// far) so that neither the partial sums nor the terms under/overflow.
#[derive(Debug, Clone, Copy)]
pub struct LogSum {
    shift: f64,
    sum: f64,
    comp: f64,
}

impl Default for LogSum {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSum {
    pub fn new() -> Self {
        LogSum { shift: f64::NEG_INFINITY, sum: 0.0, comp: 0.0 }
    }

    pub fn push(&mut self, term: LogScaled) {
        if term.sign == 0 {
            return;
        }
        if term.log_mag > self.shift {
            let scale = (self.shift - term.log_mag).exp();
            self.sum *= scale;
            self.comp *= scale;
            self.shift = term.log_mag;
        }
        let v = f64::from(term.sign) * (term.log_mag - self.shift).exp();
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    /// Largest term magnitude pushed so far (log domain).
    pub fn max_log(&self) -> f64 {
        self.shift
    }

    pub fn value(&self) -> LogScaled {
        LogScaled::from_f64(self.sum + self.comp).scale_exp(if self.shift.is_finite() { self.shift } else { 0.0 })
    }
}

/// Complex number with independently log-scaled real and imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogComplex {
    pub re: LogScaled,
    pub im: LogScaled,
}

impl LogComplex {
    pub const ZERO: LogComplex = LogComplex { re: LogScaled::ZERO, im: LogScaled::ZERO };

    pub fn new(re: LogScaled, im: LogScaled) -> Self {
        LogComplex { re, im }
    }

    pub fn from_c64(z: Complex64) -> Self {
        LogComplex { re: LogScaled::from_f64(z.re), im: LogScaled::from_f64(z.im) }
    }

    /// `exp(log_abs + i arg)`.
    pub fn from_polar(log_abs: f64, arg: f64) -> Self {
        if log_abs == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        let (s, c) = arg.sin_cos();
        LogComplex {
            re: LogScaled::from_f64(c).scale_exp(log_abs),
            im: LogScaled::from_f64(s).scale_exp(log_abs),
        }
    }

    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    /// Logarithm of the modulus.
    pub fn log_abs(self) -> f64 {
        let (a, b) = (self.re.log_mag, self.im.log_mag);
        let m = a.max(b);
        if m == f64::NEG_INFINITY {
            return m;
        }
        let ra = if self.re.sign == 0 { 0.0 } else { (a - m).exp() };
        let rb = if self.im.sign == 0 { 0.0 } else { (b - m).exp() };
        m + ra.hypot(rb).ln()
    }

    pub fn abs(self) -> LogScaled {
        LogScaled::from_log(self.log_abs())
    }

    pub fn arg(self) -> f64 {
        let m = self.re.log_mag.max(self.im.log_mag);
        if m == f64::NEG_INFINITY {
            return 0.0;
        }
        let re = f64::from(self.re.sign) * (self.re.log_mag - m).exp();
        let im = f64::from(self.im.sign) * (self.im.log_mag - m).exp();
        im.atan2(re)
    }

    pub fn scale(self, k: LogScaled) -> Self {
        LogComplex { re: self.re * k, im: self.im * k }
    }

    pub fn mul(self, o: Self) -> Self {
        LogComplex {
            re: (self.re * o.re).sub(self.im * o.im),
            im: (self.re * o.im).add(self.im * o.re),
        }
    }

    pub fn add(self, o: Self) -> Self {
        LogComplex { re: self.re.add(o.re), im: self.im.add(o.im) }
    }
}

/// Accumulator for log-scaled complex sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogComplexSum {
    re: LogSum,
    im: LogSum,
}

impl LogComplexSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, z: LogComplex) {
        self.re.push(z.re);
        self.im.push(z.im);
    }

    pub fn value(&self) -> LogComplex {
        LogComplex { re: self.re.value(), im: self.im.value() }
    }
}

/// `ln(exp(a) + exp(b))` for plain log magnitudes.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}
